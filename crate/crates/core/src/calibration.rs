//! Shrinking-window calibration.
//!
//! Each anchor day `t2` is fitted on a family of windows `[t1, t2]` whose
//! length shrinks from `initial_window_days` to `min_window_days` in steps
//! of `shrink_step_days`. Every window gets a multi-start simplex search over
//! `(tc, m, omega)` with the linear parameters profiled out, and the best
//! start is kept only if it satisfies the stylized-feature constraints.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DesignWindow, LinearSolver, LpplParams, MIN_WINDOW_SAMPLES};
use crate::optimize::{self, SimplexOptions};
use crate::timeseries::LogSeries;

/// Every accepted fit has `tc > t2 + TC_MARGIN_DAYS`.
pub const TC_MARGIN_DAYS: f64 = 0.01;

const FLAT_TOL: f64 = 1e-12;

/// SSE values closer than this fraction of the window's total sum of
/// squares are indistinguishable. Windows with fewer samples than model
/// parameters reach this floor along a whole family of exact fits.
const SSE_FLOOR: f64 = 1e-18;

/// Shape of the `tc` search interval around the window end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TcBoundForm {
    /// `t2 -/+ window_fraction * (t2 - t1)`, capped by the absolute limits.
    WindowFraction,
    /// `(t2 -/+ window_fraction) / (t2 - t1)` taken literally. This collapses
    /// to roughly 1 for any realistic window and so admits no `tc` after
    /// `t2`; it exists to compare against the default rule.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TcBoundRule {
    pub form: TcBoundForm,
    pub lookback_cap_days: f64,
    pub horizon_cap_days: f64,
    pub window_fraction: f64,
}

impl Default for TcBoundRule {
    fn default() -> Self {
        Self {
            form: TcBoundForm::WindowFraction,
            lookback_cap_days: 60.0,
            horizon_cap_days: 252.0,
            window_fraction: 0.5,
        }
    }
}

/// Open interval `(lo, hi)` for the critical time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcBounds {
    pub lo: f64,
    pub hi: f64,
}

impl TcBounds {
    pub fn is_feasible(&self) -> bool {
        self.lo < self.hi
    }

    pub fn contains(&self, tc: f64) -> bool {
        self.lo < tc && tc < self.hi
    }
}

impl TcBoundRule {
    /// Stylized bounds before the `tc > t2` clamp.
    pub fn raw_bounds(&self, t1: usize, t2: usize) -> TcBounds {
        let (t1, t2) = (t1 as f64, t2 as f64);
        let width = t2 - t1;
        let (near_lo, near_hi) = match self.form {
            TcBoundForm::WindowFraction => (t2 - self.window_fraction * width, t2 + self.window_fraction * width),
            TcBoundForm::Literal => ((t2 - self.window_fraction) / width, (t2 + self.window_fraction) / width),
        };
        TcBounds {
            lo: (t2 - self.lookback_cap_days).max(near_lo),
            hi: (t2 + self.horizon_cap_days).min(near_hi),
        }
    }

    /// Search interval for `tc`: the stylized bounds with the lower end
    /// raised to `t2 + TC_MARGIN_DAYS` so the model is defined on the whole
    /// window.
    pub fn bounds(&self, t1: usize, t2: usize) -> TcBounds {
        let raw = self.raw_bounds(t1, t2);
        TcBounds {
            lo: raw.lo.max(t2 as f64 + TC_MARGIN_DAYS),
            hi: raw.hi,
        }
    }
}

/// Default-rule `tc` search interval for `[t1, t2]`.
pub fn tc_bounds(t1: usize, t2: usize) -> TcBounds {
    TcBoundRule::default().bounds(t1, t2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub initial_window_days: usize,
    pub shrink_step_days: usize,
    pub min_window_days: usize,
    pub starts_per_window: usize,
    pub max_optimizer_iters: usize,
    pub rng_seed: u64,
    pub m_bounds: (f64, f64),
    pub omega_bounds: (f64, f64),
    pub tc_rule: TcBoundRule,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            initial_window_days: 120,
            shrink_step_days: 5,
            min_window_days: 5,
            starts_per_window: 10,
            max_optimizer_iters: 500,
            rng_seed: 0,
            m_bounds: (0.0, 1.0),
            omega_bounds: (2.0, 15.0),
            tc_rule: TcBoundRule::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.min_window_days < MIN_WINDOW_SAMPLES {
            return bad(format!("min_window_days must be at least {MIN_WINDOW_SAMPLES}"));
        }
        if self.initial_window_days < self.min_window_days {
            return bad("initial_window_days must be at least min_window_days".into());
        }
        if self.shrink_step_days == 0 {
            return bad("shrink_step_days must be at least 1".into());
        }
        if self.starts_per_window == 0 {
            return bad("starts_per_window must be at least 1".into());
        }
        let (m_lo, m_hi) = self.m_bounds;
        if !(0.0 <= m_lo && m_lo < m_hi) {
            return bad(format!("m bounds ({m_lo}, {m_hi}) are empty or negative"));
        }
        let (w_lo, w_hi) = self.omega_bounds;
        if !(0.0 < w_lo && w_lo < w_hi) {
            return bad(format!("omega bounds ({w_lo}, {w_hi}) are empty or non-positive"));
        }
        let r = &self.tc_rule;
        if !(r.lookback_cap_days >= 0.0 && r.horizon_cap_days > 0.0 && r.window_fraction > 0.0) {
            return bad("tc bound parameters must be positive".into());
        }
        Ok(())
    }

    fn simplex_options(&self, sse_floor: f64) -> SimplexOptions {
        SimplexOptions {
            max_iters: self.max_optimizer_iters,
            f_abs_tol: sse_floor,
            ..SimplexOptions::default()
        }
    }
}

/// Accepted calibration of one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowFit {
    pub t1: usize,
    pub t2: usize,
    pub params: LpplParams,
    pub sse: f64,
    pub constraints_ok: bool,
    pub n_samples: usize,
}

/// Fits for one anchor day, with the anchor's analysed price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorFits {
    pub t2: usize,
    pub date: NaiveDate,
    pub price: f64,
    pub fits: Vec<WindowFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTable {
    pub asset_id: String,
    pub epoch: NaiveDate,
    pub anchors: Vec<AnchorFits>,
}

impl FitTable {
    pub fn accepted_fits(&self) -> usize {
        self.anchors.iter().map(|a| a.fits.len()).sum()
    }
}

/// Windows `[t1, t2]` for one anchor, longest first. Empty when the series
/// does not reach back far enough for the initial window.
pub fn enumerate_windows(t2: usize, config: &PipelineConfig) -> Vec<(usize, usize)> {
    if t2 + 1 < config.initial_window_days || config.shrink_step_days == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut len = config.initial_window_days;
    while len >= config.min_window_days && len >= 1 {
        out.push((t2 + 1 - len, t2));
        match len.checked_sub(config.shrink_step_days) {
            Some(next) => len = next,
            None => break,
        }
    }
    out
}

/// Independent random stream for the window `[t1, t2]`. Streams depend only
/// on the seed and the window, so fits come out the same in any execution
/// order.
pub fn window_rng(seed: u64, t1: usize, t2: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((t2 as u64) << 32) ^ t1 as u64);
    rng
}

/// True when the parameters meet every stylized-feature constraint for the
/// window.
pub fn satisfies_constraints(params: &LpplParams, t1: usize, t2: usize, config: &PipelineConfig) -> bool {
    let (m_lo, m_hi) = config.m_bounds;
    let (w_lo, w_hi) = config.omega_bounds;
    config.tc_rule.bounds(t1, t2).contains(params.tc)
        && params.tc > t2 as f64
        && m_lo < params.m
        && params.m < m_hi
        && w_lo < params.omega
        && params.omega < w_hi
        && params.c1 * params.c1 + params.c2 * params.c2 < 1.0
}

/// Calibrates one window using its own random stream.
pub fn fit_window(window: DesignWindow<'_>, config: &PipelineConfig) -> Option<WindowFit> {
    let mut rng = window_rng(config.rng_seed, window.t1(), window.t2());
    fit_window_with_rng(window, config, &mut rng)
}

/// Multi-start search over `(tc, m, omega)` on the feasible box. The
/// lowest-SSE start is returned if it satisfies all constraints.
pub fn fit_window_with_rng<R: Rng>(window: DesignWindow<'_>, config: &PipelineConfig, rng: &mut R) -> Option<WindowFit> {
    let (t1, t2) = (window.t1(), window.t2());
    let tc = config.tc_rule.bounds(t1, t2);
    if !tc.is_feasible() || is_flat(window.log_values()) {
        return None;
    }
    let (m_lo, m_hi) = config.m_bounds;
    let (w_lo, w_hi) = config.omega_bounds;
    let to_box = |u: &[f64; 3]| {
        (
            tc.lo + u[0] * (tc.hi - tc.lo),
            m_lo + u[1] * (m_hi - m_lo),
            w_lo + u[2] * (w_hi - w_lo),
        )
    };

    let values = window.log_values();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let total_ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let floor = SSE_FLOOR * total_ss;
    let opts = config.simplex_options(floor);

    let mut solver = LinearSolver::new(window);
    let mut best: Option<([f64; 3], f64)> = None;
    for _ in 0..config.starts_per_window {
        let start: [f64; 3] = [rng.random(), rng.random(), rng.random()];
        let min = optimize::minimize(
            |u| {
                let (tc, m, omega) = to_box(u);
                solver.solve(tc, m, omega).map_or(f64::INFINITY, |f| f.sse)
            },
            start,
            &opts,
        );
        // Ties within the floor keep the earlier start.
        if min.f.is_finite() && best.is_none_or(|(_, f)| min.f < f - floor) {
            best = Some((min.x, min.f));
        }
    }

    let (u, _) = best?;
    let (tc_hat, m, omega) = to_box(&u);
    let linear = solver.solve(tc_hat, m, omega).ok()?;
    let params = linear.into_params(tc_hat, m, omega);
    satisfies_constraints(&params, t1, t2, config).then_some(WindowFit {
        t1,
        t2,
        params,
        sse: linear.sse,
        constraints_ok: true,
        n_samples: window.len(),
    })
}

/// A window with no price movement has nothing to calibrate.
fn is_flat(values: &[f64]) -> bool {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo <= FLAT_TOL * (1.0 + lo.abs().max(hi.abs()))
}

fn fit_span(series: &LogSeries, (t1, t2): (usize, usize), config: &PipelineConfig) -> Option<WindowFit> {
    let window = DesignWindow::from_series(series, t1, t2).ok()?;
    fit_window(window, config)
}

/// Fits every window of one anchor, keeping window order and dropping
/// failed windows.
pub fn run_anchor(series: &LogSeries, t2: usize, config: &PipelineConfig) -> Vec<WindowFit> {
    if t2 >= series.len() {
        return Vec::new();
    }
    let spans = enumerate_windows(t2, config);
    map_ordered(&spans, |&span| fit_span(series, span, config))
        .into_iter()
        .flatten()
        .collect()
}

/// Runs every anchor from `initial_window_days - 1` to the end of the
/// series. Parallel when the `parallel` feature is on.
pub fn run_all(series: &LogSeries, config: &PipelineConfig) -> Result<FitTable> {
    run_all_with(series, config, |spans| map_ordered(spans, |&span| fit_span(series, span, config)))
}

/// Single-threaded [`run_all`]; produces identical output.
pub fn run_all_sequential(series: &LogSeries, config: &PipelineConfig) -> Result<FitTable> {
    run_all_with(series, config, |spans| spans.iter().map(|&span| fit_span(series, span, config)).collect())
}

fn run_all_with<F>(series: &LogSeries, config: &PipelineConfig, fit: F) -> Result<FitTable>
where
    F: FnOnce(&[(usize, usize)]) -> Vec<Option<WindowFit>>,
{
    config.validate()?;
    if series.len() < config.initial_window_days {
        return Err(Error::InsufficientData {
            needed: config.initial_window_days,
            got: series.len(),
        });
    }
    let anchors: Vec<usize> = (config.initial_window_days - 1..series.len()).collect();
    let spans: Vec<(usize, usize)> = anchors.iter().flat_map(|&t2| enumerate_windows(t2, config)).collect();
    let mut results = fit(&spans).into_iter();

    let anchors = anchors
        .into_iter()
        .map(|t2| {
            let n = enumerate_windows(t2, config).len();
            AnchorFits {
                t2,
                date: series.date_of(t2),
                price: series.price_at(t2),
                fits: results.by_ref().take(n).flatten().collect(),
            }
        })
        .collect();
    Ok(FitTable {
        asset_id: series.asset_id().to_string(),
        epoch: series.epoch(),
        anchors,
    })
}

#[cfg(feature = "parallel")]
fn map_ordered<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_ordered<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    items.iter().map(f).collect()
}
