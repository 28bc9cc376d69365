//! The log-periodic power law and its linear subproblem.
//!
//! ```text
//! ln p(t) = A + (tc - t)^m * (B + C1 cos(w ln(tc - t)) + C2 sin(w ln(tc - t)))
//! ```
//!
//! For fixed `(tc, m, w)` the model is linear in `(A, B, C1, C2)`, which are
//! obtained by least squares on the basis `[1, f, f cos g, f sin g]` with
//! `f = (tc - t)^m` and `g = w ln(tc - t)`. Time is measured in days.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::LogSeries;

/// Smallest number of samples a calibration window may hold.
pub const MIN_WINDOW_SAMPLES: usize = 5;

const BASIS: usize = 4;

/// Columns whose residual norm after orthogonalisation falls below this
/// fraction of their original norm are treated as linearly dependent.
const RANK_TOL: f64 = 1e-12;

/// One full LPPL parameter vector in the `(C1, C2)` parameterisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpplParams {
    pub a: f64,
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
    pub tc: f64,
    pub m: f64,
    pub omega: f64,
}

impl LpplParams {
    /// Oscillation amplitude `sqrt(C1^2 + C2^2)`.
    pub fn c(&self) -> f64 {
        self.c1.hypot(self.c2)
    }

    /// Oscillation phase, `atan2(C2, C1)`.
    pub fn phi(&self) -> f64 {
        self.c2.atan2(self.c1)
    }

    /// Builds the `(C1, C2)` form from amplitude and phase.
    pub fn from_phi_form(a: f64, b: f64, c: f64, tc: f64, m: f64, omega: f64, phi: f64) -> Self {
        Self {
            a,
            b,
            c1: c * phi.cos(),
            c2: c * phi.sin(),
            tc,
            m,
            omega,
        }
    }
}

/// `A + B (tc-t)^m + C (tc-t)^m cos(w ln(tc-t) - phi)`.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_phi_form(a: f64, b: f64, c: f64, tc: f64, m: f64, omega: f64, phi: f64, t: f64) -> Result<f64> {
    let dt = tc - t;
    if !(dt > 0.0) {
        return Err(Error::Domain { t, tc });
    }
    let f = dt.powf(m);
    Ok(a + b * f + c * f * (omega * dt.ln() - phi).cos())
}

/// Model value at `t` in the `(C1, C2)` form.
pub fn evaluate(params: &LpplParams, t: f64) -> Result<f64> {
    let dt = params.tc - t;
    if !(dt > 0.0) {
        return Err(Error::Domain { t, tc: params.tc });
    }
    let f = dt.powf(params.m);
    let (s, c) = (params.omega * dt.ln()).sin_cos();
    Ok(params.a + f * (params.b + params.c1 * c + params.c2 * s))
}

/// A contiguous run of log-prices on day offsets `t1..=t2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignWindow<'a> {
    t1: usize,
    log_values: &'a [f64],
}

impl<'a> DesignWindow<'a> {
    /// `log_values[i]` is the log-price at day offset `t1 + i`.
    pub fn new(t1: usize, log_values: &'a [f64]) -> Result<Self> {
        if log_values.len() < MIN_WINDOW_SAMPLES {
            return Err(Error::InvalidWindow(format!(
                "{} samples, need at least {MIN_WINDOW_SAMPLES}",
                log_values.len()
            )));
        }
        Ok(Self { t1, log_values })
    }

    pub fn from_series(series: &'a LogSeries, t1: usize, t2: usize) -> Result<Self> {
        if t1 >= t2 || t2 >= series.len() {
            return Err(Error::InvalidWindow(format!(
                "[{t1}, {t2}] does not fit a series of {} points",
                series.len()
            )));
        }
        Self::new(t1, &series.log_prices()[t1..=t2])
    }

    pub fn t1(&self) -> usize {
        self.t1
    }

    pub fn t2(&self) -> usize {
        self.t1 + self.log_values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.log_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_values.is_empty()
    }

    pub fn log_values(&self) -> &'a [f64] {
        self.log_values
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (self.t1..=self.t2()).map(|t| t as f64)
    }
}

/// Least-squares solution of the linear subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub a: f64,
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
    pub sse: f64,
}

impl LinearFit {
    pub fn into_params(self, tc: f64, m: f64, omega: f64) -> LpplParams {
        LpplParams {
            a: self.a,
            b: self.b,
            c1: self.c1,
            c2: self.c2,
            tc,
            m,
            omega,
        }
    }
}

/// Scratch buffers for repeated [`LinearSolver::solve`] calls on one window.
///
/// The optimizer calls the solver thousands of times per window, so the
/// design matrix and right-hand side live here instead of being allocated
/// per call.
#[derive(Debug, Clone)]
pub struct LinearSolver<'a> {
    window: DesignWindow<'a>,
    mean: f64,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl<'a> LinearSolver<'a> {
    pub fn new(window: DesignWindow<'a>) -> Self {
        let n = window.len();
        let mean = window.log_values.iter().sum::<f64>() / n as f64;
        Self {
            window,
            mean,
            x: vec![0.0; n * BASIS],
            y: vec![0.0; n],
        }
    }

    pub fn window(&self) -> &DesignWindow<'a> {
        &self.window
    }

    /// Solves for `(A, B, C1, C2)` at fixed `(tc, m, omega)` with a
    /// Householder QR factorisation of the design matrix.
    ///
    /// The right-hand side is centred on its mean before factorising and
    /// the mean is folded back into `A`.
    pub fn solve(&mut self, tc: f64, m: f64, omega: f64) -> Result<LinearFit> {
        let n = self.window.len();
        let t2 = self.window.t2() as f64;
        if !(tc > t2) {
            return Err(Error::Domain { t: t2, tc });
        }
        if !(m > 0.0 && omega > 0.0) {
            return Err(Error::Config(format!("need m > 0 and omega > 0, got m = {m}, omega = {omega}")));
        }

        // Column-major design matrix: x[j * n + i].
        let (x, y) = (&mut self.x, &mut self.y);
        for (i, (t, v)) in self.window.times().zip(self.window.log_values).enumerate() {
            let dt = tc - t;
            let ln_dt = dt.ln();
            let f = (m * ln_dt).exp();
            let (s, c) = (omega * ln_dt).sin_cos();
            x[i] = 1.0;
            x[n + i] = f;
            x[2 * n + i] = f * c;
            x[3 * n + i] = f * s;
            y[i] = v - self.mean;
        }
        let coef = householder_least_squares(x, y, n)?;
        let sse: f64 = y[BASIS..].iter().map(|r| r * r).sum();
        if !coef.iter().all(|c| c.is_finite()) || !sse.is_finite() {
            return Err(Error::Singular);
        }
        Ok(LinearFit {
            a: coef[0] + self.mean,
            b: coef[1],
            c1: coef[2],
            c2: coef[3],
            sse,
        })
    }
}

/// One-shot form of [`LinearSolver::solve`].
pub fn solve_linear(window: DesignWindow<'_>, tc: f64, m: f64, omega: f64) -> Result<LinearFit> {
    LinearSolver::new(window).solve(tc, m, omega)
}

/// Overwrites `x` (n x 4, column-major) with its Householder reflections and
/// `y` with `Q^T y`, then back-substitutes for the coefficients.
fn householder_least_squares(x: &mut [f64], y: &mut [f64], n: usize) -> Result<[f64; BASIS]> {
    let mut r = [[0.0; BASIS]; BASIS];
    let mut col_norm = [0.0; BASIS];
    for (j, norm) in col_norm.iter_mut().enumerate() {
        *norm = x[j * n..(j + 1) * n].iter().map(|v| v * v).sum::<f64>().sqrt();
    }

    for k in 0..BASIS {
        let (head, tail) = x.split_at_mut((k + 1) * n);
        let v = &mut head[k * n + k..(k + 1) * n];
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if !(norm > RANK_TOL * col_norm[k]) {
            return Err(Error::Singular);
        }
        let alpha = if v[0] > 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|a| a * a).sum();
        r[k][k] = alpha;

        for j in (k + 1)..BASIS {
            let col = &mut tail[(j - k - 1) * n + k..(j - k) * n];
            let proj = 2.0 * dot(v, col) / vtv;
            for (c, vi) in col.iter_mut().zip(v.iter()) {
                *c -= proj * vi;
            }
            r[k][j] = col[0];
        }
        let rhs = &mut y[k..];
        let proj = 2.0 * dot(v, rhs) / vtv;
        for (c, vi) in rhs.iter_mut().zip(v.iter()) {
            *c -= proj * vi;
        }
    }

    let mut coef = [0.0; BASIS];
    for k in (0..BASIS).rev() {
        let mut acc = y[k];
        for j in (k + 1)..BASIS {
            acc -= r[k][j] * coef[j];
        }
        coef[k] = acc / r[k][k];
    }
    Ok(coef)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn window_from(params: &LpplParams, t1: usize, t2: usize) -> Vec<f64> {
        (t1..=t2).map(|t| evaluate(params, t as f64).unwrap()).collect()
    }

    #[test]
    fn phi_form_examples() {
        assert_eq!(evaluate_phi_form(5.0, 0.0, 0.0, 10.0, 0.5, 6.0, 0.3, 2.0).unwrap(), 5.0);
        assert_eq!(evaluate_phi_form(0.0, 1.0, 0.0, 4.0, 0.5, 6.0, 0.0, 0.0).unwrap(), 2.0);

        let want = 1.0 - 0.5 * E.sqrt() + 0.1 * E.sqrt() * (2.0 * PI * 1.0f64).cos();
        let got = evaluate_phi_form(1.0, -0.5, 0.1, E, 0.5, 2.0 * PI, 0.0, 0.0).unwrap();
        assert!((got - want).abs() < 1e-14, "{got} vs {want}");
    }

    #[test]
    fn outside_domain() {
        assert!(matches!(
            evaluate_phi_form(1.0, 1.0, 0.1, 10.0, 0.5, 6.0, 0.0, 10.0),
            Err(Error::Domain { .. })
        ));
        let p = LpplParams { a: 1.0, b: -1.0, c1: 0.0, c2: 0.0, tc: 5.0, m: 0.5, omega: 6.0 };
        assert!(evaluate(&p, 6.0).is_err());
    }

    #[test]
    fn c1_c2_form_examples() {
        let p = LpplParams { a: 3.0, b: -0.7, c1: 0.0, c2: 0.0, tc: 20.0, m: 0.4, omega: 7.0 };
        let t = 3.0;
        assert!((evaluate(&p, t).unwrap() - (3.0 - 0.7 * 17f64.powf(0.4))).abs() < 1e-14);

        let p = LpplParams { a: 2.0, b: 1.0, c1: 0.3, c2: 0.4, tc: 1.0, m: 0.5, omega: 3.0 };
        assert!((evaluate(&p, 0.0).unwrap() - 3.3).abs() < 1e-15);
    }

    #[test]
    fn derived_amplitude_and_phase() {
        let p = LpplParams::from_phi_form(0.0, 0.0, 0.5, 10.0, 0.5, 6.0, 0.9);
        assert!((p.c() - 0.5).abs() < 1e-15);
        assert!((p.phi() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn window_bounds() {
        assert!(DesignWindow::new(0, &[1.0; 4]).is_err());
        let w = DesignWindow::new(3, &[1.0; 5]).unwrap();
        assert_eq!((w.t1(), w.t2()), (3, 7));
    }

    #[test]
    fn recovers_exact_coefficients() {
        let truth = LpplParams { a: 8.0, b: -1.0, c1: 0.05, c2: -0.03, tc: 139.0, m: 0.5, omega: 9.0 };
        let ys = window_from(&truth, 0, 119);
        let fit = solve_linear(DesignWindow::new(0, &ys).unwrap(), 139.0, 0.5, 9.0).unwrap();
        assert!((fit.a - 8.0).abs() < 1e-8);
        assert!((fit.b + 1.0).abs() < 1e-8);
        assert!((fit.c1 - 0.05).abs() < 1e-8);
        assert!((fit.c2 + 0.03).abs() < 1e-8);
        assert!(fit.sse < 1e-16, "sse = {}", fit.sse);
    }

    #[test]
    fn constant_window() {
        let ys = [3.0; 30];
        let fit = solve_linear(DesignWindow::new(10, &ys).unwrap(), 45.0, 0.6, 7.0).unwrap();
        assert!((fit.a - 3.0).abs() < 1e-9);
        assert!(fit.b.abs() < 1e-9 && fit.c1.abs() < 1e-9 && fit.c2.abs() < 1e-9);
        assert!(fit.sse < 1e-16);
    }

    #[test]
    fn tc_inside_window_is_rejected() {
        let ys = [1.0, 2.0, 3.0, 4.0, 5.0];
        let w = DesignWindow::new(0, &ys).unwrap();
        assert!(matches!(solve_linear(w, 4.0, 0.5, 6.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn collinear_basis_is_singular() {
        // omega so small that cos(g) ~ 1 and sin(g) ~ 0 over the window,
        // making the oscillation columns copies of f up to rounding.
        let ys: Vec<f64> = (0..20).map(|t| (t as f64).sin()).collect();
        let w = DesignWindow::new(0, &ys).unwrap();
        assert!(matches!(solve_linear(w, 1e12, 0.5, 1e-300), Err(Error::Singular)));
    }

    #[test]
    fn sign_of_b_follows_curvature() {
        for b in [-0.8, 0.8] {
            let truth = LpplParams { a: 5.0, b, c1: 0.01, c2: 0.0, tc: 70.0, m: 0.4, omega: 8.0 };
            let ys = window_from(&truth, 0, 59);
            let fit = solve_linear(DesignWindow::new(0, &ys).unwrap(), 70.0, 0.4, 8.0).unwrap();
            assert_eq!(fit.b.signum(), b.signum());
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn shifting_log_prices_moves_only_a(
                k in -20.0f64..20.0,
                tc_excess in 0.5f64..80.0,
                m in 0.05f64..0.95,
                omega in 2.1f64..14.9,
                seed in 0u64..1000,
            ) {
                let ys: Vec<f64> = (0..40)
                    .map(|t| 4.0 + 0.01 * t as f64 + 0.05 * ((t as f64 + seed as f64) * 0.37).sin())
                    .collect();
                let shifted: Vec<f64> = ys.iter().map(|y| y + k).collect();
                let tc = 39.0 + tc_excess;
                let base = solve_linear(DesignWindow::new(0, &ys).unwrap(), tc, m, omega);
                let moved = solve_linear(DesignWindow::new(0, &shifted).unwrap(), tc, m, omega);
                if let (Ok(base), Ok(moved)) = (base, moved) {
                    let scale = 1.0 + base.b.abs().max(base.c1.abs()).max(base.c2.abs());
                    prop_assert!((moved.a - base.a - k).abs() < 1e-9 * scale * (1.0 + base.a.abs()));
                    prop_assert!((moved.b - base.b).abs() < 1e-9 * scale);
                    prop_assert!((moved.c1 - base.c1).abs() < 1e-9 * scale);
                    prop_assert!((moved.c2 - base.c2).abs() < 1e-9 * scale);
                    prop_assert!((moved.sse - base.sse).abs() < 1e-9);
                }
            }

            #[test]
            fn perturbing_coefficients_never_helps(
                tc_excess in 0.5f64..80.0,
                m in 0.05f64..0.95,
                omega in 2.1f64..14.9,
                which in 0usize..4,
                sign in prop::bool::ANY,
            ) {
                let ys: Vec<f64> = (0..60)
                    .map(|t| 3.0 + (t as f64 * 0.05).powi(2) * 0.1 + 0.02 * (t as f64 * 1.3).cos())
                    .collect();
                let tc = 59.0 + tc_excess;
                let w = DesignWindow::new(0, &ys).unwrap();
                let Ok(fit) = solve_linear(w, tc, m, omega) else { return Ok(()) };
                let mut p = fit.into_params(tc, m, omega);
                let delta = if sign { 1e-4 } else { -1e-4 };
                match which {
                    0 => p.a += delta,
                    1 => p.b += delta,
                    2 => p.c1 += delta,
                    _ => p.c2 += delta,
                }
                let sse: f64 = w
                    .times()
                    .zip(w.log_values())
                    .map(|(t, y)| (y - evaluate(&p, t).unwrap()).powi(2))
                    .sum();
                prop_assert!(sse >= fit.sse - 1e-12 * (1.0 + fit.sse), "{} < {}", sse, fit.sse);
            }
        }
    }
}
