//! Confidence filters and the positive/negative bubble indicators.

use std::f64::consts::TAU;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::calibration::{FitTable, WindowFit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Fits must show strictly more log-periodic oscillations than this.
    pub min_oscillations: f64,
    /// Fits must have a damping ratio strictly above this.
    pub min_damping: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_oscillations: 2.5,
            min_damping: 0.5,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_oscillations > 0.0 && self.min_damping > 0.0 {
            Ok(())
        } else {
            Err(Error::Config("filter thresholds must be positive".into()))
        }
    }
}

/// Number of oscillations the fit completes inside its window,
/// `(omega / 2 pi) ln((tc - t1) / (tc - t2))`.
pub fn oscillation_count(fit: &WindowFit) -> f64 {
    let p = &fit.params;
    let (t1, t2) = (fit.t1 as f64, fit.t2 as f64);
    assert!(
        p.tc > t2,
        "accepted fit has tc = {} not after its window end {}",
        p.tc,
        t2
    );
    p.omega / TAU * ((p.tc - t1) / (p.tc - t2)).ln()
}

/// `m |B| / (omega |C|)`; infinite when the fit has no oscillation.
pub fn damping(fit: &WindowFit) -> f64 {
    let p = &fit.params;
    let c = p.c();
    if c == 0.0 {
        return f64::INFINITY;
    }
    p.m * p.b.abs() / (p.omega * c)
}

pub fn passes_filter(fit: &WindowFit, cfg: &FilterConfig) -> bool {
    oscillation_count(fit) > cfg.min_oscillations && damping(fit) > cfg.min_damping
}

/// Indicator values for one anchor day with the counts they come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorPoint {
    pub anchor_date: NaiveDate,
    pub price: f64,
    pub pos: f64,
    pub neg: f64,
    pub b_neg_count: usize,
    pub b_neg_pass: usize,
    pub b_pos_count: usize,
    pub b_pos_pass: usize,
}

fn ratio(pass: usize, count: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        pass as f64 / count as f64
    }
}

/// Splits the fits by the sign of B (zero joins neither group) and returns
/// the filtered share of each group. `pos` comes from the B < 0 group.
pub fn indicators(anchor_date: NaiveDate, price: f64, fits: &[WindowFit], cfg: &FilterConfig) -> IndicatorPoint {
    let (mut b_neg_count, mut b_neg_pass, mut b_pos_count, mut b_pos_pass) = (0, 0, 0, 0);
    for fit in fits {
        let b = fit.params.b;
        if b < 0.0 {
            b_neg_count += 1;
            b_neg_pass += passes_filter(fit, cfg) as usize;
        } else if b > 0.0 {
            b_pos_count += 1;
            b_pos_pass += passes_filter(fit, cfg) as usize;
        }
    }
    IndicatorPoint {
        anchor_date,
        price,
        pos: ratio(b_neg_pass, b_neg_count),
        neg: ratio(b_pos_pass, b_pos_count),
        b_neg_count,
        b_neg_pass,
        b_pos_count,
        b_pos_pass,
    }
}

/// One point per anchor, in anchor order.
pub fn indicator_series(table: &FitTable, cfg: &FilterConfig) -> Vec<IndicatorPoint> {
    table
        .anchors
        .iter()
        .map(|a| indicators(a.date, a.price, &a.fits, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LpplParams;
    use std::f64::consts::{E, PI};

    fn fit(t1: usize, t2: usize, params: LpplParams) -> WindowFit {
        WindowFit {
            t1,
            t2,
            params,
            sse: 0.0,
            constraints_ok: true,
            n_samples: t2 - t1 + 1,
        }
    }

    fn params(b: f64, c: f64, tc: f64, m: f64, omega: f64) -> LpplParams {
        LpplParams { a: 1.0, b, c1: c, c2: 0.0, tc, m, omega }
    }

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 12, 20).unwrap()
    }

    #[test]
    fn oscillation_examples() {
        // (tc - t1) / (tc - t2) = e with t1 = 0, t2 = 10.
        let tc = 10.0 * E / (E - 1.0);
        let f = fit(0, 10, params(-1.0, 0.1, tc, 0.5, 2.0 * PI));
        assert!((oscillation_count(&f) - 1.0).abs() < 1e-12);
        let f = fit(0, 10, params(-1.0, 0.1, tc, 0.5, 4.0 * PI));
        assert!((oscillation_count(&f) - 2.0).abs() < 1e-12);

        let f = fit(0, 119, params(-1.0, 0.1, 125.0, 0.5, 9.0));
        let want = 9.0 / (2.0 * PI) * (125.0f64 / 6.0).ln();
        assert!((oscillation_count(&f) - want).abs() < 1e-12);
        assert!((oscillation_count(&f) - 4.349).abs() < 1e-3);
    }

    #[test]
    #[should_panic]
    fn oscillation_count_rejects_tc_inside_window() {
        oscillation_count(&fit(0, 10, params(-1.0, 0.1, 10.0, 0.5, 6.0)));
    }

    #[test]
    fn damping_examples() {
        let f = fit(0, 119, params(-1.0, 0.05, 125.0, 0.5, 10.0));
        assert!((damping(&f) - 1.0).abs() < 1e-12);
        let f = fit(0, 119, params(0.2, 0.1, 125.0, 0.8, 8.0));
        assert!((damping(&f) - 0.2).abs() < 1e-12);
        let f = fit(0, 119, params(0.2, 0.0, 125.0, 0.8, 8.0));
        assert_eq!(damping(&f), f64::INFINITY);
    }

    /// Window `[0, 119]` with tc chosen so the oscillation count equals
    /// `osc` for the given omega.
    fn with_counts(osc: f64, damp: f64) -> WindowFit {
        let omega = 9.0;
        let ratio = (osc * TAU / omega).exp();
        let tc = (ratio * 119.0) / (ratio - 1.0);
        // damping = m |B| / (omega C) with m = 0.5, C = 0.05
        let b = -damp * omega * 0.05 / 0.5;
        fit(0, 119, params(b, 0.05, tc, 0.5, omega))
    }

    #[test]
    fn filter_examples() {
        let cfg = FilterConfig::default();
        assert!(passes_filter(&with_counts(4.3, 1.0), &cfg));
        assert!(!passes_filter(&with_counts(3.0, 0.4), &cfg));

        let mut boundary = with_counts(2.5, 1.0);
        let osc = oscillation_count(&boundary);
        assert!((osc - 2.5).abs() < 1e-9);
        // Make the count land exactly on the threshold.
        let strict = FilterConfig { min_oscillations: osc, ..cfg };
        assert!(!passes_filter(&boundary, &strict));
        boundary.params.b = -0.5 * 9.0 * 0.05 / 0.5;
        let exact_damp = FilterConfig { min_oscillations: 1.0, min_damping: damping(&boundary) };
        assert!(!passes_filter(&boundary, &exact_damp));
    }

    #[test]
    fn zero_oscillation_passes_damping() {
        let mut f = with_counts(4.0, 1.0);
        f.params.c1 = 0.0;
        assert!(passes_filter(&f, &FilterConfig::default()));
    }

    #[test]
    fn indicator_arithmetic() {
        let cfg = FilterConfig::default();
        let mut fits = Vec::new();
        for i in 0..12 {
            fits.push(if i < 6 { with_counts(4.0, 1.0) } else { with_counts(1.0, 1.0) });
        }
        for _ in 0..12 {
            let mut f = with_counts(1.0, 1.0);
            f.params.b = -f.params.b;
            fits.push(f);
        }
        let p = indicators(day(), 1.0, &fits, &cfg);
        assert_eq!((p.pos, p.neg), (0.5, 0.0));
        assert_eq!((p.b_neg_count, p.b_neg_pass, p.b_pos_count, p.b_pos_pass), (12, 6, 12, 0));

        let empty = indicators(day(), 1.0, &[], &cfg);
        assert_eq!((empty.pos, empty.neg), (0.0, 0.0));
    }

    #[test]
    fn zero_b_joins_neither_group() {
        let mut f = with_counts(4.0, 1.0);
        f.params.b = 0.0;
        let p = indicators(day(), 1.0, &[f], &FilterConfig::default());
        assert_eq!((p.b_neg_count, p.b_pos_count), (0, 0));
    }

    #[test]
    fn threshold_validation() {
        assert!(FilterConfig::default().validate().is_ok());
        assert!(FilterConfig { min_oscillations: 0.0, min_damping: 0.5 }.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_fit() -> impl Strategy<Value = WindowFit> {
            (0usize..100, 5usize..121, 0.02f64..80.0, 0.01f64..0.99, 2.01f64..14.99, -2.0f64..2.0, 0.0f64..0.5)
                .prop_map(|(t1, len, excess, m, omega, b, c)| {
                    let t2 = t1 + len - 1;
                    fit(t1, t2, params(b, c, t2 as f64 + excess, m, omega))
                })
        }

        proptest! {
            #[test]
            fn indicators_bounded_and_monotone(
                fits in prop::collection::vec(arb_fit(), 0..30),
                osc in 0.1f64..6.0,
                damp in 0.05f64..3.0,
                bump_osc in 0.0f64..3.0,
                bump_damp in 0.0f64..3.0,
            ) {
                let lo = FilterConfig { min_oscillations: osc, min_damping: damp };
                let hi = FilterConfig { min_oscillations: osc + bump_osc, min_damping: damp + bump_damp };
                let a = indicators(day(), 1.0, &fits, &lo);
                let b = indicators(day(), 1.0, &fits, &hi);
                for p in [a, b] {
                    prop_assert!((0.0..=1.0).contains(&p.pos) && (0.0..=1.0).contains(&p.neg));
                    prop_assert!(p.b_neg_pass <= p.b_neg_count && p.b_pos_pass <= p.b_pos_count);
                    prop_assert!(p.b_neg_count + p.b_pos_count <= fits.len());
                }
                prop_assert!(b.pos <= a.pos && b.neg <= a.neg);
                for f in &fits {
                    prop_assert!(oscillation_count(f) > 0.0);
                }
            }
        }
    }
}
