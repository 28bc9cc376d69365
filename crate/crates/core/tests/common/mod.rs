//! Test-only reference computations, independent of the library's solver.
#![allow(dead_code)]

use chrono::{Days, NaiveDate};
use lppl_bubble::model::LpplParams;
use lppl_bubble::synth::{generate, SynthSpec};
use lppl_bubble::timeseries::{to_log, LogSeries, PricePoint, PriceSeries};
use nalgebra::{DMatrix, DVector};

/// `(A, B, C1, C2)` from the normal equations `X^T X a = X^T y`, solved by
/// LU with one step of iterative refinement.
pub fn normal_equations(t1: usize, ys: &[f64], tc: f64, m: f64, omega: f64) -> [f64; 4] {
    let n = ys.len();
    let x = DMatrix::from_fn(n, 4, |i, j| {
        let dt = tc - (t1 + i) as f64;
        let f = dt.powf(m);
        let g = omega * dt.ln();
        match j {
            0 => 1.0,
            1 => f,
            2 => f * g.cos(),
            _ => f * g.sin(),
        }
    });
    let y = DVector::from_column_slice(ys);
    let xtx = x.transpose() * &x;
    let lu = xtx.clone().lu();
    let mut a = lu.solve(&(x.transpose() * &y)).expect("normal equations solvable");
    let resid = x.transpose() * (&y - &x * &a);
    a += lu.solve(&resid).expect("refinement step");
    [a[0], a[1], a[2], a[3]]
}

/// Scalar evaluation of the amplitude/phase form, written out directly.
#[allow(clippy::too_many_arguments)]
pub fn phi_form(a: f64, b: f64, c: f64, tc: f64, m: f64, omega: f64, phi: f64, t: f64) -> f64 {
    let dt = tc - t;
    a + b * dt.powf(m) + c * dt.powf(m) * (omega * dt.ln() - phi).cos()
}

pub fn bubble(tc: f64) -> LpplParams {
    LpplParams { a: 8.0, b: -1.0, c1: 0.05, c2: 0.05, tc, m: 0.5, omega: 9.0 }
}

pub fn synthetic(params: LpplParams, days: usize, sigma: f64, seed: u64) -> PriceSeries {
    generate(&SynthSpec { noise_sigma: sigma, seed, ..SynthSpec::new(params, days) }).unwrap()
}

pub fn synthetic_log(params: LpplParams, days: usize, sigma: f64, seed: u64) -> LogSeries {
    to_log(&synthetic(params, days, sigma, seed))
}

pub fn daily_series(start: NaiveDate, prices: impl IntoIterator<Item = f64>) -> PriceSeries {
    let points = prices
        .into_iter()
        .enumerate()
        .map(|(i, price)| PricePoint { date: start + Days::new(i as u64), price })
        .collect();
    PriceSeries::new("test", points).unwrap()
}

/// Prints a one-line verdict and fails the test when `ok` is false.
pub fn verdict(id: &str, ok: bool, detail: String) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("[{tag}] {id}: {detail}");
    assert!(ok, "{id} failed: {detail}");
}
