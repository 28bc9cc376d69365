//! Synthetic LPPL price series with known parameters.

use chrono::{Days, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{evaluate, LpplParams};
use crate::timeseries::{PricePoint, PriceSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub params: LpplParams,
    pub n_days: usize,
    /// Standard deviation of Gaussian noise added to the log-price.
    pub noise_sigma: f64,
    pub seed: u64,
    pub start_date: NaiveDate,
}

impl SynthSpec {
    pub fn new(params: LpplParams, n_days: usize) -> Self {
        Self {
            params,
            n_days,
            noise_sigma: 0.0,
            seed: 0,
            start_date: NaiveDate::from_ymd_opt(2021, 1, 1).expect("valid date"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_days < 2 {
            return Err(Error::Config(format!("need at least 2 days, got {}", self.n_days)));
        }
        let last = (self.n_days - 1) as f64;
        if !(self.params.tc > last) {
            return Err(Error::Config(format!(
                "tc = {} must lie after the last sample day {last}",
                self.params.tc
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config(format!("noise sigma must be non-negative, got {}", self.noise_sigma)));
        }
        Ok(())
    }
}

/// `price[t] = exp(model(t) + noise[t])` for `t = 0..n_days`.
pub fn generate(spec: &SynthSpec) -> Result<PriceSeries> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let points = (0..spec.n_days)
        .map(|t| {
            let eps = if spec.noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            let log_price = evaluate(&spec.params, t as f64)? + eps;
            Ok(PricePoint {
                date: spec.start_date + Days::new(t as u64),
                price: log_price.exp(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PriceSeries::new("synthetic", points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::to_log;

    fn bubble() -> LpplParams {
        LpplParams { a: 8.0, b: -1.0, c1: 0.05, c2: 0.05, tc: 139.0, m: 0.5, omega: 9.0 }
    }

    #[test]
    fn noiseless_round_trip() {
        let s = generate(&SynthSpec::new(bubble(), 120)).unwrap();
        let l = to_log(&s);
        for (t, v) in l.log_prices().iter().enumerate() {
            let want = evaluate(&bubble(), t as f64).unwrap();
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_model_is_flat() {
        let p = LpplParams { b: 0.0, c1: 0.0, c2: 0.0, ..bubble() };
        let s = generate(&SynthSpec::new(p, 50)).unwrap();
        assert!(s.prices().all(|x| (x - 8f64.exp()).abs() < 1e-9));
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SynthSpec { noise_sigma: 0.02, seed: 11, ..SynthSpec::new(bubble(), 120) };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = SynthSpec { seed: 12, ..spec.clone() };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn tc_inside_sample_is_rejected() {
        let p = LpplParams { tc: 100.0, ..bubble() };
        assert!(matches!(generate(&SynthSpec::new(p, 130)), Err(Error::Config(_))));
        let p = LpplParams { tc: 129.0, ..bubble() };
        assert!(generate(&SynthSpec::new(p, 130)).is_err());
    }
}
