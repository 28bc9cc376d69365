//! Bubble diagnostics with the log-periodic power law (LPPL).
//!
//! The pipeline reads a daily price series, calibrates the LPPL model on a
//! family of shrinking windows ending at every anchor day, and reduces the
//! accepted fits to positive and negative bubble indicators in `[0, 1]`.
//!
//! ```no_run
//! use lppl_bubble::{calibration, indicator, timeseries};
//!
//! let prices = timeseries::load_csv("prices.csv", &Default::default())?;
//! let log = timeseries::to_log(&timeseries::resample_daily(&prices));
//! let table = calibration::run_all(&log, &Default::default())?;
//! let points = indicator::indicator_series(&table, &Default::default());
//! # Ok::<(), lppl_bubble::Error>(())
//! ```
//!
//! With the default `parallel` feature, window fits run on the rayon pool.
//! Output does not depend on the number of threads.

// `!(x > 0.0)` style checks are how NaN gets rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod calibration;
mod error;
pub mod indicator;
pub mod model;
pub mod optimize;
pub mod synth;
pub mod timeseries;

pub use calibration::{FitTable, PipelineConfig, WindowFit};
pub use error::{Error, Result};
pub use indicator::{FilterConfig, IndicatorPoint};
pub use model::LpplParams;
pub use timeseries::{LogSeries, PriceSeries};
