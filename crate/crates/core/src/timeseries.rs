//! Daily price series: ingestion, gap filling, smoothing and the log transform.
//!
//! Dates are turned into integer day offsets exactly once, in [`to_log`].
//! Everything downstream works on the offset index.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// Trailing window of the weekly moving average, in days.
pub const WEEK: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub date: NaiveDate,
    pub price: f64,
}

/// Ordered price observations for one asset.
///
/// Construction checks that dates strictly increase, that every price is
/// positive and finite, and that there are at least two points.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    asset_id: String,
    points: Vec<PricePoint>,
}

impl PriceSeries {
    pub fn new(asset_id: impl Into<String>, points: Vec<PricePoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: points.len(),
            });
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.price.is_finite() && p.price > 0.0) {
                return Err(Error::InvalidSeries(format!(
                    "price {} on {} is not positive",
                    p.price, p.date
                )));
            }
            if i > 0 && points[i - 1].date >= p.date {
                return Err(Error::InvalidSeries(format!(
                    "dates not strictly increasing at {}",
                    p.date
                )));
            }
        }
        Ok(Self {
            asset_id: asset_id.into(),
            points,
        })
    }

    pub fn asset_id(&self) -> &str {
        &self.asset_id
    }

    pub fn points(&self) -> &[PricePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first_date(&self) -> NaiveDate {
        self.points[0].date
    }

    pub fn last_date(&self) -> NaiveDate {
        self.points[self.points.len() - 1].date
    }

    pub fn prices(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.price)
    }

    /// True when consecutive points are exactly one calendar day apart.
    pub fn is_daily_contiguous(&self) -> bool {
        self.points
            .windows(2)
            .all(|w| w[0].date.succ_opt() == Some(w[1].date))
    }

    /// Multiplies every price by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let points = self
            .points
            .iter()
            .map(|p| PricePoint {
                date: p.date,
                price: p.price * factor,
            })
            .collect();
        Self::new(self.asset_id.clone(), points)
    }

    /// Keeps the points up to and including index `last`.
    pub fn truncated(&self, last: usize) -> Result<Self> {
        let end = (last + 1).min(self.points.len());
        Self::new(self.asset_id.clone(), self.points[..end].to_vec())
    }

    /// Writes `date,price` rows with a header. Prices use shortest
    /// round-trip formatting so a reload reproduces them exactly.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "price"])?;
        for p in &self.points {
            w.write_record([p.date.format(DATE_FORMAT).to_string(), format!("{}", p.price)])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Column names used when reading a price CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub date_column: String,
    pub price_column: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            date_column: "date".into(),
            price_column: "price".into(),
        }
    }
}

/// Reads a price CSV from disk. The asset id is the file stem.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<PriceSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let asset_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".into());
    read_csv(file, asset_id, schema)
}

pub fn read_csv<R: Read>(reader: R, asset_id: impl Into<String>, schema: &CsvSchema) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("missing column '{name}'"),
        })
    };
    let date_idx = column(&schema.date_column)?;
    let price_idx = column(&schema.price_column)?;

    let mut rows: Vec<(u64, PricePoint)> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |idx: usize| {
            record.get(idx).ok_or_else(|| Error::Parse {
                line,
                message: "row has too few fields".into(),
            })
        };
        let raw_date = field(date_idx)?;
        let raw_price = field(price_idx)?;
        let date = NaiveDate::parse_from_str(raw_date, DATE_FORMAT).map_err(|e| Error::Parse {
            line,
            message: format!("bad date '{raw_date}': {e}"),
        })?;
        let price: f64 = raw_price.parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad price '{raw_price}'"),
        })?;
        if !(price.is_finite() && price > 0.0) {
            return Err(Error::Validation {
                line,
                message: format!("price must be positive, got {raw_price}"),
            });
        }
        rows.push((line, PricePoint { date, price }));
    }

    rows.sort_by_key(|(_, p)| p.date);
    for pair in rows.windows(2) {
        if pair[0].1.date == pair[1].1.date {
            let line = pair[0].0.max(pair[1].0);
            return Err(Error::Validation {
                line,
                message: format!("duplicate date {}", pair[1].1.date),
            });
        }
    }
    PriceSeries::new(asset_id, rows.into_iter().map(|(_, p)| p).collect())
}

/// One point per calendar day, gaps filled with the last observed price.
pub fn resample_daily(series: &PriceSeries) -> PriceSeries {
    let pts = series.points();
    let mut out = Vec::with_capacity(pts.len());
    for pair in pts.windows(2) {
        let (cur, next) = (pair[0], pair[1]);
        let mut day = cur.date;
        while day < next.date {
            out.push(PricePoint {
                date: day,
                price: cur.price,
            });
            day = day + Days::new(1);
        }
    }
    out.push(pts[pts.len() - 1]);
    PriceSeries {
        asset_id: series.asset_id.clone(),
        points: out,
    }
}

/// Trailing 7-day arithmetic mean. The first six days have no full week
/// behind them and are dropped.
pub fn weekly_moving_average(series: &PriceSeries) -> Result<PriceSeries> {
    let pts = series.points();
    if pts.len() < WEEK {
        return Err(Error::InsufficientData {
            needed: WEEK,
            got: pts.len(),
        });
    }
    if !series.is_daily_contiguous() {
        return Err(Error::InvalidSeries(
            "moving average needs a contiguous daily series; resample first".into(),
        ));
    }
    let points: Vec<PricePoint> = pts
        .windows(WEEK)
        .map(|w| PricePoint {
            date: w[WEEK - 1].date,
            price: w.iter().map(|p| p.price).sum::<f64>() / WEEK as f64,
        })
        .collect();
    if points.len() < 2 {
        // A single averaged point is still a valid result here.
        return Ok(PriceSeries {
            asset_id: series.asset_id.clone(),
            points,
        });
    }
    PriceSeries::new(series.asset_id.clone(), points)
}

/// Log-prices on an integer day index starting at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSeries {
    asset_id: String,
    epoch: NaiveDate,
    log_price: Vec<f64>,
}

impl LogSeries {
    pub fn asset_id(&self) -> &str {
        &self.asset_id
    }

    /// Calendar day of index 0.
    pub fn epoch(&self) -> NaiveDate {
        self.epoch
    }

    pub fn log_prices(&self) -> &[f64] {
        &self.log_price
    }

    pub fn len(&self) -> usize {
        self.log_price.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_price.is_empty()
    }

    pub fn t_index(&self) -> std::ops::Range<usize> {
        0..self.log_price.len()
    }

    pub fn date_of(&self, t: usize) -> NaiveDate {
        self.epoch + Days::new(t as u64)
    }

    pub fn price_at(&self, t: usize) -> f64 {
        self.log_price[t].exp()
    }

    /// Day offset of `date` relative to the epoch, if it is not earlier.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let days = (date - self.epoch).num_days();
        (days >= 0).then_some(days as usize)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "log_price"])?;
        for (t, v) in self.log_price.iter().enumerate() {
            w.write_record([self.date_of(t).format(DATE_FORMAT).to_string(), format!("{v}")])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Natural log of every price. Index `i` is the day offset from the first
/// date, so the input should be daily-contiguous (see [`resample_daily`]).
pub fn to_log(series: &PriceSeries) -> LogSeries {
    LogSeries {
        asset_id: series.asset_id.clone(),
        epoch: series.first_date(),
        log_price: series.prices().map(f64::ln).collect(),
    }
}
