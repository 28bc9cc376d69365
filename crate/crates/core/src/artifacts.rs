//! CSV and JSON forms of fit tables and indicator series.
//!
//! CSV numbers carry 6 significant digits; JSON keeps full precision and is
//! the form to read back.

use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::calibration::{enumerate_windows, AnchorFits, FitTable, PipelineConfig, WindowFit};
use crate::error::{Error, Result};
use crate::indicator::IndicatorPoint;
use crate::model::LpplParams;
use crate::timeseries::{LogSeries, DATE_FORMAT};

/// One accepted fit, flattened for output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub anchor_date: NaiveDate,
    pub t1_date: NaiveDate,
    pub t2_date: NaiveDate,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub phi: f64,
    /// Critical time as a day offset from the series epoch.
    pub tc_days: f64,
    pub m: f64,
    pub omega: f64,
    pub sse: f64,
    pub constraints_ok: bool,
}

const FIT_HEADER: [&str; 14] = [
    "anchor_date",
    "t1_date",
    "t2_date",
    "A",
    "B",
    "C1",
    "C2",
    "C",
    "phi",
    "tc_days",
    "m",
    "omega",
    "sse",
    "constraints_ok",
];

const INDICATOR_HEADER: [&str; 8] = [
    "anchor_date",
    "price",
    "pos",
    "neg",
    "b_neg_count",
    "b_neg_pass",
    "b_pos_count",
    "b_pos_pass",
];

pub fn fit_rows(table: &FitTable) -> Vec<FitRow> {
    let day = |t: usize| table.epoch + chrono::Days::new(t as u64);
    table
        .anchors
        .iter()
        .flat_map(|anchor| {
            anchor.fits.iter().map(move |f| FitRow {
                anchor_date: anchor.date,
                t1_date: day(f.t1),
                t2_date: day(f.t2),
                a: f.params.a,
                b: f.params.b,
                c1: f.params.c1,
                c2: f.params.c2,
                c: f.params.c(),
                phi: f.params.phi(),
                tc_days: f.params.tc,
                m: f.params.m,
                omega: f.params.omega,
                sse: f.sse,
                constraints_ok: f.constraints_ok,
            })
        })
        .collect()
}

/// Formats like C's `%.6g`.
pub fn format_sig6(x: f64) -> String {
    const DIGITS: i32 = 6;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    // Round first so 999999.5 is classified by its rounded exponent.
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let mantissa = trim_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn date(d: NaiveDate) -> String {
    d.format(DATE_FORMAT).to_string()
}

pub fn write_fits_csv<W: Write>(table: &FitTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(FIT_HEADER)?;
    for r in fit_rows(table) {
        let mut rec = vec![date(r.anchor_date), date(r.t1_date), date(r.t2_date)];
        rec.extend([r.a, r.b, r.c1, r.c2, r.c, r.phi, r.tc_days, r.m, r.omega, r.sse].map(format_sig6));
        rec.push(r.constraints_ok.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_fits_json<W: Write>(table: &FitTable, mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, &fit_rows(table))?;
    writer.write_all(b"\n").map_err(serde_json::Error::io)?;
    Ok(())
}

pub fn read_fits_json<R: Read>(reader: R) -> Result<Vec<FitRow>> {
    Ok(serde_json::from_reader(reader)?)
}

/// Rebuilds a fit table for `series` from stored rows. Anchors without
/// rows are kept with no fits so indicator output still covers them.
pub fn fit_table_from_rows(rows: &[FitRow], series: &LogSeries, config: &PipelineConfig) -> Result<FitTable> {
    let offset = |d: NaiveDate| {
        series
            .index_of(d)
            .filter(|&t| t < series.len())
            .ok_or_else(|| Error::InvalidSeries(format!("fit date {d} lies outside the input series")))
    };
    let first = config.initial_window_days.saturating_sub(1);
    let mut anchors: Vec<AnchorFits> = (first..series.len())
        .map(|t2| AnchorFits {
            t2,
            date: series.date_of(t2),
            price: series.price_at(t2),
            fits: Vec::new(),
        })
        .collect();
    for r in rows {
        let (t1, t2) = (offset(r.t1_date)?, offset(r.t2_date)?);
        if t1 >= t2 || !enumerate_windows(t2, config).contains(&(t1, t2)) {
            return Err(Error::InvalidSeries(format!(
                "stored window {}..{} does not match the window schedule",
                r.t1_date, r.t2_date
            )));
        }
        let anchor = &mut anchors[t2 - first];
        anchor.fits.push(WindowFit {
            t1,
            t2,
            params: LpplParams {
                a: r.a,
                b: r.b,
                c1: r.c1,
                c2: r.c2,
                tc: r.tc_days,
                m: r.m,
                omega: r.omega,
            },
            sse: r.sse,
            constraints_ok: r.constraints_ok,
            n_samples: t2 - t1 + 1,
        });
    }
    Ok(FitTable {
        asset_id: series.asset_id().to_string(),
        epoch: series.epoch(),
        anchors,
    })
}

pub fn write_indicators_csv<W: Write>(points: &[IndicatorPoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(INDICATOR_HEADER)?;
    for p in points {
        w.write_record([
            date(p.anchor_date),
            format_sig6(p.price),
            format_sig6(p.pos),
            format_sig6(p.neg),
            p.b_neg_count.to_string(),
            p.b_neg_pass.to_string(),
            p.b_pos_count.to_string(),
            p.b_pos_pass.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_indicators_json<W: Write>(points: &[IndicatorPoint], mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, points)?;
    writer.write_all(b"\n").map_err(serde_json::Error::io)?;
    Ok(())
}
