//! Static SVG chart: log-price on the left axis, positive (red) and negative
//! (green) bubble indicators on a right-hand `[0, 1]` axis.

use std::fmt::Write;

use chrono::NaiveDate;
use lppl_bubble::{IndicatorPoint, LogSeries};

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 380.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 60.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const DATE_TICKS: usize = 6;

struct Frame {
    first: NaiveDate,
    span_days: f64,
    log_lo: f64,
    log_hi: f64,
}

impl Frame {
    fn plot_w() -> f64 {
        WIDTH - LEFT - RIGHT
    }

    fn plot_h() -> f64 {
        HEIGHT - TOP - BOTTOM
    }

    fn x(&self, date: NaiveDate) -> f64 {
        LEFT + (date - self.first).num_days() as f64 / self.span_days * Self::plot_w()
    }

    fn y_log(&self, v: f64) -> f64 {
        TOP + (self.log_hi - v) / (self.log_hi - self.log_lo) * Self::plot_h()
    }

    fn y_unit(&self, v: f64) -> f64 {
        TOP + (1.0 - v) * Self::plot_h()
    }
}

fn polyline(out: &mut String, points: impl Iterator<Item = (f64, f64)>, color: &str, width: f64) {
    let coords: Vec<String> = points.map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    if coords.is_empty() {
        return;
    }
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{}"/>"#,
        coords.join(" ")
    );
}

/// Renders the chart for one asset. With no indicator points the traces
/// are drawn flat at zero across the price history.
pub fn render(title: &str, series: &LogSeries, points: &[IndicatorPoint]) -> String {
    let logs = series.log_prices();
    let (mut lo, mut hi) = logs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi - lo < 1e-9 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    let first = series.epoch();
    let last = series.date_of(series.len().saturating_sub(1));
    let frame = Frame {
        first,
        span_days: ((last - first).num_days() as f64).max(1.0),
        log_lo: lo - pad,
        log_hi: hi + pad,
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="22" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        out,
        r##"<rect x="{x0}" y="{y0}" width="{:.1}" height="{:.1}" fill="none" stroke="#444"/>"##,
        x1 - x0,
        y1 - y0
    );

    for i in 0..=4 {
        let frac = i as f64 / 4.0;
        let v = frame.log_lo + frac * (frame.log_hi - frame.log_lo);
        let y = frame.y_log(v);
        let _ = writeln!(
            out,
            r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#ddd"/><text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"##,
            x0 - 6.0,
            y + 4.0,
            price_label(v.exp())
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.2}">{frac:.2}</text>"#,
            x1 + 6.0,
            frame.y_unit(frac) + 4.0
        );
    }
    for i in 0..DATE_TICKS {
        let offset = (frame.span_days * i as f64 / (DATE_TICKS - 1) as f64).round() as u64;
        let date = first + chrono::Days::new(offset);
        let x = frame.x(date);
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.1}" text-anchor="middle">{}</text>"#,
            y1 + 18.0,
            date.format("%Y-%m-%d")
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" transform="rotate(-90 16 {:.1})" text-anchor="middle">price (USD, log scale)</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" transform="rotate(90 {:.1} {:.1})" text-anchor="middle">bubble indicator</text>"#,
        WIDTH - 14.0,
        HEIGHT / 2.0,
        WIDTH - 14.0,
        HEIGHT / 2.0
    );

    polyline(
        &mut out,
        series.t_index().map(|t| (frame.x(series.date_of(t)), frame.y_log(logs[t]))),
        "black",
        1.2,
    );
    if points.is_empty() {
        let flat = [first, last].map(|d| (frame.x(d), frame.y_unit(0.0)));
        polyline(&mut out, flat.into_iter(), "red", 1.0);
        polyline(&mut out, flat.into_iter(), "green", 1.0);
    } else {
        polyline(
            &mut out,
            points.iter().map(|p| (frame.x(p.anchor_date), frame.y_unit(p.pos))),
            "red",
            1.0,
        );
        polyline(
            &mut out,
            points.iter().map(|p| (frame.x(p.anchor_date), frame.y_unit(p.neg))),
            "green",
            1.0,
        );
    }

    let legend_y = y0 + 14.0;
    for (i, (label, color)) in [("log price", "black"), ("pos", "red"), ("neg", "green")].iter().enumerate() {
        let lx = x0 + 10.0 + 90.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{legend_y:.1}" x2="{:.1}" y2="{legend_y:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{label}</text>"#,
            lx + 20.0,
            lx + 25.0,
            legend_y + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}

fn price_label(v: f64) -> String {
    if v >= 100.0 {
        format!("{v:.0}")
    } else if v >= 1.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.3e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
