//! CSV and JSON writers. Every float is printed with 17 significant digits.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::estimate::Z95;
use crate::rng::StreamTag;

pub const CSV_HEADER: &str = "u,mean,std_error,prediction,ratio,ci_low,ci_high,method";

/// Seventeen significant digits; round-trips every f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn cell(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// One CSV line. `prediction` and `ratio` are empty for plain estimates, in
/// which case the interval is the 95% interval of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub u: f64,
    pub mean: f64,
    pub std_error: f64,
    pub prediction: Option<f64>,
    pub ratio: Option<f64>,
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: &'static str,
}

impl ComparisonRow {
    pub fn estimate(u: f64, mean: f64, std_error: f64, method: &'static str) -> Self {
        ComparisonRow {
            u,
            mean,
            std_error,
            prediction: None,
            ratio: None,
            ci_low: mean - Z95 * std_error,
            ci_high: mean + Z95 * std_error,
            method,
        }
    }

    pub fn against(u: f64, mean: f64, std_error: f64, prediction: f64, method: &'static str) -> Self {
        let (ratio, lo, hi) = if prediction > 0.0 {
            (
                mean / prediction,
                (mean - Z95 * std_error) / prediction,
                (mean + Z95 * std_error) / prediction,
            )
        } else {
            (f64::NAN, f64::NAN, f64::NAN)
        };
        ComparisonRow {
            u,
            mean,
            std_error,
            prediction: Some(prediction),
            ratio: Some(ratio),
            ci_low: lo,
            ci_high: hi,
            method,
        }
    }

    pub fn covers_one(&self) -> bool {
        self.ci_low <= 1.0 && 1.0 <= self.ci_high
    }

    fn line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            fmt_f64(self.u),
            fmt_f64(self.mean),
            fmt_f64(self.std_error),
            cell(self.prediction),
            cell(self.ratio),
            fmt_f64(self.ci_low),
            fmt_f64(self.ci_high),
            self.method
        )
    }
}

pub fn render_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.line());
        out.push('\n');
    }
    out
}

/// Parse a CSV produced by [`render_csv`]; empty cells become `None`.
pub fn parse_csv(text: &str) -> Option<Vec<Vec<Option<f64>>>> {
    let mut lines = text.lines();
    if lines.next()? != CSV_HEADER {
        return None;
    }
    lines
        .map(|l| {
            let fields: Vec<&str> = l.split(',').collect();
            if fields.len() != 8 {
                return None;
            }
            fields[..7]
                .iter()
                .map(|f| if f.is_empty() { Some(None) } else { f.parse::<f64>().ok().map(Some) })
                .collect()
        })
        .collect()
}

/// Fraction of successive ratios that move toward 1; NaN with fewer than two.
pub fn trend_statistic(ratios: &[f64]) -> f64 {
    if ratios.len() < 2 {
        return f64::NAN;
    }
    let closer = ratios
        .windows(2)
        .filter(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs())
        .count();
    closer as f64 / (ratios.len() - 1) as f64
}

/// Contiguous stream ranges `[seed, first, last]`, to keep sidecars short.
pub fn stream_ranges(tags: &[StreamTag]) -> Vec<[u64; 3]> {
    let mut out: Vec<[u64; 3]> = Vec::new();
    for t in tags {
        match out.last_mut() {
            Some(r) if r[0] == t.seed && r[2] + 1 == t.stream_index => r[2] = t.stream_index,
            _ => out.push([t.seed, t.stream_index, t.stream_index]),
        }
    }
    out
}

struct Sig17(PrettyFormatter<'static>);

impl Formatter for Sig17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with 17-digit floats; non-finite floats become `null`.
pub fn render_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}
