//! Long-format metric rows, written as CSV or JSON lines.

use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

pub const CSV_HEADER: &str = "study,method,setting,alpha,seed,iter,metric,value";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[serde(alias = "json-lines")]
    Jsonl,
}

impl Format {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "csv" => Some(Format::Csv),
            "jsonl" | "json-lines" => Some(Format::Jsonl),
            _ => None,
        }
    }
}

/// A seed, or `*` for rows summarizing all seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedField {
    Seed(u64),
    All,
}

impl fmt::Display for SeedField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedField::Seed(s) => write!(f, "{s}"),
            SeedField::All => f.write_str("*"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub study: &'static str,
    pub method: String,
    pub setting: String,
    pub alpha: f64,
    pub seed: SeedField,
    pub iter: usize,
    pub metric: &'static str,
    pub value: f64,
}

/// Shortest decimal that round-trips to the same `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Serialize)]
struct JsonRow<'a> {
    study: &'a str,
    method: &'a str,
    setting: &'a str,
    alpha: f64,
    seed: String,
    iter: usize,
    metric: &'a str,
    value: Option<f64>,
}

pub fn write_rows<W: Write>(out: &mut W, rows: &[Row], format: Format) -> io::Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for r in rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    r.study,
                    r.method,
                    r.setting,
                    format_float(r.alpha),
                    r.seed,
                    r.iter,
                    r.metric,
                    format_float(r.value)
                )?;
            }
        }
        Format::Jsonl => {
            for r in rows {
                let json = JsonRow {
                    study: r.study,
                    method: &r.method,
                    setting: &r.setting,
                    alpha: r.alpha,
                    seed: r.seed.to_string(),
                    iter: r.iter,
                    metric: r.metric,
                    value: r.value.is_finite().then_some(r.value),
                };
                serde_json::to_writer(&mut *out, &json)?;
                writeln!(out)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(value: f64) -> Row {
        Row {
            study: "estimate",
            method: "vclip".into(),
            setting: "fixed".into(),
            alpha: 1.1,
            seed: SeedField::Seed(3),
            iter: 7,
            metric: "rel_error",
            value,
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_rows(
            &mut buf,
            &[
                row(0.1),
                Row {
                    seed: SeedField::All,
                    ..row(1e-300)
                },
            ],
            Format::Csv,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "study,method,setting,alpha,seed,iter,metric,value"
        );
        assert_eq!(lines[1], "estimate,vclip,fixed,1.1,3,7,rel_error,0.1");
        assert_eq!(lines[2], "estimate,vclip,fixed,1.1,*,7,rel_error,1e-300");
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 6.02e23, -0.0] {
            assert_eq!(
                format_float(x).parse::<f64>().unwrap().to_bits(),
                x.to_bits()
            );
        }
        assert_eq!(format_float(f64::INFINITY), "inf");
    }

    #[test]
    fn json_lines_layout() {
        let mut buf = Vec::new();
        write_rows(&mut buf, &[row(0.5), row(f64::NAN)], Format::Jsonl).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["method"], "vclip");
        assert_eq!(first["value"], 0.5);
        assert_eq!(first["seed"], "3");
        let second: serde_json::Value = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
        assert!(second["value"].is_null());
    }
}
