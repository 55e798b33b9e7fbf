//! File formats: raw-record CSV, grid and curve CSV, and versioned JSON reports.
//!
//! Every floating-point value is written with 17 significant digits.

use std::io::{self, Read, Write};

use serde::ser::Serialize;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::scanner::{ContourGrid, CurvePoint, OptimalNoise, ThresholdResult};
use crate::security::{KeyRateBreakdown, ProtocolParams};
use crate::simulation::{EstimationResult, QuadratureRecord, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;
pub const RECORDS_HEADER: [&str; 4] = ["a_x", "a_p", "y_x", "y_p"];
pub const GRID_HEADER: [&str; 3] = ["kappa", "transmission", "rate"];
pub const CURVE_HEADER: [&str; 3] = ["loss_db", "transmission", "rate"];

/// `x` in scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct SigDigitsFormatter;

impl serde_json::ser::Formatter for SigDigitsFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            writer.write_all(fmt_f64(value).as_bytes())
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes `value` as compact JSON with 17-digit floats.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigitsFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Parse(e.to_string()))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_records_csv<W: Write>(out: W, records: &[QuadratureRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORDS_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([fmt_f64(r.a_x), fmt_f64(r.a_p), fmt_f64(r.y_x), fmt_f64(r.y_p)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads records written by [`write_records_csv`]. The header must match exactly.
pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<QuadratureRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers().map_err(csv_err)?;
    if header.iter().ne(RECORDS_HEADER) {
        return Err(Error::Parse(format!(
            "expected header {}, got {}",
            RECORDS_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row.map_err(csv_err)?;
        if row.len() != 4 {
            return Err(Error::Parse(format!("record {}: expected 4 fields, got {}", line + 1, row.len())));
        }
        let mut v = [0.0; 4];
        for (slot, field) in v.iter_mut().zip(row.iter()) {
            *slot = field
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("record {}: '{field}': {e}", line + 1)))?;
        }
        let rec = QuadratureRecord {
            a_x: v[0],
            a_p: v[1],
            y_x: v[2],
            y_p: v[3],
        };
        if !rec.is_finite() {
            return Err(Error::Parse(format!("record {}: non-finite value", line + 1)));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Long-form `kappa,transmission,rate` rows, κ-major.
pub fn write_grid_csv<W: Write>(out: W, grid: &ContourGrid) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GRID_HEADER).map_err(csv_err)?;
    for (kappa, row) in grid.kappa_axis.iter().zip(&grid.rates) {
        for (t, rate) in grid.t_axis.iter().zip(row) {
            w.write_record([fmt_f64(*kappa), fmt_f64(*t), fmt_f64(*rate)])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_curve_csv<W: Write>(out: W, points: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_HEADER).map_err(csv_err)?;
    for p in points {
        w.write_record([fmt_f64(p.loss_db), fmt_f64(p.transmission), fmt_f64(p.rate)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Result payloads, tagged by `kind` in JSON.
#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Report {
    Rate {
        params: ProtocolParams,
        breakdown: KeyRateBreakdown,
    },
    Threshold {
        params: ProtocolParams,
        threshold: ThresholdResult,
    },
    OptimalKappa {
        params: ProtocolParams,
        kappa_range: (f64, f64),
        optimum: OptimalNoise,
    },
    Scan(ContourGrid),
    Curve {
        params: ProtocolParams,
        points: Vec<CurvePoint>,
    },
    Simulation {
        config: RunConfig,
        estimate: EstimationResult,
        breakdown: KeyRateBreakdown,
    },
}

impl Report {
    pub fn validate(&self) -> Result<()> {
        match self {
            Report::Rate { params, breakdown } => {
                params.validate()?;
                breakdown.validate()
            }
            Report::Threshold { params, threshold } => {
                params.validate()?;
                threshold.validate()
            }
            Report::OptimalKappa {
                params,
                kappa_range,
                optimum,
            } => {
                params.validate()?;
                let (lo, hi) = *kappa_range;
                if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
                    return Err(Error::domain("kappa_range", lo, "need finite 0 <= min <= max"));
                }
                if !(lo..=hi).contains(&optimum.kappa) {
                    return Err(Error::domain("kappa", optimum.kappa, "optimum outside the searched range"));
                }
                optimum.threshold.validate()
            }
            Report::Scan(grid) => grid.validate(),
            Report::Curve { params, points } => {
                params.validate()?;
                for p in points {
                    if !(p.loss_db.is_finite() && p.loss_db >= 0.0) {
                        return Err(Error::domain("loss_db", p.loss_db, "must be finite and >= 0"));
                    }
                    if !(p.transmission > 0.0 && p.transmission <= 1.0) {
                        return Err(Error::domain("transmission", p.transmission, "must lie in (0, 1]"));
                    }
                    if !p.rate.is_finite() {
                        return Err(Error::domain("rate", p.rate, "must be finite"));
                    }
                }
                Ok(())
            }
            Report::Simulation {
                config,
                estimate,
                breakdown,
            } => {
                config.validate()?;
                estimate.validate()?;
                breakdown.validate()
            }
        }
    }
}

/// A report with its schema version, as stored on disk.
#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    #[serde(flatten)]
    pub report: Report,
}

impl ReportFile {
    pub fn new(report: Report) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            report,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_string(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.report.validate()
    }
}

/// Parses and validates a JSON report.
pub fn parse_report(json: &str) -> Result<ReportFile> {
    let file: ReportFile = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    file.validate()?;
    Ok(file)
}
