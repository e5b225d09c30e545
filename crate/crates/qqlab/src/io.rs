//! Persistence: state files, campaign manifests, count logs (CSV and
//! JSON), and matrix dumps.
//!
//! All output is byte-stable: objects serialize with sorted keys and
//! floats print with 17 significant digits, so a rerun with the same
//! inputs writes identical files. Angles are degrees in every file;
//! conversion to the radian API happens here and nowhere else.

use crate::core_state::{Freq, QuquartParams, StateError};
use crate::measurement::{CountRecord, MeasurementConfig, PolarizerSetting, RNG_ALGORITHM};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const STATE_SCHEMA_VERSION: &str = "v1";
pub const CSV_HEADER: &str = "ch1_angle_deg,ch1_filter,ch2_angle_deg,ch2_filter,outcome,count,n_total,seed";

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("unsupported schema version {found:?} (expected {STATE_SCHEMA_VERSION:?})")]
    Version { found: String },
    #[error(transparent)]
    State(#[from] StateError),
}

fn parse_err(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Parse {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Renders a float with 17 significant digits, enough to round-trip any
/// `f64` exactly while staying byte-stable across runs.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_canonical_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().unwrap()));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            // serde_json's default map is a BTreeMap, so iteration is
            // already key-sorted
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push(':');
                write_canonical_value(item, out);
            }
            out.push('}');
        }
    }
}

/// Canonical JSON: sorted keys, fixed float formatting, trailing newline.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable");
    let mut out = String::new();
    write_canonical_value(&v, &mut out);
    out.push('\n');
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    std::fs::write(path, canonical_json(value))?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.to_string()))
}

/// On-disk form of a ququart state: the four `[re, im]` amplitude pairs
/// plus a schema version tag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub version: String,
    #[serde(flatten)]
    pub params: QuquartParams,
}

pub fn write_state(path: &Path, params: &QuquartParams) -> Result<(), IoError> {
    write_json(
        path,
        &StateFile {
            version: STATE_SCHEMA_VERSION.to_string(),
            params: *params,
        },
    )
}

pub fn read_state(path: &Path) -> Result<QuquartParams, IoError> {
    let file: StateFile = read_json(path)?;
    if file.version != STATE_SCHEMA_VERSION {
        return Err(IoError::Version {
            found: file.version,
        });
    }
    Ok(file.params)
}

/// Dump of a density (or any complex) matrix: row-major `[re, im]` pairs
/// plus the label of the basis the rows refer to, one of
/// `pol_freq_product_16`, `bell_pol_4`, `hv_2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixDump {
    pub basis: String,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

pub fn matrix_dump(m: &DMatrix<Complex64>, basis: &str) -> MatrixDump {
    MatrixDump {
        basis: basis.to_string(),
        matrix: (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect(),
    }
}

/// A measurement campaign as written by users and read by `simulate`:
/// which state to drive (optional; `simulate` may also get it on the
/// command line), the planned configurations with angles in degrees, the
/// output directory, and a base seed. Each record is simulated with seed
/// `seed_base + index`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignManifest {
    #[serde(default)]
    pub state_file: Option<PathBuf>,
    pub measurement_list: Vec<MeasurementEntry>,
    pub output_dir: PathBuf,
    pub seed_base: u64,
}

/// File-facing measurement configuration; angles in degrees.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeasurementEntry {
    pub ch1_angle_deg: f64,
    #[serde(default)]
    pub ch1_filter: Option<Freq>,
    pub ch2_angle_deg: f64,
    #[serde(default)]
    pub ch2_filter: Option<Freq>,
    pub n_total: u64,
    #[serde(default)]
    pub background: f64,
}

impl MeasurementEntry {
    pub fn to_config(self, seed: u64) -> MeasurementConfig {
        MeasurementConfig {
            ch1: PolarizerSetting::new(1, self.ch1_angle_deg.to_radians(), self.ch1_filter),
            ch2: PolarizerSetting::new(2, self.ch2_angle_deg.to_radians(), self.ch2_filter),
            n_total: self.n_total,
            seed,
            background: self.background,
        }
    }

    pub fn from_config(config: &MeasurementConfig) -> Self {
        MeasurementEntry {
            ch1_angle_deg: config.ch1.angle.to_degrees(),
            ch1_filter: config.ch1.frequency_filter,
            ch2_angle_deg: config.ch2.angle.to_degrees(),
            ch2_filter: config.ch2.frequency_filter,
            n_total: config.n_total,
            background: config.background,
        }
    }
}

impl CampaignManifest {
    /// The configurations with their derived per-record seeds.
    pub fn configs(&self) -> Vec<MeasurementConfig> {
        self.measurement_list
            .iter()
            .enumerate()
            .map(|(i, e)| e.to_config(self.seed_base + i as u64))
            .collect()
    }
}

fn filter_str(f: Option<Freq>) -> &'static str {
    match f {
        None => "",
        Some(Freq::High) => "high",
        Some(Freq::Low) => "low",
    }
}

fn parse_filter(s: &str, path: &Path) -> Result<Option<Freq>, IoError> {
    match s {
        "" => Ok(None),
        "high" => Ok(Some(Freq::High)),
        "low" => Ok(Some(Freq::Low)),
        other => Err(parse_err(path, format!("bad frequency filter {other:?}"))),
    }
}

/// Writes one count record as CSV, one row per outcome in label order.
/// Sampled counts print as integers; exact-mode probabilities
/// (`n_total = 0`) keep full float precision.
pub fn write_count_record_csv(path: &Path, record: &CountRecord) -> Result<(), IoError> {
    let c = &record.config;
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (outcome, &count) in &record.counts {
        let count_str = if c.n_total == 0 {
            format_float(count)
        } else {
            format!("{}", count as u64)
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            format_float(c.ch1.angle.to_degrees()),
            filter_str(c.ch1.frequency_filter),
            format_float(c.ch2.angle.to_degrees()),
            filter_str(c.ch2.frequency_filter),
            outcome,
            count_str,
            c.n_total,
            c.seed,
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_count_record_csv(path: &Path) -> Result<CountRecord, IoError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(parse_err(path, format!("bad header {other:?}"))),
    }
    let mut config: Option<MeasurementConfig> = None;
    let mut counts = BTreeMap::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(parse_err(path, format!("line {}: expected 8 fields", lineno + 2)));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| parse_err(path, format!("line {}: {e}", lineno + 2)))
        };
        let int = |s: &str| {
            s.parse::<u64>()
                .map_err(|e| parse_err(path, format!("line {}: {e}", lineno + 2)))
        };
        let row_config = MeasurementConfig {
            ch1: PolarizerSetting::new(1, num(fields[0])?.to_radians(), parse_filter(fields[1], path)?),
            ch2: PolarizerSetting::new(2, num(fields[2])?.to_radians(), parse_filter(fields[3], path)?),
            n_total: int(fields[6])?,
            seed: int(fields[7])?,
            background: 0.0,
        };
        match &config {
            None => config = Some(row_config),
            Some(c) if *c == row_config => {}
            Some(_) => {
                return Err(parse_err(
                    path,
                    format!("line {}: configuration differs between rows", lineno + 2),
                ))
            }
        }
        counts.insert(fields[4].to_string(), num(fields[5])?);
    }
    let config = config.ok_or_else(|| parse_err(path, "no data rows"))?;
    Ok(CountRecord {
        config,
        counts,
        algorithm: RNG_ALGORITHM.to_string(),
        timestamp: String::new(),
    })
}

pub fn write_count_record_json(path: &Path, record: &CountRecord) -> Result<(), IoError> {
    write_json(path, record)
}

pub fn read_count_record_json(path: &Path) -> Result<CountRecord, IoError> {
    read_json(path)
}

/// Reads every `.csv` and `.json` count log in a directory, sorted by
/// file name for determinism.
pub fn read_count_records_dir(dir: &Path) -> Result<Vec<CountRecord>, IoError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("csv") | Some("json")
            )
        })
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            if p.extension().and_then(|e| e.to_str()) == Some("csv") {
                read_count_record_csv(p)
            } else {
                read_count_record_json(p)
            }
        })
        .collect()
}
