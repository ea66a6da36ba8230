//! Output directory layout, CSV tables and ingestion of external series.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{sha256_hex, RunConfig};
use crate::error::{CliError, CliResult};

pub const CONFIG_FILE: &str = "config.toml";
pub const SUMMARY_FILE: &str = "summary.toml";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const META_SUFFIX: &str = ".meta.toml";

#[derive(Debug, Clone, Copy)]
pub struct Column {
    pub name: &'static str,
    pub unit: &'static str,
    pub meaning: &'static str,
}

const fn col(name: &'static str, unit: &'static str, meaning: &'static str) -> Column {
    Column { name, unit, meaning }
}

/// A CSV layout. Header names are a stable interface.
#[derive(Debug, Clone, Copy)]
pub struct Table {
    pub file: &'static str,
    pub description: &'static str,
    pub columns: &'static [Column],
}

impl Table {
    pub fn header(&self) -> Vec<&'static str> {
        self.columns.iter().map(|c| c.name).collect()
    }
}

const SCATTER_COLUMNS: &[Column] = &[
    col("x_lo", "x", "lower bin edge"),
    col("x_hi", "x", "upper bin edge"),
    col("x_center", "x", "geometric bin center"),
    col("mean", "y", "mean of y in the bin"),
    col("std", "y", "standard deviation of y in the bin"),
    col("count", "1", "bursts in the bin"),
];

pub mod tables {
    use super::*;

    pub const PATH: Table = Table {
        file: "path_NNN.csv",
        description: "one realization, NNN = stream index",
        columns: &[
            col("t_s", "scaled time", "sample time, t_s = sigma_t_sq * seconds"),
            col("x", "state", "process value"),
        ],
    };
    pub const BURSTS: Table = Table {
        file: "bursts.csv",
        description: "complete excursions above the threshold",
        columns: &[
            col("realization", "1", "stream index or input file index"),
            col("t_start_s", "scaled time", "interpolated up-crossing"),
            col("t_end_s", "scaled time", "interpolated down-crossing"),
            col("duration_s", "scaled time", "t_end_s - t_start_s"),
            col("peak", "state", "largest sample in the burst"),
            col("size", "state * scaled time", "area above the threshold"),
        ],
    };
    pub const DURATION_PDF: Table = Table {
        file: "duration_pdf.csv",
        description: "log-binned duration density of bursts with duration >= t_min, with analytic overlay at bin centers (empty cells when no overlay)",
        columns: &[
            col("t_lo_s", "scaled time", "lower bin edge"),
            col("t_hi_s", "scaled time", "upper bin edge"),
            col("t_center_s", "scaled time", "geometric bin center"),
            col("count", "1", "bursts in the bin"),
            col("density", "1/scaled time", "empirical density"),
            col("p_series", "1/scaled time", "series density at the bin center"),
            col("p_closed", "1/scaled time", "closed-form density at the bin center"),
        ],
    };
    pub const PEAK_VS_DURATION: Table = Table {
        file: "scatter_peak_vs_duration.csv",
        description: "x = duration (scaled time), y = peak - threshold",
        columns: SCATTER_COLUMNS,
    };
    pub const SIZE_VS_DURATION: Table = Table {
        file: "scatter_size_vs_duration.csv",
        description: "x = duration (scaled time), y = size",
        columns: SCATTER_COLUMNS,
    };
    pub const SIZE_VS_PEAK: Table = Table {
        file: "scatter_size_vs_peak.csv",
        description: "x = peak - threshold, y = size",
        columns: SCATTER_COLUMNS,
    };
    pub const PSD: Table = Table {
        file: "psd.csv",
        description: "Welch spectrum of the zero-order-hold resampled signal, averaged over realizations",
        columns: &[
            col("f", "1/scaled time", "frequency"),
            col("psd", "state^2 * scaled time", "one-sided power spectral density"),
        ],
    };
    pub const BURST_PDF: Table = Table {
        file: "burst_pdf.csv",
        description: "analytic burst-duration densities normalized on [t_min, inf)",
        columns: &[
            col("t_s", "scaled time", "duration"),
            col("p_series", "1/scaled time", "eigenfunction series"),
            col("p_closed", "1/scaled time", "closed-form approximation"),
        ],
    };
    pub const RETURNS: Table = Table {
        file: "returns.csv",
        description: "one return per sampling interval",
        columns: &[
            col("t_seconds", "s", "start of the sampling interval"),
            col("r", "1", "return"),
            col("r0", "1", "volatility scale of the q-Gaussian draw"),
        ],
    };
    pub const SMOOTHED: Table = Table {
        file: "abs_r_smoothed.csv",
        description: "|r| scaled to unit mean, trailing moving average over filter_window",
        columns: &[
            col("t_seconds", "s", "last sample in the averaging window"),
            col("abs_r_smoothed", "1", "smoothed absolute return"),
        ],
    };
    pub const RETURN_BURSTS: Table = Table {
        file: "return_bursts.csv",
        description: "excursions of the smoothed |r| above the threshold",
        columns: &[
            col("t_start_seconds", "s", "interpolated up-crossing"),
            col("t_end_seconds", "s", "interpolated down-crossing"),
            col("duration_seconds", "s", "burst duration"),
            col("peak", "1", "largest smoothed value"),
            col("size", "s", "area above the threshold"),
        ],
    };
    pub const RETURN_DURATION_PDF: Table = Table {
        file: "return_duration_pdf.csv",
        description: "log-binned density of return burst durations",
        columns: &[
            col("t_lo_seconds", "s", "lower bin edge"),
            col("t_hi_seconds", "s", "upper bin edge"),
            col("t_center_seconds", "s", "geometric bin center"),
            col("count", "1", "bursts in the bin"),
            col("density", "1/s", "empirical density"),
        ],
    };
}

#[derive(Serialize)]
struct ColumnMeta<'a> {
    name: &'a str,
    unit: &'a str,
    meaning: &'a str,
}

#[derive(Serialize)]
struct FileMeta<'a, E: Serialize> {
    file: &'a str,
    config_hash: &'a str,
    description: &'a str,
    columns: Vec<ColumnMeta<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    run: Option<E>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub files: Vec<Entry>,
    /// External inputs read by the run, by absolute path.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<Entry>,
}

impl Manifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

fn write_toml<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = toml::to_string(value).map_err(|e| CliError::Numerical(format!("cannot serialize {}: {e}", path.display())))?;
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes the files of one run and records them in the manifest.
pub struct Artifacts {
    dir: PathBuf,
    config_hash: String,
    files: Vec<String>,
    inputs: Vec<Entry>,
}

impl Artifacts {
    /// Creates `dir` and echoes the canonical config into it.
    pub fn create(dir: &Path, cfg: &RunConfig) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let canonical = cfg.canonical()?;
        let path = dir.join(CONFIG_FILE);
        std::fs::write(&path, &canonical).map_err(|e| CliError::io(&path, e))?;
        Ok(Self { dir: dir.to_path_buf(), config_hash: sha256_hex(canonical.as_bytes()), files: vec![CONFIG_FILE.into()], inputs: Vec::new() })
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn record_input(&mut self, path: &Path) -> CliResult<()> {
        self.inputs.push(Entry { name: path.display().to_string(), sha256: sha256_file(path)? });
        Ok(())
    }

    /// Opens `name` with the header of `table` and writes its sidecar.
    pub fn table<E: Serialize>(&mut self, name: &str, table: &Table, run: Option<E>) -> CliResult<TableWriter> {
        self.rewrite_meta(name, table, run)?;
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(table.header()).map_err(|e| csv_err(&path, e))?;
        self.files.push(name.to_string());
        self.files.push(format!("{name}{META_SUFFIX}"));
        Ok(TableWriter { w, path })
    }

    /// Writes the sidecar `<name>.meta.toml`, replacing any earlier one.
    pub fn rewrite_meta<E: Serialize>(&self, name: &str, table: &Table, run: Option<E>) -> CliResult<()> {
        let meta = FileMeta {
            file: name,
            config_hash: &self.config_hash,
            description: table.description,
            columns: table.columns.iter().map(|c| ColumnMeta { name: c.name, unit: c.unit, meaning: c.meaning }).collect(),
            run,
        };
        write_toml(&self.dir.join(format!("{name}{META_SUFFIX}")), &meta)
    }

    /// Writes `summary.toml` and the manifest; returns the manifest.
    pub fn finish<S: Serialize>(mut self, summary: &S) -> CliResult<Manifest> {
        write_toml(&self.dir.join(SUMMARY_FILE), summary)?;
        self.files.push(SUMMARY_FILE.into());
        self.files.sort();
        let files = self
            .files
            .iter()
            .map(|name| Ok(Entry { name: name.clone(), sha256: sha256_file(&self.dir.join(name))? }))
            .collect::<CliResult<Vec<_>>>()?;
        let manifest = Manifest { config_hash: self.config_hash, files, inputs: self.inputs };
        write_toml(&self.dir.join(MANIFEST_FILE), &manifest)?;
        Ok(manifest)
    }
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Numerical(format!("{}: {other:?}", path.display())),
    }
}

pub struct TableWriter {
    w: csv::Writer<BufWriter<File>>,
    path: PathBuf,
}

impl TableWriter {
    pub fn row<S: Serialize>(&mut self, record: S) -> CliResult<()> {
        self.w.serialize(record).map_err(|e| csv_err(&self.path, e))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.w.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

/// Time column convention of an input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    Scaled,
    Seconds,
}

/// A series read from disk, with times in scaled units.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub unit: TimeUnit,
}

/// Reads a two-column series. The header names the time unit: `t_s` or `t`
/// for scaled time, `t_seconds` for seconds, converted with `sigma_t_sq`.
/// Repeated times are allowed: the adaptive step can underflow against `t`
/// at very large `x`.
pub fn read_series(path: &Path, sigma_t_sq: f64) -> CliResult<Series> {
    let parse_err = |line: u64, msg: String| CliError::Parse { path: path.to_path_buf(), line, msg };
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = rdr.headers().map_err(|e| read_err(path, e))?.clone();
    let unit = match (header.get(0), header.get(1), header.len()) {
        (Some("t_s" | "t"), Some("x"), 2) => TimeUnit::Scaled,
        (Some("t_seconds"), Some("x"), 2) => TimeUnit::Seconds,
        _ => {
            let got: Vec<&str> = header.iter().collect();
            return Err(parse_err(1, format!("expected header `t_s,x`, `t,x` or `t_seconds,x`, found `{}`", got.join(","))));
        }
    };
    let scale = match unit {
        TimeUnit::Scaled => 1.0,
        TimeUnit::Seconds => sigma_t_sq,
    };
    let (mut t, mut x) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| read_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize, name: &str| -> CliResult<f64> {
            let field = &rec[i];
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(parse_err(line, format!("{name} = `{field}` is not a finite number"))),
            }
        };
        let (ti, xi) = (num(0, "time")? * scale, num(1, "x")?);
        if let Some(&prev) = t.last() {
            if ti < prev {
                return Err(parse_err(line, "times must not decrease".into()));
            }
        }
        t.push(ti);
        x.push(xi);
    }
    if t.len() < 2 {
        return Err(parse_err(1, "need at least two samples".into()));
    }
    Ok(Series { t, x, unit })
}

fn read_err(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => CliError::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("expected {expected_len} fields, found {len}"),
        },
        csv::ErrorKind::Utf8 { err, .. } => CliError::Parse { path: path.to_path_buf(), line, msg: err.to_string() },
        other => CliError::Parse { path: path.to_path_buf(), line, msg: format!("{other:?}") },
    }
}
