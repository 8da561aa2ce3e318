//! CSV and JSONL table writers with shortest round-trip float formatting.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::scenario::Format;
use crate::{CliError, Result};

pub const TRAJECTORY_COLUMNS: [&str; 13] = [
    "lambda",
    "q0",
    "q1",
    "q2",
    "q3",
    "p0",
    "p1",
    "p2",
    "p3",
    "phi",
    "H",
    "tau",
    "shell_residual",
];
pub const SERIES_COLUMNS: [&str; 4] =
    ["lambda", "total_weight", "entropy", "entropy_rate_analytic"];
pub const SNAPSHOT_COLUMNS: [&str; 12] = [
    "lambda", "q0", "q1", "q2", "q3", "p0", "p1", "p2", "p3", "phi", "w", "f",
];

/// Shortest decimal that parses back to the same `f64`; non-finite values as
/// `NaN`, `inf`, `-inf`.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        ryu::Buffer::new().format_finite(v).to_string()
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn json_number(v: f64) -> String {
    if v.is_finite() {
        format_f64(v)
    } else {
        "null".to_string()
    }
}

pub struct TableWriter {
    out: BufWriter<File>,
    path: PathBuf,
    format: Format,
    columns: &'static [&'static str],
}

impl TableWriter {
    pub fn create(path: &Path, format: Format, columns: &'static [&'static str]) -> Result<Self> {
        let io = |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let mut out = BufWriter::new(File::create(path).map_err(io)?);
        if format == Format::Csv {
            writeln!(out, "{}", columns.join(",")).map_err(io)?;
        }
        Ok(Self {
            out,
            path: path.to_path_buf(),
            format,
            columns,
        })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        debug_assert_eq!(values.len(), self.columns.len());
        let line = match self.format {
            Format::Csv => values
                .iter()
                .map(|v| format_f64(*v))
                .collect::<Vec<_>>()
                .join(","),
            Format::Jsonl => {
                let fields: Vec<String> = self
                    .columns
                    .iter()
                    .zip(values)
                    .map(|(k, v)| format!("\"{k}\":{}", json_number(*v)))
                    .collect();
                format!("{{{}}}", fields.join(","))
            }
        };
        writeln!(self.out, "{line}").map_err(|source| CliError::Io {
            path: self.path.clone(),
            source,
        })
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.out.flush().map_err(|source| CliError::Io {
            path: self.path.clone(),
            source,
        })?;
        Ok(self.path)
    }
}

/// `dir/name.ext` → `dir/name.<tag>.ext`.
pub fn companion_path(path: &Path, tag: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}
