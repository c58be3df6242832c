//! File writers. Floats in CSV files carry 17 significant digits so that
//! regression files compare byte for byte.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub fn create(path: &Path, header: &[String]) -> CliResult<Self> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut out = Self {
            path: path.to_path_buf(),
            writer: csv::Writer::from_writer(BufWriter::new(file)),
        };
        out.row(header)?;
        Ok(out)
    }

    pub fn row<S: AsRef<[u8]>>(&mut self, fields: &[S]) -> CliResult<()> {
        self.writer.write_record(fields).map_err(|e| self.csv_error(e))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))
    }

    fn csv_error(&self, e: csv::Error) -> CliError {
        CliError::io(&self.path, std::io::Error::other(e))
    }
}

/// Column names `{prefix}1 .. {prefix}d` for wavevector components.
pub fn axis_columns(prefix: &str, dim: usize) -> Vec<String> {
    (1..=dim).map(|a| format!("{prefix}{a}")).collect()
}

pub fn ints(v: &[i64]) -> impl Iterator<Item = String> + '_ {
    v.iter().map(i64::to_string)
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = toml::to_string(value)
        .map_err(|e| CliError::io(path, std::io::Error::other(e)))?;
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}
