//! Bit-stable CSV and JSON writers.
//!
//! Floats are written with 17 significant digits, which round-trips every
//! `f64`. Every file starts with the configuration that produced it.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliResult;

/// Scientific notation with 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvOutput {
    writer: csv::Writer<File>,
    path: PathBuf,
}

impl CsvOutput {
    /// Creates `dir/name`, writes the `# config:` line and the header row.
    pub fn create(dir: &Path, name: &str, config_json: &str, header: &[&str]) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        let mut file = File::create(&path)?;
        writeln!(file, "# config: {config_json}")?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(header)?;
        Ok(CsvOutput { writer, path })
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<PathBuf> {
        self.writer.flush()?;
        Ok(self.path)
    }
}

/// Pretty JSON with a trailing newline; field order follows the types.
pub fn json_string<T: Serialize>(value: &T) -> CliResult<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<(PathBuf, String)> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let text = json_string(value)?;
    fs::write(&path, &text)?;
    Ok((path, text))
}
