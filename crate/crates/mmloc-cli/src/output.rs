//! CSV tables and the run manifest.

use serde::Serialize;
use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// A labeled table; rows keep insertion order, which follows the sweep keys.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Writes `<dir>/<name>.csv` and returns its path.
    pub fn write_csv(&self, dir: &Path) -> io::Result<PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        let file = io::BufWriter::new(fs::File::create(&path)?);
        self.write_to(file).map_err(io::Error::other)?;
        Ok(path)
    }
}

/// Units of the quantities that appear in configs and tables.
pub fn units() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("config.densities", "per km (network.lambda_per_km)"),
        ("config.powers", "dBm; noise PSD in dBm/Hz"),
        ("internal.densities", "per m"),
        ("internal.powers", "W; noise PSD in W/Hz"),
        ("tables.lambda_per_m", "BS per m"),
        ("tables.angles", "rad"),
        ("tables.delays", "ms"),
        ("tables.variances", "m^2 for range, rad^2 for angle"),
        ("tables.noise_dbm", "localization noise power, dBm"),
        ("tables.threshold", "SINR threshold, linear"),
    ])
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub experiment: Option<&'a str>,
    pub arguments: Vec<String>,
    pub overrides: &'a [(String, String)],
    pub seed: u64,
    pub trials: usize,
    pub threads: usize,
    pub sweeps: serde_json::Value,
    /// Full configuration echo, re-readable with `--config`.
    pub config: String,
    pub files: Vec<String>,
    pub units: BTreeMap<&'static str, &'static str>,
    pub wall_time_s: f64,
}

impl Manifest<'_> {
    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_then_rows() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec!["1".into(), "0.5".into()]);
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,0.5\n");
    }
}
