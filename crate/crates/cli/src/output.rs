//! CSV and JSON writers plus the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use squeezesim::wigner::WignerGrid;

use crate::config::{Format, ScenarioConfig};
use crate::error::{CliError, CliResult};

pub const MANIFEST_NAME: &str = "manifest.txt";
pub const MANIFEST_VERSION: u32 = 1;

/// Columns of equal length under named headers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Serialize)]
struct TableJson<'a> {
    header: &'a [String],
    rows: &'a [Vec<f64>],
}

#[derive(Serialize)]
struct GridJson<'a> {
    re_axis: &'a [f64],
    im_axis: &'a [f64],
    /// `[rows, columns]`; rows run along the imaginary axis.
    shape: [usize; 2],
    values: &'a [f64],
    cell_area: f64,
}

/// Collects written files relative to the output directory.
#[derive(Debug)]
pub struct Writer {
    dir: PathBuf,
    formats: Vec<Format>,
    files: Vec<PathBuf>,
}

fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

impl Writer {
    pub fn create(dir: &Path, formats: &[Format]) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), formats: formats.to_vec(), files: Vec::new() })
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    fn write_csv(&mut self, name: &str, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> CliResult<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
        w.write_record(header).map_err(|e| csv_error(&path, e))?;
        for row in rows {
            w.write_record(&row).map_err(|e| csv_error(&path, e))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.files.push(PathBuf::from(name));
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let path = self.dir.join(name);
        let text = serde_json::to_string(value).map_err(|e| CliError::io(&path, e.into()))?;
        fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        self.files.push(PathBuf::from(name));
        Ok(())
    }

    /// Writes `<stem>.csv` and/or `<stem>.json`.
    pub fn table(&mut self, stem: &str, table: &Table) -> CliResult<()> {
        if table.is_empty() {
            return Err(CliError::EmptyResults(format!("{stem}: no rows to write")));
        }
        if self.wants(Format::Csv) {
            self.write_csv(
                &format!("{stem}.csv"),
                &table.header,
                table.rows.iter().map(|r| r.iter().map(|&v| fmt_value(v)).collect()),
            )?;
        }
        if self.wants(Format::Json) {
            self.write_json(&format!("{stem}.json"), &TableJson { header: &table.header, rows: &table.rows })?;
        }
        Ok(())
    }

    /// JSON with axes and row-major values; CSV in long format `re, im, W`.
    pub fn grid(&mut self, stem: &str, grid: &WignerGrid) -> CliResult<()> {
        if grid.values.is_empty() {
            return Err(CliError::EmptyResults(format!("{stem}: empty grid")));
        }
        if self.wants(Format::Json) {
            let json = GridJson {
                re_axis: &grid.re_axis,
                im_axis: &grid.im_axis,
                shape: [grid.im_axis.len(), grid.re_axis.len()],
                values: &grid.values,
                cell_area: grid.cell_area,
            };
            self.write_json(&format!("{stem}.json"), &json)?;
        }
        if self.wants(Format::Csv) {
            let header = ["re".to_string(), "im".to_string(), "W".to_string()];
            let n_re = grid.re_axis.len();
            let rows = grid.values.iter().enumerate().map(|(k, &w)| {
                vec![fmt_value(grid.re_axis[k % n_re]), fmt_value(grid.im_axis[k / n_re]), fmt_value(w)]
            });
            self.write_csv(&format!("{stem}.csv"), &header, rows)?;
        }
        Ok(())
    }

    /// Writes `manifest.txt` in the configuration format and returns its
    /// path. The configuration echo parses back to the same settings.
    pub fn finish(self, cfg: &ScenarioConfig) -> CliResult<PathBuf> {
        if self.files.is_empty() {
            return Err(CliError::EmptyResults(format!("scenario {} produced no output", cfg.scenario)));
        }
        let mut text = format!("manifest.version = {MANIFEST_VERSION}\n");
        for (k, f) in self.files.iter().enumerate() {
            text.push_str(&format!("manifest.file.{k} = {}\n", f.display()));
        }
        for (key, value) in cfg.to_pairs() {
            text.push_str(&format!("{key} = {value}\n"));
        }
        let path = self.dir.join(MANIFEST_NAME);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let io = match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => std::io::Error::other(format!("{other:?}")),
    };
    CliError::io(path, io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioId;

    #[test]
    fn empty_table_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = Writer::create(dir.path(), &[Format::Csv]).unwrap();
        let err = w.table("x", &Table::new(["a"])).unwrap_err();
        assert_eq!(err.kind(), "empty-results");
        let cfg = ScenarioConfig::new(ScenarioId::Custom);
        assert_eq!(w.finish(&cfg).unwrap_err().kind(), "empty-results");
    }

    #[test]
    fn writes_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = Writer::create(dir.path(), &[Format::Csv, Format::Json]).unwrap();
        let mut t = Table::new(["t", "R"]);
        t.push(vec![0.1, 1.0 / 3.0]);
        w.table("series", &t).unwrap();
        assert_eq!(w.files(), [PathBuf::from("series.csv"), PathBuf::from("series.json")]);
        let text = fs::read_to_string(dir.path().join("series.csv")).unwrap();
        let line = text.lines().nth(1).unwrap();
        let back: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }
}
