use std::fs;
use std::path::{Path, PathBuf};

use randwalk::Result;

/// Version tag written in the first line of every CSV.
pub const CSV_VERSION: u32 = 1;

/// First line of a CSV of the given kind.
pub fn csv_header_line(kind: &str) -> String {
    format!("# randwalk-csv v{CSV_VERSION} {kind}")
}

/// A CSV table held in memory until written.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub kind: &'static str,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(kind: &'static str, columns: &'static [&'static str]) -> Self {
        Table { kind, columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = format!("{}\n", csv_header_line(self.kind)).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(self.columns).map_err(csv_err)?;
            for r in &self.rows {
                w.write_record(r).map_err(csv_err)?;
            }
            w.flush()?;
        }
        Ok(buf)
    }
}

pub(crate) fn csv_err(e: csv::Error) -> randwalk::Error {
    randwalk::Error::Io(e.to_string())
}

/// Files written by one run; removed again unless committed.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutputSet { dir: dir.to_path_buf(), written: Vec::new(), committed: false })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        // record first so that a failed write is cleaned up too
        self.written.push(path.clone());
        fs::write(&path, bytes)?;
        Ok(path)
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

pub fn fmt_f(x: f64) -> String {
    format!("{x:?}")
}
