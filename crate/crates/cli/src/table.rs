//! CSV tables: a comment line, a header, and rows written in one go.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::Result;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    /// Not applicable for this row; written as an empty field.
    Missing,
}

impl Cell {
    /// Floats use 17 significant digits so that parsing round-trips exactly.
    /// Infinities are clamped to the largest finite value.
    pub fn render(&self) -> String {
        match self {
            Cell::Float(x) => {
                assert!(!x.is_nan(), "NaN reached a CSV cell");
                format!("{:.16e}", x.clamp(-f64::MAX, f64::MAX))
            }
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Float)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comment: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(comment: String, columns: &[&'static str]) -> Self {
        Self { comment, columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.comment);
        out.push('\n');
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Path of the in-progress file for `path`.
pub fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".partial");
    path.with_file_name(name)
}

/// Start an output: the comment line goes into `<path>.partial`, which stays
/// behind if the run is interrupted.
pub fn begin(path: &Path, comment: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(partial_path(path), format!("{comment}\n"))?;
    Ok(())
}

/// Write the finished table and move it into place.
pub fn finish(path: &Path, table: &Table) -> Result<()> {
    let partial = partial_path(path);
    let mut f = fs::File::create(&partial)?;
    f.write_all(table.render().as_bytes())?;
    f.sync_all()?;
    fs::rename(&partial, path)?;
    Ok(())
}

/// Minimal reader for tables written by [`Table::render`].
pub fn parse(text: &str) -> Option<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next()?.split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    Some((header, rows))
}
