//! Tabular results and CSV export.
//!
//! Every table starts with a `# units:` comment line naming the unit of each
//! column, then the column-name header, then the data rows. Numeric cells are
//! written with the shortest representation that round-trips, so identical
//! inputs always produce byte-identical files.

use std::io::Write;

use crate::error::{Error, Result};

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    /// Rendered as an empty field.
    Missing,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Cell {
        match v {
            Some(x) => Cell::Num(x),
            None => Cell::Missing,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:?}"),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// Column name plus unit label.
#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Self {
        Column {
            name: name.to_string(),
            unit: unit.to_string(),
        }
    }
}

/// Rectangular result table.
#[derive(Debug, Clone)]
pub struct ResultTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(columns: Vec<Column>) -> Self {
        ResultTable {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width must match the column count"
        );
        self.rows.push(row);
    }

    /// CSV with the mandatory `# units:` header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# units: ");
        out.push_str(
            &self
                .columns
                .iter()
                .map(|c| c.unit.as_str())
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
        out.push_str(
            &self
                .columns
                .iter()
                .map(|c| c.name.as_str())
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
        for row in &self.rows {
            let line = row.iter().map(Cell::render).collect::<Vec<_>>().join(",");
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())
            .map_err(|e| Error::Io(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = ResultTable::new(vec![
            Column::new("frequency", "Hz"),
            Column::new("amplitude", "m"),
            Column::new("note", "-"),
        ]);
        t.push_row(vec![Cell::Num(1000.0), Cell::Num(1.25e-6), "ok".into()]);
        t.push_row(vec![Cell::Num(2000.0), Cell::Missing, Cell::Text(String::new())]);
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# units: Hz,m,-");
        assert_eq!(lines[1], "frequency,amplitude,note");
        assert_eq!(lines[2], "1000.0,1.25e-6,ok");
        assert_eq!(lines[3], "2000.0,,");
    }

    #[test]
    fn numeric_cells_round_trip() {
        let values = [1007.5944, 6.99e-8, 0.15360, 2.0 / 3.0, 1e300];
        for v in values {
            let rendered = Cell::Num(v).render();
            let back: f64 = rendered.parse().unwrap();
            assert_eq!(back, v, "render {rendered}");
        }
    }

    #[test]
    #[should_panic]
    fn ragged_row_panics() {
        let mut t = ResultTable::new(vec![Column::new("a", "-")]);
        t.push_row(vec![Cell::Num(1.0), Cell::Num(2.0)]);
    }
}
