//! Numeric CSV tables: one header row, every value written with 17
//! significant digits so a parse recovers the exact double.

use std::fmt::Write as _;

use crate::error::{LabError, LabResult};

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// File name, relative to the run's output directory.
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width of {}", self.name);
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                write!(s, "{v:.16e}").expect("writing to a String");
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(name: &str, text: &str) -> LabResult<Table> {
        let err = |reason: String| LabError::Table { name: name.to_string(), reason };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| err("empty file".into()))?;
        let mut table = Table::new(name, &header.split(',').collect::<Vec<_>>());
        for (n, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| err(format!("row {}: {e}", n + 1))))
                .collect::<LabResult<Vec<f64>>>()?;
            if row.len() != table.columns.len() {
                return Err(err(format!("row {} has {} fields, header has {}", n + 1, row.len(), table.columns.len())));
            }
            table.rows.push(row);
        }
        Ok(table)
    }
}
