//! Column-named numeric tables: the common output format of every run.

use crate::error::{Error, Result};

/// A table of `f64` rows with a fixed set of named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Series {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends a row; its length must match the column count.
    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::contract(format!(
                "row has {} values but the table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Appends a time-stamped record; the first column must be `t` and times
    /// must be strictly increasing.
    pub fn push_record(&mut self, t: f64, values: &[f64]) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if !(t > last[0]) {
                return Err(Error::contract(format!(
                    "record times must increase strictly ({} then {t})",
                    last[0]
                )));
            }
        }
        let mut row = Vec::with_capacity(values.len() + 1);
        row.push(t);
        row.extend_from_slice(values);
        self.push(row)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of a named column.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Largest absolute value in a named column.
    pub fn max_abs(&self, name: &str) -> Option<f64> {
        self.column(name)
            .map(|c| c.iter().fold(0.0, |m: f64, x| m.max(x.abs())))
    }
}
