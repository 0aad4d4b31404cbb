//! In-memory typed tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    IntegerCount,
}

/// Categorical column: sorted level labels and per-row level codes
/// (`None` marks a missing value).
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    levels: Vec<String>,
    codes: Vec<Option<u32>>,
}

impl Factor {
    /// Builds a factor with levels in lexicographic order.
    pub fn from_labels<S: AsRef<str>>(labels: &[Option<S>]) -> Self {
        let mut levels: Vec<String> = labels
            .iter()
            .filter_map(|l| l.as_ref().map(|s| s.as_ref().to_string()))
            .collect();
        levels.sort();
        levels.dedup();
        let codes = labels
            .iter()
            .map(|l| {
                l.as_ref()
                    .map(|s| levels.binary_search_by(|x| x.as_str().cmp(s.as_ref())).unwrap() as u32)
            })
            .collect();
        Factor { levels, codes }
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn codes(&self) -> &[Option<u32>] {
        &self.codes
    }

    pub fn label(&self, row: usize) -> Option<&str> {
        self.codes[row].map(|c| self.levels[c as usize].as_str())
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    /// Missing values are NaN.
    Numeric(Vec<f64>),
    /// Integer-valued; missing values are NaN.
    Count(Vec<f64>),
    Categorical(Factor),
}

impl Column {
    pub fn kind(&self) -> ColumnKind {
        match self {
            Column::Numeric(_) => ColumnKind::Numeric,
            Column::Count(_) => ColumnKind::IntegerCount,
            Column::Categorical(_) => ColumnKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) | Column::Count(v) => v.len(),
            Column::Categorical(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            Column::Numeric(v) | Column::Count(v) => v[row].is_nan(),
            Column::Categorical(f) => f.codes[row].is_none(),
        }
    }

    pub fn numeric(&self) -> Option<&[f64]> {
        match self {
            Column::Numeric(v) | Column::Count(v) => Some(v),
            Column::Categorical(_) => None,
        }
    }

    fn take(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
            Column::Count(v) => Column::Count(rows.iter().map(|&r| v[r]).collect()),
            Column::Categorical(f) => Column::Categorical(Factor {
                levels: f.levels.clone(),
                codes: rows.iter().map(|&r| f.codes[r]).collect(),
            }),
        }
    }
}

/// An ordered collection of equally long named columns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Column>,
    n_rows: usize,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &Column)> {
        self.names.iter().map(String::as_str).zip(self.columns.iter())
    }

    pub fn has(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    /// Inserts or replaces a column.
    pub fn insert(&mut self, name: impl Into<String>, column: Column) -> Result<()> {
        let name = name.into();
        if !self.names.is_empty() && column.len() != self.n_rows {
            return Err(Error::invalid(format!(
                "column `{name}` has {} rows, dataset has {}",
                column.len(),
                self.n_rows
            )));
        }
        self.n_rows = column.len();
        if let Some(i) = self.names.iter().position(|n| *n == name) {
            self.columns[i] = column;
        } else {
            self.names.push(name);
            self.columns.push(column);
        }
        Ok(())
    }

    pub fn with_numeric(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        self.insert(name, Column::Numeric(values))?;
        Ok(self)
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.columns[i])
            .ok_or_else(|| Error::MissingVariable(name.to_string()))
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        self.column(name)?
            .numeric()
            .ok_or_else(|| Error::invalid(format!("column `{name}` is categorical, expected numeric")))
    }

    pub fn factor(&self, name: &str) -> Result<&Factor> {
        match self.column(name)? {
            Column::Categorical(f) => Ok(f),
            _ => Err(Error::invalid(format!("column `{name}` is not categorical"))),
        }
    }

    /// Row labels of a grouping column (categorical labels or numeric values
    /// rendered as text).
    pub fn group_labels(&self, name: &str) -> Result<Vec<String>> {
        Ok(match self.column(name)? {
            Column::Categorical(f) => (0..f.len())
                .map(|r| f.label(r).unwrap_or("").to_string())
                .collect(),
            Column::Numeric(v) | Column::Count(v) => v.iter().map(|x| format!("{x}")).collect(),
        })
    }

    /// Dense group index per row (groups numbered in order of first appearance
    /// after sorting labels) and the number of groups.
    pub fn group_index(&self, name: &str) -> Result<(Vec<usize>, usize)> {
        let labels = self.group_labels(name)?;
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        let idx = labels
            .iter()
            .map(|l| sorted.binary_search(l).unwrap())
            .collect();
        Ok((idx, sorted.len()))
    }

    /// New dataset with the given rows, in the given order (repeats allowed).
    pub fn take(&self, rows: &[usize]) -> Dataset {
        Dataset {
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c.take(rows)).collect(),
            n_rows: rows.len(),
        }
    }

    /// Drops rows with a missing value in any of `vars`; returns the filtered
    /// dataset and the number of rows removed.
    pub fn drop_missing(&self, vars: &[String]) -> Result<(Dataset, usize)> {
        let cols: Vec<&Column> = vars.iter().map(|v| self.column(v)).collect::<Result<_>>()?;
        let keep: Vec<usize> = (0..self.n_rows)
            .filter(|&r| cols.iter().all(|c| !c.is_missing(r)))
            .collect();
        let dropped = self.n_rows - keep.len();
        if dropped > 0 {
            log::info!("dropped {dropped} rows with missing values");
        }
        Ok((self.take(&keep), dropped))
    }

    /// Stable 64-bit fingerprint of the column names and kinds.
    pub fn schema_fingerprint(&self, vars: &[String]) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in vars {
            let kind = self.column(v).map(|c| c.kind() as u8).unwrap_or(255);
            for b in v.bytes().chain(std::iter::once(kind)) {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_levels_are_sorted() {
        let f = Factor::from_labels(&[Some("b"), Some("a"), None, Some("b")]);
        assert_eq!(f.levels(), &["a".to_string(), "b".to_string()]);
        assert_eq!(f.codes(), &[Some(1), Some(0), None, Some(1)]);
        assert_eq!(f.label(0), Some("b"));
    }

    #[test]
    fn insert_checks_lengths_and_missing_rows_drop() {
        let mut d = Dataset::new().with_numeric("x", vec![1.0, f64::NAN, 3.0]).unwrap();
        assert!(d.insert("y", Column::Numeric(vec![1.0])).is_err());
        d.insert("g", Column::Categorical(Factor::from_labels(&[Some("a"), Some("b"), None])))
            .unwrap();
        let (clean, dropped) = d.drop_missing(&["x".into(), "g".into()]).unwrap();
        assert_eq!(dropped, 2);
        assert_eq!(clean.numeric("x").unwrap(), &[1.0]);
        assert!(d.column("nope").is_err());
    }

    #[test]
    fn group_index_is_dense() {
        let d = Dataset::new().with_numeric("id", vec![7.0, 3.0, 7.0, 5.0]).unwrap();
        let (idx, g) = d.group_index("id").unwrap();
        assert_eq!(g, 3);
        assert_eq!(idx, vec![2, 0, 2, 1]);
    }
}
