//! CSV ingestion against a declared schema, row filters with drop accounting,
//! and CSV output.

use std::collections::BTreeMap;
use std::path::Path;

use distreg::{Column, ColumnKind, Dataset, Factor};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropRecord {
    pub reason: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub path: String,
    pub sha256: String,
    pub rows_read: usize,
    pub rows_used: usize,
    pub drops: Vec<DropRecord>,
}

impl IngestReport {
    pub fn record_drop(&mut self, reason: impl Into<String>, rows: usize) {
        if rows > 0 {
            let reason = reason.into();
            log::info!("dropped {rows} rows: {reason}");
            self.drops.push(DropRecord { reason, rows });
        }
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "NaN" | "nan" | ".")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads the schema columns of a CSV file; other columns are ignored.
pub fn read_csv(path: &Path, schema: &BTreeMap<String, ColumnKind>) -> CliResult<(Dataset, IngestReport)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let (data, rows) = parse_csv(&bytes, schema)?;
    let report = IngestReport {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
        rows_read: rows,
        rows_used: rows,
        drops: vec![],
    };
    Ok((data, report))
}

pub fn parse_csv(bytes: &[u8], schema: &BTreeMap<String, ColumnKind>) -> CliResult<(Dataset, usize)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::data(format!("bad CSV header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    for name in schema.keys() {
        if !header.contains(name) {
            return Err(CliError::config(format!("schema column `{name}` is not in the CSV header")));
        }
    }
    // keep the file's column order
    let wanted: Vec<(usize, &String, ColumnKind)> = header
        .iter()
        .enumerate()
        .filter_map(|(i, h)| schema.get(h).map(|k| (i, h, *k)))
        .collect();
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); wanted.len()];
    let mut rows = 0;
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CliError::data(format!("CSV row {}: {e}", r + 2)))?;
        for (slot, (i, _, _)) in wanted.iter().enumerate() {
            cells[slot].push(record.get(*i).unwrap_or("").to_string());
        }
        rows += 1;
    }
    let mut data = Dataset::new();
    for ((_, name, kind), raw) in wanted.iter().zip(cells) {
        let column = match kind {
            ColumnKind::Categorical => {
                let labels: Vec<Option<&str>> = raw.iter().map(|c| (!is_missing(c)).then_some(c.as_str())).collect();
                Column::Categorical(Factor::from_labels(&labels))
            }
            ColumnKind::Numeric | ColumnKind::IntegerCount => {
                let mut v = Vec::with_capacity(raw.len());
                for (r, c) in raw.iter().enumerate() {
                    if is_missing(c) {
                        v.push(f64::NAN);
                        continue;
                    }
                    let x: f64 = c
                        .parse()
                        .ok()
                        .filter(|x: &f64| x.is_finite())
                        .ok_or_else(|| CliError::data(format!("row {}, column `{name}`: cannot parse `{c}` as a number", r + 2)))?;
                    if *kind == ColumnKind::IntegerCount && (x.fract() != 0.0 || x < 0.0) {
                        return Err(CliError::data(format!(
                            "row {}, column `{name}`: `{c}` is not a non-negative integer count",
                            r + 2
                        )));
                    }
                    v.push(x);
                }
                if *kind == ColumnKind::IntegerCount {
                    Column::Count(v)
                } else {
                    Column::Numeric(v)
                }
            }
        };
        data.insert(name.as_str(), column)?;
    }
    Ok((data, rows))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Gt,
    Ge,
    Lt,
    Le,
    Eq,
    Ne,
}

/// `column op value`, e.g. `y > 0` or `region != north`.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    pub source: String,
    column: String,
    op: Op,
    value: String,
}

impl Filter {
    pub fn parse(s: &str) -> CliResult<Self> {
        let ops = [(">=", Op::Ge), ("<=", Op::Le), ("!=", Op::Ne), ("==", Op::Eq), (">", Op::Gt), ("<", Op::Lt), ("=", Op::Eq)];
        for (tok, op) in ops {
            if let Some((l, r)) = s.split_once(tok) {
                let (column, value) = (l.trim(), r.trim());
                if column.is_empty() || value.is_empty() {
                    break;
                }
                return Ok(Filter { source: s.trim().to_string(), column: column.into(), op, value: value.into() });
            }
        }
        Err(CliError::config(format!("cannot parse filter `{s}`; expected `column op value` with op one of > >= < <= == !=")))
    }

    pub fn column(&self) -> &str {
        &self.column
    }

    fn keep_fn<'a>(&self, data: &'a Dataset) -> CliResult<Box<dyn Fn(usize) -> bool + 'a>> {
        let col = data.column(&self.column).map_err(|_| CliError::config(format!("filter `{}` names an unknown column", self.source)))?;
        Ok(match col {
            Column::Numeric(v) | Column::Count(v) => {
                let t: f64 = self
                    .value
                    .parse()
                    .map_err(|_| CliError::config(format!("filter `{}` compares a numeric column with a non-number", self.source)))?;
                let op = self.op;
                Box::new(move |r| {
                    let x = v[r];
                    !x.is_nan()
                        && match op {
                            Op::Gt => x > t,
                            Op::Ge => x >= t,
                            Op::Lt => x < t,
                            Op::Le => x <= t,
                            Op::Eq => x == t,
                            Op::Ne => x != t,
                        }
                })
            }
            Column::Categorical(f) => {
                let op = self.op;
                if !matches!(op, Op::Eq | Op::Ne) {
                    return Err(CliError::config(format!("filter `{}`: categorical columns support only == and !=", self.source)));
                }
                let value = self.value.trim_matches(|c| c == '"' || c == '\'').to_string();
                Box::new(move |r| match f.label(r) {
                    None => false,
                    Some(l) => (l == value) == (op == Op::Eq),
                })
            }
        })
    }
}

/// Applies filters in order; each dropped row is charged to the first filter
/// it fails.
pub fn apply_filters(data: &Dataset, filters: &[Filter], report: &mut IngestReport) -> CliResult<Dataset> {
    let mut current = data.clone();
    for f in filters {
        let keep: Vec<usize> = {
            let keep_row = f.keep_fn(&current)?;
            (0..current.n_rows()).filter(|&r| keep_row(r)).collect()
        };
        let dropped = current.n_rows() - keep.len();
        report.record_drop(format!("filter `{}`", f.source), dropped);
        current = current.take(&keep);
    }
    report.rows_used = current.n_rows();
    Ok(current)
}

/// Drops rows missing any of `vars`.
pub fn drop_missing(data: &Dataset, vars: &[String], report: &mut IngestReport) -> CliResult<Dataset> {
    let (out, dropped) = data.drop_missing(vars)?;
    report.record_drop(format!("missing value in one of {}", vars.join(", ")), dropped);
    report.rows_used = out.n_rows();
    Ok(out)
}

/// CSV text of a dataset. Numbers use the shortest representation that
/// parses back to the same value.
pub fn to_csv(data: &Dataset) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let map_err = |e: csv::Error| CliError::data(format!("CSV write: {e}"));
    w.write_record(data.names()).map_err(map_err)?;
    let cols: Vec<&Column> = data.columns().map(|(_, c)| c).collect();
    for r in 0..data.n_rows() {
        let row: Vec<String> = cols
            .iter()
            .map(|c| match c {
                Column::Numeric(v) | Column::Count(v) if v[r].is_nan() => String::new(),
                Column::Numeric(v) | Column::Count(v) => format!("{}", v[r]),
                Column::Categorical(f) => f.label(r).unwrap_or("").to_string(),
            })
            .collect();
        w.write_record(&row).map_err(map_err)?;
    }
    w.into_inner().map_err(|e| CliError::data(format!("CSV write: {e}")))
}

/// Schema matching the dataset's columns.
pub fn schema_of(data: &Dataset) -> BTreeMap<String, ColumnKind> {
    data.columns().map(|(n, c)| (n.to_string(), c.kind())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(pairs: &[(&str, ColumnKind)]) -> BTreeMap<String, ColumnKind> {
        pairs.iter().map(|(n, k)| (n.to_string(), *k)).collect()
    }

    #[test]
    fn zero_rows_are_dropped_and_counted() {
        let csv = b"y,g\n0,a\n1.5,b\n0,a\n2,b\n0,b\n";
        let (d, n) = parse_csv(csv, &schema(&[("y", ColumnKind::Numeric), ("g", ColumnKind::Categorical)])).unwrap();
        let mut rep = IngestReport { path: "x".into(), sha256: String::new(), rows_read: n, rows_used: n, drops: vec![] };
        let out = apply_filters(&d, &[Filter::parse("y > 0").unwrap()], &mut rep).unwrap();
        assert_eq!(out.n_rows(), 2);
        assert_eq!(rep.drops, vec![DropRecord { reason: "filter `y > 0`".into(), rows: 3 }]);
        assert_eq!(rep.rows_used, 2);
    }

    #[test]
    fn fractional_count_is_rejected() {
        let err = parse_csv(b"k\n1\n2.5\n", &schema(&[("k", ColumnKind::IntegerCount)])).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.message.contains("row 3"), "{}", err.message);
    }

    #[test]
    fn unparseable_cell_names_row_and_column() {
        let err = parse_csv(b"a,b\n1,2\n3,x\n", &schema(&[("a", ColumnKind::Numeric), ("b", ColumnKind::Numeric)])).unwrap_err();
        assert!(err.message.contains("row 3") && err.message.contains("`b`"));
    }

    #[test]
    fn schema_column_absent_from_file_is_a_config_error() {
        let err = parse_csv(b"a\n1\n", &schema(&[("z", ColumnKind::Numeric)])).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn csv_round_trip_preserves_values() {
        let csv = "x,k,g\n0.1,3,b\n-2.5e-10,0,a\n,7,\n3.141592653589793,1,b\n";
        let s = schema(&[("x", ColumnKind::Numeric), ("k", ColumnKind::IntegerCount), ("g", ColumnKind::Categorical)]);
        let (d, _) = parse_csv(csv.as_bytes(), &s).unwrap();
        let out = to_csv(&d).unwrap();
        let (d2, _) = parse_csv(&out, &s).unwrap();
        assert_eq!(d.numeric("k").unwrap(), d2.numeric("k").unwrap());
        let (a, b) = (d.numeric("x").unwrap(), d2.numeric("x").unwrap());
        assert!(a.iter().zip(b).all(|(u, v)| u == v || (u.is_nan() && v.is_nan())));
        assert_eq!(d.factor("g").unwrap(), d2.factor("g").unwrap());
        assert_eq!(out, to_csv(&d2).unwrap());
    }

    #[test]
    fn filters_parse_and_chain() {
        let (d, n) = parse_csv(b"y,g\n5,a\n20000,a\n7,b\n", &schema(&[("y", ColumnKind::Numeric), ("g", ColumnKind::Categorical)])).unwrap();
        let mut rep = IngestReport { path: String::new(), sha256: String::new(), rows_read: n, rows_used: n, drops: vec![] };
        let fs = [Filter::parse("y <= 10000").unwrap(), Filter::parse("g != b").unwrap()];
        let out = apply_filters(&d, &fs, &mut rep).unwrap();
        assert_eq!(out.numeric("y").unwrap(), &[5.0]);
        assert_eq!(rep.drops.len(), 2);
        assert!(Filter::parse("y").is_err());
        assert!(apply_filters(&d, &[Filter::parse("g > a").unwrap()], &mut rep).is_err());
    }
}
