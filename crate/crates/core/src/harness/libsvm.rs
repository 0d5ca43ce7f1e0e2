//! Reading and writing the LIBSVM sparse text format
//! (`label idx:val idx:val …`, indices 1-based and increasing).

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::objectives::{AtomMatrix, Column};

/// A parsed LIBSVM file, one sparse row per example.
#[derive(Clone, Debug, PartialEq)]
pub struct LibsvmData {
    pub labels: Vec<f64>,
    /// 0-based `(feature, value)` pairs per example.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub n_features: usize,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses LIBSVM text. `n_features` pads the feature count when trailing
/// features never occur; it is an error if a row exceeds it.
pub fn read_libsvm(reader: impl BufRead, n_features: Option<usize>) -> Result<LibsvmData> {
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    let mut max_feature = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut fields = body.split_whitespace();
        let label_text = fields.next().expect("nonempty line has a field");
        let label: f64 = label_text
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad label {label_text:?}")))?;
        let mut row = Vec::new();
        let mut last = 0;
        for field in fields {
            let (idx, val) = field
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected idx:val, got {field:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad index {idx:?}")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad value {val:?}")))?;
            if idx == 0 {
                return Err(parse_err(lineno, "indices are 1-based"));
            }
            if idx <= last {
                return Err(parse_err(lineno, format!("index {idx} does not increase")));
            }
            if !val.is_finite() {
                return Err(parse_err(
                    lineno,
                    format!("non-finite value at index {idx}"),
                ));
            }
            last = idx;
            row.push((idx - 1, val));
        }
        max_feature = max_feature.max(last);
        labels.push(label);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(0, "no examples"));
    }
    let n_features = match n_features {
        Some(n) if n < max_feature => {
            return Err(parse_err(
                0,
                format!("feature {max_feature} exceeds the declared {n}"),
            ))
        }
        Some(n) => n,
        None => max_feature.max(1),
    };
    Ok(LibsvmData {
        labels,
        rows,
        n_features,
    })
}

impl LibsvmData {
    pub fn n_examples(&self) -> usize {
        self.rows.len()
    }

    /// One labelled atom per example (the kernel SVM layout).
    pub fn into_examples(self) -> Result<AtomMatrix> {
        let dim = self.n_features;
        let columns = self
            .rows
            .into_iter()
            .map(|r| Column::from_pairs(dim, r))
            .collect::<Result<Vec<_>>>()?;
        AtomMatrix::new(dim, columns)?.with_labels(self.labels)
    }

    /// One atom per feature, with the labels as the regression target
    /// (the LASSO layout).
    pub fn into_features(self) -> Result<(AtomMatrix, Vec<f64>)> {
        let d = self.rows.len();
        let mut per_feature: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n_features];
        for (i, row) in self.rows.iter().enumerate() {
            for &(f, v) in row {
                per_feature[f].push((i, v));
            }
        }
        let columns = per_feature
            .into_iter()
            .map(|p| Column::from_pairs(d, p))
            .collect::<Result<Vec<_>>>()?;
        Ok((AtomMatrix::new(d, columns)?, self.labels))
    }
}

/// Loads a LIBSVM file; `transpose` selects the feature-per-atom layout and
/// returns the labels separately, otherwise atoms are labelled examples.
pub fn load_libsvm(path: impl AsRef<Path>, transpose: bool) -> Result<(AtomMatrix, Vec<f64>)> {
    let data = read_libsvm(BufReader::new(File::open(path)?), None)?;
    if transpose {
        data.into_features()
    } else {
        let labels = data.labels.clone();
        Ok((data.into_examples()?, labels))
    }
}

/// Writes rows in LIBSVM format; zero entries are skipped.
pub fn write_libsvm(mut out: impl Write, labels: &[f64], rows: &[Vec<(usize, f64)>]) -> Result<()> {
    if labels.len() != rows.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            found: labels.len(),
        });
    }
    for (label, row) in labels.iter().zip(rows) {
        write!(out, "{label}")?;
        for &(f, v) in row {
            if v != 0.0 {
                write!(out, " {}:{v}", f + 1)?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Rows of `A` (one per dimension) as sparse pairs, the layout
/// [`LibsvmData::into_features`] reads back.
pub fn matrix_rows(atoms: &AtomMatrix) -> Vec<Vec<(usize, f64)>> {
    let mut rows = vec![Vec::new(); atoms.dim()];
    for (j, col) in atoms.columns().iter().enumerate() {
        for (i, v) in col.entries() {
            if v != 0.0 {
                rows[i].push((j, v));
            }
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::AtomSource;

    #[test]
    fn single_line() {
        let data = read_libsvm("+1 1:0.5 3:1.0\n".as_bytes(), None).unwrap();
        assert_eq!(data.labels, vec![1.0]);
        assert_eq!(data.rows[0], vec![(0, 0.5), (2, 1.0)]);
        let atoms = data.into_examples().unwrap();
        assert_eq!(atoms.dim(), 3);
        assert_eq!(atoms.column(0).unwrap().to_dense(3), vec![0.5, 0.0, 1.0]);
        assert_eq!(atoms.label(0), Some(1.0));
    }

    #[test]
    fn empty_and_malformed() {
        assert!(read_libsvm("".as_bytes(), None).is_err());
        for bad in ["+1 0:1", "+1 2:1 1:1", "x 1:1", "+1 1:abc", "+1 1"] {
            match read_libsvm(format!("-1 1:1\n{bad}\n").as_bytes(), None) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, 2, "{bad}"),
                other => panic!("{bad}: {other:?}"),
            }
        }
    }

    #[test]
    fn transposed_layout() {
        let data = read_libsvm("1 1:2\n-1 2:3\n".as_bytes(), None).unwrap();
        let (atoms, y) = data.into_features().unwrap();
        assert_eq!(y, vec![1.0, -1.0]);
        assert_eq!(atoms.column(0).unwrap().to_dense(2), vec![2.0, 0.0]);
        assert_eq!(atoms.column(1).unwrap().to_dense(2), vec![0.0, 3.0]);
    }

    #[test]
    fn missing_file() {
        assert!(load_libsvm("/nonexistent/data.libsvm", false).is_err());
    }
}
