//! Label-first CSV datasets.
//!
//! Each line holds an integer label followed by the feature values, all
//! comma separated, without a header. Labels are remapped to dense indices
//! `0..C` in order of first appearance in the training file.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use uer_core::{DenseVector, Sample};

use crate::error::IoError;

/// Maps raw labels to dense class indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelMap {
    index: HashMap<i64, usize>,
    raw: Vec<i64>,
}

impl LabelMap {
    /// The dense index of `label`, allocating one if it is new.
    pub fn intern(&mut self, label: i64) -> usize {
        *self.index.entry(label).or_insert_with(|| {
            self.raw.push(label);
            self.raw.len() - 1
        })
    }

    pub fn get(&self, label: i64) -> Option<usize> {
        self.index.get(&label).copied()
    }

    /// Raw labels in dense-index order.
    pub fn raw_labels(&self) -> &[i64] {
        &self.raw
    }
}

/// Parses CSV text. With `grow` false, labels missing from `labels` are
/// errors.
pub fn parse_csv(
    reader: impl Read,
    path: &Path,
    labels: &mut LabelMap,
    grow: bool,
) -> Result<Vec<Sample>, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut samples = Vec::new();
    let mut width = None;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            IoError::Parse {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let parse_err = |message: String| IoError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let raw: i64 = record[0]
            .parse()
            .map_err(|_| parse_err(format!("bad label `{}`", &record[0])))?;
        let features = record
            .iter()
            .skip(1)
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(format!("bad feature value `{f}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let w = *width.get_or_insert(features.len());
        if features.len() != w {
            return Err(IoError::Ragged {
                path: path.to_path_buf(),
                line,
                expected: w,
                found: features.len(),
            });
        }
        if w == 0 {
            return Err(parse_err("line has a label but no features".into()));
        }
        let y = if grow {
            labels.intern(raw)
        } else {
            labels.get(raw).ok_or_else(|| {
                parse_err(format!("label {raw} does not occur in the training file"))
            })?
        };
        samples.push(Sample::new(DenseVector::from_vec(features)?, y));
    }
    if samples.is_empty() {
        return Err(IoError::Empty {
            path: path.to_path_buf(),
        });
    }
    Ok(samples)
}

fn open(path: &Path) -> Result<File, IoError> {
    File::open(path).map_err(|e| IoError::io(path, e))
}

/// Reads a single CSV file with its own label mapping.
pub fn load_csv(path: &Path) -> Result<(Vec<Sample>, LabelMap), IoError> {
    let mut labels = LabelMap::default();
    let samples = parse_csv(open(path)?, path, &mut labels, true)?;
    Ok((samples, labels))
}

/// Reads a train/test pair; the test file reuses the training label map
/// and both must share one feature width.
pub fn load_csv_dataset(train: &Path, test: &Path) -> Result<(Vec<Sample>, Vec<Sample>), IoError> {
    let (train_set, mut labels) = load_csv(train)?;
    let test_set = parse_csv(open(test)?, test, &mut labels, false)?;
    let (a, b) = (train_set[0].x.len(), test_set[0].x.len());
    if a != b {
        return Err(IoError::Ragged {
            path: test.to_path_buf(),
            line: 1,
            expected: a,
            found: b,
        });
    }
    Ok((train_set, test_set))
}

/// Writes samples with their dense labels; values use the shortest
/// representation that reads back exactly.
pub fn write_csv(samples: &[Sample], writer: impl Write, path: &Path) -> Result<(), IoError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_writer(writer);
    let mut fields = Vec::new();
    for s in samples {
        fields.clear();
        fields.push(s.y.to_string());
        fields.extend(s.x.as_slice().iter().map(|v| v.to_string()));
        w.write_record(&fields)
            .map_err(|e| IoError::io(path, e.into()))?;
    }
    w.flush().map_err(|e| IoError::io(path, e))
}

pub fn save_csv(samples: &[Sample], path: &Path) -> Result<(), IoError> {
    let file = File::create(path).map_err(|e| IoError::io(path, e))?;
    write_csv(samples, file, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<Sample>, IoError> {
        parse_csv(
            text.as_bytes(),
            Path::new("t.csv"),
            &mut LabelMap::default(),
            true,
        )
    }

    #[test]
    fn two_line_file() {
        let s = parse("1,0.5,0.25\n0,1.0,0.0").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].x.as_slice(), &[0.5, 0.25]);
        assert_eq!((s[0].y, s[1].y), (0, 1));
    }

    #[test]
    fn empty_and_blank_files() {
        assert!(matches!(parse(""), Err(IoError::Empty { .. })));
        assert!(matches!(parse("\n\n"), Err(IoError::Empty { .. })));
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse("0,1,2\n1,3\n") {
            Err(IoError::Ragged {
                line,
                expected,
                found,
                ..
            }) => assert_eq!((line, expected, found), (2, 2, 1)),
            other => panic!("{other:?}"),
        }
        match parse("0,1\n1,2\nx,3\n") {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse("0,nan\n").is_err());
        assert!(parse("0\n").is_err());
    }

    #[test]
    fn remaps_labels_in_first_occurrence_order() {
        let mut labels = LabelMap::default();
        let s = parse_csv(
            "7,1\n-3,2\n7,3\n42,4\n".as_bytes(),
            Path::new("t"),
            &mut labels,
            true,
        )
        .unwrap();
        assert_eq!(s.iter().map(|s| s.y).collect::<Vec<_>>(), vec![0, 1, 0, 2]);
        assert_eq!(labels.raw_labels(), &[7, -3, 42]);
        let err = parse_csv("5,1\n".as_bytes(), Path::new("t"), &mut labels, false);
        assert!(err.is_err());
    }

    #[test]
    fn write_then_read_is_identity() {
        let samples: Vec<Sample> = (0..20)
            .map(|i| {
                let v = i as f64;
                Sample::new(
                    DenseVector::from(&[v / 3.0, -1e-300 * v, 1e17 + v, 0.1][..]),
                    i % 4,
                )
            })
            .collect();
        let mut buf = Vec::new();
        write_csv(&samples, &mut buf, Path::new("t")).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), samples);
    }
}
