//! Right-censored survival data with time-fixed covariates.
//!
//! A dataset holds `n` observations of the form (observed time, event flag,
//! covariate row). Observed time is the minimum of the failure and censoring
//! times; the flag is 1 when the failure was observed. Datasets are immutable
//! after construction and can be shared freely across threads.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed::rng_from;

#[derive(Debug, Clone)]
pub struct SurvivalDataset {
    times: Vec<f64>,
    status: Vec<bool>,
    covariates: Array2<f64>,
    feature_names: Option<Vec<String>>,
}

impl SurvivalDataset {
    /// Build a validated dataset.
    ///
    /// Requires: finite nonnegative times, at least two subjects, at least one
    /// event, a finite covariate matrix with one row per subject, and (when
    /// present) one feature name per column.
    pub fn new(
        times: Vec<f64>,
        status: Vec<bool>,
        covariates: Array2<f64>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = times.len();
        if status.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: status.len(),
            });
        }
        if covariates.nrows() != n {
            return Err(Error::Dimension {
                expected: n,
                got: covariates.nrows(),
            });
        }
        if n < 2 {
            return Err(Error::Validation(format!(
                "need at least 2 subjects, got {n}"
            )));
        }
        for (i, t) in times.iter().enumerate() {
            if !t.is_finite() || *t < 0.0 {
                return Err(Error::Validation(format!(
                    "time {t} at subject {i} is not a finite nonnegative real"
                )));
            }
        }
        if !status.iter().any(|&d| d) {
            return Err(Error::Validation(
                "dataset contains no events; fitting would be vacuous".into(),
            ));
        }
        if covariates.iter().any(|z| !z.is_finite()) {
            return Err(Error::Validation(
                "covariate matrix contains non-finite entries".into(),
            ));
        }
        if let Some(names) = &feature_names {
            if names.len() != covariates.ncols() {
                return Err(Error::Dimension {
                    expected: covariates.ncols(),
                    got: names.len(),
                });
            }
        }
        Ok(Self {
            times,
            status,
            covariates,
            feature_names,
        })
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn p(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn status(&self) -> &[bool] {
        &self.status
    }

    pub fn n_events(&self) -> usize {
        self.status.iter().filter(|&&d| d).count()
    }

    pub fn covariates(&self) -> ArrayView2<'_, f64> {
        self.covariates.view()
    }

    pub fn covariate_row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.covariates.row(i)
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Extract the rows in `idx` (in the given order) as a new validated dataset.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        let (times, status, cov) = self.raw_rows(idx);
        Self::new(times, status, cov, self.feature_names.clone())
    }

    /// Row subset as raw arrays, without dataset-level validation. Used for
    /// held-out fold evaluation where a subset may have no events.
    pub(crate) fn raw_rows(&self, idx: &[usize]) -> (Vec<f64>, Vec<bool>, Array2<f64>) {
        let p = self.p();
        let mut times = Vec::with_capacity(idx.len());
        let mut status = Vec::with_capacity(idx.len());
        let mut cov = Array2::zeros((idx.len(), p));
        for (r, &i) in idx.iter().enumerate() {
            times.push(self.times[i]);
            status.push(self.status[i]);
            cov.row_mut(r).assign(&self.covariates.row(i));
        }
        (times, status, cov)
    }

    /// Load a dataset from a CSV file with columns (time, status, covariates...).
    ///
    /// Status must be exactly 0 or 1. With `has_header`, the covariate column
    /// names of the header line are captured as feature names.
    pub fn load_csv<P: AsRef<Path>>(path: P, has_header: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate().peekable();

        let mut feature_names = None;
        if has_header {
            match lines.next() {
                Some((_, header)) => {
                    let cols: Vec<&str> = header.split(',').collect();
                    if cols.len() < 3 {
                        return Err(Error::Validation(
                            "header must list time, status and at least one covariate".into(),
                        ));
                    }
                    feature_names =
                        Some(cols[2..].iter().map(|s| s.trim().to_string()).collect());
                }
                None => return Err(Error::Validation("empty file".into())),
            }
        }

        let mut times = Vec::new();
        let mut status = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut p: Option<usize> = None;

        for (lineno, line) in lines {
            let row = lineno + 1; // 1-based file line
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() < 3 {
                return Err(Error::Validation(format!(
                    "row {row} has {} columns; need time, status and at least one covariate",
                    cells.len()
                )));
            }
            let parse = |col: usize, cell: &str| -> Result<f64> {
                cell.trim().parse::<f64>().map_err(|e| Error::Parse {
                    row,
                    col: col + 1,
                    msg: format!("{e} in {cell:?}"),
                })
            };
            let t = parse(0, cells[0])?;
            if !t.is_finite() || t < 0.0 {
                return Err(Error::Validation(format!(
                    "row {row}: time {t} is not a finite nonnegative real"
                )));
            }
            let d = parse(1, cells[1])?;
            let d = if d == 0.0 {
                false
            } else if d == 1.0 {
                true
            } else {
                return Err(Error::Validation(format!(
                    "row {row}: status {d} is not 0 or 1"
                )));
            };
            let mut z = Vec::with_capacity(cells.len() - 2);
            for (j, cell) in cells[2..].iter().enumerate() {
                let v = parse(j + 2, cell)?;
                if !v.is_finite() {
                    return Err(Error::Validation(format!(
                        "row {row}: covariate {} is not finite",
                        j + 1
                    )));
                }
                z.push(v);
            }
            match p {
                None => p = Some(z.len()),
                Some(expected) if expected != z.len() => {
                    return Err(Error::Validation(format!(
                        "row {row} has {} covariates; previous rows have {expected}",
                        z.len()
                    )));
                }
                _ => {}
            }
            times.push(t);
            status.push(d);
            rows.push(z);
        }

        let p = p.ok_or_else(|| Error::Validation("file contains no data rows".into()))?;
        let mut cov = Array2::zeros((rows.len(), p));
        for (i, z) in rows.iter().enumerate() {
            for (j, v) in z.iter().enumerate() {
                cov[[i, j]] = *v;
            }
        }
        Self::new(times, status, cov, feature_names)
    }

    /// Write the dataset back out as CSV. Values are printed in the shortest
    /// form that parses back to the identical float, so a save/load round trip
    /// is exact.
    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut out = String::new();
        if let Some(names) = &self.feature_names {
            out.push_str("time,status");
            for name in names {
                out.push(',');
                out.push_str(name);
            }
            out.push('\n');
        }
        for i in 0..self.n() {
            write!(out, "{},{}", self.times[i], u8::from(self.status[i])).unwrap();
            for v in self.covariates.row(i) {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Split into disjoint train/test parts with `round(n * train_fraction)`
/// training rows. The partition is a seeded shuffle; row order within each
/// part follows the original dataset.
pub fn train_test_split(
    ds: &SurvivalDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(SurvivalDataset, SurvivalDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = ds.n();
    let k = (n as f64 * train_fraction).round() as usize;
    if k == 0 || k == n {
        return Err(Error::Config(format!(
            "train_fraction {train_fraction} leaves an empty part for n = {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = rng_from(seed, "train-test-split", 0);
    idx.shuffle(&mut rng);
    let mut train_idx = idx[..k].to_vec();
    let mut test_idx = idx[k..].to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let train = ds.select_rows(&train_idx).map_err(|e| {
        Error::Validation(format!("training split is not a valid dataset: {e}"))
    })?;
    let test = ds
        .select_rows(&test_idx)
        .map_err(|e| Error::Validation(format!("test split is not a valid dataset: {e}")))?;
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> SurvivalDataset {
        SurvivalDataset::new(
            vec![1.0, 2.0, 0.7],
            vec![true, false, true],
            array![[0.5], [-0.3], [1.1]],
            None,
        )
        .unwrap()
    }

    #[test]
    fn load_csv_basic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "1.0,1,0.5\n2.0,0,-0.3\n0.7,1,1.1\n").unwrap();
        let ds = SurvivalDataset::load_csv(&path, false).unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.p(), 1);
        assert_eq!(ds.times(), &[1.0, 2.0, 0.7]);
        assert_eq!(ds.status(), &[true, false, true]);
        assert_eq!(ds.covariates()[[1, 0]], -0.3);
        assert!(ds.feature_names().is_none());
    }

    #[test]
    fn load_csv_rejects_bad_status_naming_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "1.0,1,0.5\n2.0,2,-0.3\n0.7,1,1.1\n").unwrap();
        let err = SurvivalDataset::load_csv(&path, false).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2"), "message was: {msg}");
        assert!(msg.contains("status"), "message was: {msg}");
    }

    #[test]
    fn load_csv_header_names() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "time,status,g1,g2\n1.0,1,0.5,0.0\n2.0,0,-0.3,1.0\n").unwrap();
        let ds = SurvivalDataset::load_csv(&path, true).unwrap();
        assert_eq!(
            ds.feature_names().unwrap(),
            &["g1".to_string(), "g2".to_string()]
        );
    }

    #[test]
    fn load_csv_rejects_ragged_and_parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let ragged = dir.path().join("r.csv");
        std::fs::write(&ragged, "1.0,1,0.5,2.0\n2.0,0,-0.3\n").unwrap();
        let err = SurvivalDataset::load_csv(&ragged, false).unwrap_err();
        assert!(err.to_string().contains("row 2"));

        let bad = dir.path().join("b.csv");
        std::fs::write(&bad, "1.0,1,0.5\n2.0,0,oops\n").unwrap();
        match SurvivalDataset::load_csv(&bad, false).unwrap_err() {
            Error::Parse { row, col, .. } => {
                assert_eq!((row, col), (2, 3));
            }
            other => panic!("expected parse error, got {other}"),
        }

        let neg = dir.path().join("n.csv");
        std::fs::write(&neg, "1.0,1,0.5\n-2.0,0,0.3\n").unwrap();
        assert!(SurvivalDataset::load_csv(&neg, false)
            .unwrap_err()
            .to_string()
            .contains("row 2"));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let ds = SurvivalDataset::new(
            vec![0.1 + 0.2, 1.0 / 3.0, 5e-324_f64.max(1e-17)],
            vec![true, false, true],
            array![[f64::MIN_POSITIVE], [-1.2345678901234567e-8], [9.87e300]],
            Some(vec!["g1".into()]),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.csv");
        ds.save_csv(&path).unwrap();
        let back = SurvivalDataset::load_csv(&path, true).unwrap();
        assert_eq!(ds.times(), back.times());
        assert_eq!(ds.status(), back.status());
        assert_eq!(ds.covariates(), back.covariates());
        assert_eq!(ds.feature_names(), back.feature_names());
    }

    #[test]
    fn new_rejects_invariant_violations() {
        assert!(SurvivalDataset::new(
            vec![1.0],
            vec![true],
            Array2::zeros((1, 1)),
            None
        )
        .is_err());
        assert!(SurvivalDataset::new(
            vec![1.0, 2.0],
            vec![false, false],
            Array2::zeros((2, 1)),
            None
        )
        .is_err());
        assert!(SurvivalDataset::new(
            vec![1.0, f64::NAN],
            vec![true, false],
            Array2::zeros((2, 1)),
            None
        )
        .is_err());
        assert!(SurvivalDataset::new(
            vec![1.0, 2.0],
            vec![true, false],
            array![[1.0], [f64::INFINITY]],
            None
        )
        .is_err());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let n = 240;
        let times: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let status: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let cov = Array2::from_shape_fn((n, 2), |(i, j)| (i * 2 + j) as f64);
        let ds = SurvivalDataset::new(times, status, cov, None).unwrap();

        let (tr, te) = train_test_split(&ds, 2.0 / 3.0, 7).unwrap();
        assert_eq!(tr.n(), 160);
        assert_eq!(te.n(), 80);

        let (tr2, te2) = train_test_split(&ds, 2.0 / 3.0, 7).unwrap();
        assert_eq!(tr.times(), tr2.times());
        assert_eq!(te.times(), te2.times());
        assert_eq!(tr.covariates(), tr2.covariates());

        let (tr3, _) = train_test_split(&ds, 2.0 / 3.0, 8).unwrap();
        assert_ne!(tr.times(), tr3.times());

        // partition: union of times multiset equals input
        let mut all: Vec<f64> = tr.times().iter().chain(te.times()).copied().collect();
        all.sort_by(f64::total_cmp);
        let mut orig = ds.times().to_vec();
        orig.sort_by(f64::total_cmp);
        assert_eq!(all, orig);
    }

    #[test]
    fn split_with_all_censored_training_errors() {
        // 10 subjects, single event; almost any split strands it on one side.
        let times: Vec<f64> = (0..10).map(|i| 1.0 + i as f64).collect();
        let mut status = vec![false; 10];
        status[0] = true;
        let ds =
            SurvivalDataset::new(times, status, Array2::zeros((10, 1)), None).unwrap();
        let mut saw_error = false;
        for seed in 0..20 {
            if train_test_split(&ds, 0.5, seed).is_err() {
                saw_error = true;
                break;
            }
        }
        assert!(saw_error);
    }

    #[test]
    fn select_rows_projects() {
        let ds = toy();
        let sub = ds.select_rows(&[0, 2]).unwrap();
        assert_eq!(sub.times(), &[1.0, 0.7]);
        assert!(ds.select_rows(&[1, 1]).is_err()); // no events in subset
    }
}
