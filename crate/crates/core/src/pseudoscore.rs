//! The quadratic estimating system for the additive hazards model.
//!
//! With time-fixed covariates the at-risk indicators and risk-set means are
//! step functions that change only at observed times, so the defining
//! integrals reduce to exact sums over the distinct-time intervals. The
//! resulting summary `(V, b, W, tau)` is everything the solver, the
//! cross-validation loop and the oracle estimator need; the estimating
//! function is `b - V beta` and the least-squares loss is
//! `beta' V beta / 2 - b' beta`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PseudoscoreSystem {
    /// Integrated at-risk covariance matrix (p x p, symmetric PSD).
    pub v: Array2<f64>,
    /// Event-centered covariate sums (p).
    pub b: Array1<f64>,
    /// Event-weighted centered second-moment matrix (p x p, symmetric PSD).
    pub w: Array2<f64>,
    /// Maximum observed follow-up time.
    pub tau: f64,
    /// Number of subjects the system was built from.
    pub n: usize,
    /// Copy of the diagonal of `v`, the per-coordinate penalty weights.
    pub diag: Vec<f64>,
}

impl PseudoscoreSystem {
    pub fn from_dataset(ds: &SurvivalDataset) -> Self {
        Self::from_rows(ds.times(), ds.status(), ds.covariates())
    }

    /// Build the system from raw rows. Exposed within the crate so held-out
    /// folds (which may have no events) can still be summarized.
    pub(crate) fn from_rows(times: &[f64], status: &[bool], z: ArrayView2<'_, f64>) -> Self {
        let n = times.len();
        let p = z.ncols();
        assert_eq!(n, status.len());
        assert_eq!(n, z.nrows());
        assert!(n > 0);

        // Ascending distinct-time groups; the risk set on the interval ending
        // at a group's time consists of everyone with time >= it, so a
        // descending sweep grows the risk sums one group at a time.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| times[i].total_cmp(&times[j]));
        let tau = times[order[n - 1]];

        let mut vbuf = vec![0.0_f64; p * p]; // upper triangle accumulators
        let mut wbuf = vec![0.0_f64; p * p];
        let mut bsum = vec![0.0_f64; p];
        let mut s1 = vec![0.0_f64; p];
        let mut s0 = 0.0_f64;

        // first V term: sum_i time_i * z_i z_i'; every subject is at risk on
        // exactly the intervals up to its own time, which telescope to time_i
        for i in 0..n {
            let t = times[i];
            if t == 0.0 {
                continue;
            }
            let row = z.row(i);
            let row = row.as_slice().expect("covariate rows are contiguous");
            rank1_upper(&mut vbuf, row, t, p);
        }

        // group boundaries in ascending order
        let mut groups: Vec<(usize, usize)> = Vec::new(); // [start, end) into `order`
        let mut g0 = 0;
        for k in 1..=n {
            if k == n || times[order[k]] != times[order[g0]] {
                groups.push((g0, k));
                g0 = k;
            }
        }

        let mut centered = vec![0.0_f64; p];
        for gi in (0..groups.len()).rev() {
            let (start, end) = groups[gi];
            let t = times[order[start]];
            // everyone in this group enters the risk set at its own time
            for &i in &order[start..end] {
                let row = z.row(i);
                let row = row.as_slice().expect("covariate rows are contiguous");
                for j in 0..p {
                    s1[j] += row[j];
                }
                s0 += 1.0;
            }
            // interval (previous distinct time, t]: subtract dt * s1 s1'/s0
            let prev = if gi == 0 { 0.0 } else { times[order[groups[gi - 1].0]] };
            let dt = t - prev;
            if dt > 0.0 {
                rank1_upper(&mut vbuf, &s1, -dt / s0, p);
            }
            // events at t: centered against the risk-set mean at t (self included)
            for &i in &order[start..end] {
                if !status[i] {
                    continue;
                }
                let row = z.row(i);
                let row = row.as_slice().expect("covariate rows are contiguous");
                for j in 0..p {
                    centered[j] = row[j] - s1[j] / s0;
                    bsum[j] += centered[j];
                }
                rank1_upper(&mut wbuf, &centered, 1.0, p);
            }
        }

        let inv_n = 1.0 / n as f64;
        let mut v = Array2::zeros((p, p));
        let mut w = Array2::zeros((p, p));
        for j in 0..p {
            for k in j..p {
                let vv = vbuf[j * p + k] * inv_n;
                v[[j, k]] = vv;
                v[[k, j]] = vv;
                let ww = wbuf[j * p + k] * inv_n;
                w[[j, k]] = ww;
                w[[k, j]] = ww;
            }
        }
        let b = Array1::from_iter(bsum.into_iter().map(|x| x * inv_n));
        let diag = (0..p).map(|j| v[[j, j]]).collect();
        Self {
            v,
            b,
            w,
            tau,
            n,
            diag,
        }
    }

    pub fn p(&self) -> usize {
        self.b.len()
    }

    /// Least-squares loss `beta' V beta / 2 - b' beta`.
    pub fn loss(&self, beta: ArrayView1<'_, f64>) -> Result<f64> {
        self.check_len(beta.len())?;
        let vb = self.v.dot(&beta);
        Ok(0.5 * beta.dot(&vb) - self.b.dot(&beta))
    }

    /// Estimating function `b - V beta`, the negative gradient of the loss.
    pub fn score(&self, beta: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        self.check_len(beta.len())?;
        Ok(&self.b - &self.v.dot(&beta))
    }

    /// Loss evaluated through a sparse representation of `beta`; exact for
    /// coefficient vectors whose remaining entries are zero.
    pub(crate) fn loss_sparse(&self, idx: &[usize], vals: &[f64]) -> f64 {
        debug_assert_eq!(idx.len(), vals.len());
        let mut quad = 0.0;
        let mut lin = 0.0;
        for (a, &j) in idx.iter().enumerate() {
            let bj = vals[a];
            lin += self.b[j] * bj;
            for (c, &k) in idx.iter().enumerate() {
                quad += bj * self.v[[j, k]] * vals[c];
            }
        }
        0.5 * quad - lin
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.p() {
            return Err(Error::Dimension {
                expected: self.p(),
                got: len,
            });
        }
        Ok(())
    }
}

/// `buf[j,k] += w * x[j] * x[k]` over the upper triangle `k >= j`.
fn rank1_upper(buf: &mut [f64], x: &[f64], w: f64, p: usize) {
    for j in 0..p {
        let xj = x[j] * w;
        if xj == 0.0 {
            continue;
        }
        let row = &mut buf[j * p + j..(j + 1) * p];
        for (r, &xk) in row.iter_mut().zip(&x[j..]) {
            *r += xj * xk;
        }
    }
}
