//! Cyclic coordinate descent on the weighted penalized objective, with
//! geometric regularization paths, warm starts, and staged SICA refitting.
//!
//! The objective is `Q(beta) = L(beta) + sum_j V_jj * p_lambda(|beta_j|)`;
//! weighting by the diagonal makes every coordinate subproblem a unit-weight
//! univariate penalized least-squares problem solved in closed form. Each
//! coordinate update is an exact univariate global minimization, so the
//! objective never increases; when the penalty concavity is below 1 every
//! cluster point of the iterates is a local minimizer.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::penalty::Penalty;
use crate::pseudoscore::PseudoscoreSystem;

/// Absolute slack allowed when checking per-sweep objective monotonicity.
pub const DESCENT_SLACK: f64 = 1e-12;

/// Sweeps between full refreshes of the cached `V beta` products.
const CACHE_REFRESH_SWEEPS: usize = 50;

#[derive(Debug, Clone)]
pub struct FitConfig {
    /// Sup-norm coefficient-change convergence threshold for a full sweep.
    pub tol: f64,
    /// Hard cap on coordinate sweeps per fit.
    pub max_sweeps: usize,
    /// Stop extending the path once more than this many coordinates are active.
    pub max_active: Option<usize>,
    /// Number of grid points on the regularization path.
    pub grid_size: usize,
    /// Ratio of the smallest to the largest grid value.
    pub grid_ratio: f64,
    /// Run the restricted-convexity eigenvalue check on each converged
    /// active set (skipped automatically for convex penalties).
    pub check_convexity: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_sweeps: 10_000,
            max_active: None,
            grid_size: 100,
            grid_ratio: 1e-3,
            check_convexity: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Config("max_sweeps must be at least 1".into()));
        }
        if !(self.grid_ratio > 0.0 && self.grid_ratio < 1.0) {
            return Err(Error::Config(format!(
                "grid_ratio must lie in (0, 1), got {}",
                self.grid_ratio
            )));
        }
        if self.grid_size == 0 {
            return Err(Error::Config("grid_size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitDiagnostics {
    pub sweeps: usize,
    pub converged: bool,
    /// Objective recomputed exactly (fresh matrix product) at the final point.
    pub objective: f64,
    /// Whether the penalty concavity at this lambda is below 1.
    pub kappa_lt_one: bool,
    /// Count of sweeps whose cached objective rose by more than the slack.
    pub descent_violations: usize,
    /// Set when a zero-weight coordinate had a nonzero warm start and was frozen.
    pub frozen_nonzero: bool,
}

/// Largest useful regularization value: the smallest lambda at which the zero
/// vector solves the problem, `max_j |b_j| / V_jj` over coordinates with
/// positive weight.
pub fn lambda_max(sys: &PseudoscoreSystem) -> Result<f64> {
    let mut best: Option<f64> = None;
    for j in 0..sys.p() {
        if sys.diag[j] > 0.0 {
            let r = sys.b[j].abs() / sys.diag[j];
            best = Some(best.map_or(r, |m: f64| m.max(r)));
        }
    }
    best.ok_or_else(|| Error::Degenerate("every diagonal weight is zero".into()))
}

/// Top of the path grid for a given penalty. Matches [`lambda_max`] except for
/// the elastic net, whose origin slope is `alpha * lambda`, so the grid head
/// is scaled by `1/alpha` to keep the zero vector exact there.
pub fn grid_lambda_max(sys: &PseudoscoreSystem, pen: &Penalty) -> Result<f64> {
    let lmax = lambda_max(sys)?;
    Ok(match pen {
        Penalty::ElasticNet { alpha } => lmax / alpha,
        _ => lmax,
    })
}

/// Geometric grid from `lmax` down to `grid_ratio * lmax`, length `grid_size`.
pub fn lambda_grid(lmax: f64, cfg: &FitConfig) -> Vec<f64> {
    if lmax <= 0.0 {
        return vec![0.0];
    }
    let k = cfg.grid_size;
    if k == 1 {
        return vec![lmax];
    }
    (0..k)
        .map(|i| lmax * cfg.grid_ratio.powf(i as f64 / (k - 1) as f64))
        .collect()
}

struct CdState<'a> {
    sys: &'a PseudoscoreSystem,
    pen: &'a Penalty,
    lambda: f64,
    beta: Vec<f64>,
    /// Cached `(V beta)_j`. Exact on every coordinate when `cover` is `None`,
    /// otherwise exact only on the covered index set (used while cycling over
    /// the active set, where updates then cost O(|cover|) instead of O(p)).
    vbeta: Vec<f64>,
    cover: Option<Vec<usize>>,
    /// Net coefficient change per coordinate since the cache was last exact
    /// everywhere; replayed to restore full coverage cheaply.
    pending: Vec<f64>,
    eligible: Vec<bool>,
    sweeps_since_refresh: usize,
}

impl<'a> CdState<'a> {
    fn new(
        sys: &'a PseudoscoreSystem,
        pen: &'a Penalty,
        lambda: f64,
        warm: &[f64],
    ) -> (Self, bool) {
        let p = sys.p();
        let eligible: Vec<bool> = (0..p).map(|j| sys.diag[j] > 0.0).collect();
        let frozen_nonzero = (0..p).any(|j| !eligible[j] && warm[j] != 0.0);
        let beta = warm.to_vec();
        let mut state = Self {
            sys,
            pen,
            lambda,
            beta,
            vbeta: vec![0.0; p],
            cover: None,
            pending: vec![0.0; p],
            eligible,
            sweeps_since_refresh: 0,
        };
        state.refresh_cache();
        (state, frozen_nonzero)
    }

    fn refresh_cache(&mut self) {
        let p = self.sys.p();
        for x in self.vbeta.iter_mut() {
            *x = 0.0;
        }
        for j in 0..p {
            let bj = self.beta[j];
            if bj != 0.0 {
                let col = self.sys.v.row(j); // symmetric: row == column
                let col = col.as_slice().expect("contiguous");
                for k in 0..p {
                    self.vbeta[k] += col[k] * bj;
                }
            }
            self.pending[j] = 0.0;
        }
        self.cover = None;
        self.sweeps_since_refresh = 0;
    }

    /// Restrict cache maintenance to `cover`, which must contain every
    /// coordinate that will be swept or carries a nonzero coefficient. Only
    /// legal while the cache is exact everywhere.
    fn restrict_cover(&mut self, cover: Vec<usize>) {
        debug_assert!(self.cover.is_none());
        self.cover = Some(cover);
    }

    /// Restore full cache coverage by replaying the net changes accumulated
    /// while the cache was restricted onto the uncovered entries (covered
    /// entries were maintained exactly throughout).
    fn widen_cover(&mut self) {
        let Some(cover) = self.cover.take() else { return };
        let p = self.sys.p();
        let mut covered = vec![false; p];
        for &k in &cover {
            covered[k] = true;
        }
        for j in 0..p {
            let d = self.pending[j];
            if d != 0.0 {
                let col = self.sys.v.row(j);
                let col = col.as_slice().expect("contiguous");
                for (k, was_covered) in covered.iter().enumerate() {
                    if !was_covered {
                        self.vbeta[k] += col[k] * d;
                    }
                }
                self.pending[j] = 0.0;
            }
        }
    }

    /// One cyclic pass over `coords` in ascending order; returns the largest
    /// absolute coefficient change.
    fn sweep(&mut self, coords: &[usize]) -> f64 {
        let mut max_delta = 0.0_f64;
        for &j in coords {
            let vjj = self.sys.diag[j];
            let old = self.beta[j];
            let r = self.sys.b[j] - (self.vbeta[j] - vjj * old);
            let new = self.pen.univariate_minimize(r / vjj, self.lambda);
            let delta = new - old;
            if delta != 0.0 {
                let col = self.sys.v.row(j);
                let col = col.as_slice().expect("contiguous");
                match &self.cover {
                    None => {
                        for (vb, &c) in self.vbeta.iter_mut().zip(col) {
                            *vb += c * delta;
                        }
                    }
                    Some(cover) => {
                        for &k in cover {
                            self.vbeta[k] += col[k] * delta;
                        }
                        self.pending[j] += delta;
                    }
                }
                self.beta[j] = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        self.sweeps_since_refresh += 1;
        if self.sweeps_since_refresh >= CACHE_REFRESH_SWEEPS {
            self.refresh_cache();
        }
        max_delta
    }

    /// Objective from the cached products: `L(beta) + sum_j V_jj p(|beta_j|)`.
    /// Every nonzero coefficient lies in the covered set, so this is exact up
    /// to cache drift.
    fn cached_objective(&self) -> f64 {
        let mut quad = 0.0;
        let mut lin = 0.0;
        let mut pen = 0.0;
        for j in 0..self.beta.len() {
            let bj = self.beta[j];
            if bj != 0.0 {
                quad += bj * self.vbeta[j];
                lin += self.sys.b[j] * bj;
                pen += self.sys.diag[j] * self.pen.value_at(bj.abs(), self.lambda);
            }
        }
        0.5 * quad - lin + pen
    }

    fn exact_objective(&mut self) -> f64 {
        self.refresh_cache();
        self.cached_objective()
    }

    fn active(&self) -> Vec<usize> {
        (0..self.beta.len())
            .filter(|&j| self.eligible[j] && self.beta[j] != 0.0)
            .collect()
    }
}

/// Run cyclic coordinate descent at a single `lambda` from `warm_start`.
///
/// Coordinates with zero diagonal weight are frozen at their warm-start value
/// and flagged in the diagnostics. Convergence is declared when a full sweep
/// changes no coefficient by `tol` or more.
pub fn coordinate_descent(
    sys: &PseudoscoreSystem,
    pen: &Penalty,
    lambda: f64,
    warm_start: &Array1<f64>,
    cfg: &FitConfig,
) -> Result<(Array1<f64>, FitDiagnostics)> {
    cfg.validate()?;
    if warm_start.len() != sys.p() {
        return Err(Error::Dimension {
            expected: sys.p(),
            got: warm_start.len(),
        });
    }
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!("lambda must be nonnegative, got {lambda}")));
    }
    if warm_start.iter().any(|x| !x.is_finite()) {
        return Err(Error::Validation("warm start contains non-finite entries".into()));
    }

    let warm: Vec<f64> = warm_start.to_vec();
    let (mut state, frozen_nonzero) = CdState::new(sys, pen, lambda, &warm);
    let all: Vec<usize> = (0..sys.p()).filter(|&j| state.eligible[j]).collect();
    let frozen_idx: Vec<usize> = (0..sys.p())
        .filter(|&j| !state.eligible[j] && state.beta[j] != 0.0)
        .collect();

    let mut sweeps = 0usize;
    let mut converged = false;
    let mut violations = 0usize;
    let mut prev_q = state.cached_objective();
    let track = |state: &CdState<'_>, violations: &mut usize, prev_q: &mut f64| {
        let q = state.cached_objective();
        if q > *prev_q + DESCENT_SLACK {
            *violations += 1;
        }
        *prev_q = q;
    };

    'outer: while sweeps < cfg.max_sweeps {
        state.widen_cover();
        let delta = state.sweep(&all);
        sweeps += 1;
        track(&state, &mut violations, &mut prev_q);
        if delta < cfg.tol {
            converged = true;
            break;
        }
        if sweeps < 2 || sweeps >= cfg.max_sweeps {
            continue;
        }
        // cycle over the current active set until it stabilizes, then return
        // to a full sweep to look for violators
        loop {
            let active = state.active();
            if active.is_empty() {
                break;
            }
            // indexed cover updates beat full vectorized updates only while
            // the active set is a small fraction of the dimension
            if state.cover.is_none() && (active.len() + frozen_idx.len()) * 4 < sys.p() {
                let mut cover = active.clone();
                cover.extend_from_slice(&frozen_idx);
                cover.sort_unstable();
                state.restrict_cover(cover);
            }
            let d = state.sweep(&active);
            sweeps += 1;
            track(&state, &mut violations, &mut prev_q);
            if d < cfg.tol {
                break;
            }
            if sweeps >= cfg.max_sweeps {
                break 'outer;
            }
        }
    }
    state.widen_cover();

    let objective = state.exact_objective();
    let beta = Array1::from(state.beta);
    let diag = FitDiagnostics {
        sweeps,
        converged,
        objective,
        kappa_lt_one: pen.max_concavity(lambda) < 1.0,
        descent_violations: violations,
        frozen_nonzero,
    };
    Ok((beta, diag))
}

#[derive(Debug, Clone)]
pub struct SolutionPath {
    pub label: String,
    /// Grid values actually fitted, strictly decreasing from the grid head.
    pub lambdas: Vec<f64>,
    pub betas: Vec<Array1<f64>>,
    /// Weighted objective recomputed at each converged point.
    pub objective_values: Vec<f64>,
    pub sweeps_used: Vec<usize>,
    pub converged: Vec<bool>,
    /// True where the restricted-convexity condition failed on the active set.
    pub convexity_warnings: Vec<bool>,
    /// Whether the penalty concavity is below 1 at each grid value.
    pub kappa_lt_one: Vec<bool>,
    /// Per-point counts of objective increases beyond the descent slack.
    pub descent_violations: Vec<usize>,
    /// Grid length that was requested; shorter `lambdas` means an early stop.
    pub requested_grid: usize,
    pub early_stopped: bool,
    pub frozen_nonzero: bool,
}

impl SolutionPath {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn active_set(&self, k: usize) -> Vec<usize> {
        self.betas[k]
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn n_nonzero(&self, k: usize) -> usize {
        self.betas[k].iter().filter(|&&v| v != 0.0).count()
    }

    /// Descent violations summed over grid points in the concavity-below-one
    /// regime, where monotone descent is guaranteed.
    pub fn convex_regime_violations(&self) -> usize {
        self.kappa_lt_one
            .iter()
            .zip(&self.descent_violations)
            .filter(|(&k, _)| k)
            .map(|(_, &v)| v)
            .sum()
    }
}

/// Solve a warm-started path over an explicit decreasing grid.
pub fn solve_path_on_grid(
    sys: &PseudoscoreSystem,
    pen: &Penalty,
    lambdas: &[f64],
    cfg: &FitConfig,
) -> Result<SolutionPath> {
    solve_path_from(sys, pen, lambdas, &Array1::zeros(sys.p()), cfg)
}

fn solve_path_from(
    sys: &PseudoscoreSystem,
    pen: &Penalty,
    lambdas: &[f64],
    start: &Array1<f64>,
    cfg: &FitConfig,
) -> Result<SolutionPath> {
    cfg.validate()?;
    let mut path = SolutionPath {
        label: pen.label(),
        lambdas: Vec::new(),
        betas: Vec::new(),
        objective_values: Vec::new(),
        sweeps_used: Vec::new(),
        converged: Vec::new(),
        convexity_warnings: Vec::new(),
        kappa_lt_one: Vec::new(),
        descent_violations: Vec::new(),
        requested_grid: lambdas.len(),
        early_stopped: false,
        frozen_nonzero: false,
    };
    let mut warm = start.clone();
    for &lambda in lambdas {
        let (beta, diag) = coordinate_descent(sys, pen, lambda, &warm, cfg)?;
        let active = beta
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(j, _)| j)
            .collect::<Vec<_>>();
        let warning = if !cfg.check_convexity || active.is_empty() {
            false
        } else if pen.max_concavity(lambda) == 0.0 {
            false // convex penalty: PSD quadratic always dominates
        } else {
            !restricted_convexity_check(sys, pen, lambda, &active)?
        };
        path.lambdas.push(lambda);
        path.objective_values.push(diag.objective);
        path.sweeps_used.push(diag.sweeps);
        path.converged.push(diag.converged);
        path.convexity_warnings.push(warning);
        path.kappa_lt_one.push(diag.kappa_lt_one);
        path.descent_violations.push(diag.descent_violations);
        path.frozen_nonzero |= diag.frozen_nonzero;
        warm = beta.clone();
        let n_active = active.len();
        path.betas.push(beta);
        if let Some(cap) = cfg.max_active {
            if n_active > cap {
                path.early_stopped = true;
                break;
            }
        }
    }
    Ok(path)
}

/// Geometric-grid solution path for one penalty, warm-started from the zero
/// vector at the grid head.
pub fn solve_path(
    sys: &PseudoscoreSystem,
    pen: &Penalty,
    cfg: &FitConfig,
) -> Result<SolutionPath> {
    let lmax = grid_lambda_max(sys, pen)?;
    let grid = lambda_grid(lmax, cfg);
    solve_path_on_grid(sys, pen, &grid, cfg)
}

/// Staged SICA path: solve the path at the first (largest, most convex) shape
/// value, then re-solve every grid point at each subsequent shape value using
/// the previous stage's solution at the same grid position as the warm start.
/// Returns the final-stage path.
pub fn solve_path_sica_staged(
    sys: &PseudoscoreSystem,
    a_stages: &[f64],
    cfg: &FitConfig,
) -> Result<SolutionPath> {
    let pen0 = validate_stages(a_stages)?;
    let lmax = grid_lambda_max(sys, &pen0)?;
    let grid = lambda_grid(lmax, cfg);
    solve_path_sica_staged_on_grid(sys, a_stages, &grid, cfg)
}

/// Staged SICA path over an explicit grid.
pub fn solve_path_sica_staged_on_grid(
    sys: &PseudoscoreSystem,
    a_stages: &[f64],
    lambdas: &[f64],
    cfg: &FitConfig,
) -> Result<SolutionPath> {
    let pen0 = validate_stages(a_stages)?;
    let mut path = solve_path_on_grid(sys, &pen0, lambdas, cfg)?;
    for &a in &a_stages[1..] {
        let pen = Penalty::sica(a)?;
        let mut next = SolutionPath {
            label: staged_label(a_stages),
            lambdas: Vec::new(),
            betas: Vec::new(),
            objective_values: Vec::new(),
            sweeps_used: Vec::new(),
            converged: Vec::new(),
            convexity_warnings: Vec::new(),
            kappa_lt_one: Vec::new(),
            descent_violations: Vec::new(),
            requested_grid: path.requested_grid,
            early_stopped: path.early_stopped,
            frozen_nonzero: false,
        };
        for k in 0..path.len() {
            let lambda = path.lambdas[k];
            let (beta, diag) = coordinate_descent(sys, &pen, lambda, &path.betas[k], cfg)?;
            let active = beta
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(j, _)| j)
                .collect::<Vec<_>>();
            let warning = if !cfg.check_convexity || active.is_empty() {
                false
            } else {
                !restricted_convexity_check(sys, &pen, lambda, &active)?
            };
            next.lambdas.push(lambda);
            next.betas.push(beta);
            next.objective_values.push(diag.objective);
            next.sweeps_used.push(diag.sweeps);
            next.converged.push(diag.converged);
            next.convexity_warnings.push(warning);
            next.kappa_lt_one.push(diag.kappa_lt_one);
            next.descent_violations.push(diag.descent_violations);
            next.frozen_nonzero |= diag.frozen_nonzero;
        }
        path = next;
    }
    path.label = staged_label(a_stages);
    Ok(path)
}

fn validate_stages(a_stages: &[f64]) -> Result<Penalty> {
    if a_stages.is_empty() {
        return Err(Error::Config("staged SICA needs at least one shape value".into()));
    }
    for w in a_stages.windows(2) {
        if !(w[1] <= w[0]) {
            return Err(Error::Config(format!(
                "SICA stages must be nonincreasing, got {:?}",
                a_stages
            )));
        }
    }
    for &a in a_stages {
        Penalty::sica(a)?;
    }
    Penalty::sica(a_stages[0])
}

fn staged_label(a_stages: &[f64]) -> String {
    if a_stages.len() == 1 {
        format!("sica(a={})", a_stages[0])
    } else {
        let stages: Vec<String> = a_stages.iter().map(|a| a.to_string()).collect();
        format!("sica(a={})", stages.join("->"))
    }
}

/// Check the restricted global-optimality condition on an active set: the
/// smallest eigenvalue of the active submatrix must dominate the penalty's
/// maximum concavity scaled by the largest active diagonal weight.
pub fn restricted_convexity_check(
    sys: &PseudoscoreSystem,
    pen: &Penalty,
    lambda: f64,
    active: &[usize],
) -> Result<bool> {
    if active.is_empty() {
        return Err(Error::Config("active set must be nonempty".into()));
    }
    let p = sys.p();
    if active.iter().any(|&j| j >= p) {
        return Err(Error::Dimension {
            expected: p,
            got: *active.iter().max().unwrap(),
        });
    }
    let kappa = pen.max_concavity(lambda);
    let max_diag = active
        .iter()
        .map(|&j| sys.diag[j])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(min_eigenvalue_sub(sys, active) >= kappa * max_diag)
}

fn min_eigenvalue_sub(sys: &PseudoscoreSystem, active: &[usize]) -> f64 {
    let s = active.len();
    let m = nalgebra::DMatrix::from_fn(s, s, |r, c| sys.v[[active[r], active[c]]]);
    let eig = m.symmetric_eigen();
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// A fitting strategy: a single penalty path, or the staged SICA refinement.
#[derive(Debug, Clone)]
pub enum FitMethod {
    Single(Penalty),
    SicaStaged(Vec<f64>),
}

impl FitMethod {
    pub fn lasso() -> Self {
        FitMethod::Single(Penalty::l1())
    }

    pub fn sica_staged(stages: Vec<f64>) -> Result<Self> {
        validate_stages(&stages)?;
        Ok(FitMethod::SicaStaged(stages))
    }

    pub fn label(&self) -> String {
        match self {
            FitMethod::Single(p) => p.label(),
            FitMethod::SicaStaged(stages) => staged_label(stages),
        }
    }

    /// Penalty in force on the returned path (the final stage for staged SICA).
    pub fn final_penalty(&self) -> Penalty {
        match self {
            FitMethod::Single(p) => *p,
            FitMethod::SicaStaged(stages) => Penalty::Sica {
                a: *stages.last().unwrap(),
            },
        }
    }

    pub fn grid_lambda_max(&self, sys: &PseudoscoreSystem) -> Result<f64> {
        match self {
            FitMethod::Single(p) => grid_lambda_max(sys, p),
            FitMethod::SicaStaged(_) => lambda_max(sys),
        }
    }

    pub fn solve_on_grid(
        &self,
        sys: &PseudoscoreSystem,
        lambdas: &[f64],
        cfg: &FitConfig,
    ) -> Result<SolutionPath> {
        match self {
            FitMethod::Single(p) => solve_path_on_grid(sys, p, lambdas, cfg),
            FitMethod::SicaStaged(stages) => {
                solve_path_sica_staged_on_grid(sys, stages, lambdas, cfg)
            }
        }
    }

    pub fn solve_path(&self, sys: &PseudoscoreSystem, cfg: &FitConfig) -> Result<SolutionPath> {
        let lmax = self.grid_lambda_max(sys)?;
        let grid = lambda_grid(lmax, cfg);
        self.solve_on_grid(sys, &grid, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};

    fn small_system() -> PseudoscoreSystem {
        // hand-built symmetric PD system
        PseudoscoreSystem {
            v: array![[1.0, 0.2, 0.1], [0.2, 0.8, 0.05], [0.1, 0.05, 1.2]],
            b: array![0.5, -0.3, 0.9],
            w: Array2::zeros((3, 3)),
            tau: 1.0,
            n: 10,
            diag: vec![1.0, 0.8, 1.2],
        }
    }

    #[test]
    fn lambda_max_formula() {
        let sys = PseudoscoreSystem {
            v: array![[1.0, 0.0], [0.0, 1.0]],
            b: array![2.0, -3.0],
            w: Array2::zeros((2, 2)),
            tau: 1.0,
            n: 4,
            diag: vec![1.0, 1.0],
        };
        assert_eq!(lambda_max(&sys).unwrap(), 3.0);

        let zero_b = PseudoscoreSystem {
            b: array![0.0, 0.0],
            ..sys.clone()
        };
        assert_eq!(lambda_max(&zero_b).unwrap(), 0.0);

        let degenerate = PseudoscoreSystem {
            v: Array2::zeros((2, 2)),
            b: array![0.0, 0.0],
            w: Array2::zeros((2, 2)),
            tau: 1.0,
            n: 4,
            diag: vec![0.0, 0.0],
        };
        assert!(lambda_max(&degenerate).is_err());
    }

    #[test]
    fn zero_b_path_is_identically_zero() {
        let sys = PseudoscoreSystem {
            v: array![[1.0, 0.0], [0.0, 1.0]],
            b: array![0.0, 0.0],
            w: Array2::zeros((2, 2)),
            tau: 1.0,
            n: 4,
            diag: vec![1.0, 1.0],
        };
        let path = solve_path(&sys, &Penalty::l1(), &FitConfig::default()).unwrap();
        assert_eq!(path.len(), 1);
        assert!(path.betas[0].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn large_lambda_keeps_zero_in_one_sweep() {
        let sys = small_system();
        let lmax = lambda_max(&sys).unwrap();
        let cfg = FitConfig::default();
        for pen in [
            Penalty::l1(),
            Penalty::scad(3.7).unwrap(),
            Penalty::mcp(3.7).unwrap(),
            Penalty::sica(1.0).unwrap(),
        ] {
            let (beta, diag) =
                coordinate_descent(&sys, &pen, lmax * 1.5, &Array1::zeros(3), &cfg).unwrap();
            assert!(beta.iter().all(|&x| x == 0.0), "{}", pen.label());
            assert_eq!(diag.sweeps, 1);
            assert!(diag.converged);
        }
    }

    #[test]
    fn lambda_zero_matches_direct_solve() {
        let sys = small_system();
        let cfg = FitConfig {
            tol: 1e-12,
            ..FitConfig::default()
        };
        let (beta, diag) =
            coordinate_descent(&sys, &Penalty::l1(), 0.0, &Array1::zeros(3), &cfg).unwrap();
        assert!(diag.converged);
        let m = nalgebra::DMatrix::from_fn(3, 3, |r, c| sys.v[[r, c]]);
        let rhs = nalgebra::DVector::from_iterator(3, sys.b.iter().cloned());
        let sol = m.lu().solve(&rhs).unwrap();
        for j in 0..3 {
            assert_abs_diff_eq!(beta[j], sol[j], epsilon = 1e-8);
        }
        // loss at the unpenalized optimum equals -b'V^{-1}b/2
        let expected = -0.5 * rhs.dot(&sol);
        assert_abs_diff_eq!(sys.loss(beta.view()).unwrap(), expected, epsilon = 1e-10);
        // score vanishes there
        let score = sys.score(beta.view()).unwrap();
        assert!(score.iter().all(|s| s.abs() < 1e-8));
    }

    #[test]
    fn path_head_is_zero_and_objectives_recompute() {
        let sys = small_system();
        let cfg = FitConfig {
            grid_size: 20,
            ..FitConfig::default()
        };
        for pen in [Penalty::l1(), Penalty::elastic_net(0.5).unwrap()] {
            let path = solve_path(&sys, &pen, &cfg).unwrap();
            assert_eq!(path.len(), 20);
            assert_eq!(path.n_nonzero(0), 0, "{}", pen.label());
            assert!(path
                .lambdas
                .windows(2)
                .all(|w| w[1] < w[0]));
            for k in 0..path.len() {
                let mut q = sys.loss(path.betas[k].view()).unwrap();
                for j in 0..3 {
                    q += sys.diag[j] * pen.value_at(path.betas[k][j].abs(), path.lambdas[k]);
                }
                let denom = path.objective_values[k].abs().max(1.0);
                assert!(
                    (q - path.objective_values[k]).abs() / denom < 1e-10,
                    "{} point {k}: {q} vs {}",
                    pen.label(),
                    path.objective_values[k]
                );
            }
            assert_eq!(path.convex_regime_violations(), 0);
        }
    }

    #[test]
    fn single_point_grid() {
        let sys = small_system();
        let cfg = FitConfig {
            grid_size: 1,
            ..FitConfig::default()
        };
        let path = solve_path(&sys, &Penalty::l1(), &cfg).unwrap();
        assert_eq!(path.len(), 1);
        assert_eq!(path.lambdas[0], lambda_max(&sys).unwrap());
        assert_eq!(path.n_nonzero(0), 0);
    }

    #[test]
    fn early_stop_truncates_path() {
        let sys = small_system();
        let cfg = FitConfig {
            max_active: Some(1),
            grid_size: 50,
            ..FitConfig::default()
        };
        let path = solve_path(&sys, &Penalty::l1(), &cfg).unwrap();
        assert!(path.early_stopped);
        assert!(path.len() < 50);
        assert_eq!(path.requested_grid, 50);
        // the final recorded point is the first exceeding the cap
        assert!(path.n_nonzero(path.len() - 1) > 1);
    }

    #[test]
    fn frozen_coordinate_is_reported_and_untouched() {
        let mut sys = small_system();
        // make coordinate 1 degenerate
        for k in 0..3 {
            sys.v[[1, k]] = 0.0;
            sys.v[[k, 1]] = 0.0;
        }
        sys.diag[1] = 0.0;
        sys.b[1] = 0.0;
        let warm = array![0.0, 0.7, 0.0];
        let (beta, diag) =
            coordinate_descent(&sys, &Penalty::l1(), 0.01, &warm, &FitConfig::default()).unwrap();
        assert!(diag.frozen_nonzero);
        assert_eq!(beta[1], 0.7);

        let (_, diag2) = coordinate_descent(
            &sys,
            &Penalty::l1(),
            0.01,
            &Array1::zeros(3),
            &FitConfig::default(),
        )
        .unwrap();
        assert!(!diag2.frozen_nonzero);
    }

    #[test]
    fn restricted_convexity_examples() {
        // identity active submatrix, SCAD a=3.7: 1 >= 1/2.7
        let sys = PseudoscoreSystem {
            v: array![[1.0, 0.0], [0.0, 1.0]],
            b: array![0.1, 0.1],
            w: Array2::zeros((2, 2)),
            tau: 1.0,
            n: 4,
            diag: vec![1.0, 1.0],
        };
        assert!(restricted_convexity_check(
            &sys,
            &Penalty::scad(3.7).unwrap(),
            0.5,
            &[0, 1]
        )
        .unwrap());
        assert!(restricted_convexity_check(&sys, &Penalty::l1(), 0.5, &[0, 1]).unwrap());

        // near-singular 2x2 with MCP a=1.5: 0.01 < (1/1.5)*1
        let tight = PseudoscoreSystem {
            v: array![[1.0, 0.99], [0.99, 1.0]],
            b: array![0.1, 0.1],
            w: Array2::zeros((2, 2)),
            tau: 1.0,
            n: 4,
            diag: vec![1.0, 1.0],
        };
        assert!(!restricted_convexity_check(
            &tight,
            &Penalty::mcp(1.5).unwrap(),
            0.5,
            &[0, 1]
        )
        .unwrap());
        assert!(restricted_convexity_check(&tight, &Penalty::l1(), 0.5, &[]).is_err());
    }

    #[test]
    fn staged_single_stage_equals_plain_path() {
        let sys = small_system();
        let cfg = FitConfig {
            grid_size: 15,
            ..FitConfig::default()
        };
        let staged = solve_path_sica_staged(&sys, &[0.5], &cfg).unwrap();
        let plain = solve_path(&sys, &Penalty::sica(0.5).unwrap(), &cfg).unwrap();
        assert_eq!(staged.lambdas, plain.lambdas);
        for k in 0..staged.len() {
            assert_eq!(staged.betas[k], plain.betas[k]);
        }
    }

    #[test]
    fn staged_requires_nonincreasing_positive_stages() {
        let sys = small_system();
        let cfg = FitConfig::default();
        assert!(solve_path_sica_staged(&sys, &[0.1, 1.0], &cfg).is_err());
        assert!(solve_path_sica_staged(&sys, &[1.0, 0.0], &cfg).is_err());
        assert!(solve_path_sica_staged(&sys, &[], &cfg).is_err());
    }

    #[test]
    fn dimension_errors() {
        let sys = small_system();
        let bad = Array1::zeros(5);
        assert!(coordinate_descent(&sys, &Penalty::l1(), 0.1, &bad, &FitConfig::default()).is_err());
    }
}
