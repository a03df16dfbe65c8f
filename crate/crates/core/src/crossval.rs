//! M-fold cross-validation over a solution path.
//!
//! Folds are stratified by event status so that high censoring cannot produce
//! event-free training complements. Every fold is fitted over one shared
//! lambda grid computed from the full-data system, which makes the fold
//! scores comparable pointwise; the held-out criterion is the quadratic loss
//! built from the held-out fold's rows alone.

use ndarray::Array1;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::pseudoscore::PseudoscoreSystem;
use crate::seed::rng_from;
use crate::solver::{lambda_grid, FitConfig, FitMethod, SolutionPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionRule {
    /// Lambda with the smallest cross-validation score.
    Min,
    /// Largest lambda whose score is within one standard error of the minimum.
    OneSe,
}

impl SelectionRule {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(SelectionRule::Min),
            "one_se" => Ok(SelectionRule::OneSe),
            other => Err(Error::Config(format!(
                "unknown selection rule {other:?}; expected min or one_se"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SelectionRule::Min => "min",
            SelectionRule::OneSe => "one_se",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CvResult {
    pub method_label: String,
    pub lambdas: Vec<f64>,
    /// Mean held-out loss across folds at each grid value.
    pub cv_scores: Vec<f64>,
    /// Standard error (sd over folds / sqrt(M)) at each grid value.
    pub cv_se: Vec<f64>,
    /// Position of the score minimum; ties resolve to the largest lambda.
    pub best_index: usize,
    /// Fold label of each subject, in dataset row order.
    pub fold_assignment: Vec<usize>,
    /// Full-data path over the same grid.
    pub full_path: SolutionPath,
    /// Full-data coefficients at the best grid value.
    pub beta_at_best: Array1<f64>,
    /// Descent violations in the concavity-below-one regime, summed over the
    /// full-data path and every fold path.
    pub convex_regime_violations: usize,
}

/// Fold bookkeeping that can be shared across methods: the partition, the
/// full-data system, and per-fold training/held-out systems.
#[derive(Debug)]
pub struct CvPlan {
    pub fold_of: Vec<usize>,
    pub folds: usize,
    pub full_system: PseudoscoreSystem,
    pub train_systems: Vec<PseudoscoreSystem>,
    pub holdout_systems: Vec<PseudoscoreSystem>,
}

/// Stratified fold assignment: events and censored subjects are shuffled
/// separately and dealt round-robin, with the censored stream continuing the
/// cycle where the events stopped so every fold is nonempty when `M <= n`.
fn assign_folds(ds: &SurvivalDataset, folds: usize, seed: u64) -> Vec<usize> {
    let mut events: Vec<usize> = (0..ds.n()).filter(|&i| ds.status()[i]).collect();
    let mut censored: Vec<usize> = (0..ds.n()).filter(|&i| !ds.status()[i]).collect();
    let mut rng = rng_from(seed, "cv-folds", 0);
    events.shuffle(&mut rng);
    censored.shuffle(&mut rng);
    let mut fold_of = vec![0usize; ds.n()];
    for (k, &i) in events.iter().enumerate() {
        fold_of[i] = k % folds;
    }
    for (k, &i) in censored.iter().enumerate() {
        fold_of[i] = (events.len() + k) % folds;
    }
    fold_of
}

/// Build the fold partition and all per-fold systems.
///
/// Errors before any fitting if a fold's training complement would contain no
/// events.
pub fn cv_plan(ds: &SurvivalDataset, folds: usize, seed: u64) -> Result<CvPlan> {
    if folds < 2 || folds > ds.n() {
        return Err(Error::Config(format!(
            "folds must lie in [2, n]; got {folds} for n = {}",
            ds.n()
        )));
    }
    let fold_of = assign_folds(ds, folds, seed);

    for m in 0..folds {
        let complement_events = (0..ds.n())
            .filter(|&i| fold_of[i] != m && ds.status()[i])
            .count();
        if complement_events == 0 {
            return Err(Error::Validation(format!(
                "fold {m}: training complement contains no events"
            )));
        }
        if (0..ds.n()).filter(|&i| fold_of[i] != m).count() < 2 {
            return Err(Error::Validation(format!(
                "fold {m}: training complement has fewer than 2 subjects"
            )));
        }
    }

    let full_system = PseudoscoreSystem::from_dataset(ds);
    let built: Vec<(PseudoscoreSystem, PseudoscoreSystem)> = (0..folds)
        .into_par_iter()
        .map(|m| {
            let train_idx: Vec<usize> = (0..ds.n()).filter(|&i| fold_of[i] != m).collect();
            let hold_idx: Vec<usize> = (0..ds.n()).filter(|&i| fold_of[i] == m).collect();
            let (tt, ts, tz) = ds.raw_rows(&train_idx);
            let (ht, hs, hz) = ds.raw_rows(&hold_idx);
            (
                PseudoscoreSystem::from_rows(&tt, &ts, tz.view()),
                PseudoscoreSystem::from_rows(&ht, &hs, hz.view()),
            )
        })
        .collect();
    let (train_systems, holdout_systems) = built.into_iter().unzip();
    Ok(CvPlan {
        fold_of,
        folds,
        full_system,
        train_systems,
        holdout_systems,
    })
}

/// Cross-validate one fitting method over a prepared plan.
pub fn kfold_cv_with_plan(plan: &CvPlan, method: &FitMethod, cfg: &FitConfig) -> Result<CvResult> {
    cfg.validate()?;
    // CV needs coefficients at every grid value, so the sparsity early stop
    // is disabled; the per-point eigenvalue diagnostic is skipped for fold
    // paths (they are not returned).
    let full_cfg = FitConfig {
        max_active: None,
        ..cfg.clone()
    };
    let fold_cfg = FitConfig {
        check_convexity: false,
        ..full_cfg.clone()
    };

    let lmax = method.grid_lambda_max(&plan.full_system)?;
    let grid = lambda_grid(lmax, &full_cfg);
    let k = grid.len();

    let full_path = method.solve_on_grid(&plan.full_system, &grid, &full_cfg)?;

    // Fold paths: the path head is the zero vector by construction (the grid
    // head is the value at which the zero vector solves the full problem), so
    // each fold fits the remaining grid warm-started from zero.
    let fold_results: Vec<Result<(Vec<f64>, usize)>> = (0..plan.folds)
        .into_par_iter()
        .map(|m| {
            let sys = &plan.train_systems[m];
            let hold = &plan.holdout_systems[m];
            let mut scores = Vec::with_capacity(k);
            scores.push(0.0); // loss of the zero vector on the held-out fold
            let tail = method.solve_on_grid(sys, &grid[1..], &fold_cfg)?;
            let violations = tail.convex_regime_violations();
            for pos in 0..tail.len() {
                let beta = &tail.betas[pos];
                let idx: Vec<usize> = beta
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(j, _)| j)
                    .collect();
                let vals: Vec<f64> = idx.iter().map(|&j| beta[j]).collect();
                scores.push(hold.loss_sparse(&idx, &vals));
            }
            Ok((scores, violations))
        })
        .collect();

    let mut per_fold: Vec<Vec<f64>> = Vec::with_capacity(plan.folds);
    let mut violations = full_path.convex_regime_violations();
    for r in fold_results {
        let (scores, v) = r?;
        if scores.len() != k {
            return Err(Error::Degenerate(
                "fold path ended early; cross-validation needs the full grid".into(),
            ));
        }
        per_fold.push(scores);
        violations += v;
    }

    let m = plan.folds as f64;
    let mut cv_scores = Vec::with_capacity(k);
    let mut cv_se = Vec::with_capacity(k);
    for i in 0..k {
        let mean = per_fold.iter().map(|s| s[i]).sum::<f64>() / m;
        let var = per_fold
            .iter()
            .map(|s| (s[i] - mean) * (s[i] - mean))
            .sum::<f64>()
            / (m - 1.0);
        cv_scores.push(mean);
        cv_se.push((var / m).sqrt());
    }

    let mut best_index = 0;
    for i in 1..k {
        if cv_scores[i] < cv_scores[best_index] {
            best_index = i;
        }
    }

    if full_path.len() != k {
        return Err(Error::Degenerate(
            "full-data path ended early; cross-validation needs the full grid".into(),
        ));
    }
    let beta_at_best = full_path.betas[best_index].clone();

    Ok(CvResult {
        method_label: method.label(),
        lambdas: grid,
        cv_scores,
        cv_se,
        best_index,
        fold_assignment: plan.fold_of.clone(),
        full_path,
        beta_at_best,
        convex_regime_violations: violations,
    })
}

/// Stratified M-fold cross-validation of `method` on `ds`.
pub fn kfold_cv(
    ds: &SurvivalDataset,
    method: &FitMethod,
    cfg: &FitConfig,
    folds: usize,
    seed: u64,
) -> Result<CvResult> {
    let plan = cv_plan(ds, folds, seed)?;
    kfold_cv_with_plan(&plan, method, cfg)
}

/// Pick the regularization value from a CV curve.
pub fn select_lambda(cv: &CvResult, rule: SelectionRule) -> f64 {
    match rule {
        SelectionRule::Min => cv.lambdas[cv.best_index],
        SelectionRule::OneSe => {
            let cutoff = cv.cv_scores[cv.best_index] + cv.cv_se[cv.best_index];
            for i in 0..cv.lambdas.len() {
                if cv.cv_scores[i] <= cutoff {
                    return cv.lambdas[i];
                }
            }
            cv.lambdas[cv.best_index]
        }
    }
}

/// Index of the grid value chosen by a rule.
pub fn select_index(cv: &CvResult, rule: SelectionRule) -> usize {
    match rule {
        SelectionRule::Min => cv.best_index,
        SelectionRule::OneSe => {
            let cutoff = cv.cv_scores[cv.best_index] + cv.cv_se[cv.best_index];
            (0..cv.lambdas.len())
                .find(|&i| cv.cv_scores[i] <= cutoff)
                .unwrap_or(cv.best_index)
        }
    }
}
