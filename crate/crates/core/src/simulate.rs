//! Simulation benchmark harness.
//!
//! Subjects follow a constant conditional hazard `1 + beta0' Z` with
//! covariates drawn from an AR(1) Gaussian truncated to keep the hazard
//! positive, and uniform censoring on `(0, c0)` with `c0` calibrated by
//! Monte-Carlo bisection to hit a target censoring fraction. The study driver
//! runs cross-validated fits of several methods over independent replicates
//! and aggregates prediction, estimation and selection metrics against the
//! oracle estimator that knows the true support.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::crossval::{cv_plan, kfold_cv_with_plan};
use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::pseudoscore::PseudoscoreSystem;
use crate::seed::{derive_seed, rng_from};
use crate::solver::{FitConfig, FitMethod, SolutionPath};

/// Monte-Carlo sample size per censoring-calibration evaluation.
const CALIBRATION_DRAWS: usize = 200_000;
/// Calibration stops once the estimated rate is this close to the target.
const CALIBRATION_RATE_TOL: f64 = 0.005;
/// ... or once the bisection bracket is this narrow.
const CALIBRATION_BRACKET_TOL: f64 = 1e-4;
/// Bracket expansion gives up at this upper bound.
const CALIBRATION_C_MAX: f64 = 1e3;
/// Rejection sampling aborts below this acceptance probability.
const MIN_ACCEPTANCE: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct SimStudyConfig {
    pub n: usize,
    pub p: usize,
    /// AR(1) correlation of the covariates.
    pub rho: f64,
    /// True coefficients; shorter vectors are zero-padded to length `p`.
    pub beta0: Vec<f64>,
    pub target_censoring: f64,
    /// Number of zero coefficients to perturb into weak effects per replicate.
    pub weak_effect_count: usize,
    /// Weak effects are drawn from `U(0, eps)` with random signs.
    pub weak_effect_eps: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Size of the independent test sample drawn per replicate.
    pub test_n: usize,
}

impl Default for SimStudyConfig {
    fn default() -> Self {
        Self {
            n: 200,
            p: 50,
            rho: 0.1,
            beta0: paper_design_beta0(),
            target_censoring: 0.25,
            weak_effect_count: 0,
            weak_effect_eps: 0.0,
            replicates: 100,
            seed: 0,
            test_n: 500,
        }
    }
}

/// The benchmark coefficient pattern `(1, 0, -1, 0, 0, 0)` repeated three
/// times; callers pad with zeros up to the working dimension.
pub fn paper_design_beta0() -> Vec<f64> {
    let v = [1.0, 0.0, -1.0, 0.0, 0.0, 0.0];
    v.iter().cycle().take(18).copied().collect()
}

impl SimStudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n must be at least 2, got {}", self.n)));
        }
        if self.p == 0 {
            return Err(Error::Config("p must be positive".into()));
        }
        if !(self.rho >= -1.0 && self.rho <= 1.0) {
            return Err(Error::Config(format!(
                "rho must lie in [-1, 1], got {}",
                self.rho
            )));
        }
        if self.beta0.len() > self.p {
            return Err(Error::Config(format!(
                "beta0 has {} entries but p = {}",
                self.beta0.len(),
                self.p
            )));
        }
        if !(self.target_censoring > 0.0 && self.target_censoring < 1.0) {
            return Err(Error::Config(format!(
                "target censoring must lie in (0, 1), got {}",
                self.target_censoring
            )));
        }
        if self.weak_effect_count > 0 && !(self.weak_effect_eps > 0.0) {
            return Err(Error::Config(
                "weak effects requested with a nonpositive magnitude".into(),
            ));
        }
        let zeros = self
            .padded_beta0()
            .iter()
            .filter(|&&b| b == 0.0)
            .count();
        if self.weak_effect_count > zeros {
            return Err(Error::Config(format!(
                "cannot perturb {} zero coefficients; only {zeros} are zero",
                self.weak_effect_count
            )));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.test_n < 2 {
            return Err(Error::Config("test_n must be at least 2".into()));
        }
        Ok(())
    }

    pub fn padded_beta0(&self) -> Vec<f64> {
        let mut b = self.beta0.clone();
        b.resize(self.p, 0.0);
        b
    }
}

/// One generated replicate: the dataset plus the effective truth behind it.
#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub dataset: SurvivalDataset,
    /// Effective coefficients (weak-effect perturbations applied).
    pub beta0: Vec<f64>,
    /// Indices of the strong (unperturbed nonzero) coefficients.
    pub strong_support: Vec<usize>,
    /// Indices of the perturbed weak effects.
    pub weak_support: Vec<usize>,
}

/// Draw one AR(1) Gaussian covariate row.
fn draw_ar1_row<R: Rng>(rng: &mut R, p: usize, rho: f64, out: &mut [f64]) {
    let scale = (1.0 - rho * rho).sqrt();
    let mut prev: f64 = rng.sample(StandardNormal);
    out[0] = prev;
    for z in out.iter_mut().take(p).skip(1) {
        let e: f64 = rng.sample(StandardNormal);
        prev = rho * prev + scale * e;
        *z = prev;
    }
}

/// Draw covariates subject to positive hazard, failure and censoring times.
/// Returns `(time, event, z)`.
fn draw_subject<R: Rng>(
    rng: &mut R,
    beta0: &[f64],
    rho: f64,
    c0: f64,
    accepted: &mut u64,
    attempts: &mut u64,
) -> Result<(f64, bool, Vec<f64>)> {
    let p = beta0.len();
    let mut z = vec![0.0; p];
    loop {
        *attempts += 1;
        draw_ar1_row(rng, p, rho, &mut z);
        let s: f64 = beta0.iter().zip(&z).map(|(b, zj)| b * zj).sum();
        if s > -1.0 {
            *accepted += 1;
            let rate = 1.0 + s;
            let u: f64 = rng.gen();
            let t = -(1.0 - u).ln() / rate;
            let c = c0 * rng.gen::<f64>();
            return Ok((t.min(c), t <= c, z));
        }
        if *attempts >= 1000 && (*accepted as f64) < MIN_ACCEPTANCE * (*attempts as f64) {
            return Err(Error::Degenerate(format!(
                "hazard-positivity rejection acceptance below {MIN_ACCEPTANCE} \
                 ({accepted} of {attempts}); coefficients are pathological"
            )));
        }
    }
}

/// Calibrate the censoring bound `c0` so the marginal censoring fraction hits
/// the target.
///
/// One fixed Monte-Carlo sample of failure times and censoring quantiles is
/// drawn from a dedicated calibration stream; the censored fraction is then an
/// exactly nonincreasing step function of `c0`, and bisection runs until the
/// rate is within 0.005 of the target or the bracket is narrower than 1e-4.
pub fn calibrate_censoring(cfg: &SimStudyConfig) -> Result<f64> {
    cfg.validate()?;
    let beta0 = cfg.padded_beta0();
    let mut rng = rng_from(cfg.seed, "censoring-calibration", 0);
    let mut failures = Vec::with_capacity(CALIBRATION_DRAWS);
    let mut quantiles = Vec::with_capacity(CALIBRATION_DRAWS);
    let mut accepted = 0u64;
    let mut attempts = 0u64;
    let mut z = vec![0.0; cfg.p];
    while failures.len() < CALIBRATION_DRAWS {
        attempts += 1;
        draw_ar1_row(&mut rng, cfg.p, cfg.rho, &mut z);
        let s: f64 = beta0.iter().zip(&z).map(|(b, zj)| b * zj).sum();
        if s > -1.0 {
            accepted += 1;
            let u: f64 = rng.gen();
            failures.push(-(1.0 - u).ln() / (1.0 + s));
            quantiles.push(rng.gen::<f64>());
        } else if attempts >= 1000 && (accepted as f64) < MIN_ACCEPTANCE * attempts as f64 {
            return Err(Error::Degenerate(
                "calibration rejection acceptance too low".into(),
            ));
        }
    }
    let rate = |c: f64| -> f64 {
        let censored = failures
            .iter()
            .zip(&quantiles)
            .filter(|(&t, &u)| t > u * c)
            .count();
        censored as f64 / CALIBRATION_DRAWS as f64
    };

    // censoring decreases in c0: expand upward until the rate drops below target
    let target = cfg.target_censoring;
    let mut hi = 1.0;
    while rate(hi) > target {
        hi *= 2.0;
        if hi > CALIBRATION_C_MAX {
            return Err(Error::Degenerate(format!(
                "no censoring bound below {CALIBRATION_C_MAX} reaches rate {target}"
            )));
        }
    }
    let mut lo = hi / 2.0;
    while rate(lo) < target {
        lo /= 2.0;
        if lo < 1e-9 {
            break;
        }
    }
    let mut mid = 0.5 * (lo + hi);
    while hi - lo >= CALIBRATION_BRACKET_TOL {
        mid = 0.5 * (lo + hi);
        let r = rate(mid);
        if (r - target).abs() <= CALIBRATION_RATE_TOL {
            return Ok(mid);
        }
        if r > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Generator with a calibrated censoring bound, reusable across replicates.
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: SimStudyConfig,
    c0: f64,
}

impl Simulator {
    pub fn new(cfg: SimStudyConfig) -> Result<Self> {
        let c0 = calibrate_censoring(&cfg)?;
        Ok(Self { cfg, c0 })
    }

    pub fn with_c0(cfg: SimStudyConfig, c0: f64) -> Result<Self> {
        cfg.validate()?;
        if !(c0 > 0.0) {
            return Err(Error::Config(format!("c0 must be positive, got {c0}")));
        }
        Ok(Self { cfg, c0 })
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn config(&self) -> &SimStudyConfig {
        &self.cfg
    }

    /// Effective truth for a replicate: the base coefficients, with
    /// `weak_effect_count` randomly chosen zeros perturbed by `U(0, eps)`
    /// under random signs.
    fn replicate_truth<R: Rng>(&self, rng: &mut R) -> (Vec<f64>, Vec<usize>, Vec<usize>) {
        let mut beta0 = self.cfg.padded_beta0();
        let strong: Vec<usize> = beta0
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0.0)
            .map(|(j, _)| j)
            .collect();
        let mut weak = Vec::new();
        if self.cfg.weak_effect_count > 0 {
            let mut zeros: Vec<usize> = beta0
                .iter()
                .enumerate()
                .filter(|(_, &b)| b == 0.0)
                .map(|(j, _)| j)
                .collect();
            // partial Fisher-Yates: the first weak_effect_count entries
            for k in 0..self.cfg.weak_effect_count {
                let pick = k + rng.gen_range(0..zeros.len() - k);
                zeros.swap(k, pick);
            }
            weak = zeros[..self.cfg.weak_effect_count].to_vec();
            weak.sort_unstable();
            for &j in &weak {
                let mag = rng.gen_range(0.0..self.cfg.weak_effect_eps);
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                beta0[j] = sign * mag;
            }
        }
        (beta0, strong, weak)
    }

    fn gen_with_size<R: Rng>(
        &self,
        rng: &mut R,
        beta0: &[f64],
        n: usize,
    ) -> Result<SurvivalDataset> {
        let p = self.cfg.p;
        let mut times = Vec::with_capacity(n);
        let mut status = Vec::with_capacity(n);
        let mut cov = Array2::zeros((n, p));
        let mut accepted = 0u64;
        let mut attempts = 0u64;
        for i in 0..n {
            let (t, d, z) = draw_subject(
                rng,
                beta0,
                self.cfg.rho,
                self.c0,
                &mut accepted,
                &mut attempts,
            )?;
            times.push(t);
            status.push(d);
            for (j, zj) in z.iter().enumerate() {
                cov[[i, j]] = *zj;
            }
        }
        SurvivalDataset::new(times, status, cov, None)
    }

    /// Generate one training replicate together with its effective truth.
    pub fn gen_dataset(&self, replicate_seed: u64) -> Result<GeneratedData> {
        let mut rng = rng_from(replicate_seed, "datagen", 0);
        let (beta0, strong, weak) = self.replicate_truth(&mut rng);
        let dataset = self.gen_with_size(&mut rng, &beta0, self.cfg.n)?;
        Ok(GeneratedData {
            dataset,
            beta0,
            strong_support: strong,
            weak_support: weak,
        })
    }

    /// Independent test sample of `test_n` subjects under the given truth.
    pub fn gen_test(&self, replicate_seed: u64, beta0: &[f64]) -> Result<SurvivalDataset> {
        let mut rng = rng_from(replicate_seed, "testgen", 0);
        self.gen_with_size(&mut rng, beta0, self.cfg.test_n)
    }
}

/// Per-replicate performance measures of one fitted coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimMetrics {
    /// Quadratic prediction loss on the test sample's own system.
    pub pe1: f64,
    /// Euclidean norm of the excess-risk prediction error over test rows.
    pub pe2: f64,
    pub l2_loss: f64,
    pub l1_loss: f64,
    /// Number of exactly nonzero coefficients.
    pub num_selected: usize,
    /// True coefficients estimated as exactly zero.
    pub false_negatives: usize,
    /// False negatives restricted to the strong support.
    pub false_negatives_strong: usize,
}

pub fn eval_metrics(
    beta_hat: &Array1<f64>,
    beta0: &[f64],
    strong_support: &[usize],
    test: &SurvivalDataset,
) -> Result<SimMetrics> {
    let test_sys = PseudoscoreSystem::from_dataset(test);
    eval_metrics_with_system(beta_hat, beta0, strong_support, test, &test_sys)
}

pub fn eval_metrics_with_system(
    beta_hat: &Array1<f64>,
    beta0: &[f64],
    strong_support: &[usize],
    test: &SurvivalDataset,
    test_sys: &PseudoscoreSystem,
) -> Result<SimMetrics> {
    if beta_hat.len() != beta0.len() {
        return Err(Error::Dimension {
            expected: beta0.len(),
            got: beta_hat.len(),
        });
    }
    if test.p() != beta0.len() {
        return Err(Error::Dimension {
            expected: beta0.len(),
            got: test.p(),
        });
    }
    let pe1 = test_sys.loss(beta_hat.view())?;
    let mut pe2_sq = 0.0;
    for i in 0..test.n() {
        let row = test.covariate_row(i);
        let d: f64 = row
            .iter()
            .enumerate()
            .map(|(j, z)| z * (beta_hat[j] - beta0[j]))
            .sum();
        pe2_sq += d * d;
    }
    let mut l2 = 0.0;
    let mut l1 = 0.0;
    let mut selected = 0usize;
    let mut fns = 0usize;
    for j in 0..beta0.len() {
        let d = beta_hat[j] - beta0[j];
        l2 += d * d;
        l1 += d.abs();
        if beta_hat[j] != 0.0 {
            selected += 1;
        }
        if beta0[j] != 0.0 && beta_hat[j] == 0.0 {
            fns += 1;
        }
    }
    let fns_strong = strong_support
        .iter()
        .filter(|&&j| beta0[j] != 0.0 && beta_hat[j] == 0.0)
        .count();
    Ok(SimMetrics {
        pe1,
        pe2: pe2_sq.sqrt(),
        l2_loss: l2.sqrt(),
        l1_loss: l1,
        num_selected: selected,
        false_negatives: fns,
        false_negatives_strong: fns_strong,
    })
}

/// Unpenalized estimate restricted to a known support: solve the active
/// subsystem, zeros elsewhere.
pub fn oracle_fit(ds: &SurvivalDataset, support: &[usize]) -> Result<Array1<f64>> {
    let sys = PseudoscoreSystem::from_dataset(ds);
    oracle_fit_system(&sys, support)
}

pub fn oracle_fit_system(sys: &PseudoscoreSystem, support: &[usize]) -> Result<Array1<f64>> {
    if support.is_empty() {
        return Err(Error::Config("oracle support must be nonempty".into()));
    }
    let p = sys.p();
    if support.iter().any(|&j| j >= p) {
        return Err(Error::Dimension {
            expected: p,
            got: *support.iter().max().unwrap(),
        });
    }
    let s = support.len();
    let m = nalgebra::DMatrix::from_fn(s, s, |r, c| sys.v[[support[r], support[c]]]);
    let rhs = nalgebra::DVector::from_iterator(s, support.iter().map(|&j| sys.b[j]));
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::Singular("active submatrix is not positive definite".into()))?;
    let sol = chol.solve(&rhs);
    let mut beta = Array1::zeros(p);
    for (k, &j) in support.iter().enumerate() {
        beta[j] = sol[k];
    }
    Ok(beta)
}

/// Best-achievable selection counts along a path: entry `m-1` is the largest
/// number of true variables captured by any path point of size at most `m`.
pub fn selection_curve(path: &SolutionPath, true_support: &[usize], max_size: usize) -> Vec<usize> {
    let mut curve = vec![0usize; max_size];
    for k in 0..path.len() {
        let active = path.active_set(k);
        let size = active.len();
        if size == 0 || size > max_size {
            continue;
        }
        let correct = active
            .iter()
            .filter(|j| true_support.contains(j))
            .count();
        if correct > curve[size - 1] {
            curve[size - 1] = correct;
        }
    }
    // running maximum makes the curve nondecreasing in the size budget
    for m in 1..max_size {
        curve[m] = curve[m].max(curve[m - 1]);
    }
    curve
}

/// Aggregate of one method across replicates.
#[derive(Debug, Clone)]
pub struct MethodSummary {
    pub label: String,
    pub metrics: Vec<Option<SimMetrics>>,
    pub curves: Vec<Option<Vec<usize>>>,
    pub mean: Option<SimMetricsMean>,
    pub sd: Option<SimMetricsMean>,
    pub curve_mean: Vec<f64>,
}

/// Real-valued image of [`SimMetrics`] for means and standard deviations.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimMetricsMean {
    pub pe1: f64,
    pub pe2: f64,
    pub l2_loss: f64,
    pub l1_loss: f64,
    pub num_selected: f64,
    pub false_negatives: f64,
    pub false_negatives_strong: f64,
}

fn as_mean(m: &SimMetrics) -> SimMetricsMean {
    SimMetricsMean {
        pe1: m.pe1,
        pe2: m.pe2,
        l2_loss: m.l2_loss,
        l1_loss: m.l1_loss,
        num_selected: m.num_selected as f64,
        false_negatives: m.false_negatives as f64,
        false_negatives_strong: m.false_negatives_strong as f64,
    }
}

fn summarize(label: String, metrics: Vec<Option<SimMetrics>>, curves: Vec<Option<Vec<usize>>>, curve_len: usize) -> MethodSummary {
    let ok: Vec<SimMetricsMean> = metrics.iter().flatten().map(as_mean).collect();
    let (mean, sd) = if ok.is_empty() {
        (None, None)
    } else {
        let k = ok.len() as f64;
        let mut mean = SimMetricsMean::default();
        for m in &ok {
            mean.pe1 += m.pe1;
            mean.pe2 += m.pe2;
            mean.l2_loss += m.l2_loss;
            mean.l1_loss += m.l1_loss;
            mean.num_selected += m.num_selected;
            mean.false_negatives += m.false_negatives;
            mean.false_negatives_strong += m.false_negatives_strong;
        }
        mean.pe1 /= k;
        mean.pe2 /= k;
        mean.l2_loss /= k;
        mean.l1_loss /= k;
        mean.num_selected /= k;
        mean.false_negatives /= k;
        mean.false_negatives_strong /= k;
        let mut var = SimMetricsMean::default();
        for m in &ok {
            var.pe1 += (m.pe1 - mean.pe1).powi(2);
            var.pe2 += (m.pe2 - mean.pe2).powi(2);
            var.l2_loss += (m.l2_loss - mean.l2_loss).powi(2);
            var.l1_loss += (m.l1_loss - mean.l1_loss).powi(2);
            var.num_selected += (m.num_selected - mean.num_selected).powi(2);
            var.false_negatives += (m.false_negatives - mean.false_negatives).powi(2);
            var.false_negatives_strong +=
                (m.false_negatives_strong - mean.false_negatives_strong).powi(2);
        }
        let denom = if ok.len() > 1 { k - 1.0 } else { 1.0 };
        let sd = SimMetricsMean {
            pe1: (var.pe1 / denom).sqrt(),
            pe2: (var.pe2 / denom).sqrt(),
            l2_loss: (var.l2_loss / denom).sqrt(),
            l1_loss: (var.l1_loss / denom).sqrt(),
            num_selected: (var.num_selected / denom).sqrt(),
            false_negatives: (var.false_negatives / denom).sqrt(),
            false_negatives_strong: (var.false_negatives_strong / denom).sqrt(),
        };
        (Some(mean), Some(sd))
    };

    let mut curve_mean = vec![0.0; curve_len];
    let mut count = 0.0;
    for c in curves.iter().flatten() {
        for (m, v) in c.iter().enumerate() {
            curve_mean[m] += *v as f64;
        }
        count += 1.0;
    }
    if count > 0.0 {
        for v in curve_mean.iter_mut() {
            *v /= count;
        }
    }
    MethodSummary {
        label,
        metrics,
        curves,
        mean,
        sd,
        curve_mean,
    }
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub config: SimStudyConfig,
    pub folds: usize,
    pub c0: f64,
    pub curve_max_size: usize,
    pub methods: Vec<MethodSummary>,
    pub oracle: MethodSummary,
    /// Replicate failures as (replicate index, message); never fatal.
    pub failures: Vec<(usize, String)>,
    /// Descent violations across all fits in the concavity-below-one regime.
    pub convex_regime_violations: usize,
}

/// Run the full replicate study: generate data, cross-validate every method,
/// evaluate metrics on an independent test sample, and aggregate.
pub fn run_study(
    cfg: &SimStudyConfig,
    methods: &[FitMethod],
    cfg_fit: &FitConfig,
    folds: usize,
) -> Result<StudyReport> {
    let paired: Vec<(FitMethod, FitConfig)> = methods
        .iter()
        .map(|m| (m.clone(), cfg_fit.clone()))
        .collect();
    run_study_with_configs(cfg, &paired, folds)
}

/// Study variant with a fitting configuration per method, for designs where
/// a shared grid depth would be wasteful (penalties explore very different
/// sparsity ranges on the same data).
pub fn run_study_with_configs(
    cfg: &SimStudyConfig,
    methods: &[(FitMethod, FitConfig)],
    folds: usize,
) -> Result<StudyReport> {
    cfg.validate()?;
    for (_, fit) in methods {
        fit.validate()?;
    }
    if methods.is_empty() {
        return Err(Error::Config("at least one method is required".into()));
    }
    let sim = Simulator::new(cfg.clone())?;
    let curve_max = cfg.p.min(40);

    struct RepOutcome {
        per_method: Vec<(SimMetrics, Vec<usize>)>,
        oracle: (SimMetrics, Vec<usize>),
        violations: usize,
    }

    let outcomes: Vec<std::result::Result<RepOutcome, String>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let run = || -> Result<RepOutcome> {
                let rep_seed = derive_seed(cfg.seed, "replicate", r as u64);
                let test_seed = derive_seed(cfg.seed, "test-sample", r as u64);
                let fold_seed = derive_seed(cfg.seed, "cv-folds", r as u64);
                let gen = sim.gen_dataset(rep_seed)?;
                let test = sim.gen_test(test_seed, &gen.beta0)?;
                let test_sys = PseudoscoreSystem::from_dataset(&test);
                let plan = cv_plan(&gen.dataset, folds, fold_seed)?;

                let true_support: Vec<usize> = gen
                    .beta0
                    .iter()
                    .enumerate()
                    .filter(|(_, &b)| b != 0.0)
                    .map(|(j, _)| j)
                    .collect();

                let mut per_method = Vec::with_capacity(methods.len());
                let mut violations = 0usize;
                for (method, cfg_fit) in methods {
                    let cv = kfold_cv_with_plan(&plan, method, cfg_fit)?;
                    violations += cv.convex_regime_violations;
                    let metrics = eval_metrics_with_system(
                        &cv.beta_at_best,
                        &gen.beta0,
                        &gen.strong_support,
                        &test,
                        &test_sys,
                    )?;
                    let curve = selection_curve(&cv.full_path, &true_support, curve_max);
                    per_method.push((metrics, curve));
                }

                let beta_oracle = oracle_fit_system(&plan.full_system, &true_support)?;
                let oracle_metrics = eval_metrics_with_system(
                    &beta_oracle,
                    &gen.beta0,
                    &gen.strong_support,
                    &test,
                    &test_sys,
                )?;
                let oracle_curve = vec![0usize; curve_max];
                Ok(RepOutcome {
                    per_method,
                    oracle: (oracle_metrics, oracle_curve),
                    violations,
                })
            };
            run().map_err(|e| e.to_string())
        })
        .collect();

    let mut failures = Vec::new();
    let mut violations = 0usize;
    let mut method_metrics: Vec<Vec<Option<SimMetrics>>> =
        vec![Vec::with_capacity(cfg.replicates); methods.len()];
    let mut method_curves: Vec<Vec<Option<Vec<usize>>>> =
        vec![Vec::with_capacity(cfg.replicates); methods.len()];
    let mut oracle_metrics = Vec::with_capacity(cfg.replicates);
    let mut oracle_curves = Vec::with_capacity(cfg.replicates);

    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(out) => {
                violations += out.violations;
                for (i, (m, c)) in out.per_method.into_iter().enumerate() {
                    method_metrics[i].push(Some(m));
                    method_curves[i].push(Some(c));
                }
                oracle_metrics.push(Some(out.oracle.0));
                oracle_curves.push(Some(out.oracle.1));
            }
            Err(msg) => {
                failures.push((r, msg));
                for i in 0..methods.len() {
                    method_metrics[i].push(None);
                    method_curves[i].push(None);
                }
                oracle_metrics.push(None);
                oracle_curves.push(None);
            }
        }
    }

    let summaries: Vec<MethodSummary> = methods
        .iter()
        .enumerate()
        .map(|(i, (method, _))| {
            summarize(
                method.label(),
                std::mem::take(&mut method_metrics[i]),
                std::mem::take(&mut method_curves[i]),
                curve_max,
            )
        })
        .collect();
    let oracle = summarize("oracle".into(), oracle_metrics, oracle_curves, curve_max);

    Ok(StudyReport {
        config: cfg.clone(),
        folds,
        c0: sim.c0(),
        curve_max_size: curve_max,
        methods: summaries,
        oracle,
        failures,
        convex_regime_violations: violations,
    })
}
