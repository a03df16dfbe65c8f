//! Plain-text output documents.
//!
//! All documents are line-oriented `key = value` headers followed by
//! whitespace-separated tables, with a format-version line up front. Floats
//! are printed in the shortest round-trip form, so identical computations
//! serialize to identical bytes.

use std::fmt::Write;

use crate::crossval::{CvResult, SelectionRule};
use crate::simulate::{MethodSummary, StudyReport};
use crate::solver::SolutionPath;
use crate::workflow::EvaluationOutcome;

pub const FORMAT_VERSION: u32 = 1;

fn flag(b: bool) -> u8 {
    u8::from(b)
}

/// Path document: grid table plus the nonzero coefficients of every point.
pub fn path_document(path: &SolutionPath, n: usize, p: usize) -> String {
    let mut out = String::new();
    writeln!(out, "sparsehaz-path v{FORMAT_VERSION}").unwrap();
    writeln!(out, "penalty = {}", path.label).unwrap();
    writeln!(out, "n = {n}").unwrap();
    writeln!(out, "p = {p}").unwrap();
    writeln!(out, "grid_requested = {}", path.requested_grid).unwrap();
    writeln!(out, "grid_fitted = {}", path.len()).unwrap();
    writeln!(out, "early_stopped = {}", flag(path.early_stopped)).unwrap();
    writeln!(out, "[grid]").unwrap();
    writeln!(
        out,
        "# index lambda objective sweeps converged convexity_warning kappa_lt_one nonzeros"
    )
    .unwrap();
    for k in 0..path.len() {
        writeln!(
            out,
            "{k} {} {} {} {} {} {} {}",
            path.lambdas[k],
            path.objective_values[k],
            path.sweeps_used[k],
            flag(path.converged[k]),
            flag(path.convexity_warnings[k]),
            flag(path.kappa_lt_one[k]),
            path.n_nonzero(k)
        )
        .unwrap();
    }
    writeln!(out, "[coefficients]").unwrap();
    writeln!(out, "# grid_index coefficient_index value").unwrap();
    for k in 0..path.len() {
        for (j, &v) in path.betas[k].iter().enumerate() {
            if v != 0.0 {
                writeln!(out, "{k} {j} {v}").unwrap();
            }
        }
    }
    out
}

/// Cross-validation document: score table, the selected grid value under the
/// given rule, and the full-data coefficients at that value.
pub fn cv_document(
    cv: &CvResult,
    rule: SelectionRule,
    selected_index: usize,
    seed: u64,
    feature_names: Option<&[String]>,
) -> String {
    let mut out = String::new();
    writeln!(out, "sparsehaz-cv v{FORMAT_VERSION}").unwrap();
    writeln!(out, "penalty = {}", cv.method_label).unwrap();
    writeln!(out, "folds = {}", cv.fold_assignment.iter().max().map_or(0, |m| m + 1)).unwrap();
    writeln!(out, "seed = {seed}").unwrap();
    writeln!(out, "rule = {}", rule.label()).unwrap();
    writeln!(out, "selected_index = {selected_index}").unwrap();
    writeln!(out, "selected_lambda = {}", cv.lambdas[selected_index]).unwrap();
    writeln!(out, "[cv]").unwrap();
    writeln!(out, "# index lambda score se").unwrap();
    for k in 0..cv.lambdas.len() {
        writeln!(
            out,
            "{k} {} {} {}",
            cv.lambdas[k], cv.cv_scores[k], cv.cv_se[k]
        )
        .unwrap();
    }
    writeln!(out, "[selected_coefficients]").unwrap();
    writeln!(out, "# coefficient_index name value").unwrap();
    let beta = &cv.full_path.betas[selected_index];
    for (j, &v) in beta.iter().enumerate() {
        if v != 0.0 {
            let name = feature_names
                .map(|ns| ns[j].clone())
                .unwrap_or_else(|| format!("x{}", j + 1));
            writeln!(out, "{j} {name} {v}").unwrap();
        }
    }
    out
}

fn method_row(out: &mut String, s: &MethodSummary) {
    match (&s.mean, &s.sd) {
        (Some(mean), Some(sd)) => writeln!(
            out,
            "{} {} {} {} {} {} {} {} {} {} {} {} {} {} {}",
            s.label,
            mean.pe1,
            sd.pe1,
            mean.pe2,
            sd.pe2,
            mean.l2_loss,
            sd.l2_loss,
            mean.l1_loss,
            sd.l1_loss,
            mean.num_selected,
            sd.num_selected,
            mean.false_negatives,
            sd.false_negatives,
            mean.false_negatives_strong,
            sd.false_negatives_strong
        )
        .unwrap(),
        _ => writeln!(out, "{} failed", s.label).unwrap(),
    }
}

/// Study report: the aggregate per-method metric table and the mean
/// selection-curve arrays.
pub fn study_document(report: &StudyReport) -> String {
    let cfg = &report.config;
    let mut out = String::new();
    writeln!(out, "sparsehaz-study v{FORMAT_VERSION}").unwrap();
    writeln!(out, "seed = {}", cfg.seed).unwrap();
    writeln!(out, "n = {}", cfg.n).unwrap();
    writeln!(out, "p = {}", cfg.p).unwrap();
    writeln!(out, "rho = {}", cfg.rho).unwrap();
    writeln!(out, "censoring_target = {}", cfg.target_censoring).unwrap();
    writeln!(out, "censoring_bound = {}", report.c0).unwrap();
    writeln!(out, "weak_count = {}", cfg.weak_effect_count).unwrap();
    writeln!(out, "weak_eps = {}", cfg.weak_effect_eps).unwrap();
    writeln!(out, "replicates = {}", cfg.replicates).unwrap();
    writeln!(out, "test_n = {}", cfg.test_n).unwrap();
    writeln!(out, "folds = {}", report.folds).unwrap();
    writeln!(out, "failed_replicates = {}", report.failures.len()).unwrap();
    writeln!(out, "[metrics]").unwrap();
    writeln!(
        out,
        "# method pe1 pe1_sd pe2 pe2_sd l2 l2_sd l1 l1_sd ns ns_sd fn fn_sd fns fns_sd"
    )
    .unwrap();
    for s in &report.methods {
        method_row(&mut out, s);
    }
    method_row(&mut out, &report.oracle);
    writeln!(out, "[selection_curve]").unwrap();
    writeln!(out, "# method curve_values_by_model_size").unwrap();
    for s in &report.methods {
        write!(out, "{}", s.label).unwrap();
        for v in &s.curve_mean {
            write!(out, " {v}").unwrap();
        }
        out.push('\n');
    }
    if !report.failures.is_empty() {
        writeln!(out, "[failures]").unwrap();
        for (r, msg) in &report.failures {
            writeln!(out, "{r} {msg}").unwrap();
        }
    }
    out
}

/// Evaluation document: prediction error, risk-group log-rank comparison, and
/// the selected features with coefficients.
pub fn evaluation_document(
    outcome: &EvaluationOutcome,
    rule: SelectionRule,
    folds: usize,
    seed: u64,
) -> String {
    let mut out = String::new();
    writeln!(out, "sparsehaz-evaluation v{FORMAT_VERSION}").unwrap();
    writeln!(out, "penalty = {}", outcome.cv.method_label).unwrap();
    writeln!(out, "folds = {folds}").unwrap();
    writeln!(out, "seed = {seed}").unwrap();
    writeln!(out, "rule = {}", rule.label()).unwrap();
    writeln!(out, "selected_lambda = {}", outcome.selected_lambda).unwrap();
    writeln!(out, "selected_count = {}", outcome.selected_features.len()).unwrap();
    writeln!(out, "prediction_error = {}", outcome.prediction_error).unwrap();
    writeln!(out, "null_model = {}", flag(outcome.null_model)).unwrap();
    writeln!(out, "[logrank]").unwrap();
    writeln!(out, "statistic = {}", outcome.logrank.statistic).unwrap();
    writeln!(out, "p_value = {}", outcome.logrank.p_value).unwrap();
    writeln!(
        out,
        "group_sizes = {} {}",
        outcome.logrank.group_sizes.0, outcome.logrank.group_sizes.1
    )
    .unwrap();
    writeln!(
        out,
        "observed_events = {} {}",
        outcome.logrank.observed_events.0, outcome.logrank.observed_events.1
    )
    .unwrap();
    writeln!(out, "[selected_features]").unwrap();
    writeln!(out, "# coefficient_index name value").unwrap();
    for (j, name, v) in &outcome.selected_features {
        writeln!(out, "{j} {name} {v}").unwrap();
    }
    out
}
