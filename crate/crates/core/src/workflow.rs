//! Train/test risk-stratification workflow: cross-validate on the training
//! set, then score the held-out set, split it into equal-size risk groups,
//! and compare them with the log-rank test.

use crate::crossval::{kfold_cv, select_index, CvResult, SelectionRule};
use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::pseudoscore::PseudoscoreSystem;
use crate::risk::{logrank_test, risk_split, LogRankResult};
use crate::solver::{FitConfig, FitMethod};

#[derive(Debug, Clone)]
pub struct EvaluationOutcome {
    pub cv: CvResult,
    pub selected_lambda: f64,
    pub selected_index: usize,
    /// (index, name, coefficient) of the selected features.
    pub selected_features: Vec<(usize, String, f64)>,
    /// Quadratic prediction loss of the fit on the test set's own system.
    pub prediction_error: f64,
    /// Set when the selected fit is the zero vector; the risk split then
    /// degenerates to the index split.
    pub null_model: bool,
    pub logrank: LogRankResult,
}

pub fn evaluate_risk_stratification(
    train: &SurvivalDataset,
    test: &SurvivalDataset,
    method: &FitMethod,
    cfg: &FitConfig,
    folds: usize,
    seed: u64,
    rule: SelectionRule,
) -> Result<EvaluationOutcome> {
    if train.p() != test.p() {
        return Err(Error::Dimension {
            expected: train.p(),
            got: test.p(),
        });
    }
    let cv = kfold_cv(train, method, cfg, folds, seed)?;
    let selected_index = select_index(&cv, rule);
    let selected_lambda = cv.lambdas[selected_index];
    let beta = cv.full_path.betas[selected_index].clone();

    let names = train.feature_names();
    let selected_features: Vec<(usize, String, f64)> = beta
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(j, &v)| {
            let name = names
                .map(|ns| ns[j].clone())
                .unwrap_or_else(|| format!("x{}", j + 1));
            (j, name, v)
        })
        .collect();
    let null_model = selected_features.is_empty();

    let test_sys = PseudoscoreSystem::from_dataset(test);
    let prediction_error = test_sys.loss(beta.view())?;

    let groups = risk_split(test, &beta)?;
    let logrank = logrank_test(test.times(), test.status(), &groups)?;

    Ok(EvaluationOutcome {
        cv,
        selected_lambda,
        selected_index,
        selected_features,
        prediction_error,
        null_model,
        logrank,
    })
}
