//! Risk scoring, equal-size risk grouping, and the two-sample log-rank test.

use ndarray::Array1;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskGroup {
    Low,
    High,
}

/// Split a test set into a low-risk and a high-risk group of (near) equal
/// size by the predicted excess risk `beta' Z`. The `ceil(n/2)` smallest
/// scores are labelled low risk; score ties break by ascending row index.
pub fn risk_split(test: &SurvivalDataset, beta_hat: &Array1<f64>) -> Result<Vec<RiskGroup>> {
    if beta_hat.len() != test.p() {
        return Err(Error::Dimension {
            expected: test.p(),
            got: beta_hat.len(),
        });
    }
    let n = test.n();
    let scores: Vec<f64> = (0..n)
        .map(|i| test.covariate_row(i).dot(beta_hat))
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]).then(i.cmp(&j)));
    let cut = n.div_ceil(2);
    let mut groups = vec![RiskGroup::High; n];
    for &i in &order[..cut] {
        groups[i] = RiskGroup::Low;
    }
    Ok(groups)
}

#[derive(Debug, Clone)]
pub struct LogRankResult {
    /// Chi-squared form of the test statistic (1 degree of freedom).
    pub statistic: f64,
    pub p_value: f64,
    pub group_sizes: (usize, usize),
    pub observed_events: (usize, usize),
}

/// Two-sample log-rank test in the standard unweighted form: at each distinct
/// event time, the observed events in the first group are compared with the
/// hypergeometric expectation given the risk-set sizes, and the squared sum
/// of differences is scaled by the summed hypergeometric variance.
pub fn logrank_test(
    times: &[f64],
    status: &[bool],
    groups: &[RiskGroup],
) -> Result<LogRankResult> {
    let n = times.len();
    if status.len() != n || groups.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: status.len().min(groups.len()),
        });
    }
    let n1 = groups.iter().filter(|&&g| g == RiskGroup::Low).count();
    let n2 = n - n1;
    if n1 == 0 || n2 == 0 {
        return Err(Error::Validation(
            "log-rank test needs two nonempty groups".into(),
        ));
    }
    if !status.iter().any(|&d| d) {
        return Err(Error::Validation(
            "log-rank test needs at least one event".into(),
        ));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| times[i].total_cmp(&times[j]));

    let mut at_risk1 = n1 as f64;
    let mut at_risk = n as f64;
    let mut sum_diff = 0.0;
    let mut sum_var = 0.0;
    let mut obs1 = 0usize;
    let mut obs2 = 0usize;

    let mut k = 0;
    while k < n {
        // group of tied times
        let t = times[order[k]];
        let mut d = 0.0; // events at t
        let mut d1 = 0.0; // events at t in group 1
        let mut leaving = 0.0;
        let mut leaving1 = 0.0;
        let mut j = k;
        while j < n && times[order[j]] == t {
            let i = order[j];
            leaving += 1.0;
            if groups[i] == RiskGroup::Low {
                leaving1 += 1.0;
            }
            if status[i] {
                d += 1.0;
                if groups[i] == RiskGroup::Low {
                    d1 += 1.0;
                    obs1 += 1;
                } else {
                    obs2 += 1;
                }
            }
            j += 1;
        }
        if d > 0.0 {
            let expected = d * at_risk1 / at_risk;
            sum_diff += d1 - expected;
            if at_risk > 1.0 {
                sum_var += d * (at_risk1 / at_risk) * (1.0 - at_risk1 / at_risk)
                    * (at_risk - d)
                    / (at_risk - 1.0);
            }
        }
        at_risk -= leaving;
        at_risk1 -= leaving1;
        k = j;
    }

    if sum_var <= 0.0 {
        return Err(Error::Degenerate(
            "log-rank variance is zero; groups are not comparable at any event time".into(),
        ));
    }
    let statistic = sum_diff * sum_diff / sum_var;
    let chi2 = ChiSquared::new(1.0).expect("valid dof");
    let p_value = chi2.sf(statistic);
    Ok(LogRankResult {
        statistic,
        p_value,
        group_sizes: (n1, n2),
        observed_events: (obs1, obs2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};

    fn groups_from(labels: &[u8]) -> Vec<RiskGroup> {
        labels
            .iter()
            .map(|&x| if x == 0 { RiskGroup::Low } else { RiskGroup::High })
            .collect()
    }

    #[test]
    fn risk_split_sizes_and_ties() {
        let ds = SurvivalDataset::new(
            vec![1.0; 5],
            vec![true; 5],
            Array2::zeros((5, 2)),
            None,
        )
        .unwrap();
        // all scores tie at zero: split by index, low gets ceil(5/2) = 3
        let g = risk_split(&ds, &array![0.0, 0.0]).unwrap();
        assert_eq!(
            g,
            groups_from(&[0, 0, 0, 1, 1])
        );

        let ds80 = SurvivalDataset::new(
            (0..80).map(|i| 1.0 + i as f64).collect(),
            vec![true; 80],
            Array2::from_shape_fn((80, 1), |(i, _)| i as f64),
            None,
        )
        .unwrap();
        let g = risk_split(&ds80, &array![1.0]).unwrap();
        let low = g.iter().filter(|&&x| x == RiskGroup::Low).count();
        assert_eq!((low, 80 - low), (40, 40));
    }

    #[test]
    fn risk_split_is_scale_invariant() {
        let ds = SurvivalDataset::new(
            vec![1.0, 2.0, 3.0, 4.0],
            vec![true, true, false, true],
            array![[0.5, 1.0], [-0.3, 0.2], [1.2, -0.7], [0.0, 0.4]],
            None,
        )
        .unwrap();
        let beta = array![0.8, -0.5];
        let g1 = risk_split(&ds, &beta).unwrap();
        let g2 = risk_split(&ds, &(&beta * 37.5)).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn logrank_identical_groups_is_null() {
        // the same survival experience duplicated into both groups
        let times = [1.0, 2.0, 3.0, 1.0, 2.0, 3.0];
        let status = [true, false, true, true, false, true];
        let groups = groups_from(&[0, 0, 0, 1, 1, 1]);
        let r = logrank_test(&times, &status, &groups).unwrap();
        assert_abs_diff_eq!(r.statistic, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_value, 1.0, epsilon = 1e-12);
        assert_eq!(r.group_sizes, (3, 3));
        assert_eq!(r.observed_events, (2, 2));
    }

    #[test]
    fn logrank_matches_hand_computed_tables() {
        // group 1 fails at 1,2,3; group 2 fails at 4,5,6.
        // By the hypergeometric tables the statistic is 1369/271.
        let times = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let status = [true; 6];
        let groups = groups_from(&[0, 0, 0, 1, 1, 1]);
        let r = logrank_test(&times, &status, &groups).unwrap();
        assert_abs_diff_eq!(r.statistic, 1369.0 / 271.0, epsilon = 1e-10);
        // independent accumulation over explicit tables
        let mut at_risk = 6.0;
        let mut at_risk1 = 3.0;
        let mut diff = 0.0;
        let mut var = 0.0;
        for t in 1..=6 {
            let d1 = if t <= 3 { 1.0 } else { 0.0 };
            diff += d1 - at_risk1 / at_risk;
            // single event per time: (n - d)/(n - 1) = 1
            var += (at_risk1 / at_risk) * (1.0 - at_risk1 / at_risk);
            at_risk -= 1.0;
            if t <= 3 {
                at_risk1 -= 1.0;
            }
        }
        assert_abs_diff_eq!(r.statistic, diff * diff / var, epsilon = 1e-10);
    }

    #[test]
    fn logrank_label_swap_symmetry() {
        let times = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0];
        let status = [true, true, false, true, true, false, true];
        let labels = [0u8, 1, 0, 1, 1, 0, 0];
        let swapped: Vec<u8> = labels.iter().map(|&x| 1 - x).collect();
        let a = logrank_test(&times, &status, &groups_from(&labels)).unwrap();
        let b = logrank_test(&times, &status, &groups_from(&swapped)).unwrap();
        assert_abs_diff_eq!(a.statistic, b.statistic, epsilon = 1e-12);
        assert_eq!(a.group_sizes.0, b.group_sizes.1);
    }

    #[test]
    fn logrank_separated_groups_have_power() {
        use rand::Rng;
        let mut hits = 0;
        for seed in 0..20 {
            let mut rng = crate::seed::rng_from(seed, "logrank-power", 0);
            let n = 200;
            let mut times = Vec::new();
            let mut status = Vec::new();
            let mut groups = Vec::new();
            for g in 0..2 {
                let rate = if g == 0 { 1.0 } else { 5.0 };
                for _ in 0..n {
                    let u: f64 = rng.gen();
                    times.push(-(1.0_f64 - u).ln() / rate);
                    status.push(true);
                    groups.push(if g == 0 { RiskGroup::Low } else { RiskGroup::High });
                }
            }
            let r = logrank_test(&times, &status, &groups).unwrap();
            if r.p_value < 1e-6 {
                hits += 1;
            }
        }
        assert!(hits >= 19, "only {hits} of 20 runs rejected at 1e-6");
    }

    #[test]
    fn logrank_error_paths() {
        let times = [1.0, 2.0];
        assert!(logrank_test(&times, &[true, true], &groups_from(&[0, 0])).is_err());
        assert!(logrank_test(&times, &[false, false], &groups_from(&[0, 1])).is_err());
        // single event with a lone at-risk subject: zero variance
        let err = logrank_test(&[1.0, 2.0], &[false, true], &groups_from(&[0, 1])).unwrap_err();
        assert!(err.to_string().contains("variance"));
    }
}
