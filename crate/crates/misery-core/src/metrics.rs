//! Regression metrics for benchmark runs: MAE, RMSE, Pearson,
//! Spearman (average ranks for ties) and the coefficient of
//! determination.
//!
//! All functions take `(predicted, truth)` pairs. Unparseable model
//! replies never reach these functions; they are excluded upstream and
//! carried as a count on [`PredictionSet`].

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricError {
    #[error("no pairs to evaluate")]
    Empty,
    #[error("metric needs at least {needed} pairs, got {got}")]
    TooFewPairs { needed: usize, got: usize },
    #[error("correlation undefined: predictions are constant")]
    ConstantPredictions,
    #[error("correlation undefined: truths are constant")]
    ConstantTruths,
    #[error("pair {index}: truth {value} outside [0, 100]")]
    TruthOutOfRange { index: usize, value: f64 },
}

/// The outcome of one benchmark run: kept `(predicted, truth)` pairs
/// plus the number of replies that produced no usable prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pairs: Vec<(f64, f64)>,
    invalid_count: usize,
}

impl PredictionSet {
    pub fn new(pairs: Vec<(f64, f64)>, invalid_count: usize) -> Result<Self, MetricError> {
        for (index, &(_, truth)) in pairs.iter().enumerate() {
            if !(0.0..=100.0).contains(&truth) {
                return Err(MetricError::TruthOutOfRange {
                    index,
                    value: truth,
                });
            }
        }
        Ok(Self {
            pairs,
            invalid_count,
        })
    }

    /// Splits per-item outcomes into kept pairs and an invalid count.
    pub fn from_outcomes(
        outcomes: impl IntoIterator<Item = (Option<f64>, f64)>,
    ) -> Result<Self, MetricError> {
        let mut pairs = Vec::new();
        let mut invalid_count = 0;
        for (prediction, truth) in outcomes {
            match prediction {
                Some(p) => pairs.push((p, truth)),
                None => invalid_count += 1,
            }
        }
        Self::new(pairs, invalid_count)
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn invalid_count(&self) -> usize {
        self.invalid_count
    }
}

/// All five metrics over one run. Serializes flat, one field per
/// metric, plus the pair counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub count: usize,
    pub invalid_count: usize,
    pub mae: f64,
    pub rmse: f64,
    pub pearson: f64,
    pub spearman: f64,
    pub r_squared: f64,
}

/// Mean absolute error.
pub fn mae(pairs: &[(f64, f64)]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::Empty);
    }
    let total: f64 = pairs.iter().map(|(p, t)| (p - t).abs()).sum();
    Ok(total / pairs.len() as f64)
}

/// Root mean squared error.
pub fn rmse(pairs: &[(f64, f64)]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::Empty);
    }
    let total: f64 = pairs.iter().map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(libm::sqrt(total / pairs.len() as f64))
}

/// Pearson correlation: covariance over the product of standard
/// deviations. Errors when either side is constant.
pub fn pearson(pairs: &[(f64, f64)]) -> Result<f64, MetricError> {
    require_pairs(pairs, 2)?;
    let preds: Vec<f64> = pairs.iter().map(|&(p, _)| p).collect();
    let truths: Vec<f64> = pairs.iter().map(|&(_, t)| t).collect();
    pearson_of(&preds, &truths)
}

/// Spearman rank correlation: Pearson over average ranks, where tied
/// values share the mean of the rank positions they span.
pub fn spearman(pairs: &[(f64, f64)]) -> Result<f64, MetricError> {
    require_pairs(pairs, 2)?;
    let preds: Vec<f64> = pairs.iter().map(|&(p, _)| p).collect();
    let truths: Vec<f64> = pairs.iter().map(|&(_, t)| t).collect();
    pearson_of(&average_ranks(&preds), &average_ranks(&truths))
}

/// Coefficient of determination: `1 - SS_res / SS_tot`, where SS_tot
/// is taken about the mean of the evaluated truths. May be negative
/// for predictors worse than the truth-mean baseline.
pub fn r_squared(pairs: &[(f64, f64)]) -> Result<f64, MetricError> {
    require_pairs(pairs, 2)?;
    let n = pairs.len() as f64;
    let truth_mean = pairs.iter().map(|&(_, t)| t).sum::<f64>() / n;
    let ss_tot: f64 = pairs
        .iter()
        .map(|&(_, t)| (t - truth_mean) * (t - truth_mean))
        .sum();
    if ss_tot == 0.0 {
        return Err(MetricError::ConstantTruths);
    }
    let ss_res: f64 = pairs.iter().map(|&(p, t)| (p - t) * (p - t)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Computes the full bundle over a run. Needs at least 2 kept pairs;
/// invalid replies are excluded from the math and echoed as a count.
pub fn evaluate_run(set: &PredictionSet) -> Result<MetricBundle, MetricError> {
    require_pairs(set.pairs(), 2)?;
    Ok(MetricBundle {
        count: set.pairs().len(),
        invalid_count: set.invalid_count(),
        mae: mae(set.pairs())?,
        rmse: rmse(set.pairs())?,
        pearson: pearson(set.pairs())?,
        spearman: spearman(set.pairs())?,
        r_squared: r_squared(set.pairs())?,
    })
}

fn require_pairs(pairs: &[(f64, f64)], needed: usize) -> Result<(), MetricError> {
    if pairs.len() < needed {
        if pairs.is_empty() {
            return Err(MetricError::Empty);
        }
        return Err(MetricError::TooFewPairs {
            needed,
            got: pairs.len(),
        });
    }
    Ok(())
}

fn pearson_of(xs: &[f64], ys: &[f64]) -> Result<f64, MetricError> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        var_x += (x - mx) * (x - mx);
        var_y += (y - my) * (y - my);
    }
    if var_x == 0.0 {
        return Err(MetricError::ConstantPredictions);
    }
    if var_y == 0.0 {
        return Err(MetricError::ConstantTruths);
    }
    Ok(cov / libm::sqrt(var_x * var_y))
}

/// Ranks 1..=n with ties assigned the mean of the positions they span.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) hold equal values; 1-based ranks
        // i+1..=j+1 average to (i + j) / 2 + 1.
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}
