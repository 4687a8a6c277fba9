use alloc::vec::Vec;

use super::metrics::nmse;
use super::{EstimatorReport, SparseParams};
use crate::channels::PilotSet;
use crate::linalg::CMat;
use crate::{Error, Result};

/// A validation observation with its ground-truth channel.
#[derive(Debug, Clone)]
pub struct ValidationCase {
    pub pilots: PilotSet,
    pub truth: CMat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningResult {
    pub best: SparseParams,
    /// Mean linear NMSE of the best point.
    pub best_score: f64,
    /// Mean linear NMSE per grid point, in grid order; infinite when an
    /// estimator run failed.
    pub scores: Vec<f64>,
}

/// Grid search minimizing the mean linear NMSE over `cases`. Ties go to the
/// smaller `lambda`, then the smaller step (automatic steps count as 0).
pub fn tune_hyperparams<E>(estimator: E, cases: &[ValidationCase], grid: &[SparseParams]) -> Result<TuningResult>
where
    E: Fn(&PilotSet, &SparseParams) -> Result<EstimatorReport>,
{
    if cases.is_empty() || grid.is_empty() {
        return Err(Error::invalid("tuning needs a nonempty validation set and grid"));
    }
    let mut scores = Vec::with_capacity(grid.len());
    for params in grid {
        let mut total = 0.0;
        for case in cases {
            let err = estimator(&case.pilots, params)
                .and_then(|r| nmse(&r.estimate, &case.truth))
                .unwrap_or(f64::INFINITY);
            total += err;
        }
        let mean = total / cases.len() as f64;
        scores.push(if mean.is_nan() { f64::INFINITY } else { mean });
    }
    let key = |p: &SparseParams| (p.lambda, p.step.unwrap_or(0.0));
    let mut best = 0;
    for i in 1..grid.len() {
        let better = scores[i] < scores[best]
            || (scores[i] == scores[best] && key(&grid[i]) < key(&grid[best]));
        if better {
            best = i;
        }
    }
    Ok(TuningResult {
        best: grid[best],
        best_score: scores[best],
        scores,
    })
}
