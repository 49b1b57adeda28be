//! Log-log least squares over sweep rows.
//!
//! Both axes use the natural log, so the slope is the scaling exponent
//! directly: `-1` means halving per doubling of `P`.

use thiserror::Error;

use super::sweep::SweepRow;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("need at least 3 points for a fit, got {0}")]
    TooFewPoints(usize),
    #[error("non-positive value {value} at P={workers}")]
    NonPositive { workers: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    EvaluationsPerProcessor,
    CommunicationSteps,
}

impl Metric {
    fn of(self, row: &SweepRow) -> f64 {
        match self {
            Metric::EvaluationsPerProcessor => row.evals_per_proc_mean,
            Metric::CommunicationSteps => row.comm_steps_mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Ordinary least squares of `ln y` on `ln x`. A flat series fits
/// perfectly, so `r²` is 1 when `y` does not vary.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<LogLogFit, AnalysisError> {
    if points.len() < 3 {
        return Err(AnalysisError::TooFewPoints(points.len()));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| *x <= 0.0 || *y <= 0.0) {
        return Err(AnalysisError::NonPositive {
            workers: x as usize,
            value: if x <= 0.0 { x } else { y },
        });
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = logs
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let r_squared = if syy > f64::EPSILON * n {
        1.0 - ss_res / syy
    } else {
        1.0
    };
    Ok(LogLogFit {
        slope,
        intercept,
        r_squared,
        points: logs.len(),
    })
}

/// Fits `metric` against `P` over the rows with sync interval `m`. Rows
/// where some replicate did not solve are skipped unless `include_unsolved`.
pub fn fit_loglog_slope(
    rows: &[SweepRow],
    sync_interval: u64,
    metric: Metric,
    include_unsolved: bool,
) -> Result<LogLogFit, AnalysisError> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.sync_interval == sync_interval)
        .filter(|r| include_unsolved || r.all_solved())
        .map(|r| (r.workers as f64, metric.of(r)))
        .collect();
    if let Some(&(p, v)) = points.iter().find(|(_, v)| *v <= 0.0) {
        return Err(AnalysisError::NonPositive {
            workers: p as usize,
            value: v,
        });
    }
    fit_loglog(&points)
}
