use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{cost_model, sample_index, RunOptions};
use crate::model::ProblemSpec;

use super::fit::least_squares_line;

/// Largest level accepted by [`estimate_rate_surface`].
pub const MAX_SURFACE_LEVEL: usize = 8;

/// `e_F(l1, l2)` with its delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub l1: usize,
    pub l2: usize,
    #[serde(rename = "eF")]
    pub ef: f64,
    pub stderr: f64,
    pub m: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RateSurface {
    pub points: Vec<SurfacePoint>,
    #[serde(default)]
    pub problem: serde_json::Value,
}

impl RateSurface {
    pub fn get(&self, l1: usize, l2: usize) -> Option<&SurfacePoint> {
        self.points.iter().find(|p| p.l1 == l1 && p.l2 == l2)
    }

    /// Least-squares slope of `-log2 e_F` along `l1` at fixed `l2`, over
    /// `l1` in `range`.
    pub fn l1_slope(&self, l2: usize, range: std::ops::RangeInclusive<usize>) -> Option<f64> {
        let pts: Vec<(f64, f64)> = range
            .filter_map(|l1| self.get(l1, l2))
            .filter(|p| p.ef > 0.0)
            .map(|p| (p.l1 as f64, -p.ef.log2()))
            .collect();
        least_squares_line(&pts).map(|(slope, _)| slope)
    }

    /// Least-squares slope of `-log2 e_F` along `l2` at fixed `l1`.
    pub fn l2_slope(&self, l1: usize, range: std::ops::RangeInclusive<usize>) -> Option<f64> {
        let pts: Vec<(f64, f64)> = range
            .filter_map(|l2| self.get(l1, l2))
            .filter(|p| p.ef > 0.0)
            .map(|p| (p.l2 as f64, -p.ef.log2()))
            .collect();
        least_squares_line(&pts).map(|(slope, _)| slope)
    }
}

/// Monte Carlo estimate of `||Delta_l X||_{L2(Omega; H)}` over
/// `0 <= l1, l2 <= max_level` with `samples` draws per point.
pub fn estimate_rate_surface(
    problem: &ProblemSpec,
    max_level: usize,
    samples: u64,
    seed: u64,
    opts: &RunOptions,
) -> Result<RateSurface> {
    problem.validate()?;
    if max_level > MAX_SURFACE_LEVEL {
        return Err(Error::domain(format!(
            "rate surfaces are limited to level {MAX_SURFACE_LEVEL}, got {max_level}"
        )));
    }
    if samples < 2 {
        return Err(Error::domain("rate surfaces need at least two samples per point"));
    }
    let log_exponent = problem.drift.log_exponent();
    if let Some(cap) = opts.budget_cap {
        let planned: f64 = (0..=max_level)
            .flat_map(|a| (0..=max_level).map(move |b| (a, b)))
            .map(|idx| samples as f64 * cost_model(idx, log_exponent))
            .sum();
        if planned > cap {
            return Err(Error::domain(format!(
                "rate surface needs {planned} cost units, above the cap of {cap}"
            )));
        }
    }
    let mut points = Vec::with_capacity((max_level + 1).pow(2));
    for l1 in 0..=max_level {
        for l2 in 0..=max_level {
            let acc = sample_index(problem, (l1, l2), samples, seed, opts)?;
            let mean_sq = acc.mean_norm_sq();
            let ef = mean_sq.sqrt();
            let se_sq = (acc.norm_sq_variance() / samples as f64).sqrt();
            let stderr = if ef > 0.0 { se_sq / (2.0 * ef) } else { 0.0 };
            points.push(SurfacePoint { l1, l2, ef, stderr, m: samples });
        }
    }
    Ok(RateSurface {
        points,
        problem: serde_json::to_value(problem).unwrap_or(serde_json::Value::Null),
    })
}
