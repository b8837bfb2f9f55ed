//! Fast invariant checks shared by the test suite and the `validate`
//! command.

use serde::Serialize;

use crate::error::Result;
use crate::estimator::{allocate_samples, build_index_set, run_mimc, LevelSpec, RunOptions, VarianceModel};
use crate::harness::presets::Preset;
use crate::model::{DriftSpec, InitSpec};
use crate::noise::{aggregate_pair, coarsen, ou_variance, sample_lattice};
use crate::rng::StreamKey;
use crate::solver::{double_difference, solve, Grids, QoIValue};
use crate::transform::SineTransform;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed deviation against the tolerance.
    pub worst: f64,
    pub tolerance: f64,
}

fn check(name: &'static str, worst: f64, tolerance: f64) -> Check {
    Check { name, passed: worst.is_finite() && worst <= tolerance, worst, tolerance }
}

/// Largest relative gap between pairwise-aggregated fine increments and the
/// coarse lattice, plus the matching variance identity.
pub fn aggregation_identity() -> Result<f64> {
    let problem = Preset::LinearNu4_3.problem();
    let lattice = sample_lattice(&problem, 16, 64, StreamKey::new(7, [0, 0], 0))?;
    let coarse = coarsen(&lattice, &problem.spectrum, 2)?;
    let tau = lattice.tau_fine();
    let mut worst: f64 = 0.0;
    for k in 1..=16 {
        let lambda = problem.spectrum.scale * (k as f64).powf(problem.spectrum.exponent);
        for j in 0..32 {
            let want = aggregate_pair(lambda, tau, lattice.get(k, 2 * j), lattice.get(k, 2 * j + 1));
            let got = coarse.get(k, j);
            worst = worst.max((got - want).abs() / want.abs().max(1e-300));
        }
        let v1 = ou_variance(lambda, tau);
        let v2 = ou_variance(lambda, 2.0 * tau);
        let agg = (-2.0 * lambda * tau).exp() * v1 + v1;
        worst = worst.max((agg - v2).abs() / v2);
    }
    Ok(worst)
}

/// Drift-free, noise-free solve against `e^{-lambda_k T} x_k`.
pub fn semigroup_exactness() -> Result<f64> {
    let mut problem = Preset::LinearNu4_3.problem();
    problem.noise.amplitude = 0.0;
    problem.drift = DriftSpec::zero();
    let init: Vec<f64> = (1..=32).map(|k| 1.0 / k as f64).collect();
    problem.init = InitSpec::CoefficientList(init.clone());
    let lattice = sample_lattice(&problem, 32, 64, StreamKey::new(1, [0, 0], 0))?;
    let out = solve(&problem, 64, 32, &lattice)?;
    let mut worst: f64 = 0.0;
    for (k, (&x, &x0)) in out.terminal.coeffs.iter().zip(&init).enumerate() {
        let lambda = problem.spectrum.scale * ((k + 1) as f64).powf(problem.spectrum.exponent);
        worst = worst.max((x - x0 * (-lambda).exp()).abs());
    }
    Ok(worst)
}

/// Coefficients to grid and back.
pub fn transform_round_trip() -> f64 {
    let mut worst: f64 = 0.0;
    for &(modes, oversample) in &[(8, 2), (32, 4), (64, 8)] {
        let mut t = SineTransform::new(modes, oversample);
        let coeffs: Vec<f64> = (1..=modes).map(|k| ((k * 37 % 11) as f64 - 5.0) / k as f64).collect();
        let mut grid = vec![0.0; t.points()];
        let mut back = vec![0.0; modes];
        t.to_grid(&coeffs, &mut grid);
        t.from_grid(&grid, &mut back);
        for (a, b) in coeffs.iter().zip(&back) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// `sum_{l <= (4, 4)} Delta_l Psi` against `Psi` on the finest corner, for
/// the same path.
pub fn telescoping_rectangle() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for preset in [Preset::LinearNu4_3, Preset::NonlinearNu4_3] {
        let problem = preset.problem();
        let grids = Grids::dyadic(4);
        let lattice = sample_lattice(&problem, grids.modes(4), grids.steps(4), StreamKey::new(3, [4, 4], 0))?;
        let mut sum = QoIValue::Vector(Vec::new());
        for l1 in 0..=4 {
            for l2 in 0..=4 {
                sum.add_scaled(1.0, &double_difference(&problem, (l1, l2), &grids, &lattice)?);
            }
        }
        let corner = solve(&problem, grids.steps(4), grids.modes(4), &lattice)?.qoi;
        worst = worst.max(sum.difference(&corner).norm());
    }
    Ok(worst)
}

/// Closure of generated index sets, allocation keys and the cost audit;
/// returns the number of violations.
pub fn structural() -> Result<f64> {
    let mut violations = 0usize;
    for preset in Preset::ALL {
        for model in [VarianceModel::Standard, VarianceModel::Reduced] {
            let rates = preset.rates(model);
            for k in 1..=10 {
                let eps = (-(k as f64)).exp2() * 0.99;
                let set = build_index_set(LevelSpec::Tolerance(eps), &rates)?;
                let alloc = allocate_samples(eps, &set, &rates)?;
                violations += usize::from(!set.is_downward_closed());
                violations += usize::from(alloc.counts.keys().copied().ne(set.members().iter().copied()));
            }
        }
    }
    let problem = Preset::LinearNu4_3.problem();
    let out = run_mimc(&problem, 0.4, &Preset::LinearNu4_3.rates(VarianceModel::Standard), 2, &RunOptions::default())?;
    violations += usize::from(out.total_cost != out.audited_cost());
    Ok(violations as f64)
}

/// Runs every check; a check that errors counts as failed.
pub fn run_all() -> Vec<Check> {
    let or_inf = |r: Result<f64>| r.unwrap_or(f64::INFINITY);
    vec![
        check("noise aggregation identity", or_inf(aggregation_identity()), 1e-13),
        check("noise-free solve is the semigroup", or_inf(semigroup_exactness()), 1e-12),
        check("sine transform round trip", transform_round_trip(), 1e-12),
        check("telescoping over 5x5 levels", or_inf(telescoping_rectangle()), 1e-10),
        check("index sets, allocation keys and cost audit", or_inf(structural()), 0.0),
    ]
}

/// Plain-text pass/fail table.
pub fn format_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in checks {
        out.push_str(&format!(
            "{:<width$}  {}  worst={:.3e} tol={:.0e}\n",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.worst,
            c.tolerance,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        let checks = run_all();
        let table = format_table(&checks);
        assert!(checks.iter().all(|c| c.passed), "{table}");
        assert_eq!(table.lines().count(), checks.len());
    }
}
