use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimator::{mlmc_params, run_mimc, run_mlmc, EstimatorOutput, Method, RateParams, RunOptions, VarianceModel};
use crate::model::ProblemSpec;
use crate::par;
use crate::rng::derive_seed;
use crate::solver::QoIValue;

/// One estimator run of a cost/error sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub method: Method,
    pub epsilon: f64,
    pub error_sq: f64,
    pub cost: f64,
    pub walltime_s: f64,
    pub seed: u64,
    pub replicate: u32,
}

/// A run that did not complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub method: Method,
    pub epsilon: f64,
    pub seed: u64,
    pub replicate: u32,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub failures: Vec<SweepFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepSpec {
    pub methods: Vec<Method>,
    pub epsilons: Vec<f64>,
    pub replicates: u32,
    /// Rates of the standard multi-index estimator; the other methods
    /// derive theirs from it.
    pub rates: RateParams,
    /// Variance model of `MIMC-mixed`.
    #[serde(default)]
    pub mixed: Option<VarianceModel>,
    /// Base seed per replicate; when empty every replicate derives its seed
    /// from the sweep seed.
    #[serde(default)]
    pub replicate_seeds: Vec<u64>,
}

impl SweepSpec {
    pub fn rates_for(&self, method: Method) -> RateParams {
        let model = match method {
            Method::Mimc2 => VarianceModel::Reduced,
            Method::MimcMixed => self.mixed.unwrap_or(self.rates.variance_model),
            _ => VarianceModel::Standard,
        };
        self.rates.clone().with_variance_model(model)
    }
}

/// Seed of replicate `replicate` of `method` at `epsilon`.
pub fn cell_seed(seed: u64, method: Method, epsilon: f64, replicate: u32) -> u64 {
    derive_seed(seed, &[method as u64, epsilon.to_bits(), u64::from(replicate)])
}

/// Runs one estimator.
pub fn run_method(
    problem: &ProblemSpec,
    method: Method,
    epsilon: f64,
    spec: &SweepSpec,
    seed: u64,
    opts: &RunOptions,
) -> Result<EstimatorOutput> {
    match method {
        Method::Mlmc => {
            let r = &spec.rates;
            let params = mlmc_params(epsilon, r.kappa, r.nu, r.alpha1, r.alpha2)?;
            run_mlmc(problem, epsilon, &params, seed, opts)
        }
        _ => run_mimc(problem, epsilon, &spec.rates_for(method), seed, opts),
    }
}

/// Runs every `(method, epsilon, replicate)` cell and records the squared
/// error against `reference` and the accounted cost. Failed cells are
/// reported and the sweep carries on.
pub fn cost_error_sweep(
    problem: &ProblemSpec,
    spec: &SweepSpec,
    reference: &QoIValue,
    seed: u64,
    opts: &RunOptions,
) -> SweepOutcome {
    let cells: Vec<(Method, f64, u32)> = spec
        .methods
        .iter()
        .flat_map(|&m| {
            spec.epsilons
                .iter()
                .flat_map(move |&e| (0..spec.replicates).map(move |r| (m, e, r)))
        })
        .collect();
    let results = par::map_ordered(cells.len(), |c| {
        let (method, epsilon, replicate) = cells[c];
        let base = spec.replicate_seeds.get(replicate as usize).copied().unwrap_or(seed);
        let s = cell_seed(base, method, epsilon, replicate);
        let start = Instant::now();
        let run = run_method(problem, method, epsilon, spec, s, opts);
        let walltime_s = start.elapsed().as_secs_f64();
        match run {
            Ok(out) => Ok(SweepRecord {
                method,
                epsilon,
                error_sq: out.value.difference(reference).norm_sq(),
                cost: out.total_cost,
                walltime_s,
                seed: s,
                replicate,
            }),
            Err(e) => Err(SweepFailure {
                method,
                epsilon,
                seed: s,
                replicate,
                message: e.to_string(),
            }),
        }
    });
    let mut outcome = SweepOutcome::default();
    for r in results {
        match r {
            Ok(rec) => outcome.records.push(rec),
            Err(f) => outcome.failures.push(f),
        }
    }
    outcome
}

/// Slope of `log2 cost` against `log2(1/eps)` over the mean cost per
/// tolerance.
pub fn cost_slope(records: &[SweepRecord], method: Method) -> Option<f64> {
    let mut eps: Vec<f64> = records.iter().filter(|r| r.method == method).map(|r| r.epsilon).collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .map(|&e| {
            let costs: Vec<f64> = records
                .iter()
                .filter(|r| r.method == method && r.epsilon == e)
                .map(|r| r.cost)
                .collect();
            let mean = costs.iter().sum::<f64>() / costs.len() as f64;
            (-e.log2(), mean.log2())
        })
        .collect();
    super::fit::least_squares_line(&pts).map(|(s, _)| s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::presets::Preset;

    fn spec() -> SweepSpec {
        SweepSpec {
            methods: vec![Method::Mimc1, Method::Mlmc],
            epsilons: vec![0.5, 0.25],
            replicates: 2,
            rates: Preset::LinearNu4_3.rates(VarianceModel::Standard),
            mixed: None,
            replicate_seeds: Vec::new(),
        }
    }

    #[test]
    fn sweep_fills_every_cell() {
        let p = Preset::LinearNu4_3.problem();
        let out = cost_error_sweep(&p, &spec(), &QoIValue::Vector(vec![]), 11, &RunOptions::default());
        assert!(out.failures.is_empty());
        assert_eq!(out.records.len(), 8);
        for r in &out.records {
            assert!(r.cost > 0.0 && r.error_sq.is_finite());
        }
        assert!(cost_slope(&out.records, Method::Mimc1).unwrap() > 0.0);
    }

    #[test]
    fn sweep_is_reproducible() {
        let p = Preset::LinearNu4_3.problem();
        let strip = |o: SweepOutcome| -> Vec<SweepRecord> {
            o.records.into_iter().map(|r| SweepRecord { walltime_s: 0.0, ..r }).collect()
        };
        let a = strip(cost_error_sweep(&p, &spec(), &QoIValue::Vector(vec![]), 3, &RunOptions::default()));
        let b = strip(cost_error_sweep(&p, &spec(), &QoIValue::Vector(vec![]), 3, &RunOptions::default()));
        assert_eq!(a, b);
    }

    #[test]
    fn failures_are_recorded() {
        let p = Preset::LinearNu4_3.problem();
        let opts = RunOptions { budget_cap: Some(5.0), ..RunOptions::default() };
        let out = cost_error_sweep(&p, &spec(), &QoIValue::Vector(vec![]), 3, &opts);
        assert!(!out.failures.is_empty());
        assert!(out.failures[0].message.contains("budget"));
    }

    #[test]
    fn seeds_differ_per_cell() {
        let a = cell_seed(1, Method::Mimc1, 0.5, 0);
        assert_ne!(a, cell_seed(1, Method::Mimc1, 0.5, 1));
        assert_ne!(a, cell_seed(1, Method::Mimc2, 0.5, 0));
        assert_ne!(a, cell_seed(1, Method::Mimc1, 0.25, 0));
    }
}
