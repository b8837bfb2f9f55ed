use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ProblemSpec;
use crate::noise::sample_lattice;
use crate::par;
use crate::rng::StreamKey;
use crate::solver::{double_difference, pair_difference, Grids, QoIValue};

use super::allocation::{allocate_samples, optimal_counts};
use super::index_set::{build_index_set, LevelSpec};
use super::mlmc::MlmcParams;
use super::rates::{cost_model, RateParams, VarianceModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "MIMC1")]
    Mimc1,
    #[serde(rename = "MIMC2")]
    Mimc2,
    #[serde(rename = "MIMC-mixed")]
    MimcMixed,
    #[serde(rename = "MLMC")]
    Mlmc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mimc1 => "MIMC1",
            Method::Mimc2 => "MIMC2",
            Method::MimcMixed => "MIMC-mixed",
            Method::Mlmc => "MLMC",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MIMC1" | "MIMC" => Some(Method::Mimc1),
            "MIMC2" => Some(Method::Mimc2),
            "MIMC-MIXED" => Some(Method::MimcMixed),
            "MLMC" => Some(Method::Mlmc),
            _ => None,
        }
    }

    fn for_model(model: VarianceModel) -> Self {
        match model {
            VarianceModel::Standard => Method::Mimc1,
            VarianceModel::Reduced => Method::Mimc2,
            VarianceModel::Mixed { .. } => Method::MimcMixed,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunOptions {
    /// Merge chunk accumulators in a fixed order so results are
    /// bit-reproducible for any thread count.
    pub deterministic: bool,
    /// Maximum total cost units; `None` disables the cap.
    pub budget_cap: Option<f64>,
    /// Samples per work item.
    pub chunk_size: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            deterministic: true,
            budget_cap: None,
            chunk_size: 32,
        }
    }
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Self {
            n,
            mean: self.mean + d * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * self.n as f64 * other.n as f64 / n as f64,
        }
    }

    fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }
}

/// Statistics of the samples of one difference: the running sum of values
/// and the moments of `||Delta||` and `||Delta||^2`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Accumulator {
    sum: Option<QoIValue>,
    norm: Moments,
    norm_sq: Moments,
}

impl Accumulator {
    pub fn push(&mut self, value: &QoIValue) {
        let sq = value.norm_sq();
        self.norm.push(sq.sqrt());
        self.norm_sq.push(sq);
        match self.sum.as_mut() {
            Some(s) => s.add_scaled(1.0, value),
            None => self.sum = Some(value.clone()),
        }
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.norm = self.norm.merge(other.norm);
        self.norm_sq = self.norm_sq.merge(other.norm_sq);
        self.sum = match (self.sum, other.sum) {
            (Some(mut a), Some(b)) => {
                a.add_scaled(1.0, &b);
                Some(a)
            }
            (a, b) => a.or(b),
        };
        self
    }

    pub fn count(&self) -> u64 {
        self.norm.n
    }

    /// Sample mean of the values.
    pub fn mean(&self) -> Option<QoIValue> {
        let n = self.count();
        self.sum.as_ref().map(|s| s.scaled(1.0 / n as f64))
    }

    pub fn mean_norm(&self) -> f64 {
        self.norm.mean
    }

    pub fn norm_variance(&self) -> f64 {
        self.norm.variance()
    }

    pub fn mean_norm_sq(&self) -> f64 {
        self.norm_sq.mean
    }

    pub fn norm_sq_variance(&self) -> f64 {
        self.norm_sq.variance()
    }
}

/// Per-index (or per-level) summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IndexStats {
    pub l1: usize,
    /// `None` for MLMC levels.
    pub l2: Option<usize>,
    pub samples: u64,
    pub mean_norm: f64,
    pub norm_variance: f64,
    pub mean_norm_sq: f64,
    pub cost_per_sample: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EstimatorOutput {
    pub method: Method,
    pub epsilon: f64,
    pub value: QoIValue,
    pub per_index: Vec<IndexStats>,
    pub total_cost: f64,
    pub seed: u64,
    pub config: serde_json::Value,
}

impl EstimatorOutput {
    /// `sum m_l C_l` recomputed from the per-index table.
    pub fn audited_cost(&self) -> f64 {
        self.per_index
            .iter()
            .map(|s| s.samples as f64 * s.cost_per_sample)
            .sum()
    }
}

struct Plan {
    /// `(l1, l2)`; `l2` is unused for MLMC.
    index: (usize, usize),
    samples: u64,
    cost: f64,
}

fn chunk_ranges(samples: u64, chunk: usize) -> impl Iterator<Item = (u64, u64)> {
    let chunk = chunk.max(1) as u64;
    (0..samples.div_ceil(chunk)).map(move |c| (c * chunk, ((c + 1) * chunk).min(samples)))
}

/// Runs `draw(index, sample)` for every planned sample and returns one
/// accumulator per plan entry.
fn run_plans<F>(plans: &[Plan], opts: &RunOptions, draw: F) -> Result<Vec<Accumulator>>
where
    F: Fn((usize, usize), u64) -> Result<QoIValue> + Sync + Send,
{
    let chunk_acc = |index: (usize, usize), lo: u64, hi: u64| -> Result<Accumulator> {
        let mut acc = Accumulator::default();
        for i in lo..hi {
            acc.push(&draw(index, i)?);
        }
        Ok(acc)
    };
    if opts.deterministic {
        let work: Vec<(usize, u64, u64)> = plans
            .iter()
            .enumerate()
            .flat_map(|(p, plan)| chunk_ranges(plan.samples, opts.chunk_size).map(move |(lo, hi)| (p, lo, hi)))
            .collect();
        let parts = par::map_ordered(work.len(), |w| {
            let (p, lo, hi) = work[w];
            chunk_acc(plans[p].index, lo, hi)
        });
        let mut out = vec![Accumulator::default(); plans.len()];
        for ((p, _, _), part) in work.iter().zip(parts) {
            let acc = std::mem::take(&mut out[*p]);
            out[*p] = acc.merge(part?);
        }
        Ok(out)
    } else {
        plans
            .iter()
            .map(|plan| {
                let ranges: Vec<_> = chunk_ranges(plan.samples, opts.chunk_size).collect();
                par::map_reduce(
                    ranges.len(),
                    |c| chunk_acc(plan.index, ranges[c].0, ranges[c].1),
                    || Ok(Accumulator::default()),
                    |a, b| Ok(a?.merge(b?)),
                )
            })
            .collect()
    }
}

/// Drops the plan suffix that would push the cumulative cost over the cap.
fn within_budget(plans: &[Plan], cap: Option<f64>) -> (usize, f64) {
    let planned: f64 = plans.iter().map(|p| p.samples as f64 * p.cost).sum();
    let Some(cap) = cap else {
        return (plans.len(), planned);
    };
    let mut spent = 0.0;
    for (i, p) in plans.iter().enumerate() {
        spent += p.samples as f64 * p.cost;
        if spent > cap {
            return (i, planned);
        }
    }
    (plans.len(), planned)
}

fn assemble(
    method: Method,
    epsilon: f64,
    seed: u64,
    config: serde_json::Value,
    plans: &[Plan],
    accs: &[Accumulator],
    mlmc: bool,
    zero: QoIValue,
) -> EstimatorOutput {
    let mut value = zero;
    let mut per_index = Vec::with_capacity(accs.len());
    let mut total_cost = 0.0;
    for (plan, acc) in plans.iter().zip(accs) {
        if let Some(mean) = acc.mean() {
            value.add_scaled(1.0, &mean);
        }
        total_cost += acc.count() as f64 * plan.cost;
        per_index.push(IndexStats {
            l1: plan.index.0,
            l2: (!mlmc).then_some(plan.index.1),
            samples: acc.count(),
            mean_norm: acc.mean_norm(),
            norm_variance: acc.norm_variance(),
            mean_norm_sq: acc.mean_norm_sq(),
            cost_per_sample: plan.cost,
        });
    }
    EstimatorOutput {
        method,
        epsilon,
        value,
        per_index,
        total_cost,
        seed,
        config,
    }
}

fn zero_value(problem: &ProblemSpec) -> QoIValue {
    match problem.qoi.functional {
        crate::model::QoIFunctional::Identity => QoIValue::Vector(Vec::new()),
        crate::model::QoIFunctional::LinearFunctional(_) => QoIValue::Scalar(0.0),
    }
}

fn finish(
    out: EstimatorOutput,
    opts: &RunOptions,
    completed: usize,
    total: usize,
    planned: f64,
) -> Result<EstimatorOutput> {
    if completed < total {
        return Err(Error::BudgetExceeded {
            cap: opts.budget_cap.unwrap_or(f64::INFINITY),
            planned,
            completed,
            total,
            partial: Box::new(out),
        });
    }
    Ok(out)
}

/// Multi-index estimator `sum_l mean_i Delta_l Psi^{(l, i)}` on dyadic grids
/// `M_l1 = 2^{l1+1}`, `N_l2 = 2^{l2+1}`. The variance model of `rates`
/// selects the standard or reduced-samples variant.
pub fn run_mimc(
    problem: &ProblemSpec,
    epsilon: f64,
    rates: &RateParams,
    seed: u64,
    opts: &RunOptions,
) -> Result<EstimatorOutput> {
    problem.validate()?;
    let set = build_index_set(LevelSpec::Tolerance(epsilon), rates)?;
    let alloc = allocate_samples(epsilon, &set, rates)?;
    let (e1, e2) = set.extent();
    let grids = Grids::dyadic(e1.max(e2));
    let plans: Vec<Plan> = set
        .members()
        .iter()
        .map(|&idx| Plan {
            index: idx,
            samples: alloc.counts[&idx],
            cost: cost_model(idx, rates.log_exponent),
        })
        .collect();
    let (completed, planned) = within_budget(&plans, opts.budget_cap);
    let accs = run_plans(&plans[..completed], opts, |(l1, l2), i| {
        let key = StreamKey::mimc(seed, l1, l2, i);
        let lattice = sample_lattice(problem, grids.modes(l2), grids.steps(l1), key)?;
        double_difference(problem, (l1, l2), &grids, &lattice)
    })?;
    let config = serde_json::json!({
        "problem": serde_json::to_value(problem).unwrap_or(serde_json::Value::Null),
        "rates": rates,
        "indexSet": set,
        "allocation": alloc,
        "options": opts,
    });
    let out = assemble(
        Method::for_model(rates.variance_model),
        epsilon,
        seed,
        config,
        &plans[..completed],
        &accs,
        false,
        zero_value(problem),
    );
    finish(out, opts, completed, plans.len(), planned)
}

/// Multilevel estimator over the grids of `params`. Samples are allocated
/// with `V_l = 2^{-l}` and `(l + 1) 2^{gamma l}`; accounting charges
/// `M_l N_l / 4 * max(log2 N_l - 1, 1)^l` per sample, the units of the
/// multi-index cost model.
pub fn run_mlmc(
    problem: &ProblemSpec,
    epsilon: f64,
    params: &MlmcParams,
    seed: u64,
    opts: &RunOptions,
) -> Result<EstimatorOutput> {
    problem.validate()?;
    let levels = params.levels as usize;
    if params.grids.time.len() <= levels || params.grids.space.len() <= levels {
        return Err(Error::Dimension {
            expected: levels + 1,
            actual: params.grids.time.len().min(params.grids.space.len()),
        });
    }
    let v: Vec<f64> = (0..=levels).map(|l| params.variance(l)).collect();
    let c: Vec<f64> = (0..=levels).map(|l| params.allocation_cost(l)).collect();
    let counts = optimal_counts(epsilon, &v, &c)?;
    let log_exponent = problem.drift.log_exponent();
    let plans: Vec<Plan> = (0..=levels)
        .map(|l| {
            let (m, n) = params.grid(l);
            let log_factor = ((n as f64).log2() - 1.0).max(1.0).powi(log_exponent as i32);
            Plan {
                index: (l, 0),
                samples: counts[l],
                cost: m as f64 * n as f64 / 4.0 * log_factor,
            }
        })
        .collect();
    let (completed, planned) = within_budget(&plans, opts.budget_cap);
    let accs = run_plans(&plans[..completed], opts, |(l, _), i| {
        let (m, n) = params.grid(l);
        let lattice = sample_lattice(problem, n, m, StreamKey::mlmc(seed, l, i))?;
        let coarse = (l > 0).then(|| params.grid(l - 1));
        pair_difference(problem, (m, n), coarse, &lattice)
    })?;
    let config = serde_json::json!({
        "problem": serde_json::to_value(problem).unwrap_or(serde_json::Value::Null),
        "mlmc": params,
        "counts": counts,
        "options": opts,
    });
    let out = assemble(
        Method::Mlmc,
        epsilon,
        seed,
        config,
        &plans[..completed],
        &accs,
        true,
        zero_value(problem),
    );
    finish(out, opts, completed, plans.len(), planned)
}

/// `m` samples of `Delta_l Psi` on dyadic grids, keyed by `seed`.
pub fn sample_index(
    problem: &ProblemSpec,
    index: (usize, usize),
    samples: u64,
    seed: u64,
    opts: &RunOptions,
) -> Result<Accumulator> {
    let grids = Grids::dyadic(index.0.max(index.1));
    let plan = [Plan { index, samples, cost: 0.0 }];
    let mut accs = run_plans(&plan, opts, |(l1, l2), i| {
        let key = StreamKey::mimc(seed, l1, l2, i);
        let lattice = sample_lattice(problem, grids.modes(l2), grids.steps(l1), key)?;
        double_difference(problem, (l1, l2), &grids, &lattice)
    })?;
    Ok(accs.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::presets::Preset;
    use crate::model::{DriftSpec, InitSpec};

    fn quiet(mut problem: ProblemSpec) -> ProblemSpec {
        problem.noise.amplitude = 0.0;
        problem.drift = DriftSpec::zero();
        problem.init = InitSpec::CoefficientList(vec![1.0, -0.5, 0.25]);
        problem
    }

    #[test]
    fn moments_merge_matches_sequential() {
        let xs: Vec<f64> = (0..37).map(|i| ((i * 7919) % 101) as f64 / 10.0).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let (a, b) = xs.split_at(13);
        let mut ma = Moments::default();
        let mut mb = Moments::default();
        a.iter().for_each(|&x| ma.push(x));
        b.iter().for_each(|&x| mb.push(x));
        let m = ma.merge(mb);
        assert_eq!(m.n, all.n);
        assert!((m.mean - all.mean).abs() < 1e-12);
        assert!((m.variance() - all.variance()).abs() < 1e-10);
    }

    #[test]
    fn noise_free_mimc_is_semigroup() {
        let p = quiet(Preset::LinearNu4_3.problem());
        let rates = RateParams::for_problem(&p, 1.0);
        let out = run_mimc(&p, 0.2, &rates, 5, &RunOptions::default()).unwrap();
        let v = out.value.as_vector().unwrap();
        for (k, &c) in [1.0, -0.5, 0.25].iter().enumerate() {
            let lambda = 0.2 * ((k + 1) as f64).powf(4.0 / 3.0);
            assert!((v[k] - c * (-lambda).exp()).abs() < 1e-12);
        }
        assert!(v[3..].iter().all(|&x| x.abs() < 1e-15));
        assert!(out.per_index.iter().all(|s| s.norm_variance < 1e-25));
    }

    #[test]
    fn noise_free_mlmc_is_semigroup() {
        let p = quiet(Preset::LinearNu4_3.problem());
        let params = super::super::mlmc_params(0.25, 1.0, 4.0 / 3.0, 0.5, 2.0 / 3.0).unwrap();
        let out = run_mlmc(&p, 0.25, &params, 5, &RunOptions::default()).unwrap();
        let v = out.value.as_vector().unwrap();
        assert!((v[0] - (-0.2f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn cost_audit_exact() {
        let p = Preset::LinearNu4_3.problem();
        let rates = RateParams::for_problem(&p, 1.0);
        let out = run_mimc(&p, 0.3, &rates, 1, &RunOptions::default()).unwrap();
        assert_eq!(out.total_cost, out.audited_cost());
        assert_eq!(out.method, Method::Mimc1);
    }

    #[test]
    fn deterministic_across_chunkings() {
        let p = Preset::LinearNu4_3.problem();
        let rates = RateParams::for_problem(&p, 1.0);
        let a = run_mimc(&p, 0.3, &rates, 9, &RunOptions::default()).unwrap();
        let b = run_mimc(&p, 0.3, &rates, 9, &RunOptions::default()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = run_mimc(&p, 0.3, &rates, 10, &RunOptions::default()).unwrap();
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn budget_abort_reports_partial() {
        let p = Preset::LinearNu4_3.problem();
        let rates = RateParams::for_problem(&p, 1.0);
        let opts = RunOptions { budget_cap: Some(50.0), ..RunOptions::default() };
        match run_mimc(&p, 0.1, &rates, 1, &opts) {
            Err(Error::BudgetExceeded { completed, total, partial, planned, .. }) => {
                assert!(completed < total);
                assert!(planned > 50.0);
                assert_eq!(partial.per_index.len(), completed);
                assert!(partial.total_cost <= 50.0);
            }
            other => panic!("expected budget abort, got {other:?}"),
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::Mimc1, Method::Mimc2, Method::MimcMixed, Method::Mlmc] {
            assert_eq!(Method::parse(m.name()), Some(m));
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
        assert_eq!(Method::parse("nope"), None);
    }
}
