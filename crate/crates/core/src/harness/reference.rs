use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{run_mimc, EstimatorOutput, RateParams, RunOptions};
use crate::model::{DriftKind, InitSpec, ProblemSpec, QoIFunctional};
use crate::solver::QoIValue;

/// Desk-scale tolerance of the pseudo-reference run.
pub const DEFAULT_REFERENCE_EPSILON: f64 = 1.0 / 256.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ReferenceMode {
    /// The problem is known to have `E[Psi(X)] = 0`.
    ExactZero,
    /// A MIMC run at the given tolerance.
    PseudoMimc(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Reference {
    pub mode: ReferenceMode,
    pub value: QoIValue,
    /// The MIMC run behind a pseudo-reference.
    pub run: Option<EstimatorOutput>,
}

/// Linear drift, zero-mean initial condition: the mean solves a linear ODE
/// started from zero.
pub fn is_zero_mean(problem: &ProblemSpec) -> bool {
    let linear = matches!(problem.drift.kind, DriftKind::Zero | DriftKind::LinearScale(_));
    let centred = match &problem.init {
        InitSpec::DecayingGaussian { .. } => true,
        InitSpec::CoefficientList(c) => c.iter().all(|&v| v == 0.0),
        InitSpec::HatFunction => false,
    };
    linear && centred
}

pub fn compute_reference(
    problem: &ProblemSpec,
    mode: ReferenceMode,
    rates: &RateParams,
    seed: u64,
    opts: &RunOptions,
) -> Result<Reference> {
    match mode {
        ReferenceMode::ExactZero => {
            if !is_zero_mean(problem) {
                return Err(Error::config("exact zero reference requested for a problem with non-zero mean"));
            }
            let value = match problem.qoi.functional {
                QoIFunctional::Identity => QoIValue::Vector(Vec::new()),
                QoIFunctional::LinearFunctional(_) => QoIValue::Scalar(0.0),
            };
            Ok(Reference { mode, value, run: None })
        }
        ReferenceMode::PseudoMimc(eps) => {
            let run = run_mimc(problem, eps, rates, seed, opts)?;
            Ok(Reference { mode, value: run.value.clone(), run: Some(run) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::VarianceModel;
    use crate::harness::presets::Preset;
    use crate::model::DriftSpec;

    #[test]
    fn exact_zero_only_for_centred_problems() {
        let rates = Preset::LinearNu4_3.rates(VarianceModel::Standard);
        let opts = RunOptions::default();
        let r = compute_reference(&Preset::LinearNu4_3.problem(), ReferenceMode::ExactZero, &rates, 0, &opts).unwrap();
        assert_eq!(r.value.norm(), 0.0);
        let nl = Preset::NonlinearNu4_3.problem();
        assert!(compute_reference(&nl, ReferenceMode::ExactZero, &rates, 0, &opts).is_err());
    }

    #[test]
    fn noise_free_pseudo_reference_is_semigroup() {
        let mut p = Preset::LinearNu4_3.problem();
        p.noise.amplitude = 0.0;
        p.drift = DriftSpec::zero();
        p.init = InitSpec::CoefficientList(vec![0.0, 2.0]);
        let rates = RateParams::for_problem(&p, 1.0);
        let r = compute_reference(&p, ReferenceMode::PseudoMimc(0.05), &rates, 4, &RunOptions::default()).unwrap();
        let v = r.value.as_vector().unwrap();
        let lambda = 0.2 * 2f64.powf(4.0 / 3.0);
        assert!((v[1] - 2.0 * (-lambda).exp()).abs() < 1e-10);
        assert!(v[0].abs() < 1e-10);
    }
}
