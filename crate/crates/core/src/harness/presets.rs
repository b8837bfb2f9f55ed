//! The built-in test problems.

use serde::{Deserialize, Serialize};

use crate::estimator::{RateParams, VarianceModel};
use crate::model::{
    DriftKind, DriftSpec, InitSpec, NoiseSpec, ProblemSpec, QoISpec, SpectrumSpec, ZetaRule,
};

/// Linear drift problems (`lambda_k = 0.2 k^nu`, `mu_k = k^-1.01`, shift 1,
/// `F(u) = u`, random `X0 = sum xi_k k^-2 e_k`) and nonlinear ones
/// (`lambda_k = k^nu`, `mu_k = k^-1.0001`, shift 2, `F(u) = sin u + u`,
/// hat-function `X0`). All run to `T = 1` with the terminal identity QoI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "linear-nu4/3")]
    LinearNu4_3,
    #[serde(rename = "linear-nu2")]
    LinearNu2,
    #[serde(rename = "linear-nu10/9")]
    LinearNu10_9,
    #[serde(rename = "nonlinear-nu4/3")]
    NonlinearNu4_3,
    #[serde(rename = "nonlinear-nu2")]
    NonlinearNu2,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::LinearNu4_3,
        Preset::LinearNu2,
        Preset::LinearNu10_9,
        Preset::NonlinearNu4_3,
        Preset::NonlinearNu2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::LinearNu4_3 => "linear-nu4/3",
            Preset::LinearNu2 => "linear-nu2",
            Preset::LinearNu10_9 => "linear-nu10/9",
            Preset::NonlinearNu4_3 => "nonlinear-nu4/3",
            Preset::NonlinearNu2 => "nonlinear-nu2",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn nu(self) -> f64 {
        match self {
            Preset::LinearNu4_3 | Preset::NonlinearNu4_3 => 4.0 / 3.0,
            Preset::LinearNu2 | Preset::NonlinearNu2 => 2.0,
            Preset::LinearNu10_9 => 10.0 / 9.0,
        }
    }

    pub fn is_linear(self) -> bool {
        matches!(self, Preset::LinearNu4_3 | Preset::LinearNu2 | Preset::LinearNu10_9)
    }

    /// The linear problems have `E[X(T)] = 0`.
    pub fn zero_mean(self) -> bool {
        self.is_linear()
    }

    pub fn problem(self) -> ProblemSpec {
        let nu = self.nu();
        if self.is_linear() {
            ProblemSpec {
                spectrum: SpectrumSpec { scale: 0.2, exponent: nu },
                noise: NoiseSpec {
                    mu_exponent: 1.01,
                    zeta_rule: ZetaRule::ReciprocalSqrtMu,
                    shift: 1,
                    amplitude: 1.0,
                },
                drift: DriftSpec::new(DriftKind::LinearScale(1.0)),
                init: InitSpec::DecayingGaussian { decay: 2.0 },
                horizon: 1.0,
                qoi: QoISpec::terminal_identity(),
            }
        } else {
            ProblemSpec {
                spectrum: SpectrumSpec { scale: 1.0, exponent: nu },
                noise: NoiseSpec {
                    mu_exponent: 1.0001,
                    zeta_rule: ZetaRule::ReciprocalSqrtMu,
                    shift: 2,
                    amplitude: 1.0,
                },
                drift: DriftSpec::new(DriftKind::NemytskiiSinePlusId),
                init: InitSpec::HatFunction,
                horizon: 1.0,
                qoi: QoISpec::terminal_identity(),
            }
        }
    }

    /// Rates with `kappa = 1`: `B = (1, nu)`, `alpha = B / 2`.
    pub fn rates(self, model: VarianceModel) -> RateParams {
        RateParams::for_problem(&self.problem(), 1.0).with_variance_model(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for p in Preset::ALL {
            p.problem().validate().unwrap();
            assert_eq!(Preset::parse(p.name()), Some(p));
            let json = serde_json::to_string(&p).unwrap();
            assert_eq!(json, format!("\"{}\"", p.name()));
            let back: ProblemSpec = serde_json::from_str(&serde_json::to_string(&p.problem()).unwrap()).unwrap();
            assert_eq!(back, p.problem());
        }
        assert_eq!(Preset::parse("nope"), None);
    }

    #[test]
    fn preset_constants() {
        let p = Preset::LinearNu4_3.problem();
        assert!((p.spectrum.lambda(8) - 0.2 * 16.0).abs() < 1e-12);
        assert_eq!(p.noise.shift, 1);
        let q = Preset::NonlinearNu2.problem();
        assert_eq!(q.noise.shift, 2);
        assert_eq!(q.drift.log_exponent(), 1);
        let r = Preset::LinearNu10_9.rates(VarianceModel::Reduced);
        assert!((r.b2 - 10.0 / 9.0).abs() < 1e-15);
        assert!((r.alpha2 - 5.0 / 9.0).abs() < 1e-15);
    }
}
