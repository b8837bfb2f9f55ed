use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ProblemSpec;

use super::index_set::LevelRule;

/// Model for `E ||Delta_l Psi||^2` up to a constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum VarianceModel {
    /// `2^{-B1 l1 - B2 l2}`.
    Standard,
    /// Sharper mixed-difference bound for linear QoIs when `kappa` is in
    /// `(1, 2)`: `2^{-B2 l2}` on the `l1 = 0` axis and
    /// `2^{-B2 l2 - l1} min(1, 2^{-B2 l2 + l1})` otherwise.
    Reduced,
    /// `2^{-B1 l1 - B2 l2 - theta max(l1 - upsilon l2, 0)}`.
    Mixed { theta: f64, upsilon: f64 },
}

/// Strong (`B`) and weak (`alpha`) rates of the mixed differences, the cost
/// log exponent, and the variance model used by the allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RateParams {
    pub b1: f64,
    pub b2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// `l` in `M N (log2 N)^l`; 1 when the drift needs transforms.
    pub log_exponent: u32,
    /// Regularity of the problem; informational except for MLMC parameters.
    pub kappa: f64,
    /// Eigenvalue growth exponent; informational except for MLMC parameters.
    pub nu: f64,
    pub variance_model: VarianceModel,
    #[serde(default)]
    pub level_rule: LevelRule,
}

impl RateParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("B1", self.b1), ("B2", self.b2), ("alpha1", self.alpha1), ("alpha2", self.alpha2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.alpha1 < self.b1 / 2.0 - 1e-12 || self.alpha2 < self.b2 / 2.0 - 1e-12 {
            return Err(Error::config(format!(
                "weak rates must satisfy alpha_i >= B_i / 2, got alpha = ({}, {}), B = ({}, {})",
                self.alpha1, self.alpha2, self.b1, self.b2
            )));
        }
        if self.log_exponent > 1 {
            return Err(Error::config("log exponent must be 0 or 1"));
        }
        if let VarianceModel::Mixed { theta, upsilon } = self.variance_model {
            if !(theta > 0.0 && upsilon > 0.0) {
                return Err(Error::config("mixed variance model needs theta, upsilon > 0"));
            }
        }
        Ok(())
    }

    /// `B1 = min(kappa, 1)`, `B2 = kappa nu` and `alpha_i = B_i / 2`.
    pub fn for_problem(problem: &ProblemSpec, kappa: f64) -> Self {
        let nu = problem.spectrum.exponent;
        let b1 = kappa.min(1.0);
        let b2 = kappa * nu;
        Self {
            b1,
            b2,
            alpha1: b1 / 2.0,
            alpha2: b2 / 2.0,
            log_exponent: problem.drift.log_exponent(),
            kappa,
            nu,
            variance_model: VarianceModel::Standard,
            level_rule: LevelRule::Plain,
        }
    }

    pub fn with_variance_model(mut self, model: VarianceModel) -> Self {
        self.variance_model = model;
        self
    }
}

/// Variance bound `V_l` for multi-index `index`.
pub fn variance_model(index: (usize, usize), rates: &RateParams) -> f64 {
    let (l1, l2) = (index.0 as f64, index.1 as f64);
    match rates.variance_model {
        VarianceModel::Standard => (-rates.b1 * l1 - rates.b2 * l2).exp2(),
        VarianceModel::Reduced => {
            if index.0 == 0 {
                (-rates.b2 * l2).exp2()
            } else {
                (-rates.b2 * l2 - l1).exp2() * (-rates.b2 * l2 + l1).exp2().min(1.0)
            }
        }
        VarianceModel::Mixed { theta, upsilon } => {
            (-rates.b1 * l1 - rates.b2 * l2 - theta * (l1 - upsilon * l2).max(0.0)).exp2()
        }
    }
}

/// Cost units of one sample of `Delta_l Psi`: `2^{l1 + l2} max(l2, 1)^l`.
pub fn cost_model(index: (usize, usize), log_exponent: u32) -> f64 {
    let (l1, l2) = index;
    ((l1 + l2) as f64).exp2() * (l2.max(1) as f64).powi(log_exponent as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::presets::Preset;

    fn rates(model: VarianceModel) -> RateParams {
        RateParams::for_problem(&Preset::LinearNu4_3.problem(), 1.0).with_variance_model(model)
    }

    #[test]
    fn defaults_follow_problem() {
        let r = rates(VarianceModel::Standard);
        assert_eq!(r.b1, 1.0);
        assert!((r.b2 - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.alpha1, 0.5);
        assert!((r.alpha2 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.log_exponent, 0);
        assert_eq!(RateParams::for_problem(&Preset::NonlinearNu4_3.problem(), 1.0).log_exponent, 1);
    }

    #[test]
    fn weak_rates_checked() {
        let mut r = rates(VarianceModel::Standard);
        r.alpha1 = 0.4;
        assert!(r.validate().is_err());
    }

    #[test]
    fn variance_examples() {
        let s = rates(VarianceModel::Standard);
        assert_eq!(variance_model((0, 0), &s), 1.0);
        assert!((variance_model((2, 3), &s) - 2f64.powi(-6)).abs() < 1e-17);
        let r = rates(VarianceModel::Reduced);
        // 2^{-4/3 - 3} min(1, 2^{-4/3 + 3}) = 2^{-13/3}
        assert!((variance_model((3, 1), &r) / (-13.0f64 / 3.0).exp2() - 1.0).abs() < 1e-14);
        let m = rates(VarianceModel::Mixed { theta: 0.5, upsilon: 1.0 });
        assert!((variance_model((3, 1), &m) / (-3.0 - 4.0 / 3.0 - 1.0f64).exp2() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cost_examples() {
        assert_eq!(cost_model((0, 0), 0), 1.0);
        assert_eq!(cost_model((3, 2), 1), 64.0);
        assert_eq!(cost_model((0, 5), 1), 160.0);
        assert_eq!(cost_model((4, 0), 1), 16.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn reduced_never_exceeds_standard(b2 in 1.0f64..2.0, l1 in 1usize..20, l2 in 0usize..20) {
                let mut s = rates(VarianceModel::Standard);
                s.b2 = b2;
                s.alpha2 = b2 / 2.0;
                let r = s.clone().with_variance_model(VarianceModel::Reduced);
                prop_assert!(variance_model((l1, l2), &r) <= variance_model((l1, l2), &s) * (1.0 + 1e-12));
                // Axes: equal on l1 = 0 and on l2 = 0 with B1 = 1.
                prop_assert!((variance_model((0, l2), &r) - variance_model((0, l2), &s)).abs() <= 1e-15);
                prop_assert!((variance_model((l1, 0), &r) - variance_model((l1, 0), &s)).abs() <= 1e-15);
            }
        }
    }
}
