use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::Grids;

use super::ceil_tol;

/// Levels and grid sequences of the multilevel estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MlmcParams {
    /// Finest level `L`; levels run over `0..=L`.
    pub levels: u32,
    /// `M_k` and `N_k` for `k = 0..=L`.
    pub grids: Grids,
    pub alpha_bar: f64,
    /// Cost growth exponent `1/min(1, kappa) + 1/(kappa nu)`.
    pub gamma: f64,
}

impl MlmcParams {
    /// `(M_k, N_k)`.
    pub fn grid(&self, level: usize) -> (usize, usize) {
        (self.grids.steps(level), self.grids.modes(level))
    }

    /// Variance model `2^{-l}`.
    pub fn variance(&self, level: usize) -> f64 {
        (-(level as f64)).exp2()
    }

    /// Allocation cost `(l + 1) 2^{gamma l}`.
    pub fn allocation_cost(&self, level: usize) -> f64 {
        (level as f64 + 1.0) * (self.gamma * level as f64).exp2()
    }
}

/// `M_k = 2^{ceil(k / min(1, kappa)) + 1}`, `N_k` the next power of two of
/// `max(2, ceil(2^{k / (kappa nu)}))`, and
/// `L = max(ceil(log2(1/eps) / alpha_bar), 1)`.
pub fn mlmc_params(epsilon: f64, kappa: f64, nu: f64, alpha1: f64, alpha2: f64) -> Result<MlmcParams> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain(format!("tolerance must lie in (0, 1), got {epsilon}")));
    }
    for (name, v) in [("kappa", kappa), ("nu", nu), ("alpha1", alpha1), ("alpha2", alpha2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::config(format!("{name} must be positive, got {v}")));
        }
    }
    let time_rate = kappa.min(1.0);
    let space_rate = kappa * nu;
    let alpha_bar = (alpha1 / time_rate).min(alpha2 / space_rate);
    let levels = ceil_tol(-epsilon.log2() / alpha_bar).max(1.0) as u32;
    if levels > 40 {
        return Err(Error::domain(format!("{levels} levels requested")));
    }
    let mut time = Vec::with_capacity(levels as usize + 1);
    let mut space = Vec::with_capacity(levels as usize + 1);
    for k in 0..=levels {
        let k = k as f64;
        time.push(1usize << (ceil_tol(k / time_rate) as u32 + 1));
        let n = ceil_tol((k / space_rate).exp2()).max(2.0) as usize;
        space.push(n.next_power_of_two());
    }
    Ok(MlmcParams {
        levels,
        grids: Grids { time, space },
        alpha_bar,
        gamma: 1.0 / time_rate + 1.0 / space_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_problem() {
        let p = mlmc_params(0.125, 1.0, 4.0 / 3.0, 0.5, 2.0 / 3.0).unwrap();
        assert!((p.alpha_bar - 0.5).abs() < 1e-15);
        assert_eq!(p.levels, 6);
        assert_eq!(p.grids.time, vec![2, 4, 8, 16, 32, 64, 128]);
        // 2^{3k/4}: 1, 1.68, 2.83, 4.76, 8, 13.5, 22.6
        assert_eq!(p.grids.space, vec![2, 2, 4, 8, 8, 16, 32]);
        assert!((p.gamma - 1.75).abs() < 1e-15);
    }

    #[test]
    fn symmetric_case() {
        let p = mlmc_params(0.5, 1.0, 1.0, 0.5, 0.5).unwrap();
        assert_eq!(p.levels, 2);
        assert_eq!(p.grids.time, vec![2, 4, 8]);
        assert_eq!(p.grids.space, vec![2, 2, 4]);
    }

    #[test]
    fn nested_grids() {
        for &(kappa, nu) in &[(0.5, 2.0), (1.0, 10.0 / 9.0), (1.5, 4.0 / 3.0)] {
            let p = mlmc_params(0.01, kappa, nu, 0.25, 0.5).unwrap();
            for k in 1..=p.levels as usize {
                let (m0, n0) = p.grid(k - 1);
                let (m1, n1) = p.grid(k);
                assert_eq!(m1 % m0, 0);
                assert_eq!(n1 % n0, 0);
            }
        }
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(mlmc_params(1.0, 1.0, 1.0, 0.5, 0.5).is_err());
        assert!(mlmc_params(0.1, 0.0, 1.0, 0.5, 0.5).is_err());
    }
}
