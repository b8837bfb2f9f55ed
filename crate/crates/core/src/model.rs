//! Problem definitions.
//!
//! A [`ProblemSpec`] is the SPDE
//!
//! ```text
//! dX + A X dt = F(X) dt + (I + G X) dW,   X(0) = X0,   t in (0, T]
//! ```
//!
//! written in the eigenbasis `(e_k)` of `A`. Everything is diagonal in that
//! basis except the multiplicative noise operator, which couples mode `k` to
//! mode `k + m` through the spectral shift `m`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this value of `lambda * tau` the closed forms `(1 - e^{-x}) / lambda`
/// are replaced by a four-term Taylor series.
pub const SMALL_ARGUMENT: f64 = 1e-5;

/// Eigenvalues `lambda_k = scale * k^exponent`, `k >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpectrumSpec {
    pub scale: f64,
    pub exponent: f64,
}

impl SpectrumSpec {
    pub fn new(scale: f64, exponent: f64) -> Result<Self> {
        let spec = Self { scale, exponent };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::config(format!("spectrum scale must be positive, got {}", self.scale)));
        }
        if !(self.exponent > 0.0 && self.exponent.is_finite()) {
            return Err(Error::config(format!(
                "spectrum exponent must be positive, got {}",
                self.exponent
            )));
        }
        Ok(())
    }

    /// `lambda_k` without the domain check; `k` must be at least one.
    #[inline]
    pub(crate) fn lambda(&self, k: usize) -> f64 {
        self.scale * (k as f64).powf(self.exponent)
    }
}

/// How the multiplicative noise weights `zeta_k` are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ZetaRule {
    /// `zeta_k = mu_k^{-1/2}`, so that `mu_k^{1/2} zeta_k = 1`.
    ReciprocalSqrtMu,
    /// Explicit values for `k = 1, 2, ...`; missing entries are zero.
    Explicit(Vec<f64>),
}

/// Q-Wiener coefficients `mu_k = amplitude * k^{-mu_exponent}` and the
/// operator `(G u) v = sum_k zeta_k <u, e_{k+shift}> <v, e_k> e_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NoiseSpec {
    pub mu_exponent: f64,
    pub zeta_rule: ZetaRule,
    pub shift: usize,
    /// Overall noise amplitude. Zero switches the noise off entirely.
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu_exponent > 1.0 && self.mu_exponent.is_finite()) {
            return Err(Error::config(format!(
                "mu exponent must exceed 1 for a trace-class covariance, got {}",
                self.mu_exponent
            )));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::config(format!(
                "noise amplitude must be non-negative, got {}",
                self.amplitude
            )));
        }
        if let ZetaRule::Explicit(values) = &self.zeta_rule {
            if values.iter().any(|z| !z.is_finite()) {
                return Err(Error::config("explicit zeta values must be finite"));
            }
        }
        Ok(())
    }

    /// Additive and multiplicative gains of mode `k`: the stochastic increment
    /// of mode `k` is `(additive + multiplicative * X_{k+shift}) * I_k`.
    pub(crate) fn gains(&self, k: usize) -> (f64, f64) {
        let mu = self.amplitude * (k as f64).powf(-self.mu_exponent);
        if mu == 0.0 {
            return (0.0, 0.0);
        }
        let root = mu.sqrt();
        match &self.zeta_rule {
            ZetaRule::ReciprocalSqrtMu => (root, 1.0),
            ZetaRule::Explicit(values) => (root, root * values.get(k - 1).copied().unwrap_or(0.0)),
        }
    }
}

/// A pointwise function `f: R -> R` used by a custom Nemytskii drift.
#[derive(Clone)]
pub struct PointwiseFn {
    name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl PointwiseFn {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
}

impl fmt::Debug for PointwiseFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("PointwiseFn").field(&self.name).finish()
    }
}

impl PartialEq for PointwiseFn {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && Arc::ptr_eq(&self.f, &other.f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DriftKind {
    Zero,
    /// `F(u) = a u`.
    LinearScale(f64),
    /// `F(u)(x) = sin(u(x)) + u(x)`.
    NemytskiiSinePlusId,
    /// `F(u)(x) = f(u(x))`. Not serialisable.
    #[serde(skip)]
    NemytskiiCustom(PointwiseFn),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DriftSpec {
    pub kind: DriftKind,
    /// Grid oversampling factor for Nemytskii drifts.
    #[serde(default = "default_oversample")]
    pub oversample: usize,
}

fn default_oversample() -> usize {
    4
}

impl DriftSpec {
    pub fn new(kind: DriftKind) -> Self {
        Self {
            kind,
            oversample: default_oversample(),
        }
    }

    pub fn zero() -> Self {
        Self::new(DriftKind::Zero)
    }

    pub fn validate(&self) -> Result<()> {
        if self.oversample < 2 || !self.oversample.is_power_of_two() {
            return Err(Error::config(format!(
                "oversample must be a power of two >= 2, got {}",
                self.oversample
            )));
        }
        if let DriftKind::LinearScale(a) = self.kind {
            if !a.is_finite() {
                return Err(Error::config("linear drift scale must be finite"));
            }
        }
        Ok(())
    }

    /// Nemytskii drifts need a transform to physical space and back.
    pub fn is_nemytskii(&self) -> bool {
        matches!(
            self.kind,
            DriftKind::NemytskiiSinePlusId | DriftKind::NemytskiiCustom(_)
        )
    }

    /// Exponent of the `log2 N` factor in the per-solve cost.
    pub fn log_exponent(&self) -> u32 {
        u32::from(self.is_nemytskii())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum InitSpec {
    /// Coefficients `<X0, e_k>` for `k = 1, 2, ...`; missing entries are zero.
    CoefficientList(Vec<f64>),
    /// `X0 = sum_k xi_k k^{-decay} e_k` with iid standard normal `xi_k`,
    /// drawn from the sample's noise lattice.
    DecayingGaussian { decay: f64 },
    /// `X0(x) = 2 min(x, 1 - x)` expanded in `e_k(x) = sqrt(2) sin(k pi x)`.
    HatFunction,
}

impl InitSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            InitSpec::CoefficientList(c) if c.iter().any(|v| !v.is_finite()) => {
                Err(Error::config("initial coefficients must be finite"))
            }
            InitSpec::DecayingGaussian { decay } if !(*decay > 0.5) => Err(Error::config(format!(
                "decay must exceed 1/2 for a square-summable initial condition, got {decay}"
            ))),
            _ => Ok(()),
        }
    }

    /// Whether `X0` depends on the sample's random draws.
    pub fn is_random(&self) -> bool {
        matches!(self, InitSpec::DecayingGaussian { .. })
    }

    /// Coefficient `k` (1-based); `normal` is the standard normal draw for
    /// that mode and is ignored by deterministic kinds.
    pub(crate) fn coefficient(&self, k: usize, normal: f64) -> f64 {
        match self {
            InitSpec::CoefficientList(c) => c.get(k - 1).copied().unwrap_or(0.0),
            InitSpec::DecayingGaussian { decay } => normal * (k as f64).powf(-decay),
            InitSpec::HatFunction => hat_coefficient(k),
        }
    }
}

/// `<2 min(x, 1 - x), sqrt(2) sin(k pi x)> = 4 sqrt(2) sin(k pi / 2) / (k pi)^2`.
pub fn hat_coefficient(k: usize) -> f64 {
    let sign = match k % 4 {
        1 => 1.0,
        3 => -1.0,
        _ => return 0.0,
    };
    let kp = k as f64 * std::f64::consts::PI;
    sign * 4.0 * std::f64::consts::SQRT_2 / (kp * kp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum QoIForm {
    /// `psi(X(T))`.
    Terminal,
    /// `int_0^T psi(X(s)) ds`.
    TimeIntegral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum QoIFunctional {
    /// `psi = I`, values in `H`.
    Identity,
    /// `psi(u) = <u, w>`, scalar values.
    LinearFunctional(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QoISpec {
    pub form: QoIForm,
    pub functional: QoIFunctional,
}

impl QoISpec {
    pub fn terminal_identity() -> Self {
        Self {
            form: QoIForm::Terminal,
            functional: QoIFunctional::Identity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let QoIFunctional::LinearFunctional(w) = &self.functional {
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::config("QoI weights must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProblemSpec {
    pub spectrum: SpectrumSpec,
    pub noise: NoiseSpec,
    pub drift: DriftSpec,
    pub init: InitSpec,
    pub horizon: f64,
    pub qoi: QoISpec,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::config(format!("horizon must be positive, got {}", self.horizon)));
        }
        self.spectrum.validate()?;
        self.noise.validate()?;
        self.drift.validate()?;
        self.init.validate()?;
        self.qoi.validate()
    }
}

/// `lambda_k = c k^nu`.
pub fn eigenvalue(spec: &SpectrumSpec, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("eigenvalue index starts at 1"));
    }
    Ok(spec.lambda(k))
}

/// `(mu_k, zeta_k)` for mode `k >= 1`.
pub fn noise_coefficients(spec: &NoiseSpec, k: usize) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::domain("noise coefficient index starts at 1"));
    }
    let mu = spec.amplitude * (k as f64).powf(-spec.mu_exponent);
    let zeta = match &spec.zeta_rule {
        ZetaRule::ReciprocalSqrtMu if mu > 0.0 => 1.0 / mu.sqrt(),
        ZetaRule::ReciprocalSqrtMu => 0.0,
        ZetaRule::Explicit(values) => values.get(k - 1).copied().unwrap_or(0.0),
    };
    Ok((mu, zeta))
}

/// `e^{-lambda t}`.
pub fn semigroup_factor(lambda: f64, t: f64) -> Result<f64> {
    if lambda < 0.0 || t < 0.0 || lambda.is_nan() || t.is_nan() {
        return Err(Error::domain(format!(
            "semigroup factor needs lambda >= 0 and t >= 0, got ({lambda}, {t})"
        )));
    }
    Ok((-lambda * t).exp())
}

/// `int_0^tau e^{-lambda s} ds = (1 - e^{-lambda tau}) / lambda`.
pub fn phi1_factor(lambda: f64, tau: f64) -> f64 {
    tau * one_minus_exp_over(lambda * tau)
}

/// `(1 - e^{-x}) / x`, with a Taylor series below [`SMALL_ARGUMENT`].
#[inline]
pub(crate) fn one_minus_exp_over(x: f64) -> f64 {
    if x.abs() < SMALL_ARGUMENT {
        // 1 - x/2 + x^2/6 - x^3/24
        1.0 - x * (0.5 - x * (1.0 / 6.0 - x / 24.0))
    } else {
        -(-x).exp_m1() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eigenvalue_examples() {
        let s = SpectrumSpec::new(0.2, 4.0 / 3.0).unwrap();
        assert_relative_eq!(eigenvalue(&s, 1).unwrap(), 0.2);
        assert_relative_eq!(eigenvalue(&s, 8).unwrap(), 3.2, max_relative = 1e-14);
        let sq = SpectrumSpec::new(1.0, 2.0).unwrap();
        assert_eq!(eigenvalue(&sq, 3).unwrap(), 9.0);
        assert!(matches!(eigenvalue(&s, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn noise_coefficient_examples() {
        let spec = NoiseSpec {
            mu_exponent: 1.01,
            zeta_rule: ZetaRule::ReciprocalSqrtMu,
            shift: 1,
            amplitude: 1.0,
        };
        assert_eq!(noise_coefficients(&spec, 1).unwrap(), (1.0, 1.0));
        let (mu, zeta) = noise_coefficients(&spec, 2).unwrap();
        assert_relative_eq!(mu, 2f64.powf(-1.01), max_relative = 1e-15);
        assert_relative_eq!(zeta, 2f64.powf(0.505), max_relative = 1e-14);
        assert_eq!(spec.gains(2).1, 1.0);

        let explicit = NoiseSpec {
            mu_exponent: 1.0001,
            zeta_rule: ZetaRule::Explicit(vec![0.0; 4]),
            shift: 0,
            amplitude: 1.0,
        };
        let (mu, zeta) = noise_coefficients(&explicit, 4).unwrap();
        assert_relative_eq!(mu, 4f64.powf(-1.0001), max_relative = 1e-15);
        assert_eq!(zeta, 0.0);
        assert!(noise_coefficients(&explicit, 0).is_err());
    }

    #[test]
    fn semigroup_examples() {
        assert_relative_eq!(semigroup_factor(3.2, 0.5).unwrap(), 0.201_896_517_994_655_4, max_relative = 1e-12);
        assert_eq!(semigroup_factor(0.0, 7.0).unwrap(), 1.0);
        assert_eq!(semigroup_factor(1.0, 0.0).unwrap(), 1.0);
        assert!(semigroup_factor(-1.0, 1.0).is_err());
        assert!(semigroup_factor(1.0, -1.0).is_err());
    }

    #[test]
    fn phi1_examples() {
        assert_eq!(phi1_factor(0.0, 0.25), 0.25);
        assert_relative_eq!(phi1_factor(1.0, 1.0), 1.0 - (-1f64).exp(), max_relative = 1e-15);
        // Series oracle: (1 - e^{-x}) / x = sum_n (-x)^n / (n + 1)!, x = 1e-12.
        let x: f64 = 1e-12;
        let oracle = 1.0 - x / 2.0 + x * x / 6.0;
        assert_relative_eq!(phi1_factor(1e-12, 1.0), oracle, max_relative = 1e-15);
        assert_relative_eq!(phi1_factor(1e-12, 1.0), 1.0 - 5e-13, max_relative = 1e-15);
    }

    #[test]
    fn hat_coefficients_match_quadrature() {
        // Composite Simpson on 2^14 intervals; the kink at 1/2 is a node.
        let n = 1 << 14;
        let h = 1.0 / n as f64;
        for k in 1..=9 {
            let g = |x: f64| {
                2.0 * x.min(1.0 - x) * std::f64::consts::SQRT_2 * (k as f64 * std::f64::consts::PI * x).sin()
            };
            let mut s = g(0.0) + g(1.0);
            for i in 1..n {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
            }
            assert!((s * h / 3.0 - hat_coefficient(k)).abs() < 1e-10, "k = {k}");
        }
    }

    #[test]
    fn validation_rejects_bad_specs() {
        assert!(SpectrumSpec::new(0.0, 1.0).is_err());
        assert!(SpectrumSpec::new(1.0, -1.0).is_err());
        let mut drift = DriftSpec::new(DriftKind::NemytskiiSinePlusId);
        drift.oversample = 3;
        assert!(drift.validate().is_err());
        let noise = NoiseSpec {
            mu_exponent: 1.0,
            zeta_rule: ZetaRule::ReciprocalSqrtMu,
            shift: 0,
            amplitude: 1.0,
        };
        assert!(noise.validate().is_err());
    }

    #[test]
    fn problem_round_trips_through_json() {
        let p = ProblemSpec {
            spectrum: SpectrumSpec::new(0.2, 4.0 / 3.0).unwrap(),
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
        };
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("muExponent"));
        let back: ProblemSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn eigenvalues_strictly_increase(scale in 1e-3f64..10.0, exponent in 0.05f64..3.0, k in 1usize..(1 << 16)) {
                let s = SpectrumSpec::new(scale, exponent).unwrap();
                prop_assert!(eigenvalue(&s, k + 1).unwrap() > eigenvalue(&s, k).unwrap());
                prop_assert!(eigenvalue(&s, 1).unwrap() > 0.0);
            }

            #[test]
            fn semigroup_is_multiplicative(lambda in 0.0f64..2.0, s in 0.0f64..1.0, t in 0.0f64..1.0) {
                let lhs = semigroup_factor(lambda, s + t).unwrap();
                let rhs = semigroup_factor(lambda, s).unwrap() * semigroup_factor(lambda, t).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-15 * lhs);
            }

            #[test]
            fn phi1_continuous_across_switch(rel in -0.01f64..0.01, tau in 0.1f64..10.0) {
                let x = SMALL_ARGUMENT * (1.0 + rel);
                let lambda = x / tau;
                let below = phi1_factor(lambda * (1.0 - 1e-9), tau);
                let above = phi1_factor(lambda * (1.0 + 1e-9), tau);
                prop_assert!(((below - above) / above).abs() < 1e-13);
            }
        }
    }
}
