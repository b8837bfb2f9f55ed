//! Exponential integrator on a spectral truncation and the coupled
//! differences built from it.
//!
//! One step of length `tau` updates every retained mode `k <= N` by
//!
//! ```text
//! X'_k = e^{-lambda_k tau} X_k + phi1(lambda_k, tau) F_k(X)
//!        + mu_k^{1/2} (1 + zeta_k X_{k+m}) I_k
//! ```
//!
//! where `I_k` is the exact OU increment from the noise lattice and
//! `X_{k+m} = 0` beyond the truncation.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{phi1_factor, DriftKind, DriftSpec, InitSpec, PointwiseFn, ProblemSpec, QoIForm, QoIFunctional};
use crate::noise::NoiseLattice;
use crate::transform::SineTransform;

/// Truncated coefficient vector `(<X, e_1>, ..., <X, e_N>)` at `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub coeffs: Vec<f64>,
    pub time: f64,
}

impl State {
    pub fn new(coeffs: Vec<f64>, time: f64) -> Self {
        Self { coeffs, time }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// A value of the quantity of interest: an element of `H` (coefficients,
/// implicitly zero beyond their length) or a scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QoIValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl QoIValue {
    /// The zero of the same kind.
    pub fn zero_like(&self) -> Self {
        match self {
            QoIValue::Scalar(_) => QoIValue::Scalar(0.0),
            QoIValue::Vector(_) => QoIValue::Vector(Vec::new()),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        match self {
            QoIValue::Scalar(v) => v * v,
            QoIValue::Vector(v) => v.iter().fold(0.0, |acc, x| acc + x * x),
        }
    }

    /// `H` norm (Parseval) or absolute value.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `self += scale * other`, zero-padding vectors to the longer length.
    pub fn add_scaled(&mut self, scale: f64, other: &QoIValue) {
        match (self, other) {
            (QoIValue::Scalar(a), QoIValue::Scalar(b)) => *a += scale * b,
            (QoIValue::Vector(a), QoIValue::Vector(b)) => {
                if a.len() < b.len() {
                    a.resize(b.len(), 0.0);
                }
                for (x, y) in a.iter_mut().zip(b) {
                    *x += scale * y;
                }
            }
            _ => panic!("cannot combine scalar and vector QoI values"),
        }
    }

    pub fn difference(&self, other: &QoIValue) -> QoIValue {
        let mut out = self.clone();
        out.add_scaled(-1.0, other);
        out
    }

    pub fn scaled(&self, s: f64) -> QoIValue {
        match self {
            QoIValue::Scalar(v) => QoIValue::Scalar(v * s),
            QoIValue::Vector(v) => QoIValue::Vector(v.iter().map(|x| x * s).collect()),
        }
    }

    /// Pads a vector value with zeros to at least `len` entries.
    pub fn padded(mut self, len: usize) -> Self {
        if let QoIValue::Vector(v) = &mut self {
            if v.len() < len {
                v.resize(len, 0.0);
            }
        }
        self
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            QoIValue::Scalar(v) => Some(*v),
            QoIValue::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            QoIValue::Vector(v) => Some(v),
            QoIValue::Scalar(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub terminal: State,
    pub qoi: QoIValue,
    /// `M * N * (log2 N)^l` with `l = 1` for Nemytskii drifts.
    pub cost_units: f64,
}

/// Time-step counts `M_k` and mode counts `N_k` per level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grids {
    pub time: Vec<usize>,
    pub space: Vec<usize>,
}

impl Grids {
    /// `M_k = N_k = 2^{k+1}` for `k = 0..=levels`.
    pub fn dyadic(levels: usize) -> Self {
        let seq: Vec<usize> = (0..=levels).map(|k| 1usize << (k + 1)).collect();
        Self {
            time: seq.clone(),
            space: seq,
        }
    }

    pub fn steps(&self, level: usize) -> usize {
        self.time[level]
    }

    pub fn modes(&self, level: usize) -> usize {
        self.space[level]
    }
}

/// Per-solve cost `M * N * (log2 N)^l`.
pub fn solve_cost(steps: usize, modes: usize, log_exponent: u32) -> f64 {
    let mn = steps as f64 * modes as f64;
    if log_exponent == 0 {
        mn
    } else {
        mn * (modes as f64).log2().powi(log_exponent as i32)
    }
}

enum Pointwise {
    SinePlusId,
    Custom(PointwiseFn),
}

impl Pointwise {
    #[inline]
    fn eval(&self, u: f64) -> f64 {
        match self {
            Pointwise::SinePlusId => u.sin() + u,
            Pointwise::Custom(f) => f.eval(u),
        }
    }
}

enum DriftEval {
    Zero,
    Linear(f64),
    Nemytskii {
        f: Pointwise,
        transform: SineTransform,
        values: Vec<f64>,
    },
}

impl DriftEval {
    fn new(drift: &DriftSpec, modes: usize) -> Self {
        let pointwise = match &drift.kind {
            DriftKind::Zero => return DriftEval::Zero,
            DriftKind::LinearScale(a) => return DriftEval::Linear(*a),
            DriftKind::NemytskiiSinePlusId => Pointwise::SinePlusId,
            DriftKind::NemytskiiCustom(f) => Pointwise::Custom(f.clone()),
        };
        let transform = SineTransform::new(modes, drift.oversample);
        let values = vec![0.0; transform.points()];
        DriftEval::Nemytskii {
            f: pointwise,
            transform,
            values,
        }
    }

    fn eval(&mut self, coeffs: &[f64], out: &mut [f64]) {
        match self {
            DriftEval::Zero => out.fill(0.0),
            DriftEval::Linear(a) => {
                for (o, c) in out.iter_mut().zip(coeffs) {
                    *o = *a * c;
                }
            }
            DriftEval::Nemytskii { f, transform, values } => {
                transform.to_grid(coeffs, values);
                for v in values.iter_mut() {
                    *v = f.eval(*v);
                }
                transform.from_grid(values, out);
            }
        }
    }
}

/// First `N` coefficients of `F(u)` for `u` given by `state`.
pub fn drift_coefficients(drift: &DriftSpec, state: &State) -> Vec<f64> {
    let mut out = vec![0.0; state.len()];
    if state.is_empty() {
        return out;
    }
    DriftEval::new(drift, state.len()).eval(&state.coeffs, &mut out);
    out
}

/// Precomputed per-mode factors for one `(N, tau)` pair.
struct Propagator {
    decay: Vec<f64>,
    phi: Vec<f64>,
    additive: Vec<f64>,
    multiplicative: Vec<f64>,
    shift: usize,
    tau: f64,
    drift: DriftEval,
    drift_buf: Vec<f64>,
    next: Vec<f64>,
}

impl Propagator {
    fn new(problem: &ProblemSpec, modes: usize, tau: f64) -> Self {
        let mut decay = Vec::with_capacity(modes);
        let mut phi = Vec::with_capacity(modes);
        let mut additive = Vec::with_capacity(modes);
        let mut multiplicative = Vec::with_capacity(modes);
        for k in 1..=modes {
            let lambda = problem.spectrum.lambda(k);
            decay.push((-lambda * tau).exp());
            phi.push(phi1_factor(lambda, tau));
            let (a, m) = problem.noise.gains(k);
            additive.push(a);
            multiplicative.push(m);
        }
        Self {
            decay,
            phi,
            additive,
            multiplicative,
            shift: problem.noise.shift,
            tau,
            drift: DriftEval::new(&problem.drift, modes),
            drift_buf: vec![0.0; modes],
            next: vec![0.0; modes],
        }
    }

    /// Advances `x` by one step; `noise(k)` is the increment of mode `k`
    /// (0-based).
    fn advance(&mut self, x: &mut Vec<f64>, noise: impl Fn(usize) -> f64) {
        let n = x.len();
        self.drift.eval(x, &mut self.drift_buf);
        for i in 0..n {
            let shifted = x.get(i + self.shift).copied().unwrap_or(0.0);
            self.next[i] = self.decay[i] * x[i]
                + self.phi[i] * self.drift_buf[i]
                + (self.additive[i] + self.multiplicative[i] * shifted) * noise(i);
        }
        std::mem::swap(x, &mut self.next);
    }
}

/// One exponential-integrator step of length `tau`.
pub fn step(state: &State, noise_column: &[f64], tau: f64, problem: &ProblemSpec) -> Result<State> {
    if noise_column.len() != state.len() {
        return Err(Error::Dimension {
            expected: state.len(),
            actual: noise_column.len(),
        });
    }
    if !(tau > 0.0) {
        return Err(Error::domain(format!("time step must be positive, got {tau}")));
    }
    let mut x = state.coeffs.clone();
    if !x.is_empty() {
        Propagator::new(problem, x.len(), tau).advance(&mut x, |i| noise_column[i]);
    }
    Ok(State::new(x, state.time + tau))
}

fn apply_functional(functional: &QoIFunctional, coeffs: &[f64]) -> QoIValue {
    match functional {
        QoIFunctional::Identity => QoIValue::Vector(coeffs.to_vec()),
        QoIFunctional::LinearFunctional(w) => {
            QoIValue::Scalar(coeffs.iter().zip(w).map(|(c, w)| c * w).sum())
        }
    }
}

/// `P_N X0`, drawing random coefficients from the lattice.
pub fn initial_state(init: &InitSpec, modes: usize, lattice: &NoiseLattice) -> Vec<f64> {
    (1..=modes)
        .map(|k| {
            let z = if init.is_random() { lattice.initial_normal(k) } else { 0.0 };
            init.coefficient(k, z)
        })
        .collect()
}

fn solve_observed(
    problem: &ProblemSpec,
    steps: usize,
    modes: usize,
    lattice: &NoiseLattice,
    mut observer: Option<&mut dyn FnMut(usize, &[f64])>,
) -> Result<SolveResult> {
    if steps == 0 || modes == 0 {
        return Err(Error::domain("solve needs at least one step and one mode"));
    }
    if !lattice.fine_steps().is_multiple_of(steps) {
        return Err(Error::Divisibility {
            what: "lattice steps",
            value: lattice.fine_steps(),
            divisor: steps,
        });
    }
    if modes > lattice.mode_count() {
        return Err(Error::Dimension {
            expected: lattice.mode_count(),
            actual: modes,
        });
    }
    let factor = lattice.fine_steps() / steps;
    let noise = lattice.coarsen_rows(&problem.spectrum, factor, modes)?;
    let tau = problem.horizon / steps as f64;

    let mut x = initial_state(&problem.init, modes, lattice);
    let mut prop = Propagator::new(problem, modes, tau);
    let integral = problem.qoi.form == QoIForm::TimeIntegral;
    let mut acc: Option<QoIValue> = None;
    for j in 0..steps {
        if let Some(obs) = observer.as_mut() {
            obs(j, &x);
        }
        if integral {
            let v = apply_functional(&problem.qoi.functional, &x);
            match acc.as_mut() {
                Some(a) => a.add_scaled(prop.tau, &v),
                None => acc = Some(v.scaled(prop.tau)),
            }
        }
        prop.advance(&mut x, |i| noise.get(i + 1, j));
    }
    if let Some(obs) = observer.as_mut() {
        obs(steps, &x);
    }
    let qoi = match acc {
        Some(a) => a,
        None => apply_functional(&problem.qoi.functional, &x),
    };
    Ok(SolveResult {
        terminal: State::new(x, problem.horizon),
        qoi,
        cost_units: solve_cost(steps, modes, problem.drift.log_exponent()),
    })
}

/// `X^M_N` driven by `lattice`, with the QoI evaluated per the problem.
pub fn solve(problem: &ProblemSpec, steps: usize, modes: usize, lattice: &NoiseLattice) -> Result<SolveResult> {
    solve_observed(problem, steps, modes, lattice, None)
}

/// Like [`solve`], additionally writing the trajectory as CSV rows
/// `step,mode,coefficient`.
pub fn solve_with_trajectory<W: Write>(
    problem: &ProblemSpec,
    steps: usize,
    modes: usize,
    lattice: &NoiseLattice,
    out: W,
) -> Result<SolveResult> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["step", "mode", "coefficient"])?;
    let mut failure: Option<csv::Error> = None;
    let mut obs = |j: usize, x: &[f64]| {
        for (i, c) in x.iter().enumerate() {
            if failure.is_none() {
                if let Err(e) = writer.serialize((j, i + 1, c)) {
                    failure = Some(e);
                }
            }
        }
    };
    let result = solve_observed(problem, steps, modes, lattice, Some(&mut obs))?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    writer.flush()?;
    Ok(result)
}

/// Mixed difference `Delta_l Psi` for `l = (l1, l2)`; every solve reads the
/// same lattice. Vector values are padded to `N_{l2}`.
pub fn double_difference(
    problem: &ProblemSpec,
    index: (usize, usize),
    grids: &Grids,
    lattice: &NoiseLattice,
) -> Result<QoIValue> {
    let (l1, l2) = index;
    let m = grids.steps(l1);
    let n = grids.modes(l2);
    let psi = |steps: usize, modes: usize| solve(problem, steps, modes, lattice).map(|r| r.qoi);
    let mut value = psi(m, n)?.padded(n);
    if l1 > 0 {
        value.add_scaled(-1.0, &psi(grids.steps(l1 - 1), n)?);
    }
    if l2 > 0 {
        value.add_scaled(-1.0, &psi(m, grids.modes(l2 - 1))?);
    }
    if l1 > 0 && l2 > 0 {
        value.add_scaled(1.0, &psi(grids.steps(l1 - 1), grids.modes(l2 - 1))?);
    }
    Ok(value)
}

/// Cost of one sample of `Delta_l Psi`: the sum of its solve costs.
pub fn double_difference_cost(index: (usize, usize), grids: &Grids, log_exponent: u32) -> f64 {
    let (l1, l2) = index;
    let mut times = vec![grids.steps(l1)];
    if l1 > 0 {
        times.push(grids.steps(l1 - 1));
    }
    let mut spaces = vec![grids.modes(l2)];
    if l2 > 0 {
        spaces.push(grids.modes(l2 - 1));
    }
    times
        .iter()
        .flat_map(|&m| spaces.iter().map(move |&n| solve_cost(m, n, log_exponent)))
        .sum()
}

/// Coupled `Psi(X^{M_l}_{N_l}) - Psi(X^{M_{l-1}}_{N_{l-1}})`, or the plain
/// fine value when `coarse` is `None`.
pub fn pair_difference(
    problem: &ProblemSpec,
    fine: (usize, usize),
    coarse: Option<(usize, usize)>,
    lattice: &NoiseLattice,
) -> Result<QoIValue> {
    let (m, n) = fine;
    let value = solve(problem, m, n, lattice)?.qoi.padded(n);
    match coarse {
        None => Ok(value),
        Some((mc, nc)) => {
            if mc == 0 || m % mc != 0 {
                return Err(Error::Divisibility {
                    what: "fine step count",
                    value: m,
                    divisor: mc,
                });
            }
            Ok(value.difference(&solve(problem, mc, nc, lattice)?.qoi))
        }
    }
}
