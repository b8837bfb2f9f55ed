//! Exact stochastic-convolution increments.
//!
//! For mode `k` and step `[t_j, t_j + tau]` the lattice stores
//! `int e^{-lambda_k (t_j + tau - s)} dB_k(s)`, a centred Gaussian with variance
//! [`ou_variance`]. Increments on a coarser grid are recovered from the fine
//! ones with [`aggregate_pair`], which is exact for the same Brownian path, so
//! every solve inside a coupled difference is driven by one realisation.

use std::io::{Read, Write};

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{one_minus_exp_over, ProblemSpec, SpectrumSpec};
use crate::rng::{StreamKey, INIT_STREAM};

/// Largest lattice (modes x steps) that [`sample_lattice`] will allocate.
pub const MAX_LATTICE_ENTRIES: usize = 1 << 27;

/// `(1 - e^{-2 lambda tau}) / (2 lambda)`, the variance of one OU increment.
pub fn ou_variance(lambda: f64, tau: f64) -> f64 {
    tau * one_minus_exp_over(2.0 * lambda * tau)
}

/// Joins the increments on `[t, t+h]` and `[t+h, t+2h]` into the increment on
/// `[t, t+2h]`.
#[inline]
pub fn aggregate_pair(lambda: f64, h: f64, left: f64, right: f64) -> f64 {
    (-lambda * h).exp() * left + right
}

/// Fine-grid OU increments for one Monte Carlo sample.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseLattice {
    mode_count: usize,
    fine_steps: usize,
    tau_fine: f64,
    /// Row-major: `integrals[(k - 1) * fine_steps + j]`.
    integrals: Vec<f64>,
    /// Standard normals for random initial conditions, one per mode.
    initial: Vec<f64>,
    key: StreamKey,
}

impl NoiseLattice {
    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn fine_steps(&self) -> usize {
        self.fine_steps
    }

    pub fn tau_fine(&self) -> f64 {
        self.tau_fine
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    /// Increments of mode `k` (1-based).
    pub fn row(&self, k: usize) -> &[f64] {
        let start = (k - 1) * self.fine_steps;
        &self.integrals[start..start + self.fine_steps]
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.integrals[(k - 1) * self.fine_steps + j]
    }

    /// Standard normal attached to mode `k` for the initial condition.
    pub fn initial_normal(&self, k: usize) -> f64 {
        self.initial[k - 1]
    }

    pub fn initial_normals(&self) -> &[f64] {
        &self.initial
    }

    /// Aggregates the first `rows` modes by `factor` (a power of two,
    /// possibly 1) using pairwise reduction.
    pub fn coarsen_rows(&self, spectrum: &SpectrumSpec, factor: usize, rows: usize) -> Result<Self> {
        if factor == 0 || !factor.is_power_of_two() {
            return Err(Error::config(format!(
                "coarsening factor must be a power of two, got {factor}"
            )));
        }
        if !self.fine_steps.is_multiple_of(factor) {
            return Err(Error::Divisibility {
                what: "lattice steps",
                value: self.fine_steps,
                divisor: factor,
            });
        }
        if rows > self.mode_count {
            return Err(Error::Dimension {
                expected: self.mode_count,
                actual: rows,
            });
        }
        let coarse_steps = self.fine_steps / factor;
        let mut integrals = Vec::with_capacity(rows * coarse_steps);
        let mut buf = Vec::with_capacity(self.fine_steps);
        for k in 1..=rows {
            let lambda = spectrum.lambda(k);
            buf.clear();
            buf.extend_from_slice(self.row(k));
            let mut h = self.tau_fine;
            let mut len = self.fine_steps;
            while len > coarse_steps {
                let decay = (-lambda * h).exp();
                for j in 0..len / 2 {
                    buf[j] = decay * buf[2 * j] + buf[2 * j + 1];
                }
                len /= 2;
                h *= 2.0;
            }
            integrals.extend_from_slice(&buf[..coarse_steps]);
        }
        Ok(Self {
            mode_count: rows,
            fine_steps: coarse_steps,
            tau_fine: self.tau_fine * factor as f64,
            integrals,
            initial: self.initial[..rows].to_vec(),
            key: self.key,
        })
    }

    /// Little-endian dump: `K (u64)`, `fineSteps (u64)`, `tauFine (f64)`,
    /// `seed (u64)`, `index (2 x u32)`, `sample (u64)`, then the `K * fineSteps`
    /// increments row by row, then the `K` initial-condition normals.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.mode_count as u64).to_le_bytes())?;
        w.write_all(&(self.fine_steps as u64).to_le_bytes())?;
        w.write_all(&self.tau_fine.to_le_bytes())?;
        w.write_all(&self.key.seed.to_le_bytes())?;
        w.write_all(&self.key.index[0].to_le_bytes())?;
        w.write_all(&self.key.index[1].to_le_bytes())?;
        w.write_all(&self.key.sample.to_le_bytes())?;
        for v in self.integrals.iter().chain(&self.initial) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        fn u64_le<R: Read>(r: &mut R) -> Result<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        }
        fn u32_le<R: Read>(r: &mut R) -> Result<u32> {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            Ok(u32::from_le_bytes(b))
        }
        let mode_count = u64_le(&mut r)? as usize;
        let fine_steps = u64_le(&mut r)? as usize;
        check_size(mode_count, fine_steps)?;
        let tau_fine = f64::from_bits(u64_le(&mut r)?);
        let seed = u64_le(&mut r)?;
        let index = [u32_le(&mut r)?, u32_le(&mut r)?];
        let sample = u64_le(&mut r)?;
        let mut values = Vec::with_capacity(mode_count * (fine_steps + 1));
        for _ in 0..mode_count * (fine_steps + 1) {
            values.push(f64::from_bits(u64_le(&mut r)?));
        }
        let initial = values.split_off(mode_count * fine_steps);
        Ok(Self {
            mode_count,
            fine_steps,
            tau_fine,
            integrals: values,
            initial,
            key: StreamKey::new(seed, index, sample),
        })
    }
}

fn check_size(modes: usize, steps: usize) -> Result<()> {
    match modes.checked_mul(steps) {
        Some(n) if n <= MAX_LATTICE_ENTRIES => Ok(()),
        _ => Err(Error::SizeLimit {
            modes,
            steps,
            limit: MAX_LATTICE_ENTRIES,
        }),
    }
}

/// Draws the fine-grid increments for `modes` modes and `fine_steps` uniform
/// steps on `[0, T]`. Mode `k` reads ChaCha stream `k` of `key`, so rows are
/// shared by every lattice with the same key regardless of its mode count.
pub fn sample_lattice(
    problem: &ProblemSpec,
    modes: usize,
    fine_steps: usize,
    key: StreamKey,
) -> Result<NoiseLattice> {
    if modes == 0 || fine_steps == 0 {
        return Err(Error::domain("lattice needs at least one mode and one step"));
    }
    check_size(modes, fine_steps)?;
    let tau = problem.horizon / fine_steps as f64;
    let mut integrals = Vec::with_capacity(modes * fine_steps);
    for k in 1..=modes {
        let sd = ou_variance(problem.spectrum.lambda(k), tau).sqrt();
        let mut rng = key.rng(k as u64);
        integrals.extend((0..fine_steps).map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sd * z
        }));
    }
    let mut rng = key.rng(INIT_STREAM);
    let initial = (0..modes).map(|_| StandardNormal.sample(&mut rng)).collect();
    Ok(NoiseLattice {
        mode_count: modes,
        fine_steps,
        tau_fine: tau,
        integrals,
        initial,
        key,
    })
}

/// Aggregates the whole lattice by `factor >= 2` (a power of two dividing the
/// step count).
pub fn coarsen(lattice: &NoiseLattice, spectrum: &SpectrumSpec, factor: usize) -> Result<NoiseLattice> {
    if factor < 2 {
        return Err(Error::config(format!("coarsening factor must be at least 2, got {factor}")));
    }
    lattice.coarsen_rows(spectrum, factor, lattice.mode_count)
}
