//! Discrete sine transform between the coefficients of
//! `e_k(x) = sqrt(2) sin(k pi x)` on `[0, 1]` and point values on a uniform
//! interior grid.
//!
//! With `n = oversample * N` the grid is `x_j = j / n`, `j = 1..n-1`. Both
//! directions are a type-I DST, evaluated through a complex FFT of length
//! `2n`. The forward direction is the trapezoidal rule for `<f, e_k>`, which is
//! exact for sine polynomials of degree below `n`.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub struct SineTransform {
    modes: usize,
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl std::fmt::Debug for SineTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SineTransform")
            .field("modes", &self.modes)
            .field("n", &self.n)
            .finish()
    }
}

impl SineTransform {
    /// Transform for `modes` coefficients on `oversample * modes - 1` points.
    pub fn new(modes: usize, oversample: usize) -> Self {
        assert!(modes >= 1 && oversample >= 2, "need modes >= 1 and oversample >= 2");
        let n = modes * oversample;
        let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(2 * n));
        let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        Self {
            modes,
            n,
            fft,
            buf: vec![Complex::default(); 2 * n],
            scratch,
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Number of interior grid points.
    pub fn points(&self) -> usize {
        self.n - 1
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (1..self.n).map(move |j| j as f64 / self.n as f64)
    }

    /// `out[j] = sum_{k=1}^{n-1} x_k sin(pi j k / n)` for the (zero padded) `input`,
    /// written for `j = 1..=out.len()`.
    fn dst1(&mut self, input: &[f64], out: &mut [f64]) {
        let n = self.n;
        self.buf.fill(Complex::default());
        for (j, &v) in input.iter().enumerate() {
            self.buf[j + 1].re = v;
            self.buf[2 * n - j - 1].re = -v;
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        for (k, o) in out.iter_mut().enumerate() {
            *o = -0.5 * self.buf[k + 1].im;
        }
    }

    /// Point values of `sum_k coeffs[k-1] e_k` on the grid.
    pub fn to_grid(&mut self, coeffs: &[f64], values: &mut [f64]) {
        assert_eq!(coeffs.len(), self.modes);
        assert_eq!(values.len(), self.points());
        self.dst1(coeffs, values);
        for v in values.iter_mut() {
            *v *= std::f64::consts::SQRT_2;
        }
    }

    /// First `modes` coefficients `<f, e_k>` from point values of `f`.
    pub fn from_grid(&mut self, values: &[f64], coeffs: &mut [f64]) {
        assert_eq!(values.len(), self.points());
        assert_eq!(coeffs.len(), self.modes);
        self.dst1(values, coeffs);
        let scale = std::f64::consts::SQRT_2 / self.n as f64;
        for c in coeffs.iter_mut() {
            *c *= scale;
        }
    }
}
