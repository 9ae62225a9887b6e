//! Exact CUE sampling as a projection determinantal point process.
//!
//! The CUE eigenangles form the projection DPP with kernel
//! `K(x, y) = (1/2pi) sum_{k=0}^{N-1} e^{ik(x-y)}`. Multiplying by the
//! unimodular factor `e^{-ic(x-y)}` with `c = (N-1)/2` leaves every
//! correlation determinant unchanged and makes the kernel real:
//! `K(x, y) = u(x) . u(y) / 2pi` with the real feature map
//!
//! ```text
//! u(x) = [1]? ++ [sqrt2 cos(w x), sqrt2 sin(w x)] for w in the positive frequencies
//! ```
//!
//! (half-integers `1/2 .. (N-1)/2` for even `N`; a constant plus `1 .. (N-1)/2`
//! for odd `N`), so `|u(x)|^2 = N`.
//!
//! Points are placed one at a time. With orthonormal `e_1..e_m` spanning the
//! features of the points placed so far, the next point has density
//! `r(x) / (2 pi (N - m))` where `r(x) = N - sum_j (e_j . u(x))^2`. Proposals
//! are uniform and accepted with probability `r(x) / N`.
//!
//! `r` is a trigonometric polynomial of degree `N - 1`. Its Fourier
//! coefficients are kept up to date with two FFTs per placed point, so a
//! proposal costs `O(N)`. Orthonormalization is modified Gram-Schmidt with one
//! re-orthogonalization pass.

use std::f64::consts::{SQRT_2, TAU};
use std::sync::Arc;

use rand::Rng;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{EigenvalueSample, Provenance, SamplerKind};
use crate::error::{Error, Result};

pub const DEFAULT_REJECTION_CAP: u64 = 1_000_000;

/// Residual norms below `CLIP_TOL * N` are rounding noise, not a new direction.
const CLIP_TOL: f64 = 1e-12;
/// Negative residuals are clipped to zero unless they fall below
/// `-DEGENERATE_TOL * N`, which means the basis has lost orthogonality.
const DEGENERATE_TOL: f64 = 1e-6;

/// Reusable workspace for drawing CUE configurations of a fixed size.
pub struct CueSampler {
    n: usize,
    odd: bool,
    /// Number of complex coefficients of a feature-space vector.
    n_coef: usize,
    grid: usize,
    rejection_cap: u64,
    inverse: Arc<dyn Fft<f64>>,
    forward: Arc<dyn Fft<f64>>,
    /// `e^{i s x_g}` on the grid, `s = 1/2` for even `N`.
    half_shift: Vec<Complex64>,
    basis: Vec<f64>,
    feature: Vec<f64>,
    fft_buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
    /// `S(x) = sum_j (e_j . u(x))^2 = q[0] + 2 Re sum_{d>=1} q[d] e^{idx}`.
    q: Vec<Complex64>,
}

impl CueSampler {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_rejection_cap(n, DEFAULT_REJECTION_CAP)
    }

    pub fn with_rejection_cap(n: usize, rejection_cap: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("CUE sampling needs N >= 1".into()));
        }
        let odd = n % 2 == 1;
        let n_coef = if odd { n.div_ceil(2) } else { n / 2 };
        let grid = (2 * n).next_power_of_two().max(4);
        let mut planner = FftPlanner::new();
        let inverse = planner.plan_fft_inverse(grid);
        let forward = planner.plan_fft_forward(grid);
        let scratch_len = inverse.get_inplace_scratch_len().max(forward.get_inplace_scratch_len());
        let shift = if odd { 0.0 } else { 0.5 };
        let half_shift = (0..grid)
            .map(|g| Complex64::from_polar(1.0, shift * TAU * g as f64 / grid as f64))
            .collect();
        Ok(Self {
            n,
            odd,
            n_coef,
            grid,
            rejection_cap,
            inverse,
            forward,
            half_shift,
            basis: Vec::with_capacity(n * n),
            feature: vec![0.0; n],
            fft_buf: vec![Complex64::default(); grid],
            scratch: vec![Complex64::default(); scratch_len],
            q: vec![Complex64::default(); n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Draws one configuration (unsorted, in placement order).
    pub fn sample_angles<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<f64>> {
        let n = self.n;
        self.basis.clear();
        self.q.iter_mut().for_each(|c| *c = Complex64::default());
        let mut angles = Vec::with_capacity(n);
        let bound = n as f64;
        for point in 0..n {
            let mut proposals = 0u64;
            let x = loop {
                if proposals == self.rejection_cap {
                    return Err(Error::RejectionCap { point, cap: self.rejection_cap });
                }
                proposals += 1;
                let x = TAU * rng.random::<f64>();
                let r = self.residual(x)?;
                if rng.random::<f64>() * bound < r {
                    break x;
                }
            };
            self.add_point(x)?;
            angles.push(x);
        }
        Ok(angles)
    }

    /// The unnormalized conditional density `r(x)`, clipped at zero.
    pub fn residual(&self, x: f64) -> Result<f64> {
        let r = self.n as f64 - self.projected_mass(x);
        if r < -DEGENERATE_TOL * self.n as f64 {
            return Err(Error::Degenerate(format!("conditional density {r} at x = {x}")));
        }
        Ok(r.max(0.0))
    }

    fn projected_mass(&self, x: f64) -> f64 {
        // Horner in w = e^{ix}; stable because |w| = 1.
        let w = Complex64::from_polar(1.0, x);
        let mut acc = Complex64::default();
        for c in self.q[1..].iter().rev() {
            acc = (acc + c) * w;
        }
        self.q[0].re + 2.0 * acc.re
    }

    fn fill_feature(&mut self, x: f64) {
        let mut k = 0;
        if self.odd {
            self.feature[0] = 1.0;
            k = 1;
        }
        let shift = if self.odd { 1.0 } else { 0.5 };
        let step = Complex64::from_polar(1.0, x);
        let mut w = Complex64::from_polar(1.0, shift * x);
        let pairs = (self.n - k) / 2;
        for j in 0..pairs {
            if j % 32 == 31 {
                w = Complex64::from_polar(1.0, (shift + j as f64) * x);
            }
            self.feature[k] = SQRT_2 * w.re;
            self.feature[k + 1] = SQRT_2 * w.im;
            k += 2;
            w *= step;
        }
    }

    fn add_point(&mut self, x: f64) -> Result<()> {
        let n = self.n;
        self.fill_feature(x);
        let rows = self.basis.len() / n;
        for _pass in 0..2 {
            for row in 0..rows {
                let e = &self.basis[row * n..(row + 1) * n];
                let c = dot(e, &self.feature);
                axpy(-c, e, &mut self.feature);
            }
        }
        let norm_sq = dot(&self.feature, &self.feature);
        if !(norm_sq > CLIP_TOL * n as f64) {
            return Err(Error::Degenerate(format!("residual norm^2 {norm_sq} at x = {x}")));
        }
        let scale = norm_sq.sqrt().recip();
        self.feature.iter_mut().for_each(|v| *v *= scale);
        self.basis.extend_from_slice(&self.feature);
        self.accumulate_square();
        Ok(())
    }

    /// Adds the Fourier coefficients of `(e . u(x))^2` for the newest basis
    /// vector `e` (held in `self.feature`) to `q`.
    fn accumulate_square(&mut self) {
        let buf = &mut self.fft_buf;
        buf.iter_mut().for_each(|c| *c = Complex64::default());
        // p(x) = Re sum_j c_j e^{i (j + s) x}, c_j = sqrt2 (a_j - i b_j).
        let mut k = 0;
        let mut j0 = 0;
        if self.odd {
            buf[0] = Complex64::new(self.feature[0], 0.0);
            k = 1;
            j0 = 1;
        }
        for j in j0..self.n_coef {
            buf[j] = SQRT_2 * Complex64::new(self.feature[k], -self.feature[k + 1]);
            k += 2;
        }
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        for (value, shift) in buf.iter_mut().zip(&self.half_shift) {
            let p = (*value * shift).re;
            *value = Complex64::new(p * p, 0.0);
        }
        self.forward.process_with_scratch(buf, &mut self.scratch);
        let norm = (self.grid as f64).recip();
        for (q, f) in self.q.iter_mut().zip(buf.iter()) {
            *q += f * norm;
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// One exact draw from the CUE eigenvalue law.
pub fn sample_cue<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<EigenvalueSample> {
    let angles = CueSampler::new(n)?.sample_angles(rng)?;
    EigenvalueSample::new(angles, 2.0, Provenance { sampler: SamplerKind::Dpp, seed: None, stream: None })
}
