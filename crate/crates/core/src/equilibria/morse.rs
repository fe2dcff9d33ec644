//! Temporal Morse index of periodic equilibria.
//!
//! The linearization w -> -(w_xx + (1 - 3 u_p^2) w)_xx is discretized on
//! L-periodic Fourier modes e^{i q_a x}, q_a = 2 pi a / L, giving
//! M_ab = q_a^2 (c_{a-b} - q_b^2 delta_ab) with c the Fourier coefficients of
//! 1 - 3 u_p^2. For even patterns c is real and symmetric, and M is similar
//! to the symmetric matrix |q_a| (c_{a-b} - q_b^2 delta_ab) |q_b|.

use super::PeriodicPattern;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorseIndex {
    pub n_unstable: usize,
    /// Zero eigenvalues on mean-zero perturbations (translation mode for
    /// nontrivial patterns).
    pub n_zero: usize,
    /// Zero eigenvalues on the full periodic space, including the
    /// structural mass mode.
    pub n_zero_full: usize,
}

/// Real Fourier cosine coefficients c_k, k = 0..=kmax, of f sampled
/// uniformly on one period (samples even about x = 0).
pub(crate) fn cosine_coefficients(f: &[f64], kmax: usize) -> Vec<f64> {
    let n = f.len();
    (0..=kmax)
        .map(|k| {
            let w = 2.0 * PI * k as f64 / n as f64;
            f.iter().enumerate().map(|(i, v)| v * (w * i as f64).cos()).sum::<f64>() / n as f64
        })
        .collect()
}

/// Eigenvalues of the linearization on mean-zero modes, 0 < |a| <= n_modes.
pub fn linearization_spectrum(p: &PeriodicPattern, n_modes: usize) -> Result<Vec<f64>> {
    let q_field: Vec<f64> = p.samples.iter().map(|s| 1.0 - 3.0 * s[1] * s[1]).collect();
    if q_field.len() <= 4 * n_modes {
        return Err(Error::Unresolved(format!(
            "{} samples cannot resolve {} modes",
            q_field.len(),
            n_modes
        )));
    }
    let c = cosine_coefficients(&q_field, 2 * n_modes);
    let idx: Vec<i64> = (-(n_modes as i64)..=n_modes as i64).filter(|a| *a != 0).collect();
    let dim = idx.len();
    let q = |a: i64| 2.0 * PI * a as f64 / p.period;
    let s = DMatrix::from_fn(dim, dim, |i, j| {
        let (a, b) = (idx[i], idx[j]);
        let mut v = c[(a - b).unsigned_abs() as usize];
        if a == b {
            v -= q(b) * q(b);
        }
        q(a).abs() * v * q(b).abs()
    });
    let eig = s.symmetric_eigen();
    Ok(eig.eigenvalues.iter().copied().collect())
}

fn count(eigs: &[f64]) -> MorseIndex {
    let scale = eigs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // round-off level of the symmetric eigensolver
    let tol = (64.0 * f64::EPSILON * scale).max(1e-9);
    let n_unstable = eigs.iter().filter(|v| **v > tol).count();
    let n_zero = eigs.iter().filter(|v| v.abs() <= tol).count();
    MorseIndex { n_unstable, n_zero, n_zero_full: n_zero + 1 }
}

/// Morse index at truncation `n_modes`, required to agree with the count at
/// twice the truncation.
pub fn temporal_morse_index(p: &PeriodicPattern, n_modes: usize) -> Result<MorseIndex> {
    let a = count(&linearization_spectrum(p, n_modes)?);
    let b = count(&linearization_spectrum(p, 2 * n_modes)?);
    if a != b {
        return Err(Error::Unresolved(format!("{a:?} at {n_modes} modes vs {b:?} at {}", 2 * n_modes)));
    }
    Ok(a)
}

/// Truncation resolving wavenumbers up to ~10 on period L.
pub fn default_modes(period: f64) -> usize {
    ((10.0 * period / (2.0 * PI)).ceil() as usize).max(24)
}
