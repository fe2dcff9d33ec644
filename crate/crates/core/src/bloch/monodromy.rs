//! Period map of the Bloch-wave problem at a periodic pattern.
//!
//! For a Bloch exponent nu, perturbations w e^{nu x} with w L-periodic
//! satisfy lambda w = -(d + nu)^2 ((d + nu)^2 w + q w), q = 1 - 3 u^2. The
//! monodromy of this fourth-order equation is integrated together with the
//! pattern ODE u'' = mu - u + u^3, so the coefficients are exact along the
//! orbit.

use crate::equilibria::PeriodicPattern;
use crate::error::{Error, Result};
use crate::ode::{integrate_to, OdeSystem, Tolerances};
use nalgebra::Matrix4;
use num_complex::Complex64 as C;
use std::f64::consts::PI;

/// Coefficient source: u = m + tau (u_p - m) where u_p solves the pattern
/// ODE from (u0, 0) with multiplier mu. tau = 1 is the pattern itself and
/// tau = 0 the homogeneous state.
#[derive(Debug, Clone, Copy)]
pub struct Background {
    pub m: f64,
    pub mu: f64,
    pub u0: f64,
    pub period: f64,
    pub tau: f64,
}

impl Background {
    pub fn from_pattern(p: &PeriodicPattern) -> Self {
        Self { m: p.m, mu: p.mu, u0: p.u0, period: p.period, tau: 1.0 }
    }

    /// Homogeneous state viewed as an L-periodic pattern.
    pub fn trivial(m: f64, period: f64) -> Self {
        Self { m, mu: m - m * m * m, u0: m, period, tau: 1.0 }
    }

    pub fn with_homotopy(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn k_p(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// (q, q', q'') at a pattern point (u_p, u_p').
    fn q(&self, up: f64, vp: f64) -> (f64, f64, f64) {
        let t = self.tau;
        let u = self.m + t * (up - self.m);
        let du = t * vp;
        let ddu = t * (self.mu - up + up * up * up);
        (1.0 - 3.0 * u * u, -6.0 * u * du, -6.0 * (du * du + u * ddu))
    }
}

impl From<&PeriodicPattern> for Background {
    fn from(p: &PeriodicPattern) -> Self {
        Self::from_pattern(p)
    }
}

struct BlochOde<'a> {
    bg: &'a Background,
    lambda: C,
    nu: C,
}

const DIM: usize = 2 + 32;

#[inline]
fn get(y: &[f64], r: usize, c: usize) -> C {
    let i = 2 + 2 * (4 * c + r);
    C::new(y[i], y[i + 1])
}

#[inline]
fn set(dy: &mut [f64], r: usize, c: usize, z: C) {
    let i = 2 + 2 * (4 * c + r);
    dy[i] = z.re;
    dy[i + 1] = z.im;
}

impl OdeSystem for BlochOde<'_> {
    fn dim(&self) -> usize {
        DIM
    }

    fn rhs(&self, _x: f64, y: &[f64], dy: &mut [f64]) {
        let (up, vp) = (y[0], y[1]);
        dy[0] = vp;
        dy[1] = self.bg.mu - up + up * up * up;
        let (q, q1, q2) = self.bg.q(up, vp);
        let nu = self.nu;
        let nu2 = nu * nu;
        let c3 = -4.0 * nu;
        let c2 = -(6.0 * nu2 + q);
        let c1 = -(2.0 * q1 + 4.0 * nu2 * nu + 2.0 * nu * q);
        let c0 = -(q2 + 2.0 * nu * q1 + nu2 * nu2 + nu2 * q + self.lambda);
        for c in 0..4 {
            let w0 = get(y, 0, c);
            let w1 = get(y, 1, c);
            let w2 = get(y, 2, c);
            let w3 = get(y, 3, c);
            set(dy, 0, c, w1);
            set(dy, 1, c, w2);
            set(dy, 2, c, w3);
            set(dy, 3, c, c3 * w3 + c2 * w2 + c1 * w1 + c0 * w0);
        }
    }
}

/// Fundamental matrix of (w, w', w'', w''') over one period.
#[derive(Debug, Clone)]
pub struct Monodromy {
    pub phi: Matrix4<C>,
    pub lambda: C,
    pub nu: C,
    pub period: f64,
}

impl Monodromy {
    pub fn det(&self) -> C {
        self.phi.determinant()
    }

    /// det(phi - I); zero exactly when an L-periodic w exists.
    pub fn characteristic(&self) -> C {
        (self.phi - Matrix4::identity()).determinant()
    }

    /// Abel's formula: the trace of the coefficient matrix is -4 nu.
    pub fn abel_det(&self) -> C {
        (-4.0 * self.nu * self.period).exp()
    }

    /// Floquet multipliers (eigenvalues of phi).
    pub fn multipliers(&self) -> Vec<C> {
        let d = self.phi.schur().unpack().1;
        (0..4).map(|i| d[(i, i)]).collect()
    }
}

pub(crate) fn tolerances() -> Tolerances {
    Tolerances { rtol: 1e-11, atol: 1e-13, ..Default::default() }
}

pub fn monodromy(bg: &Background, lambda: C, nu: C) -> Result<Monodromy> {
    let mut y0 = vec![0.0; DIM];
    y0[0] = bg.u0;
    for i in 0..4 {
        set(&mut y0, i, i, C::new(1.0, 0.0));
    }
    let sys = BlochOde { bg, lambda, nu };
    let y = integrate_to(&sys, 0.0, &y0, bg.period, tolerances())
        .map_err(|e| Error::IntegrationFailure(format!("monodromy at lambda = {lambda}, nu = {nu}: {e}")))?;
    let phi = Matrix4::from_fn(|r, c| get(&y, r, c));
    if phi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::IntegrationFailure("non-finite monodromy".into()));
    }
    Ok(Monodromy { phi, lambda, nu, period: bg.period })
}

/// det(Phi_{lambda, nu} - I) in the steady frame of the pattern.
pub fn bloch_d(bg: &Background, lambda: C, nu: C) -> Result<C> {
    Ok(monodromy(bg, lambda, nu)?.characteristic())
}

/// Dispersion relation in the frame moving with speed s.
pub fn bloch_d_comoving(bg: &Background, s: f64, lambda: C, nu: C) -> Result<C> {
    bloch_d(bg, lambda - s * nu, nu)
}

/// Shifts Im nu into [-k/2, k/2).
pub fn fold_to_cell(nu: C, k: f64) -> C {
    let im = (nu.im + 0.5 * k).rem_euclid(k) - 0.5 * k;
    C::new(nu.re, im)
}

/// Newton on nu -> bloch_d(bg, lambda, nu) from `nu0`.
pub fn solve_bloch_root(bg: &Background, lambda: C, nu0: C) -> Result<C> {
    let mut nu = nu0;
    for _ in 0..50 {
        let h = 1e-6 * (1.0 + nu.norm());
        let f = bloch_d(bg, lambda, nu)?;
        let df = (bloch_d(bg, lambda, nu + h)? - bloch_d(bg, lambda, nu - h)?) / (2.0 * h);
        let step = f / df;
        nu -= step;
        if step.norm() < 1e-12 * (1.0 + nu.norm()) {
            return Ok(nu);
        }
    }
    Err(Error::NoConvergence(format!("Bloch root near {nu0}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::d0;
    use crate::equilibria::{find_equilibrium, BranchSelect};
    use crate::params::Parameters;

    fn pattern() -> PeriodicPattern {
        let p = Parameters::from_mass(0.2);
        find_equilibrium(1.3 * p.l_min, 0.2, 1, BranchSelect::LargestAmplitude).unwrap()
    }

    #[test]
    fn constant_coefficient_multipliers() {
        let m = 0.2;
        let alpha = 1.0 - 3.0 * m * m;
        let bg = Background::trivial(m, 7.0);
        let (lambda, nu) = (C::new(0.1, 0.3), C::new(-0.2, 0.1));
        let mono = monodromy(&bg, lambda, nu).unwrap();
        // multipliers e^{rho L} with d0(lambda, nu + rho) = 0
        for mu in mono.multipliers() {
            let rho = mu.ln() / bg.period;
            let best = (-3..=3)
                .map(|l| d0(lambda, nu + rho + C::new(0.0, 2.0 * PI * l as f64 / bg.period), alpha).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-8, "{best}");
        }
    }

    #[test]
    fn translation_kernel() {
        let bg = Background::from_pattern(&pattern());
        let d = bloch_d(&bg, C::new(0.0, 0.0), C::new(0.0, 0.0)).unwrap();
        assert!(d.norm() < 1e-8, "{d}");
    }

    #[test]
    fn abel_identity() {
        let bg = Background::from_pattern(&pattern());
        let mono = monodromy(&bg, C::new(0.3, -0.2), C::new(0.15, 0.4)).unwrap();
        let rel = (mono.det() - mono.abel_det()).norm() / mono.abel_det().norm();
        assert!(rel < 1e-8, "{rel}");
    }

    #[test]
    fn nu_free_monodromy_oracle() {
        // w e^{nu x} = W: det(Phi_nu - I) = det(e^{-nu L} Psi - I)
        let bg = Background::from_pattern(&pattern());
        let (lambda, nu) = (C::new(0.05, 0.2), C::new(-0.3, 0.25));
        let a = bloch_d(&bg, lambda, nu).unwrap();
        let psi = monodromy(&bg, lambda, C::new(0.0, 0.0)).unwrap().phi;
        let b = (psi * (-nu * bg.period).exp() - Matrix4::identity()).determinant();
        assert!((a - b).norm() < 1e-8 * (1.0 + a.norm()), "{a} vs {b}");
    }

    #[test]
    fn symmetries() {
        let bg = Background::from_pattern(&pattern());
        let k = bg.k_p();
        let s = 0.9;
        let (lambda, nu) = (C::new(0.02, 0.4), C::new(-0.25, 0.6));
        let d = bloch_d_comoving(&bg, s, lambda, nu).unwrap();
        let shifted = bloch_d_comoving(&bg, s, lambda + C::new(0.0, k * s), nu + C::new(0.0, k)).unwrap();
        assert!((d - shifted).norm() < 1e-8 * d.norm());
        let c = bloch_d(&bg, lambda.conj(), nu.conj()).unwrap();
        let d = bloch_d(&bg, lambda, nu).unwrap();
        assert!((c - d.conj()).norm() < 1e-8 * d.norm());
    }

    #[test]
    fn fold_into_cell() {
        let z = fold_to_cell(C::new(0.3, 2.9), 1.0);
        assert!((z.im + 0.1).abs() < 1e-12 && z.re == 0.3);
    }
}
