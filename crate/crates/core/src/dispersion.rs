//! Linear dispersion relation of the homogeneous state u = m.
//!
//! In a frame moving with speed s, modes e^{lambda t + nu xi} of the
//! linearization exist when
//!
//! ```text
//! d_s(lambda, nu) = -nu^2 (nu^2 + alpha) - (lambda - s nu) = 0,   alpha = 1 - 3 m^2.
//! ```
//!
//! The spreading speed is the largest s admitting a pinched double root
//! `d_s = d/dnu d_s = 0` with `Re lambda = 0`.

use crate::error::{Error, Result};
use crate::params::Frame;
use crate::poly;
use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::Serialize;

type C = Complex64;

const I: C = C::new(0.0, 1.0);

/// |Re nu| below this counts as a root on the imaginary axis.
pub const NEUTRAL_TOL: f64 = 1e-9;

pub fn d0(lambda: C, nu: C, alpha: f64) -> C {
    let nu2 = nu * nu;
    -nu2 * (nu2 + alpha) - lambda
}

/// Comoving dispersion relation `d0(lambda - s nu, nu)`.
pub fn d_s(lambda: C, nu: C, alpha: f64, s: f64) -> C {
    d0(lambda - s * nu, nu, alpha)
}

/// `d/dnu d_s(lambda, nu)`; independent of lambda.
pub fn d_s_nu(nu: C, alpha: f64, s: f64) -> C {
    -4.0 * nu * nu * nu - 2.0 * alpha * nu + s
}

/// Growth rate q^2 (alpha - q^2) of the Fourier mode e^{iqx}.
pub fn temporal_growth(q: f64, alpha: f64) -> f64 {
    q * q * (alpha - q * q)
}

/// The four roots nu of `d_s(lambda, nu) = 0`.
pub fn spatial_roots(lambda: C, alpha: f64, s: f64) -> Vec<C> {
    // nu^4 + alpha nu^2 - s nu + lambda = 0
    poly::roots(&[lambda, C::from(-s), C::from(alpha), C::from(0.0), C::from(1.0)])
}

/// Closed-form double-root values, used as Newton seeds and for reporting.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClosedForm {
    pub s: f64,
    pub omega: f64,
    pub re_nu: f64,
    pub im_nu: f64,
    /// omega / s from the two values above.
    pub k_lin: f64,
    /// The k_lin expression as printed in the literature. It disagrees with
    /// omega / s (0.5104 vs 0.7657 at alpha = 1) and is kept only to report
    /// the discrepancy.
    pub k_lin_printed: f64,
}

pub fn closed_form(alpha: f64) -> ClosedForm {
    let r7 = 7f64.sqrt();
    let s = 2.0 / (3.0 * 6f64.sqrt()) * (2.0 + r7) * (r7 - 1.0).sqrt() * alpha.powf(1.5);
    let omega = (3.0 + r7) * ((2.0 + r7) / 96.0).sqrt() * alpha * alpha;
    let re_nu = -((r7 - 1.0) / 24.0).sqrt() * alpha.sqrt();
    let im_nu = ((r7 + 3.0) / 8.0).sqrt() * alpha.sqrt();
    let k_lin_printed = 2.0 * (r7 + 3.0) / (8.0 * ((r7 - 1.0) * (r7 + 2.0)).sqrt()) * alpha.sqrt();
    ClosedForm { s, omega, re_nu, im_nu, k_lin: omega / s, k_lin_printed }
}

/// A double root of the comoving dispersion relation with Re lambda = 0.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DoubleRoot {
    pub lambda: C,
    pub nu: C,
    pub s: f64,
    pub omega: f64,
    pub k_lin: f64,
    pub pinched: bool,
    /// max(|d_s|, |d/dnu d_s|) at the returned point.
    pub residual: f64,
}

/// Result of following the two roots that collide at a double root.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PinchCheck {
    pub pinched: bool,
    /// Branch values at the end of the path.
    pub nu_a: C,
    pub nu_b: C,
    pub r_end: f64,
}

/// Follows the two roots colliding at `nu_star` along lambda = lambda_star + r,
/// r in (0, r_end], with `roots(lambda)` returning all roots. Pinched when the
/// branches end in opposite half planes.
pub fn follow_colliding_roots<F>(roots: F, lambda_star: C, nu_star: C, r_end: f64) -> Result<PinchCheck>
where
    F: Fn(C) -> Vec<C>,
{
    let scale = nu_star.norm().max(1e-3);
    let mut r = 1e-8 * r_end.max(1e-3);
    let mut cur = roots(lambda_star + r);
    cur.sort_by(|a, b| (a - nu_star).norm().partial_cmp(&(b - nu_star).norm()).unwrap());
    if cur.len() < 2 || (cur[1] - nu_star).norm() > 0.1 * scale {
        return Err(Error::NotPinched(format!("no root pair near {nu_star}")));
    }
    let mut pair = [cur[0], cur[1]];
    let mut dr = r;
    while r < r_end {
        let step = dr.min(r_end - r);
        let next = roots(lambda_star + r + step);
        let mut ok = true;
        let mut matched = pair;
        for (j, p) in pair.iter().enumerate() {
            let mut dists: Vec<(f64, C)> = next.iter().map(|z| ((z - p).norm(), *z)).collect();
            dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            // unambiguous match: nearest much closer than the runner-up
            if dists.len() > 1 && dists[0].0 > 0.25 * dists[1].0 {
                ok = false;
            }
            matched[j] = dists[0].1;
        }
        if (matched[0] - matched[1]).norm() < 1e-14 {
            ok = false;
        }
        if ok {
            pair = matched;
            r += step;
            dr = step * 2.0;
        } else {
            dr = step * 0.5;
            if dr < 1e-14 * r_end {
                return Err(Error::NotPinched("root tracking lost the branches".into()));
            }
        }
    }
    let pinched = pair[0].re * pair[1].re < 0.0;
    Ok(PinchCheck { pinched, nu_a: pair[0], nu_b: pair[1], r_end })
}

fn residual_vec(x: &Vector4<f64>, alpha: f64) -> Vector4<f64> {
    let nu = C::new(x[0], x[1]);
    let (omega, s) = (x[2], x[3]);
    let d = d_s(I * omega, nu, alpha, s);
    let dn = d_s_nu(nu, alpha, s);
    Vector4::new(d.re, d.im, dn.re, dn.im)
}

fn jacobian(x: &Vector4<f64>, alpha: f64) -> Matrix4<f64> {
    let nu = C::new(x[0], x[1]);
    let s = x[3];
    let dn = d_s_nu(nu, alpha, s); // d(d_s)/dnu
    let dnn = -12.0 * nu * nu - 2.0 * alpha; // d(d_nu)/dnu
    let d_domega = -I;
    let d_ds = nu;
    // columns: Re nu, Im nu, omega, s
    let cols = [
        (dn, dnn),
        (I * dn, I * dnn),
        (d_domega, C::from(0.0)),
        (d_ds, C::from(1.0)),
    ];
    let mut j = Matrix4::zeros();
    for (c, (a, b)) in cols.iter().enumerate() {
        j[(0, c)] = a.re;
        j[(1, c)] = a.im;
        j[(2, c)] = b.re;
        j[(3, c)] = b.im;
    }
    j
}

fn damped_newton(mut x: Vector4<f64>, alpha: f64) -> Option<(Vector4<f64>, f64)> {
    let mut f = residual_vec(&x, alpha);
    let mut fn0 = f.norm();
    for _ in 0..100 {
        if fn0 < 1e-14 {
            break;
        }
        let dx = jacobian(&x, alpha).lu().solve(&(-f))?;
        let mut t = 1.0;
        loop {
            let xn = x + dx * t;
            let fnew = residual_vec(&xn, alpha);
            if fnew.norm() < fn0 || t < 1e-4 {
                x = xn;
                f = fnew;
                break;
            }
            t *= 0.5;
        }
        let n = f.norm();
        if (fn0 - n).abs() < 1e-16 && n > 1e-10 {
            return None;
        }
        fn0 = n;
    }
    if fn0 < 1e-12 {
        Some((x, fn0))
    } else {
        None
    }
}

/// Critical pinched double root of the homogeneous state, for alpha > 0.
pub fn spreading_speed(alpha: f64) -> Result<DoubleRoot> {
    if !(alpha > 0.0) {
        return Err(Error::NoInstability { alpha });
    }
    let cf = closed_form(alpha);
    let base = Vector4::new(cf.re_nu, cf.im_nu, cf.omega, cf.s);
    let perturb = [
        [0.0, 0.0, 0.0, 0.0],
        [0.05, 0.0, 0.0, 0.0],
        [0.0, -0.05, 0.0, 0.0],
        [0.0, 0.0, 0.05, 0.0],
        [0.0, 0.0, 0.0, -0.05],
        [-0.1, 0.1, -0.1, 0.1],
        [0.1, -0.1, 0.1, -0.1],
        [0.2, 0.2, 0.2, 0.2],
    ];
    let mut candidates: Vec<DoubleRoot> = Vec::new();
    for p in perturb.iter() {
        let seed = Vector4::from_fn(|i, _| base[i] * (1.0 + p[i]));
        let Some((mut x, _)) = damped_newton(seed, alpha) else { continue };
        // canonical representative: Im lambda > 0 (conjugation symmetry)
        if x[2] < 0.0 {
            x[1] = -x[1];
            x[2] = -x[2];
        }
        if !(x[3] > 0.0 && x[2] > 0.0 && x[0] < 0.0) {
            continue;
        }
        let nu = C::new(x[0], x[1]);
        let lambda = I * x[2];
        let residual = d_s(lambda, nu, alpha, x[3]).norm().max(d_s_nu(nu, alpha, x[3]).norm());
        if candidates.iter().any(|c| (c.nu - nu).norm() < 1e-8 && (c.s - x[3]).abs() < 1e-8) {
            continue;
        }
        candidates.push(DoubleRoot {
            lambda,
            nu,
            s: x[3],
            omega: x[2],
            k_lin: x[2] / x[3],
            pinched: false,
            residual,
        });
    }
    if candidates.is_empty() {
        return Err(Error::NoConvergence(format!("double-root Newton failed from all seeds (alpha = {alpha})")));
    }
    let mut first_err = None;
    let mut pinched: Vec<DoubleRoot> = Vec::new();
    for mut c in candidates {
        let (s, a) = (c.s, alpha);
        match follow_colliding_roots(|l| spatial_roots(l, a, s), c.lambda, c.nu, 10.0 * s) {
            Ok(chk) if chk.pinched => {
                c.pinched = true;
                pinched.push(c);
            }
            Ok(chk) => {
                first_err.get_or_insert(Error::NotPinched(format!(
                    "branches end at {} and {}",
                    chk.nu_a, chk.nu_b
                )));
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    pinched
        .into_iter()
        .max_by(|a, b| a.s.partial_cmp(&b.s).unwrap())
        .ok_or_else(|| first_err.unwrap())
}

/// Characteristic wavenumbers of spinodal decomposition, all proportional
/// to sqrt(alpha).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WavenumberTable {
    pub k_temp: f64,
    pub k_max: f64,
    pub k_lin: f64,
    pub im_nu_lin: f64,
}

impl WavenumberTable {
    pub fn new(alpha: f64, root: &DoubleRoot) -> Self {
        Self {
            k_temp: (alpha / 2.0).sqrt(),
            k_max: alpha.sqrt(),
            k_lin: root.k_lin,
            im_nu_lin: root.nu.im,
        }
    }
}

pub fn wavenumber_table(alpha: f64) -> Result<WavenumberTable> {
    Ok(WavenumberTable::new(alpha, &spreading_speed(alpha)?))
}

/// Roots of `d_s(i omega ell, nu) = 0` for one Fourier index. For ell = 0
/// the structural root nu = 0 (mass direction) is removed.
fn roots_for_ell(frame: &Frame, alpha: f64, ell: i64) -> Vec<C> {
    if ell == 0 {
        // -nu (nu^3 + alpha nu - s) = 0
        poly::roots(&[C::from(-frame.s), C::from(alpha), C::from(0.0), C::from(1.0)])
    } else {
        spatial_roots(I * (frame.omega * ell as f64), alpha, frame.s)
    }
}

/// Number of spatial roots with Re nu > 0 over Fourier indices |ell| <= n:
/// the Morse index of u = m as an equilibrium of the truncated
/// traveling-wave system.
pub fn count_unstable_spatial_roots(frame: &Frame, alpha: f64, n: usize) -> Result<usize> {
    if frame.s == 0.0 || frame.omega == 0.0 {
        return Err(Error::InvalidInput("s and omega must be nonzero".into()));
    }
    let n = n as i64;
    let mut count = 0;
    for ell in -n..=n {
        for nu in roots_for_ell(frame, alpha, ell) {
            if nu.re.abs() < NEUTRAL_TOL {
                return Err(Error::NeutralRoot { ell, re_nu: nu.re });
            }
            if nu.re > 0.0 {
                count += 1;
            }
        }
    }
    Ok(count)
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayRow {
    pub ell: i64,
    /// Roots with Re nu < 0.
    pub stable_roots: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayViolation {
    pub ell: i64,
    pub nu: (f64, f64),
    /// true when the root sits exactly at Re nu_lin away from ell = +-1
    pub equality: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub pass: bool,
    pub re_nu_lin: f64,
    pub rows: Vec<DecayRow>,
    pub violations: Vec<DecayViolation>,
}

/// Scans all stable spatial roots for |ell| <= l_max and checks none lies
/// in the strip Re nu_lin < Re nu < 0, with equality allowed only at
/// ell = +-1 (the double root itself).
pub fn critical_decay_check(alpha: f64, omega: f64, s: f64, l_max: usize) -> Result<DecayReport> {
    let root = spreading_speed(alpha)?;
    Ok(decay_scan(alpha, omega, s, l_max, root.nu.re))
}

/// As [`critical_decay_check`] against a given reference rate.
pub fn decay_scan(alpha: f64, omega: f64, s: f64, l_max: usize, re_nu_lin: f64) -> DecayReport {
    // companion eigenvalues resolve a double root to ~sqrt(eps)
    let eq_tol = 1e-6 * re_nu_lin.abs().max(1.0);
    let frame = Frame::new(s, omega);
    let l = l_max as i64;
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for ell in -l..=l {
        let stable: Vec<C> = roots_for_ell(&frame, alpha, ell).into_iter().filter(|z| z.re < -NEUTRAL_TOL).collect();
        for z in &stable {
            let gap = z.re - re_nu_lin;
            if gap > eq_tol {
                violations.push(DecayViolation { ell, nu: (z.re, z.im), equality: false });
            } else if gap.abs() <= eq_tol && ell.abs() != 1 {
                violations.push(DecayViolation { ell, nu: (z.re, z.im), equality: true });
            }
        }
        rows.push(DecayRow { ell, stable_roots: stable.iter().map(|z| (z.re, z.im)).collect() });
    }
    DecayReport { pass: violations.is_empty(), re_nu_lin, rows, violations }
}
