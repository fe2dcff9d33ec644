//! Pinched double roots of the Bloch dispersion relation: linear spreading
//! speeds of coarsening fronts invading a periodic wake.
//!
//! Unknowns are (nu, omega, s) with lambda = i omega. The relation is
//! invariant under (lambda, nu) -> (lambda + i k s, nu + i k) and under
//! complex conjugation, so roots come in pairs with omega_1 + omega_2 = k s.
//! The pair collides on the symmetric line omega = k s / 2, Im nu = k / 2,
//! where the relation is real; past the collision the root stays on that
//! line (period doubling).

use super::monodromy::{bloch_d_comoving, Background};
use crate::dispersion::{closed_form, spreading_speed};
use crate::equilibria::{find_equilibrium, find_equilibrium_near, BranchSelect, PeriodicPattern};
use crate::error::{Error, Result};
use crate::params::Parameters;
use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

const I: C = C { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CoarseningRoot {
    pub nu: C,
    pub omega: f64,
    pub s: f64,
    /// Solved on the symmetric line.
    pub doubled: bool,
    pub pinched: bool,
    /// |d_s| + |d/dnu d_s| at the solution.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CoarseningPrediction {
    pub m: f64,
    pub k_p: f64,
    pub s_coars: f64,
    pub omega_coars: f64,
    pub nu_coars: C,
    /// k_p / k_coarsening with k_coarsening = omega_coars / s_coars.
    pub ratio: f64,
    /// k_p s / omega for the two members of the conjugate pair.
    pub delta_k1: f64,
    pub delta_k2: f64,
    pub doubled: bool,
    pub s_lin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoarseningCurve {
    pub points: Vec<CoarseningPrediction>,
    /// Estimated onset of period doubling, if crossed.
    pub doubling_m: Option<f64>,
    /// Mass where s_coars first exceeds s_lin, if crossed.
    pub crossover_m: Option<f64>,
}

fn f(bg: &Background, s: f64, omega: f64, nu: C) -> Result<C> {
    bloch_d_comoving(bg, s, I * omega, nu)
}

/// (d_s, d/dnu d_s) by central differences in nu.
fn g(bg: &Background, s: f64, omega: f64, nu: C) -> Result<(C, C)> {
    let h = 1e-6 * (1.0 + nu.norm());
    let vals: Vec<Result<C>> = [C::from(0.0), C::from(h), C::from(-h)]
        .par_iter()
        .map(|d| f(bg, s, omega, nu + d))
        .collect();
    let (f0, fp, fm) = (vals[0].as_ref(), vals[1].as_ref(), vals[2].as_ref());
    let (f0, fp, fm) = match (f0, fp, fm) {
        (Ok(a), Ok(b), Ok(c)) => (*a, *b, *c),
        _ => return Err(Error::IntegrationFailure("Bloch residual".into())),
    };
    Ok((f0, (fp - fm) / (2.0 * h)))
}

fn gvec(bg: &Background, x: &Vector4<f64>) -> Result<Vector4<f64>> {
    let (a, b) = g(bg, x[3], x[2], C::new(x[0], x[1]))?;
    Ok(Vector4::new(a.re, a.im, b.re, b.im))
}

fn full_jacobian(bg: &Background, x: &Vector4<f64>) -> Result<Matrix4<f64>> {
    let hs: Vec<f64> = (0..4).map(|i| 1e-5 * (1.0 + x[i].abs())).collect();
    // d/d Re nu, d/d omega, d/ds by central differences; d/d Im nu = i d/d Re nu
    let probes: Vec<(usize, f64)> = [0usize, 2, 3].iter().flat_map(|&i| [(i, hs[i]), (i, -hs[i])]).collect();
    let vals: Vec<Result<Vector4<f64>>> = probes
        .par_iter()
        .map(|&(i, h)| {
            let mut y = *x;
            y[i] += h;
            gvec(bg, &y)
        })
        .collect();
    let mut cols = [Vector4::zeros(); 4];
    for (n, &i) in [0usize, 2, 3].iter().enumerate() {
        let p = vals[2 * n].as_ref().map_err(|_| Error::IntegrationFailure("Jacobian".into()))?;
        let m = vals[2 * n + 1].as_ref().map_err(|_| Error::IntegrationFailure("Jacobian".into()))?;
        cols[i] = (p - m) / (2.0 * hs[i]);
    }
    let d = cols[0];
    cols[1] = Vector4::new(-d[1], d[0], -d[3], d[2]);
    Ok(Matrix4::from_columns(&cols))
}

/// Damped Newton for the unpinned 4 x 4 real system.
fn newton_full(bg: &Background, x0: Vector4<f64>) -> Result<(Vector4<f64>, f64)> {
    let mut x = x0;
    let mut gx = gvec(bg, &x)?;
    for _ in 0..40 {
        let jac = full_jacobian(bg, &x)?;
        let dx = jac.lu().solve(&(-gx)).ok_or_else(|| Error::NoConvergence("singular Bloch Jacobian".into()))?;
        let mut t = 1.0;
        loop {
            let y = x + dx * t;
            match gvec(bg, &y) {
                Ok(gy) if gy.norm() < gx.norm() => {
                    x = y;
                    gx = gy;
                    break;
                }
                // no decrease at the noise floor of the determinant
                _ if dx.norm() < 1e-7 * (1.0 + x.norm()) => return Ok((x, gx.norm())),
                _ if t < 1e-3 => return Err(Error::NoConvergence("Bloch line search".into())),
                _ => t *= 0.5,
            }
        }
        if (dx * t).norm() < 1e-10 * (1.0 + x.norm()) {
            return Ok((x, gx.norm()));
        }
    }
    Err(Error::NoConvergence("Bloch double-root Newton".into()))
}

/// Reduced real system on the symmetric line: unknowns (Re nu, s).
fn newton_pinned(bg: &Background, x0: Vector2<f64>) -> Result<(Vector2<f64>, f64)> {
    let k = bg.k_p();
    let eval = |x: &Vector2<f64>| -> Result<Vector2<f64>> {
        let (a, b) = g(bg, x[1], 0.5 * k * x[1], C::new(x[0], 0.5 * k))?;
        Ok(Vector2::new(a.re, b.re))
    };
    let mut x = x0;
    let mut gx = eval(&x)?;
    for _ in 0..40 {
        let mut jac = Matrix2::zeros();
        for i in 0..2 {
            let h = 1e-5 * (1.0 + x[i].abs());
            let (mut p, mut m) = (x, x);
            p[i] += h;
            m[i] -= h;
            jac.set_column(i, &((eval(&p)? - eval(&m)?) / (2.0 * h)));
        }
        let dx = jac.lu().solve(&(-gx)).ok_or_else(|| Error::NoConvergence("singular pinned Jacobian".into()))?;
        let mut t = 1.0;
        loop {
            let y = x + dx * t;
            match eval(&y) {
                Ok(gy) if gy.norm() < gx.norm() => {
                    x = y;
                    gx = gy;
                    break;
                }
                // no decrease at the noise floor of the determinant
                _ if dx.norm() < 1e-7 * (1.0 + x.norm()) => return Ok((x, gx.norm())),
                _ if t < 1e-3 => return Err(Error::NoConvergence("pinned line search".into())),
                _ => t *= 0.5,
            }
        }
        if (dx * t).norm() < 1e-10 * (1.0 + x.norm()) {
            return Ok((x, gx.norm()));
        }
    }
    Err(Error::NoConvergence("pinned double-root Newton".into()))
}

/// Representative with omega in [0, k s / 2] under the Floquet shift and
/// conjugation.
fn canonical(bg: &Background, nu: C, omega: f64, s: f64) -> (C, f64) {
    let k = bg.k_p();
    let ks = k * s;
    let n = (omega / ks).round();
    let (mut nu, mut omega) = (nu - I * (k * n), omega - ks * n);
    if omega < 0.0 {
        nu = nu.conj();
        omega = -omega;
    }
    (nu, omega)
}

/// Distance of a root from the symmetric line, relative to (k s, k).
fn line_distance(bg: &Background, nu: C, omega: f64, s: f64) -> f64 {
    let k = bg.k_p();
    let dw = (omega - 0.5 * k * s).abs() / (k * s);
    let di = ((nu.im - 0.5 * k).rem_euclid(k) / k).min(1.0 - (nu.im - 0.5 * k).rem_euclid(k) / k);
    dw.max(di)
}

/// Line distance below which the conjugate pair is considered merged.
pub const DOUBLING_TOL: f64 = 1e-6;

/// Comoving Re lambda at which the two colliding roots are compared. With
/// q = 1 - 3 u^2 <= 1 no Bloch mode grows faster than 1/4, so no spatial
/// root crosses the imaginary axis beyond this.
pub const PINCH_R_END: f64 = 0.3;

/// Follows the two roots splitting from a double root along
/// lambda = i omega + r (1 +- i/4), r in (0, r_end]; pinched when they end
/// in opposite half planes.
pub fn bloch_pinch_check(bg: &Background, root: &CoarseningRoot, r_end: f64) -> Result<(bool, C, C)> {
    let (s, omega, nu0) = (root.s, root.omega, root.nu);
    let h = 1e-3 * (1.0 + nu0.norm());
    // The path is tilted off the real direction so it misses root
    // collisions forced by the symmetries, away from the nearer of the
    // partner double roots at -omega and k s - omega.
    let ks = bg.k_p() * s;
    let tilt = if omega < 0.25 * ks { C::new(1.0, 0.25) } else { C::new(1.0, -0.25) };
    let at = |r: f64, nu: C| bloch_d_comoving(bg, s, I * omega + tilt * r, nu);
    let f0 = at(0.0, nu0)?;
    let fnn = (at(0.0, nu0 + h)? - 2.0 * f0 + at(0.0, nu0 - h)?) / (h * h);
    let hl = 1e-4;
    let fl = (at(hl, nu0)? - at(-hl, nu0)?) / (2.0 * hl);
    // F ~ F_l r + F_nn dnu^2 / 2
    let dir = (-2.0 * fl * tilt / fnn).sqrt();
    let scale = nu0.norm().max(0.1);
    let mut r = (0.02 * scale / dir.norm()).powi(2).min(1e-2 * r_end);
    // secant iteration; det(Phi - I) carries ~1e-11 relative noise
    let newton = |r: f64, nu: C, width: f64| -> Result<C> {
        let (mut z0, mut z1) = (nu, nu + width * 1e-3);
        let (mut f0, mut f1) = (at(r, z0)?, at(r, z1)?);
        let mut last = f64::INFINITY;
        for _ in 0..30 {
            if f1 == f0 {
                break;
            }
            let step = f1 * (z1 - z0) / (f1 - f0);
            z0 = z1;
            f0 = f1;
            z1 -= step;
            if step.norm() > 10.0 * width {
                break;
            }
            let tol = 1e-9 * (1.0 + z1.norm());
            // stop at the noise floor: steps no longer shrink
            if step.norm() < tol || (step.norm() >= last && last < 1000.0 * tol) {
                return Ok(z1);
            }
            f1 = at(r, z1)?;
            last = step.norm();
        }
        if last < 1e-6 * (1.0 + z1.norm()) {
            return Ok(z1);
        }
        Err(Error::NoConvergence("root tracking".into()))
    };
    let track = |r: f64, a: C, b: C, width: f64| -> (Result<C>, Result<C>) {
        rayon::join(|| newton(r, a, width), || newton(r, b, width))
    };
    let w0 = dir.norm() * r.sqrt();
    let (a, b) = track(r, nu0 + dir * r.sqrt(), nu0 - dir * r.sqrt(), w0);
    let mut pair = [a?, b?];
    if (pair[0] - pair[1]).norm() < 1e-3 * dir.norm() * r.sqrt() {
        return Err(Error::NotPinched("roots did not split".into()));
    }
    let mut prev = pair;
    let mut r_prev = 0.0;
    let mut dr = r;
    while r < r_end {
        let step = dr.min(r_end - r);
        let rn = r + step;
        let sep = (pair[0] - pair[1]).norm();
        let mut next = pair;
        let mut ok = true;
        // linear predictor in r
        let pred = [0, 1].map(|j| pair[j] + (pair[j] - prev[j]) * (step / (r - r_prev)));
        let (a, b) = track(rn, pred[0], pred[1], sep);
        for (j, z) in [a, b].into_iter().enumerate() {
            match z {
                Ok(z) if (z - pred[j]).norm() < 0.25 * sep => next[j] = z,
                _ => ok = false,
            }
        }
        if ok && (next[0] - next[1]).norm() > 0.1 * sep {
            prev = pair;
            r_prev = r;
            pair = next;
            r = rn;
            dr = step * 1.5;
        } else {
            dr = step * 0.5;
            if dr < 1e-10 {
                return Err(Error::NotPinched("lost the colliding roots".into()));
            }
        }
    }
    Ok((pair[0].re * pair[1].re < 0.0, pair[0], pair[1]))
}

fn finish(bg: &Background, nu: C, omega: f64, s: f64, residual: f64, doubled: bool) -> Result<CoarseningRoot> {
    if !(s > 0.0 && nu.re < 0.0) {
        return Err(Error::NoConvergence(format!("double root with s = {s}, nu = {nu} does not describe a front")));
    }
    let mut root = CoarseningRoot { nu, omega, s, doubled, pinched: false, residual };
    let (pinched, a, b) = bloch_pinch_check(bg, &root, PINCH_R_END)?;
    if !pinched {
        return Err(Error::NotPinched(format!("branches end at {a} and {b}")));
    }
    root.pinched = true;
    Ok(root)
}

/// Refines a double root from `seed`. A seed with `doubled` set is solved
/// on the symmetric line. An unpinned solve that lands on the line is
/// re-solved there and flagged as doubled.
pub fn coarsening_double_root(bg: &Background, seed: &CoarseningRoot) -> Result<CoarseningRoot> {
    let k = bg.k_p();
    if seed.doubled {
        let (x, res) = newton_pinned(bg, Vector2::new(seed.nu.re, seed.s))?;
        return finish(bg, C::new(x[0], 0.5 * k), 0.5 * k * x[1], x[1], res, true);
    }
    let (x, res) = newton_full(bg, Vector4::new(seed.nu.re, seed.nu.im, seed.omega, seed.s))?;
    let (nu, omega) = canonical(bg, C::new(x[0], x[1]), x[2], x[3]);
    let s = x[3];
    if line_distance(bg, nu, omega, s) < DOUBLING_TOL {
        let pinned = CoarseningRoot { nu, omega, s, doubled: true, pinched: false, residual: res };
        return coarsening_double_root(bg, &pinned);
    }
    finish(bg, nu, omega, s, res, false)
}

/// Double root of the homogeneous state in the Bloch frame of period L:
/// (s_lin, omega_lin, nu_lin) reduced by the Floquet shift.
pub fn trivial_root(m: f64, period: f64) -> Result<CoarseningRoot> {
    let p = Parameters::from_mass(m);
    let r = spreading_speed(p.alpha)?;
    let bg = Background::trivial(m, period);
    let (nu, omega) = canonical(&bg, r.nu, r.omega, r.s);
    Ok(CoarseningRoot { nu, omega, s: r.s, doubled: false, pinched: r.pinched, residual: r.residual })
}

/// Amplitude homotopy u = m + tau (u_p - m) from the homogeneous double
/// root to the pattern's double root.
pub fn homotopy_root(p: &PeriodicPattern) -> Result<CoarseningRoot> {
    let bg = Background::from_pattern(p);
    let mut root = trivial_root(p.m, p.period)?;
    let mut tau = 0.0f64;
    let mut dtau = 0.1f64;
    while tau < 1.0 {
        let next = (tau + dtau).min(1.0);
        match coarsening_double_root(&bg.with_homotopy(next), &root) {
            Ok(r) if (r.s - root.s).abs() < 0.2 * root.s => {
                root = r;
                tau = next;
                dtau = (dtau * 1.5).min(0.2);
            }
            _ => {
                dtau *= 0.5;
                if dtau < 1e-4 {
                    return Err(Error::NoConvergence(format!("amplitude homotopy stalled at tau = {tau}")));
                }
            }
        }
    }
    Ok(root)
}

/// The wake pattern of the primary front: period 2 pi / k_lin(m).
pub fn wake_pattern(m: f64) -> Result<PeriodicPattern> {
    let alpha = Parameters::from_mass(m).alpha;
    let k_lin = spreading_speed(alpha)?.k_lin;
    find_equilibrium(2.0 * PI / k_lin, m, 1, BranchSelect::LargestAmplitude)
}

pub fn prediction(p: &PeriodicPattern, root: &CoarseningRoot) -> CoarseningPrediction {
    let alpha = Parameters::from_mass(p.m).alpha;
    let k = p.k_p;
    let (w1, w2) = (root.omega, k * root.s - root.omega);
    CoarseningPrediction {
        m: p.m,
        k_p: k,
        s_coars: root.s,
        omega_coars: root.omega,
        nu_coars: root.nu,
        ratio: k * root.s / root.omega,
        delta_k1: k * root.s / w1,
        delta_k2: k * root.s / w2,
        doubled: root.doubled,
        s_lin: closed_form(alpha).s,
    }
}

/// Rescales a root at mass m0 by the homogeneous scaling laws to seed
/// the solve at m1.
fn rescale(root: &CoarseningRoot, m0: f64, m1: f64) -> CoarseningRoot {
    let a0 = 1.0 - 3.0 * m0 * m0;
    let a1 = 1.0 - 3.0 * m1 * m1;
    let r = a1 / a0;
    CoarseningRoot { nu: root.nu * r.sqrt(), omega: root.omega * r * r, s: root.s * r.powf(1.5), ..*root }
}

/// Continues the coarsening double root along the wake-pattern family for
/// increasing |m| on `masses`. The first point is reached by amplitude
/// homotopy.
pub fn coarsening_curve(masses: &[f64]) -> Result<CoarseningCurve> {
    coarsening_curve_with(masses, |_| {})
}

/// As [`coarsening_curve`], reporting each point as it is computed.
pub fn coarsening_curve_with<F>(masses: &[f64], mut on_point: F) -> Result<CoarseningCurve>
where
    F: FnMut(&CoarseningPrediction),
{
    if masses.is_empty() {
        return Err(Error::InvalidInput("empty mass range".into()));
    }
    let mut points: Vec<CoarseningPrediction> = Vec::new();
    let mut dist: Vec<f64> = Vec::new();
    let mut pat = wake_pattern(masses[0])?;
    let mut root = homotopy_root(&pat)?;
    for (i, &m) in masses.iter().enumerate() {
        if i > 0 {
            let alpha = Parameters::from_mass(m).alpha;
            let l = 2.0 * PI / spreading_speed(alpha)?.k_lin;
            pat = find_equilibrium_near(l, m, 1, &pat).or_else(|_| wake_pattern(m))?;
            let seed = rescale(&root, masses[i - 1], m);
            let bg = Background::from_pattern(&pat);
            root = match coarsening_double_root(&bg, &seed) {
                Ok(r) => r,
                // near the collision the unpinned problem degenerates
                Err(_) if !seed.doubled => coarsening_double_root(&bg, &CoarseningRoot { doubled: true, ..seed })?,
                Err(e) => return Err(e),
            };
        }
        let bg = Background::from_pattern(&pat);
        dist.push(line_distance(&bg, root.nu, root.omega, root.s));
        points.push(prediction(&pat, &root));
        on_point(points.last().unwrap());
    }
    let doubling_m = doubling_onset(&points, &dist);
    let crossover_m = points.windows(2).find_map(|w| {
        let (a, b) = (w[0].s_coars - w[0].s_lin, w[1].s_coars - w[1].s_lin);
        (a < 0.0 && b >= 0.0).then(|| w[0].m + (w[1].m - w[0].m) * a / (a - b))
    });
    Ok(CoarseningCurve { points, doubling_m, crossover_m })
}

/// Onset between the last unpinned and first doubled point. The pair
/// separation behaves like sqrt(m* - m) near a symmetric collision, so the
/// squared distances of the last two unpinned points are extrapolated.
fn doubling_onset(points: &[CoarseningPrediction], dist: &[f64]) -> Option<f64> {
    let first = points.iter().position(|p| p.doubled)?;
    if first == 0 {
        return None;
    }
    let (ma, mb) = (points[first - 1].m, points[first].m);
    if first >= 2 {
        let (m1, m2) = (points[first - 2].m, points[first - 1].m);
        let (d1, d2) = (dist[first - 2].powi(2), dist[first - 1].powi(2));
        if d1 > d2 {
            let est = m2 + d2 * (m2 - m1) / (d1 - d2);
            return Some(est.clamp(ma, mb));
        }
    }
    Some(0.5 * (ma + mb))
}

/// Columns m, s_coars, s_lin, delta_k1, delta_k2, ratio, doubled.
pub fn write_curve_csv(curve: &CoarseningCurve, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["m", "s_coars", "s_lin", "delta_k1", "delta_k2", "ratio", "doubled"])?;
    for p in &curve.points {
        w.write_record([
            p.m.to_string(),
            p.s_coars.to_string(),
            p.s_lin.to_string(),
            p.delta_k1.to_string(),
            p.delta_k2.to_string(),
            p.ratio.to_string(),
            p.doubled.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homotopy_start_is_the_homogeneous_root() {
        let m = 0.2;
        let alpha = 1.0 - 3.0 * m * m;
        let lin = spreading_speed(alpha).unwrap();
        let period = 2.0 * PI / lin.k_lin;
        let bg = Background::trivial(m, period);
        let seed = trivial_root(m, period).unwrap();
        let perturbed = CoarseningRoot { s: seed.s * 1.01, nu: seed.nu + 0.01, ..seed };
        let r = coarsening_double_root(&bg, &perturbed).unwrap();
        assert!((r.s - lin.s).abs() < 1e-7 * lin.s, "{} vs {}", r.s, lin.s);
        assert!(r.omega.abs() < 1e-7);
        assert!(r.pinched);
    }
}
