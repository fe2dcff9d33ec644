//! Pseudo-arclength continuation of j-modal equilibria in the period L.
//!
//! Unknowns are (u0, mu, L / L_ref) with constraints j T(u0, mu) = L and
//! mean(u0, mu) = m. Folds are sign changes of the L component of the
//! tangent.

use super::{orbit_jacobian, shoot_orbit, topology, PeriodicPattern};
use crate::error::{Error, Result};
use crate::params::Parameters;
use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy)]
pub struct ContinuationSettings {
    /// Stop once L exceeds this.
    pub l_stop: f64,
    pub h0: f64,
    pub h_max: f64,
    pub max_points: usize,
    /// Compute the Morse index at every point.
    pub with_morse: bool,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        Self { l_stop: 60.0, h0: 0.01, h_max: 0.05, max_points: 2000, with_morse: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchPoint {
    pub l: f64,
    pub u0: f64,
    pub mu: f64,
    pub amplitude: f64,
    pub n_unstable: Option<usize>,
    pub n_zero: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    pub m: f64,
    pub j: usize,
    pub points: Vec<BranchPoint>,
    /// Indices i such that a fold lies between points i and i + 1.
    pub folds: Vec<usize>,
    /// Why continuation ended before `l_stop`, if it did.
    #[serde(default)]
    pub stopped_early: Option<String>,
}

impl Branch {
    /// Smallest L reached on the branch.
    pub fn l_fold_min(&self) -> f64 {
        self.points.iter().map(|p| p.l).fold(f64::INFINITY, f64::min)
    }
}

struct State {
    x: Vector3<f64>,
    l_ref: f64,
    m: f64,
    j: usize,
}

impl State {
    fn g(&self, x: &Vector3<f64>) -> Result<Vector2<f64>> {
        let o = shoot_orbit(x[1], x[0])?;
        Ok(Vector2::new((self.j as f64 * o.period - x[2] * self.l_ref) / self.l_ref, o.mass - self.m))
    }

    fn jac(&self, x: &Vector3<f64>) -> Result<nalgebra::Matrix2x3<f64>> {
        let j2 = orbit_jacobian(x[0], x[1], self.j)?;
        Ok(nalgebra::Matrix2x3::new(
            j2[(0, 0)] / self.l_ref,
            j2[(0, 1)] / self.l_ref,
            -1.0,
            j2[(1, 0)],
            j2[(1, 1)],
            0.0,
        ))
    }
}

fn null_vector(j: &nalgebra::Matrix2x3<f64>) -> Vector3<f64> {
    let a = j.row(0).transpose();
    let b = j.row(1).transpose();
    a.cross(&b).normalize()
}

/// Point with max u0 = center + delta and mean m, found by 1D Newton in mu.
fn small_amplitude_point(m: f64, j: usize, delta: f64, l_ref: f64) -> Result<Vector3<f64>> {
    let mut mu = m - m * m * m;
    for _ in 0..50 {
        let c = topology(mu)?.center;
        let f = |mu: f64| -> Result<f64> {
            let c = topology(mu)?.center;
            Ok(shoot_orbit(mu, c + delta)?.mass - m)
        };
        let r = f(mu)?;
        if r.abs() < 1e-13 {
            let o = shoot_orbit(mu, c + delta)?;
            return Ok(Vector3::new(o.u0, mu, j as f64 * o.period / l_ref));
        }
        let h = 1e-7;
        let d = (f(mu + h)? - f(mu - h)?) / (2.0 * h);
        mu -= r / d;
    }
    Err(Error::NoConvergence(format!("branch start near bifurcation for m = {m}")))
}

fn point(st: &State, x: &Vector3<f64>, with_morse: bool) -> Result<BranchPoint> {
    let o = shoot_orbit(x[1], x[0])?;
    let (mut n_unstable, mut n_zero) = (None, None);
    if with_morse {
        // counts stay unset where refinement disagrees, next to bifurcations
        match PeriodicPattern::from_orbit(&o, st.m, st.j)?.with_morse() {
            Ok(p) => {
                let mi = p.morse.expect("set by with_morse");
                n_unstable = Some(mi.n_unstable);
                n_zero = Some(mi.n_zero);
            }
            Err(Error::Unresolved(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(BranchPoint { l: x[2] * st.l_ref, u0: x[0], mu: x[1], amplitude: o.amplitude(), n_unstable, n_zero })
}

/// Continues the j-modal branch from its bifurcation at L = j L_min until
/// L exceeds `l_stop` or the orbit approaches the separatrix.
pub fn continue_branch(m: f64, j: usize, settings: &ContinuationSettings) -> Result<Branch> {
    let p = Parameters::from_mass(m);
    if !p.is_spinodal() {
        return Err(Error::NoSolution(format!("m = {m} is outside the spinodal regime")));
    }
    if j == 0 {
        return Err(Error::InvalidInput("j must be positive".into()));
    }
    let l_ref = j as f64 * p.l_min;
    let x0 = small_amplitude_point(m, j, 1e-3, l_ref)?;
    let x1 = small_amplitude_point(m, j, 2e-3, l_ref)?;
    let mut st = State { x: x0, l_ref, m, j };
    let mut tangent = null_vector(&st.jac(&st.x)?);
    if tangent.dot(&(x1 - x0)) < 0.0 {
        tangent = -tangent;
    }
    let mut points = vec![point(&st, &st.x, settings.with_morse)?];
    let mut folds = Vec::new();
    let mut h = settings.h0;
    let mut stopped_early = Some(format!("point limit {} reached", settings.max_points));
    while points.len() < settings.max_points {
        let pred = st.x + tangent * h;
        let mut x = pred;
        let mut ok = false;
        for _ in 0..12 {
            let (g, jac) = match (st.g(&x), st.jac(&x)) {
                (Ok(g), Ok(jac)) => (g, jac),
                _ => break,
            };
            let arc = tangent.dot(&(x - pred));
            if g.norm() < 1e-11 && arc.abs() < 1e-11 {
                ok = true;
                break;
            }
            let a = Matrix3::from_rows(&[jac.row(0).into_owned(), jac.row(1).into_owned(), tangent.transpose()]);
            let Some(dx) = a.lu().solve(&Vector3::new(-g[0], -g[1], -arc)) else { break };
            x += dx;
            if dx.norm() < 1e-13 {
                ok = st.g(&x).map(|g| g.norm() < 1e-9).unwrap_or(false);
                break;
            }
        }
        if !ok {
            h *= 0.5;
            if h < 1e-7 {
                stopped_early = Some(format!("corrector failed below step 1e-7 at L = {:.6}", st.x[2] * st.l_ref));
                break;
            }
            continue;
        }
        let Ok(jac) = st.jac(&x) else {
            stopped_early = Some(format!("orbit Jacobian failed at L = {:.6}", x[2] * st.l_ref));
            break;
        };
        let mut t_new = null_vector(&jac);
        if t_new.dot(&tangent) < 0.0 {
            t_new = -t_new;
        }
        if t_new[2] * tangent[2] < 0.0 {
            folds.push(points.len() - 1);
        }
        tangent = t_new;
        st.x = x;
        let pt = match point(&st, &x, settings.with_morse) {
            Ok(pt) => pt,
            Err(e) => {
                stopped_early = Some(format!("{e} at L = {:.6}", x[2] * st.l_ref));
                break;
            }
        };
        let done = pt.l > settings.l_stop;
        points.push(pt);
        if done {
            stopped_early = None;
            break;
        }
        h = (h * 1.3).min(settings.h_max);
    }
    Ok(Branch { m, j, points, folds, stopped_early })
}

/// Writes columns L, amplitude, mu, n_unstable, n_zero.
pub fn write_branch_csv(branch: &Branch, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["L", "amplitude", "mu", "n_unstable", "n_zero"])?;
    for p in &branch.points {
        let opt = |v: Option<usize>| v.map(|n| n.to_string()).unwrap_or_default();
        w.write_record([
            p.l.to_string(),
            p.amplitude.to_string(),
            p.mu.to_string(),
            opt(p.n_unstable),
            opt(p.n_zero),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn supercritical_branch_has_no_fold() {
        let p = Parameters::from_mass(0.2);
        let s = ContinuationSettings { l_stop: 1.5 * p.l_min, ..Default::default() };
        let b = continue_branch(0.2, 1, &s).unwrap();
        assert!(b.folds.is_empty());
        assert!(b.points.first().unwrap().l > p.l_min * 0.999);
        assert!(b.points.windows(2).all(|w| w[1].l > w[0].l));
    }

    #[test]
    fn subcritical_branch_folds_below_l_min() {
        let p = Parameters::from_mass(0.5);
        let s = ContinuationSettings { l_stop: 1.2 * p.l_min, ..Default::default() };
        let b = continue_branch(0.5, 1, &s).unwrap();
        assert_eq!(b.folds.len(), 1);
        assert!(b.l_fold_min() < p.l_min);
        assert!(b.stopped_early.is_none());
    }
}
