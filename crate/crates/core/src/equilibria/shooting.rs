//! Phase-plane shooting for u'' = mu - u + u^3.
//!
//! Periodic equilibria are closed orbits of the planar Hamiltonian system
//! with H = v^2/2 + u^2/2 - u^4/4 - mu u. An orbit is started at a turning
//! point (u0, 0) and integrated until it returns to the section v = 0 with
//! the same orientation.

use crate::error::{Error, Result};
use crate::ode::{integrate_outputs, integrate_to_section, OdeSystem, Section, Tolerances};

/// (u, v, running integral of u)
pub(crate) struct PatternOde {
    pub mu: f64,
}

impl OdeSystem for PatternOde {
    fn dim(&self) -> usize {
        3
    }
    fn rhs(&self, _x: f64, y: &[f64], dy: &mut [f64]) {
        let u = y[0];
        dy[0] = y[1];
        dy[1] = self.mu - u + u * u * u;
        dy[2] = u;
    }
}

pub fn hamiltonian(u: f64, v: f64, mu: f64) -> f64 {
    0.5 * v * v + potential(u, mu)
}

fn potential(u: f64, mu: f64) -> f64 {
    0.5 * u * u - 0.25 * u.powi(4) - mu * u
}

/// Real roots of u - u^3 = mu in increasing order.
pub fn phase_plane_equilibria(mu: f64) -> Vec<f64> {
    // u^3 - u + mu = 0; trigonometric form when three real roots
    let crit = 2.0 / (3.0 * 3f64.sqrt());
    if mu.abs() < crit {
        let r = 2.0 / 3f64.sqrt();
        let phi = ((3.0 * 3f64.sqrt() * (-mu)) / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
        let mut roots: Vec<f64> = (0..3)
            .map(|k| r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
            .collect();
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        roots
    } else {
        // single real root
        let f = |u: f64| u * u * u - u + mu;
        let mut u = -mu.signum() * (1.0 + mu.abs()).cbrt().max(1.0);
        for _ in 0..60 {
            let du = f(u) / (3.0 * u * u - 1.0);
            u -= du;
            if du.abs() < 1e-15 {
                break;
            }
        }
        vec![u]
    }
}

/// The center of the phase plane and the H-level of the bounding separatrix.
#[derive(Debug, Clone, Copy)]
pub struct OrbitTopology {
    pub center: f64,
    pub saddle_left: f64,
    pub saddle_right: f64,
    /// Orbits with H below this and inside the saddles are closed.
    pub separatrix_level: f64,
}

pub fn topology(mu: f64) -> Result<OrbitTopology> {
    let eq = phase_plane_equilibria(mu);
    if eq.len() != 3 {
        return Err(Error::NotClosed(format!("mu = {mu} has no center equilibrium")));
    }
    let level = potential(eq[0], mu).min(potential(eq[2], mu));
    Ok(OrbitTopology { center: eq[1], saddle_left: eq[0], saddle_right: eq[2], separatrix_level: level })
}

/// Checks that (u0, 0) lies on a closed orbit.
pub fn check_closed(mu: f64, u0: f64) -> Result<OrbitTopology> {
    let t = topology(mu)?;
    if (u0 - t.center).abs() <= 1e-12 * (1.0 + t.center.abs()) {
        return Err(Error::Degenerate);
    }
    if !(u0 > t.saddle_left && u0 < t.saddle_right) || potential(u0, mu) >= t.separatrix_level {
        return Err(Error::NotClosed(format!("u0 = {u0} outside the bounded component for mu = {mu}")));
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy)]
pub struct Orbit {
    pub mu: f64,
    pub u0: f64,
    pub period: f64,
    /// Mean of u over one period.
    pub mass: f64,
    /// The opposite turning point.
    pub u_turn: f64,
}

impl Orbit {
    pub fn amplitude(&self) -> f64 {
        0.5 * (self.u0 - self.u_turn).abs()
    }
}

pub(crate) fn tol() -> Tolerances {
    Tolerances { rtol: 1e-12, atol: 1e-14, ..Default::default() }
}

/// Period, mean and opposite turning point of the orbit through (u0, 0).
pub fn shoot_orbit(mu: f64, u0: f64) -> Result<Orbit> {
    check_closed(mu, u0)?;
    let sys = PatternOde { mu };
    let hits = integrate_to_section(&sys, 0.0, &[u0, 0.0, 0.0], 1e5, Section { component: 1, direction: 0 }, 2, tol())?;
    let full = &hits[1];
    Ok(Orbit { mu, u0, period: full.t, mass: full.y[2] / full.t, u_turn: hits[0].y[0] })
}

/// (x, u, u') at `n` uniform points over one period of the orbit.
pub fn orbit_samples(orbit: &Orbit, n: usize) -> Result<Vec<[f64; 3]>> {
    let sys = PatternOde { mu: orbit.mu };
    let xs: Vec<f64> = (1..n).map(|i| orbit.period * i as f64 / n as f64).collect();
    let ys = integrate_outputs(&sys, 0.0, &[orbit.u0, 0.0, 0.0], &xs, tol())?;
    let mut out = Vec::with_capacity(n);
    out.push([0.0, orbit.u0, 0.0]);
    for (x, y) in xs.iter().zip(ys) {
        out.push([*x, y[0], y[1]]);
    }
    Ok(out)
}
