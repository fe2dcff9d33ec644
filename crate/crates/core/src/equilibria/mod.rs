//! L-periodic steady states of the Cahn-Hilliard equation at fixed mass.
//!
//! Steady states solve u'' + u - u^3 = mu. A pattern with j maxima per
//! period L is the closed phase-plane orbit of period L/j and mean m,
//! repeated j times.

mod branch;
mod morse;
mod shooting;

pub use branch::{continue_branch, write_branch_csv, Branch, BranchPoint, ContinuationSettings};
pub use morse::{default_modes, linearization_spectrum, temporal_morse_index, MorseIndex};
pub(crate) use morse::cosine_coefficients;
pub use shooting::{
    check_closed, hamiltonian, orbit_samples, phase_plane_equilibria, shoot_orbit, topology, Orbit, OrbitTopology,
};

use crate::error::{Error, Result};
use crate::params::Parameters;
use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicPattern {
    /// 2 pi / period
    pub k_p: f64,
    pub period: f64,
    pub m: f64,
    /// Chemical potential: u'' + u - u^3 = mu.
    pub mu: f64,
    /// Number of maxima per period.
    pub j: usize,
    /// Maximum of u, attained at x = 0.
    pub u0: f64,
    /// (x, u, u') on a uniform grid over one period.
    pub samples: Vec<[f64; 3]>,
    pub amplitude: f64,
    pub morse: Option<MorseIndex>,
}

/// Which solution to return when several exist at the same (L, m, j).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchSelect {
    LargestAmplitude,
    SmallestAmplitude,
}

pub(crate) fn sample_count(period: f64) -> usize {
    (18 * default_modes(period)).next_power_of_two().max(256)
}

impl PeriodicPattern {
    /// Builds the pattern with `j` copies of `orbit` per period.
    pub fn from_orbit(orbit: &Orbit, m: f64, j: usize) -> Result<Self> {
        let period = orbit.period * j as f64;
        let n = sample_count(period);
        let per_cell = n / j.next_power_of_two().max(1);
        let cell = orbit_samples(orbit, per_cell.max(16))?;
        let total = cell.len() * j;
        let mut samples = Vec::with_capacity(total);
        for c in 0..j {
            for s in &cell {
                samples.push([s[0] + c as f64 * orbit.period, s[1], s[2]]);
            }
        }
        Ok(Self {
            k_p: 2.0 * PI / period,
            period,
            m,
            mu: orbit.mu,
            j,
            u0: orbit.u0,
            samples,
            amplitude: orbit.amplitude(),
            morse: None,
        })
    }

    /// The homogeneous state u = m viewed as an L-periodic pattern.
    pub fn trivial(period: f64, m: f64) -> Self {
        let n = sample_count(period);
        let samples = (0..n).map(|i| [period * i as f64 / n as f64, m, 0.0]).collect();
        Self {
            k_p: 2.0 * PI / period,
            period,
            m,
            mu: m - m * m * m,
            j: 0,
            u0: m,
            samples,
            amplitude: 0.0,
            morse: None,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.amplitude == 0.0
    }

    pub fn with_morse(mut self) -> Result<Self> {
        self.morse = Some(temporal_morse_index(&self, default_modes(self.period))?);
        Ok(self)
    }

    /// Trapezoidal (= rectangle, periodic) mean of the samples.
    pub fn sample_mass(&self) -> f64 {
        self.samples.iter().map(|s| s[1]).sum::<f64>() / self.samples.len() as f64
    }

    /// max |u'' + u - u^3 - mu| with u'' obtained by spectral
    /// differentiation of the sampled u'.
    pub fn residual(&self) -> f64 {
        let n = self.samples.len();
        let v: Vec<f64> = self.samples.iter().map(|s| s[2]).collect();
        let dv = spectral_derivative(&v, self.period);
        (0..n)
            .map(|i| {
                let u = self.samples[i][1];
                (dv[i] + u - u * u * u - self.mu).abs()
            })
            .fold(0.0, f64::max)
    }

    /// max |u(x) - u(L - x)| over the grid.
    pub fn evenness_defect(&self) -> f64 {
        let n = self.samples.len();
        (1..n).map(|i| (self.samples[i][1] - self.samples[n - i][1]).abs()).fold(0.0, f64::max)
    }

    /// Pattern value and derivatives at arbitrary x by trigonometric
    /// interpolation: returns (u, u_x, u_xx).
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.samples.len();
        let u: Vec<f64> = self.samples.iter().map(|s| s[1]).collect();
        let c = crate::equilibria::morse::cosine_coefficients(&u, n / 2 - 1);
        let k0 = 2.0 * PI / self.period;
        let mut val = c[0];
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for (k, ck) in c.iter().enumerate().skip(1) {
            let q = k0 * k as f64;
            let (sn, cs) = (q * x).sin_cos();
            val += 2.0 * ck * cs;
            d1 -= 2.0 * ck * q * sn;
            d2 -= 2.0 * ck * q * q * cs;
        }
        (val, d1, d2)
    }
}

fn spectral_derivative(f: &[f64], period: f64) -> Vec<f64> {
    let n = f.len();
    let k0 = 2.0 * PI / period;
    let mut a = vec![0.0; n / 2 + 1];
    let mut b = vec![0.0; n / 2 + 1];
    for k in 1..n / 2 {
        let w = 2.0 * PI * k as f64 / n as f64;
        for (i, v) in f.iter().enumerate() {
            let (s, c) = (w * i as f64).sin_cos();
            a[k] += v * c;
            b[k] += v * s;
        }
    }
    (0..n)
        .map(|i| {
            let mut d = 0.0;
            for k in 1..n / 2 {
                let q = k0 * k as f64;
                let w = 2.0 * PI * (k * i) as f64 / n as f64;
                let (s, c) = w.sin_cos();
                // f ~ (2/n) sum a_k cos + b_k sin
                d += 2.0 / n as f64 * q * (-a[k] * s + b[k] * c);
            }
            d
        })
        .collect()
}

/// G(u0, mu) = (j * period - L, mass - m) with finite-difference Jacobian.
fn constraint(u0: f64, mu: f64, l: f64, m: f64, j: usize) -> Result<(Vector2<f64>, Orbit)> {
    let o = shoot_orbit(mu, u0)?;
    Ok((Vector2::new(j as f64 * o.period - l, o.mass - m), o))
}

pub(crate) fn orbit_jacobian(u0: f64, mu: f64, j: usize) -> Result<Matrix2<f64>> {
    let h = 1e-6;
    let f = |u0: f64, mu: f64| -> Result<Vector2<f64>> {
        let o = shoot_orbit(mu, u0)?;
        Ok(Vector2::new(j as f64 * o.period, o.mass))
    };
    let du = (f(u0 + h, mu)? - f(u0 - h, mu)?) / (2.0 * h);
    let dm = (f(u0, mu + h)? - f(u0, mu - h)?) / (2.0 * h);
    Ok(Matrix2::from_columns(&[du, dm]))
}

/// Newton on (u0, mu) for period L/j and mean m, from a nearby seed.
pub fn refine_equilibrium(l: f64, m: f64, j: usize, u0: f64, mu: f64) -> Result<Orbit> {
    let (mut u0, mut mu) = (u0, mu);
    for _ in 0..40 {
        let (g, o) = constraint(u0, mu, l, m, j)?;
        if g[0].abs() < 1e-10 * l && g[1].abs() < 1e-11 {
            return Ok(o);
        }
        let jac = orbit_jacobian(u0, mu, j)?;
        let dx = jac.lu().solve(&(-g)).ok_or_else(|| Error::NoConvergence("singular orbit Jacobian".into()))?;
        let mut t = 1.0;
        loop {
            let (nu0, nmu) = (u0 + t * dx[0], mu + t * dx[1]);
            match constraint(nu0, nmu, l, m, j) {
                Ok((gn, _)) if gn.norm() < g.norm() || t < 1e-3 => {
                    u0 = nu0;
                    mu = nmu;
                    break;
                }
                _ if t < 1e-3 => return Err(Error::NoConvergence("line search failed".into())),
                _ => t *= 0.5,
            }
        }
    }
    Err(Error::NoConvergence(format!("equilibrium Newton at L = {l}, m = {m}")))
}

/// All j-modal equilibria of period L and mass m found along the branch
/// bifurcating at L = j L_min, sorted by increasing amplitude.
pub fn find_equilibria(l: f64, m: f64, j: usize) -> Result<Vec<PeriodicPattern>> {
    if j == 0 {
        return Err(Error::InvalidInput("j must be positive".into()));
    }
    let p = Parameters::from_mass(m);
    if !p.is_spinodal() {
        return Err(Error::NoSolution(format!("m = {m} is outside the spinodal regime")));
    }
    let settings = ContinuationSettings { l_stop: 1.02 * l.max(j as f64 * p.l_min), ..Default::default() };
    let branch = continue_branch(m, j, &settings)?;
    let pts = &branch.points;
    let mut found: Vec<PeriodicPattern> = Vec::new();
    for w in pts.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if (a.l - l) * (b.l - l) > 0.0 {
            continue;
        }
        let t = if b.l != a.l { (l - a.l) / (b.l - a.l) } else { 0.5 };
        let u0 = a.u0 + t * (b.u0 - a.u0);
        let mu = a.mu + t * (b.mu - a.mu);
        let orbit = refine_equilibrium(l, m, j, u0, mu)?;
        if found.iter().any(|f| (f.u0 - orbit.u0).abs() < 1e-7) {
            continue;
        }
        found.push(PeriodicPattern::from_orbit(&orbit, m, j)?);
    }
    if found.is_empty() {
        let reached = pts.iter().map(|p| p.l).fold(f64::NEG_INFINITY, f64::max);
        if let (Some(why), true) = (&branch.stopped_early, l > reached) {
            return Err(Error::StepFailure(format!("branch ends at L = {reached:.6} before L = {l}: {why}")));
        }
        return Err(Error::NoSolution(format!("no {j}-modal equilibrium with L = {l}, m = {m}")));
    }
    found.sort_by(|a, b| a.amplitude.partial_cmp(&b.amplitude).unwrap());
    Ok(found)
}

/// One equilibrium of period L, mass m, j maxima per period, phase
/// normalized with its maximum at x = 0 and Morse data attached.
pub fn find_equilibrium(l: f64, m: f64, j: usize, select: BranchSelect) -> Result<PeriodicPattern> {
    let mut all = find_equilibria(l, m, j)?;
    let p = match select {
        BranchSelect::LargestAmplitude => all.pop().unwrap(),
        BranchSelect::SmallestAmplitude => all.swap_remove(0),
    };
    p.with_morse()
}

/// Equilibrium near a previously computed one, e.g. while stepping in m.
pub fn find_equilibrium_near(l: f64, m: f64, j: usize, seed: &PeriodicPattern) -> Result<PeriodicPattern> {
    let orbit = refine_equilibrium(l, m, j, seed.u0, seed.mu)?;
    PeriodicPattern::from_orbit(&orbit, m, j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_solution_below_supercritical_bifurcation() {
        let p = Parameters::from_mass(0.2);
        let e = find_equilibria(0.95 * p.l_min, 0.2, 1);
        assert!(matches!(e, Err(Error::NoSolution(_))), "{e:?}");
    }

    #[test]
    fn supercritical_pattern_properties() {
        let p = Parameters::from_mass(0.2);
        let pat = find_equilibrium(1.1 * p.l_min, 0.2, 1, BranchSelect::LargestAmplitude).unwrap();
        assert!((pat.period - 1.1 * p.l_min).abs() < 1e-8);
        assert!((pat.sample_mass() - 0.2).abs() < 1e-8, "{}", pat.sample_mass());
        assert!(pat.residual() < 1e-8, "{}", pat.residual());
        assert!(pat.evenness_defect() < 1e-8);
        assert_eq!(pat.morse.unwrap().n_unstable, 0);
        assert_eq!(pat.morse.unwrap().n_zero, 1);
        // amplitude shrinks toward the bifurcation point
        let near = find_equilibrium(1.01 * p.l_min, 0.2, 1, BranchSelect::LargestAmplitude).unwrap();
        assert!(near.amplitude < pat.amplitude && near.amplitude < 0.2);
    }

    #[test]
    fn subcritical_window_has_two_solutions() {
        let p = Parameters::from_mass(0.5);
        let all = find_equilibria(0.99 * p.l_min, 0.5, 1).unwrap();
        assert_eq!(all.len(), 2);
        let small = all[0].clone().with_morse().unwrap();
        let large = all[1].clone().with_morse().unwrap();
        assert_eq!(small.morse.unwrap().n_unstable, 1);
        assert_eq!(large.morse.unwrap().n_unstable, 0);
    }

    #[test]
    fn two_modal_pattern_is_replicated_one_modal() {
        let p = Parameters::from_mass(0.2);
        let l = 2.4 * p.l_min;
        let two = find_equilibrium(l, 0.2, 2, BranchSelect::LargestAmplitude).unwrap();
        let one = find_equilibrium(l / 2.0, 0.2, 1, BranchSelect::LargestAmplitude).unwrap();
        assert!((two.mu - one.mu).abs() < 1e-9);
        for s in two.samples.iter().step_by(7) {
            let (u, _, _) = one.eval(s[0] % one.period);
            assert!((u - s[1]).abs() < 1e-8);
        }
        let mi = two.morse.unwrap();
        assert_eq!((mi.n_unstable, mi.n_zero), (2, 1));
    }

    #[test]
    fn trivial_state_morse() {
        let p = Parameters::from_mass(0.2);
        let t = PeriodicPattern::trivial(1.5 * p.l_min, 0.2).with_morse().unwrap();
        let mi = t.morse.unwrap();
        assert_eq!(mi.n_unstable, 2);
        assert_eq!(mi.n_zero, 0);
        assert_eq!(mi.n_zero_full, 1);
    }
}
