//! Galerkin truncation of the modulated traveling-wave equation.
//!
//! Modulated waves u(x - s t, omega t) solve, as an evolution in xi for
//! 2 pi-periodic functions of tau,
//!
//!   u' = v,  v' = P_n G'(u) + theta,  theta' = w,  w' = s v - omega u_tau,
//!
//! with G(u) = -u^2/2 + u^4/4 and P_n the projection onto tau-modes
//! |l| <= n. The flow has the Lyapunov function E and the first integral I,
//! with dE/dxi = -(1/s) mean(w^2) exactly for every n.

use crate::dispersion::count_unstable_spatial_roots;
use crate::equilibria::{cosine_coefficients, PeriodicPattern};
use crate::error::{Error, Result};
use crate::ode::{OdeSystem, Stepper, Tolerances};
use crate::params::Frame;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use rand::Rng;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

/// Default truncation order.
pub const DEFAULT_N: usize = 8;

/// Escape threshold on the tau-L2 norm of u.
pub const BLOWUP_CAP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    U = 0,
    V = 1,
    Theta = 2,
    W = 3,
}

/// Point of the truncated phase space. Each field stores the real
/// coefficient layout [c_0, Re c_1, Im c_1, ..., Re c_n, Im c_n]; the
/// coefficient at -l is the conjugate of the one at l.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TWState {
    pub n: usize,
    pub frame: Frame,
    pub data: Vec<f64>,
}

impl TWState {
    pub fn zeros(n: usize, frame: Frame) -> Self {
        Self { n, frame, data: vec![0.0; 4 * (2 * n + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    fn offset(&self, f: Field) -> usize {
        f as usize * (2 * self.n + 1)
    }

    pub fn field(&self, f: Field) -> &[f64] {
        let o = self.offset(f);
        &self.data[o..o + 2 * self.n + 1]
    }

    pub fn field_mut(&mut self, f: Field) -> &mut [f64] {
        let o = self.offset(f);
        let len = 2 * self.n + 1;
        &mut self.data[o..o + len]
    }

    /// Complex coefficient at mode l, |l| <= n.
    pub fn coefficient(&self, f: Field, l: i64) -> C {
        coeff(self.field(f), l)
    }

    pub fn set_coefficient(&mut self, f: Field, l: i64, z: C) {
        let c = self.field_mut(f);
        match l {
            0 => c[0] = z.re,
            l if l > 0 => {
                c[2 * l as usize - 1] = z.re;
                c[2 * l as usize] = z.im;
            }
            l => {
                c[2 * (-l) as usize - 1] = z.re;
                c[2 * (-l) as usize] = -z.im;
            }
        }
    }

    /// Homogeneous state u = m with theta = m - m^3.
    pub fn trivial(n: usize, frame: Frame, m: f64) -> Self {
        let mut st = Self::zeros(n, frame);
        st.field_mut(Field::U)[0] = m;
        st.field_mut(Field::Theta)[0] = m - m * m * m;
        st
    }
}

fn coeff(c: &[f64], l: i64) -> C {
    match l {
        0 => C::new(c[0], 0.0),
        l if l > 0 => C::new(c[2 * l as usize - 1], c[2 * l as usize]),
        l => C::new(c[2 * (-l) as usize - 1], -c[2 * (-l) as usize]),
    }
}

/// mean over tau of f g for real fields in coefficient layout.
fn mean_product(f: &[f64], g: &[f64]) -> f64 {
    let mut acc = f[0] * g[0];
    for i in 1..f.len() {
        acc += 2.0 * f[i] * g[i];
    }
    acc
}

/// tau-derivative in coefficient layout: c_l -> i l c_l.
fn d_tau(c: &[f64], out: &mut [f64]) {
    out[0] = 0.0;
    for l in 1..=(c.len() - 1) / 2 {
        let (re, im) = (c[2 * l - 1], c[2 * l]);
        out[2 * l - 1] = -(l as f64) * im;
        out[2 * l] = l as f64 * re;
    }
}

/// Transforms between the coefficient layout and a tau-grid of
/// 3 (2n + 1) points, fine enough that products up to quartic order are
/// resolved exactly on modes |l| <= n.
pub struct Galerkin {
    pub n: usize,
    pub frame: Frame,
    grid: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
}

impl std::fmt::Debug for Galerkin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Galerkin").field("n", &self.n).field("frame", &self.frame).field("grid", &self.grid).finish()
    }
}

impl Galerkin {
    pub fn new(n: usize, frame: Frame) -> Result<Self> {
        if n == 0 || n > 512 {
            return Err(Error::InvalidInput(format!("truncation order must be in 1..=512, got {n}")));
        }
        if !(frame.s > 0.0) || !frame.omega.is_finite() {
            return Err(Error::InvalidInput("the frame needs s > 0 and finite omega".into()));
        }
        let grid = 3 * (2 * n + 1);
        let mut planner = RealFftPlanner::<f64>::new();
        Ok(Self { n, frame, grid, r2c: planner.plan_fft_forward(grid), c2r: planner.plan_fft_inverse(grid) })
    }

    pub fn grid_len(&self) -> usize {
        self.grid
    }

    /// Samples at tau_j = 2 pi j / N.
    pub fn to_grid(&self, c: &[f64]) -> Vec<f64> {
        let mut spec = vec![C::new(0.0, 0.0); self.grid / 2 + 1];
        spec[0] = C::new(c[0], 0.0);
        for l in 1..=self.n {
            spec[l] = C::new(c[2 * l - 1], c[2 * l]);
        }
        let mut out = vec![0.0; self.grid];
        self.c2r.process(&mut spec, &mut out).expect("fft lengths match");
        out
    }

    /// Coefficients |l| <= n of grid samples (the projection P_n).
    pub fn from_grid(&self, g: &[f64]) -> Vec<f64> {
        let mut input = g.to_vec();
        let mut spec = self.r2c.make_output_vec();
        self.r2c.process(&mut input, &mut spec).expect("fft lengths match");
        let scale = 1.0 / self.grid as f64;
        let mut c = vec![0.0; 2 * self.n + 1];
        c[0] = spec[0].re * scale;
        for l in 1..=self.n {
            c[2 * l - 1] = spec[l].re * scale;
            c[2 * l] = spec[l].im * scale;
        }
        c
    }

    /// Coefficients of P_n(u^3).
    pub fn cubic(&self, u: &[f64]) -> Vec<f64> {
        let g: Vec<f64> = self.to_grid(u).iter().map(|x| x * x * x).collect();
        self.from_grid(&g)
    }

    /// Derivative of the truncated system.
    pub fn rhs(&self, st: &TWState) -> TWState {
        let mut out = TWState::zeros(self.n, st.frame);
        self.rhs_slice(&st.data, &mut out.data);
        out
    }

    fn rhs_slice(&self, y: &[f64], dy: &mut [f64]) {
        let len = 2 * self.n + 1;
        let (u, rest) = y.split_at(len);
        let (v, rest) = rest.split_at(len);
        let (th, w) = rest.split_at(len);
        let cube = self.cubic(u);
        let mut ut = vec![0.0; len];
        d_tau(u, &mut ut);
        let (s, om) = (self.frame.s, self.frame.omega);
        for i in 0..len {
            dy[i] = v[i];
            dy[len + i] = -u[i] + cube[i] + th[i];
            dy[2 * len + i] = w[i];
            dy[3 * len + i] = s * v[i] - om * ut[i];
        }
    }

    /// E = mean(v^2 / 2 - G(u) - k v u_tau - theta w / s).
    pub fn energy(&self, st: &TWState) -> f64 {
        let u = st.field(Field::U);
        let v = st.field(Field::V);
        let g: f64 = self.to_grid(u).iter().map(|x| -0.5 * x * x + 0.25 * x * x * x * x).sum::<f64>() / self.grid as f64;
        let mut ut = vec![0.0; u.len()];
        d_tau(u, &mut ut);
        0.5 * mean_product(v, v) - g - self.frame.k * mean_product(v, &ut)
            - mean_product(st.field(Field::Theta), st.field(Field::W)) / self.frame.s
    }

    /// I = mean(w - s u).
    pub fn first_integral(&self, st: &TWState) -> f64 {
        st.field(Field::W)[0] - self.frame.s * st.field(Field::U)[0]
    }

    /// (1/s) mean(w^2) = -dE/dxi.
    pub fn dissipation(&self, st: &TWState) -> f64 {
        let w = st.field(Field::W);
        mean_product(w, w) / self.frame.s
    }

    /// Zero exactly on relative equilibria: sqrt(mean(w^2) + mean((s v - omega u_tau)^2)).
    pub fn equilibrium_defect(&self, st: &TWState) -> f64 {
        let u = st.field(Field::U);
        let v = st.field(Field::V);
        let w = st.field(Field::W);
        let mut ut = vec![0.0; u.len()];
        d_tau(u, &mut ut);
        let r: Vec<f64> = v.iter().zip(&ut).map(|(a, b)| self.frame.s * a - self.frame.omega * b).collect();
        (mean_product(w, w) + mean_product(&r, &r)).sqrt()
    }

    /// tau-L2 norm of u.
    pub fn u_norm(&self, st: &TWState) -> f64 {
        let u = st.field(Field::U);
        mean_product(u, u).sqrt()
    }

    pub fn diagnostics(&self, st: &TWState) -> TWDiagnostics {
        TWDiagnostics { e: self.energy(st), i: self.first_integral(st), dissipation: self.dissipation(st) }
    }

    /// Jacobian of the truncated vector field by central differences.
    pub fn jacobian(&self, st: &TWState) -> DMatrix<f64> {
        let d = st.dim();
        let mut jac = DMatrix::zeros(d, d);
        let (mut fp, mut fm) = (vec![0.0; d], vec![0.0; d]);
        for j in 0..d {
            let h = 1e-6 * (1.0 + st.data[j].abs());
            let mut y = st.data.clone();
            y[j] += h;
            self.rhs_slice(&y, &mut fp);
            y[j] -= 2.0 * h;
            self.rhs_slice(&y, &mut fm);
            for i in 0..d {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        jac
    }

    /// Number of eigenvalues of the linearization with Re > tol, and the
    /// number with |Re| <= tol.
    pub fn spatial_index(&self, st: &TWState, tol: f64) -> (usize, usize) {
        let eig = self.jacobian(st).complex_eigenvalues();
        let unstable = eig.iter().filter(|z| z.re > tol).count();
        let neutral = eig.iter().filter(|z| z.re.abs() <= tol).count();
        (unstable, neutral)
    }

    /// Unstable spatial count of the homogeneous state from the dispersion
    /// relation, for cross-checks against `spatial_index`.
    pub fn predicted_trivial_index(&self, m: f64) -> Result<usize> {
        count_unstable_spatial_roots(&self.frame, 1.0 - 3.0 * m * m, self.n)
    }

    /// Relative equilibrium u(xi, tau) = U(tau + k xi) of the truncated
    /// system, where U is a 2 pi-periodic even profile with mean m solving
    /// k^2 U'' + U - P_n U^3 = const. Requires omega = k s with k = k_p of
    /// the seed pattern.
    pub fn relative_equilibrium(&self, pattern: &PeriodicPattern) -> Result<TWState> {
        let k = self.frame.k;
        if (k - pattern.k_p).abs() > 1e-9 * k {
            return Err(Error::InvalidInput(format!(
                "frame wavenumber {k} does not match the pattern wavenumber {}",
                pattern.k_p
            )));
        }
        let n = self.n;
        let u_samples: Vec<f64> = pattern.samples.iter().map(|s| s[1]).collect();
        let seed = cosine_coefficients(&u_samples, n);
        let m = pattern.m;
        // unknowns a_1..a_n (real cosine coefficients), a_0 = m
        let profile = |a: &DVector<f64>| -> Vec<f64> {
            let mut c = vec![0.0; 2 * n + 1];
            c[0] = m;
            for l in 1..=n {
                c[2 * l - 1] = a[l - 1];
            }
            c
        };
        let residual = |a: &DVector<f64>| -> DVector<f64> {
            let c = profile(a);
            let cube = self.cubic(&c);
            DVector::from_fn(n, |i, _| {
                let l = (i + 1) as f64;
                (1.0 - k * k * l * l) * c[2 * i + 1] - cube[2 * i + 1]
            })
        };
        let mut a = DVector::from_fn(n, |i, _| seed[i + 1]);
        let mut converged = false;
        for _ in 0..50 {
            let r = residual(&a);
            if r.norm() < 1e-13 {
                converged = true;
                break;
            }
            let mut jac = DMatrix::zeros(n, n);
            for j in 0..n {
                let h = 1e-7 * (1.0 + a[j].abs());
                let mut ap = a.clone();
                ap[j] += h;
                let mut am = a.clone();
                am[j] -= h;
                jac.set_column(j, &((residual(&ap) - residual(&am)) / (2.0 * h)));
            }
            let dx = jac.lu().solve(&(-&r)).ok_or(Error::Degenerate)?;
            a += &dx;
            if dx.norm() < 1e-15 {
                converged = residual(&a).norm() < 1e-10;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence("truncated pattern equation".into()));
        }
        let c = profile(&a);
        let cube = self.cubic(&c);
        let mut st = TWState::zeros(n, self.frame);
        // xi-derivatives of U(tau + k xi) are k^j times tau-derivatives
        let mut ut = vec![0.0; 2 * n + 1];
        d_tau(&c, &mut ut);
        let mut utt = vec![0.0; 2 * n + 1];
        d_tau(&ut, &mut utt);
        let theta: Vec<f64> = (0..2 * n + 1).map(|i| k * k * utt[i] + c[i] - cube[i]).collect();
        let mut tht = vec![0.0; 2 * n + 1];
        d_tau(&theta, &mut tht);
        st.field_mut(Field::U).copy_from_slice(&c);
        for i in 0..2 * n + 1 {
            st.field_mut(Field::V)[i] = k * ut[i];
            st.field_mut(Field::Theta)[i] = theta[i];
            st.field_mut(Field::W)[i] = k * tht[i];
        }
        Ok(st)
    }

    /// Rotation of a state by angle phi in tau.
    pub fn rotate(&self, st: &TWState, phi: f64) -> TWState {
        let mut out = st.clone();
        for f in [Field::U, Field::V, Field::Theta, Field::W] {
            for l in 1..=self.n as i64 {
                let z = st.coefficient(f, l) * C::from_polar(1.0, l as f64 * phi);
                out.set_coefficient(f, l, z);
            }
        }
        out
    }

    /// Smallest coefficient-space distance between `st` and the rotations
    /// of `target`.
    pub fn orbit_distance(&self, st: &TWState, target: &TWState) -> f64 {
        let dist = |phi: f64| -> f64 {
            let r = self.rotate(target, phi);
            st.data.iter().zip(&r.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
        };
        let samples = 720;
        let (mut best, mut at) = (f64::INFINITY, 0.0);
        for i in 0..samples {
            let phi = 2.0 * PI * i as f64 / samples as f64;
            let d = dist(phi);
            if d < best {
                best = d;
                at = phi;
            }
        }
        // golden-section refinement around the best sample
        let (mut a, mut b) = (at - 2.0 * PI / samples as f64, at + 2.0 * PI / samples as f64);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let (x1, x2) = (b - g * (b - a), a + g * (b - a));
            if dist(x1) < dist(x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        best.min(dist(0.5 * (a + b)))
    }

    /// Seed u = m + eps * (random combination of the unstable eigenvectors
    /// of the linearization at the homogeneous state).
    pub fn unstable_seed<R: Rng>(&self, m: f64, eps: f64, rng: &mut R) -> Result<TWState> {
        let base = TWState::trivial(self.n, self.frame, m);
        let eig = nalgebra::linalg::Schur::new(self.jacobian(&base).map(|x| C::new(x, 0.0)));
        let (q, t) = eig.unpack();
        let d = base.dim();
        let mut dir = DVector::<f64>::zeros(d);
        let mut any = false;
        // eigenvectors of the triangular factor by back substitution
        for i in 0..d {
            let lam = t[(i, i)];
            if lam.re <= 1e-9 {
                continue;
            }
            let mut y = DVector::<C>::zeros(d);
            y[i] = C::new(1.0, 0.0);
            for r in (0..i).rev() {
                let mut acc = C::new(0.0, 0.0);
                for c in r + 1..=i {
                    acc += t[(r, c)] * y[c];
                }
                let den = t[(r, r)] - lam;
                y[r] = if den.norm() > 1e-14 { -acc / den } else { C::new(0.0, 0.0) };
            }
            let v = &q * y;
            let phase = C::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
            let w: f64 = rng.gen_range(0.5..1.0);
            for j in 0..d {
                dir[j] += w * (v[j] * phase).re;
            }
            any = true;
        }
        if !any {
            return Err(Error::NoInstability { alpha: 1.0 - 3.0 * m * m });
        }
        let norm = dir.norm();
        let mut st = base;
        for j in 0..d {
            st.data[j] += eps * dir[j] / norm;
        }
        Ok(st)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TWDiagnostics {
    pub e: f64,
    pub i: f64,
    pub dissipation: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TWSample {
    pub xi: f64,
    pub e: f64,
    pub i: f64,
    pub dissipation: f64,
    /// Accumulated integral of the dissipation from the start.
    pub dissipated: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TWSample>,
    pub final_state: TWState,
    /// xi of the last valid state when the norm cap was crossed.
    pub blowup: Option<f64>,
}

/// The truncated flow augmented with the running dissipation integral.
struct Augmented<'a> {
    g: &'a Galerkin,
}

impl OdeSystem for Augmented<'_> {
    fn dim(&self) -> usize {
        4 * (2 * self.g.n + 1) + 1
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let d = y.len() - 1;
        self.g.rhs_slice(&y[..d], &mut dy[..d]);
        let len = 2 * self.g.n + 1;
        let w = &y[3 * len..4 * len];
        dy[d] = mean_product(w, w) / self.g.frame.s;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TwSettings {
    pub xi_end: f64,
    /// Spacing of monitor outputs.
    pub output_every: f64,
    pub tol: Tolerances,
    pub cap: f64,
}

impl Default for TwSettings {
    fn default() -> Self {
        Self { xi_end: 50.0, output_every: 0.5, tol: Tolerances::tight(1e-12), cap: BLOWUP_CAP }
    }
}

/// Integrates forward in xi. `distance` maps a state to the monitored
/// distance from the equilibrium set.
pub fn integrate_tw(
    g: &Galerkin,
    state0: &TWState,
    settings: &TwSettings,
    distance: &dyn Fn(&TWState) -> f64,
) -> Result<Trajectory> {
    if state0.n != g.n || state0.dim() != 4 * (2 * g.n + 1) {
        return Err(Error::InvalidInput("state truncation does not match the system".into()));
    }
    if !(settings.output_every > 0.0) || !(settings.xi_end > 0.0) {
        return Err(Error::InvalidInput("xi_end and output_every must be positive".into()));
    }
    let sys = Augmented { g };
    let mut y0 = state0.data.clone();
    y0.push(0.0);
    let mut stepper = Stepper::new(&sys, 0.0, &y0, settings.tol);
    let d = state0.dim();
    let sample = |xi: f64, y: &[f64]| -> TWSample {
        let st = TWState { n: g.n, frame: g.frame, data: y[..d].to_vec() };
        let diag = g.diagnostics(&st);
        TWSample { xi, e: diag.e, i: diag.i, dissipation: diag.dissipation, dissipated: y[d], distance: distance(&st) }
    };
    let mut samples = vec![sample(0.0, &y0)];
    let mut last_valid = y0.clone();
    let mut last_xi = 0.0;
    let mut blowup = None;
    let outputs = (settings.xi_end / settings.output_every).ceil() as usize;
    'outer: for i in 1..=outputs {
        let target = (i as f64 * settings.output_every).min(settings.xi_end);
        while stepper.t < target {
            if let Err(e) = stepper.step(target) {
                // a failing step is treated as escape when the state is large
                let st = TWState { n: g.n, frame: g.frame, data: stepper.y[..d].to_vec() };
                if g.u_norm(&st) > 0.1 * settings.cap {
                    blowup = Some(last_xi);
                    break 'outer;
                }
                return Err(e);
            }
            let st = TWState { n: g.n, frame: g.frame, data: stepper.y[..d].to_vec() };
            if !stepper.y.iter().all(|x| x.is_finite()) || g.u_norm(&st) > settings.cap {
                blowup = Some(last_xi);
                break 'outer;
            }
            last_valid.copy_from_slice(&stepper.y);
            last_xi = stepper.t;
        }
        samples.push(sample(stepper.t, &stepper.y));
    }
    let final_state = TWState { n: g.n, frame: g.frame, data: last_valid[..d].to_vec() };
    Ok(Trajectory { samples, final_state, blowup })
}

/// max over consecutive outputs of |E_2 - E_1 + integral of dissipation|,
/// relative to max |E| on the trajectory.
pub fn verify_energy_identity(traj: &Trajectory) -> f64 {
    let scale = traj.samples.iter().fold(0.0f64, |m, s| m.max(s.e.abs())).max(f64::MIN_POSITIVE);
    traj.samples
        .windows(2)
        .map(|w| (w[1].e - w[0].e + (w[1].dissipated - w[0].dissipated)).abs() / scale)
        .fold(0.0, f64::max)
}

/// max |I - I_0| relative to |I_0| (absolute when I_0 = 0).
pub fn first_integral_drift(traj: &Trajectory) -> f64 {
    let i0 = traj.samples[0].i;
    let scale = if i0 == 0.0 { 1.0 } else { i0.abs() };
    traj.samples.iter().map(|s| (s.i - i0).abs() / scale).fold(0.0, f64::max)
}

/// Columns xi, E, I, dissipation, distance.
pub fn write_trajectory_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["xi", "E", "I", "dissipation", "distance"])?;
    for s in &traj.samples {
        w.write_record([s.xi.to_string(), s.e.to_string(), s.i.to_string(), s.dissipation.to_string(), s.distance.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Energy of the homogeneous state: -G(m).
pub fn trivial_energy(m: f64) -> f64 {
    0.5 * m * m - 0.25 * m.powi(4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::spreading_speed;
    use crate::equilibria::{find_equilibria, find_equilibrium, BranchSelect};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lin_frame(m: f64) -> Frame {
        let r = spreading_speed(1.0 - 3.0 * m * m).unwrap();
        Frame::new(r.s, r.omega)
    }

    #[test]
    fn trivial_state_is_stationary() {
        let m = 0.3;
        let g = Galerkin::new(4, lin_frame(m)).unwrap();
        let st = TWState::trivial(4, g.frame, m);
        assert!(g.rhs(&st).data.iter().all(|x| x.abs() < 1e-14));
        assert!((g.first_integral(&st) + g.frame.s * m).abs() < 1e-15);
        assert!((g.energy(&st) - trivial_energy(m)).abs() < 1e-15);
    }

    #[test]
    fn cubic_projection_is_exact() {
        // u = cos(n tau): u^3 = (3 cos(n tau) + cos(3 n tau)) / 4
        let n = 5;
        let g = Galerkin::new(n, lin_frame(0.0)).unwrap();
        let mut u = vec![0.0; 2 * n + 1];
        u[2 * n - 1] = 0.5;
        let c = g.cubic(&u);
        for (i, x) in c.iter().enumerate() {
            let expect = if i == 2 * n - 1 { 0.375 } else { 0.0 };
            assert!((x - expect).abs() < 1e-15, "{i}: {x}");
        }
    }

    #[test]
    fn coefficient_accessors_respect_reality() {
        let mut st = TWState::zeros(3, lin_frame(0.0));
        st.set_coefficient(Field::V, -2, C::new(0.3, 0.4));
        assert_eq!(st.coefficient(Field::V, 2), C::new(0.3, -0.4));
        assert_eq!(st.dim(), 4 * 7);
    }

    #[test]
    fn relative_equilibrium_moves_by_rotation() {
        let m = 0.2;
        let frame = lin_frame(m);
        let p = find_equilibrium(2.0 * PI / frame.k, m, 1, BranchSelect::LargestAmplitude).unwrap();
        let g = Galerkin::new(8, frame).unwrap();
        let st = g.relative_equilibrium(&p).unwrap();
        let d = g.rhs(&st);
        let mut rot = TWState::zeros(8, frame);
        for f in [Field::U, Field::V, Field::Theta, Field::W] {
            d_tau(st.field(f), rot.field_mut(f));
        }
        let scale = st.data.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        for (a, b) in d.data.iter().zip(&rot.data) {
            assert!((a - frame.k * b).abs() < 1e-11 * scale, "{a} vs {}", frame.k * b);
        }
        assert!(g.equilibrium_defect(&st) < 1e-11);
        let traj = integrate_tw(&g, &st, &TwSettings { xi_end: 10.0, ..Default::default() }, &|s| g.equilibrium_defect(s)).unwrap();
        assert!(traj.blowup.is_none());
        let e0 = traj.samples[0].e;
        assert!(traj.samples.iter().all(|s| (s.e - e0).abs() < 1e-10 * e0.abs().max(1.0)));
        // round-off grows along the unstable directions of the orbit
        assert!(traj.samples.last().unwrap().dissipated < 1e-14);
        assert!(verify_energy_identity(&traj) < 1e-10);
    }

    #[test]
    fn linearization_at_trivial_state_matches_dispersion_count() {
        let m = 0.2;
        for n in [1, 2, 4] {
            for frame in [lin_frame(m), Frame::from_wavenumber(1.0, 1.3)] {
                let g = Galerkin::new(n, frame).unwrap();
                let (unstable, _) = g.spatial_index(&TWState::trivial(n, frame, m), 1e-6);
                assert_eq!(unstable, g.predicted_trivial_index(m).unwrap(), "n = {n}, frame = {frame:?}");
            }
        }
    }

    #[test]
    fn energy_decreases_along_perturbed_trajectories() {
        let m = 0.3;
        let g = Galerkin::new(4, lin_frame(m)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let st = g.unstable_seed(m, 1e-4, &mut rng).unwrap();
        let traj = integrate_tw(&g, &st, &TwSettings { xi_end: 20.0, ..Default::default() }, &|s| g.equilibrium_defect(s)).unwrap();
        assert!(traj.samples.windows(2).all(|w| w[1].e <= w[0].e + 1e-14));
        assert!(verify_energy_identity(&traj) < 1e-8);
        assert!(first_integral_drift(&traj) < 1e-12);
    }

    #[test]
    fn one_relative_equilibrium_family_besides_the_trivial_state() {
        let m = 0.2;
        let frame = lin_frame(m);
        let l = 2.0 * PI / frame.k;
        assert_eq!(find_equilibria(l, m, 1).unwrap().len(), 1);
        assert!(find_equilibria(l, m, 2).is_err());
    }

    #[test]
    fn rejects_invalid_truncation() {
        assert!(Galerkin::new(0, lin_frame(0.0)).is_err());
    }
}
