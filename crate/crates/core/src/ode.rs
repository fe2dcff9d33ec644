//! Adaptive Dormand-Prince 5(4) integration with dense output and
//! section-crossing events.
//!
//! The stepper is shared by the phase-plane shooting, the Bloch monodromy
//! and the Galerkin traveling-wave flow. States are flat `f64` slices;
//! complex systems store (re, im) pairs.

use crate::error::{Error, Result};

pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-13, h_max: f64::INFINITY, max_steps: 1_000_000 }
    }
}

impl Tolerances {
    pub fn tight(rtol: f64) -> Self {
        Self { rtol, atol: rtol * 1e-2, ..Default::default() }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Dense output of the last accepted step on [t0, t0 + h].
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    r1: Vec<f64>,
    r2: Vec<f64>,
    r3: Vec<f64>,
    r4: Vec<f64>,
    r5: Vec<f64>,
}

impl DenseStep {
    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        for i in 0..out.len() {
            out[i] = self.r1[i]
                + th * (self.r2[i] + th1 * (self.r3[i] + th * (self.r4[i] + th1 * self.r5[i])));
        }
    }

    pub fn eval_component(&self, t: f64, i: usize) -> f64 {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        self.r1[i] + th * (self.r2[i] + th1 * (self.r3[i] + th * (self.r4[i] + th1 * self.r5[i])))
    }
}

pub struct Stepper<'a, S: OdeSystem + ?Sized> {
    sys: &'a S,
    tol: Tolerances,
    pub t: f64,
    pub y: Vec<f64>,
    f: Vec<f64>,
    h: f64,
    k: [Vec<f64>; 7],
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
    dense: DenseStep,
    steps: usize,
    // previous accepted state, for event polishing
    t_prev: f64,
    y_prev: Vec<f64>,
    f_prev: Vec<f64>,
}

impl<'a, S: OdeSystem + ?Sized> Stepper<'a, S> {
    pub fn new(sys: &'a S, t0: f64, y0: &[f64], tol: Tolerances) -> Self {
        let n = sys.dim();
        assert_eq!(y0.len(), n, "state dimension mismatch");
        let mut f = vec![0.0; n];
        sys.rhs(t0, y0, &mut f);
        let h = initial_step(sys, t0, y0, &f, &tol);
        let z = || vec![0.0; n];
        Self {
            sys,
            tol,
            t: t0,
            y: y0.to_vec(),
            f: f.clone(),
            h,
            k: [z(), z(), z(), z(), z(), z(), z()],
            ytmp: z(),
            ynew: z(),
            dense: DenseStep { t0, h: 1.0, r1: z(), r2: z(), r3: z(), r4: z(), r5: z() },
            steps: 0,
            t_prev: t0,
            y_prev: y0.to_vec(),
            f_prev: f,
        }
    }

    pub fn dense(&self) -> &DenseStep {
        &self.dense
    }

    pub fn derivative(&self) -> &[f64] {
        &self.f
    }

    /// Raw RK stages from (t, y) with step h; fills `k` and `ynew`, returns error norm.
    fn attempt(&mut self, t: f64, h: f64) -> f64 {
        let n = self.y.len();
        let sys = self.sys;
        let y = &self.y;
        self.k[0].copy_from_slice(&self.f);
        macro_rules! stage {
            ($dst:expr, $c:expr, [$(($j:expr, $a:expr)),*]) => {{
                for i in 0..n {
                    let mut acc = 0.0;
                    $( acc += $a * self.k[$j][i]; )*
                    self.ytmp[i] = y[i] + h * acc;
                }
                let (tmp, ks) = (&self.ytmp, &mut self.k);
                sys.rhs(t + $c * h, tmp, &mut ks[$dst]);
            }};
        }
        stage!(1, C2, [(0, A21)]);
        stage!(2, C3, [(0, A31), (1, A32)]);
        stage!(3, C4, [(0, A41), (1, A42), (2, A43)]);
        stage!(4, C5, [(0, A51), (1, A52), (2, A53), (3, A54)]);
        stage!(5, 1.0, [(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
        for i in 0..n {
            self.ynew[i] = y[i]
                + h * (A71 * self.k[0][i]
                    + A73 * self.k[2][i]
                    + A74 * self.k[3][i]
                    + A75 * self.k[4][i]
                    + A76 * self.k[5][i]);
        }
        {
            let (yn, ks) = (&self.ynew, &mut self.k);
            sys.rhs(t + h, yn, &mut ks[6]);
        }
        let mut err = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * self.k[0][i]
                    + E3 * self.k[2][i]
                    + E4 * self.k[3][i]
                    + E5 * self.k[4][i]
                    + E6 * self.k[5][i]
                    + E7 * self.k[6][i]);
            let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(self.ynew[i].abs());
            err += (e / sc) * (e / sc);
        }
        (err / n as f64).sqrt()
    }

    /// Takes one accepted step without passing `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<()> {
        let dir = (t_limit - self.t).signum();
        if dir == 0.0 {
            return Ok(());
        }
        loop {
            if self.steps >= self.tol.max_steps {
                return Err(Error::IntegrationFailure(format!(
                    "step budget exhausted at t = {}",
                    self.t
                )));
            }
            let mut h = self.h.abs().min(self.tol.h_max) * dir;
            let last = (self.t + h - t_limit) * dir >= 0.0;
            if last {
                h = t_limit - self.t;
            }
            if h.abs() < 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::IntegrationFailure(format!("step size underflow at t = {}", self.t)));
            }
            let t = self.t;
            let err = self.attempt(t, h);
            self.steps += 1;
            if !err.is_finite() {
                self.h = h.abs() * 0.2;
                if !self.ynew.iter().all(|v| v.is_finite()) && self.h < 1e-12 {
                    return Err(Error::IntegrationFailure(format!("non-finite state at t = {t}")));
                }
                continue;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                let n = self.y.len();
                self.t_prev = t;
                self.y_prev.copy_from_slice(&self.y);
                self.f_prev.copy_from_slice(&self.f);
                let d = &mut self.dense;
                d.t0 = t;
                d.h = h;
                for i in 0..n {
                    let y0 = self.y[i];
                    let y1 = self.ynew[i];
                    let dy = y1 - y0;
                    let bspl = h * self.k[0][i] - dy;
                    d.r1[i] = y0;
                    d.r2[i] = dy;
                    d.r3[i] = bspl;
                    d.r4[i] = dy - h * self.k[6][i] - bspl;
                    d.r5[i] = h
                        * (D1 * self.k[0][i]
                            + D3 * self.k[2][i]
                            + D4 * self.k[3][i]
                            + D5 * self.k[4][i]
                            + D6 * self.k[5][i]
                            + D7 * self.k[6][i]);
                }
                self.t = if last { t_limit } else { t + h };
                std::mem::swap(&mut self.y, &mut self.ynew);
                self.f.copy_from_slice(&self.k[6]);
                if !last || fac < 1.0 {
                    self.h = h.abs() * fac;
                }
                return Ok(());
            }
            self.h = h.abs() * fac.min(1.0);
        }
    }

    /// Single explicit RK step of size `h` from the previous accepted point;
    /// used to polish event locations to full step accuracy.
    fn restep_from_prev(&mut self, h: f64) -> (Vec<f64>, Vec<f64>) {
        let save_t = self.t;
        let save_y = self.y.clone();
        let save_f = self.f.clone();
        self.y.copy_from_slice(&self.y_prev);
        self.f.copy_from_slice(&self.f_prev);
        let tp = self.t_prev;
        self.attempt(tp, h);
        let y = self.ynew.clone();
        let f = self.k[6].clone();
        self.t = save_t;
        self.y = save_y;
        self.f = save_f;
        (y, f)
    }
}

fn initial_step<S: OdeSystem + ?Sized>(sys: &S, t0: f64, y0: &[f64], f0: &[f64], tol: &Tolerances) -> f64 {
    let n = y0.len();
    let sc: Vec<f64> = y0.iter().map(|v| tol.atol + tol.rtol * v.abs()).collect();
    let norm = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d0 = norm(y0);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; n];
    sys.rhs(t0 + h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(tol.h_max)
}

/// Integrates from t0 to t1 and returns the final state.
pub fn integrate_to<S: OdeSystem + ?Sized>(sys: &S, t0: f64, y0: &[f64], t1: f64, tol: Tolerances) -> Result<Vec<f64>> {
    let mut st = Stepper::new(sys, t0, y0, tol);
    while st.t != t1 {
        st.step(t1)?;
    }
    Ok(st.y)
}

/// Integrates through the increasing output times `ts`, landing exactly on
/// each, and returns the states there.
pub fn integrate_outputs<S: OdeSystem + ?Sized>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    ts: &[f64],
    tol: Tolerances,
) -> Result<Vec<Vec<f64>>> {
    let mut st = Stepper::new(sys, t0, y0, tol);
    let mut out = Vec::with_capacity(ts.len());
    for &t in ts {
        while st.t != t {
            st.step(t)?;
        }
        out.push(st.y.clone());
    }
    Ok(out)
}

/// A crossing of zero by one state component.
#[derive(Debug, Clone, Copy)]
pub struct Section {
    pub component: usize,
    /// +1: upward crossings only, -1: downward only, 0: either.
    pub direction: i8,
}

#[derive(Debug, Clone)]
pub struct EventHit {
    pub t: f64,
    pub y: Vec<f64>,
}

/// Integrates until the `count`-th crossing of `section`, with the crossing
/// time polished by Newton iteration on exact RK steps.
pub fn integrate_to_section<S: OdeSystem + ?Sized>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    t_max: f64,
    section: Section,
    count: usize,
    tol: Tolerances,
) -> Result<Vec<EventHit>> {
    let c = section.component;
    let mut st = Stepper::new(sys, t0, y0, tol);
    let mut hits = Vec::new();
    let mut g_prev = y0[c];
    while hits.len() < count {
        if st.t >= t_max {
            return Err(Error::IntegrationFailure(format!("no section crossing before t = {t_max}")));
        }
        st.step(t_max)?;
        let g_new = st.y[c];
        let crossed = match section.direction {
            1 => g_prev < 0.0 && g_new >= 0.0,
            -1 => g_prev > 0.0 && g_new <= 0.0,
            _ => (g_prev < 0.0 && g_new >= 0.0) || (g_prev > 0.0 && g_new <= 0.0),
        };
        if crossed {
            let d = st.dense().clone();
            // Illinois on the dense interpolant
            let (mut a, mut b) = (d.t0, d.t0 + d.h);
            let (mut ga, mut gb) = (g_prev, g_new);
            let mut side = 0i8;
            let mut tc = b;
            for _ in 0..60 {
                tc = (a * gb - b * ga) / (gb - ga);
                let gc = d.eval_component(tc, c);
                if gc == 0.0 || (b - a).abs() < 1e-15 * b.abs().max(1.0) {
                    break;
                }
                if (gc > 0.0) == (gb > 0.0) {
                    b = tc;
                    gb = gc;
                    if side == 1 {
                        ga *= 0.5;
                    }
                    side = 1;
                } else {
                    a = tc;
                    ga = gc;
                    if side == -1 {
                        gb *= 0.5;
                    }
                    side = -1;
                }
            }
            // polish with exact RK steps from the step start
            let mut y_hit = vec![0.0; y0.len()];
            d.eval(tc, &mut y_hit);
            for _ in 0..4 {
                let (y, f) = st.restep_from_prev(tc - d.t0);
                y_hit = y;
                if f[c] == 0.0 {
                    break;
                }
                let dt = -y_hit[c] / f[c];
                if !dt.is_finite() || dt.abs() > 0.5 * d.h {
                    break;
                }
                tc += dt;
                if dt.abs() < 1e-15 * tc.abs().max(1.0) {
                    let (y, _) = st.restep_from_prev(tc - d.t0);
                    y_hit = y;
                    break;
                }
            }
            hits.push(EventHit { t: tc, y: y_hit });
        }
        g_prev = g_new;
    }
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator;
    impl OdeSystem for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
            dy[0] = y[1];
            dy[1] = -y[0];
        }
    }

    struct Growth;
    impl OdeSystem for Growth {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
            dy[0] = y[0];
        }
    }

    #[test]
    fn harmonic_oscillator_period() {
        let hits = integrate_to_section(
            &Oscillator,
            0.0,
            &[1.0, 0.0],
            100.0,
            Section { component: 1, direction: 0 },
            2,
            Tolerances::tight(1e-12),
        )
        .unwrap();
        assert!((hits[0].t - std::f64::consts::PI).abs() < 1e-11, "{}", hits[0].t);
        assert!((hits[1].t - 2.0 * std::f64::consts::PI).abs() < 1e-11);
        assert!((hits[1].y[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn exponential_accuracy() {
        let y = integrate_to(&Growth, 0.0, &[1.0], 3.0, Tolerances::tight(1e-12)).unwrap();
        assert!((y[0] - 3f64.exp()).abs() < 1e-10 * 3f64.exp());
    }

    #[test]
    fn dense_output_is_accurate() {
        let mut st = Stepper::new(&Oscillator, 0.0, &[1.0, 0.0], Tolerances::tight(1e-9));
        let mut worst: f64 = 0.0;
        while st.t < 10.0 {
            st.step(10.0).unwrap();
            let d = st.dense();
            for j in 1..10 {
                let t = d.t0 + d.h * j as f64 / 10.0;
                worst = worst.max((d.eval_component(t, 0) - t.cos()).abs());
            }
        }
        assert!(worst < 1e-7, "dense error {worst}");
    }

    #[test]
    fn outputs_land_exactly() {
        let ts: Vec<f64> = (1..=5).map(|i| i as f64 * 0.5).collect();
        let ys = integrate_outputs(&Oscillator, 0.0, &[1.0, 0.0], &ts, Tolerances::tight(1e-12)).unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0] - t.cos()).abs() < 1e-10);
        }
    }
}
