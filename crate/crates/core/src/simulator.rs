//! Pseudospectral simulation of u_t = -(u_xx + u - u^3)_xx on a periodic
//! domain with a first-order semi-implicit step and optional wedge
//! stabilization of the homogeneous state ahead of the front.
//!
//! The step treats the linear part implicitly and the cubic flux
//! explicitly:
//!
//!   u_q^{n+1} = (u_q^n - dt q^2 (u^3)_q^n) / (1 + dt (q^4 - q^2)).
//!
//! The cubic is evaluated on a grid of twice the length, which makes its
//! projection onto the retained modes exact.

use crate::dispersion::closed_form;
use crate::error::{Error, Result};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// u = m + A (g_w - g_{2w} / 2)(x - c) with g_w = exp(-x^2 / w^2); the
    /// negative skirt makes the perturbation mass-free.
    LocalizedBump { amplitude: f64, width: f64, center: f64 },
    /// u = m + A cos(2 pi mode x / L).
    SingleMode { mode: usize, amplitude: f64 },
    /// Samples read from a snapshot file with the configured grid size.
    Custom { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WedgeConfig {
    /// Speed used to size the buffer strip; at least the front speed.
    pub pre_speed: f64,
    /// Untouched distance ahead of the detected front.
    pub margin: f64,
    /// Steps between updates.
    pub every: usize,
    /// Front detection level for the update.
    pub threshold: f64,
}

impl WedgeConfig {
    /// Defaults for mass m: pre_speed 1.5 s_lin and a margin that keeps the
    /// leading edge down to e^{-25} of its amplitude, at least 50.
    pub fn for_mass(m: f64) -> Result<Self> {
        let alpha = 1.0 - 3.0 * m * m;
        if alpha <= 0.0 {
            return Err(Error::NoInstability { alpha });
        }
        let cf = closed_form(alpha);
        Ok(Self { pre_speed: 1.5 * cf.s, margin: (25.0 / cf.re_nu.abs()).max(50.0), every: 100, threshold: 0.05 })
    }

    /// Width of the buffer strip: two update intervals at pre_speed, two
    /// ramps and 80 units of slack. Over one update interval the m to -1
    /// ramp disturbs the field about 60 units to its left at the 1e-9 level,
    /// which would later grow ahead of the front.
    pub fn buffer_width(&self, dt: f64) -> f64 {
        2.0 * self.pre_speed * self.every as f64 * dt + 2.0 * WEDGE_RAMP + 80.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub domain_length: f64,
    /// Number of grid points (a power of two).
    pub n_modes: usize,
    pub dt: f64,
    pub t_end: f64,
    pub m: f64,
    pub ic: InitialCondition,
    #[serde(default)]
    pub wedge: Option<WedgeConfig>,
    /// Steps between snapshots; 0 disables snapshots.
    pub snapshot_every: usize,
    /// Amplitude of uniform noise added to the initial field.
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SimConfig {
    /// Reduced-domain setup: L = 256 pi, 8192 points, dt = 0.1, a bump near
    /// the left end and the wedge on.
    pub fn desk(m: f64, t_end: f64) -> Result<Self> {
        let l = 256.0 * PI;
        Ok(Self {
            domain_length: l,
            n_modes: 8192,
            dt: 0.1,
            t_end,
            m,
            ic: InitialCondition::LocalizedBump { amplitude: 0.5, width: 5.0, center: 0.05 * l },
            wedge: Some(WedgeConfig::for_mass(m)?),
            snapshot_every: 100,
            noise: 0.0,
            seed: 0,
        })
    }

    /// Reduced-domain setup with t_end chosen so the front stops short of
    /// the wedge reaching the periodic seam.
    pub fn desk_auto(m: f64) -> Result<Self> {
        let mut cfg = Self::desk(m, 0.0)?;
        let s = closed_form(1.0 - 3.0 * m * m).s;
        cfg.t_end = (cfg.usable_travel() / s / 10.0).floor() * 10.0;
        Ok(cfg)
    }

    /// Distance a front started by the initial condition can travel before
    /// the wedge reaches the periodic seam.
    pub fn usable_travel(&self) -> f64 {
        let start = match self.ic {
            InitialCondition::LocalizedBump { center, width, .. } => center + 4.0 * width,
            _ => 0.0,
        };
        let wedge = self.wedge.map_or(0.0, |w| w.margin + w.buffer_width(self.dt) + 2.0 * WEDGE_RAMP);
        (self.domain_length - start - wedge).max(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: &str| Err(Error::Config { field: field.into(), message: message.into() });
        if !(self.domain_length > 0.0) || !self.domain_length.is_finite() {
            return bad("domain_length", "must be positive");
        }
        if self.n_modes < 16 || !self.n_modes.is_power_of_two() {
            return bad("n_modes", "must be a power of two, at least 16");
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad("dt", "must be positive");
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return bad("t_end", "must be non-negative");
        }
        if !self.m.is_finite() {
            return bad("m", "must be finite");
        }
        if !(self.noise >= 0.0) {
            return bad("noise", "must be non-negative");
        }
        if let Some(w) = &self.wedge {
            if !(w.pre_speed > 0.0) || !(w.margin > 0.0) || w.every == 0 || !(w.threshold > 0.0) {
                return bad("wedge", "pre_speed, margin, threshold and every must be positive");
            }
        }
        match &self.ic {
            InitialCondition::LocalizedBump { width, .. } if !(*width > 0.0) => bad("ic.width", "must be positive"),
            InitialCondition::SingleMode { mode, .. } if *mode >= self.n_modes / 2 => {
                bad("ic.mode", "must be below the Nyquist index")
            }
            _ => Ok(()),
        }
    }

    pub fn dx(&self) -> f64 {
        self.domain_length / self.n_modes as f64
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Spectrum u_q = (1/N) sum_j u_j e^{-i q x_j}, q = 2 pi j / L, j = 0..N/2.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub step: usize,
    pub u_hat: Vec<C>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub step: usize,
    pub length: f64,
    pub u: Vec<f64>,
    /// Start of the forced zone, when the wedge is on.
    pub forced_from: Option<f64>,
    /// End of the untouched region ahead of the front.
    pub search_end: Option<f64>,
}

impl Snapshot {
    pub fn dx(&self) -> f64 {
        self.length / self.u.len() as f64
    }

    /// Binary record: t, n, L as little-endian f64/u64/f64, then n samples.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(24 + 8 * self.u.len());
        buf.extend_from_slice(&self.t.to_le_bytes());
        buf.extend_from_slice(&(self.u.len() as u64).to_le_bytes());
        buf.extend_from_slice(&self.length.to_le_bytes());
        for v in &self.u {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::File::create(path)?.write_all(&buf)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        if buf.len() < 24 {
            return Err(Error::InvalidInput(format!("{} is not a snapshot", path.display())));
        }
        let f = |i: usize| f64::from_le_bytes(buf[i..i + 8].try_into().unwrap());
        let n = u64::from_le_bytes(buf[8..16].try_into().unwrap()) as usize;
        if buf.len() != 24 + 8 * n {
            return Err(Error::InvalidInput(format!("{}: truncated snapshot", path.display())));
        }
        let u = (0..n).map(|i| f(24 + 8 * i)).collect();
        Ok(Self { t: f(0), step: 0, length: f(16), u, forced_from: None, search_end: None })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotIndexEntry {
    pub file: String,
    pub t: f64,
    pub step: usize,
    pub forced_from: Option<f64>,
    pub search_end: Option<f64>,
}

/// Writes snapshots as `snap_XXXXXX.bin` and keeps a JSON index.
pub struct SnapshotWriter {
    dir: PathBuf,
    entries: Vec<SnapshotIndexEntry>,
}

impl SnapshotWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), entries: Vec::new() })
    }

    /// Continues an existing index, keeping its first `keep` entries.
    pub fn resume(dir: &Path, keep: usize) -> Result<Self> {
        let mut w = Self::new(dir)?;
        if keep > 0 {
            let f = std::fs::File::open(dir.join("index.json"))?;
            let mut entries: Vec<SnapshotIndexEntry> = serde_json::from_reader(f)?;
            entries.truncate(keep);
            w.entries = entries;
        }
        Ok(w)
    }

    pub fn push(&mut self, s: &Snapshot) -> Result<()> {
        let file = format!("snap_{:06}.bin", self.entries.len());
        s.write(&self.dir.join(&file))?;
        self.entries.push(SnapshotIndexEntry { file, t: s.t, step: s.step, forced_from: s.forced_from, search_end: s.search_end });
        self.flush()
    }

    pub fn flush(&self) -> Result<()> {
        let f = std::fs::File::create(self.dir.join("index.json"))?;
        serde_json::to_writer_pretty(f, &self.entries)?;
        Ok(())
    }

    pub fn entries(&self) -> &[SnapshotIndexEntry] {
        &self.entries
    }
}

/// Loads a snapshot index written by `SnapshotWriter`.
pub fn read_snapshot_index(dir: &Path) -> Result<Vec<Snapshot>> {
    let f = std::fs::File::open(dir.join("index.json"))?;
    let entries: Vec<SnapshotIndexEntry> = serde_json::from_reader(f)?;
    entries
        .iter()
        .map(|e| {
            let mut s = Snapshot::read(&dir.join(&e.file))?;
            s.step = e.step;
            s.forced_from = e.forced_from;
            s.search_end = e.search_end;
            Ok(s)
        })
        .collect()
}

/// Width of the smooth transitions at both wedge edges.
pub const WEDGE_RAMP: f64 = 20.0;

/// C-infinity step: 0 for x <= 0, 1 for x >= 1.
pub fn smooth_step(x: f64) -> f64 {
    let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        f(x) / (f(x) + f(1.0 - x))
    }
}

/// Wedge bookkeeping between updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeState {
    /// Start of the region held at u = -1 (end of the second ramp).
    pub forced_from: f64,
    /// Start of the buffer held at u = m; the end of the untouched region.
    pub buffer_from: f64,
    /// Mass change caused by the last update.
    pub mass_change: f64,
}

pub struct Simulator {
    pub config: SimConfig,
    pub state: SimState,
    pub wedge: Option<WedgeState>,
    n: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    r2c_pad: Arc<dyn RealToComplex<f64>>,
    c2r_pad: Arc<dyn ComplexToReal<f64>>,
    q2: Vec<f64>,
    denom: Vec<f64>,
}

impl std::fmt::Debug for Simulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulator").field("config", &self.config).field("t", &self.state.t).finish()
    }
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_modes;
        let mut planner = RealFftPlanner::<f64>::new();
        let (r2c, c2r) = (planner.plan_fft_forward(n), planner.plan_fft_inverse(n));
        let (r2c_pad, c2r_pad) = (planner.plan_fft_forward(2 * n), planner.plan_fft_inverse(2 * n));
        let q2: Vec<f64> = (0..=n / 2)
            .map(|j| {
                let q = 2.0 * PI * j as f64 / config.domain_length;
                q * q
            })
            .collect();
        let denom = q2.iter().map(|&q2| 1.0 + config.dt * (q2 * q2 - q2)).collect();
        let mut sim = Self {
            state: SimState { t: 0.0, step: 0, u_hat: vec![C::new(0.0, 0.0); n / 2 + 1] },
            wedge: None,
            n,
            r2c,
            c2r,
            r2c_pad,
            c2r_pad,
            q2,
            denom,
            config,
        };
        let u0 = sim.initial_field()?;
        sim.set_field(&u0);
        Ok(sim)
    }

    /// Continues a run from one of its snapshots, including the wedge
    /// position recorded with it.
    pub fn resume(config: SimConfig, snapshot: &Snapshot) -> Result<Self> {
        if snapshot.u.len() != config.n_modes {
            return Err(Error::Config {
                field: "n_modes".into(),
                message: format!("snapshot has {} samples", snapshot.u.len()),
            });
        }
        let mut sim = Self::new(config)?;
        sim.set_field(&snapshot.u);
        sim.state.step = snapshot.step;
        sim.state.t = snapshot.t;
        if let (true, Some(forced_from), Some(buffer_from)) =
            (sim.config.wedge.is_some(), snapshot.forced_from, snapshot.search_end)
        {
            sim.wedge = Some(WedgeState { forced_from, buffer_from, mass_change: 0.0 });
        }
        Ok(sim)
    }

    fn initial_field(&self) -> Result<Vec<f64>> {
        let c = &self.config;
        let (n, l, m) = (self.n, c.domain_length, c.m);
        let x = |j: usize| j as f64 * l / n as f64;
        let mut u: Vec<f64> = match &c.ic {
            InitialCondition::LocalizedBump { amplitude, width, center } => (0..n)
                .map(|j| {
                    // periodic distance to the center
                    let d = (x(j) - center + 0.5 * l).rem_euclid(l) - 0.5 * l;
                    let g = |w: f64| (-(d * d) / (w * w)).exp();
                    m + amplitude * (g(*width) - 0.5 * g(2.0 * width))
                })
                .collect(),
            InitialCondition::SingleMode { mode, amplitude } => {
                (0..n).map(|j| m + amplitude * (2.0 * PI * *mode as f64 * x(j) / l).cos()).collect()
            }
            InitialCondition::Custom { path } => {
                let s = Snapshot::read(path)?;
                if s.u.len() != n {
                    return Err(Error::Config {
                        field: "ic.path".into(),
                        message: format!("snapshot has {} samples, config expects {n}", s.u.len()),
                    });
                }
                s.u
            }
        };
        if c.noise > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
            for v in &mut u {
                *v += c.noise * rng.gen_range(-1.0..1.0);
            }
        }
        Ok(u)
    }

    /// Replaces the state by the spectrum of `u` (Nyquist mode dropped).
    pub fn set_field(&mut self, u: &[f64]) {
        let mut input = u.to_vec();
        let mut spec = self.r2c.make_output_vec();
        self.r2c.process(&mut input, &mut spec).expect("fft lengths match");
        let scale = 1.0 / self.n as f64;
        for (dst, z) in self.state.u_hat.iter_mut().zip(&spec) {
            *dst = z * scale;
        }
        self.state.u_hat[0].im = 0.0;
        self.state.u_hat[self.n / 2] = C::new(0.0, 0.0);
    }

    /// Real samples u(x_j), x_j = j L / N.
    pub fn field(&self) -> Vec<f64> {
        let mut spec = self.state.u_hat.clone();
        let mut out = vec![0.0; self.n];
        self.c2r.process(&mut spec, &mut out).expect("fft lengths match");
        out
    }

    fn padded_field(&self) -> Vec<f64> {
        let mut spec = vec![C::new(0.0, 0.0); self.n + 1];
        spec[..self.state.u_hat.len()].copy_from_slice(&self.state.u_hat);
        let mut out = vec![0.0; 2 * self.n];
        self.c2r_pad.process(&mut spec, &mut out).expect("fft lengths match");
        out
    }

    /// Spectrum of u^3 on the retained modes.
    fn cubic_hat(&self) -> Vec<C> {
        let mut g: Vec<f64> = self.padded_field().iter().map(|v| v * v * v).collect();
        let mut spec = self.r2c_pad.make_output_vec();
        self.r2c_pad.process(&mut g, &mut spec).expect("fft lengths match");
        let scale = 1.0 / (2 * self.n) as f64;
        spec[..=self.n / 2].iter().map(|z| z * scale).collect()
    }

    /// One semi-implicit step.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.config.dt;
        let nl = self.cubic_hat();
        for j in 1..self.n / 2 {
            self.state.u_hat[j] = (self.state.u_hat[j] - nl[j] * (dt * self.q2[j])) / self.denom[j];
        }
        self.state.step += 1;
        self.state.t = self.state.step as f64 * dt;
        if self.state.u_hat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { t: self.state.t });
        }
        Ok(())
    }

    /// Mean of u (the q = 0 mode).
    pub fn mass(&self) -> f64 {
        self.state.u_hat[0].re
    }

    /// V = integral of u_x^2 / 2 - u^2 / 2 + u^4 / 4.
    pub fn free_energy(&self) -> f64 {
        let l = self.config.domain_length;
        let grad: f64 = self.state.u_hat[1..self.n / 2].iter().zip(&self.q2[1..]).map(|(z, q2)| q2 * z.norm_sqr()).sum();
        let pad = self.padded_field();
        let pot = pad.iter().map(|u| -0.5 * u * u + 0.25 * u * u * u * u).sum::<f64>() / pad.len() as f64;
        l * (grad + pot)
    }

    /// Puts u = m on the buffer [forced_from - buffer, forced_from) and
    /// u = -1 from forced_from on, with forced_from = front_x + margin +
    /// buffer. The forced edge never retreats, so disturbances it seeds stay
    /// inside the buffer as long as the front moves less than half a buffer
    /// width per update. Both edges are smooth ramps of compact support, and
    /// the forcing fades out over the last ramp width before the periodic
    /// seam; a jump would ring across the whole domain after projection.
    pub fn apply_wedge(&mut self, front_x: f64) -> Result<()> {
        let Some(w) = self.config.wedge else {
            return Err(Error::InvalidInput("wedge stabilization is off".into()));
        };
        let l = self.config.domain_length;
        let buffer = w.buffer_width(self.config.dt);
        let mut forced_from = front_x + w.margin + buffer;
        if let Some(prev) = self.wedge {
            forced_from = forced_from.max(prev.forced_from);
        }
        let buffer_from = forced_from - buffer;
        if buffer_from >= l {
            self.wedge = Some(WedgeState { forced_from: l, buffer_from: l, mass_change: 0.0 });
            return Ok(());
        }
        let before = self.mass();
        let mut u = self.field();
        let dx = self.config.dx();
        let m = self.config.m;
        for (j, v) in u.iter_mut().enumerate() {
            let x = j as f64 * dx;
            if x >= buffer_from {
                // fade back to the live field before the periodic seam
                let fade = 1.0 - smooth_step((x - l + WEDGE_RAMP) / WEDGE_RAMP);
                let to_m = fade * smooth_step((x - buffer_from) / WEDGE_RAMP);
                let to_minus = fade * smooth_step((x - forced_from + WEDGE_RAMP) / WEDGE_RAMP);
                *v += (m - *v) * to_m;
                *v += (-1.0 - *v) * to_minus;
            }
        }
        self.set_field(&u);
        self.wedge = Some(WedgeState { forced_from: forced_from.min(l), buffer_from, mass_change: self.mass() - before });
        Ok(())
    }

    /// Right edge of the initial perturbation, used to place the wedge
    /// before a front is detectable.
    fn initial_extent(&self) -> f64 {
        match self.config.ic {
            InitialCondition::LocalizedBump { width, center, .. } => center + 4.0 * width,
            _ => self.config.domain_length,
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            t: self.state.t,
            step: self.state.step,
            length: self.config.domain_length,
            u: self.field(),
            forced_from: self.wedge.map(|w| w.forced_from),
            search_end: self.wedge.map(|w| w.buffer_from),
        }
    }

    /// Current front estimate used by the wedge: largest x with
    /// |u - m| > threshold left of the buffer.
    fn wedge_front(&self, threshold: f64) -> Option<f64> {
        let s = self.snapshot();
        crate::diagnostics::front_position(&s, self.config.m, threshold).ok()
    }

    /// Steps to t_end, calling `on_snapshot` every `snapshot_every` steps
    /// (and at t = 0 on a fresh run).
    pub fn run<F: FnMut(&Snapshot) -> Result<()>>(&mut self, mut on_snapshot: F) -> Result<()> {
        let steps = self.config.steps();
        let every = self.config.snapshot_every;
        if let (Some(w), None) = (self.config.wedge, self.wedge) {
            let x0 = self.wedge_front(w.threshold).unwrap_or_else(|| self.initial_extent());
            self.apply_wedge(x0)?;
        }
        if every > 0 && self.state.step == 0 {
            on_snapshot(&self.snapshot())?;
        }
        while self.state.step < steps {
            self.step()?;
            if let Some(w) = self.config.wedge {
                if self.state.step % w.every == 0 {
                    if let Some(x) = self.wedge_front(w.threshold) {
                        self.apply_wedge(x)?;
                    }
                }
            }
            if every > 0 && self.state.step % every == 0 {
                on_snapshot(&self.snapshot())?;
            }
        }
        Ok(())
    }
}

/// Runs a configuration and collects all snapshots in memory.
pub fn run_collect(config: SimConfig) -> Result<Vec<Snapshot>> {
    let mut sim = Simulator::new(config)?;
    let mut out = Vec::new();
    sim.run(|s| {
        out.push(s.clone());
        Ok(())
    })?;
    Ok(out)
}

/// Measured growth rate of a single mode about u = m: log-amplitude slope
/// over `steps` steps from amplitude 1e-6.
pub fn measured_growth_rate(m: f64, mode: usize, domain_length: f64, dt: f64, steps: usize) -> Result<f64> {
    let cfg = SimConfig {
        domain_length,
        n_modes: 128,
        dt,
        t_end: dt * steps as f64,
        m,
        ic: InitialCondition::SingleMode { mode, amplitude: 1e-6 },
        wedge: None,
        snapshot_every: 0,
        noise: 0.0,
        seed: 0,
    };
    let mut sim = Simulator::new(cfg)?;
    let a0 = sim.state.u_hat[mode].norm();
    for _ in 0..steps {
        sim.step()?;
    }
    Ok((sim.state.u_hat[mode].norm() / a0).ln() / sim.state.t)
}

/// Largest per-step increase of the free energy over `steps` steps.
pub fn max_energy_increase(config: SimConfig, steps: usize) -> Result<f64> {
    let mut sim = Simulator::new(SimConfig { wedge: None, ..config })?;
    let mut v = sim.free_energy();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..steps {
        sim.step()?;
        let nv = sim.free_energy();
        worst = worst.max(nv - v);
        v = nv;
    }
    Ok(worst)
}

/// Amplification factor of one step for a linear mode with wavenumber q
/// about u = m (cubic linearized to 3 m^2 u).
pub fn linear_amplification(q: f64, m: f64, dt: f64) -> f64 {
    let q2 = q * q;
    (1.0 - dt * q2 * 3.0 * m * m) / (1.0 + dt * (q2 * q2 - q2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::d0;

    fn small(m: f64, ic: InitialCondition) -> SimConfig {
        SimConfig {
            domain_length: 32.0 * PI,
            n_modes: 256,
            dt: 0.1,
            t_end: 10.0,
            m,
            ic,
            wedge: None,
            snapshot_every: 0,
            noise: 0.0,
            seed: 0,
        }
    }

    #[test]
    fn mass_mode_is_bit_constant() {
        let cfg = small(0.2, InitialCondition::LocalizedBump { amplitude: 0.5, width: 3.0, center: 20.0 });
        let mut sim = Simulator::new(cfg).unwrap();
        let m0 = sim.state.u_hat[0];
        for _ in 0..500 {
            sim.step().unwrap();
            assert_eq!(sim.state.u_hat[0], m0);
        }
        assert!((m0.re - 0.2).abs() < 1e-12, "bump carries no mass: {}", m0.re);
    }

    #[test]
    fn homogeneous_state_is_a_fixed_point() {
        let cfg = small(0.3, InitialCondition::SingleMode { mode: 3, amplitude: 0.0 });
        let mut sim = Simulator::new(cfg).unwrap();
        for _ in 0..100 {
            sim.step().unwrap();
        }
        assert!(sim.field().iter().all(|u| (u - 0.3).abs() < 1e-15));
    }

    #[test]
    fn denominator_is_positive() {
        let cfg = small(0.0, InitialCondition::SingleMode { mode: 1, amplitude: 0.0 });
        let sim = Simulator::new(cfg).unwrap();
        assert!(sim.denom.iter().all(|d| *d >= 1.0 - 0.1 / 4.0));
    }

    #[test]
    fn single_mode_follows_the_discrete_amplification() {
        let (m, mode) = (0.2, 5);
        let cfg = small(m, InitialCondition::SingleMode { mode, amplitude: 1e-6 });
        let q = 2.0 * PI * mode as f64 / cfg.domain_length;
        let mut sim = Simulator::new(cfg).unwrap();
        let a0 = sim.state.u_hat[mode].norm();
        for _ in 0..100 {
            sim.step().unwrap();
        }
        let ratio = sim.state.u_hat[mode].norm() / a0;
        let expect = linear_amplification(q, m, 0.1).powi(100);
        assert!((ratio / expect - 1.0).abs() < 1e-5, "{ratio} vs {expect}");
        // continuous rate q^2 (alpha - q^2) = -d0(0, i q) sign convention
        let alpha = 1.0 - 3.0 * m * m;
        let rate = d0(C::new(0.0, 0.0), C::new(0.0, q), alpha).re;
        assert!((rate - q * q * (alpha - q * q)).abs() < 1e-14);
    }

    #[test]
    fn growth_rate_converges_at_first_order() {
        let (m, mode, l) = (0.2, 3, 8.0 * PI);
        let q = 2.0 * PI * mode as f64 / l;
        let exact = q * q * (1.0 - 3.0 * m * m - q * q);
        let err: Vec<f64> = [0.1, 0.01, 0.001]
            .iter()
            .map(|&dt| (measured_growth_rate(m, mode, l, dt, 100).unwrap() - exact).abs())
            .collect();
        for w in err.windows(2) {
            let order = (w[0] / w[1]).log10();
            assert!((order - 1.0).abs() < 0.1, "order {order}, errors {err:?}");
        }
    }

    #[test]
    fn free_energy_decreases() {
        let cfg = small(0.1, InitialCondition::LocalizedBump { amplitude: 0.5, width: 3.0, center: 50.0 });
        let mut sim = Simulator::new(cfg).unwrap();
        let mut v = sim.free_energy();
        for _ in 0..300 {
            sim.step().unwrap();
            let nv = sim.free_energy();
            assert!(nv <= v + 1e-9, "{nv} > {v}");
            v = nv;
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(0.2, InitialCondition::SingleMode { mode: 2, amplitude: 0.1 });
        let sim = Simulator::new(cfg).unwrap();
        let s = sim.snapshot();
        let mut w = SnapshotWriter::new(dir.path()).unwrap();
        w.push(&s).unwrap();
        let back = read_snapshot_index(dir.path()).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].u, s.u);
        assert_eq!(back[0].length, s.length);
    }

    #[test]
    fn config_errors_name_the_field() {
        let mut cfg = small(0.2, InitialCondition::SingleMode { mode: 2, amplitude: 0.1 });
        cfg.n_modes = 100;
        match Simulator::new(cfg) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "n_modes"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wedge_at_domain_end_is_a_no_op() {
        let mut cfg = small(0.2, InitialCondition::SingleMode { mode: 2, amplitude: 0.1 });
        cfg.wedge = Some(WedgeConfig { pre_speed: 1.0, margin: 10.0, every: 10, threshold: 0.05 });
        let mut sim = Simulator::new(cfg).unwrap();
        let before = sim.field();
        sim.apply_wedge(sim.config.domain_length).unwrap();
        assert_eq!(sim.field(), before);
    }
}
