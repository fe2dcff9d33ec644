//! Front position, speed and wake wavenumber measured on simulation
//! snapshots, and tracking of a secondary coarsening front.

use crate::error::{Error, Result};
use crate::dispersion::spreading_speed;
use crate::simulator::{InitialCondition, SimConfig, Snapshot};
use realfft::RealFftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

/// Default detection level for |u - m|.
pub const DEFAULT_THRESHOLD: f64 = 0.05;
/// Fraction of the run discarded before fitting speeds.
pub const TRANSIENT_FRACTION: f64 = 0.2;
/// Minimum number of samples in a speed fit.
pub const MIN_FIT_SAMPLES: usize = 10;
/// Minimum number of sign changes for a wavenumber estimate.
pub const MIN_CROSSINGS: usize = 6;
/// Travel distance below which a speed fit is flagged as short.
pub const LONG_WINDOW: f64 = 500.0;

/// Largest x (below the snapshot's search end) with |u - m| > threshold,
/// refined by linear interpolation of |u - m| between grid points.
pub fn front_position(snapshot: &Snapshot, m: f64, threshold: f64) -> Result<f64> {
    let dx = snapshot.dx();
    let n = snapshot.u.len();
    let end = snapshot.search_end.map_or(n, |x| ((x / dx).floor() as usize).min(n));
    let dev = |j: usize| (snapshot.u[j] - m).abs();
    let j = (0..end).rev().find(|&j| dev(j) > threshold).ok_or(Error::NoFront)?;
    if j + 1 >= end {
        return Ok(j as f64 * dx);
    }
    let (a, b) = (dev(j), dev(j + 1));
    Ok((j as f64 + (a - threshold) / (a - b)) * dx)
}

/// Least-squares line through (t, x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedFit {
    pub speed: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub samples: usize,
    /// Distance covered over the fit window.
    pub span: f64,
}

/// Ordinary least squares of x against t.
pub fn fit_line(t: &[f64], x: &[f64]) -> Result<SpeedFit> {
    let n = t.len();
    if n != x.len() || n < 3 {
        return Err(Error::InsufficientData(format!("{n} samples")));
    }
    let nf = n as f64;
    let tm = t.iter().sum::<f64>() / nf;
    let xm = x.iter().sum::<f64>() / nf;
    let sxx: f64 = t.iter().map(|t| (t - tm).powi(2)).sum();
    let sxy: f64 = t.iter().zip(x).map(|(t, x)| (t - tm) * (x - xm)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all samples at one time".into()));
    }
    let speed = sxy / sxx;
    let intercept = xm - speed * tm;
    let ssr: f64 = t.iter().zip(x).map(|(t, x)| (x - intercept - speed * t).powi(2)).sum();
    let stderr = (ssr / (nf - 2.0) / sxx).sqrt();
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(SpeedFit { speed, stderr, intercept, samples: n, span: hi - lo })
}

/// Front speed from the samples after the first 20% of the time span.
pub fn front_speed(times: &[f64], positions: &[f64]) -> Result<SpeedFit> {
    if times.len() != positions.len() || times.is_empty() {
        return Err(Error::InsufficientData("empty track".into()));
    }
    let t0 = times[0];
    let t1 = times[times.len() - 1];
    let cut = t0 + TRANSIENT_FRACTION * (t1 - t0);
    let (t, x): (Vec<f64>, Vec<f64>) =
        times.iter().zip(positions).filter(|(t, x)| **t >= cut && x.is_finite()).map(|(t, x)| (*t, *x)).unzip();
    if t.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData(format!("{} samples in the fit window, need {MIN_FIT_SAMPLES}", t.len())));
    }
    fit_line(&t, &x)
}

/// Positions x where u - level changes sign, linearly interpolated.
pub fn sign_changes(u: &[f64], dx: f64, lo: f64, hi: f64, level: f64) -> Vec<f64> {
    let n = u.len();
    let j0 = ((lo / dx).ceil().max(0.0) as usize).min(n);
    let j1 = ((hi / dx).floor().max(0.0) as usize).min(n.saturating_sub(1));
    let mut out = Vec::new();
    for j in j0..j1 {
        let (a, b) = (u[j] - level, u[j + 1] - level);
        if (a < 0.0) != (b < 0.0) {
            out.push((j as f64 + a / (a - b)) * dx);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WakeEstimate {
    /// Zero-crossing estimate pi (c - 1) / (x_last - x_first), over an even
    /// number of gaps.
    pub k: f64,
    /// Crossing-count estimate pi c / window length.
    pub k_count: f64,
    /// Hann-windowed spectral peak.
    pub k_spectral: f64,
    pub crossings: usize,
    pub window: (f64, f64),
}

/// Wavenumber of the field on [lo, hi] from sign changes of u minus its
/// window mean, with a spectral cross-check.
pub fn wake_wavenumber(snapshot: &Snapshot, window: (f64, f64)) -> Result<WakeEstimate> {
    let dx = snapshot.dx();
    let n = snapshot.u.len();
    let (lo, hi) = (window.0.max(0.0), window.1.min(snapshot.length));
    if !(hi > lo) {
        return Err(Error::TooFewOscillations { crossings: 0 });
    }
    let j0 = ((lo / dx).ceil() as usize).min(n);
    let j1 = ((hi / dx).floor() as usize + 1).min(n);
    let seg = &snapshot.u[j0..j1];
    if seg.len() < 4 {
        return Err(Error::TooFewOscillations { crossings: 0 });
    }
    let mean = seg.iter().sum::<f64>() / seg.len() as f64;
    let xs = sign_changes(&snapshot.u, dx, lo, hi, mean);
    let c = xs.len();
    if c < MIN_CROSSINGS {
        return Err(Error::TooFewOscillations { crossings: c });
    }
    // span whole periods: crossing gaps alternate on period-doubled wakes
    let c_span = if c % 2 == 0 { c - 1 } else { c };
    let k = PI * (c_span - 1) as f64 / (xs[c_span - 1] - xs[0]);
    let k_count = PI * c as f64 / (hi - lo);
    Ok(WakeEstimate { k, k_count, k_spectral: spectral_peak(seg, mean, dx), crossings: c, window: (lo, hi) })
}

/// Wavenumber of the largest Hann-windowed Fourier amplitude, zero-padded
/// eightfold and refined by a parabola through the peak.
fn spectral_peak(seg: &[f64], mean: f64, dx: f64) -> f64 {
    let len = seg.len();
    let nfft = (8 * len).next_power_of_two();
    let mut buf = vec![0.0; nfft];
    for (i, v) in seg.iter().enumerate() {
        let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / (len - 1) as f64).cos();
        buf[i] = w * (v - mean);
    }
    let fft = RealFftPlanner::<f64>::new().plan_fft_forward(nfft);
    let mut spec = fft.make_output_vec();
    fft.process(&mut buf, &mut spec).expect("fft lengths match");
    let mag: Vec<f64> = spec.iter().map(|z| z.norm()).collect();
    let p = (1..mag.len()).max_by(|&a, &b| mag[a].total_cmp(&mag[b])).unwrap_or(1);
    let shift = if p + 1 < mag.len() {
        let (a, b, c) = (mag[p - 1], mag[p], mag[p + 1]);
        let den = a - 2.0 * b + c;
        if den != 0.0 { 0.5 * (a - c) / den } else { 0.0 }
    } else {
        0.0
    };
    2.0 * PI * (p as f64 + shift) / (nfft as f64 * dx)
}

/// Wake window [x_f - 0.6 d, x_f - 0.1 d] with d = x_f - origin.
pub fn wake_window(front: f64, origin: f64) -> (f64, f64) {
    let d = front - origin;
    (front - 0.6 * d, front - 0.1 * d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontTrack {
    pub times: Vec<f64>,
    /// Front position per time, NaN where none was found.
    pub positions: Vec<f64>,
    pub speed: Option<SpeedFit>,
    pub wake: Option<WakeEstimate>,
    pub flags: Vec<String>,
}

impl FrontTrack {
    fn finish(times: Vec<f64>, positions: Vec<f64>) -> Self {
        let mut flags = Vec::new();
        let speed = match front_speed(&times, &positions) {
            Ok(fit) => {
                if fit.span < LONG_WINDOW {
                    flags.push(format!("short fit window: {:.1} length units", fit.span));
                }
                Some(fit)
            }
            Err(e) => {
                flags.push(format!("no speed: {e}"));
                None
            }
        };
        let cut = times.first().zip(times.last()).map(|(a, b)| a + TRANSIENT_FRACTION * (b - a));
        let late: Vec<f64> = times
            .iter()
            .zip(&positions)
            .filter(|(t, x)| cut.is_some_and(|c| **t >= c) && x.is_finite())
            .map(|(_, x)| *x)
            .collect();
        if late.windows(2).any(|w| w[1] < w[0]) {
            flags.push("positions not monotone after transient".into());
        }
        Self { times, positions, speed, wake: None, flags }
    }

    pub fn last_position(&self) -> Option<(f64, f64)> {
        self.times.iter().zip(&self.positions).rev().find(|(_, x)| x.is_finite()).map(|(t, x)| (*t, *x))
    }
}

/// Primary front track over snapshots, with the wake wavenumber measured
/// on the last snapshot behind the front. `origin` is where the front
/// started (the initial perturbation).
pub fn track_primary(snapshots: &[Snapshot], m: f64, threshold: f64, origin: f64) -> Result<FrontTrack> {
    let times = snapshots.iter().map(|s| s.t).collect();
    let positions: Vec<f64> =
        snapshots.iter().map(|s| front_position(s, m, threshold).unwrap_or(f64::NAN)).collect();
    if positions.iter().all(|x| x.is_nan()) {
        return Err(Error::NoFront);
    }
    let mut track = FrontTrack::finish(times, positions);
    let last = snapshots.iter().zip(&track.positions).rev().find(|(_, x)| x.is_finite());
    if let Some((s, &x)) = last {
        match wake_wavenumber(s, wake_window(x, origin)) {
            Ok(w) => track.wake = Some(w),
            Err(e) => track.flags.push(format!("no wake wavenumber: {e}")),
        }
    }
    Ok(track)
}

/// Local period x_{i+2} - x_i from consecutive sign changes of u - m on
/// [lo, hi], paired with its right end.
pub fn local_periods(snapshot: &Snapshot, m: f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let xs = sign_changes(&snapshot.u, snapshot.dx(), lo, hi, m);
    xs.windows(3).map(|w| (w[2], w[2] - w[0])).collect()
}

/// Local periods above this multiple of the primary wavelength count as
/// coarsened.
pub const COARSE_RATIO: f64 = 1.5;

/// Right end of the coarsened region behind the primary front: the last
/// of two consecutive local periods exceeding 1.5 primary wavelengths.
pub fn coarsened_edge(snapshot: &Snapshot, m: f64, lo: f64, hi: f64, k_primary: f64) -> Option<f64> {
    let limit = COARSE_RATIO * 2.0 * PI / k_primary;
    let p = local_periods(snapshot, m, lo, hi);
    (1..p.len()).rev().find(|&i| p[i].1 > limit && p[i - 1].1 > limit).map(|i| p[i].0)
}

/// Secondary (coarsening) front track: the edge of the region whose local
/// period exceeds 1.5 primary wavelengths 2 pi / k_primary.
pub fn detect_secondary_front(
    snapshots: &[Snapshot],
    m: f64,
    primary: &FrontTrack,
    origin: f64,
    k_primary: f64,
) -> Result<FrontTrack> {
    let times = snapshots.iter().map(|s| s.t).collect();
    let positions: Vec<f64> = snapshots
        .iter()
        .zip(&primary.positions)
        .map(|(s, &xf)| {
            if xf.is_finite() { coarsened_edge(s, m, origin, xf, k_primary).unwrap_or(f64::NAN) } else { f64::NAN }
        })
        .collect();
    if positions.iter().all(|x| x.is_nan()) {
        return Err(Error::NoFront);
    }
    let mut track = FrontTrack::finish(times, positions);
    if let Some((s, x)) = snapshots.iter().zip(&track.positions).rev().find(|(_, x)| x.is_finite()) {
        match wake_wavenumber(s, wake_window(*x, origin)) {
            Ok(w) => track.wake = Some(w),
            Err(e) => track.flags.push(format!("no wake wavenumber: {e}")),
        }
    }
    Ok(track)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Locking {
    Locked,
    Unlocked,
}


#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockReport {
    pub primary_speed: f64,
    pub secondary_speed: f64,
    /// Mean separation and its fitted change over the fit window.
    pub separation: f64,
    pub separation_drift: f64,
    pub state: Locking,
}

/// Fronts are locked when their separation changes by less than one
/// primary wavelength over the fit window; position jitter of a whole
/// period makes the speed difference alone unreliable.
pub fn classify_locking(primary: &FrontTrack, secondary: &FrontTrack, wavelength: f64) -> Result<LockReport> {
    let (p, s) = match (primary.speed, secondary.speed) {
        (Some(p), Some(s)) => (p, s),
        _ => return Err(Error::InsufficientData("both fronts need a speed fit".into())),
    };
    let (t, d): (Vec<f64>, Vec<f64>) = primary
        .times
        .iter()
        .zip(primary.positions.iter().zip(&secondary.positions))
        .filter(|(_, (a, b))| a.is_finite() && b.is_finite())
        .map(|(t, (a, b))| (*t, a - b))
        .unzip();
    let fit = front_speed(&t, &d)?;
    let cut = t[0] + TRANSIENT_FRACTION * (t[t.len() - 1] - t[0]);
    let dt = t[t.len() - 1] - cut;
    let drift = fit.speed * dt;
    let state = if drift.abs() < wavelength { Locking::Locked } else { Locking::Unlocked };
    Ok(LockReport {
        primary_speed: p.speed,
        secondary_speed: s.speed,
        separation: d.iter().sum::<f64>() / d.len() as f64,
        separation_drift: drift,
        state,
    })
}

#[derive(Debug, Serialize)]
struct TrackRow {
    t: f64,
    primary_position: f64,
    secondary_position: f64,
    primary_speed: f64,
    secondary_speed: f64,
    wake_k: f64,
}

/// CSV with one row per snapshot time. Speeds and wake_k are the fitted
/// run values, repeated per row; missing values are empty.
pub fn write_track_csv(path: &Path, primary: &FrontTrack, secondary: Option<&FrontTrack>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let nan = f64::NAN;
    let ps = primary.speed.map_or(nan, |f| f.speed);
    let ss = secondary.and_then(|s| s.speed).map_or(nan, |f| f.speed);
    let k = primary.wake.map_or(nan, |w| w.k);
    for (i, t) in primary.times.iter().enumerate() {
        w.serialize(TrackRow {
            t: *t,
            primary_position: primary.positions[i],
            secondary_position: secondary.map_or(nan, |s| s.positions[i]),
            primary_speed: ps,
            secondary_speed: ss,
            wake_k: k,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub m: f64,
    pub s_lin: f64,
    pub k_lin: f64,
    pub primary: FrontTrack,
    /// Wake estimate in the standard window behind the primary front,
    /// whether or not it is coarsened.
    pub wake_behind: Option<WakeEstimate>,
    pub secondary: Option<FrontTrack>,
    pub locking: Option<LockReport>,
}

impl RunSummary {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        serde_json::to_writer_pretty(std::fs::File::create(path)?, self)?;
        Ok(())
    }
}

/// Where the front started: the bump center, or the domain origin.
pub fn front_origin(config: &SimConfig) -> f64 {
    match config.ic {
        InitialCondition::LocalizedBump { center, .. } => center,
        _ => 0.0,
    }
}

/// Primary and (if present) secondary front of a finished run. Coarsening
/// is detected against the linear wake wavenumber k_lin.
pub fn analyze_run(config: &SimConfig, snapshots: &[Snapshot], threshold: f64) -> Result<RunSummary> {
    let alpha = 1.0 - 3.0 * config.m * config.m;
    let lin = spreading_speed(alpha)?;
    let origin = front_origin(config);
    let mut primary = track_primary(snapshots, config.m, threshold, origin)?;
    let wake_behind = primary.wake;
    let secondary = detect_secondary_front(snapshots, config.m, &primary, origin, lin.k_lin).ok();
    if let Some(sec) = &secondary {
        // measure the primary wake between the two fronts only
        let last = snapshots.iter().zip(primary.positions.iter().zip(&sec.positions)).rev();
        if let Some((s, (&xf, &xs))) = last.clone().find(|(_, (xf, _))| xf.is_finite()) {
            let (lo, hi) = wake_window(xf, origin);
            if xs.is_finite() && xs > lo {
                primary.wake = wake_wavenumber(s, (xs, hi)).ok();
                if primary.wake.is_none() {
                    primary.flags.push("no uncoarsened wake between the fronts".into());
                }
            }
        }
    }
    let wavelength = 2.0 * PI / lin.k_lin;
    let locking = secondary.as_ref().and_then(|s| classify_locking(&primary, s, wavelength).ok());
    Ok(RunSummary { m: config.m, s_lin: lin.s, k_lin: lin.k_lin, primary, wake_behind, secondary, locking })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn snap(u: Vec<f64>, length: f64) -> Snapshot {
        Snapshot { t: 0.0, step: 0, length, u, forced_from: None, search_end: None }
    }

    fn sample(n: usize, l: f64, f: impl Fn(f64) -> f64) -> Snapshot {
        snap((0..n).map(|j| f(j as f64 * l / n as f64)).collect(), l)
    }

    #[test]
    fn homogeneous_field_has_no_front() {
        let s = sample(256, 100.0, |_| 0.3);
        assert!(matches!(front_position(&s, 0.3, 0.05), Err(Error::NoFront)));
    }

    #[test]
    fn step_profile_is_located_within_a_cell() {
        let (l, n, x0) = (100.0, 1000, 37.03);
        let s = sample(n, l, |x| if x < x0 { 1.2 } else { 0.2 });
        let x = front_position(&s, 0.2, 0.05).unwrap();
        assert!((x - x0).abs() <= l / n as f64, "{x}");
    }

    #[test]
    fn search_end_excludes_forced_zone() {
        let mut s = sample(1000, 100.0, |x| if x < 30.0 || x > 80.0 { -1.0 } else { 0.2 });
        s.search_end = Some(70.0);
        let x = front_position(&s, 0.2, 0.05).unwrap();
        assert!((x - 30.0).abs() < 0.2, "{x}");
    }

    #[test]
    fn affine_positions_give_exact_speed() {
        let t: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let x: Vec<f64> = t.iter().map(|t| 3.0 + 1.25 * t).collect();
        let fit = front_speed(&t, &x).unwrap();
        assert!((fit.speed - 1.25).abs() < 1e-12);
        assert!(fit.stderr < 1e-10);
    }

    #[test]
    fn short_tracks_are_rejected() {
        let t: Vec<f64> = (0..8).map(|i| i as f64).collect();
        assert!(matches!(front_speed(&t, &t), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn noisy_positions_give_consistent_stderr() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let sigma = 0.5;
        let mut errs = Vec::new();
        let mut ses = Vec::new();
        for _ in 0..200 {
            let t: Vec<f64> = (0..100).map(|i| i as f64).collect();
            let x: Vec<f64> = t
                .iter()
                .map(|t| {
                    // sum of 12 uniforms: unit variance
                    let g: f64 = (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0;
                    2.0 * t + sigma * g
                })
                .collect();
            let fit = front_speed(&t, &x).unwrap();
            errs.push(fit.speed - 2.0);
            ses.push(fit.stderr);
        }
        let bias = errs.iter().sum::<f64>() / errs.len() as f64;
        let rms = (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt();
        let se = ses.iter().sum::<f64>() / ses.len() as f64;
        assert!(bias.abs() < 3.0 * rms / (errs.len() as f64).sqrt());
        assert!((rms / se - 1.0).abs() < 0.2, "rms {rms} vs stderr {se}");
    }

    #[test]
    fn sine_wavenumber_is_recovered() {
        let (k0, l) = (0.7183, 400.0);
        let s = sample(4096, l, |x| 0.2 + (k0 * x).sin());
        let w = wake_wavenumber(&s, (50.0, 350.0)).unwrap();
        assert!((w.k - k0).abs() < 2.0 * PI / 300.0);
        assert!((w.k - k0).abs() < 1e-3 * k0, "{}", w.k);
        assert!((w.k_spectral / w.k - 1.0).abs() < 0.03, "{} vs {}", w.k_spectral, w.k);
        assert!((w.k_count - k0).abs() < 2.0 * PI / 300.0);
    }

    #[test]
    fn flat_window_has_too_few_oscillations() {
        let s = sample(1024, 100.0, |x| 0.2 + 0.5 * (0.05 * x).sin());
        assert!(matches!(wake_wavenumber(&s, (10.0, 90.0)), Err(Error::TooFewOscillations { .. })));
    }

    #[test]
    fn coarsened_region_is_found() {
        let (k, l, edge) = (0.7, 600.0, 250.0);
        let s = sample(8192, l, |x| if x < edge { 0.4 + (0.5 * k * x).sin() } else { 0.4 + (k * x).sin() });
        let e = coarsened_edge(&s, 0.4, 10.0, 550.0, k).unwrap();
        assert!((e - edge).abs() < 4.0 * PI / k, "{e}");
        let t = sample(8192, l, |x| 0.4 + (k * x).sin());
        assert!(coarsened_edge(&t, 0.4, 10.0, 550.0, k).is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn front_position_is_translation_equivariant(x0 in 20.0f64..60.0, shift in 1usize..200) {
            let (n, l) = (2048usize, 100.0);
            let dx = l / n as f64;
            let profile = |x: f64| 0.2 + 0.8 / (1.0 + ((x - x0) / 0.7).exp());
            let a = sample(n, l, profile);
            let d = shift as f64 * dx * 0.5 + 0.123;
            let b = sample(n, l, |x| profile(x - d));
            let xa = front_position(&a, 0.2, 0.05).unwrap();
            let xb = front_position(&b, 0.2, 0.05).unwrap();
            prop_assert!((xb - xa - d).abs() < 2e-3 * dx.max(1.0), "{} vs {}", xb - xa, d);
        }

        #[test]
        fn wavenumber_is_translation_invariant(d in 0.0f64..20.0, k0 in 0.4f64..1.0) {
            let a = sample(4096, 400.0, |x| 0.1 + (k0 * x).cos());
            let b = sample(4096, 400.0, |x| 0.1 + (k0 * (x - d)).cos());
            let ka = wake_wavenumber(&a, (40.0, 360.0)).unwrap().k;
            let kb = wake_wavenumber(&b, (40.0, 360.0)).unwrap().k;
            prop_assert!((ka - kb).abs() < 2e-3 * k0);
        }
    }
}
