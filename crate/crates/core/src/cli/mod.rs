//! Command-line driver: argument parsing, run manifests, JSON configs and
//! the subcommands that bind the library together.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 failed check.

pub mod figures;
pub mod plot;

use crate::diagnostics::{analyze_run, write_track_csv, RunSummary, DEFAULT_THRESHOLD};
use crate::dispersion::{closed_form, critical_decay_check, spreading_speed, wavenumber_table};
use crate::equilibria::{continue_branch, find_equilibria, write_branch_csv, ContinuationSettings};
use crate::error::{Error, Result};
use crate::galerkin_tw::{
    first_integral_drift, integrate_tw, verify_energy_identity, write_trajectory_csv, Galerkin, TwSettings,
};
use crate::params::{Frame, Parameters};
use crate::simulator::{read_snapshot_index, SimConfig, Simulator, Snapshot, SnapshotWriter};
use clap::{Args, Parser, Subcommand, ValueEnum};
use plot::{Plot, Series};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

/// Energy-identity residual accepted by `tw --check-identities`.
pub const ENERGY_IDENTITY_TOL: f64 = 1e-6;
/// First-integral drift accepted by `tw --check-identities`.
pub const FIRST_INTEGRAL_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "chfront", version, about = "Invasion fronts in the 1D Cahn-Hilliard equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Linear spreading speed, wavenumbers and the critical-decay scan.
    Disperse(DisperseArgs),
    /// Periodic equilibria at a given period, or a continued branch.
    Equilibria(EquilibriaArgs),
    /// Coarsening-front prediction from the Bloch dispersion relation.
    Bloch(BlochArgs),
    /// Direct simulation with front tracking.
    Simulate(SimulateArgs),
    /// Galerkin traveling-wave trajectory with identity checks.
    Tw(TwArgs),
    /// Data and SVG for one of the figure recipes.
    Figure(FigureArgs),
    /// Front tracking on the snapshots of a finished simulation.
    Track(TrackArgs),
}

#[derive(Debug, Args)]
pub struct DisperseArgs {
    #[arg(long, conflicts_with = "alpha", allow_hyphen_values = true)]
    pub m: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Scan all Fourier indices up to --lmax for decay faster than nu_lin.
    #[arg(long)]
    pub check_decay: bool,
    #[arg(long, default_value_t = 32)]
    pub lmax: usize,
    /// Write the table as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EquilibriaArgs {
    #[arg(long, default_value_t = 0.2, allow_hyphen_values = true)]
    pub m: f64,
    /// Number of maxima per period.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Period L; without it the whole branch is continued.
    #[arg(long)]
    pub domain: Option<f64>,
    /// Output directory for the branch CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BlochArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub m: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON simulation config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    pub modes: Option<usize>,
    /// Domain length.
    #[arg(long)]
    pub domain: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub tend: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TwArgs {
    /// Galerkin truncation order.
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 0.2, allow_hyphen_values = true)]
    pub m: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// End of the xi interval.
    #[arg(long, default_value_t = 50.0)]
    pub tend: f64,
    /// Check the energy balance and first-integral conservation.
    #[arg(long)]
    pub check_identities: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureName {
    /// Branch diagram with Morse indices.
    Fig1,
    /// Coarsening-front speeds and wavenumbers.
    Fig4,
    /// Measured front speeds against the linear prediction.
    Fig5,
    /// Measured wake wavenumbers against the linear prediction.
    Fig6,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    pub name: FigureName,
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Output directory of a `simulate` run.
    pub run_dir: PathBuf,
    /// Where to write track.csv and summary.json (default: the run dir).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Written to the output directory before any computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub version: String,
    /// SHA-256 of the effective config, when there is one.
    pub config_sha256: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str, output_dir: &Path, seed: u64) -> Self {
        Self {
            command: command.into(),
            args: std::env::args().skip(1).collect(),
            config_path: None,
            output_dir: output_dir.to_path_buf(),
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            config_sha256: None,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Creates `dir` with the manifest inside. A new directory is assembled
/// under a temporary name and renamed into place; an existing one is
/// reused and its manifest replaced.
pub fn prepare_output(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let body = serde_json::to_vec_pretty(manifest)?;
    if dir.is_dir() {
        write_atomic(&dir.join("manifest.json"), &body)?;
        return Ok(());
    }
    let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(parent)?;
    let name = dir.file_name().ok_or_else(|| Error::InvalidInput(format!("bad output path {}", dir.display())))?;
    let tmp = parent.join(format!(".{}.partial-{}", name.to_string_lossy(), std::process::id()));
    std::fs::create_dir_all(&tmp)?;
    std::fs::write(tmp.join("manifest.json"), &body)?;
    std::fs::rename(&tmp, dir)?;
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn config_error<E: std::fmt::Display>(path: &str, e: E, line: usize, column: usize) -> Error {
    let msg = e.to_string();
    // serde names missing fields in the message, not in the path
    let field = match msg.split('`').nth(1) {
        Some(f) if msg.starts_with("missing field") => {
            if path == "." || path.is_empty() { f.to_string() } else { format!("{path}.{f}") }
        }
        _ => path.to_string(),
    };
    Error::Config { field, message: format!("line {line} column {column}: {msg}") }
}

/// Parses a JSON document, reporting the failing field and position.
pub fn parse_config<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let (l, c) = (inner.line(), inner.column());
        config_error(&path, inner, l, c)
    })
}

pub fn load_sim_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg: SimConfig = parse_config(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Exit code for an error: 2 for configuration and input errors, 3 for
/// numerical failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Json(_) | Error::InvalidInput(_) | Error::NoInstability { .. } => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    CheckFailed,
}

/// Parses `args` (program name first) and runs the command; returns the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(Outcome::Success) => EXIT_OK,
        Ok(Outcome::CheckFailed) => EXIT_CHECK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Disperse(a) => cmd_disperse(a),
        Command::Equilibria(a) => cmd_equilibria(a),
        Command::Bloch(a) => cmd_bloch(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Tw(a) => cmd_tw(a),
        Command::Figure(a) => figures::cmd_figure(a),
        Command::Track(a) => cmd_track(a),
    }
}

#[derive(Debug, Serialize)]
struct DisperseReport {
    alpha: f64,
    k_temp: f64,
    k_max: f64,
    k_lin: f64,
    im_nu_lin: f64,
    s_lin: f64,
    omega_lin: f64,
    re_nu_lin: f64,
    closed_form: crate::dispersion::ClosedForm,
    max_relative_discrepancy: f64,
    critical_decay_pass: Option<bool>,
}

pub fn cmd_disperse(a: &DisperseArgs) -> Result<Outcome> {
    let alpha = match (a.m, a.alpha) {
        (Some(m), None) => Parameters::from_mass(m).alpha,
        (None, Some(al)) => al,
        (None, None) => 1.0,
        (Some(_), Some(_)) => return Err(Error::InvalidInput("give --m or --alpha, not both".into())),
    };
    let root = spreading_speed(alpha)?;
    let table = wavenumber_table(alpha)?;
    let cf = closed_form(alpha);
    println!("alpha = {alpha}");
    println!("{:<12} {:>14} {:>14} {:>10}", "", "closed form", "Newton", "rel. diff");
    let rows = [
        ("s_lin", cf.s, root.s),
        ("omega_lin", cf.omega, root.omega),
        ("Re nu_lin", cf.re_nu, root.nu.re),
        ("Im nu_lin", cf.im_nu, root.nu.im),
        ("k_lin", cf.k_lin, root.k_lin),
    ];
    let mut worst = 0.0f64;
    for (name, c, n) in rows {
        let d = ((n - c) / c).abs();
        worst = worst.max(d);
        println!("{name:<12} {c:>14.10} {n:>14.10} {d:>10.1e}");
    }
    println!("{:<10} {:>8} {:>8} {:>8} {:>10}", "", "k_temp", "k_max", "k_lin", "Im nu_lin");
    println!(
        "{:<10} {:>8.4} {:>8.4} {:>8.4} {:>10.4}",
        "wavenumber", table.k_temp, table.k_max, table.k_lin, table.im_nu_lin
    );
    let mut decay = None;
    if a.check_decay {
        let report = critical_decay_check(alpha, root.omega, root.s, a.lmax)?;
        println!("critical decay: {}", if report.pass { "PASS" } else { "FAIL" });
        for v in &report.violations {
            println!("  violation at ell = {}: nu = {:.6} {:+.6}i", v.ell, v.nu.0, v.nu.1);
        }
        decay = Some(report.pass);
    }
    if let Some(out) = &a.out {
        let report = DisperseReport {
            alpha,
            k_temp: table.k_temp,
            k_max: table.k_max,
            k_lin: table.k_lin,
            im_nu_lin: table.im_nu_lin,
            s_lin: root.s,
            omega_lin: root.omega,
            re_nu_lin: root.nu.re,
            closed_form: cf,
            max_relative_discrepancy: worst,
            critical_decay_pass: decay,
        };
        std::fs::write(out, serde_json::to_vec_pretty(&report)?)?;
    }
    Ok(if decay == Some(false) { Outcome::CheckFailed } else { Outcome::Success })
}

pub fn cmd_equilibria(a: &EquilibriaArgs) -> Result<Outcome> {
    let p = Parameters::from_mass(a.m);
    if !p.is_spinodal() {
        return Err(Error::NoInstability { alpha: p.alpha });
    }
    if let Some(l) = a.domain {
        let sols = find_equilibria(l, a.m, a.n)?;
        println!("m = {}, L = {l}, j = {}: {} solution(s)", a.m, a.n, sols.len());
        println!("{:>12} {:>12} {:>10} {:>6}", "amplitude", "mu", "unstable", "zero");
        for s in sols {
            let s = s.with_morse()?;
            let mi = s.morse.expect("computed above");
            println!("{:>12.6} {:>12.6} {:>10} {:>6}", s.amplitude, s.mu, mi.n_unstable, mi.n_zero);
        }
        return Ok(Outcome::Success);
    }
    let settings =
        ContinuationSettings { l_stop: (a.n as f64 + 2.0) * p.l_min, with_morse: true, ..ContinuationSettings::default() };
    let branch = continue_branch(a.m, a.n, &settings)?;
    println!(
        "m = {}, j = {}: {} points, L from {:.4} to {:.4}, {} fold(s)",
        a.m,
        a.n,
        branch.points.len(),
        branch.l_fold_min(),
        branch.points.last().map_or(f64::NAN, |p| p.l),
        branch.folds.len()
    );
    let mut last = None;
    for pt in &branch.points {
        let idx = (pt.n_unstable, pt.n_zero);
        if last != Some(idx) {
            println!("  from L = {:.4}: unstable {:?}, zero {:?}", pt.l, pt.n_unstable, pt.n_zero);
            last = Some(idx);
        }
    }
    if let Some(out) = &a.out {
        prepare_output(out, &RunManifest::new("equilibria", out, 0))?;
        write_branch_csv(&branch, &out.join(format!("branch_m{}_j{}.csv", a.m, a.n)))?;
    }
    Ok(Outcome::Success)
}

pub fn cmd_bloch(a: &BlochArgs) -> Result<Outcome> {
    let p = Parameters::from_mass(a.m);
    if !p.is_spinodal() {
        return Err(Error::NoInstability { alpha: p.alpha });
    }
    // continue from small mass, where the homotopy start is reliable
    let m_abs = a.m.abs();
    let start = 0.05f64.min(m_abs);
    let steps = ((m_abs - start) / 0.01).ceil() as usize;
    let masses: Vec<f64> = (0..=steps).map(|i| (start + 0.01 * i as f64).min(m_abs)).collect();
    let curve = crate::bloch::coarsening_curve(&masses)?;
    let pt = curve.points.last().expect("nonempty mass list");
    println!("m = {m_abs}");
    println!("s_coars     {:.6}", pt.s_coars);
    println!("omega       {:.6}", pt.omega_coars);
    println!("nu          {:.6} {:+.6}i", pt.nu_coars.re, pt.nu_coars.im);
    println!("k_p / k     {:.6}", pt.ratio);
    println!("delta_k     {:.6} {:.6}", pt.delta_k1, pt.delta_k2);
    println!("doubled     {}", pt.doubled);
    println!("s_lin       {:.6}", pt.s_lin);
    if let Some(out) = &a.out {
        prepare_output(out, &RunManifest::new("bloch", out, 0))?;
        crate::bloch::write_curve_csv(&curve, &out.join("coarsening_curve.csv"))?;
    }
    Ok(Outcome::Success)
}

fn apply_overrides(cfg: &mut SimConfig, a: &SimulateArgs) {
    if let Some(v) = a.m {
        cfg.m = v;
    }
    if let Some(v) = a.modes {
        cfg.n_modes = v;
    }
    if let Some(v) = a.domain {
        cfg.domain_length = v;
    }
    if let Some(v) = a.dt {
        cfg.dt = v;
    }
    if let Some(v) = a.tend {
        cfg.t_end = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<Outcome> {
    let mut cfg = match &a.config {
        Some(p) => load_sim_config(p)?,
        None => SimConfig::desk_auto(a.m.unwrap_or(0.2))?,
    };
    apply_overrides(&mut cfg, a);
    cfg.validate()?;
    let summary = simulate_to_dir(&cfg, &a.out, a.config.clone())?;
    print_summary(&summary);
    Ok(Outcome::Success)
}

/// Runs `cfg` with output in `out`: manifest, config.json, snapshots and
/// their index, track.csv, summary.json and a front-position plot. A run
/// with a matching config and snapshot index resumes from its last
/// snapshot.
pub fn simulate_to_dir(cfg: &SimConfig, out: &Path, config_path: Option<PathBuf>) -> Result<RunSummary> {
    let cfg_json = serde_json::to_vec_pretty(cfg)?;
    let mut manifest = RunManifest::new("simulate", out, cfg.seed);
    manifest.config_path = config_path;
    manifest.config_sha256 = Some(sha256_hex(&cfg_json));
    let resumable = out.join("config.json").is_file()
        && std::fs::read(out.join("config.json")).map(|b| b == cfg_json).unwrap_or(false)
        && out.join("snapshots").join("index.json").is_file();
    prepare_output(out, &manifest)?;
    write_atomic(&out.join("config.json"), &cfg_json)?;
    let snap_dir = out.join("snapshots");
    let mut snapshots: Vec<Snapshot> = if resumable { read_snapshot_index(&snap_dir)? } else { Vec::new() };
    let mut sim = match snapshots.last() {
        Some(last) if cfg.snapshot_every > 0 => Simulator::resume(cfg.clone(), last)?,
        _ => {
            snapshots.clear();
            Simulator::new(cfg.clone())?
        }
    };
    let mut writer = SnapshotWriter::resume(&snap_dir, snapshots.len())?;
    sim.run(|s| {
        writer.push(s)?;
        snapshots.push(s.clone());
        Ok(())
    })?;
    let summary = analyze_run(cfg, &snapshots, DEFAULT_THRESHOLD)?;
    write_run_outputs(out, &summary)?;
    Ok(summary)
}

fn write_run_outputs(out: &Path, summary: &RunSummary) -> Result<()> {
    write_track_csv(&out.join("track.csv"), &summary.primary, summary.secondary.as_ref())?;
    summary.write_json(&out.join("summary.json"))?;
    let pts = |t: &crate::diagnostics::FrontTrack| -> Vec<(f64, f64)> {
        t.times.iter().zip(&t.positions).map(|(a, b)| (*a, *b)).collect()
    };
    let mut plot = Plot::new(&format!("Front positions, m = {}", summary.m), "t", "x").with(Series::line("primary", pts(&summary.primary)));
    if let Some(sec) = &summary.secondary {
        plot = plot.with(Series::markers("secondary", pts(sec)));
    }
    plot.write(&out.join("fronts.svg"))
}

fn print_summary(s: &RunSummary) {
    println!("m = {}", s.m);
    match s.primary.speed {
        Some(f) => println!(
            "primary speed {:.5} +- {:.1e}  (linear {:.5}, {:+.2}%)",
            f.speed,
            f.stderr,
            s.s_lin,
            100.0 * (f.speed / s.s_lin - 1.0)
        ),
        None => println!("primary speed: none"),
    }
    if let Some(w) = s.primary.wake {
        println!("primary wake k {:.5}  (linear {:.5}, {:+.2}%)", w.k, s.k_lin, 100.0 * (w.k / s.k_lin - 1.0));
    }
    if let Some(sec) = &s.secondary {
        if let Some(f) = sec.speed {
            println!("secondary speed {:.5} +- {:.1e}", f.speed, f.stderr);
        }
        if let Some(w) = sec.wake {
            println!("secondary wake k {:.5}", w.k);
        }
    }
    if let Some(l) = s.locking {
        println!("fronts {:?}: separation {:.1}, drift {:.2}", l.state, l.separation, l.separation_drift);
    }
    for f in &s.primary.flags {
        println!("note: {f}");
    }
}

pub fn cmd_track(a: &TrackArgs) -> Result<Outcome> {
    let cfg = load_sim_config(&a.run_dir.join("config.json"))?;
    let snapshots = read_snapshot_index(&a.run_dir.join("snapshots"))?;
    let summary = analyze_run(&cfg, &snapshots, DEFAULT_THRESHOLD)?;
    let out = a.out.clone().unwrap_or_else(|| a.run_dir.clone());
    let mut manifest = RunManifest::new("track", &out, cfg.seed);
    manifest.config_path = Some(a.run_dir.join("config.json"));
    prepare_output(&out, &manifest)?;
    write_run_outputs(&out, &summary)?;
    print_summary(&summary);
    Ok(Outcome::Success)
}

/// Comoving frame (s_lin, omega_lin) for mass m.
pub fn linear_frame(m: f64) -> Result<Frame> {
    let r = spreading_speed(Parameters::from_mass(m).alpha)?;
    Ok(Frame::new(r.s, r.omega))
}

/// Identity residuals of one Galerkin trajectory started near the
/// homogeneous state.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TwCheck {
    pub energy_identity: f64,
    pub first_integral_drift: f64,
    pub e_start: f64,
    pub e_end: f64,
    pub xi_end: f64,
    pub blowup: Option<f64>,
}

impl TwCheck {
    pub fn pass(&self) -> bool {
        self.energy_identity < ENERGY_IDENTITY_TOL && self.first_integral_drift < FIRST_INTEGRAL_TOL
    }
}

pub fn tw_trajectory(n: usize, m: f64, seed: u64, xi_end: f64) -> Result<(TwCheck, crate::galerkin_tw::Trajectory)> {
    let g = Galerkin::new(n, linear_frame(m)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let st = g.unstable_seed(m, 1e-4, &mut rng)?;
    let traj = integrate_tw(&g, &st, &TwSettings { xi_end, ..TwSettings::default() }, &|s| g.equilibrium_defect(s))?;
    let last = traj.samples.last().expect("at least the initial sample");
    let check = TwCheck {
        energy_identity: verify_energy_identity(&traj),
        first_integral_drift: first_integral_drift(&traj),
        e_start: traj.samples[0].e,
        e_end: last.e,
        xi_end: last.xi,
        blowup: traj.blowup,
    };
    Ok((check, traj))
}

pub fn cmd_tw(a: &TwArgs) -> Result<Outcome> {
    if let Some(out) = &a.out {
        prepare_output(out, &RunManifest::new("tw", out, a.seed))?;
    }
    let (check, traj) = tw_trajectory(a.n, a.m, a.seed, a.tend)?;
    println!("n = {}, m = {}, seed = {}", a.n, a.m, a.seed);
    println!("E: {:.10e} -> {:.10e} over xi in [0, {:.2}]", check.e_start, check.e_end, check.xi_end);
    if let Some(xi) = check.blowup {
        println!("left the bounded region at xi = {xi:.3}");
    }
    println!("energy identity residual {:.2e}", check.energy_identity);
    println!("first integral drift     {:.2e}", check.first_integral_drift);
    if let Some(out) = &a.out {
        write_trajectory_csv(&traj, &out.join(format!("tw_n{}_m{}_seed{}.csv", a.n, a.m, a.seed)))?;
    }
    if a.check_identities {
        println!("identities: {}", if check.pass() { "PASS" } else { "FAIL" });
        if !check.pass() {
            return Ok(Outcome::CheckFailed);
        }
    }
    Ok(Outcome::Success)
}
