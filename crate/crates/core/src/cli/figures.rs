//! Figure recipes: branch diagrams, the coarsening curve and the
//! simulation sweeps comparing measured fronts with linear predictions.

use super::plot::{Plot, Series};
use super::{prepare_output, FigureArgs, FigureName, Outcome, RunManifest};
use crate::bloch::{coarsening_curve, write_curve_csv};
use crate::diagnostics::{analyze_run, RunSummary, DEFAULT_THRESHOLD};
use crate::dispersion::spreading_speed;
use crate::equilibria::{continue_branch, write_branch_csv, Branch, ContinuationSettings};
use crate::error::Result;
use crate::params::Parameters;
use crate::simulator::{run_collect, SimConfig};
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

pub fn cmd_figure(a: &FigureArgs) -> Result<Outcome> {
    let name = format!("{:?}", a.name).to_lowercase();
    prepare_output(&a.out, &RunManifest::new(&format!("figure {name}"), &a.out, a.seed.unwrap_or(0)))?;
    match a.name {
        FigureName::Fig1 => {
            let branches = fig1(a.m.unwrap_or(0.2), 3, &a.out)?;
            for b in &branches {
                println!("j = {}: {} points, {} fold(s), indices {:?}", b.j, b.points.len(), b.folds.len(), index_sequence(b));
                if let Some(why) = &b.stopped_early {
                    println!("  stopped early: {why}");
                }
            }
        }
        FigureName::Fig4 => {
            let masses: Vec<f64> = (0..=48).map(|i| 0.05 + 0.01 * i as f64).collect();
            let curve = fig4(&masses, &a.out)?;
            println!("doubling onset: {:?}", curve.doubling_m);
            println!("speed crossover: {:?}", curve.crossover_m);
        }
        FigureName::Fig5 | FigureName::Fig6 => {
            let masses: Vec<f64> = if a.name == FigureName::Fig5 {
                (1..=9).map(|i| 0.05 * i as f64).collect()
            } else {
                vec![0.1, 0.2, 0.3, 0.35, 0.4, 0.43, 0.45, 0.46, 0.47, 0.48, 0.5]
            };
            let rows = sweep(&masses, a.seed.unwrap_or(0))?;
            write_sweep(&rows, &a.out, a.name)?;
            for r in &rows {
                println!(
                    "m = {:.3}: s {:.5} (linear {:.5}), k {:.5} (linear {:.5})",
                    r.m, r.s_measured, r.s_lin, r.k_measured, r.k_lin
                );
            }
        }
    }
    Ok(Outcome::Success)
}

/// Distinct consecutive (unstable, zero) index pairs along a branch.
pub fn index_sequence(b: &Branch) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for p in &b.points {
        if let (Some(u), Some(z)) = (p.n_unstable, p.n_zero) {
            if out.last() != Some(&(u, z)) {
                out.push((u, z));
            }
        }
    }
    out
}

/// Branches j = 1..=j_max at mass m with Morse indices; CSV per branch and
/// an amplitude-versus-period SVG.
pub fn fig1(m: f64, j_max: usize, out: &Path) -> Result<Vec<Branch>> {
    let p = Parameters::from_mass(m);
    let settings = ContinuationSettings { l_stop: (j_max as f64 + 1.0) * p.l_min, with_morse: true, ..Default::default() };
    let branches: Vec<Branch> = (1..=j_max).into_par_iter().map(|j| continue_branch(m, j, &settings)).collect::<Result<_>>()?;
    let mut plot = Plot::new(&format!("Periodic equilibria, m = {m}"), "period L", "amplitude");
    for b in &branches {
        write_branch_csv(b, &out.join(format!("fig1_j{}.csv", b.j)))?;
        let label = index_sequence(b).iter().map(|(u, _)| u.to_string()).collect::<Vec<_>>().join("/");
        plot = plot.with(Series::line(&format!("j = {} (unstable {label})", b.j), b.points.iter().map(|p| (p.l, p.amplitude)).collect()));
    }
    plot.write(&out.join("fig1.svg"))?;
    Ok(branches)
}

/// Coarsening curve with CSV, a speed plot and a wavenumber-ratio plot.
pub fn fig4(masses: &[f64], out: &Path) -> Result<crate::bloch::CoarseningCurve> {
    let curve = coarsening_curve(masses)?;
    write_curve_csv(&curve, &out.join("fig4.csv"))?;
    let pts = |f: &dyn Fn(&crate::bloch::CoarseningPrediction) -> f64| -> Vec<(f64, f64)> {
        curve.points.iter().map(|p| (p.m, f(p))).collect()
    };
    Plot::new("Linear spreading speeds", "m", "s")
        .with(Series::line("coarsening front", pts(&|p| p.s_coars)))
        .with(Series::dashed("primary front", pts(&|p| p.s_lin)))
        .write(&out.join("fig4_speeds.svg"))?;
    Plot::new("Selected wavenumbers", "m", "k_p / k")
        .with(Series::line("delta k1", pts(&|p| p.delta_k1)))
        .with(Series::line("delta k2", pts(&|p| p.delta_k2)))
        .write(&out.join("fig4_wavenumbers.svg"))?;
    Ok(curve)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub m: f64,
    pub s_lin: f64,
    pub s_measured: f64,
    pub s_stderr: f64,
    pub k_lin: f64,
    /// Wake wavenumber in the standard window behind the primary front.
    pub k_measured: f64,
    /// Wavenumber behind the coarsening front, if one was found.
    pub k_secondary: f64,
}

impl SweepRow {
    pub fn from_summary(s: &RunSummary) -> Self {
        let nan = f64::NAN;
        Self {
            m: s.m,
            s_lin: s.s_lin,
            s_measured: s.primary.speed.map_or(nan, |f| f.speed),
            s_stderr: s.primary.speed.map_or(nan, |f| f.stderr),
            k_lin: s.k_lin,
            k_measured: s.wake_behind.map_or(nan, |w| w.k),
            k_secondary: s.secondary.as_ref().and_then(|t| t.wake).map_or(nan, |w| w.k),
        }
    }
}

/// Reduced-domain runs for each mass, in parallel.
pub fn sweep(masses: &[f64], seed: u64) -> Result<Vec<SweepRow>> {
    masses
        .par_iter()
        .map(|&m| {
            let cfg = SimConfig { seed, ..SimConfig::desk_auto(m)? };
            let snaps = run_collect(cfg.clone())?;
            Ok(SweepRow::from_summary(&analyze_run(&cfg, &snaps, DEFAULT_THRESHOLD)?))
        })
        .collect()
}

fn write_sweep(rows: &[SweepRow], out: &Path, name: FigureName) -> Result<()> {
    let tag = format!("{name:?}").to_lowercase();
    let mut w = csv::Writer::from_path(out.join(format!("{tag}.csv")))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let fine: Vec<f64> = (0..=57).map(|i| 0.01 * i as f64).collect();
    let lin = |f: &dyn Fn(f64) -> f64| -> Vec<(f64, f64)> { fine.iter().map(|&m| (m, f(m))).collect() };
    let alpha = |m: f64| Parameters::from_mass(m).alpha;
    let plot = match name {
        FigureName::Fig5 => Plot::new("Spinodal decomposition front speeds", "m", "s")
            .with(Series::line("linear prediction", lin(&|m| spreading_speed(alpha(m)).map_or(f64::NAN, |r| r.s))))
            .with(Series::markers("measured", rows.iter().map(|r| (r.m, r.s_measured)).collect())),
        _ => Plot::new("Wake wavenumbers", "m", "k")
            .with(Series::line("linear prediction", lin(&|m| spreading_speed(alpha(m)).map_or(f64::NAN, |r| r.k_lin))))
            .with(Series::markers("measured", rows.iter().map(|r| (r.m, r.k_measured)).collect())),
    };
    plot.write(&out.join(format!("{tag}.svg")))
}
