//! Reduced-domain invasion run: measured front speed and wake wavenumber
//! against the linear prediction.
//!
//! Usage: `cargo run --release --example front_speed -- [m] [t_end]`

use chfront::diagnostics::{analyze_run, DEFAULT_THRESHOLD};
use chfront::simulator::{run_collect, SimConfig};

fn main() -> chfront::Result<()> {
    let mut args = std::env::args().skip(1);
    let m: f64 = args.next().map_or(Ok(0.2), |a| a.parse()).expect("m must be a number");
    let cfg0 = SimConfig::desk_auto(m)?;
    let t_end: f64 = args.next().map_or(Ok(cfg0.t_end), |a| a.parse()).expect("t_end must be a number");
    let cfg = SimConfig { t_end, ..cfg0 };
    let snaps = run_collect(cfg.clone())?;
    let summary = analyze_run(&cfg, &snaps, DEFAULT_THRESHOLD)?;
    println!("m = {m}, t_end = {t_end}");
    if let Some(fit) = summary.primary.speed {
        println!("front speed {:.5} +- {:.1e} (linear {:.5}, rel. diff {:+.2}%)", fit.speed, fit.stderr, summary.s_lin,
            100.0 * (fit.speed / summary.s_lin - 1.0));
    }
    if let Some(w) = summary.primary.wake {
        println!("wake k {:.5} (spectral {:.5}, linear {:.5}, rel. diff {:+.2}%)", w.k, w.k_spectral, summary.k_lin,
            100.0 * (w.k / summary.k_lin - 1.0));
    }
    if let Some(sec) = &summary.secondary {
        println!("secondary front: speed {:?}, wake k {:?}", sec.speed.map(|f| f.speed), sec.wake.map(|w| w.k));
        if let (Some(p), Some(s)) = (summary.primary.wake, sec.wake) {
            println!("wake wavenumber ratio primary/secondary {:.4}", p.k / s.k);
        }
        let tail: Vec<String> = sec.times.iter().zip(sec.positions.iter().zip(&summary.primary.positions))
            .rev().step_by(10).take(8).map(|(t, (s, p))| format!("t={t:.0}: {p:.1}/{s:.1}")).collect();
        println!("positions primary/secondary: {}", tail.join(", "));
    }
    if let Some(lock) = summary.locking {
        println!("locking: {lock:?}");
    }
    for f in &summary.primary.flags {
        println!("flag: {f}");
    }
    Ok(())
}
