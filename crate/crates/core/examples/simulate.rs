//! Runs a small invasion simulation into a directory with snapshots, front
//! track and summary, then re-derives the track from the stored snapshots.
//!
//! Usage: `cargo run --release --example simulate -- [m] [out_dir]`

use chfront::cli::simulate_to_dir;
use chfront::diagnostics::{analyze_run, DEFAULT_THRESHOLD};
use chfront::simulator::{read_snapshot_index, SimConfig};
use std::path::PathBuf;

fn main() -> chfront::Result<()> {
    let mut args = std::env::args().skip(1);
    let m: f64 = args.next().map_or(Ok(0.3), |a| a.parse()).expect("m must be a number");
    let out = args.next().map_or_else(|| std::env::temp_dir().join("chfront_simulate"), PathBuf::from);
    let cfg = SimConfig::desk_auto(m)?;
    println!("L = {:.2}, {} points, dt = {}, t_end = {}", cfg.domain_length, cfg.n_modes, cfg.dt, cfg.t_end);
    let summary = simulate_to_dir(&cfg, &out, None)?;
    println!("wrote {}", out.display());
    if let Some(f) = summary.primary.speed {
        println!("front speed {:.5} (linear {:.5})", f.speed, summary.s_lin);
    }

    // tracking works from the stored snapshots alone
    let snaps = read_snapshot_index(&out.join("snapshots"))?;
    let again = analyze_run(&cfg, &snaps, DEFAULT_THRESHOLD)?;
    println!("re-tracked from {} snapshots: speed {:?}", snaps.len(), again.primary.speed.map(|f| f.speed));
    Ok(())
}
