//! Branch diagram and simulation sweep figures written as CSV and SVG.
//!
//! Usage: `cargo run --release --example figures -- [out_dir]`

use chfront::cli::figures::{fig1, sweep};
use std::path::PathBuf;

fn main() -> chfront::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("chfront_figures"), PathBuf::from);
    std::fs::create_dir_all(&out)?;
    for b in fig1(0.5, 2, &out)? {
        println!("j = {}: {} points, {} fold(s)", b.j, b.points.len(), b.folds.len());
    }
    for r in sweep(&[0.1, 0.2, 0.3], 0)? {
        println!("m = {:.2}: s {:.5} (linear {:.5}), k {:.5} (linear {:.5})", r.m, r.s_measured, r.s_lin, r.k_measured, r.k_lin);
    }
    println!("wrote {}", out.display());
    Ok(())
}
