//! Bloch dispersion relation of the wake pattern at one mass and its pinched
//! double root, the linear spreading speed of a coarsening front.
//!
//! Usage: `cargo run --release --example bloch_root -- [m]`

use chfront::bloch::{homotopy_root, prediction, wake_pattern};

fn main() -> chfront::Result<()> {
    let m: f64 = std::env::args().nth(1).map_or(Ok(0.2), |a| a.parse()).expect("m must be a number");
    let pattern = wake_pattern(m)?;
    println!("wake pattern: period {:.5}, amplitude {:.5}", pattern.period, pattern.amplitude);
    let root = homotopy_root(&pattern)?;
    let p = prediction(&pattern, &root);
    println!("s_coars {:.6} (primary front {:.6})", p.s_coars, p.s_lin);
    println!("omega {:.6}, nu {:.6} {:+.6}i, absolute determinant residual {:.1e}", root.omega, root.nu.re, root.nu.im, root.residual);
    println!("delta k1 {:.6}, delta k2 {:.6}, period doubled {}", p.delta_k1, p.delta_k2, p.doubled);
    Ok(())
}
