//! Unstable spatial roots of the homogeneous state in the truncated
//! traveling-wave system, in the linear frame and in a fast frame.
//!
//! Usage: `cargo run --release --example morse_counts -- [n_max]`

use chfront::dispersion::{count_unstable_spatial_roots, spreading_speed};
use chfront::Frame;

fn main() -> chfront::Result<()> {
    let n_max: usize = std::env::args().nth(1).map_or(Ok(8), |a| a.parse()).expect("n_max must be an integer");
    let root = spreading_speed(1.0)?;
    let lin = Frame::new(root.s, root.omega);
    let fast = Frame::from_wavenumber(root.s, 1.3);
    println!("{:>3} {:>8} {:>8}", "n", "linear", "k = 1.3");
    for n in 0..=n_max {
        println!(
            "{n:>3} {:>8} {:>8}",
            count_unstable_spatial_roots(&lin, 1.0, n)?,
            count_unstable_spatial_roots(&fast, 1.0, n)?
        );
    }
    Ok(())
}
