//! Galerkin truncation of the modulated traveling-wave system: integrates a
//! trajectory leaving the homogeneous state and checks the energy balance
//! and the first integral.
//!
//! Usage: `cargo run --release --example traveling_wave -- [n] [m] [seed]`

use chfront::cli::tw_trajectory;

fn main() -> chfront::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(Ok(8), |a| a.parse()).expect("n must be an integer");
    let m: f64 = args.next().map_or(Ok(0.2), |a| a.parse()).expect("m must be a number");
    let seed: u64 = args.next().map_or(Ok(0), |a| a.parse()).expect("seed must be an integer");
    let (check, traj) = tw_trajectory(n, m, seed, 50.0)?;
    for s in traj.samples.iter().step_by(10) {
        println!("xi {:>6.2}  E {:>14.8e}  I {:>12.8}  distance {:.3e}", s.xi, s.e, s.i, s.distance);
    }
    if let Some(xi) = check.blowup {
        println!("left the bounded region at xi = {xi:.3}");
    }
    println!("energy identity residual {:.2e}, first integral drift {:.2e}", check.energy_identity, check.first_integral_drift);
    Ok(())
}
