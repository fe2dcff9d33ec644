//! Periodic equilibria: all solutions at one period, and a continued branch
//! with temporal Morse indices and folds.
//!
//! Usage: `cargo run --release --example equilibria -- [m] [j]`

use chfront::equilibria::{continue_branch, find_equilibria, ContinuationSettings};
use chfront::Parameters;

fn main() -> chfront::Result<()> {
    let mut args = std::env::args().skip(1);
    let m: f64 = args.next().map_or(Ok(0.5), |a| a.parse()).expect("m must be a number");
    let j: usize = args.next().map_or(Ok(1), |a| a.parse()).expect("j must be an integer");
    let p = Parameters::from_mass(m);
    println!("m = {m}, L_min = {:.4}, regime {:?}", p.l_min, p.regime);

    let l = 1.05 * j as f64 * p.l_min;
    for pat in find_equilibria(l, m, j)? {
        let pat = pat.with_morse()?;
        println!("L = {l:.4}: amplitude {:.5}, mu {:.6}, Morse {:?}", pat.amplitude, pat.mu, pat.morse);
    }

    let settings = ContinuationSettings { l_stop: 2.0 * j as f64 * p.l_min, with_morse: true, ..Default::default() };
    let branch = continue_branch(m, j, &settings)?;
    println!("branch j = {j}: {} points, folds after points {:?}", branch.points.len(), branch.folds);
    if let Some(why) = &branch.stopped_early {
        println!("stopped early: {why}");
    }
    for q in branch.points.iter().step_by((branch.points.len() / 12).max(1)) {
        println!("  L {:>8.4}  amplitude {:.5}  unstable {:?}  zero {:?}", q.l, q.amplitude, q.n_unstable, q.n_zero);
    }
    Ok(())
}
