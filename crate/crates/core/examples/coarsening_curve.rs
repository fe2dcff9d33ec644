//! Coarsening-front speeds along the wake-pattern family.

use chfront::bloch::{coarsening_curve_with, write_curve_csv};

fn main() -> chfront::Result<()> {
    let masses: Vec<f64> = (0..=48).map(|i| 0.05 + 0.01 * i as f64).collect();
    println!("{:>6} {:>10} {:>10} {:>10} {:>10} {:>8}", "m", "s_coars", "s_lin", "dk1", "dk2", "doubled");
    let curve = coarsening_curve_with(&masses, |p| {
        println!(
            "{:>6.3} {:>10.5} {:>10.5} {:>10.5} {:>10.5} {:>8}",
            p.m, p.s_coars, p.s_lin, p.delta_k1, p.delta_k2, p.doubled
        );
    })?;
    println!("doubling onset: {:?}", curve.doubling_m);
    println!("speed crossover: {:?}", curve.crossover_m);
    let out = std::env::temp_dir().join("coarsening_curve.csv");
    write_curve_csv(&curve, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
