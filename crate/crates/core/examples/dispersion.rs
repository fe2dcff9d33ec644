//! Linear spreading speed, characteristic wavenumbers and the critical
//! decay check for one mass.
//!
//! Usage: `cargo run --release --example dispersion -- [m]`

use chfront::dispersion::{closed_form, critical_decay_check, spreading_speed, WavenumberTable};
use chfront::Parameters;

fn main() -> chfront::Result<()> {
    let m: f64 = std::env::args().nth(1).map_or(Ok(0.2), |a| a.parse()).expect("m must be a number");
    let p = Parameters::from_mass(m);
    let root = spreading_speed(p.alpha)?;
    let cf = closed_form(p.alpha);
    println!("m = {m}, alpha = {:.6}, regime {:?}", p.alpha, p.regime);
    println!("s_lin     {:.10} (closed form {:.10})", root.s, cf.s);
    println!("omega_lin {:.10} (closed form {:.10})", root.omega, cf.omega);
    println!("nu_lin    {:.6} {:+.6}i, pinched {}", root.nu.re, root.nu.im, root.pinched);
    let t = WavenumberTable::new(p.alpha, &root);
    println!("k_temp {:.4}  k_max {:.4}  k_lin {:.4}  Im nu_lin {:.4}", t.k_temp, t.k_max, t.k_lin, t.im_nu_lin);
    let decay = critical_decay_check(p.alpha, root.omega, root.s, 32)?;
    println!("critical decay up to |l| = 32: {}", if decay.pass { "pass" } else { "fail" });
    Ok(())
}
