//! Properties of the semi-implicit time step: convergence of single-mode
//! growth rates and free-energy monotonicity.

use chfront::simulator::{max_energy_increase, measured_growth_rate, InitialCondition, SimConfig};
use std::f64::consts::PI;

fn main() -> chfront::Result<()> {
    let (m, mode, l) = (0.2, 3, 8.0 * PI);
    let q = 2.0 * PI * mode as f64 / l;
    let exact = q * q * (1.0 - 3.0 * m * m - q * q);
    println!("growth rate of q = {q:.4}: exact {exact:.8}");
    for dt in [0.1, 0.05, 0.025, 0.0125] {
        let g = measured_growth_rate(m, mode, l, dt, 200)?;
        println!("  dt {dt:<7} measured {g:.8}  error {:.2e}", (g - exact).abs());
    }
    let mut cfg = SimConfig::desk(m, 0.0)?;
    cfg.domain_length = 64.0 * PI;
    cfg.n_modes = 1024;
    cfg.ic = InitialCondition::LocalizedBump { amplitude: 0.5, width: 5.0, center: 40.0 };
    for dt in [0.4, 0.1] {
        let rise = max_energy_increase(SimConfig { dt, ..cfg.clone() }, (50.0 / dt) as usize)?;
        println!("dt {dt}: largest per-step free energy change {rise:.3e}");
    }
    Ok(())
}
