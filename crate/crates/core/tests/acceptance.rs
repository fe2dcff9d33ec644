//! Acceptance gate: runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_FAILURES` are still evaluated in full and
//! reported as FAIL; they do not fail the process. Any other failure, or a
//! known failure that starts passing, exits nonzero.

use chfront::bloch::{bloch_d, bloch_d_comoving, coarsening_curve, fold_to_cell, solve_bloch_root, Background};
use chfront::cli::tw_trajectory;
use chfront::diagnostics::{analyze_run, Locking, RunSummary, DEFAULT_THRESHOLD};
use chfront::dispersion::{
    closed_form, critical_decay_check, count_unstable_spatial_roots, d0, d_s, d_s_nu, decay_scan, spatial_roots,
    spreading_speed, wavenumber_table,
};
use chfront::equilibria::{
    continue_branch, default_modes, find_equilibrium, temporal_morse_index, Branch, BranchSelect, ContinuationSettings,
};
use chfront::simulator::{max_energy_increase, measured_growth_rate, run_collect, InitialCondition, SimConfig, Simulator};
use chfront::{Frame, Parameters};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::time::Instant;

/// The coarsening continuation does not reach the speed crossover.
const KNOWN_FAILURES: &[usize] = &[8];

type Check = chfront::Result<(bool, String)>;

fn main() {
    let criteria: Vec<(usize, &str, fn() -> Check)> = vec![
        (1, "wavenumber table", c1_wavenumber_table),
        (2, "double-root self-consistency", c2_double_root),
        (3, "scaling law", c3_scaling),
        (4, "spatial root counts", c4_root_counts),
        (5, "critical decay", c5_critical_decay),
        (6, "equilibria and Morse indices", c6_equilibria),
        (7, "Bloch oracle", c7_bloch),
        (8, "coarsening curve", c8_coarsening_curve),
        (9, "Galerkin identities", c9_galerkin),
        (10, "simulation vs linear prediction", c10_simulation),
        (11, "scheme properties", c11_scheme),
        (12, "coarsening phenomenology", c12_phenomenology),
    ];
    let mut unexpected = 0;
    for (id, name, f) in criteria {
        let t0 = Instant::now();
        let (pass, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        let secs = t0.elapsed().as_secs_f64();
        let known = KNOWN_FAILURES.contains(&id);
        let tag = match (pass, known) {
            (true, false) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (known)",
            (true, true) => "PASS (expected failure)",
        };
        println!("criterion {id:>2} {tag}: {name} [{secs:.1} s] {detail}");
        if pass == known {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected result(s)");
        std::process::exit(1);
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn c1_wavenumber_table() -> Check {
    let t0 = Instant::now();
    let t = wavenumber_table(1.0)?;
    let secs = t0.elapsed().as_secs_f64();
    let expect = [(t.k_temp, 0.7071), (t.k_max, 1.0), (t.k_lin, 0.7657), (t.im_nu_lin, 0.8400)];
    let worst = expect.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok((
        worst < 1e-3 && secs < 1.0,
        format!(
            "k_temp {:.4} k_max {:.4} k_lin {:.4} Im nu {:.6}, max abs err {worst:.1e}, {secs:.3} s",
            t.k_temp, t.k_max, t.k_lin, t.im_nu_lin
        ),
    ))
}

/// Durand-Kerner iteration for the monic quartic nu^4 + a nu^2 - s nu + lambda.
fn quartic_roots_oracle(lambda: C, alpha: f64, s: f64) -> [C; 4] {
    let p = |z: C| z * z * z * z + alpha * z * z - s * z + lambda;
    let mut z = [0, 1, 2, 3].map(|i| C::from_polar(1.3, 0.4 + 1.57 * i as f64));
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for i in 0..4 {
            let mut den = C::new(1.0, 0.0);
            for j in 0..4 {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = p(z[i]) / den;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    z
}

fn c2_double_root() -> Check {
    let r = spreading_speed(1.0)?;
    let cf = closed_form(1.0);
    let res = d_s(r.lambda, r.nu, 1.0, r.s).norm().max(d_s_nu(r.nu, 1.0, r.s).norm());
    let seed_rel = rel(r.s, cf.s);
    // dense sampling along lambda* + r: the two colliding roots must end in
    // opposite half planes
    let n = 20_000;
    let r_end = 10.0 * r.s;
    let mut pair: Option<[C; 2]> = None;
    for i in 1..=n {
        let rr = r_end * (i as f64 / n as f64).powi(3);
        let roots = quartic_roots_oracle(r.lambda + rr, 1.0, r.s);
        let reference = pair.unwrap_or([r.nu, r.nu]);
        let mut next = [C::new(0.0, 0.0); 2];
        let mut used = [false; 4];
        for (slot, target) in reference.iter().enumerate() {
            let (best, _) = roots
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, z)| (j, (z - target).norm()))
                .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            used[best] = true;
            next[slot] = roots[best];
        }
        pair = Some(next);
    }
    let [a, b] = pair.unwrap();
    let oracle_pinched = a.re * b.re < 0.0;
    Ok((
        res < 1e-10 && seed_rel < 1e-6 && r.pinched && oracle_pinched,
        format!(
            "s {:.6} omega {:.6}, residual {res:.1e}, vs closed form {seed_rel:.1e}, pinched {} (oracle ends {:.3} / {:.3})",
            r.s, r.omega, r.pinched, a.re, b.re
        ),
    ))
}

fn c3_scaling() -> Check {
    let base = spreading_speed(1.0)?;
    let mut worst = 0.0f64;
    for alpha in [0.25, 0.5, 0.88] {
        let r = spreading_speed(alpha)?;
        let h = alpha.sqrt();
        for (a, b) in [
            (r.s, base.s * alpha.powf(1.5)),
            (r.omega, base.omega * alpha * alpha),
            (r.nu.re, base.nu.re * h),
            (r.nu.im, base.nu.im * h),
            (r.k_lin, base.k_lin * h),
        ] {
            worst = worst.max(rel(a, b));
        }
    }
    Ok((worst < 1e-8, format!("max relative deviation {worst:.1e}")))
}

fn c4_root_counts() -> Check {
    let t0 = Instant::now();
    let r = spreading_speed(1.0)?;
    let lin = Frame::new(r.s, r.omega);
    let mut bad = Vec::new();
    for n in 0..=16usize {
        for k in [1.05, 1.3, 2.0] {
            let got = count_unstable_spatial_roots(&Frame::from_wavenumber(r.s, k), 1.0, n)?;
            if got != 4 * n + 1 {
                bad.push(format!("k={k} n={n}: {got}"));
            }
        }
        // with n = 0 only the mean block exists; its cubic has one unstable root
        let expect = if n == 0 { 1 } else { 4 * n - 1 };
        let got = count_unstable_spatial_roots(&lin, 1.0, n)?;
        if got != expect {
            bad.push(format!("linear frame n={n}: {got}"));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    Ok((
        bad.is_empty() && secs < 1.0,
        format!("n = 0..16, 4n+1 above k_max and 4n-1 at the linear frame (1 at n = 0), {secs:.3} s {bad:?}"),
    ))
}

fn c5_critical_decay() -> Check {
    let r = spreading_speed(1.0)?;
    let full = critical_decay_check(1.0, r.omega, r.s, 32)?;
    let half = decay_scan(1.0, 0.5 * r.omega, r.s, 32, r.nu.re);
    let strip = half.violations.iter().filter(|v| !v.equality).count();
    Ok((
        full.pass && !half.pass && strip > 0,
        format!("linear frame violations {}, subharmonic strip violations {strip}", full.violations.len()),
    ))
}

/// Distinct consecutive (unstable, zero) pairs along a branch.
fn indices(b: &Branch) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for p in &b.points {
        if let (Some(u), Some(z)) = (p.n_unstable, p.n_zero) {
            if out.last() != Some(&(u, z)) {
                out.push((u, z));
            }
        }
    }
    out
}

fn c6_equilibria() -> Check {
    let p2 = Parameters::from_mass(0.2);
    let settings = ContinuationSettings { l_stop: 3.0 * p2.l_min, with_morse: true, ..Default::default() };
    let b1 = continue_branch(0.2, 1, &settings)?;
    let b2 = continue_branch(0.2, 2, &settings)?;
    let ok1 = b1.folds.is_empty() && b1.l_fold_min() >= p2.l_min * (1.0 - 1e-6) && indices(&b1) == vec![(0, 1)];
    let ok2 = b2.l_fold_min() >= 2.0 * p2.l_min * (1.0 - 1e-6) && indices(&b2) == vec![(2, 1)];

    let p5 = Parameters::from_mass(0.5);
    let b5 = continue_branch(0.5, 1, &ContinuationSettings { l_stop: 2.0 * p5.l_min, with_morse: true, ..Default::default() })?;
    let seq5 = indices(&b5);
    let fold_ok = b5.folds.len() == 1 && seq5 == vec![(1, 1), (0, 1)] && {
        let f = b5.folds[0];
        let before = &b5.points[..=f];
        let after = &b5.points[f + 1..];
        before.iter().all(|p| p.n_unstable.map_or(true, |u| u == 1)) && after.iter().all(|p| p.n_unstable.map_or(true, |u| u == 0))
    };

    // index counts at twice the truncation
    let mut stable = true;
    for (m, l, j) in [(0.2, 1.5 * p2.l_min, 1), (0.2, 2.5 * p2.l_min, 2), (0.5, 1.2 * p5.l_min, 1)] {
        for select in [BranchSelect::LargestAmplitude, BranchSelect::SmallestAmplitude] {
            let p = find_equilibrium(l, m, j, select)?;
            let n = default_modes(p.period);
            stable &= temporal_morse_index(&p, n)? == temporal_morse_index(&p, 2 * n)?;
        }
    }
    Ok((
        ok1 && ok2 && fold_ok && stable,
        format!(
            "m=0.2 j=1 {:?}, j=2 {:?}; m=0.5 j=1 {} fold(s) {:?}; truncation stable {stable}",
            indices(&b1),
            indices(&b2),
            b5.folds.len(),
            seq5
        ),
    ))
}

fn c7_bloch() -> Check {
    let m = 0.2;
    let alpha = Parameters::from_mass(m).alpha;
    let period = 9.0;
    let k = 2.0 * PI / period;
    let bg = Background::trivial(m, period);
    let mut worst_fold = 0.0f64;
    for lambda in [C::new(0.1, 0.3), C::new(-0.05, 0.7), C::new(0.2, -0.1)] {
        let folded: Vec<C> = spatial_roots(lambda, alpha, 0.0)
            .into_iter()
            .inspect(|nu| debug_assert!(d0(lambda, *nu, alpha).norm() < 1e-10))
            .map(|nu| fold_to_cell(nu, k))
            .collect();
        let mut hit = [false; 4];
        for nu in &folded {
            let z = fold_to_cell(solve_bloch_root(&bg, lambda, nu + C::new(1e-3, 1e-3))?, k);
            let (j, err) = folded
                .iter()
                .enumerate()
                .map(|(j, w)| (j, (z - w).norm()))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            hit[j] = true;
            worst_fold = worst_fold.max(err);
        }
        if hit.contains(&false) {
            worst_fold = f64::INFINITY;
        }
    }
    let pat = find_equilibrium(1.3 * Parameters::from_mass(m).l_min, m, 1, BranchSelect::LargestAmplitude)?;
    let bg = Background::from_pattern(&pat);
    let kp = bg.k_p();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_sym = 0.0f64;
    for _ in 0..100 {
        let lambda = C::new(rng.gen_range(-0.2..0.2), rng.gen_range(-1.0..1.0));
        let nu = C::new(rng.gen_range(-0.6..0.6), rng.gen_range(-1.0..1.0));
        let s = rng.gen_range(0.0..1.5);
        let d = bloch_d_comoving(&bg, s, lambda, nu)?;
        let shifted = bloch_d_comoving(&bg, s, lambda + C::new(0.0, kp * s), nu + C::new(0.0, kp))?;
        let conj = bloch_d(&bg, lambda.conj(), nu.conj())?;
        let plain = bloch_d(&bg, lambda, nu)?;
        worst_sym = worst_sym.max((d - shifted).norm() / d.norm()).max((conj - plain.conj()).norm() / plain.norm());
    }
    Ok((
        worst_fold < 1e-6 && worst_sym < 1e-8,
        format!("folded root error {worst_fold:.1e}, worst symmetry defect {worst_sym:.1e} over 100 probes"),
    ))
}

fn c8_coarsening_curve() -> Check {
    let masses: Vec<f64> = (0..=48).map(|i| 0.05 + 0.01 * i as f64).collect();
    let curve = coarsening_curve(&masses)?;
    let s: Vec<f64> = curve.points.iter().map(|p| p.s_coars).collect();
    let rises = s.windows(2).any(|w| w[1] > w[0]);
    let falls = s.windows(2).any(|w| w[1] < w[0]);
    let non_monotone = rises && falls;
    let doubling_ok = curve.doubling_m.is_some_and(|m| (0.335..=0.375).contains(&m));
    let crossover_ok = curve.crossover_m.is_some_and(|m| (0.474..=0.514).contains(&m));
    let conj = curve
        .points
        .iter()
        .filter(|p| !p.doubled)
        .map(|p| (1.0 / p.delta_k1 + 1.0 / p.delta_k2 - 1.0).abs())
        .fold(0.0, f64::max);
    Ok((
        non_monotone && doubling_ok && crossover_ok && conj < 1e-6,
        format!(
            "non-monotone {non_monotone}, doubling onset {:?} (ok {doubling_ok}), crossover {:?} (ok {crossover_ok}), conjugate defect {conj:.1e}",
            curve.doubling_m, curve.crossover_m
        ),
    ))
}

fn c9_galerkin() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_e = 0.0f64;
    let mut worst_i = 0.0f64;
    for i in 0..20 {
        let n = [2, 4, 8][i % 3];
        let m = rng.gen_range(0.0..0.4);
        let (check, _) = tw_trajectory(n, m, rng.gen(), 30.0)?;
        worst_e = worst_e.max(check.energy_identity);
        worst_i = worst_i.max(check.first_integral_drift);
    }
    Ok((
        worst_e < 1e-6 && worst_i < 1e-10,
        format!("20 segments, worst energy residual {worst_e:.1e}, worst I drift {worst_i:.1e}"),
    ))
}

fn desk_summary(m: f64) -> chfront::Result<RunSummary> {
    let cfg = SimConfig::desk_auto(m)?;
    let snaps = run_collect(cfg.clone())?;
    analyze_run(&cfg, &snaps, DEFAULT_THRESHOLD)
}

fn c10_simulation() -> Check {
    let runs: Vec<RunSummary> = [0.1, 0.2, 0.3, 0.4].par_iter().map(|&m| desk_summary(m)).collect::<chfront::Result<_>>()?;
    let mut ok = true;
    let mut parts = Vec::new();
    for r in &runs {
        let s = r.primary.speed.map_or(f64::NAN, |f| f.speed);
        let k = r.primary.wake.map_or(f64::NAN, |w| w.k);
        let (es, ek) = (rel(s, r.s_lin), rel(k, r.k_lin));
        ok &= es < 0.05 && ek < 0.05;
        parts.push(format!("m={}: s {:+.2}% k {:+.2}%", r.m, 100.0 * (s / r.s_lin - 1.0), 100.0 * (k / r.k_lin - 1.0)));
    }
    Ok((ok, parts.join(", ")))
}

fn c11_scheme() -> Check {
    let mut cfg = SimConfig::desk(0.2, 0.0)?;
    cfg.wedge = None;
    cfg.n_modes = 1024;
    cfg.domain_length = 64.0 * PI;
    cfg.ic = InitialCondition::LocalizedBump { amplitude: 0.5, width: 5.0, center: 40.0 };
    let mut sim = Simulator::new(cfg.clone())?;
    let m0 = sim.mass();
    let mut bit_constant = true;
    for _ in 0..2000 {
        sim.step()?;
        bit_constant &= sim.mass().to_bits() == m0.to_bits();
    }

    let mut rises = Vec::new();
    for dt in [0.4, 0.2, 0.1, 0.05] {
        let steps = (20.0 / dt) as usize;
        rises.push(max_energy_increase(SimConfig { dt, ..cfg.clone() }, steps)?.max(0.0));
    }
    let energy_ok = rises.windows(2).all(|w| w[1] <= w[0]) && *rises.last().unwrap() < 1e-10;

    let (m, mode, l) = (0.2, 3, 8.0 * PI);
    let q = 2.0 * PI * mode as f64 / l;
    let exact = q * q * (Parameters::from_mass(m).alpha - q * q);
    let errs: Vec<f64> = [0.1, 0.01, 0.001]
        .iter()
        .map(|&dt| measured_growth_rate(m, mode, l, dt, 100).map(|g| (g - exact).abs()))
        .collect::<chfront::Result<_>>()?;
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log10()).collect();
    let order_ok = orders.iter().all(|o| (o - 1.0).abs() < 0.1);
    Ok((
        bit_constant && energy_ok && order_ok,
        format!(
            "mass bit-constant {bit_constant}, energy rises {}, growth-rate orders {orders:.3?}",
            rises.iter().map(|r| format!("{r:.1e}")).collect::<Vec<_>>().join(" ")
        ),
    ))
}

fn c12_phenomenology() -> Check {
    let runs: Vec<RunSummary> =
        [0.45, 0.46, 0.47, 0.48].par_iter().map(|&m| desk_summary(m)).collect::<chfront::Result<_>>()?;
    let state = |r: &RunSummary| r.locking.map(|l| l.state);
    let r45 = &runs[0];
    let ratio = match (r45.primary.wake, r45.secondary.as_ref().and_then(|s| s.wake)) {
        (Some(p), Some(s)) => p.k / s.k,
        _ => f64::NAN,
    };
    let ratio_ok = (ratio - 2.0).abs() <= 0.1;
    let unlocked_46 = state(&runs[1]) == Some(Locking::Unlocked);
    let locked_47 = state(&runs[2]) == Some(Locking::Locked);
    let locked_48 = state(&runs[3]) == Some(Locking::Locked);
    let drifts: Vec<String> = runs
        .iter()
        .map(|r| format!("m={}: {:?}", r.m, r.locking.map(|l| (l.state, (l.separation_drift * 100.0).round() / 100.0))))
        .collect();
    Ok((
        ratio_ok && unlocked_46 && locked_47 && locked_48,
        format!("m=0.45 wake ratio {ratio:.3}; {}", drifts.join(", ")),
    ))
}
