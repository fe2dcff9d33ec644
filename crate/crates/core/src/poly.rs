//! Polynomial roots through companion-matrix eigenvalues.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Roots of `coeffs[0] + coeffs[1] z + ... + coeffs[n] z^n` (leading
/// coefficient nonzero), polished by a few Newton steps.
pub fn roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    assert!(lead.norm() > 0.0, "leading coefficient vanishes");
    if n == 0 {
        return Vec::new();
    }
    let mut c = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        c[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        c[(i, n - 1)] = -coeffs[i] / lead;
    }
    // unshifted QR can cycle on sparse companion matrices (e.g. even
    // polynomials); Aberth iteration takes over then
    let mut out: Vec<Complex64> = match c.try_schur(f64::EPSILON, 2000) {
        Some(schur) => {
            let (_, t) = schur.unpack();
            (0..n).map(|i| t[(i, i)]).collect()
        }
        None => aberth(coeffs),
    };
    for z in out.iter_mut() {
        *z = polish(coeffs, *z);
    }
    out
}

/// Simultaneous Aberth-Ehrlich iteration from points on the Cauchy bound.
fn aberth(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n].norm();
    let radius = 1.0 + coeffs[..n].iter().map(|a| a.norm() / lead).fold(0.0, f64::max);
    let mut z: Vec<Complex64> =
        (0..n).map(|k| Complex64::from_polar(0.5 * radius, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / n as f64)).collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (p, dp) = eval(coeffs, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let step = ratio / (1.0 - ratio * repulsion);
            z[i] -= step;
            moved = moved.max(step.norm() / (1.0 + z[i].norm()));
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

fn eval(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

fn polish(coeffs: &[Complex64], mut z: Complex64) -> Complex64 {
    let (mut p, _) = eval(coeffs, z);
    for _ in 0..3 {
        let (_, dp) = eval(coeffs, z);
        if dp.norm() == 0.0 {
            break;
        }
        let cand = z - p / dp;
        let (pc, _) = eval(coeffs, cand);
        if pc.norm() < p.norm() {
            z = cand;
            p = pc;
        } else {
            break;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn even_quartic_terminates() {
        // nu^4 + 0.88 nu^2 + lambda: plain Schur iteration cycles here
        let lambda = c(0.1, 0.3);
        let r = roots(&[lambda, c(0.0, 0.0), c(0.88, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(r.len(), 4);
        for z in r {
            let p = z * z * z * z + 0.88 * z * z + lambda;
            assert!(p.norm() < 1e-12, "{z}: {p}");
        }
    }

    #[test]
    fn quadratic_roots() {
        // z^2 + 1
        let mut r = roots(&[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        r.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((r[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((r[1] - c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn quartic_with_complex_coefficients() {
        let want = [c(1.0, 2.0), c(-0.5, 0.3), c(0.0, -1.0), c(2.0, 0.0)];
        // expand product (z - w_i)
        let mut p = vec![c(1.0, 0.0)];
        for w in want {
            let mut q = vec![c(0.0, 0.0); p.len() + 1];
            for (i, a) in p.iter().enumerate() {
                q[i + 1] += *a;
                q[i] -= *a * w;
            }
            p = q;
        }
        let r = roots(&p);
        for w in want {
            assert!(r.iter().any(|z| (z - w).norm() < 1e-12), "missing {w}");
        }
    }
}
