//! Mass-dependent parameters and regime classification.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// |m| below this: supercritical ("unstable") regime.
pub const UNSTABLE_BOUND: f64 = 0.447_213_595_499_957_9; // 1/sqrt(5)
/// |m| below this: spinodal regime, u = m linearly unstable.
pub const SPINODAL_BOUND: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Unstable,
    Transitional,
    Stable,
}

/// Which regime boundary a mass sits on, if exactly on one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    /// |m| = 1/sqrt(5)
    SuperSub,
    /// |m| = 1/sqrt(3)
    Spinodal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub m: f64,
    /// 1 - 3 m^2
    pub alpha: f64,
    /// Largest linearly unstable wavenumber, 0 outside the spinodal regime.
    pub k_max: f64,
    /// 2 pi / k_max, infinite outside the spinodal regime.
    pub l_min: f64,
    /// Regime by the open-interval rule. A mass exactly on a boundary is
    /// assigned the regime below it and carries `boundary`.
    pub regime: Regime,
    pub boundary: Option<Boundary>,
}

impl Parameters {
    pub fn from_mass(m: f64) -> Self {
        let alpha = 1.0 - 3.0 * m * m;
        let k_max = if alpha > 0.0 { alpha.sqrt() } else { 0.0 };
        let l_min = if k_max > 0.0 { 2.0 * PI / k_max } else { f64::INFINITY };
        let a = m.abs();
        let on = |b: f64| (a - b).abs() <= 4.0 * f64::EPSILON * b;
        let boundary = if on(UNSTABLE_BOUND) {
            Some(Boundary::SuperSub)
        } else if on(SPINODAL_BOUND) {
            Some(Boundary::Spinodal)
        } else {
            None
        };
        let regime = match boundary {
            Some(Boundary::SuperSub) => Regime::Unstable,
            Some(Boundary::Spinodal) => Regime::Transitional,
            None if a < UNSTABLE_BOUND => Regime::Unstable,
            None if a < SPINODAL_BOUND => Regime::Transitional,
            None => Regime::Stable,
        };
        Self { m, alpha, k_max, l_min, regime, boundary }
    }

    pub fn is_spinodal(&self) -> bool {
        self.alpha > 0.0
    }
}

/// Shorthand for [`Parameters::from_mass`].
pub fn params_from_mass(m: f64) -> Parameters {
    Parameters::from_mass(m)
}

/// Comoving frame of a modulated traveling wave u(x - s t, omega t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub s: f64,
    pub omega: f64,
    pub k: f64,
}

impl Frame {
    pub fn new(s: f64, omega: f64) -> Self {
        Self { s, omega, k: omega / s }
    }

    /// Frame with prescribed wavenumber; omega = k s.
    pub fn from_wavenumber(s: f64, k: f64) -> Self {
        Self { s, omega: k * s, k }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symmetric_mass() {
        let p = params_from_mass(0.0);
        assert_eq!(p.alpha, 1.0);
        assert_eq!(p.k_max, 1.0);
        assert_eq!(p.regime, Regime::Unstable);
        assert!((p.l_min - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn transitional_and_stable() {
        let p = params_from_mass(0.5);
        assert!((p.alpha - 0.25).abs() < 1e-15);
        assert!((p.k_max - 0.5).abs() < 1e-15);
        assert_eq!(p.regime, Regime::Transitional);

        let p = params_from_mass(0.6);
        assert!((p.alpha + 0.08).abs() < 1e-15);
        assert_eq!(p.k_max, 0.0);
        assert_eq!(p.regime, Regime::Stable);
        assert!(p.l_min.is_infinite());
    }

    #[test]
    fn boundaries_are_flagged() {
        let p = params_from_mass(1.0 / 5f64.sqrt());
        assert_eq!(p.boundary, Some(Boundary::SuperSub));
        let p = params_from_mass(-1.0 / 3f64.sqrt());
        assert_eq!(p.boundary, Some(Boundary::Spinodal));
        assert_eq!(params_from_mass(0.3).boundary, None);
    }

    #[test]
    fn frame_identity() {
        let f = Frame::new(1.6223, 1.2422);
        assert!((f.k * f.s - f.omega).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn even_in_mass(m in -1.0f64..1.0) {
            let a = params_from_mass(m);
            let b = params_from_mass(-m);
            prop_assert_eq!(a.alpha, b.alpha);
            prop_assert_eq!(a.k_max, b.k_max);
            prop_assert_eq!(a.regime, b.regime);
            prop_assert_eq!(a.alpha, 1.0 - 3.0 * m * m);
        }

        #[test]
        fn alpha_decreasing(a in 0.0f64..0.577, b in 0.0f64..0.577) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(params_from_mass(lo).alpha >= params_from_mass(hi).alpha);
        }

        #[test]
        fn kmax_squared(m in -0.577f64..0.577) {
            let p = params_from_mass(m);
            prop_assert!((p.k_max * p.k_max - p.alpha).abs() < 1e-14);
        }
    }
}
