//! Closed-form mode-III results used as references.

use std::f64::consts::PI;

/// Strip of width `2L` with `±w0/2` applied on its faces and a
/// semi-infinite crack running at relative speed `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripProblem {
    pub l: f64,
    pub w0: f64,
    pub mu: f64,
    pub v: f64,
    pub beta: f64,
}

impl StripProblem {
    pub fn new(l: f64, w0: f64, mu: f64, v: f64) -> Option<Self> {
        ((0.0..1.0).contains(&v) && l > 0.0 && mu > 0.0).then(|| Self { l, w0, mu, v, beta: (1.0 - v * v).sqrt() })
    }
}

/// Steady-state SIF `−μ w0 √(2β / (L(2βL + 1)))`, with `L` taken as a pure
/// number.
pub fn mandal_sif(p: &StripProblem) -> f64 {
    let (l, b) = (p.l, p.beta);
    -p.mu * p.w0 * (2.0 * b / (l * (2.0 * b * l + 1.0))).sqrt()
}

/// Leading-order near-tip displacement `(2K/μ) √(r/2π) sin(φ/2)`.
pub fn near_tip_displacement(k: f64, mu: f64, r: f64, phi: f64) -> f64 {
    2.0 * k / mu * (r / (2.0 * PI)).sqrt() * (phi / 2.0).sin()
}

/// Crack opening `(4K/μ) √(r/2π)` at distance `r` behind the tip.
pub fn cod_from_sif(k: f64, mu: f64, r: f64) -> f64 {
    4.0 * k / mu * (r / (2.0 * PI)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracture::evaluate_sif;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn table_values() {
        for (v, k) in [(0.2, 0.1627), (0.4, 0.1609), (0.6, 0.1569), (0.8, 0.1477)] {
            let p = StripProblem::new(1.0, 0.2, 1.0, v).unwrap();
            let got = mandal_sif(&p).abs();
            assert!((got - k).abs() < 0.5e-4, "v = {v}: {got}");
        }
        let p = StripProblem::new(1.0, 0.2, 1.0, 0.8).unwrap();
        assert_abs_diff_eq!(mandal_sif(&p).abs(), 0.2 * (1.2f64 / 2.2).sqrt(), epsilon = 1e-15);
        assert_eq!(mandal_sif(&StripProblem::new(1.0, 0.0, 1.0, 0.3).unwrap()), 0.0);
    }

    #[test]
    fn near_tip_examples() {
        assert_eq!(near_tip_displacement(1.0, 1.0, 1.0, 0.0), 0.0);
        assert_abs_diff_eq!(near_tip_displacement(1.0, 1.0, 2.0 * PI, PI), 2.0, epsilon = 1e-15);
        assert_eq!(cod_from_sif(0.0, 1.0, 1.0), 0.0);
        assert_abs_diff_eq!(cod_from_sif(1.0, 1.0, 2.0 * PI), 4.0, epsilon = 1e-15);
        assert!(StripProblem::new(1.0, 0.2, 1.0, 1.0).is_none());
    }

    proptest! {
        #[test]
        fn sif_round_trip(k in 0.0..10.0f64, r in 1e-3..10.0f64, mu in 0.1..10.0f64) {
            let d = cod_from_sif(k, mu, r);
            prop_assert!((evaluate_sif(d / 2.0, -d / 2.0, r, mu) - k).abs() <= 1e-12 * k.max(1.0));
            let up = near_tip_displacement(k, mu, r, PI);
            let down = near_tip_displacement(k, mu, r, -PI);
            prop_assert!((evaluate_sif(up, down, r, mu) - k).abs() <= 1e-12 * k.max(1.0));
        }

        #[test]
        fn odd_in_phi(k in -5.0..5.0f64, r in 1e-3..10.0f64, phi in -PI..PI) {
            prop_assert_eq!(near_tip_displacement(k, 1.0, r, -phi), -near_tip_displacement(k, 1.0, r, phi));
        }

        #[test]
        fn sif_decreases_with_speed(a in 0.0..0.999f64, b in 0.0..0.999f64, w0 in 0.01..1.0f64) {
            prop_assume!(a != b);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let k = |v| mandal_sif(&StripProblem::new(1.0, w0, 1.0, v).unwrap()).abs();
            prop_assert!(k(lo) > k(hi));
        }

        #[test]
        fn homogeneous_in_load(k in -5.0..5.0f64, s in -3.0..3.0f64, w0 in 0.0..1.0f64, v in 0.0..0.99f64) {
            assert_relative_eq!(cod_from_sif(s * k, 1.3, 0.4), s * cod_from_sif(k, 1.3, 0.4), max_relative = 1e-12, epsilon = 1e-15);
            assert_relative_eq!(near_tip_displacement(s * k, 1.3, 0.4, 1.0), s * near_tip_displacement(k, 1.3, 0.4, 1.0), max_relative = 1e-12, epsilon = 1e-15);
            let p = |w| StripProblem::new(1.0, w, 1.0, v).unwrap();
            assert_relative_eq!(mandal_sif(&p(s * w0)), s * mandal_sif(&p(w0)), max_relative = 1e-12, epsilon = 1e-15);
        }
    }
}
