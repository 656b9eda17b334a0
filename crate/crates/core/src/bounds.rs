//! Worst-case approximation constants for the randomized rounding, and
//! the ratio predicate that checks rounded objectives against them.
//!
//! For the two-slot problem the rounding is a mu-approximation with
//! mu = 54 M^2 / pi (real field) or 24 M / sqrt(pi) (complex). For the
//! multi-slot problem the constant is 27 (sum_i P_i sqrt(Q - P_i + 1))^2 / pi
//! (real) or 12 sum_i P_i (Q - P_i + 1) / sqrt(pi) (complex). Each constant
//! is three times the sampling threshold used in its proof, and a single
//! trial meets that threshold with probability at least
//! sigma = (2 - sqrt(pi)) / 3, independent of problem size.

use crate::instance::{Field, Model};

#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

use core::f64::consts::PI;

/// Approximation constant bundle for one (model, field) combination.
#[derive(Clone, Copy, Debug)]
pub struct BoundReport {
    /// Worst-case ratio constant; rounded objective <= mu * relaxation
    /// objective whenever the per-trial success event fires.
    pub mu: f64,
    /// Sampling threshold from the proof; `mu = 3 * alpha_thresh`.
    pub alpha_thresh: f64,
    /// Per-trial success probability lower bound, `(2 - sqrt(pi)) / 3`.
    pub sigma: f64,
    /// Which problem shape the constant applies to.
    pub model: Model,
    /// Scalar field the constant was derived for.
    pub field: Field,
}

/// Per-trial success-probability floor shared by every problem shape.
pub fn sigma() -> f64 {
    (2.0 - PI.sqrt()) / 3.0
}

/// Two-slot constant for M users.
///
/// The derivation assumes M >= 2; the formula is still well defined for
/// M = 1 and is returned as-is for degenerate callers.
pub fn mu_p1(m: usize, field: Field) -> BoundReport {
    assert!(m >= 1, "at least one user");
    let mf = m as f64;
    let alpha_thresh = match field {
        Field::Real => 18.0 * mf * mf / PI,
        Field::Complex => 8.0 * mf / PI.sqrt(),
    };
    BoundReport { mu: 3.0 * alpha_thresh, alpha_thresh, sigma: sigma(), model: Model::P1, field }
}

/// Multi-slot constant for quotas `p` over `q` slots.
pub fn mu_p2(p: &[usize], q: usize, field: Field) -> BoundReport {
    assert!(!p.is_empty(), "at least one user");
    assert!(p.iter().all(|&pi| 1 <= pi && pi <= q), "quotas must lie in 1..=Q");
    let alpha_thresh = match field {
        Field::Real => {
            let s: f64 = p.iter().map(|&pi| pi as f64 * ((q - pi + 1) as f64).sqrt()).sum();
            9.0 * s * s / PI
        }
        Field::Complex => {
            let s: f64 = p.iter().map(|&pi| (pi * (q - pi + 1)) as f64).sum();
            4.0 * s / PI.sqrt()
        }
    };
    BoundReport { mu: 3.0 * alpha_thresh, alpha_thresh, sigma: sigma(), model: Model::P2, field }
}

/// Outcome of checking a rounded objective against its constant.
#[derive(Clone, Copy, Debug)]
pub struct RatioCheck {
    /// `rounded_objective / relax_objective`.
    pub ratio: f64,
    /// Whether the ratio is within `mu`, with 1e-9 relative slack.
    pub satisfied: bool,
}

/// Compare a rounded objective against the relaxation value it was
/// derived from. `relax_objective` must be positive.
pub fn check_ratio(rounded_objective: f64, relax_objective: f64, report: &BoundReport) -> RatioCheck {
    assert!(relax_objective > 0.0, "relaxation objective must be positive");
    let ratio = rounded_objective / relax_objective;
    RatioCheck { ratio, satisfied: ratio <= report.mu * (1.0 + 1e-9) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_slot_constants_match_formulas() {
        let r = mu_p1(5, Field::Real);
        assert_abs_diff_eq!(r.mu, 54.0 * 25.0 / PI, epsilon = 1e-12 * r.mu);
        assert_abs_diff_eq!(r.mu, 429.718, epsilon = 1e-3);
        let c = mu_p1(5, Field::Complex);
        assert_abs_diff_eq!(c.mu, 24.0 * 5.0 / PI.sqrt(), epsilon = 1e-12 * c.mu);
        assert_abs_diff_eq!(c.mu, 67.702, epsilon = 1e-2);
    }

    #[test]
    fn mu_is_three_alpha() {
        for field in [Field::Real, Field::Complex] {
            for m in [2, 5, 15] {
                let r = mu_p1(m, field);
                assert_abs_diff_eq!(r.mu, 3.0 * r.alpha_thresh, epsilon = 1e-12);
            }
            let r = mu_p2(&[1, 2, 3], 4, field);
            assert_abs_diff_eq!(r.mu, 3.0 * r.alpha_thresh, epsilon = 1e-12);
        }
    }

    #[test]
    fn sigma_in_expected_window() {
        let r = mu_p1(2, Field::Real);
        assert!(r.sigma > 0.0758 && r.sigma < 0.0759);
    }

    #[test]
    fn multi_slot_reduces_to_known_cases() {
        for m in [2usize, 5, 9] {
            let ones = alloc::vec![1usize; m];
            // Single slot: 27 M^2 / pi.
            let r1 = mu_p2(&ones, 1, Field::Real);
            assert_abs_diff_eq!(r1.mu, 27.0 * (m * m) as f64 / PI, epsilon = 1e-12);
            // Two slots with unit quotas: identical to the two-slot model.
            let r2 = mu_p2(&ones, 2, Field::Real);
            assert_abs_diff_eq!(r2.mu, mu_p1(m, Field::Real).mu, epsilon = 1e-12 * r2.mu);
            let c2 = mu_p2(&ones, 2, Field::Complex);
            assert_abs_diff_eq!(c2.mu, mu_p1(m, Field::Complex).mu, epsilon = 1e-12 * c2.mu);
        }
        // Single user with quota q over m slots: 27 q^2 (m - q + 1) / pi.
        for (quota, slots) in [(1usize, 3usize), (2, 5), (4, 4)] {
            let r = mu_p2(&[quota], slots, Field::Real);
            let expect = 27.0 * (quota * quota) as f64 * ((slots - quota + 1) as f64) / PI;
            assert_abs_diff_eq!(r.mu, expect, epsilon = 1e-12 * expect);
        }
    }

    #[test]
    fn constants_nondecreasing_in_user_count() {
        for field in [Field::Real, Field::Complex] {
            let mut prev = 0.0;
            for m in 1..=16 {
                let mu = mu_p1(m, field).mu;
                assert!(mu > 0.0 && mu >= prev);
                prev = mu;
            }
            // Appending a user never lowers the multi-slot constant.
            let base = mu_p2(&[2, 1], 3, field).mu;
            let more = mu_p2(&[2, 1, 3], 3, field).mu;
            assert!(more >= base);
        }
    }

    #[test]
    fn ratio_check_examples() {
        let report = mu_p1(5, Field::Real);
        let eq = check_ratio(2.0, 2.0, &report);
        assert_abs_diff_eq!(eq.ratio, 1.0, epsilon = 0.0);
        assert!(eq.satisfied);
        let typical = check_ratio(1.26, 1.0, &report);
        assert!(typical.satisfied);
        let broken = check_ratio(report.mu * 1.5, 1.0, &report);
        assert!(!broken.satisfied);
    }
}
