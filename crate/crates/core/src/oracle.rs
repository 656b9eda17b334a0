//! Brute-force reference brackets for small instances.
//!
//! Enumerates every binary grouping, bounds each per-slot continuous
//! subproblem `min ||w||^2 s.t. |h_i^H w|^2 >= 1` from below by its
//! trace relaxation and from above by a stored feasible point (closed
//! form where the slot is empty, a singleton, or mutually orthogonal;
//! randomized rounding of the slot relaxation otherwise), and reports
//! the envelope across groupings. The per-slot subproblems are NP-hard
//! in general, so the result is an honest bracket, certified only when
//! it is tight to 1e-4 relative.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::instance::{
    is_structurally_sound, outer_product, validate_instance, Channel, Field, InstanceP1,
    InstanceP2, InstanceRef, OuterProductMatrix, Violation,
};
use crate::linalg::{cdot, cnorm_sqr, Cplx};
use crate::rng;
use crate::rounding::{scale_factor, GaussianSampler};
use crate::sdp::{solve, LinearConstraint, SdpProblem, SolveStatus, SolverOptions};

#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

/// Brackets are certified when `upper - lower <= 1e-4 * (1 + lower)`.
pub const CERTIFY_REL_TOL: f64 = 1e-4;

/// Two-slot enumeration cap: at most 2^12 groupings.
pub const MAX_P1_USERS: usize = 12;

/// Multi-slot enumeration cap on the number of minimal groupings.
pub const MAX_P2_ASSIGNMENTS: u64 = 100_000;

/// Fixed seed for the oracle's internal randomized upper bounds; the
/// oracle is deterministic by construction.
const ORACLE_SEED: u64 = 0x6F72_6163;

/// Two-sided bound on the true optimum.
#[derive(Clone, Debug)]
pub struct OracleBracket {
    /// Largest known lower bound (envelope of per-grouping relaxations).
    pub lower: f64,
    /// Smallest found feasible value.
    pub upper: f64,
    /// `upper - lower <= 1e-4 * (1 + lower)`.
    pub certified: bool,
    /// Grouping attaining `upper`, M rows by Q columns of 0/1.
    pub argmin_beta: Vec<Vec<u8>>,
    /// Feasible beamformers attaining `upper`, one per slot.
    pub best_w: Vec<Vec<Cplx>>,
}

/// Why the oracle could not run.
#[derive(Clone, Debug)]
pub enum OracleError {
    /// Instance failed structural validation.
    InvalidInstance(Vec<Violation>),
    /// The grouping count exceeds the enumeration cap.
    EnumerationTooLarge {
        /// What overflowed.
        detail: String,
    },
    /// A per-slot relaxation did not reach Optimal.
    SubproblemFailed {
        /// Diagnostic detail.
        detail: String,
    },
}

impl core::fmt::Display for OracleError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            OracleError::InvalidInstance(v) => {
                write!(f, "invalid instance ({} violations)", v.len())
            }
            OracleError::EnumerationTooLarge { detail } => {
                write!(f, "enumeration too large: {detail}")
            }
            OracleError::SubproblemFailed { detail } => write!(f, "subproblem failed: {detail}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for OracleError {}

/// Exact optimum of `min ||w||^2 s.t. |h_i^H w|^2 >= 1` when available:
/// 0 for an empty slot, `1/||h||^2` for a singleton, and
/// `sum_i 1/||h_i||^2` for mutually orthogonal channels. Returns `None`
/// otherwise.
pub fn closed_form_subproblem(channels: &[&Channel]) -> Option<f64> {
    for (i, a) in channels.iter().enumerate() {
        for b in &channels[i + 1..] {
            let inner = cdot(a.entries(), b.entries()).norm();
            if inner > 1e-12 * (a.norm_sqr() * b.norm_sqr()).sqrt() {
                return None;
            }
        }
    }
    Some(channels.iter().map(|c| 1.0 / c.norm_sqr()).sum())
}

/// Attaining point for the orthogonal closed form: `sum_i h_i / ||h_i||^2`
/// meets every constraint with equality.
fn closed_form_point(channels: &[&Channel], n: usize) -> Vec<Cplx> {
    let mut w = vec![Cplx::new(0.0, 0.0); n];
    for c in channels {
        let inv = 1.0 / c.norm_sqr();
        for (wk, &hk) in w.iter_mut().zip(c.entries()) {
            *wk += hk * inv;
        }
    }
    w
}

/// Bounds for one slot's user set.
#[derive(Clone, Debug)]
struct SubsetBound {
    lower: f64,
    upper: f64,
    w: Vec<Cplx>,
}

/// Lazily evaluated per-subset bounds, keyed by user bitmask.
struct SubsetCache<'a> {
    channels: &'a [Channel],
    h: Vec<OuterProductMatrix>,
    field: Field,
    n: usize,
    trials: usize,
    memo: BTreeMap<u64, SubsetBound>,
}

impl<'a> SubsetCache<'a> {
    fn new(channels: &'a [Channel], field: Field, n: usize, trials: usize) -> Self {
        let h = channels
            .iter()
            .map(|c| outer_product(c).expect("validated nonzero"))
            .collect();
        Self { channels, h, field, n, trials, memo: BTreeMap::new() }
    }

    fn get(&mut self, mask: u64) -> Result<&SubsetBound, OracleError> {
        if !self.memo.contains_key(&mask) {
            let bound = self.compute(mask)?;
            self.memo.insert(mask, bound);
        }
        Ok(&self.memo[&mask])
    }

    fn compute(&self, mask: u64) -> Result<SubsetBound, OracleError> {
        let members: Vec<usize> =
            (0..self.channels.len()).filter(|i| mask >> i & 1 == 1).collect();
        let chans: Vec<&Channel> = members.iter().map(|&i| &self.channels[i]).collect();
        if let Some(value) = closed_form_subproblem(&chans) {
            return Ok(SubsetBound {
                lower: value,
                upper: value,
                w: closed_form_point(&chans, self.n),
            });
        }
        // Trace relaxation of the slot.
        let constraints = members
            .iter()
            .map(|&i| LinearConstraint {
                block_terms: vec![(0, self.h[i].materialize())],
                scalar_terms: Vec::new(),
                rhs: 1.0,
            })
            .collect();
        let problem = SdpProblem {
            field: self.field,
            block_dims: vec![self.n],
            block_trace_cost: vec![1.0],
            scalar_bounds: Vec::new(),
            scalar_cost: Vec::new(),
            constraints,
        };
        let sol = solve(&problem, &SolverOptions::default())
            .map_err(|e| OracleError::SubproblemFailed { detail: format!("{e}") })?;
        if sol.status != SolveStatus::Optimal {
            return Err(OracleError::SubproblemFailed {
                detail: format!("slot relaxation for mask {mask:#x}: {:?}", sol.status),
            });
        }
        // The dual objective certifies a lower bound; the primal value of a
        // tight relaxation may overshoot the optimum by the solver gap.
        let lower = sol.primal_objective.min(sol.dual_objective);

        // Feasible upper bound by randomized scaling of relaxation draws.
        let sampler = GaussianSampler::new(&sol.x_blocks[0], self.field);
        let active: Vec<&OuterProductMatrix> = members.iter().map(|&i| &self.h[i]).collect();
        let mut upper = f64::INFINITY;
        let mut best_w = vec![Cplx::new(0.0, 0.0); self.n];
        for k in 0..self.trials {
            let mut stream = rng::stream(ORACLE_SEED, mask, k as u64);
            let xi = sampler.sample(&mut stream);
            let Some(t) = scale_factor(&xi, &active) else { continue };
            let w: Vec<Cplx> = xi.iter().map(|&v| v * t).collect();
            let value = cnorm_sqr(&w);
            if value < upper {
                upper = value;
                best_w = w;
            }
        }
        if !upper.is_finite() {
            return Err(OracleError::SubproblemFailed {
                detail: format!("no feasible draw for mask {mask:#x}"),
            });
        }
        // A feasible point is an exact upper bound; capping keeps the
        // bracket ordered even when both sides carry solver tolerance.
        Ok(SubsetBound { lower: lower.min(upper), upper, w: best_w })
    }
}

fn validated(inst: InstanceRef<'_>) -> Result<(), OracleError> {
    let violations = validate_instance(inst);
    if !is_structurally_sound(&violations) {
        return Err(OracleError::InvalidInstance(violations));
    }
    Ok(())
}

/// Bracket the two-slot optimum by enumerating all `2^M` groupings.
///
/// `per_assignment_trials` controls the randomized upper bound for slots
/// with no closed form; it must be at least 1.
pub fn enumerate_p1(
    inst: &InstanceP1,
    per_assignment_trials: usize,
) -> Result<OracleBracket, OracleError> {
    validated(InstanceRef::P1(inst))?;
    assert!(per_assignment_trials >= 1, "need at least one trial");
    let m = inst.m();
    if m > MAX_P1_USERS {
        return Err(OracleError::EnumerationTooLarge {
            detail: format!("{m} users exceeds the {MAX_P1_USERS}-user cap"),
        });
    }
    let full: u64 = (1 << m) - 1;
    let mut cache = SubsetCache::new(&inst.channels, inst.field, inst.n(), per_assignment_trials);
    let mut lower = f64::INFINITY;
    let mut upper = f64::INFINITY;
    let mut best: Option<(u64, Vec<Vec<Cplx>>)> = None;
    for bits in 0..=full {
        let (l1, u1, w1) = {
            let s = cache.get(bits)?;
            (s.lower, s.upper, s.w.clone())
        };
        let s2 = cache.get(full & !bits)?;
        lower = lower.min(l1 + s2.lower);
        if u1 + s2.upper < upper {
            upper = u1 + s2.upper;
            best = Some((bits, vec![w1, s2.w.clone()]));
        }
    }
    let (bits, best_w) = best.expect("at least one grouping");
    let argmin_beta = (0..m)
        .map(|i| {
            let b = (bits >> i & 1) as u8;
            vec![b, 1 - b]
        })
        .collect();
    Ok(OracleBracket {
        lower,
        upper,
        certified: upper - lower <= CERTIFY_REL_TOL * (1.0 + lower),
        argmin_beta,
        best_w,
    })
}

/// Slot subsets of size `quota` out of `q`, in lexicographic order.
fn slot_patterns(q: usize, quota: usize) -> Vec<u64> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..quota).collect();
    loop {
        out.push(idx.iter().fold(0u64, |acc, &s| acc | 1 << s));
        // Advance the combination odometer.
        let mut pos = quota;
        while pos > 0 {
            pos -= 1;
            if idx[pos] != pos + q - quota {
                idx[pos] += 1;
                for t in pos + 1..quota {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
            if pos == 0 {
                return out;
            }
        }
    }
}

/// Bracket the multi-slot optimum by enumerating minimal groupings
/// (exactly `P_i` slots per user; extra memberships only add constraints
/// and can never be cheaper).
pub fn enumerate_p2(
    inst: &InstanceP2,
    per_assignment_trials: usize,
) -> Result<OracleBracket, OracleError> {
    validated(InstanceRef::P2(inst))?;
    assert!(per_assignment_trials >= 1, "need at least one trial");
    let m = inst.m();
    let q = inst.q;
    if m > 63 {
        return Err(OracleError::EnumerationTooLarge {
            detail: format!("{m} users exceeds the subset-mask width"),
        });
    }
    let patterns: Vec<Vec<u64>> =
        inst.priorities.iter().map(|&p| slot_patterns(q, p)).collect();
    let mut count: u64 = 1;
    for p in &patterns {
        count = count.saturating_mul(p.len() as u64);
        if count > MAX_P2_ASSIGNMENTS {
            return Err(OracleError::EnumerationTooLarge {
                detail: format!("over {MAX_P2_ASSIGNMENTS} minimal groupings"),
            });
        }
    }
    let mut cache = SubsetCache::new(&inst.channels, inst.field, inst.n(), per_assignment_trials);
    let mut lower = f64::INFINITY;
    let mut upper = f64::INFINITY;
    let mut best: Option<Vec<usize>> = None;
    let mut choice = vec![0usize; m];
    loop {
        // Per-slot user masks for this grouping.
        let mut slot_users = vec![0u64; q];
        for i in 0..m {
            let pat = patterns[i][choice[i]];
            for (s, mask) in slot_users.iter_mut().enumerate() {
                if pat >> s & 1 == 1 {
                    *mask |= 1 << i;
                }
            }
        }
        let mut l_sum = 0.0;
        let mut u_sum = 0.0;
        for &mask in &slot_users {
            let s = cache.get(mask)?;
            l_sum += s.lower;
            u_sum += s.upper;
        }
        lower = lower.min(l_sum);
        if u_sum < upper {
            upper = u_sum;
            best = Some(choice.clone());
        }
        // Advance the odometer, last user fastest; carry past user 0
        // means every grouping has been visited.
        let mut pos = m;
        let exhausted = loop {
            if pos == 0 {
                break true;
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < patterns[pos].len() {
                break false;
            }
            choice[pos] = 0;
        };
        if exhausted {
            break;
        }
    }
    let choice = best.expect("at least one grouping");
    let mut argmin_beta = vec![vec![0u8; q]; m];
    let mut slot_users = vec![0u64; q];
    for i in 0..m {
        let pat = patterns[i][choice[i]];
        for s in 0..q {
            if pat >> s & 1 == 1 {
                argmin_beta[i][s] = 1;
                slot_users[s] |= 1 << i;
            }
        }
    }
    let mut best_w = Vec::with_capacity(q);
    for &mask in &slot_users {
        best_w.push(cache.get(mask)?.w.clone());
    }
    Ok(OracleBracket {
        lower,
        upper,
        certified: upper - lower <= CERTIFY_REL_TOL * (1.0 + lower),
        argmin_beta,
        best_w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relaxation::{build_sdp1, extract_solution};
    use crate::rounding::{round_p1, FEASIBILITY_TOL};
    use crate::rng::StreamKey;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn e(n: usize, k: usize) -> Channel {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        Channel::from_real(&v)
    }

    fn random_channels(rng: &mut ChaCha8Rng, m: usize, n: usize, field: Field) -> Vec<Channel> {
        (0..m)
            .map(|_| {
                Channel::new(
                    (0..n)
                        .map(|_| match field {
                            Field::Real => Cplx::new(rng.sample(StandardNormal), 0.0),
                            Field::Complex => Cplx::new(
                                rng.sample::<f64, _>(StandardNormal) / 2f64.sqrt(),
                                rng.sample::<f64, _>(StandardNormal) / 2f64.sqrt(),
                            ),
                        })
                        .collect(),
                )
            })
            .collect()
    }

    #[test]
    fn closed_forms() {
        assert_abs_diff_eq!(closed_form_subproblem(&[]).unwrap(), 0.0, epsilon = 0.0);
        let h = Channel::from_real(&[2.0, 0.0]);
        assert_abs_diff_eq!(closed_form_subproblem(&[&h]).unwrap(), 0.25, epsilon = 1e-15);
        let a = e(2, 0);
        let b = Channel::from_real(&[0.0, 2.0]);
        assert_abs_diff_eq!(closed_form_subproblem(&[&a, &b]).unwrap(), 1.25, epsilon = 1e-15);
        // Non-orthogonal pair has no closed form here.
        let c = Channel::from_real(&[1.0, 1.0]);
        assert!(closed_form_subproblem(&[&a, &c]).is_none());
    }

    #[test]
    fn single_user_bracket_is_exact() {
        let inst = InstanceP1 { field: Field::Real, channels: vec![e(2, 0)] };
        let b = enumerate_p1(&inst, 10).unwrap();
        assert_abs_diff_eq!(b.lower, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(b.upper, 1.0, epsilon = 1e-9);
        assert!(b.certified);
    }

    #[test]
    fn orthonormal_pair_bracket() {
        // Every grouping costs 1 per user direction, totalling 2.
        let inst = InstanceP1 { field: Field::Real, channels: vec![e(2, 0), e(2, 1)] };
        let b = enumerate_p1(&inst, 10).unwrap();
        assert_abs_diff_eq!(b.lower, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(b.upper, 2.0, epsilon = 1e-9);
        assert!(b.certified);
        // The stored point really attains the upper bound.
        for (i, c) in inst.channels.iter().enumerate() {
            let h = outer_product(c).unwrap();
            let q = if b.argmin_beta[i][0] == 1 { 0 } else { 1 };
            assert!(h.quad_form(&b.best_w[q]) >= 1.0 - FEASIBILITY_TOL);
        }
        let total: f64 = b.best_w.iter().map(|w| cnorm_sqr(w)).sum();
        assert_abs_diff_eq!(total, b.upper, epsilon = 1e-9);
    }

    #[test]
    fn bracket_contains_rounded_value_and_dominates_relaxation() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let channels = random_channels(&mut rng, 3, 3, Field::Complex);
        let inst = InstanceP1 { field: Field::Complex, channels };
        let b = enumerate_p1(&inst, 200).unwrap();
        assert!(b.lower <= b.upper + 1e-9);

        let p = build_sdp1(&inst).unwrap();
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        let relax = extract_solution(InstanceRef::P1(&inst), &sol).unwrap();
        // Free relaxation lower-bounds every per-grouping bound.
        assert!(relax.objective <= b.lower + 1e-6);

        let rounded = round_p1(&inst, &relax, 300, StreamKey::new(1, 0)).unwrap();
        assert!(rounded.success);
        // Any rounded feasible value sits at or above the oracle floor.
        assert!(rounded.objective >= b.lower - 1e-6);
    }

    #[test]
    fn multi_slot_full_quota_single_user() {
        let h = Channel::from_real(&[2.0, 0.0]);
        let inst = InstanceP2 {
            field: Field::Real,
            channels: vec![h],
            q: 3,
            priorities: vec![3],
        };
        let b = enumerate_p2(&inst, 10).unwrap();
        assert_abs_diff_eq!(b.lower, 0.75, epsilon = 1e-9);
        assert_abs_diff_eq!(b.upper, 0.75, epsilon = 1e-9);
        assert!(b.certified);
        assert_eq!(b.argmin_beta, vec![vec![1, 1, 1]]);
    }

    #[test]
    fn two_slot_and_multi_slot_brackets_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let channels = random_channels(&mut rng, 3, 2, Field::Real);
        let p1 = InstanceP1 { field: Field::Real, channels: channels.clone() };
        let p2 = InstanceP2 { field: Field::Real, channels, q: 2, priorities: vec![1; 3] };
        let b1 = enumerate_p1(&p1, 300).unwrap();
        let b2 = enumerate_p2(&p2, 300).unwrap();
        assert_abs_diff_eq!(b1.lower, b2.lower, epsilon = 1e-6);
        assert_abs_diff_eq!(b1.upper, b2.upper, epsilon = 1e-6);
    }

    #[test]
    fn enumeration_caps_enforced() {
        let channels: Vec<Channel> = (0..13).map(|i| e(16, i)).collect();
        let inst = InstanceP1 { field: Field::Real, channels };
        assert!(matches!(
            enumerate_p1(&inst, 1),
            Err(OracleError::EnumerationTooLarge { .. })
        ));

        // C(20, 10)^3 blows the minimal-grouping cap.
        let channels: Vec<Channel> = (0..3).map(|i| e(20, i)).collect();
        let inst = InstanceP2 {
            field: Field::Real,
            channels,
            q: 20,
            priorities: vec![10; 3],
        };
        assert!(matches!(
            enumerate_p2(&inst, 1),
            Err(OracleError::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn closed_form_matches_sdp_bracket() {
        // Near-orthogonal channels with distinct norms: every grouping
        // costs about the orthogonal closed form 1 + 1/4, whether a slot
        // is bounded in closed form (split groupings, singletons) or by
        // SDP + randomization (joint grouping, non-orthogonal pair).
        let a = Channel::from_real(&[1.0, 0.0, 0.0]);
        let b = Channel::from_real(&[0.0, 2.0, 0.0]);
        let exact = closed_form_subproblem(&[&a, &b]).unwrap();
        let perturbed = Channel::from_real(&[1e-7, 2.0, 0.0]);
        let inst = InstanceP1 { field: Field::Real, channels: vec![a, perturbed] };
        let bracket = enumerate_p1(&inst, 400).unwrap();
        assert!((bracket.upper - exact).abs() <= 1e-4 * (1.0 + exact));
        assert!((bracket.lower - exact).abs() <= 1e-3 * (1.0 + exact));
        assert!(bracket.certified);
    }
}
