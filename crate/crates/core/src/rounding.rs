//! Randomized rounding of relaxation solutions into feasible beamformers.
//!
//! Both procedures share the same skeleton. The binary grouping is fixed
//! once from the relaxed weights (threshold at 1/2 for the two-slot form,
//! top-quota slots per user for the multi-slot form). Then, for each of T
//! independent trials, a Gaussian vector is drawn per slot from that
//! slot's relaxation covariance and scaled just enough to satisfy the
//! slot's coverage constraints; the cheapest feasible trial wins.
//!
//! Each trial also records a success event: its scaling factors stay
//! under the proof threshold and its raw sample energy stays under three
//! times the relaxation objective. A successful trial's objective is at
//! most `mu` times the relaxation objective, and a single trial succeeds
//! with probability at least 0.0758 regardless of problem size, which is
//! what makes best-of-T work.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bounds;
use crate::instance::{
    outer_product, Field, InstanceP1, InstanceP2, InstanceRef, OuterProductMatrix,
};
use crate::linalg::{cnorm_sqr, CMat, Cplx};
use crate::relaxation::RelaxationSolution;
use crate::rng::StreamKey;

#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

/// Rounded-solution feasibility is re-verified to this slack.
pub const FEASIBILITY_TOL: f64 = 1e-7;

/// Quadratic forms at or below `1e-14 * ||xi||^2 * trace(H)` count as
/// degenerate draws.
pub const DEGENERATE_REL_TOL: f64 = 1e-14;

/// Eigenvalues below `1e-9 * trace` are clipped when factoring a
/// covariance.
pub const FACTOR_CLIP_REL: f64 = 1e-9;

/// Resample attempts per slot draw before a trial is declared failed.
pub const MAX_RESAMPLES: usize = 100;

/// Draws Gaussian vectors with a prescribed PSD covariance.
#[derive(Clone, Debug)]
pub struct GaussianSampler {
    field: Field,
    factor: CMat,
}

impl GaussianSampler {
    /// Factor `covariance` as `A A^H` by eigendecomposition, clipping
    /// eigenvalues below [`FACTOR_CLIP_REL`] times the trace.
    pub fn new(covariance: &CMat, field: Field) -> Self {
        Self { field, factor: covariance.psd_factor(FACTOR_CLIP_REL) }
    }

    /// The factor `A` with `A A^H` equal to the covariance up to clipping.
    pub fn factor(&self) -> &CMat {
        &self.factor
    }

    /// Draw one vector: `A z` with `z` standard normal (real field) or
    /// circularly symmetric with unit-variance entries (complex field).
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<Cplx> {
        let n = self.factor.n();
        let half = 0.5f64.sqrt();
        let z: Vec<Cplx> = (0..n)
            .map(|_| match self.field {
                Field::Real => Cplx::new(rng.sample(StandardNormal), 0.0),
                Field::Complex => {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Cplx::new(re * half, im * half)
                }
            })
            .collect();
        self.factor.matvec(&z)
    }
}

/// One randomization trial: scaled beamformers plus its bookkeeping.
#[derive(Clone, Debug)]
pub struct TrialOutcome {
    /// Per-slot beamformers `w_q = t_q * xi_q` (zero for inactive slots).
    pub w_blocks: Vec<Vec<Cplx>>,
    /// Per-slot raw samples (zero for inactive slots).
    pub xi_blocks: Vec<Vec<Cplx>>,
    /// Per-slot scaling factors.
    pub scale: Vec<f64>,
    /// `sum_q ||w_q||^2`.
    pub objective: f64,
    /// All covered users meet their unit target within [`FEASIBILITY_TOL`].
    pub feasible: bool,
    /// Proof-threshold event; see [`trial_success_event`].
    pub success_event: bool,
}

/// Best-of-T rounding result.
#[derive(Clone, Debug)]
pub struct RoundedSolution {
    /// Slot membership, `beta[i][q]`, M rows by Q columns of 0/1.
    pub beta: Vec<Vec<u8>>,
    /// Per-slot beamformers of the winning trial.
    pub w_blocks: Vec<Vec<Cplx>>,
    /// `sum_q ||w_q||^2` of the winning trial.
    pub objective: f64,
    /// Number of trials run.
    pub trials_used: usize,
    /// Index of the winning trial (lowest objective, earliest on ties).
    pub best_trial: Option<usize>,
    /// Whether any trial was feasible.
    pub success: bool,
    /// How many trials fired the proof-threshold success event.
    pub success_events: usize,
}

/// A covariance was numerically zero although its slot still has users
/// to cover, so no scaling can reach feasibility.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DegenerateCovariance {
    /// Offending slot.
    pub slot: usize,
}

impl core::fmt::Display for DegenerateCovariance {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "slot {} covariance is numerically zero but must cover users", self.slot)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DegenerateCovariance {}

/// Threshold the relaxed two-slot weights at 1/2 (inclusive).
///
/// Returns the 0/1 vector and the index set it sends to slot 1.
pub fn round_binary_p1(alpha: &[f64]) -> (Vec<u8>, Vec<usize>) {
    let beta: Vec<u8> = alpha.iter().map(|&a| u8::from(a >= 0.5)).collect();
    let set = beta
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| (b == 1).then_some(i))
        .collect();
    (beta, set)
}

/// Indices of the `quota` largest entries of a weight row, ties broken
/// toward lower slot indices; returned ascending.
pub fn select_top_slots(alpha_row: &[f64], quota: usize) -> Vec<usize> {
    assert!(quota >= 1 && quota <= alpha_row.len(), "quota must lie in 1..=Q");
    let mut order: Vec<usize> = (0..alpha_row.len()).collect();
    // Stable sort by descending weight keeps equal weights in slot order.
    order.sort_by(|&a, &b| alpha_row[b].partial_cmp(&alpha_row[a]).expect("weights are finite"));
    let mut picked = order[..quota].to_vec();
    picked.sort_unstable();
    picked
}

/// Scale needed for `xi` to cover every listed user: the largest of
/// `(xi^H H_i xi)^(-1/2)`, or 0 for an empty list. `None` flags a
/// degenerate draw (some quadratic form at rounding-error scale), which
/// callers answer by resampling.
pub fn scale_factor(xi: &[Cplx], h_set: &[&OuterProductMatrix]) -> Option<f64> {
    if h_set.is_empty() {
        return Some(0.0);
    }
    let energy = cnorm_sqr(xi);
    let mut min_q = f64::INFINITY;
    for h in h_set {
        let q = h.quad_form(xi);
        if q <= DEGENERATE_REL_TOL * energy * h.trace() {
            return None;
        }
        min_q = min_q.min(q);
    }
    Some(1.0 / min_q.sqrt())
}

/// Context shared by every trial of one rounding run.
struct TrialPlan<'a> {
    /// Sampler per slot; `None` for slots with nobody to cover.
    samplers: Vec<Option<GaussianSampler>>,
    /// Active users' rank-1 matrices per slot.
    active: Vec<Vec<&'a OuterProductMatrix>>,
    n: usize,
}

impl TrialPlan<'_> {
    /// Run one trial on its private stream. Inactive slots neither draw
    /// from the stream nor contribute to the objective.
    fn run(&self, rng: &mut ChaCha8Rng) -> TrialOutcome {
        let slots = self.active.len();
        let mut w_blocks = Vec::with_capacity(slots);
        let mut xi_blocks = Vec::with_capacity(slots);
        let mut scale = Vec::with_capacity(slots);
        let mut objective = 0.0;
        let mut feasible = true;
        for q in 0..slots {
            let Some(sampler) = &self.samplers[q] else {
                w_blocks.push(vec![Cplx::new(0.0, 0.0); self.n]);
                xi_blocks.push(vec![Cplx::new(0.0, 0.0); self.n]);
                scale.push(0.0);
                continue;
            };
            let mut drawn = None;
            for _ in 0..MAX_RESAMPLES {
                let xi = sampler.sample(rng);
                if let Some(t) = scale_factor(&xi, &self.active[q]) {
                    drawn = Some((xi, t));
                    break;
                }
            }
            let Some((xi, t)) = drawn else {
                // Exhausted resamples: record a failed trial.
                w_blocks.push(vec![Cplx::new(0.0, 0.0); self.n]);
                xi_blocks.push(vec![Cplx::new(0.0, 0.0); self.n]);
                scale.push(0.0);
                feasible = false;
                continue;
            };
            let w: Vec<Cplx> = xi.iter().map(|&v| v * t).collect();
            objective += cnorm_sqr(&w);
            for h in &self.active[q] {
                feasible &= h.quad_form(&w) >= 1.0 - FEASIBILITY_TOL;
            }
            w_blocks.push(w);
            xi_blocks.push(xi);
            scale.push(t);
        }
        TrialOutcome { w_blocks, xi_blocks, scale, objective, feasible, success_event: false }
    }
}

fn build_plan<'a>(
    h: &'a [OuterProductMatrix],
    x_blocks: &[CMat],
    membership: &[Vec<u8>],
    field: Field,
    n: usize,
) -> Result<TrialPlan<'a>, DegenerateCovariance> {
    let slots = x_blocks.len();
    let mut active: Vec<Vec<&OuterProductMatrix>> = vec![Vec::new(); slots];
    for (i, hi) in h.iter().enumerate() {
        for q in 0..slots {
            if membership[i][q] == 1 {
                active[q].push(hi);
            }
        }
    }
    let mut samplers = Vec::with_capacity(slots);
    for q in 0..slots {
        if active[q].is_empty() {
            samplers.push(None);
            continue;
        }
        let trace = x_blocks[q].trace_re();
        if trace <= 1e-12 {
            return Err(DegenerateCovariance { slot: q });
        }
        samplers.push(Some(GaussianSampler::new(&x_blocks[q], field)));
    }
    Ok(TrialPlan { samplers, active, n })
}

fn best_of_trials(
    plan: &TrialPlan<'_>,
    relax: &RelaxationSolution,
    inst: InstanceRef<'_>,
    beta: Vec<Vec<u8>>,
    trials: usize,
    key: StreamKey,
) -> RoundedSolution {
    let slots = plan.active.len();
    let n = plan.n;
    let mut best: Option<(f64, usize, TrialOutcome)> = None;
    let mut success_events = 0;
    for k in 0..trials {
        let mut rng = key.trial(k);
        let mut trial = plan.run(&mut rng);
        if !trial.feasible {
            continue;
        }
        trial.success_event = trial_success_event(&trial, relax, inst);
        success_events += usize::from(trial.success_event);
        let better = match &best {
            None => true,
            Some((obj, _, _)) => trial.objective < *obj,
        };
        if better {
            best = Some((trial.objective, k, trial));
        }
    }
    match best {
        Some((objective, k, trial)) => RoundedSolution {
            beta,
            w_blocks: trial.w_blocks,
            objective,
            trials_used: trials,
            best_trial: Some(k),
            success: true,
            success_events,
        },
        None => RoundedSolution {
            beta,
            w_blocks: vec![vec![Cplx::new(0.0, 0.0); n]; slots],
            objective: f64::INFINITY,
            trials_used: trials,
            best_trial: None,
            success: false,
            success_events,
        },
    }
}

/// Round a two-slot relaxation: fix the grouping by thresholding, then
/// take the cheapest feasible of `trials` sampled beamformer pairs.
pub fn round_p1(
    inst: &InstanceP1,
    relax: &RelaxationSolution,
    trials: usize,
    key: StreamKey,
) -> Result<RoundedSolution, DegenerateCovariance> {
    let m = inst.m();
    debug_assert_eq!(relax.alpha.len(), m);
    debug_assert_eq!(relax.x_blocks.len(), 2);
    let h: Vec<OuterProductMatrix> = inst
        .channels
        .iter()
        .map(|c| outer_product(c).expect("instance validated upstream"))
        .collect();
    let alpha1: Vec<f64> = relax.alpha.iter().map(|row| row[0]).collect();
    let (beta1, _) = round_binary_p1(&alpha1);
    let beta: Vec<Vec<u8>> = beta1.iter().map(|&b| vec![b, 1 - b]).collect();
    let plan = build_plan(&h, &relax.x_blocks, &beta, inst.field, inst.n())?;
    Ok(best_of_trials(&plan, relax, InstanceRef::P1(inst), beta, trials, key))
}

/// Round a multi-slot relaxation: give each user its top-quota slots,
/// then take the cheapest feasible of `trials` sampled beamformer sets.
pub fn round_p2(
    inst: &InstanceP2,
    relax: &RelaxationSolution,
    trials: usize,
    key: StreamKey,
) -> Result<RoundedSolution, DegenerateCovariance> {
    let m = inst.m();
    let q = inst.q;
    debug_assert_eq!(relax.alpha.len(), m);
    debug_assert_eq!(relax.x_blocks.len(), q);
    let h: Vec<OuterProductMatrix> = inst
        .channels
        .iter()
        .map(|c| outer_product(c).expect("instance validated upstream"))
        .collect();
    let mut beta = vec![vec![0u8; q]; m];
    for i in 0..m {
        for slot in select_top_slots(&relax.alpha[i], inst.priorities[i]) {
            beta[i][slot] = 1;
        }
    }
    let plan = build_plan(&h, &relax.x_blocks, &beta, inst.field, inst.n())?;
    Ok(best_of_trials(&plan, relax, InstanceRef::P2(inst), beta, trials, key))
}

/// Proof-threshold event for one trial: every squared scaling factor
/// stays at or below the sampling threshold for the instance shape, and
/// the raw sample energy stays at or below three times the relaxation
/// objective. When this fires, the trial objective is at most `mu` times
/// the relaxation objective.
pub fn trial_success_event(
    trial: &TrialOutcome,
    relax: &RelaxationSolution,
    inst: InstanceRef<'_>,
) -> bool {
    let report = match inst {
        InstanceRef::P1(p1) => bounds::mu_p1(p1.m(), p1.field),
        InstanceRef::P2(p2) => bounds::mu_p2(&p2.priorities, p2.q, p2.field),
    };
    let max_t_sq = trial.scale.iter().fold(0.0f64, |a, &t| a.max(t * t));
    let energy: f64 = trial.xi_blocks.iter().map(|xi| cnorm_sqr(xi)).sum();
    let trace_sum: f64 = relax.x_blocks.iter().map(CMat::trace_re).sum();
    max_t_sq <= report.alpha_thresh && energy <= 3.0 * trace_sum
}
