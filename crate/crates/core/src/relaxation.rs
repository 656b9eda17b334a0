//! Convex relaxations of the two grouping problems.
//!
//! The two-slot problem relaxes to: minimize `tr X1 + tr X2` subject to
//! `tr(H_i X1) >= a_i`, `tr(H_i X2) >= 1 - a_i`, `0 <= a_i <= 1`, both
//! blocks PSD. The multi-slot problem relaxes to: minimize
//! `sum_q tr X_q` subject to `tr(H_i X_q) >= a_iq`, `sum_q a_iq >= P_i`,
//! `0 <= a_iq <= 1`, all Q blocks PSD. Both drop the binary restriction
//! on the membership weights; their optima lower-bound every feasible
//! beamformer assignment.

use alloc::string::String;
use alloc::vec::Vec;

use crate::instance::{
    outer_product, InstanceP1, InstanceP2, InstanceRef, Violation, is_structurally_sound,
    validate_instance,
};
use crate::linalg::CMat;
use crate::sdp::{LinearConstraint, SdpProblem, SdpSolution, SolveStatus};

/// Weights outside the unit box by more than this abort extraction
/// instead of being clamped (matches the solver's default feasibility
/// tolerance).
pub const ALPHA_CLAMP_TOL: f64 = 1e-8;

/// Which relaxation a problem or solution came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelaxationKind {
    /// Two-slot form; always exactly 2 PSD blocks.
    Sdp1,
    /// Multi-slot form; Q PSD blocks.
    Sdp2,
}

/// Optimal relaxation point, repackaged for rounding.
#[derive(Clone, Debug)]
pub struct RelaxationSolution {
    /// One PSD matrix per slot (2 for the two-slot form).
    pub x_blocks: Vec<CMat>,
    /// Membership weights, `alpha[i][q]`, M rows by Q columns, clamped
    /// into `[0, 1]`. Two-slot form stores `(a_i, 1 - a_i)` per row.
    pub alpha: Vec<Vec<f64>>,
    /// Sum of block traces at the optimum.
    pub objective: f64,
    /// Relative duality gap achieved by the solver.
    pub duality_gap: f64,
}

/// Why a relaxation could not be built or its solution not extracted.
#[derive(Clone, Debug)]
pub enum RelaxationError {
    /// Instance failed structural validation.
    InvalidInstance(Vec<Violation>),
    /// Solver did not return an Optimal point, or the point violates the
    /// unit box by more than [`ALPHA_CLAMP_TOL`].
    RelaxationFailed {
        /// Solver status at exit.
        status: SolveStatus,
        /// Diagnostic detail.
        message: String,
    },
}

impl core::fmt::Display for RelaxationError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            RelaxationError::InvalidInstance(v) => {
                write!(f, "invalid instance ({} violations)", v.len())
            }
            RelaxationError::RelaxationFailed { status, message } => {
                write!(f, "relaxation failed ({status:?}): {message}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for RelaxationError {}

fn checked_outer_products(
    inst: InstanceRef<'_>,
    channels: &[crate::instance::Channel],
) -> Result<Vec<CMat>, RelaxationError> {
    let violations = validate_instance(inst);
    if !is_structurally_sound(&violations) {
        return Err(RelaxationError::InvalidInstance(violations));
    }
    Ok(channels
        .iter()
        .map(|h| outer_product(h).expect("validated nonzero").materialize())
        .collect())
}

/// Build the two-slot relaxation. Scalar `i` is the user-`i` weight
/// `a_i`; rows come in pairs (slot-1 coverage, slot-2 coverage).
pub fn build_sdp1(inst: &InstanceP1) -> Result<SdpProblem, RelaxationError> {
    let h = checked_outer_products(InstanceRef::P1(inst), &inst.channels)?;
    let m = inst.m();
    let n = inst.n();
    let mut constraints = Vec::with_capacity(2 * m);
    for (i, hi) in h.into_iter().enumerate() {
        constraints.push(LinearConstraint {
            block_terms: alloc::vec![(0, hi.clone())],
            scalar_terms: alloc::vec![(i, -1.0)],
            rhs: 0.0,
        });
        constraints.push(LinearConstraint {
            block_terms: alloc::vec![(1, hi)],
            scalar_terms: alloc::vec![(i, 1.0)],
            rhs: 1.0,
        });
    }
    Ok(SdpProblem {
        field: inst.field,
        block_dims: alloc::vec![n, n],
        block_trace_cost: alloc::vec![1.0, 1.0],
        scalar_bounds: alloc::vec![(0.0, 1.0); m],
        scalar_cost: alloc::vec![0.0; m],
        constraints,
    })
}

/// Build the multi-slot relaxation. Scalar `i * Q + q` is the weight
/// `a_iq`; per-(i,q) coverage rows come first, then the M cardinality
/// rows `sum_q a_iq >= P_i`.
pub fn build_sdp2(inst: &InstanceP2) -> Result<SdpProblem, RelaxationError> {
    let h = checked_outer_products(InstanceRef::P2(inst), &inst.channels)?;
    let m = inst.m();
    let n = inst.n();
    let q = inst.q;
    let mut constraints = Vec::with_capacity(m * q + m);
    for (i, hi) in h.iter().enumerate() {
        for slot in 0..q {
            constraints.push(LinearConstraint {
                block_terms: alloc::vec![(slot, hi.clone())],
                scalar_terms: alloc::vec![(i * q + slot, -1.0)],
                rhs: 0.0,
            });
        }
    }
    for i in 0..m {
        constraints.push(LinearConstraint {
            block_terms: Vec::new(),
            scalar_terms: (0..q).map(|slot| (i * q + slot, 1.0)).collect(),
            rhs: inst.priorities[i] as f64,
        });
    }
    Ok(SdpProblem {
        field: inst.field,
        block_dims: alloc::vec![n; q],
        block_trace_cost: alloc::vec![1.0; q],
        scalar_bounds: alloc::vec![(0.0, 1.0); m * q],
        scalar_cost: alloc::vec![0.0; m * q],
        constraints,
    })
}

/// Repackage an Optimal solver output for rounding: clamp weights into
/// the unit box (aborting when the violation exceeds
/// [`ALPHA_CLAMP_TOL`]) and lay them out M-by-Q. The two-slot form
/// derives its second column as `1 - a_i`.
pub fn extract_solution(
    inst: InstanceRef<'_>,
    sol: &SdpSolution,
) -> Result<RelaxationSolution, RelaxationError> {
    if sol.status != SolveStatus::Optimal {
        return Err(RelaxationError::RelaxationFailed {
            status: sol.status,
            message: if sol.message.is_empty() {
                String::from("solver did not reach Optimal")
            } else {
                sol.message.clone()
            },
        });
    }
    let clamp = |v: f64| -> Result<f64, RelaxationError> {
        if v < -ALPHA_CLAMP_TOL || v > 1.0 + ALPHA_CLAMP_TOL {
            return Err(RelaxationError::RelaxationFailed {
                status: sol.status,
                message: alloc::format!("weight {v} outside [0,1] beyond tolerance"),
            });
        }
        Ok(v.clamp(0.0, 1.0))
    };
    let alpha = match inst {
        InstanceRef::P1(p1) => {
            let m = p1.m();
            debug_assert_eq!(sol.s.len(), m);
            let mut rows = Vec::with_capacity(m);
            for i in 0..m {
                let a = clamp(sol.s[i])?;
                rows.push(alloc::vec![a, 1.0 - a]);
            }
            rows
        }
        InstanceRef::P2(p2) => {
            let (m, q) = (p2.m(), p2.q);
            debug_assert_eq!(sol.s.len(), m * q);
            let mut rows = Vec::with_capacity(m);
            for i in 0..m {
                let mut row = Vec::with_capacity(q);
                for slot in 0..q {
                    row.push(clamp(sol.s[i * q + slot])?);
                }
                rows.push(row);
            }
            rows
        }
    };
    Ok(RelaxationSolution {
        x_blocks: sol.x_blocks.clone(),
        alpha,
        objective: sol.primal_objective,
        duality_gap: sol.gap,
    })
}
