//! Standard-form SDP solving.
//!
//! A problem holds PSD blocks, box-bounded scalar variables, and linear
//! inequality rows `sum_b tr(A_b X_b) + c.s >= r` with a trace objective.
//! Complex Hermitian problems are solved through the real symmetric
//! embedding `A -> [[Re A, -Im A], [Im A, Re A]]` (trace coefficients
//! halved) and mapped back afterwards.
//!
//! Internally, boxes are split (`s = lo + u`, `u + v = hi - lo`) and each
//! inequality gets a slack, producing the pure conic equality form consumed
//! by the engine in [`ipm`]. That conversion is exact; reported objectives
//! include the box offsets.

mod ipm;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::instance::Field;
use crate::linalg::{CMat, Cplx, RMat};

/// Hermitian-defect tolerance for coefficient matrices.
const HERMITIAN_TOL: f64 = 1e-12;

/// One linear inequality `sum_b tr(A_b X_b) + sum_i c_i s_i >= rhs`.
#[derive(Clone, Debug)]
pub struct LinearConstraint {
    /// Hermitian coefficient matrix per referenced PSD block.
    pub block_terms: Vec<(usize, CMat)>,
    /// Coefficients on scalar variables.
    pub scalar_terms: Vec<(usize, f64)>,
    /// Right-hand side.
    pub rhs: f64,
}

/// Trace-objective conic problem over PSD blocks and box-bounded scalars.
#[derive(Clone, Debug)]
pub struct SdpProblem {
    /// Real problems carry exactly real matrices; complex ones are solved
    /// through the real embedding.
    pub field: Field,
    /// PSD block dimensions.
    pub block_dims: Vec<usize>,
    /// Objective trace coefficient per block.
    pub block_trace_cost: Vec<f64>,
    /// Box `[lo, hi]` per scalar variable, lo <= hi (equality pins the
    /// scalar).
    pub scalar_bounds: Vec<(f64, f64)>,
    /// Objective coefficient per scalar variable.
    pub scalar_cost: Vec<f64>,
    /// Inequality rows.
    pub constraints: Vec<LinearConstraint>,
}

/// Termination status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    /// Feasible within `feas_tol`, relative gap within `gap_tol`.
    Optimal,
    /// Ran out of iterations or hit a numerical dead end; iterate returned
    /// for diagnosis, not for use.
    MaxIterations,
    /// Dual objective diverged: no feasible point exists (defensive path).
    Infeasible,
}

/// Solver output.
#[derive(Clone, Debug)]
pub struct SdpSolution {
    /// PSD blocks, in the problem's field (back-mapped when embedded).
    pub x_blocks: Vec<CMat>,
    /// Scalar variable values.
    pub s: Vec<f64>,
    /// Objective of the returned primal point.
    pub primal_objective: f64,
    /// Dual objective; a lower bound on the optimum when clean.
    pub dual_objective: f64,
    /// `|primal - dual| / (1 + |primal|)`.
    pub gap: f64,
    /// Termination status.
    pub status: SolveStatus,
    /// Iterations used.
    pub iterations: usize,
    /// Relative primal residual at exit.
    pub primal_residual: f64,
    /// Relative dual residual at exit.
    pub dual_residual: f64,
    /// Breakdown detail when status is not Optimal.
    pub message: String,
}

/// Solver knobs.
#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Relative duality-gap target.
    pub gap_tol: f64,
    /// Relative feasibility target.
    pub feas_tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-7, feas_tol: 1e-8, max_iter: 200 }
    }
}

/// Structural problem defects (numerical failures are reported through
/// [`SolveStatus`] instead).
#[derive(Clone, Debug, PartialEq)]
pub enum SdpError {
    /// No PSD blocks.
    NoBlocks,
    /// A coefficient matrix is not Hermitian within 1e-12.
    NonHermitian {
        /// Offending constraint, or `None` for an objective-side matrix.
        constraint: Option<usize>,
    },
    /// lo > hi on a scalar box.
    BadBounds {
        /// Scalar index.
        index: usize,
    },
    /// Block or scalar index out of range, or matrix dimension mismatch.
    Shape {
        /// Description of the mismatch.
        detail: String,
    },
    /// Real-tagged problem with complex entries.
    FieldMismatch,
}

impl fmt::Display for SdpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SdpError::NoBlocks => f.write_str("problem has no PSD blocks"),
            SdpError::NonHermitian { constraint: Some(j) } => {
                write!(f, "constraint {j} has a non-Hermitian coefficient matrix")
            }
            SdpError::NonHermitian { constraint: None } => {
                f.write_str("non-Hermitian coefficient matrix")
            }
            SdpError::BadBounds { index } => write!(f, "scalar {index} has lo > hi"),
            SdpError::Shape { detail } => write!(f, "shape mismatch: {detail}"),
            SdpError::FieldMismatch => f.write_str("real-tagged problem with complex entries"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SdpError {}

/// Check structural invariants: Hermitian coefficients, sane bounds,
/// consistent indices, at least one block.
pub fn validate_problem(p: &SdpProblem) -> Result<(), SdpError> {
    if p.block_dims.is_empty() {
        return Err(SdpError::NoBlocks);
    }
    if p.block_trace_cost.len() != p.block_dims.len() {
        return Err(SdpError::Shape { detail: String::from("block cost count != block count") });
    }
    if p.scalar_bounds.len() != p.scalar_cost.len() {
        return Err(SdpError::Shape { detail: String::from("scalar cost count != bound count") });
    }
    for (i, (lo, hi)) in p.scalar_bounds.iter().enumerate() {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(SdpError::BadBounds { index: i });
        }
    }
    for (j, row) in p.constraints.iter().enumerate() {
        for (bi, a) in &row.block_terms {
            let dim = *p
                .block_dims
                .get(*bi)
                .ok_or_else(|| SdpError::Shape { detail: format!("row {j}: block {bi} out of range") })?;
            if a.n() != dim {
                return Err(SdpError::Shape {
                    detail: format!("row {j}: matrix dim {} != block dim {}", a.n(), dim),
                });
            }
            if a.hermitian_defect() > HERMITIAN_TOL * (1.0 + a.frob()) {
                return Err(SdpError::NonHermitian { constraint: Some(j) });
            }
            if p.field == Field::Real && !a.is_real() {
                return Err(SdpError::FieldMismatch);
            }
        }
        for (si, _) in &row.scalar_terms {
            if *si >= p.scalar_bounds.len() {
                return Err(SdpError::Shape { detail: format!("row {j}: scalar {si} out of range") });
            }
        }
    }
    Ok(())
}

/// Real symmetric image of a complex Hermitian problem. Block dimensions
/// double, trace coefficients halve, and constraint matrices become
/// `emb(A)/2`, so every trace value is preserved under the back-map of
/// [`CMat::from_real_embedding`].
pub fn embed_complex(p: &SdpProblem) -> Result<SdpProblem, SdpError> {
    validate_problem(p)?;
    let constraints = p
        .constraints
        .iter()
        .map(|row| LinearConstraint {
            block_terms: row
                .block_terms
                .iter()
                .map(|(bi, a)| {
                    let mut e = a.real_embedding().scaled(0.5);
                    e.symmetrize();
                    (*bi, cmat_from_real(&e))
                })
                .collect(),
            scalar_terms: row.scalar_terms.clone(),
            rhs: row.rhs,
        })
        .collect();
    Ok(SdpProblem {
        field: Field::Real,
        block_dims: p.block_dims.iter().map(|d| 2 * d).collect(),
        block_trace_cost: p.block_trace_cost.iter().map(|c| 0.5 * c).collect(),
        scalar_bounds: p.scalar_bounds.clone(),
        scalar_cost: p.scalar_cost.clone(),
        constraints,
    })
}

fn cmat_from_real(r: &RMat) -> CMat {
    CMat::from_fn(r.n(), |i, j| Cplx::new(r.get(i, j), 0.0))
}

/// Solve to the given tolerances.
///
/// Structural defects error out; numerical trouble comes back as a
/// non-Optimal [`SolveStatus`] with diagnostics, never as a silent wrong
/// answer.
pub fn solve(p: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution, SdpError> {
    validate_problem(p)?;
    match p.field {
        Field::Real => solve_real(p, opts, false),
        Field::Complex => {
            let embedded = embed_complex(p)?;
            solve_real(&embedded, opts, true)
        }
    }
}

fn solve_real(p: &SdpProblem, opts: &SolverOptions, back_map: bool) -> Result<SdpSolution, SdpError> {
    let m = p.constraints.len();
    let n_scalars = p.scalar_bounds.len();

    // Layout of the nonnegative variables: slacks, then u (shifted scalars),
    // then v (box complements). Zero-width boxes pin the scalar to lo.
    let mut var_of_scalar: Vec<Option<usize>> = vec![None; n_scalars];
    let mut widths: Vec<f64> = Vec::new();
    let mut free_scalars = 0usize;
    for (i, (lo, hi)) in p.scalar_bounds.iter().enumerate() {
        let w = hi - lo;
        if w > 0.0 {
            var_of_scalar[i] = Some(free_scalars);
            widths.push(w);
            free_scalars += 1;
        }
    }
    let idx_u = |v: usize| m + v;
    let idx_v = |v: usize| m + free_scalars + v;
    let num_lp = m + 2 * free_scalars;

    let mut lp_cost = vec![0.0; num_lp];
    let mut offset = 0.0;
    for i in 0..n_scalars {
        offset += p.scalar_cost[i] * p.scalar_bounds[i].0;
        if let Some(v) = var_of_scalar[i] {
            lp_cost[idx_u(v)] = p.scalar_cost[i];
        }
    }

    let mut rows: Vec<ipm::StdRow> = Vec::with_capacity(m + free_scalars);
    for (j, row) in p.constraints.iter().enumerate() {
        // Accumulate duplicate indices, symmetrize defensively.
        let mut per_block: Vec<(usize, RMat)> = Vec::new();
        for (bi, a) in &row.block_terms {
            let mut ar = a.re();
            ar.symmetrize();
            match per_block.iter_mut().find(|(b, _)| b == bi) {
                Some((_, acc)) => acc.add_scaled(&ar, 1.0),
                None => per_block.push((*bi, ar)),
            }
        }
        per_block.sort_by_key(|(b, _)| *b);

        let mut dense_s = vec![0.0; n_scalars];
        for (si, c) in &row.scalar_terms {
            dense_s[*si] += c;
        }
        let mut rhs = row.rhs;
        let mut lp: Vec<(usize, f64)> = vec![(j, -1.0)];
        for i in 0..n_scalars {
            if dense_s[i] == 0.0 {
                continue;
            }
            rhs -= dense_s[i] * p.scalar_bounds[i].0;
            if let Some(v) = var_of_scalar[i] {
                lp.push((idx_u(v), dense_s[i]));
            }
        }
        rows.push(ipm::StdRow { blocks: per_block, lp, b: rhs });
    }
    for v in 0..free_scalars {
        rows.push(ipm::StdRow {
            blocks: Vec::new(),
            lp: vec![(idx_u(v), 1.0), (idx_v(v), 1.0)],
            b: widths[v],
        });
    }

    let std_form = ipm::StdForm {
        dims: p.block_dims.clone(),
        block_cost: p.block_trace_cost.clone(),
        lp_cost,
        rows,
    };
    let engine_opts = ipm::IpmOptions {
        gap_tol: opts.gap_tol,
        feas_tol: opts.feas_tol,
        max_iter: opts.max_iter,
    };
    let res = ipm::solve_std(&std_form, &engine_opts);

    let mut s = vec![0.0; n_scalars];
    for i in 0..n_scalars {
        s[i] = p.scalar_bounds[i].0;
        if let Some(v) = var_of_scalar[i] {
            s[i] += res.x_lp[idx_u(v)];
        }
    }
    let x_blocks: Vec<CMat> = res
        .x_blocks
        .iter()
        .map(|x| if back_map { CMat::from_real_embedding(x) } else { cmat_from_real(x) })
        .collect();

    let primal_objective = res.primal_objective + offset;
    let dual_objective = res.dual_objective + offset;
    let gap = (primal_objective - dual_objective).abs() / (1.0 + primal_objective.abs());

    let mut status = match res.reason {
        ipm::StopReason::Converged => SolveStatus::Optimal,
        ipm::StopReason::DualDiverged => SolveStatus::Infeasible,
        ipm::StopReason::IterationLimit | ipm::StopReason::NumericalBreakdown => {
            SolveStatus::MaxIterations
        }
    };
    let mut message = res.message;

    // The Optimal contract re-checks user-level rows, not just the equality
    // form the engine saw.
    if status == SolveStatus::Optimal {
        let b_scale = 1.0
            + p.constraints
                .iter()
                .fold(0.0f64, |a, r| a.max(r.rhs.abs()));
        let mut worst = 0.0f64;
        for row in &p.constraints {
            let mut lhs = 0.0;
            for (bi, a) in &row.block_terms {
                lhs += if back_map {
                    // Evaluate in the embedded space where the solve ran.
                    a.re().sym_inner(&res.x_blocks[*bi])
                } else {
                    a.re().sym_inner(&res.x_blocks[*bi])
                };
            }
            for (si, c) in &row.scalar_terms {
                lhs += c * s[*si];
            }
            worst = worst.max(row.rhs - lhs);
        }
        if worst > opts.feas_tol * b_scale {
            status = SolveStatus::MaxIterations;
            message = format!("converged point violates a row by {worst:.3e}");
        }
    }

    Ok(SdpSolution {
        x_blocks,
        s,
        primal_objective,
        dual_objective,
        gap,
        status,
        iterations: res.iterations,
        primal_residual: res.primal_residual,
        dual_residual: res.dual_residual,
        message,
    })
}
