//! Primal-dual path-following engine.
//!
//! Works on an equality standard form over a product cone of dense PSD
//! blocks and a nonnegative orthant:
//!
//! ```text
//! min  sum_b <C_b, X_b> + c.v      s.t.  sum_b <A_jb, X_b> + a_j.v = b_j,
//!                                        X_b PSD,  v >= 0.
//! ```
//!
//! Directions use Nesterov-Todd scaling (W Z W = X per block, w^2 = x/z on
//! the orthant) with a Mehrotra-style adaptive centering parameter. One
//! Schur factorization serves the predictor and the combined step. All
//! linear algebra is dense; block dimensions stay below ~64 here.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::RMat;

#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

/// One equality row.
pub struct StdRow {
    /// Symmetric coefficient per referenced PSD block, sorted by block index.
    pub blocks: Vec<(usize, RMat)>,
    /// Sparse coefficients on the nonnegative variables.
    pub lp: Vec<(usize, f64)>,
    /// Right-hand side.
    pub b: f64,
}

/// Standard-form problem data.
pub struct StdForm {
    /// PSD block dimensions.
    pub dims: Vec<usize>,
    /// Trace-cost coefficient per block (C_b = coeff * I).
    pub block_cost: Vec<f64>,
    /// Costs on the nonnegative variables.
    pub lp_cost: Vec<f64>,
    /// Equality rows.
    pub rows: Vec<StdRow>,
}

/// Why the engine stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// All three termination measures under tolerance.
    Converged,
    /// Iteration cap hit.
    IterationLimit,
    /// Dual objective diverged while primal infeasibility stagnated.
    DualDiverged,
    /// Factorization or scaling failed beyond recovery.
    NumericalBreakdown,
}

/// Engine result: final iterate plus progress measures.
pub struct IpmResult {
    /// PSD blocks (strictly positive definite by construction).
    pub x_blocks: Vec<RMat>,
    /// Nonnegative variables.
    pub x_lp: Vec<f64>,
    /// `sum <C_b, X_b> + c.v` (no offsets).
    pub primal_objective: f64,
    /// `b.y`.
    pub dual_objective: f64,
    /// Relative primal residual.
    pub primal_residual: f64,
    /// Relative dual residual.
    pub dual_residual: f64,
    /// Iterations consumed.
    pub iterations: usize,
    /// Stop reason.
    pub reason: StopReason,
    /// Breakdown detail for diagnostics; empty otherwise.
    pub message: String,
}

/// Engine tolerances.
pub struct IpmOptions {
    /// Relative gap target.
    pub gap_tol: f64,
    /// Relative feasibility target (primal and dual).
    pub feas_tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
}

const STEP_FRACTION: f64 = 0.98;

/// Relative floor for scaling eigenvalues: entries at roundoff level are
/// clamped instead of aborting, so a marginal iterate keeps moving.
const EIG_FLOOR_REL: f64 = 1e-14;

/// Polishing goal once the tolerances are met: keep iterating until every
/// measure sits at this fraction of its tolerance, progress stalls, or the
/// iteration cap is reached. The returned iterate is the best one seen.
const POLISH_TARGET: f64 = 1e-2;

struct Scaling {
    w: Vec<RMat>,     // NT scaling point per block
    z_inv: Vec<RMat>, // Z^{-1} per block
    w2_lp: Vec<f64>,  // x/z per orthant coordinate
}

/// Iterate snapshot kept while polishing past the tolerances.
struct Snapshot {
    xb: Vec<RMat>,
    xl: Vec<f64>,
    pobj: f64,
    dobj: f64,
    pres: f64,
    dres: f64,
    measure: f64,
}

pub fn solve_std(p: &StdForm, opts: &IpmOptions) -> IpmResult {
    let nb = p.dims.len();
    let m = p.rows.len();
    let k = p.lp_cost.len();
    let nu: f64 = p.dims.iter().sum::<usize>() as f64 + k as f64;

    let b_inf = p.rows.iter().fold(0.0f64, |a, r| a.max(r.b.abs()));
    let c_inf = p
        .block_cost
        .iter()
        .chain(p.lp_cost.iter())
        .fold(0.0f64, |a, &c| a.max(c.abs()));

    // Cold start on the central ray, scaled to the data magnitude.
    let eta_p = 10.0 * f64::max(1.0, b_inf);
    let eta_d = 10.0 * f64::max(1.0, c_inf);
    let mut xb: Vec<RMat> = p.dims.iter().map(|&d| RMat::identity(d).scaled(eta_p)).collect();
    let mut zb: Vec<RMat> = p.dims.iter().map(|&d| RMat::identity(d).scaled(eta_d)).collect();
    let mut xl = vec![eta_p; k];
    let mut zl = vec![eta_d; k];
    let mut y = vec![0.0; m];

    let c_mats: Vec<RMat> = p
        .dims
        .iter()
        .zip(p.block_cost.iter())
        .map(|(&d, &c)| RMat::identity(d).scaled(c))
        .collect();
    let norm_c = 1.0
        + c_mats.iter().map(RMat::frob).fold(0.0f64, f64::max).max(
            p.lp_cost.iter().fold(0.0f64, |a, &c| a.max(c.abs())),
        );
    let norm_b = 1.0 + b_inf;

    let mut stagnation = 0usize;
    let mut best_primal_res = f64::INFINITY;
    let mut best_hit: Option<Snapshot> = None;
    let mut prev_measure = f64::INFINITY;
    let mut stalled = 0usize;
    let mut floor_best = f64::INFINITY;
    let mut floor_stuck = 0usize;

    let finish_best = |s: Snapshot, it: usize| IpmResult {
        x_blocks: s.xb,
        x_lp: s.xl,
        primal_objective: s.pobj,
        dual_objective: s.dobj,
        primal_residual: s.pres,
        dual_residual: s.dres,
        iterations: it,
        reason: StopReason::Converged,
        message: String::new(),
    };

    for it in 0..=opts.max_iter {
        // Residuals.
        let mut rp = vec![0.0; m]; // b - A(x)
        for (j, row) in p.rows.iter().enumerate() {
            let mut ax = 0.0;
            for (bi, a) in &row.blocks {
                ax += a.sym_inner(&xb[*bi]);
            }
            for (li, c) in &row.lp {
                ax += c * xl[*li];
            }
            rp[j] = row.b - ax;
        }
        let mut rd_blocks: Vec<RMat> = Vec::with_capacity(nb);
        for bi in 0..nb {
            let mut rd = c_mats[bi].clone();
            rd.add_scaled(&zb[bi], -1.0);
            rd_blocks.push(rd);
        }
        let mut rd_lp: Vec<f64> = (0..k).map(|l| p.lp_cost[l] - zl[l]).collect();
        for (j, row) in p.rows.iter().enumerate() {
            if y[j] != 0.0 {
                for (bi, a) in &row.blocks {
                    rd_blocks[*bi].add_scaled(a, -y[j]);
                }
                for (li, c) in &row.lp {
                    rd_lp[*li] -= c * y[j];
                }
            }
        }

        let gap_abs = xb
            .iter()
            .zip(zb.iter())
            .map(|(x, z)| x.sym_inner(z))
            .sum::<f64>()
            + xl.iter().zip(zl.iter()).map(|(x, z)| x * z).sum::<f64>();
        let mu = gap_abs / nu;

        let pobj: f64 = c_mats.iter().zip(xb.iter()).map(|(c, x)| c.sym_inner(x)).sum::<f64>()
            + p.lp_cost.iter().zip(xl.iter()).map(|(c, x)| c * x).sum::<f64>();
        let dobj: f64 = p.rows.iter().zip(y.iter()).map(|(r, yi)| r.b * yi).sum();

        let primal_res = rp.iter().fold(0.0f64, |a, r| a.max(r.abs())) / norm_b;
        let dual_res = rd_blocks
            .iter()
            .map(RMat::frob)
            .fold(0.0f64, f64::max)
            .max(rd_lp.iter().fold(0.0f64, |a, r| a.max(r.abs())))
            / norm_c;
        let relgap = (pobj - dobj).abs() / (1.0 + pobj.abs());

        let finish = |reason: StopReason, message: String, it: usize| IpmResult {
            x_blocks: xb.clone(),
            x_lp: xl.clone(),
            primal_objective: pobj,
            dual_objective: dobj,
            primal_residual: primal_res,
            dual_residual: dual_res,
            iterations: it,
            reason,
            message,
        };

        // A tolerance-satisfying iterate is remembered, then polished: extra
        // iterations shrink all three measures together, and the best
        // snapshot is what the caller receives.
        let measure = (relgap / opts.gap_tol)
            .max(primal_res / opts.feas_tol)
            .max(dual_res / opts.feas_tol);
        if measure <= 1.0 && best_hit.as_ref().map_or(true, |s| measure < s.measure) {
            best_hit = Some(Snapshot {
                xb: xb.clone(),
                xl: xl.clone(),
                pobj,
                dobj,
                pres: primal_res,
                dres: dual_res,
                measure,
            });
        }
        if best_hit.is_some() {
            if measure > 0.5 * prev_measure {
                stalled += 1;
            } else {
                stalled = 0;
            }
            let done = best_hit.as_ref().is_some_and(|s| s.measure <= POLISH_TARGET)
                || stalled >= 3
                || it == opts.max_iter;
            if done {
                return finish_best(best_hit.take().unwrap(), it);
            }
        } else {
            // Defensive infeasibility heuristic: the problems this crate
            // builds are always feasible, so require extreme divergence.
            if primal_res < best_primal_res * 0.99 {
                best_primal_res = primal_res;
                stagnation = 0;
            } else {
                stagnation += 1;
            }
            if dobj > 1e8 * (1.0 + pobj.abs())
                && primal_res > 1e3 * opts.feas_tol
                && stagnation >= 10
            {
                return finish(
                    StopReason::DualDiverged,
                    String::from("dual objective diverged"),
                    it,
                );
            }
            // Numerical floor: grinding without measurable progress only
            // erodes the iterate.
            if measure < 0.9 * floor_best {
                floor_best = measure;
                floor_stuck = 0;
            } else {
                floor_stuck += 1;
            }
            if it == opts.max_iter || floor_stuck >= 20 {
                return finish(
                    StopReason::IterationLimit,
                    format!("no progress past measure {floor_best:.3e}"),
                    it,
                );
            }
        }
        prev_measure = measure;

        // Nesterov-Todd scaling per block; w^2 on the orthant.
        let mut scaling = Scaling {
            w: Vec::with_capacity(nb),
            z_inv: Vec::with_capacity(nb),
            w2_lp: (0..k).map(|l| xl[l] / zl[l]).collect(),
        };
        // Eigenvalues at roundoff level are floored relative to the block's
        // largest one; the scaling stays SPD and a marginal iterate keeps
        // moving instead of aborting.
        let mut broke: Option<String> = None;
        for bi in 0..nb {
            let (lz, qz) = zb[bi].sym_eigen();
            let zmax = lz[lz.len() - 1];
            if !(zmax > 0.0) || !zmax.is_finite() {
                broke = Some(format!("dual block {bi} lost positive definiteness"));
                break;
            }
            let zfl = zmax * EIG_FLOOR_REL;
            let z_half = eig_fn(&lz, &qz, |t| t.max(zfl).sqrt());
            let z_invhalf = eig_fn(&lz, &qz, |t| 1.0 / t.max(zfl).sqrt());
            scaling.z_inv.push(eig_fn(&lz, &qz, |t| 1.0 / t.max(zfl)));
            let mut bmat = z_half.matmul(&xb[bi]).matmul(&z_half);
            bmat.symmetrize();
            let (lb, qb) = bmat.sym_eigen();
            let bmax = lb[lb.len() - 1];
            if !(bmax > 0.0) || !bmax.is_finite() {
                broke = Some(format!("primal block {bi} lost positive definiteness"));
                break;
            }
            let bfl = bmax * EIG_FLOOR_REL;
            let b_half = eig_fn(&lb, &qb, |t| t.max(bfl).sqrt());
            let mut w = z_invhalf.matmul(&b_half).matmul(&z_invhalf);
            w.symmetrize();
            scaling.w.push(w);
        }
        if let Some(msg) = broke {
            if let Some(s) = best_hit.take() {
                return finish_best(s, it);
            }
            return finish(StopReason::NumericalBreakdown, msg, it);
        }

        // Schur complement M_ij = sum_b <A_ib, W A_jb W> + sum_l a_il a_jl w2_l.
        let mut gw: Vec<Vec<(usize, RMat)>> = Vec::with_capacity(m);
        for row in &p.rows {
            let mut per_row = Vec::with_capacity(row.blocks.len());
            for (bi, a) in &row.blocks {
                let g = scaling.w[*bi].matmul(a).matmul(&scaling.w[*bi]);
                per_row.push((*bi, g));
            }
            gw.push(per_row);
        }
        let mut schur = RMat::zeros(m);
        for i in 0..m {
            for j in i..m {
                let mut acc = 0.0;
                for (bi, a) in &p.rows[i].blocks {
                    for (bj, g) in &gw[j] {
                        if bi == bj {
                            acc += a.sym_inner(g);
                        }
                    }
                }
                for (li, ci) in &p.rows[i].lp {
                    for (lj, cj) in &p.rows[j].lp {
                        if li == lj {
                            acc += ci * cj * scaling.w2_lp[*li];
                        }
                    }
                }
                schur.set(i, j, acc);
                schur.set(j, i, acc);
            }
        }
        // Proximal-style diagonal regularization: factor M + delta*I but
        // refine against M itself, so directions stay accurate even when the
        // limiting Schur complement is singular (degenerate optimal faces).
        let diag_scale = 1.0 + schur.trace() / (m.max(1) as f64);
        let mut reg = 1e-12 * diag_scale;
        let mut chol = None;
        while reg <= diag_scale {
            let mut regged = schur.clone();
            for d in 0..m {
                regged.add(d, d, reg);
            }
            if let Some(c) = regged.cholesky() {
                chol = Some(c);
                break;
            }
            reg *= 100.0;
        }
        let chol = match chol {
            Some(c) => c,
            None => {
                if let Some(s) = best_hit.take() {
                    return finish_best(s, it);
                }
                return finish(
                    StopReason::NumericalBreakdown,
                    String::from("Schur factorization failed after regularization"),
                    it,
                );
            }
        };

        // Direction for a given complementarity target.
        let solve_dir = |rc_b: &[RMat], rc_l: &[f64]| -> (Vec<f64>, Vec<RMat>, Vec<f64>, Vec<RMat>, Vec<f64>) {
            let mut rhs = vec![0.0; m];
            for (j, row) in p.rows.iter().enumerate() {
                let mut acc = rp[j];
                for (bi, a) in &row.blocks {
                    let mut t = rc_b[*bi].clone();
                    let wrw = scaling.w[*bi].matmul(&rd_blocks[*bi]).matmul(&scaling.w[*bi]);
                    t.add_scaled(&wrw, -1.0);
                    acc -= a.sym_inner(&t);
                }
                for (li, c) in &row.lp {
                    acc -= c * (rc_l[*li] - scaling.w2_lp[*li] * rd_lp[*li]);
                }
                rhs[j] = acc;
            }
            let mut dy = rhs.clone();
            chol.solve_in_place(&mut dy);
            // Refinement against the unregularized matrix cancels both the
            // proximal shift and factorization error; stop when corrections
            // stall (possible when roundoff leaves M slightly indefinite).
            let mut prev_corr = f64::INFINITY;
            for _ in 0..3 {
                let my = schur.matvec(&dy);
                let mut corr: Vec<f64> = (0..m).map(|j| rhs[j] - my[j]).collect();
                chol.solve_in_place(&mut corr);
                let cn = corr.iter().fold(0.0f64, |a, c| a.max(c.abs()));
                if !cn.is_finite() || cn >= prev_corr {
                    break;
                }
                for j in 0..m {
                    dy[j] += corr[j];
                }
                prev_corr = cn;
            }

            let mut dz_b: Vec<RMat> = rd_blocks.clone();
            let mut dz_l: Vec<f64> = rd_lp.clone();
            for (j, row) in p.rows.iter().enumerate() {
                if dy[j] != 0.0 {
                    for (bi, a) in &row.blocks {
                        dz_b[*bi].add_scaled(a, -dy[j]);
                    }
                    for (li, c) in &row.lp {
                        dz_l[*li] -= c * dy[j];
                    }
                }
            }
            let mut dx_b: Vec<RMat> = Vec::with_capacity(nb);
            for bi in 0..nb {
                let mut d = rc_b[bi].clone();
                let wdw = scaling.w[bi].matmul(&dz_b[bi]).matmul(&scaling.w[bi]);
                d.add_scaled(&wdw, -1.0);
                d.symmetrize();
                dx_b.push(d);
            }
            let dx_l: Vec<f64> = (0..k)
                .map(|l| rc_l[l] - scaling.w2_lp[l] * dz_l[l])
                .collect();
            (dy, dx_b, dx_l, dz_b, dz_l)
        };

        // Predictor (affine scaling).
        let rc_aff_b: Vec<RMat> = xb.iter().map(|x| x.scaled(-1.0)).collect();
        let rc_aff_l: Vec<f64> = xl.iter().map(|x| -x).collect();
        let (_dy_a, dx_ab, dx_al, dz_ab, dz_al) = solve_dir(&rc_aff_b, &rc_aff_l);
        let ap_aff = step_length(&xb, &dx_ab, &xl, &dx_al);
        let ad_aff = step_length(&zb, &dz_ab, &zl, &dz_al);

        let mut gap_aff = 0.0;
        for bi in 0..nb {
            let mut xn = xb[bi].clone();
            xn.add_scaled(&dx_ab[bi], ap_aff);
            let mut zn = zb[bi].clone();
            zn.add_scaled(&dz_ab[bi], ad_aff);
            gap_aff += xn.sym_inner(&zn);
        }
        for l in 0..k {
            gap_aff += (xl[l] + ap_aff * dx_al[l]) * (zl[l] + ad_aff * dz_al[l]);
        }
        gap_aff = gap_aff.max(0.0);
        let mut sigma = ((gap_aff / gap_abs).powi(3)).clamp(1e-6, 1.0);
        // Complementarity must not outrun feasibility: when the gap measure
        // is ahead of the residual measure (relative to their targets),
        // recentre so the Newton systems stay well conditioned while the
        // residuals catch up.
        let feas_lead = primal_res.max(dual_res) / opts.feas_tol;
        let gap_lead = relgap / opts.gap_tol;
        if feas_lead > 0.0 && gap_lead < feas_lead {
            sigma = sigma.max((1.0 - gap_lead / feas_lead).min(0.9));
        }

        // Combined centering step.
        let target = sigma * mu;
        let rc_b: Vec<RMat> = (0..nb)
            .map(|bi| {
                let mut r = scaling.z_inv[bi].scaled(target);
                r.add_scaled(&xb[bi], -1.0);
                r
            })
            .collect();
        let rc_l: Vec<f64> = (0..k).map(|l| target / zl[l] - xl[l]).collect();
        let (dy, dx_b, dx_l, dz_b, dz_l) = solve_dir(&rc_b, &rc_l);
        let ap = step_length(&xb, &dx_b, &xl, &dx_l);
        let ad = step_length(&zb, &dz_b, &zl, &dz_l);

        for bi in 0..nb {
            xb[bi].add_scaled(&dx_b[bi], ap);
            xb[bi].symmetrize();
            zb[bi].add_scaled(&dz_b[bi], ad);
            zb[bi].symmetrize();
        }
        for l in 0..k {
            xl[l] += ap * dx_l[l];
            zl[l] += ad * dz_l[l];
        }
        for (j, dyj) in dy.iter().enumerate() {
            y[j] += ad * dyj;
        }
    }
    unreachable!("loop returns at max_iter");
}

/// `V diag(f(lambda)) V^T` from a precomputed eigendecomposition.
fn eig_fn(vals: &[f64], vecs: &RMat, f: impl Fn(f64) -> f64) -> RMat {
    let n = vals.len();
    let mut out = RMat::zeros(n);
    for c in 0..n {
        let fv = f(vals[c]);
        if fv == 0.0 {
            continue;
        }
        for i in 0..n {
            let vic = vecs.get(i, c) * fv;
            for j in 0..n {
                out.add(i, j, vic * vecs.get(j, c));
            }
        }
    }
    out
}

/// Largest `alpha <= 1` keeping every block PSD and every orthant coordinate
/// nonnegative, scaled back by the boundary fraction.
fn step_length(blocks: &[RMat], dirs: &[RMat], lp: &[f64], dlp: &[f64]) -> f64 {
    let mut alpha_max = f64::INFINITY;
    for (x, d) in blocks.iter().zip(dirs.iter()) {
        // X + a D >= 0  <=>  I + a L^{-1} D L^{-T} >= 0.
        let ch = match x.cholesky() {
            Some(c) => c,
            None => return 1e-3, // iterate already marginal; creep forward
        };
        let s = ch.congruence_inv(d);
        let lmin = s.min_eigenvalue();
        if lmin < 0.0 {
            alpha_max = alpha_max.min(-1.0 / lmin);
        }
    }
    for (x, d) in lp.iter().zip(dlp.iter()) {
        if *d < 0.0 {
            alpha_max = alpha_max.min(-x / d);
        }
    }
    if alpha_max.is_infinite() {
        1.0
    } else {
        f64::min(1.0, STEP_FRACTION * alpha_max)
    }
}
