//! Small dense Hermitian semidefinite programs, solved by an infeasible-start
//! primal-dual path-following method with Nesterov-Todd scaling. Problems
//! here have a handful of constraints and side length below ~50, so every
//! linear-algebra step is done densely and the Schur complement is formed
//! explicitly.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

/// minimize `Re tr(C Y)` subject to `Re tr(A_i Y) = b_i`, `Y` Hermitian PSD.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub c: ComplexMatrix,
    /// Pairs `(A_i, b_i)`; every `A_i` must be Hermitian of the same side
    /// length as `c`.
    pub constraints: Vec<(ComplexMatrix, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    /// Relative tolerance on the complementarity gap and both feasibility
    /// residuals.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 100,
        }
    }
}

/// Primal solution of a small Hermitian semidefinite program.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub y: ComplexMatrix,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// Complementarity gap `tr(Y S)` at the final iterate.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn herm_part(m: &ComplexMatrix) -> ComplexMatrix {
    m.add(&m.hermitian()).scale(0.5)
}

/// `Q diag(vals^p) Q^H` from an eigendecomposition of a PD matrix.
fn from_eigh(vals: &[f64], q: &ComplexMatrix, p: f64) -> ComplexMatrix {
    let n = q.rows();
    let scaled = ComplexMatrix::from_fn(n, n, |i, j| q.get(i, j) * vals[j].powf(p));
    scaled.mul(&q.hermitian())
}

fn positive_eigh(m: &ComplexMatrix, what: &str) -> Result<(Vec<f64>, ComplexMatrix)> {
    let (mut vals, q) = m.eigh()?;
    let top = vals[0];
    if top <= 0.0 {
        return Err(Error::Sdp(format!(
            "{what} lost positive definiteness (max eigenvalue {top})"
        )));
    }
    // Roundoff can push the smallest eigenvalue a hair below zero when the
    // iterate is nearly converged; clamp it rather than abort. Anything more
    // negative than the floor is a real loss of definiteness.
    let floor = top * 1e-14;
    if *vals.last().unwrap() <= -floor {
        return Err(Error::Sdp(format!(
            "{what} lost positive definiteness (min eigenvalue {})",
            vals.last().unwrap()
        )));
    }
    for v in &mut vals {
        *v = v.max(floor);
    }
    Ok((vals, q))
}

/// For matrices that are positive semidefinite by construction (congruences
/// of definite iterates): every eigenvalue is clamped to a positive floor,
/// since negatives can only be roundoff from the product, whose error scale
/// is set by the factors rather than by the (possibly tiny) result.
fn psd_eigh_clamped(
    m: &ComplexMatrix,
    product_scale: f64,
    what: &str,
) -> Result<(Vec<f64>, ComplexMatrix)> {
    let (mut vals, q) = m.eigh()?;
    if vals[0] <= 0.0 {
        return Err(Error::Sdp(format!(
            "{what} lost positive definiteness (max eigenvalue {})",
            vals[0]
        )));
    }
    let floor = (vals[0].max(product_scale * f64::EPSILON)) * 1e-14;
    for v in &mut vals {
        *v = v.max(floor);
    }
    Ok((vals, q))
}

/// Largest step `alpha` keeping `m + alpha * dm` positive semidefinite,
/// computed from the smallest eigenvalue of `L^-1 dm L^-H`.
fn max_psd_step(m: &ComplexMatrix, dm: &ComplexMatrix) -> Result<f64> {
    let l = match m.cholesky() {
        Some(l) => l,
        None => {
            let bump = ComplexMatrix::identity(m.rows()).scale(m.frobenius_norm() * 1e-12);
            m.add(&bump)
                .cholesky()
                .ok_or_else(|| Error::Sdp("iterate lost positive definiteness".into()))?
        }
    };
    let y = l.solve_lower_triangular(dm);
    let g = herm_part(&l.solve_lower_triangular(&y.hermitian()).hermitian());
    let (vals, _) = g.eigh()?;
    let min_eig = *vals.last().unwrap();
    if min_eig >= -1e-14 {
        Ok(f64::INFINITY)
    } else {
        Ok(-1.0 / min_eig)
    }
}

fn validate(prob: &SdpProblem) -> Result<usize> {
    let n = prob.c.rows();
    if n == 0 || prob.c.cols() != n {
        return Err(Error::InvalidInput("objective matrix must be square".into()));
    }
    let tol = 1e-10 * (1.0 + prob.c.frobenius_norm());
    if !prob.c.is_hermitian(tol) {
        return Err(Error::InvalidInput("objective matrix must be Hermitian".into()));
    }
    if prob.constraints.is_empty() {
        return Err(Error::InvalidInput("at least one constraint required".into()));
    }
    for (i, (a, b)) in prob.constraints.iter().enumerate() {
        if a.shape() != (n, n) {
            return Err(Error::InvalidInput(format!(
                "constraint {i} has shape {:?}, expected ({n}, {n})",
                a.shape()
            )));
        }
        if !a.is_hermitian(1e-10 * (1.0 + a.frobenius_norm())) {
            return Err(Error::InvalidInput(format!(
                "constraint {i} matrix must be Hermitian"
            )));
        }
        if !b.is_finite() {
            return Err(Error::InvalidInput(format!(
                "constraint {i} right-hand side is not finite"
            )));
        }
    }
    Ok(n)
}

pub fn solve_sdp(prob: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    let n = validate(prob)?;
    let m_cons = prob.constraints.len();
    let nf = n as f64;

    let b_scale = 1.0
        + prob
            .constraints
            .iter()
            .map(|(_, b)| b.abs())
            .fold(0.0, f64::max);
    let c_scale = 1.0 + prob.c.frobenius_norm();

    let mut x = ComplexMatrix::identity(n).scale(b_scale);
    let mut s = ComplexMatrix::identity(n).scale(c_scale);
    let mut yv = vec![0.0; m_cons];
    let mut steps = 0usize;
    let mut best: Option<(f64, SdpSolution)> = None;

    loop {
        let r_p: Vec<f64> = prob
            .constraints
            .iter()
            .map(|(a, b)| b - a.inner_re(&x))
            .collect();
        let mut r_d = prob.c.sub(&s);
        for ((a, _), yi) in prob.constraints.iter().zip(&yv) {
            r_d = r_d.sub(&a.scale(*yi));
        }
        let r_d = herm_part(&r_d);

        let gap = x.inner_re(&s);
        let mu = gap / nf;
        let primal_obj = prob.c.inner_re(&x);
        let dual_obj: f64 = prob
            .constraints
            .iter()
            .zip(&yv)
            .map(|((_, b), yi)| b * yi)
            .sum();
        let rp_norm = r_p.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let rd_norm = r_d.frobenius_norm();

        let solution = |converged: bool| SdpSolution {
            y: x.clone(),
            primal_obj,
            dual_obj,
            gap,
            iterations: steps,
            converged,
        };

        // Worst of the three convergence measures, each in the units of its
        // own test below; the least-bad iterate is what error paths attach.
        let score = (gap / (1.0 + primal_obj.abs() + dual_obj.abs()))
            .max(rp_norm / b_scale)
            .max(rd_norm / c_scale);
        if best.as_ref().is_none_or(|(prev, _)| score < *prev) {
            best = Some((score, solution(false)));
        }

        if gap <= opts.tol * (1.0 + primal_obj.abs() + dual_obj.abs())
            && rp_norm <= opts.tol * b_scale
            && rd_norm <= opts.tol * c_scale
        {
            return Ok(solution(true));
        }
        if steps >= opts.max_iters {
            let (_, best_sol) = best.expect("scored above");
            return Err(Error::SdpIterationLimit {
                gap: best_sol.gap,
                iterations: steps,
                best: Box::new(best_sol),
            });
        }

        let step = (|| -> Result<(ComplexMatrix, Vec<f64>, ComplexMatrix, f64, f64)> {
            // Nesterov-Todd scaling point W, satisfying W S W = X.
            let (s_vals, s_q) = positive_eigh(&s, "dual slack")?;
            let s_half = from_eigh(&s_vals, &s_q, 0.5);
            let s_inv_half = from_eigh(&s_vals, &s_q, -0.5);
            let s_inv = from_eigh(&s_vals, &s_q, -1.0);
            let t = herm_part(&s_half.mul(&x).mul(&s_half));
            let product_scale = s_vals[0] * x.frobenius_norm();
            let (t_vals, t_q) = psd_eigh_clamped(&t, product_scale, "scaled primal iterate")?;
            let t_half = from_eigh(&t_vals, &t_q, 0.5);
            let w = herm_part(&s_inv_half.mul(&t_half).mul(&s_inv_half));

            let waw: Vec<ComplexMatrix> = prob
                .constraints
                .iter()
                .map(|(a, _)| herm_part(&w.mul(a).mul(&w)))
                .collect();
            let schur = DMatrix::from_fn(m_cons, m_cons, |i, j| {
                prob.constraints[i].0.inner_re(&waw[j])
            });
            // Plain LU first; deep into convergence the scaled products lose
            // enough digits that the factorization can fail, in which case a
            // tiny diagonal shift (escalated if needed) restores solvability
            // without visibly perturbing the Newton direction.
            let diag_scale = (0..m_cons)
                .map(|i| schur[(i, i)].abs())
                .fold(f64::MIN_POSITIVE, f64::max);
            let solve_schur = |rhs: &DVector<f64>| -> Option<DVector<f64>> {
                if let Some(sol) = schur.clone().lu().solve(rhs) {
                    return Some(sol);
                }
                for shift in [1e-14, 1e-11, 1e-8] {
                    let mut reg = schur.clone();
                    for i in 0..m_cons {
                        reg[(i, i)] += diag_scale * shift;
                    }
                    if let Some(sol) = reg.lu().solve(rhs) {
                        return Some(sol);
                    }
                }
                None
            };

            // Newton direction for the target sigma * mu on the central path:
            //   <A_i, dX> = r_p_i,  sum_i dy_i A_i + dS = R_d,
            //   dX + W dS W = sigma mu S^-1 - X.
            let direction = |sigma: f64| -> Result<(ComplexMatrix, Vec<f64>, ComplexMatrix)> {
                let core = s_inv
                    .scale(sigma * mu)
                    .sub(&x)
                    .sub(&herm_part(&w.mul(&r_d).mul(&w)));
                let rhs = DVector::from_fn(m_cons, |j, _| {
                    r_p[j] - prob.constraints[j].0.inner_re(&core)
                });
                let dy = solve_schur(&rhs)
                    .ok_or_else(|| Error::Sdp("singular Schur complement".into()))?;
                let mut ds = r_d.clone();
                for ((a, _), dyi) in prob.constraints.iter().zip(dy.iter()) {
                    ds = ds.sub(&a.scale(*dyi));
                }
                let ds = herm_part(&ds);
                let dx = herm_part(
                    &s_inv
                        .scale(sigma * mu)
                        .sub(&x)
                        .sub(&herm_part(&w.mul(&ds).mul(&w))),
                );
                Ok((dx, dy.iter().copied().collect(), ds))
            };

            // Affine probe sets the centering weight; the cube rule pushes
            // sigma toward zero only when the pure Newton step makes real
            // progress.
            let (dx_aff, _, ds_aff) = direction(0.0)?;
            let ap_aff = max_psd_step(&x, &dx_aff)?.min(1.0);
            let ad_aff = max_psd_step(&s, &ds_aff)?.min(1.0);
            let mu_aff = x
                .add(&dx_aff.scale(ap_aff))
                .inner_re(&s.add(&ds_aff.scale(ad_aff)))
                .max(0.0)
                / nf;
            let sigma = (mu_aff / mu).powi(3).clamp(1e-6, 0.999);

            let (dx, dy, ds) = direction(sigma)?;
            let ap = (0.98 * max_psd_step(&x, &dx)?).min(1.0);
            let ad = (0.98 * max_psd_step(&s, &ds)?).min(1.0);
            Ok((dx, dy, ds, ap, ad))
        })();

        let (dx, dy, ds, ap, ad) = match step {
            Ok(parts) => parts,
            // Numerical breakdown this deep means the iterate floor has been
            // hit; hand back the least-bad iterate and let the caller decide
            // whether it is accurate enough.
            Err(e) if steps > 0 => {
                let (_, best_sol) = best.expect("scored above");
                return Err(Error::SdpBreakdown {
                    gap: best_sol.gap,
                    iterations: steps,
                    reason: e.to_string(),
                    best: Box::new(best_sol),
                });
            }
            Err(e) => return Err(e),
        };

        x = herm_part(&x.add(&dx.scale(ap)));
        s = herm_part(&s.add(&ds.scale(ad)));
        for (yi, dyi) in yv.iter_mut().zip(&dy) {
            *yi += ad * dyi;
        }
        steps += 1;
    }
}

/// Splits a PSD solution into its dominant rank-one component. Returns the
/// scaled eigenvector `sqrt(lambda_1) q_1` and the ratio of the two largest
/// eigenvalues, which certifies how close the matrix is to rank one.
pub fn extract_rank_one(y: &ComplexMatrix) -> Result<(Vec<num_complex::Complex64>, f64)> {
    let (vals, q) = y.eigh()?;
    let l1 = vals[0];
    if l1 <= 0.0 {
        return Err(Error::Sdp(
            "solution matrix has no positive eigenvalue".into(),
        ));
    }
    let floor = l1 * f64::EPSILON;
    let l2 = if vals.len() > 1 {
        vals[1].max(floor)
    } else {
        floor
    };
    let v = q
        .column(0)
        .into_iter()
        .map(|z| z * l1.sqrt())
        .collect();
    Ok((v, l1 / l2))
}
