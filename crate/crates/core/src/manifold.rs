//! Product-of-circles manifold: points are length-`m` complex vectors with
//! unit-modulus entries (the vectorized analog precoder), tangent vectors
//! satisfy `Re(z_i * conj(x_i)) = 0` entrywise. Provides the projection,
//! retraction, transport, and the matched conjugate-gradient descent for the
//! factorization cost `sum_k ||F_opt[k] - F_RF F_BB[k]||_F^2`, preconditioned
//! by per-row blocks of the model Hessian so cold starts settle in a handful
//! of iterations.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

/// Entries closer to the origin than this after a step make the entrywise
/// renormalization ill-defined.
pub const RETRACTION_EPS: f64 = 1e-14;
const UNIT_TOL: f64 = 1e-12;
const MAX_BACKTRACKS: usize = 50;

/// Point on the product of unit circles.
#[derive(Debug, Clone, PartialEq)]
pub struct CirclePoint {
    x: Vec<Complex64>,
}

impl CirclePoint {
    pub fn new(x: Vec<Complex64>) -> Result<Self> {
        for (i, z) in x.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() || (z.norm() - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidInput(format!(
                    "entry {i} = {z} is not unit modulus"
                )));
            }
        }
        Ok(Self { x })
    }

    pub fn from_phases(phases: &[f64]) -> Self {
        Self {
            x: phases.iter().map(|&t| Complex64::from_polar(1.0, t)).collect(),
        }
    }

    pub fn random(m: usize, rng: &mut impl Rng) -> Self {
        let phases: Vec<f64> = (0..m)
            .map(|_| rng.gen::<f64>() * 2.0 * std::f64::consts::PI)
            .collect();
        Self::from_phases(&phases)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.x
    }

    /// Reassembles the analog precoder; entries were stacked column-major.
    pub fn to_matrix(&self, rows: usize, cols: usize) -> ComplexMatrix {
        assert_eq!(rows * cols, self.x.len());
        ComplexMatrix::from_vec_cols(rows, cols, &self.x)
    }

    pub fn from_matrix(m: &ComplexMatrix) -> Result<Self> {
        Self::new(m.vec_cols())
    }
}

/// Tangent vector anchored at a point; `Re(z_i conj(anchor_i)) = 0`.
#[derive(Debug, Clone)]
pub struct TangentVector {
    z: Vec<Complex64>,
    anchor: Vec<Complex64>,
}

impl TangentVector {
    pub fn as_slice(&self) -> &[Complex64] {
        &self.z
    }

    pub fn norm(&self) -> f64 {
        self.z.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn assert_anchored_at(&self, x: &CirclePoint) {
        debug_assert_eq!(self.anchor.len(), x.x.len());
        debug_assert!(
            self.anchor
                .iter()
                .zip(&x.x)
                .all(|(a, b)| (a - b).norm() < 1e-9),
            "tangent vector used at a different point than its anchor"
        );
    }
}

/// Real inner product of two tangent vectors at the same anchor.
pub fn inner(a: &TangentVector, b: &TangentVector) -> f64 {
    debug_assert_eq!(a.anchor.len(), b.anchor.len());
    a.z.iter()
        .zip(&b.z)
        .map(|(p, q)| (p.conj() * q).re)
        .sum()
}

/// Orthogonal projection of an ambient vector onto the tangent space at `x`:
/// `z = g - Re(g o conj(x)) o x` entrywise.
pub fn project_tangent(x: &CirclePoint, g: &[Complex64]) -> TangentVector {
    assert_eq!(x.len(), g.len());
    let z = x
        .x
        .iter()
        .zip(g)
        .map(|(xi, gi)| gi - xi * (gi * xi.conj()).re)
        .collect();
    TangentVector {
        z,
        anchor: x.x.clone(),
    }
}

/// Entrywise renormalized step `x_i + v_i / |x_i + v_i|`. Entries whose sum
/// lands within `1e-14` of the origin are reported as a singularity and the
/// caller (the line search) shrinks the step.
pub fn retract(x: &CirclePoint, v: &TangentVector) -> Result<CirclePoint> {
    v.assert_anchored_at(x);
    let mut out = Vec::with_capacity(x.len());
    for (i, (xi, vi)) in x.x.iter().zip(&v.z).enumerate() {
        let s = xi + vi;
        let norm = s.norm();
        if norm < RETRACTION_EPS {
            return Err(Error::RetractionSingularity(i));
        }
        out.push(s / norm);
    }
    Ok(CirclePoint { x: out })
}

/// Moves an ambient or tangent vector to the tangent space at `x_new` by the
/// same projection formula; transporting a vector already tangent at `x_new`
/// returns it unchanged.
pub fn transport(x_new: &CirclePoint, d: &[Complex64]) -> TangentVector {
    project_tangent(x_new, d)
}

/// Per-subcarrier factorization targets: `f_opt[k]` is `n_t x n_s`,
/// `f_bb[k]` is `n_rf x n_s`; the manifold variable has `n_t * n_rf` entries.
pub struct FactorTargets<'a> {
    f_opt: &'a [ComplexMatrix],
    f_bb: &'a [ComplexMatrix],
    n_t: usize,
    n_rf: usize,
}

impl<'a> FactorTargets<'a> {
    pub fn new(f_opt: &'a [ComplexMatrix], f_bb: &'a [ComplexMatrix]) -> Result<Self> {
        if f_opt.is_empty() || f_opt.len() != f_bb.len() {
            return Err(Error::InvalidInput(
                "need matching nonempty target and digital precoder lists".into(),
            ));
        }
        let n_t = f_opt[0].rows();
        let n_s = f_opt[0].cols();
        let n_rf = f_bb[0].rows();
        for (fo, fb) in f_opt.iter().zip(f_bb) {
            if fo.shape() != (n_t, n_s) || fb.shape() != (n_rf, n_s) {
                return Err(Error::InvalidInput(
                    "inconsistent shapes across subcarriers".into(),
                ));
            }
        }
        Ok(Self {
            f_opt,
            f_bb,
            n_t,
            n_rf,
        })
    }

    pub fn manifold_dim(&self) -> usize {
        self.n_t * self.n_rf
    }

    pub fn cost(&self, x: &CirclePoint) -> f64 {
        let f_rf = x.to_matrix(self.n_t, self.n_rf);
        self.f_opt
            .iter()
            .zip(self.f_bb)
            .map(|(fo, fb)| fo.sub(&f_rf.mul(fb)).frobenius_norm_sq())
            .sum()
    }

    /// Euclidean gradient `-2 sum_k vec((F_opt[k] - F_RF F_BB[k]) F_BB[k]^H)`,
    /// assembled without forming any Kronecker product.
    pub fn euclidean_gradient(&self, x: &CirclePoint) -> Vec<Complex64> {
        let f_rf = x.to_matrix(self.n_t, self.n_rf);
        let mut g = ComplexMatrix::zeros(self.n_t, self.n_rf);
        for (fo, fb) in self.f_opt.iter().zip(self.f_bb) {
            let resid = fo.sub(&f_rf.mul(fb));
            g = g.add(&resid.mul(&fb.hermitian()));
        }
        g.scale(-2.0).vec_cols()
    }

    pub fn riemannian_gradient(&self, x: &CirclePoint) -> TangentVector {
        project_tangent(x, &self.euclidean_gradient(x))
    }

    /// Half the second derivative of the cost along the ambient ray `x + t d`:
    /// `sum_k ||D F_BB[k]||_F^2`. Before retraction that cost is an exact
    /// quadratic in `t`, so together with the slope this yields the
    /// one-dimensional minimizer in closed form.
    pub fn ray_curvature(&self, d: &[Complex64]) -> f64 {
        let dm = ComplexMatrix::from_vec_cols(self.n_t, self.n_rf, d);
        self.f_bb
            .iter()
            .map(|fb| dm.mul(fb).frobenius_norm_sq())
            .sum()
    }

    /// Gram matrix `sum_k F_BB[k] F_BB[k]^H` of the digital factors; the
    /// ambient Hessian of the cost is the fixed operator `V -> 2 V Gram`.
    fn gram(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.n_rf, self.n_rf);
        for fb in self.f_bb {
            m = m.add(&fb.mul(&fb.hermitian()));
        }
        m
    }
}

/// Applies the inverse of a positive-definite model of the Riemannian Hessian
/// to the gradient, one antenna row at a time.
///
/// Tangent vectors at `x` are exactly `v = j (r o x)` for real `r`, and this
/// parameterization is an isometry, so everything is assembled in the real
/// coordinates `r`. In them the Hessian of the cost restricted to the
/// manifold splits into independent `n_rf x n_rf` blocks, one per row `t` of
/// the analog matrix:
///
/// `S_t[a,b] = 2 Re(Gram[b,a] x_{t,b} conj(x_{t,a})) - w_{t,a} [a = b]`
///
/// where `w = Re(G o conj(x))` is the curvature the circle constraint adds
/// (`G` the Euclidean gradient). Far from a minimizer the blocks can be
/// indefinite, so each is inverted through its eigendecomposition with the
/// eigenvalues replaced by `max(|lambda|, ridge)`: exact Newton scaling where
/// the block is positive definite, a bounded step through saddle regions
/// otherwise.
fn preconditioned_gradient(
    x: &CirclePoint,
    euclid: &[Complex64],
    gram: &ComplexMatrix,
    ridge: f64,
    n_t: usize,
    n_rf: usize,
) -> TangentVector {
    let floor = ridge.max(f64::MIN_POSITIVE);
    let xs = x.as_slice();
    let mut z = vec![Complex64::new(0.0, 0.0); xs.len()];
    let mut s = DMatrix::<f64>::zeros(n_rf, n_rf);
    let mut rhs = DVector::<f64>::zeros(n_rf);
    for t in 0..n_t {
        for a in 0..n_rf {
            let xa = xs[t + a * n_t];
            let ga = euclid[t + a * n_t];
            let gx = ga * xa.conj();
            rhs[a] = gx.im;
            for b in 0..n_rf {
                let xb = xs[t + b * n_t];
                s[(a, b)] = 2.0 * (gram.get(b, a) * xb * xa.conj()).re;
            }
            s[(a, a)] -= gx.re;
        }
        let eig = s.clone().symmetric_eigen();
        let projected = eig.eigenvectors.transpose() * &rhs;
        let rescaled = DVector::from_iterator(
            n_rf,
            projected
                .iter()
                .zip(eig.eigenvalues.iter())
                .map(|(p, lam)| p / lam.abs().max(floor)),
        );
        let sol = &eig.eigenvectors * rescaled;
        for a in 0..n_rf {
            z[t + a * n_t] = Complex64::new(0.0, sol[a]) * xs[t + a * n_t];
        }
    }
    TangentVector {
        z,
        anchor: xs.to_vec(),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgParams {
    pub max_iters: usize,
    /// Absolute tolerance on the Riemannian gradient norm.
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub armijo_shrink: f64,
    /// Fallback trial step `initial_step / ||grad||`, used only when the
    /// quadratic model along the search ray is degenerate.
    pub initial_step: f64,
}

impl CgParams {
    pub fn defaults(manifold_dim: usize) -> Self {
        Self {
            max_iters: 200,
            grad_tol: 1e-6 * (manifold_dim as f64).sqrt(),
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            initial_step: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgResult {
    pub point: CirclePoint,
    /// Cost at the start point followed by the cost after each accepted step.
    pub cost_history: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Line search exhausted its backtracks; the best iterate is returned.
    pub stalled: bool,
}

/// Fraction of the mean ambient curvature used as the ridge that keeps each
/// preconditioner block positive definite.
const PRECOND_RIDGE_FRAC: f64 = 1e-3;

/// Conjugate gradient descent on the circle manifold with Polak-Ribiere
/// directions (clamped at zero), preconditioned by the row-block Hessian
/// model of [`preconditioned_gradient`]. Each trial step starts at the exact
/// minimizer of the pre-retraction quadratic along the search ray; Armijo
/// backtracking from there absorbs whatever curvature the retraction adds.
pub fn riemannian_cg(x0: &CirclePoint, targets: &FactorTargets, params: &CgParams) -> CgResult {
    assert_eq!(x0.len(), targets.manifold_dim());
    let (n_t, n_rf) = (targets.n_t, targets.n_rf);
    let gram = targets.gram();
    let mean_curvature: f64 =
        (0..n_rf).map(|a| 2.0 * gram.get(a, a).re).sum::<f64>() / n_rf as f64;
    let ridge = PRECOND_RIDGE_FRAC * mean_curvature;

    let mut x = x0.clone();
    let mut f = targets.cost(&x);
    let eg = targets.euclidean_gradient(&x);
    let mut g = project_tangent(&x, &eg);
    let mut g_norm_sq = inner(&g, &g);
    let mut history = vec![f];

    if g_norm_sq.sqrt() <= params.grad_tol {
        return CgResult {
            point: x,
            cost_history: history,
            grad_norm: g_norm_sq.sqrt(),
            iterations: 0,
            converged: true,
            stalled: false,
        };
    }

    let neg = |t: &TangentVector| TangentVector {
        z: t.z.iter().map(|z| -z).collect(),
        anchor: t.anchor.clone(),
    };
    // `z` is the preconditioned gradient; `denom` its inner product with the
    // true gradient (positive because the preconditioner is positive
    // definite), reused as the Polak-Ribiere denominator.
    let mut z = preconditioned_gradient(&x, &eg, &gram, ridge, n_t, n_rf);
    let mut denom = inner(&z, &g);
    if denom <= 0.0 {
        z = g.clone();
        denom = g_norm_sq;
    }
    let mut d = neg(&z);
    let mut iterations = 0;
    let mut converged = false;
    let mut stalled = false;

    for _ in 0..params.max_iters {
        let mut slope = inner(&g, &d);
        if slope >= 0.0 {
            d = neg(&z);
            slope = -denom;
        }

        let curvature = targets.ray_curvature(d.as_slice());
        let mut step = if curvature > 0.0 {
            -slope / (2.0 * curvature)
        } else {
            params.initial_step / g_norm_sq.sqrt().max(f64::MIN_POSITIVE)
        };

        let mut accepted: Option<(CirclePoint, f64)> = None;
        for _ in 0..=MAX_BACKTRACKS {
            let scaled = TangentVector {
                z: d.z.iter().map(|z| z * step).collect(),
                anchor: d.anchor.clone(),
            };
            if let Ok(cand) = retract(&x, &scaled) {
                let f_cand = targets.cost(&cand);
                if f_cand <= f + params.armijo_c * step * slope {
                    accepted = Some((cand, f_cand));
                    break;
                }
            }
            step *= params.armijo_shrink;
        }

        let (x_new, f_new) = match accepted {
            Some(pair) => pair,
            None => {
                stalled = true;
                break;
            }
        };
        iterations += 1;
        history.push(f_new);

        let eg_new = targets.euclidean_gradient(&x_new);
        let g_new = project_tangent(&x_new, &eg_new);
        let g_new_norm_sq = inner(&g_new, &g_new);
        if g_new_norm_sq.sqrt() <= params.grad_tol {
            x = x_new;
            g_norm_sq = g_new_norm_sq;
            converged = true;
            break;
        }

        // Preconditioned Polak-Ribiere with the previous gradient and
        // direction carried to the new tangent space.
        let mut z_new = preconditioned_gradient(&x_new, &eg_new, &gram, ridge, n_t, n_rf);
        let mut denom_new = inner(&z_new, &g_new);
        if denom_new <= 0.0 {
            z_new = g_new.clone();
            denom_new = g_new_norm_sq;
        }
        let g_old_moved = transport(&x_new, &g.z);
        let diff = TangentVector {
            z: g_new
                .z
                .iter()
                .zip(&g_old_moved.z)
                .map(|(a, b)| a - b)
                .collect(),
            anchor: g_new.anchor.clone(),
        };
        let beta = (inner(&z_new, &diff) / denom).max(0.0);
        let d_moved = transport(&x_new, &d.z);
        d = TangentVector {
            z: z_new
                .z
                .iter()
                .zip(&d_moved.z)
                .map(|(zi, di)| -zi + di * beta)
                .collect(),
            anchor: z_new.anchor.clone(),
        };

        x = x_new;
        f = f_new;
        g = g_new;
        g_norm_sq = g_new_norm_sq;
        z = z_new;
        denom = denom_new;
    }

    CgResult {
        grad_norm: g_norm_sq.sqrt(),
        point: x,
        cost_history: history,
        iterations,
        converged,
        stalled,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_targets(
        n_t: usize,
        n_rf: usize,
        n_s: usize,
        k: usize,
        seed: u64,
    ) -> (Vec<ComplexMatrix>, Vec<ComplexMatrix>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gauss = |_: usize, _: usize| {
            c(
                rng.sample::<f64, _>(rand_distr::StandardNormal),
                rng.sample::<f64, _>(rand_distr::StandardNormal),
            )
        };
        let f_opt = (0..k)
            .map(|_| ComplexMatrix::from_fn(n_t, n_s, &mut gauss))
            .collect();
        let f_bb = (0..k)
            .map(|_| ComplexMatrix::from_fn(n_rf, n_s, &mut gauss))
            .collect();
        (f_opt, f_bb)
    }

    #[test]
    fn projection_matches_hand_computed_example() {
        let x = CirclePoint::new(vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let g = [c(1.0, 1.0), c(2.0, 0.0)];
        let z = project_tangent(&x, &g);
        assert!((z.as_slice()[0] - c(0.0, 1.0)).norm() < 1e-15);
        assert!((z.as_slice()[1] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn projection_is_idempotent_and_tangent() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = CirclePoint::random(12, &mut rng);
        let g: Vec<Complex64> = (0..12)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let z = project_tangent(&x, &g);
        for (zi, xi) in z.as_slice().iter().zip(x.as_slice()) {
            assert!((zi * xi.conj()).re.abs() < 1e-14);
        }
        let zz = project_tangent(&x, z.as_slice());
        for (a, b) in zz.as_slice().iter().zip(z.as_slice()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn retraction_renormalizes_each_entry() {
        let x = CirclePoint::new(vec![c(1.0, 0.0)]).unwrap();
        let v = project_tangent(&x, &[c(0.0, 1.0)]);
        let y = retract(&x, &v).unwrap();
        let want = c(1.0, 1.0) / c(1.0, 1.0).norm();
        assert!((y.as_slice()[0] - want).norm() < 1e-15);
    }

    #[test]
    fn retraction_singularity_is_reported_with_entry_index() {
        let x = CirclePoint::new(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let v = TangentVector {
            z: vec![c(0.0, 0.0), c(-1.0, 0.0)],
            anchor: x.as_slice().to_vec(),
        };
        match retract(&x, &v) {
            Err(Error::RetractionSingularity(i)) => assert_eq!(i, 1),
            other => panic!("expected singularity, got {other:?}"),
        }
    }

    #[test]
    fn transport_of_already_tangent_vector_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = CirclePoint::random(8, &mut rng);
        let g: Vec<Complex64> = (0..8)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let z = project_tangent(&x, &g);
        let moved = transport(&x, z.as_slice());
        for (a, b) in moved.as_slice().iter().zip(z.as_slice()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn gradient_matches_finite_differences_through_retraction() {
        let (f_opt, f_bb) = random_targets(6, 3, 2, 2, 17);
        let targets = FactorTargets::new(&f_opt, &f_bb).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let x = CirclePoint::random(18, &mut rng);
        let grad = targets.riemannian_gradient(&x);
        let dir_raw: Vec<Complex64> = (0..18)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let d = project_tangent(&x, &dir_raw);
        let t = 1e-6;
        let scaled = TangentVector {
            z: d.as_slice().iter().map(|z| z * t).collect(),
            anchor: x.as_slice().to_vec(),
        };
        let fd = (targets.cost(&retract(&x, &scaled).unwrap()) - targets.cost(&x)) / t;
        let analytic = inner(&grad, &d);
        assert!(
            (fd - analytic).abs() <= 1e-4 * analytic.abs().max(1.0),
            "fd {fd} vs analytic {analytic}"
        );
    }

    #[test]
    fn cg_descends_monotonically_and_converges() {
        let (f_opt, f_bb) = random_targets(8, 4, 2, 1, 23);
        let targets = FactorTargets::new(&f_opt, &f_bb).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let x0 = CirclePoint::random(32, &mut rng);
        let params = CgParams::defaults(32);
        let out = riemannian_cg(&x0, &targets, &params);
        for w in out.cost_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "cost increased: {} -> {}", w[0], w[1]);
        }
        assert!(out.converged, "grad norm {} after {} iters", out.grad_norm, out.iterations);
        assert!(!out.stalled);
    }

    #[test]
    fn cg_at_a_critical_point_returns_immediately() {
        let (f_opt, f_bb) = random_targets(5, 2, 2, 1, 31);
        let targets = FactorTargets::new(&f_opt, &f_bb).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let x0 = CirclePoint::random(10, &mut rng);
        let settled = riemannian_cg(&x0, &targets, &CgParams::defaults(10)).point;
        let again = riemannian_cg(&settled, &targets, &CgParams::defaults(10));
        assert_eq!(again.iterations, 0);
        assert!(again.converged);
        assert_eq!(again.cost_history.len(), 1);
        assert_eq!(again.point.as_slice(), settled.as_slice());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn retraction_outputs_stay_unit_modulus(seed in 0u64..2000, m in 1usize..16, scale in 0.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = CirclePoint::random(m, &mut rng);
            let g: Vec<Complex64> = (0..m)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * scale)
                .collect();
            let v = project_tangent(&x, &g);
            if let Ok(y) = retract(&x, &v) {
                for z in y.as_slice() {
                    prop_assert!((z.norm() - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
