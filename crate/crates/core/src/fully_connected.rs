//! Alternating designs for the fully-connected hybrid structure: every RF
//! chain reaches all antennas, so the analog precoder is a dense unit-modulus
//! matrix. Two alternations are provided: a least-squares digital step paired
//! with conjugate gradient descent on the analog phases, and a
//! phase-extraction variant that constrains the digital precoder to a scaled
//! semi-unitary matrix so both half-steps become closed-form.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::manifold::{riemannian_cg, CgParams, CirclePoint, FactorTargets};
use crate::numerics::ComplexMatrix;

/// Objective below this absolute floor means the factorization is exact to
/// machine precision and further outer iterations are pointless.
const OBJ_FLOOR: f64 = 1e-12;

/// Analog precoder (unit-modulus entries) plus one digital precoder per
/// subcarrier.
#[derive(Debug, Clone)]
pub struct HybridPrecoder {
    pub analog: ComplexMatrix,
    pub digital: Vec<ComplexMatrix>,
}

impl HybridPrecoder {
    pub fn subcarriers(&self) -> usize {
        self.digital.len()
    }

    /// `analog * digital[k]`.
    pub fn effective(&self, k: usize) -> ComplexMatrix {
        self.analog.mul(&self.digital[k])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AltMinParams {
    pub max_outer_iters: usize,
    /// Stop once the relative objective decrease over one outer iteration
    /// falls below this.
    pub rel_obj_tol: f64,
    /// Seeds the random analog phase initialization.
    pub seed: u64,
    /// Overrides the inner conjugate-gradient settings; defaults are derived
    /// from the manifold dimension.
    pub cg: Option<CgParams>,
}

impl Default for AltMinParams {
    fn default() -> Self {
        Self {
            max_outer_iters: 100,
            rel_obj_tol: 1e-4,
            seed: 0,
            cg: None,
        }
    }
}

impl AltMinParams {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// Which alternation designs a combiner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AltMinKind {
    ManifoldCg,
    PhaseExtraction,
}

/// One inner conjugate-gradient invocation: accepted steps taken and whether
/// the gradient tolerance was reached.
#[derive(Debug, Clone, Copy)]
pub struct CgCallStats {
    pub iterations: usize,
    pub converged: bool,
}

/// Full output of the manifold alternation, including per-invocation inner
/// solver statistics.
#[derive(Debug, Clone)]
pub struct MoAltMinOutput {
    pub precoder: HybridPrecoder,
    /// Squared residual summed over subcarriers after each outer iteration
    /// (first entry: after the initial digital fit).
    pub objective_trace: Vec<f64>,
    pub cg_calls: Vec<CgCallStats>,
}

pub(crate) fn validate_targets(f_opts: &[ComplexMatrix], n_rf: usize) -> Result<(usize, usize)> {
    if f_opts.is_empty() {
        return Err(Error::InvalidInput("no target precoders supplied".into()));
    }
    let (n_t, n_s) = f_opts[0].shape();
    if f_opts.iter().any(|f| f.shape() != (n_t, n_s)) {
        return Err(Error::InvalidInput(
            "target precoders differ in shape across subcarriers".into(),
        ));
    }
    if n_s == 0 || n_s > n_rf || n_rf > n_t {
        return Err(Error::InvalidInput(format!(
            "need n_s <= n_rf <= n_t, got n_s={n_s}, n_rf={n_rf}, n_t={n_t}"
        )));
    }
    Ok((n_t, n_s))
}

/// Unconstrained least-squares digital fit, one subcarrier at a time:
/// `F_BB[k] = pinv(F_RF) F_opt[k]`.
pub fn ls_digital(f_opts: &[ComplexMatrix], analog: &ComplexMatrix) -> Result<Vec<ComplexMatrix>> {
    let p = analog.pinv()?;
    Ok(f_opts.iter().map(|f| p.mul(f)).collect())
}

/// Rescales each digital precoder so the effective transmit power equals the
/// stream count: `sqrt(n_s) / ||F_RF F_BB[k]||_F`. Doubling at most the
/// pre-normalization residual when the target has power `n_s`.
pub fn normalize_digital(
    analog: &ComplexMatrix,
    digital: &[ComplexMatrix],
) -> Result<Vec<ComplexMatrix>> {
    digital
        .iter()
        .map(|d| {
            let n_s = d.cols() as f64;
            let norm = analog.mul(d).frobenius_norm();
            if norm <= f64::MIN_POSITIVE.sqrt() {
                return Err(Error::DegeneratePrecoder(
                    "effective precoder has zero power, cannot normalize".into(),
                ));
            }
            Ok(d.scale(n_s.sqrt() / norm))
        })
        .collect()
}

fn objective(f_opts: &[ComplexMatrix], analog: &ComplexMatrix, digital: &[ComplexMatrix]) -> f64 {
    f_opts
        .iter()
        .zip(digital)
        .map(|(f, d)| f.sub(&analog.mul(d)).frobenius_norm_sq())
        .sum()
}

fn relative_drop(prev: f64, next: f64) -> f64 {
    (prev - next) / prev.max(f64::MIN_POSITIVE)
}

fn mo_altmin_core(
    f_opts: &[ComplexMatrix],
    n_rf: usize,
    params: &AltMinParams,
    normalize: bool,
) -> Result<MoAltMinOutput> {
    let (n_t, _n_s) = validate_targets(f_opts, n_rf)?;
    let m = n_t * n_rf;
    let cg_params = params.cg.unwrap_or_else(|| CgParams::defaults(m));

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut x = CirclePoint::random(m, &mut rng);
    let mut digital = ls_digital(f_opts, &x.to_matrix(n_t, n_rf))?;
    let mut obj = objective(f_opts, &x.to_matrix(n_t, n_rf), &digital);
    let mut trace = vec![obj];
    let mut cg_calls = Vec::new();

    for _ in 0..params.max_outer_iters {
        if obj < OBJ_FLOOR {
            break;
        }
        let targets = FactorTargets::new(f_opts, &digital)?;
        let cg = riemannian_cg(&x, &targets, &cg_params);
        cg_calls.push(CgCallStats {
            iterations: cg.iterations,
            converged: cg.converged,
        });
        x = cg.point;
        digital = ls_digital(f_opts, &x.to_matrix(n_t, n_rf))?;
        let next = objective(f_opts, &x.to_matrix(n_t, n_rf), &digital);
        trace.push(next);
        let drop = relative_drop(obj, next);
        obj = next;
        if drop < params.rel_obj_tol {
            break;
        }
    }

    let analog = x.to_matrix(n_t, n_rf);
    let digital = if normalize {
        normalize_digital(&analog, &digital)?
    } else {
        digital
    };
    Ok(MoAltMinOutput {
        precoder: HybridPrecoder { analog, digital },
        objective_trace: trace,
        cg_calls,
    })
}

/// Manifold-based alternation: least-squares digital fit against conjugate
/// gradient descent of the analog phases, with the final digital precoders
/// rescaled to transmit power `n_s` per subcarrier.
pub fn mo_altmin(
    f_opts: &[ComplexMatrix],
    n_rf: usize,
    params: &AltMinParams,
) -> Result<(HybridPrecoder, Vec<f64>)> {
    let out = mo_altmin_core(f_opts, n_rf, params, true)?;
    Ok((out.precoder, out.objective_trace))
}

/// As [`mo_altmin`] but also reports per-invocation inner solver statistics.
pub fn mo_altmin_instrumented(
    f_opts: &[ComplexMatrix],
    n_rf: usize,
    params: &AltMinParams,
) -> Result<MoAltMinOutput> {
    mo_altmin_core(f_opts, n_rf, params, true)
}

/// Closest scaled-semi-unitary digital fit for one subcarrier with the analog
/// part fixed: for `F_opt^H F_RF = U S V1^H` (thin), the maximizer of
/// `Re tr(F_DD F_opt^H F_RF)` over `F_DD^H F_DD = I` is `V1 U^H`.
pub fn pe_digital_update(f_opt: &ComplexMatrix, analog: &ComplexMatrix) -> Result<ComplexMatrix> {
    let m = f_opt.hermitian().mul(analog); // n_s x n_rf
    let svd = m.svd_thin()?;
    Ok(svd.v.mul(&svd.u.hermitian()))
}

fn pe_surrogate(
    f_opts: &[ComplexMatrix],
    f_dd: &[ComplexMatrix],
    analog: &ComplexMatrix,
) -> f64 {
    f_opts
        .iter()
        .zip(f_dd)
        .map(|(f, d)| f.mul(&d.hermitian()).sub(analog).frobenius_norm_sq())
        .sum()
}

/// Entrywise phase alignment: each analog entry takes the phase of the
/// corresponding entry of `sum_k F_opt[k] F_DD[k]^H`; a zero entry keeps the
/// phase it had in `prev`.
fn pe_analog_update(
    f_opts: &[ComplexMatrix],
    f_dd: &[ComplexMatrix],
    prev: &ComplexMatrix,
) -> ComplexMatrix {
    let (rows, cols) = prev.shape();
    let mut acc = ComplexMatrix::zeros(rows, cols);
    for (f, d) in f_opts.iter().zip(f_dd) {
        acc = acc.add(&f.mul(&d.hermitian()));
    }
    ComplexMatrix::from_fn(rows, cols, |i, j| {
        let z = acc.get(i, j);
        if z.re == 0.0 && z.im == 0.0 {
            prev.get(i, j)
        } else {
            Complex64::from_polar(1.0, z.arg())
        }
    })
}

#[derive(Debug, Clone)]
pub struct PeAltMinOutput {
    pub precoder: HybridPrecoder,
    /// Surrogate `sum_k ||F_opt[k] F_DD[k]^H - F_RF||_F^2` after each outer
    /// iteration (first entry: after the initial digital fit).
    pub surrogate_trace: Vec<f64>,
}

fn pe_altmin_core(
    f_opts: &[ComplexMatrix],
    n_rf: usize,
    params: &AltMinParams,
    normalize: bool,
) -> Result<PeAltMinOutput> {
    let (n_t, n_s) = validate_targets(f_opts, n_rf)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut analog = CirclePoint::random(n_t * n_rf, &mut rng).to_matrix(n_t, n_rf);

    let update_all = |analog: &ComplexMatrix| -> Result<Vec<ComplexMatrix>> {
        f_opts.iter().map(|f| pe_digital_update(f, analog)).collect()
    };

    let mut f_dd = update_all(&analog)?;
    let mut obj = pe_surrogate(f_opts, &f_dd, &analog);
    let mut trace = vec![obj];

    for _ in 0..params.max_outer_iters {
        if obj < OBJ_FLOOR {
            break;
        }
        analog = pe_analog_update(f_opts, &f_dd, &analog);
        f_dd = update_all(&analog)?;
        let next = pe_surrogate(f_opts, &f_dd, &analog);
        trace.push(next);
        let drop = relative_drop(obj, next);
        obj = next;
        if drop < params.rel_obj_tol {
            break;
        }
    }

    let digital = if normalize {
        f_dd
            .iter()
            .map(|d| {
                let norm = analog.mul(d).frobenius_norm();
                if norm <= f64::MIN_POSITIVE.sqrt() {
                    return Err(Error::DegeneratePrecoder(
                        "semi-unitary digital precoder lost all power".into(),
                    ));
                }
                Ok(d.scale((n_s as f64).sqrt() / norm))
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        f_dd
    };

    Ok(PeAltMinOutput {
        precoder: HybridPrecoder { analog, digital },
        surrogate_trace: trace,
    })
}

/// Phase-extraction alternation: closed-form semi-unitary digital steps and
/// entrywise analog phase alignment. The scale factor on the digital precoder
/// is never computed explicitly; the final rescale enforces transmit power.
pub fn pe_altmin(
    f_opts: &[ComplexMatrix],
    n_rf: usize,
    params: &AltMinParams,
) -> Result<(HybridPrecoder, Vec<f64>)> {
    let out = pe_altmin_core(f_opts, n_rf, params, true)?;
    Ok((out.precoder, out.surrogate_trace))
}

/// Designs a hybrid combiner with the same alternations. There is no receive
/// power constraint, so the final normalization is skipped; with matched
/// seeds the analog part equals the transmit-side result on the same targets.
pub fn design_combiner(
    w_opts: &[ComplexMatrix],
    n_rf: usize,
    kind: AltMinKind,
    params: &AltMinParams,
) -> Result<(HybridPrecoder, Vec<f64>)> {
    match kind {
        AltMinKind::ManifoldCg => {
            let out = mo_altmin_core(w_opts, n_rf, params, false)?;
            Ok((out.precoder, out.objective_trace))
        }
        AltMinKind::PhaseExtraction => {
            let out = pe_altmin_core(w_opts, n_rf, params, false)?;
            Ok((out.precoder, out.surrogate_trace))
        }
    }
}
