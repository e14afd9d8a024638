//! Reference quantities every experiment is scored against: the unconstrained
//! digital precoder/combiner, achievable spectral efficiency, and the
//! phase-shifter-count-aware energy efficiency.


use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;
use crate::Structure;

/// Rank tolerance used when declaring channels/combiners degenerate.
const RANK_TOL_REL: f64 = 1e-12;

/// Transmit SNR bookkeeping: unit noise variance, transmit power
/// `rho = 10^(snr_db / 10)`.
#[derive(Debug, Clone, Copy)]
pub struct LinkBudget {
    pub rho: f64,
    pub noise_variance: f64,
}

impl LinkBudget {
    pub fn from_snr_db(snr_db: f64) -> Self {
        Self {
            rho: 10f64.powf(snr_db / 10.0),
            noise_variance: 1.0,
        }
    }
}

/// Static power draw per component, in watts.
#[derive(Debug, Clone, Copy)]
pub struct PowerModel {
    pub common_w: f64,
    pub per_rf_chain_w: f64,
    pub per_phase_shifter_w: f64,
    pub per_amplifier_w: f64,
}

impl Default for PowerModel {
    /// 10 W common, 100 mW per RF chain, 10 mW per phase shifter,
    /// 100 mW per power amplifier.
    fn default() -> Self {
        Self {
            common_w: 10.0,
            per_rf_chain_w: 0.1,
            per_phase_shifter_w: 0.01,
            per_amplifier_w: 0.1,
        }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.common_w,
            self.per_rf_chain_w,
            self.per_phase_shifter_w,
            self.per_amplifier_w,
        ];
        if all.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidInput(
                "power model entries must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

fn check_stream_count(h: &ComplexMatrix, n_s: usize) -> Result<()> {
    if n_s == 0 || n_s > h.rows().min(h.cols()) {
        return Err(Error::InvalidInput(format!(
            "{n_s} streams unsupported by a {}x{} channel",
            h.rows(),
            h.cols()
        )));
    }
    Ok(())
}

/// Leading right singular vectors of the channel; columns are orthonormal so
/// the Frobenius norm squared equals the stream count.
pub fn optimal_precoder(h: &ComplexMatrix, n_s: usize) -> Result<ComplexMatrix> {
    check_stream_count(h, n_s)?;
    let svd = h.svd_thin()?;
    if svd.s[n_s - 1] <= RANK_TOL_REL * svd.s[0] {
        return Err(Error::DegenerateChannel(format!(
            "singular value {} of requested {} streams is numerically zero",
            n_s, n_s
        )));
    }
    Ok(svd.v.leading_columns(n_s))
}

/// Leading left singular vectors of the channel.
pub fn optimal_combiner(h: &ComplexMatrix, n_s: usize) -> Result<ComplexMatrix> {
    check_stream_count(h, n_s)?;
    let svd = h.svd_thin()?;
    if svd.s[n_s - 1] <= RANK_TOL_REL * svd.s[0] {
        return Err(Error::DegenerateChannel(format!(
            "singular value {} of requested {} streams is numerically zero",
            n_s, n_s
        )));
    }
    Ok(svd.u.leading_columns(n_s))
}

/// Achievable rate in bits/s/Hz for effective precoder `f` (n_t x n_s) and
/// combiner `w` (n_r x n_s) over channel `h`:
/// `log2 det(I + rho/(noise n_s) * pinv(w) H f f^H H^H w)`.
pub fn spectral_efficiency(
    h: &ComplexMatrix,
    f: &ComplexMatrix,
    w: &ComplexMatrix,
    link: &LinkBudget,
) -> Result<f64> {
    let n_s = f.cols();
    if h.cols() != f.rows() || h.rows() != w.rows() || w.cols() != n_s {
        return Err(Error::InvalidInput(format!(
            "shape mismatch: channel {}x{}, precoder {}x{}, combiner {}x{}",
            h.rows(),
            h.cols(),
            f.rows(),
            f.cols(),
            w.rows(),
            w.cols()
        )));
    }
    let wsvd = w.svd_thin()?;
    let s_max = wsvd.s.first().copied().unwrap_or(0.0);
    if wsvd.s[n_s - 1] <= RANK_TOL_REL * s_max || s_max == 0.0 {
        return Err(Error::DegenerateCombiner(
            "combiner is numerically rank deficient".into(),
        ));
    }

    let c = link.rho / (link.noise_variance * n_s as f64);
    let w_pinv = w.pinv()?;
    let hf = h.mul(f);
    let left = w_pinv.mul(&hf); // n_s x n_s
    let right = hf.hermitian().mul(w); // n_s x n_s
    let m = left.mul(&right);
    let mut arg = ComplexMatrix::identity(n_s);
    for i in 0..n_s {
        for j in 0..n_s {
            let cur = arg.get(i, j);
            arg.set(i, j, cur + m.get(i, j) * c);
        }
    }
    let det = arg.determinant();
    if !(det.re.is_finite()) || det.re <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "rate determinant {det} is not a positive real"
        )));
    }
    Ok(det.re.log2())
}

/// Mean rate across subcarriers; all three slices index subcarrier `k`.
pub fn spectral_efficiency_avg(
    h: &[ComplexMatrix],
    f: &[ComplexMatrix],
    w: &[ComplexMatrix],
    link: &LinkBudget,
) -> Result<f64> {
    if h.is_empty() || h.len() != f.len() || h.len() != w.len() {
        return Err(Error::InvalidInput(
            "per-subcarrier lists must be nonempty and equal length".into(),
        ));
    }
    let mut total = 0.0;
    for k in 0..h.len() {
        total += spectral_efficiency(&h[k], &f[k], &w[k], link)?;
    }
    Ok(total / h.len() as f64)
}

/// Phase shifter count: one bank per RF chain when fully connected, one
/// shifter per antenna when each chain drives its own subarray.
pub fn phase_shifter_count(structure: Structure, n_t: usize, n_rf: usize) -> usize {
    match structure {
        Structure::FullyConnected => n_t * n_rf,
        Structure::PartiallyConnected => n_t,
    }
}

/// Rate divided by total consumed power:
/// `P = common + n_rf * P_rf + n_t * P_pa + n_ps * P_ps`.
pub fn energy_efficiency(
    rate_bits: f64,
    structure: Structure,
    n_t: usize,
    n_rf: usize,
    power: &PowerModel,
) -> f64 {
    let n_ps = phase_shifter_count(structure, n_t, n_rf);
    let total = power.common_w
        + n_rf as f64 * power.per_rf_chain_w
        + n_t as f64 * power.per_amplifier_w
        + n_ps as f64 * power.per_phase_shifter_w;
    rate_bits / total
}

/// Frobenius distance between a target precoder and a hybrid factorization.
pub fn euclidean_distance(
    f_opt: &ComplexMatrix,
    analog: &ComplexMatrix,
    digital: &ComplexMatrix,
) -> f64 {
    f_opt.sub(&analog.mul(digital)).frobenius_norm()
}
