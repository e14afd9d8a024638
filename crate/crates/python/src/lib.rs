//! Python bindings for the hybrid precoding toolkit. Matrices cross the
//! boundary as `list[list[complex]]` (row-major), so no Python-side
//! dependencies are needed; convert to numpy with `np.array(m)` if desired.

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hybridprec::baselines::{
    analog_beamforming as core_analog, analog_combining as core_analog_rx,
    omp_combiner as core_omp_rx, omp_hybrid as core_omp,
    CandidateSet,
};
use hybridprec::channel::{
    frequency_channel, sample_channel, ArrayGeometry, ChannelRealization, ClusterConfig,
};
use hybridprec::fully_connected::{
    mo_altmin as core_mo, pe_altmin as core_pe, AltMinParams, HybridPrecoder,
};
use hybridprec::harness;
use hybridprec::numerics::ComplexMatrix;
use hybridprec::partially_connected::{sdr_altmin as core_sdr, SdrParams};
use hybridprec::reference::{
    energy_efficiency as core_energy, optimal_combiner as core_wopt,
    optimal_precoder as core_fopt, spectral_efficiency as core_rate, LinkBudget, PowerModel,
};
use hybridprec::{Error, Structure};

type Rows = Vec<Vec<Complex64>>;

fn py_err(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        3 => PyRuntimeError::new_err(e.to_string()),
        _ => PyIOError::new_err(e.to_string()),
    }
}

fn to_core(rows: &[Vec<Complex64>]) -> Result<ComplexMatrix, Error> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::InvalidInput("matrix must be nonempty".into()));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidInput("matrix rows differ in length".into()));
    }
    Ok(ComplexMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn from_core(m: &ComplexMatrix) -> Rows {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m.get(i, j)).collect())
        .collect()
}

fn to_core_list(mats: &[Rows]) -> Result<Vec<ComplexMatrix>, Error> {
    mats.iter().map(|m| to_core(m)).collect()
}

fn precoder_parts(p: &HybridPrecoder) -> (Rows, Vec<Rows>) {
    let digitals = (0..p.subcarriers())
        .map(|k| from_core(&p.digital[k]))
        .collect();
    (from_core(&p.analog), digitals)
}

fn parse_structure(s: &str) -> Result<Structure, Error> {
    s.parse()
}

/// One clustered channel draw between two square planar arrays.
#[pyclass]
struct Channel {
    realization: ChannelRealization,
    tx: ArrayGeometry,
    rx: ArrayGeometry,
}

#[pymethods]
impl Channel {
    #[new]
    #[pyo3(signature = (n_t, n_r, seed, clusters=5, rays=10, angular_spread_deg=10.0))]
    fn new(
        n_t: usize,
        n_r: usize,
        seed: u64,
        clusters: usize,
        rays: usize,
        angular_spread_deg: f64,
    ) -> PyResult<Self> {
        let tx = ArrayGeometry::square(n_t).map_err(py_err)?;
        let rx = ArrayGeometry::square(n_r).map_err(py_err)?;
        let cfg = ClusterConfig::new(clusters, rays, angular_spread_deg, vec![1.0; clusters])
            .map_err(py_err)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let realization = sample_channel(&tx, &rx, &cfg, &mut rng);
        Ok(Self { realization, tx, rx })
    }

    /// Frequency-flat channel matrix (n_r x n_t).
    fn narrowband(&self) -> Rows {
        from_core(&self.realization.h_narrowband)
    }

    /// Channel at subcarrier `k` of `n_subcarriers`.
    fn subcarrier(&self, k: usize, n_subcarriers: usize) -> PyResult<Rows> {
        frequency_channel(&self.realization, k, n_subcarriers)
            .map(|m| from_core(&m))
            .map_err(py_err)
    }
}

/// Unconstrained rate-optimal precoder: `n_s` leading right singular vectors.
#[pyfunction]
fn optimal_precoder(h: Rows, n_s: usize) -> PyResult<Rows> {
    let h = to_core(&h).map_err(py_err)?;
    core_fopt(&h, n_s).map(|m| from_core(&m)).map_err(py_err)
}

/// Unconstrained combiner: `n_s` leading left singular vectors.
#[pyfunction]
fn optimal_combiner(h: Rows, n_s: usize) -> PyResult<Rows> {
    let h = to_core(&h).map_err(py_err)?;
    core_wopt(&h, n_s).map(|m| from_core(&m)).map_err(py_err)
}

/// Achievable rate in bits/s/Hz through precoder `f` and combiner `w`.
#[pyfunction]
fn spectral_efficiency(h: Rows, f: Rows, w: Rows, snr_db: f64) -> PyResult<f64> {
    let h = to_core(&h).map_err(py_err)?;
    let f = to_core(&f).map_err(py_err)?;
    let w = to_core(&w).map_err(py_err)?;
    core_rate(&h, &f, &w, &LinkBudget::from_snr_db(snr_db)).map_err(py_err)
}

/// Rate divided by consumed power; `structure` is 'fully' or 'partially'.
#[pyfunction]
#[pyo3(signature = (rate_bits, structure, n_t, n_rf,
                    p_common_w=10.0, p_rf_chain_w=0.1, p_phase_shifter_w=0.01, p_amplifier_w=0.1))]
#[allow(clippy::too_many_arguments)]
fn energy_efficiency(
    rate_bits: f64,
    structure: &str,
    n_t: usize,
    n_rf: usize,
    p_common_w: f64,
    p_rf_chain_w: f64,
    p_phase_shifter_w: f64,
    p_amplifier_w: f64,
) -> PyResult<f64> {
    let structure = parse_structure(structure).map_err(py_err)?;
    let power = PowerModel {
        common_w: p_common_w,
        per_rf_chain_w: p_rf_chain_w,
        per_phase_shifter_w: p_phase_shifter_w,
        per_amplifier_w: p_amplifier_w,
    };
    power.validate().map_err(py_err)?;
    Ok(core_energy(rate_bits, structure, n_t, n_rf, &power))
}

/// Manifold-based alternating design. `f_opts` is one target per subcarrier;
/// returns (analog, digitals, objective_trace).
#[pyfunction]
#[pyo3(signature = (f_opts, n_rf, seed=0))]
fn mo_altmin(f_opts: Vec<Rows>, n_rf: usize, seed: u64) -> PyResult<(Rows, Vec<Rows>, Vec<f64>)> {
    let targets = to_core_list(&f_opts).map_err(py_err)?;
    let (p, trace) = core_mo(&targets, n_rf, &AltMinParams::with_seed(seed)).map_err(py_err)?;
    let (analog, digitals) = precoder_parts(&p);
    Ok((analog, digitals, trace))
}

/// Phase-extraction alternating design; same shape as `mo_altmin` with the
/// surrogate objective as the trace.
#[pyfunction]
#[pyo3(signature = (f_opts, n_rf, seed=0))]
fn pe_altmin(f_opts: Vec<Rows>, n_rf: usize, seed: u64) -> PyResult<(Rows, Vec<Rows>, Vec<f64>)> {
    let targets = to_core_list(&f_opts).map_err(py_err)?;
    let (p, trace) = core_pe(&targets, n_rf, &AltMinParams::with_seed(seed)).map_err(py_err)?;
    let (analog, digitals) = precoder_parts(&p);
    Ok((analog, digitals, trace))
}

/// Partially-connected design via semidefinite relaxation. The returned
/// analog matrix is block sparse: one nonzero per antenna row.
#[pyfunction]
#[pyo3(signature = (f_opts, n_rf, seed=0))]
fn sdr_altmin(f_opts: Vec<Rows>, n_rf: usize, seed: u64) -> PyResult<(Rows, Vec<Rows>, Vec<f64>)> {
    let targets = to_core_list(&f_opts).map_err(py_err)?;
    let out = core_sdr(&targets, n_rf, &SdrParams::with_seed(seed)).map_err(py_err)?;
    let (analog, digitals) = precoder_parts(&out.precoder);
    Ok((analog, digitals, out.objective_trace))
}

/// Greedy dictionary baseline using the channel's cluster steering vectors.
#[pyfunction]
fn omp_hybrid(
    f_opts: Vec<Rows>,
    channel: PyRef<'_, Channel>,
    n_rf: usize,
) -> PyResult<(Rows, Vec<Rows>)> {
    let targets = to_core_list(&f_opts).map_err(py_err)?;
    let cands = CandidateSet::transmit_from(&channel.tx, &channel.realization).map_err(py_err)?;
    let p = core_omp(&targets, &cands, n_rf).map_err(py_err)?;
    Ok(precoder_parts(&p))
}

/// Receive-side greedy dictionary fit; no power normalization applies.
#[pyfunction]
fn omp_combiner(
    w_opts: Vec<Rows>,
    channel: PyRef<'_, Channel>,
    n_rf: usize,
) -> PyResult<(Rows, Vec<Rows>)> {
    let targets = to_core_list(&w_opts).map_err(py_err)?;
    let cands = CandidateSet::receive_from(&channel.rx, &channel.realization).map_err(py_err)?;
    let p = core_omp_rx(&targets, &cands, n_rf).map_err(py_err)?;
    Ok(precoder_parts(&p))
}

/// Analog-only reference: one phase-shifter column per stream steered at a
/// dominant propagation path, scaled-identity digital stage.
#[pyfunction]
#[pyo3(signature = (channel, n_s, n_subcarriers=1))]
fn analog_beamforming(
    channel: PyRef<'_, Channel>,
    n_s: usize,
    n_subcarriers: usize,
) -> PyResult<(Rows, Vec<Rows>)> {
    let p = core_analog(&channel.tx, &channel.realization, n_s, n_subcarriers).map_err(py_err)?;
    Ok(precoder_parts(&p))
}

/// Receive-side counterpart of `analog_beamforming` (arrival angles of the
/// same paths).
#[pyfunction]
#[pyo3(signature = (channel, n_s, n_subcarriers=1))]
fn analog_combining(
    channel: PyRef<'_, Channel>,
    n_s: usize,
    n_subcarriers: usize,
) -> PyResult<(Rows, Vec<Rows>)> {
    let p =
        core_analog_rx(&channel.rx, &channel.realization, n_s, n_subcarriers).map_err(py_err)?;
    Ok(precoder_parts(&p))
}

/// Runs a full Monte Carlo experiment from config text (flat `key = value`
/// lines) and returns the result table as CSV text.
#[pyfunction]
fn run_config(text: &str) -> PyResult<String> {
    let cfg = harness::parse_config(text).map_err(py_err)?;
    let rows = harness::run_experiment(&cfg).map_err(py_err)?;
    harness::render_csv(&rows).map_err(py_err)
}

#[pymodule]
fn hybridprec_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Channel>()?;
    m.add_function(wrap_pyfunction!(optimal_precoder, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_combiner, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_efficiency, m)?)?;
    m.add_function(wrap_pyfunction!(energy_efficiency, m)?)?;
    m.add_function(wrap_pyfunction!(mo_altmin, m)?)?;
    m.add_function(wrap_pyfunction!(pe_altmin, m)?)?;
    m.add_function(wrap_pyfunction!(sdr_altmin, m)?)?;
    m.add_function(wrap_pyfunction!(omp_hybrid, m)?)?;
    m.add_function(wrap_pyfunction!(omp_combiner, m)?)?;
    m.add_function(wrap_pyfunction!(analog_beamforming, m)?)?;
    m.add_function(wrap_pyfunction!(analog_combining, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_conversion_round_trips() {
        let rows: Rows = vec![
            vec![Complex64::new(1.0, -2.0), Complex64::new(0.0, 3.5)],
            vec![Complex64::new(-0.5, 0.0), Complex64::new(4.0, 1.0)],
            vec![Complex64::new(2.0, 2.0), Complex64::new(-1.0, -1.0)],
        ];
        let m = to_core(&rows).unwrap();
        assert_eq!((m.rows(), m.cols()), (3, 2));
        assert_eq!(from_core(&m), rows);
    }

    #[test]
    fn ragged_and_empty_matrices_are_rejected() {
        assert!(to_core(&[]).is_err());
        assert!(to_core(&[vec![]]).is_err());
        let ragged = vec![
            vec![Complex64::new(1.0, 0.0)],
            vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)],
        ];
        assert!(to_core(&ragged).is_err());
    }
}
