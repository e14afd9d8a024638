//! Reference designs the alternating methods are compared against: greedy
//! matching pursuit over a dictionary of array response vectors, and a
//! phased-array baseline that steers one subarray per stream with no digital
//! stage.

use num_complex::Complex64;

use crate::channel::{array_response, ArrayGeometry, ChannelRealization};
use crate::error::{Error, Result};
use crate::fully_connected::{validate_targets, HybridPrecoder};
use crate::numerics::ComplexMatrix;

/// Dictionary of candidate analog columns, one array response vector per
/// propagation path. Columns have norm one.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    matrix: ComplexMatrix,
}

impl CandidateSet {
    pub fn from_angles(geom: &ArrayGeometry, angles: &[(f64, f64)]) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::InvalidInput("empty candidate angle list".into()));
        }
        let n = geom.len();
        let cols: Vec<Vec<Complex64>> = angles
            .iter()
            .map(|&(az, el)| array_response(geom, az, el))
            .collect();
        let matrix = ComplexMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        Ok(Self { matrix })
    }

    /// Departure-side dictionary: one column per cluster/ray pair.
    pub fn transmit_from(geom: &ArrayGeometry, ch: &ChannelRealization) -> Result<Self> {
        let angles: Vec<(f64, f64)> = (0..ch.n_clusters())
            .flat_map(|i| (0..ch.n_rays()).map(move |l| (i, l)))
            .map(|(i, l)| ch.aod(i, l))
            .collect();
        Self::from_angles(geom, &angles)
    }

    /// Arrival-side dictionary: one column per cluster/ray pair.
    pub fn receive_from(geom: &ArrayGeometry, ch: &ChannelRealization) -> Result<Self> {
        let angles: Vec<(f64, f64)> = (0..ch.n_clusters())
            .flat_map(|i| (0..ch.n_rays()).map(move |l| (i, l)))
            .map(|(i, l)| ch.aoa(i, l))
            .collect();
        Self::from_angles(geom, &angles)
    }

    pub fn len(&self) -> usize {
        self.matrix.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.cols() == 0
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

fn omp_core(
    f_opts: &[ComplexMatrix],
    cands: &CandidateSet,
    n_rf: usize,
    normalize: bool,
) -> Result<HybridPrecoder> {
    let (n_t, n_s) = validate_targets(f_opts, n_rf)?;
    if cands.matrix.rows() != n_t {
        return Err(Error::InvalidInput(format!(
            "candidate vectors have {} entries, targets have {n_t} rows",
            cands.matrix.rows()
        )));
    }
    if cands.len() < n_rf {
        return Err(Error::InvalidInput(format!(
            "need at least {n_rf} candidates, have {}",
            cands.len()
        )));
    }

    let dict_h = cands.matrix.hermitian();
    let mut residuals: Vec<ComplexMatrix> = f_opts.to_vec();
    let mut selected: Vec<usize> = Vec::with_capacity(n_rf);
    let mut analog = ComplexMatrix::zeros(n_t, 0);
    let mut digital: Vec<ComplexMatrix> = Vec::new();
    let scale = (n_t as f64).sqrt();

    for _ in 0..n_rf {
        // Correlation energy of every candidate against all residuals; the
        // shared support across subcarriers forces one common dictionary
        // column per step.
        let mut scores = vec![0.0f64; cands.len()];
        for r in &residuals {
            let corr = dict_h.mul(r);
            for (c, score) in scores.iter_mut().enumerate() {
                *score += corr.row(c).iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
        }
        let pick = scores
            .iter()
            .enumerate()
            .filter(|(c, _)| !selected.contains(c))
            // Strict comparison keeps the earliest index on ties.
            .fold(None::<(usize, f64)>, |best, (c, &s)| match best {
                Some((_, bs)) if s <= bs => best,
                _ => Some((c, s)),
            })
            .map(|(c, _)| c)
            .expect("candidate count checked above");
        selected.push(pick);

        let picked_col = ComplexMatrix::from_fn(n_t, 1, |i, _| {
            cands.matrix.get(i, pick) * scale
        });
        analog = ComplexMatrix::hstack(&[&analog, &picked_col]);

        let pinv = analog.pinv()?;
        digital = f_opts.iter().map(|f| pinv.mul(f)).collect();
        residuals = f_opts
            .iter()
            .zip(&digital)
            .map(|(f, d)| {
                let r = f.sub(&analog.mul(d));
                let norm = r.frobenius_norm();
                if norm > 1e-300 {
                    r.scale(1.0 / norm)
                } else {
                    r
                }
            })
            .collect();
    }

    let digital = if normalize {
        digital
            .iter()
            .map(|d| {
                let norm = analog.mul(d).frobenius_norm();
                if norm <= f64::MIN_POSITIVE.sqrt() {
                    return Err(Error::DegeneratePrecoder(
                        "matching pursuit produced a zero-power precoder".into(),
                    ));
                }
                Ok(d.scale((n_s as f64).sqrt() / norm))
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        digital
    };

    Ok(HybridPrecoder { analog, digital })
}

/// Greedy hybrid design: picks `n_rf` dictionary columns by correlation with
/// the running residual (summed over subcarriers), refits the digital part by
/// least squares after every pick, and rescales to the transmit power.
pub fn omp_hybrid(
    f_opts: &[ComplexMatrix],
    cands: &CandidateSet,
    n_rf: usize,
) -> Result<HybridPrecoder> {
    omp_core(f_opts, cands, n_rf, true)
}

/// Combiner variant: identical selection and fit, no power normalization.
pub fn omp_combiner(
    w_opts: &[ComplexMatrix],
    cands: &CandidateSet,
    n_rf: usize,
) -> Result<HybridPrecoder> {
    omp_core(w_opts, cands, n_rf, false)
}

/// The `n_s` strongest propagation paths of a realization, ranked by gain
/// magnitude with the global path index breaking exact ties. While streams
/// are few enough, at most one path per cluster is taken (each cluster is
/// represented by its strongest ray) so the beams stay angularly separated;
/// once streams outnumber clusters the plain ranking is used.
fn strongest_paths(ch: &ChannelRealization, n_s: usize) -> Result<Vec<(usize, usize)>> {
    let total = ch.n_clusters() * ch.n_rays();
    if n_s == 0 || n_s > total {
        return Err(Error::InvalidInput(format!(
            "need between 1 and {total} steered streams, asked for {n_s}"
        )));
    }
    let mut ranked: Vec<(usize, usize)> = (0..ch.n_clusters())
        .flat_map(|i| (0..ch.n_rays()).map(move |l| (i, l)))
        .collect();
    ranked.sort_by(|a, b| {
        let ga = ch.gains.get(a.0, a.1).norm_sqr();
        let gb = ch.gains.get(b.0, b.1).norm_sqr();
        gb.partial_cmp(&ga).expect("finite gains").then(a.cmp(b))
    });
    if n_s > ch.n_clusters() {
        return Ok(ranked[..n_s].to_vec());
    }
    let mut picked = Vec::with_capacity(n_s);
    let mut used = vec![false; ch.n_clusters()];
    for &(i, l) in &ranked {
        if !used[i] {
            used[i] = true;
            picked.push((i, l));
            if picked.len() == n_s {
                break;
            }
        }
    }
    Ok(picked)
}

fn steering(
    geom: &ArrayGeometry,
    angles: &[(f64, f64)],
    n_subcarriers: usize,
) -> Result<HybridPrecoder> {
    if n_subcarriers == 0 {
        return Err(Error::InvalidInput("need at least one subcarrier".into()));
    }
    let n = geom.len();
    let n_s = angles.len();
    if n_s > n {
        return Err(Error::InvalidInput(format!(
            "cannot steer {n_s} subarrays with {n} antennas"
        )));
    }
    let set = CandidateSet::from_angles(geom, angles)?;
    let scale = (n as f64).sqrt();
    let mut analog = ComplexMatrix::zeros(n, n_s);
    for i in 0..n {
        // Same contiguous antenna-to-chain mapping as the block precoder.
        let j = ((i + 1) * n_s).div_ceil(n) - 1;
        analog.set(i, j, set.matrix().get(i, j) * scale);
    }
    let digital =
        vec![ComplexMatrix::identity(n_s).scale((n_s as f64 / n as f64).sqrt()); n_subcarriers];
    Ok(HybridPrecoder { analog, digital })
}

/// Phased-array baseline: the array is split into one contiguous subarray per
/// stream and each subarray's phase shifters steer at the departure angle of
/// a dominant propagation path; the digital part is frozen to a scaled
/// identity meeting the transmit power exactly. This is the partially
/// connected hardware driven without digital processing, which is what the
/// hybrid designs are measured against.
pub fn analog_beamforming(
    geom: &ArrayGeometry,
    ch: &ChannelRealization,
    n_s: usize,
    n_subcarriers: usize,
) -> Result<HybridPrecoder> {
    let angles: Vec<(f64, f64)> = strongest_paths(ch, n_s)?
        .into_iter()
        .map(|(i, l)| ch.aod(i, l))
        .collect();
    steering(geom, &angles, n_subcarriers)
}

/// Receive-side counterpart of [`analog_beamforming`], steered at the arrival
/// angles of the same selected paths.
pub fn analog_combining(
    geom: &ArrayGeometry,
    ch: &ChannelRealization,
    n_s: usize,
    n_subcarriers: usize,
) -> Result<HybridPrecoder> {
    let angles: Vec<(f64, f64)> = strongest_paths(ch, n_s)?
        .into_iter()
        .map(|(i, l)| ch.aoa(i, l))
        .collect();
    steering(geom, &angles, n_subcarriers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_angles(count: usize, rng: &mut impl Rng) -> Vec<(f64, f64)> {
        (0..count)
            .map(|_| {
                (
                    rng.gen::<f64>() * std::f64::consts::TAU,
                    rng.gen::<f64>() * std::f64::consts::PI,
                )
            })
            .collect()
    }

    fn random_mix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            c(
                rng.sample::<f64, _>(rand_distr::StandardNormal),
                rng.sample::<f64, _>(rand_distr::StandardNormal),
            )
        })
    }

    #[test]
    fn candidate_columns_are_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let geom = ArrayGeometry::square(16).unwrap();
        let cands = CandidateSet::from_angles(&geom, &random_angles(10, &mut rng)).unwrap();
        for j in 0..cands.len() {
            let norm: f64 = cands
                .matrix()
                .column(j)
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    /// Response directions on the half-integer beamspace grid of a 4x4 array
    /// are mutually orthogonal, which makes greedy support recovery exact.
    fn orthogonal_grid_angles() -> Vec<(f64, f64)> {
        let half = std::f64::consts::FRAC_PI_2;
        vec![
            (0.5f64.asin(), half),   // u = 0.5, v = 0
            (0.0, half),             // u = 0,   v = 0
            ((-0.5f64).asin(), half), // u = -0.5, v = 0
            (-half, half),           // u = -1,  v = 0
            (0.0, 0.5f64.acos()),    // u = 0,   v = 0.5
            (0.0, (-0.5f64).acos()), // u = 0,   v = -0.5
        ]
    }

    #[test]
    fn exactly_spanned_targets_are_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let geom = ArrayGeometry::square(16).unwrap();
        let cands = CandidateSet::from_angles(&geom, &orthogonal_grid_angles()).unwrap();
        let gram = cands.matrix().hermitian().mul(cands.matrix());
        assert!(gram.sub(&ComplexMatrix::identity(6)).frobenius_norm() < 1e-12);

        // Target living in the span of three dictionary columns.
        let chosen = [1usize, 3, 4];
        let a_sub = ComplexMatrix::from_fn(16, 3, |i, j| cands.matrix().get(i, chosen[j]));
        let mix = random_mix(3, 2, &mut rng);
        let raw = a_sub.mul(&mix);
        let f_opt = raw.scale((2.0f64).sqrt() / raw.frobenius_norm());

        let prec = omp_hybrid(&[f_opt.clone()], &cands, 3).unwrap();
        let err = f_opt.sub(&prec.effective(0)).frobenius_norm();
        assert!(err < 1e-8, "reconstruction error {err}");
        for z in prec.analog.data() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicate_candidates_break_ties_toward_lowest_index() {
        let geom = ArrayGeometry::square(4).unwrap();
        let angle = (0.7, 1.1);
        // Identical columns at indices 0 and 1; distinct column at 2.
        let cands = CandidateSet::from_angles(&geom, &[angle, angle, (2.1, 0.4)]).unwrap();
        let c0 = ComplexMatrix::from_fn(4, 1, |i, _| cands.matrix().get(i, 0));
        let c2 = ComplexMatrix::from_fn(4, 1, |i, _| cands.matrix().get(i, 2));
        // Dominant weight on the duplicated direction so the tied pair wins
        // the first pick; the tie must resolve to index 0. The second pick
        // then sees only the remaining distinct direction in the residual.
        let raw = c0.scale(3.0).add(&c2);
        let f_opt = raw.scale(1.0 / raw.frobenius_norm());
        let prec = omp_hybrid(&[f_opt], &cands, 2).unwrap();
        let col0 = ComplexMatrix::from_fn(4, 1, |i, _| prec.analog.get(i, 0));
        assert!(col0.sub(&c0.scale(2.0)).frobenius_norm() < 1e-12);
        let col1 = ComplexMatrix::from_fn(4, 1, |i, _| prec.analog.get(i, 1));
        assert!(col1.sub(&c2.scale(2.0)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn transmit_power_is_met_per_subcarrier() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let geom = ArrayGeometry::square(16).unwrap();
        let cands = CandidateSet::from_angles(&geom, &random_angles(20, &mut rng)).unwrap();
        let t1 = random_mix(16, 2, &mut rng);
        let t2 = random_mix(16, 2, &mut rng);
        let f_opts = vec![
            t1.scale((2.0f64).sqrt() / t1.frobenius_norm()),
            t2.scale((2.0f64).sqrt() / t2.frobenius_norm()),
        ];
        let prec = omp_hybrid(&f_opts, &cands, 4).unwrap();
        for k in 0..2 {
            let power = prec.effective(k).frobenius_norm_sq();
            assert!((power - 2.0).abs() < 1e-9, "power {power} at subcarrier {k}");
        }
    }

    #[test]
    fn more_chains_never_fit_worse() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let geom = ArrayGeometry::square(16).unwrap();
        let cands = CandidateSet::from_angles(&geom, &random_angles(30, &mut rng)).unwrap();
        let raw = random_mix(16, 2, &mut rng);
        let f_opt = vec![raw.scale((2.0f64).sqrt() / raw.frobenius_norm())];
        // Compare pre-normalization fits through the combiner variant.
        let small = omp_combiner(&f_opt, &cands, 2).unwrap();
        let large = omp_combiner(&f_opt, &cands, 6).unwrap();
        let err_small = f_opt[0].sub(&small.effective(0)).frobenius_norm();
        let err_large = f_opt[0].sub(&large.effective(0)).frobenius_norm();
        assert!(err_large <= err_small + 1e-12);
    }

    #[test]
    fn combiner_fit_solves_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let geom = ArrayGeometry::square(16).unwrap();
        let cands = CandidateSet::from_angles(&geom, &random_angles(15, &mut rng)).unwrap();
        let w_opt = vec![random_mix(16, 2, &mut rng)];
        let comb = omp_combiner(&w_opt, &cands, 3).unwrap();
        let resid = w_opt[0].sub(&comb.analog.mul(&comb.digital[0]));
        let check = comb.analog.hermitian().mul(&resid);
        assert!(check.frobenius_norm() < 1e-9);
    }

    #[test]
    fn steering_meets_power_and_respects_subarray_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let tx = ArrayGeometry::square(16).unwrap();
        let rx = ArrayGeometry::square(16).unwrap();
        let cfg = crate::channel::ClusterConfig::standard();
        let ch = crate::channel::sample_channel(&tx, &rx, &cfg, &mut rng);
        let n_s = 3;
        let prec = analog_beamforming(&tx, &ch, n_s, 2).unwrap();
        assert_eq!(prec.digital.len(), 2);
        // Each antenna feeds exactly one beam: unit modulus on its own
        // contiguous block, exact zero elsewhere.
        for i in 0..16 {
            let own = ((i + 1) * n_s).div_ceil(16) - 1;
            for j in 0..n_s {
                let z = prec.analog.get(i, j);
                if j == own {
                    assert!((z.norm() - 1.0).abs() < 1e-12);
                } else {
                    assert_eq!(z, c(0.0, 0.0));
                }
            }
        }
        for k in 0..2 {
            let power = prec.effective(k).frobenius_norm_sq();
            assert!((power - 3.0).abs() < 1e-12, "power {power}");
        }
    }

    /// Independent restatement of the selection rule for n_s <= n_clusters:
    /// each cluster is represented by its strongest ray, and the clusters
    /// with the largest such gains win, ordered strongest first.
    #[test]
    fn steered_columns_point_at_strongest_per_cluster_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let tx = ArrayGeometry::square(64).unwrap();
        let rx = ArrayGeometry::square(16).unwrap();
        let cfg = crate::channel::ClusterConfig::standard();
        let ch = crate::channel::sample_channel(&tx, &rx, &cfg, &mut rng);

        let mut best: Vec<(f64, usize, usize)> = (0..ch.n_clusters())
            .map(|i| {
                (0..ch.n_rays())
                    .map(|l| (ch.gains.get(i, l).norm_sqr(), i, l))
                    .fold((f64::NEG_INFINITY, 0, 0), |acc, cur| {
                        if cur.0 > acc.0 {
                            cur
                        } else {
                            acc
                        }
                    })
            })
            .collect();
        best.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

        let n_s = 3;
        let prec = analog_beamforming(&tx, &ch, n_s, 1).unwrap();
        let comb = analog_combining(&rx, &ch, n_s, 1).unwrap();
        for (j, &(_, i, l)) in best.iter().take(n_s).enumerate() {
            let (az, el) = ch.aod(i, l);
            let want = array_response(&tx, az, el);
            for (row, w) in want.iter().enumerate() {
                let got = prec.analog.get(row, j);
                if ((row + 1) * n_s).div_ceil(64) - 1 == j {
                    assert!((got - w * 8.0).norm() < 1e-12);
                } else {
                    assert_eq!(got, c(0.0, 0.0));
                }
            }
            let (az, el) = ch.aoa(i, l);
            let want = array_response(&rx, az, el);
            for (row, w) in want.iter().enumerate() {
                let got = comb.analog.get(row, j);
                if ((row + 1) * n_s).div_ceil(16) - 1 == j {
                    assert!((got - w * 4.0).norm() < 1e-12);
                } else {
                    assert_eq!(got, c(0.0, 0.0));
                }
            }
        }
    }

    /// With more streams than clusters the per-cluster cap lifts and the
    /// plain gain ranking decides.
    #[test]
    fn steering_beyond_cluster_count_uses_global_ranking() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let tx = ArrayGeometry::square(16).unwrap();
        let cfg = crate::channel::ClusterConfig::standard();
        let ch = crate::channel::sample_channel(&tx, &tx, &cfg, &mut rng);

        let mut ranked: Vec<(f64, usize, usize)> = (0..ch.n_clusters())
            .flat_map(|i| (0..ch.n_rays()).map(move |l| (i, l)))
            .map(|(i, l)| (ch.gains.get(i, l).norm_sqr(), i, l))
            .collect();
        ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

        let n_s = 7; // above the 5 clusters of the standard config
        let prec = analog_beamforming(&tx, &ch, n_s, 1).unwrap();
        for (j, &(_, i, l)) in ranked.iter().take(n_s).enumerate() {
            let (az, el) = ch.aod(i, l);
            let want = array_response(&tx, az, el);
            for (row, w) in want.iter().enumerate() {
                if ((row + 1) * n_s).div_ceil(16) - 1 == j {
                    assert!((prec.analog.get(row, j) - w * 4.0).norm() < 1e-12);
                } else {
                    assert_eq!(prec.analog.get(row, j), c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn steering_validates_stream_and_subarray_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let tx = ArrayGeometry::square(16).unwrap();
        let cfg = crate::channel::ClusterConfig::standard();
        let ch = crate::channel::sample_channel(&tx, &tx, &cfg, &mut rng);
        assert!(analog_beamforming(&tx, &ch, 0, 1).is_err());
        assert!(analog_beamforming(&tx, &ch, 51, 1).is_err());
        assert!(analog_beamforming(&tx, &ch, 3, 0).is_err());
        // 50 paths exist but only 16 antennas: one subarray per stream is
        // impossible past the antenna count.
        assert!(analog_combining(&tx, &ch, 50, 1).is_err());
        assert!(analog_combining(&tx, &ch, 16, 1).is_ok());
    }

    #[test]
    fn dictionary_from_channel_has_one_column_per_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let tx = ArrayGeometry::square(16).unwrap();
        let rx = ArrayGeometry::square(4).unwrap();
        let cfg = crate::channel::ClusterConfig::standard();
        let ch = crate::channel::sample_channel(&tx, &rx, &cfg, &mut rng);
        let t = CandidateSet::transmit_from(&tx, &ch).unwrap();
        let r = CandidateSet::receive_from(&rx, &ch).unwrap();
        assert_eq!(t.len(), 50);
        assert_eq!(r.len(), 50);
        assert_eq!(t.matrix().rows(), 16);
        assert_eq!(r.matrix().rows(), 4);
    }
}
