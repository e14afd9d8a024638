//! Clustered multipath channel for square planar arrays.
//!
//! A realization is a sum over clusters of ray bundles; each ray carries a
//! complex Gaussian gain and per-ray Laplacian angle offsets around the
//! cluster mean. Cluster `i` doubles as integer delay tap `i`, so the
//! frequency response at subcarrier `k` of `K` is
//! `H[k] = sum_i taps[i] * exp(-j 2 pi i k / K)`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

pub const DEFAULT_SPACING: f64 = 0.5;

/// Uniform square planar array with `n` elements (`n` a perfect square) and
/// element spacing given in wavelengths.
#[derive(Debug, Clone, Copy)]
pub struct ArrayGeometry {
    n: usize,
    side: usize,
    spacing: f64,
}

impl ArrayGeometry {
    pub fn new(n: usize, spacing: f64) -> Result<Self> {
        let side = (n as f64).sqrt().round() as usize;
        if n == 0 || side * side != n {
            return Err(Error::InvalidInput(format!(
                "array size {n} is not a positive perfect square"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "element spacing {spacing} must be positive"
            )));
        }
        Ok(Self { n, side, spacing })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, DEFAULT_SPACING)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }
}

/// Unit-norm steering vector. Element `n` sits at grid position
/// `(p, q) = (n / side, n % side)` and contributes
/// `exp(j 2 pi spacing (p sin(az) sin(el) + q cos(el))) / sqrt(N)`.
pub fn array_response(geom: &ArrayGeometry, azimuth: f64, elevation: f64) -> Vec<Complex64> {
    let scale = 1.0 / (geom.n as f64).sqrt();
    let a = azimuth.sin() * elevation.sin();
    let b = elevation.cos();
    let k = 2.0 * std::f64::consts::PI * geom.spacing;
    (0..geom.n)
        .map(|n| {
            let p = (n / geom.side) as f64;
            let q = (n % geom.side) as f64;
            Complex64::from_polar(scale, k * (p * a + q * b))
        })
        .collect()
}

/// Cluster layout. `cluster_powers` are relative per-cluster ray-gain
/// variances; they are rescaled internally so their sum equals the cluster
/// count, which keeps the mean squared channel norm at `n_t * n_r`.
#[derive(Debug, Clone)]
pub struct ClusterConfig {
    pub n_clusters: usize,
    pub n_rays: usize,
    pub angular_spread_deg: f64,
    pub cluster_powers: Vec<f64>,
}

impl ClusterConfig {
    pub fn new(
        n_clusters: usize,
        n_rays: usize,
        angular_spread_deg: f64,
        cluster_powers: Vec<f64>,
    ) -> Result<Self> {
        if n_clusters == 0 || n_rays == 0 {
            return Err(Error::InvalidInput(
                "cluster and ray counts must be positive".into(),
            ));
        }
        if cluster_powers.len() != n_clusters {
            return Err(Error::InvalidInput(format!(
                "{} cluster powers supplied for {} clusters",
                cluster_powers.len(),
                n_clusters
            )));
        }
        if cluster_powers.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidInput("cluster powers must be positive".into()));
        }
        if !(angular_spread_deg > 0.0 && angular_spread_deg.is_finite()) {
            return Err(Error::InvalidInput("angular spread must be positive".into()));
        }
        Ok(Self {
            n_clusters,
            n_rays,
            angular_spread_deg,
            cluster_powers,
        })
    }

    /// Five clusters of ten rays, 10 degree spread, equal powers.
    pub fn standard() -> Self {
        Self::new(5, 10, 10.0, vec![1.0; 5]).expect("valid standard config")
    }

    fn normalized_powers(&self) -> Vec<f64> {
        let sum: f64 = self.cluster_powers.iter().sum();
        let scale = self.n_clusters as f64 / sum;
        self.cluster_powers.iter().map(|&p| p * scale).collect()
    }
}

/// One drawn channel: ray gains, the four angle sets, per-cluster delay taps
/// and their sum (the narrowband matrix). `h_narrowband` is constructed as
/// the in-order sum of `cluster_taps`, so the two agree bit for bit.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub gains: ComplexMatrix,
    aod_az: Vec<f64>,
    aod_el: Vec<f64>,
    aoa_az: Vec<f64>,
    aoa_el: Vec<f64>,
    n_rays: usize,
    pub cluster_taps: Vec<ComplexMatrix>,
    pub h_narrowband: ComplexMatrix,
}

impl ChannelRealization {
    pub fn n_clusters(&self) -> usize {
        self.cluster_taps.len()
    }

    pub fn n_rays(&self) -> usize {
        self.n_rays
    }

    /// Departure (azimuth, elevation) of ray `l` in cluster `i`.
    pub fn aod(&self, i: usize, l: usize) -> (f64, f64) {
        let idx = i * self.n_rays + l;
        (self.aod_az[idx], self.aod_el[idx])
    }

    /// Arrival (azimuth, elevation) of ray `l` in cluster `i`.
    pub fn aoa(&self, i: usize, l: usize) -> (f64, f64) {
        let idx = i * self.n_rays + l;
        (self.aoa_az[idx], self.aoa_el[idx])
    }
}

fn laplace(rng: &mut impl Rng, scale: f64) -> f64 {
    // Inverse CDF; u is kept strictly inside (0, 1) so the log stays finite.
    let mut u: f64 = rng.gen();
    while u == 0.0 {
        u = rng.gen();
    }
    let centered = u - 0.5;
    -scale * centered.signum() * (1.0 - 2.0 * centered.abs()).ln()
}

/// Draws one channel realization. Sampling order is fixed: per cluster the
/// four mean angles (departure az/el, arrival az/el), then per ray the four
/// Laplacian offsets in the same order followed by the gain's real and
/// imaginary parts.
pub fn sample_channel(
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    cfg: &ClusterConfig,
    rng: &mut impl Rng,
) -> ChannelRealization {
    use std::f64::consts::PI;

    let n_cl = cfg.n_clusters;
    let n_ray = cfg.n_rays;
    let spread_rad = cfg.angular_spread_deg * PI / 180.0;
    // Laplacian scale with standard deviation equal to the angular spread.
    let lap_scale = spread_rad / std::f64::consts::SQRT_2;
    let powers = cfg.normalized_powers();
    let prefactor = ((tx.len() * rx.len()) as f64 / (n_cl * n_ray) as f64).sqrt();

    let mut gains = ComplexMatrix::zeros(n_cl, n_ray);
    let mut aod_az = vec![0.0; n_cl * n_ray];
    let mut aod_el = vec![0.0; n_cl * n_ray];
    let mut aoa_az = vec![0.0; n_cl * n_ray];
    let mut aoa_el = vec![0.0; n_cl * n_ray];
    let mut cluster_taps = Vec::with_capacity(n_cl);

    for i in 0..n_cl {
        let mean_aod_az = rng.gen::<f64>() * 2.0 * PI;
        let mean_aod_el = rng.gen::<f64>() * PI;
        let mean_aoa_az = rng.gen::<f64>() * 2.0 * PI;
        let mean_aoa_el = rng.gen::<f64>() * PI;
        let sigma = (powers[i] / 2.0).sqrt();
        let mut tap = ComplexMatrix::zeros(rx.len(), tx.len());
        for l in 0..n_ray {
            let idx = i * n_ray + l;
            aod_az[idx] = mean_aod_az + laplace(rng, lap_scale);
            aod_el[idx] = mean_aod_el + laplace(rng, lap_scale);
            aoa_az[idx] = mean_aoa_az + laplace(rng, lap_scale);
            aoa_el[idx] = mean_aoa_el + laplace(rng, lap_scale);
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let alpha = Complex64::new(sigma * re, sigma * im);
            gains.set(i, l, alpha);

            let at = array_response(tx, aod_az[idx], aod_el[idx]);
            let ar = array_response(rx, aoa_az[idx], aoa_el[idx]);
            let w = alpha * prefactor;
            for r in 0..rx.len() {
                let lhs = w * ar[r];
                for t in 0..tx.len() {
                    let cur = tap.get(r, t);
                    tap.set(r, t, cur + lhs * at[t].conj());
                }
            }
        }
        cluster_taps.push(tap);
    }

    let mut h = ComplexMatrix::zeros(rx.len(), tx.len());
    for tap in &cluster_taps {
        h = h.add(tap);
    }

    ChannelRealization {
        gains,
        aod_az,
        aod_el,
        aoa_az,
        aoa_el,
        n_rays: n_ray,
        cluster_taps,
        h_narrowband: h,
    }
}

/// Frequency response at subcarrier `k` of `n_subcarriers`, treating cluster
/// index as integer delay tap. For `n_subcarriers > 1` requires
/// `n_clusters <= n_subcarriers` so the taps stay resolvable (Parseval holds
/// under that condition); a single subcarrier collapses every tap to DC and
/// returns the narrowband matrix bit for bit.
pub fn frequency_channel(
    ch: &ChannelRealization,
    k: usize,
    n_subcarriers: usize,
) -> Result<ComplexMatrix> {
    if n_subcarriers == 0 || k >= n_subcarriers {
        return Err(Error::InvalidInput(format!(
            "subcarrier {k} out of range for {n_subcarriers}"
        )));
    }
    if n_subcarriers == 1 {
        return Ok(ch.h_narrowband.clone());
    }
    if ch.n_clusters() > n_subcarriers {
        return Err(Error::InvalidInput(format!(
            "{} delay taps need at least as many subcarriers, got {}",
            ch.n_clusters(),
            n_subcarriers
        )));
    }
    let (rows, cols) = ch.h_narrowband.shape();
    let mut h = ComplexMatrix::zeros(rows, cols);
    for (i, tap) in ch.cluster_taps.iter().enumerate() {
        let phase = -2.0 * std::f64::consts::PI * (i * k) as f64 / n_subcarriers as f64;
        let w = Complex64::from_polar(1.0, phase);
        h = h.add(&tap.scale_complex(w));
    }
    Ok(h)
}
