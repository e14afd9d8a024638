//! Seeded Monte Carlo experiment runner. A flat `key = value` config picks a
//! transceiver geometry and an algorithm list, [`run_experiment`] averages
//! spectral and energy efficiency over channel realizations, and the rows
//! serialize to CSV or a CSV-plus-plot-script bundle.
//!
//! Determinism contract: realization `r` draws everything it needs from
//! stream `r + 1` of a counter-mode generator keyed by the config seed, and
//! the reduction runs in realization order, so output bytes depend only on
//! the config, never on worker count or scheduling.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::{
    analog_beamforming, analog_combining, omp_combiner, omp_hybrid, CandidateSet,
};
use crate::channel::{
    frequency_channel, sample_channel, ArrayGeometry, ChannelRealization, ClusterConfig,
};
use crate::error::{Error, Result};
use crate::fully_connected::{
    design_combiner, mo_altmin, pe_altmin, AltMinKind, AltMinParams, HybridPrecoder,
};
use crate::numerics::ComplexMatrix;
use crate::partially_connected::{design_block_combiner, sdr_altmin, SdrParams};
use crate::reference::{
    energy_efficiency, optimal_combiner, optimal_precoder, spectral_efficiency_avg, LinkBudget,
    PowerModel,
};
use crate::Structure;

/// Precoder/combiner design methods the runner can compare. `Digital` and
/// `Analog` are the unconstrained and all-phase-shifter reference points; the
/// three alternating designs and the greedy dictionary fit are the hybrids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Digital,
    MoAltMin,
    PeAltMin,
    SdrAltMin,
    Omp,
    Analog,
}

impl Algorithm {
    const ALL: [Algorithm; 6] = [
        Algorithm::Digital,
        Algorithm::MoAltMin,
        Algorithm::PeAltMin,
        Algorithm::SdrAltMin,
        Algorithm::Omp,
        Algorithm::Analog,
    ];

    fn token(self) -> &'static str {
        match self {
            Algorithm::Digital => "digital",
            Algorithm::MoAltMin => "mo-altmin",
            Algorithm::PeAltMin => "pe-altmin",
            Algorithm::SdrAltMin => "sdr-altmin",
            Algorithm::Omp => "omp",
            Algorithm::Analog => "analog",
        }
    }

    /// Structure an algorithm's result row is labeled with. The alternating
    /// designs are tied to one wiring; the reference points use no phase
    /// shifters at all (digital) or a fixed bank (analog) and inherit the
    /// config's structure for energy accounting.
    fn row_structure(self, cfg_structure: Structure) -> Structure {
        match self {
            Algorithm::MoAltMin | Algorithm::PeAltMin | Algorithm::Omp => {
                Structure::FullyConnected
            }
            Algorithm::SdrAltMin => Structure::PartiallyConnected,
            Algorithm::Digital | Algorithm::Analog => cfg_structure,
        }
    }

    fn compatible_with(self, structure: Structure) -> bool {
        self.row_structure(structure) == structure
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.token() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm '{s}'")))
    }
}

/// Receive-side mode: design a hybrid combiner with the matching algorithm,
/// or decode with the unconstrained combiner to isolate transmit-side loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinerMode {
    Hybrid,
    OptimalDigital,
}

impl fmt::Display for CombinerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CombinerMode::Hybrid => "hybrid",
            CombinerMode::OptimalDigital => "optimal-digital",
        })
    }
}

impl FromStr for CombinerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hybrid" => Ok(CombinerMode::Hybrid),
            "optimal-digital" => Ok(CombinerMode::OptimalDigital),
            other => Err(Error::Config(format!(
                "unknown combiner mode '{other}' (expected 'hybrid' or 'optimal-digital')"
            ))),
        }
    }
}

/// One Monte Carlo experiment: geometry, algorithms, SNR grid, realization
/// count, and the seeding that makes reruns byte-identical.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub n_t: usize,
    pub n_r: usize,
    pub n_s: usize,
    pub n_rf_t: usize,
    pub n_rf_r: usize,
    pub structure: Structure,
    pub algorithms: Vec<Algorithm>,
    pub snr_db: Vec<f64>,
    pub realizations: usize,
    pub subcarriers: usize,
    pub channel: ClusterConfig,
    pub power: PowerModel,
    pub seed: u64,
    pub combiner_mode: CombinerMode,
}

impl Default for ExperimentConfig {
    /// 144x36 planar arrays, 3 streams on 3 chains per side, -15..10 dB.
    fn default() -> Self {
        Self {
            n_t: 144,
            n_r: 36,
            n_s: 3,
            n_rf_t: 3,
            n_rf_r: 3,
            structure: Structure::FullyConnected,
            algorithms: vec![
                Algorithm::Digital,
                Algorithm::MoAltMin,
                Algorithm::PeAltMin,
                Algorithm::Omp,
            ],
            snr_db: vec![-15.0, -10.0, -5.0, 0.0, 5.0, 10.0],
            realizations: 1000,
            subcarriers: 1,
            channel: ClusterConfig::standard(),
            power: PowerModel::default(),
            seed: 42,
            combiner_mode: CombinerMode::Hybrid,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        ArrayGeometry::square(self.n_t)?;
        ArrayGeometry::square(self.n_r)?;
        if self.n_s == 0 {
            return Err(Error::Config("stream count must be positive".into()));
        }
        if !(self.n_s <= self.n_rf_t && self.n_rf_t <= self.n_t) {
            return Err(Error::Config(format!(
                "need n_s <= n_rf_t <= n_t, got {} / {} / {}",
                self.n_s, self.n_rf_t, self.n_t
            )));
        }
        if !(self.n_s <= self.n_rf_r && self.n_rf_r <= self.n_r) {
            return Err(Error::Config(format!(
                "need n_s <= n_rf_r <= n_r, got {} / {} / {}",
                self.n_s, self.n_rf_r, self.n_r
            )));
        }
        if self.structure == Structure::PartiallyConnected
            && (self.n_t % self.n_rf_t != 0 || self.n_r % self.n_rf_r != 0)
        {
            return Err(Error::Config(format!(
                "partially-connected arrays need equal subarrays: {} % {} and {} % {} must be 0",
                self.n_t, self.n_rf_t, self.n_r, self.n_rf_r
            )));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms requested".into()));
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return Err(Error::Config(format!("algorithm '{a}' listed twice")));
            }
            if !a.compatible_with(self.structure) {
                return Err(Error::Config(format!(
                    "algorithm '{a}' requires the {} structure",
                    a.row_structure(self.structure)
                )));
            }
        }
        if self.snr_db.is_empty() {
            return Err(Error::Config("empty SNR grid".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("SNR grid contains a non-finite value".into()));
        }
        if self.realizations == 0 {
            return Err(Error::Config("realization count must be positive".into()));
        }
        if self.subcarriers == 0 {
            return Err(Error::Config("subcarrier count must be positive".into()));
        }
        if self.subcarriers > 1 && self.channel.n_clusters > self.subcarriers {
            return Err(Error::Config(format!(
                "{} delay clusters do not fit {} subcarriers",
                self.channel.n_clusters, self.subcarriers
            )));
        }
        // Re-run the channel config's own checks; the fields are public.
        ClusterConfig::new(
            self.channel.n_clusters,
            self.channel.n_rays,
            self.channel.angular_spread_deg,
            self.channel.cluster_powers.clone(),
        )
        .map_err(|e| Error::Config(e.to_string()))?;
        self.power.validate()?;
        Ok(())
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| {
        Error::Config(format!("line {line}: cannot parse '{value}' for key '{key}'"))
    })
}

fn parse_list<T: FromStr>(key: &str, value: &str, line: usize) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|item| parse_num(key, item.trim(), line))
        .collect()
}

/// Parses the flat `key = value` config format. Unknown and repeated keys
/// are errors; anything omitted keeps its default.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut clusters = cfg.channel.n_clusters;
    let mut rays = cfg.channel.n_rays;
    let mut spread = cfg.channel.angular_spread_deg;
    let mut cluster_powers: Option<Vec<f64>> = None;
    let mut seen: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| Error::Config(format!("line {ln}: expected 'key = value'")))?;
        if value.is_empty() {
            return Err(Error::Config(format!("line {ln}: key '{key}' has no value")));
        }
        if seen.iter().any(|s| s == key) {
            return Err(Error::Config(format!("line {ln}: key '{key}' repeated")));
        }
        seen.push(key.to_string());

        match key {
            "n_t" => cfg.n_t = parse_num(key, value, ln)?,
            "n_r" => cfg.n_r = parse_num(key, value, ln)?,
            "n_s" => cfg.n_s = parse_num(key, value, ln)?,
            "n_rf_t" => cfg.n_rf_t = parse_num(key, value, ln)?,
            "n_rf_r" => cfg.n_rf_r = parse_num(key, value, ln)?,
            "structure" => cfg.structure = value.parse()?,
            "algorithms" => {
                cfg.algorithms = value
                    .split(',')
                    .map(|a| a.trim().parse())
                    .collect::<Result<Vec<_>>>()?;
            }
            "snr_db" => cfg.snr_db = parse_list(key, value, ln)?,
            "realizations" => cfg.realizations = parse_num(key, value, ln)?,
            "subcarriers" => cfg.subcarriers = parse_num(key, value, ln)?,
            "seed" => cfg.seed = parse_num(key, value, ln)?,
            "combiner_mode" => cfg.combiner_mode = value.parse()?,
            "clusters" => clusters = parse_num(key, value, ln)?,
            "rays" => rays = parse_num(key, value, ln)?,
            "angular_spread_deg" => spread = parse_num(key, value, ln)?,
            "cluster_powers" => cluster_powers = Some(parse_list(key, value, ln)?),
            "p_common_w" => cfg.power.common_w = parse_num(key, value, ln)?,
            "p_rf_chain_w" => cfg.power.per_rf_chain_w = parse_num(key, value, ln)?,
            "p_phase_shifter_w" => cfg.power.per_phase_shifter_w = parse_num(key, value, ln)?,
            "p_amplifier_w" => cfg.power.per_amplifier_w = parse_num(key, value, ln)?,
            other => {
                return Err(Error::Config(format!("line {ln}: unknown key '{other}'")));
            }
        }
    }

    let powers = cluster_powers.unwrap_or_else(|| vec![1.0; clusters]);
    cfg.channel =
        ClusterConfig::new(clusters, rays, spread, powers).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Aggregated metrics for one (algorithm, SNR) cell of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub algorithm: Algorithm,
    pub structure: Structure,
    pub snr_db: f64,
    pub n_rf: usize,
    pub subcarriers: usize,
    pub mean_rate: f64,
    pub std_rate: f64,
    pub mean_energy_eff: f64,
    pub realizations: usize,
    pub wall_time_s: f64,
}

fn design_pair(
    cfg: &ExperimentConfig,
    algo: Algorithm,
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    ch: &ChannelRealization,
    f_opts: &[ComplexMatrix],
    w_opts: &[ComplexMatrix],
    tx_seed: u64,
    rx_seed: u64,
) -> Result<(Vec<ComplexMatrix>, Vec<ComplexMatrix>)> {
    let k_total = f_opts.len();
    let expand = |p: &HybridPrecoder| (0..k_total).map(|k| p.effective(k)).collect::<Vec<_>>();
    let hybrid_rx = cfg.combiner_mode == CombinerMode::Hybrid;

    match algo {
        Algorithm::Digital => Ok((f_opts.to_vec(), w_opts.to_vec())),
        Algorithm::Analog => {
            let f = analog_beamforming(tx, ch, cfg.n_s, k_total)?;
            let w = if hybrid_rx {
                expand(&analog_combining(rx, ch, cfg.n_s, k_total)?)
            } else {
                w_opts.to_vec()
            };
            Ok((expand(&f), w))
        }
        Algorithm::MoAltMin | Algorithm::PeAltMin => {
            let kind = if algo == Algorithm::MoAltMin {
                AltMinKind::ManifoldCg
            } else {
                AltMinKind::PhaseExtraction
            };
            let params = AltMinParams::with_seed(tx_seed);
            let (f, _) = match kind {
                AltMinKind::ManifoldCg => mo_altmin(f_opts, cfg.n_rf_t, &params)?,
                AltMinKind::PhaseExtraction => pe_altmin(f_opts, cfg.n_rf_t, &params)?,
            };
            let w = if hybrid_rx {
                let (c, _) =
                    design_combiner(w_opts, cfg.n_rf_r, kind, &AltMinParams::with_seed(rx_seed))?;
                expand(&c)
            } else {
                w_opts.to_vec()
            };
            Ok((expand(&f), w))
        }
        Algorithm::SdrAltMin => {
            let out = sdr_altmin(f_opts, cfg.n_rf_t, &SdrParams::with_seed(tx_seed))?;
            let w = if hybrid_rx {
                let (c, _) =
                    design_block_combiner(w_opts, cfg.n_rf_r, &AltMinParams::with_seed(rx_seed))?;
                expand(&c)
            } else {
                w_opts.to_vec()
            };
            Ok((expand(&out.precoder), w))
        }
        Algorithm::Omp => {
            let f = omp_hybrid(f_opts, &CandidateSet::transmit_from(tx, ch)?, cfg.n_rf_t)?;
            let w = if hybrid_rx {
                expand(&omp_combiner(
                    w_opts,
                    &CandidateSet::receive_from(rx, ch)?,
                    cfg.n_rf_r,
                )?)
            } else {
                w_opts.to_vec()
            };
            Ok((expand(&f), w))
        }
    }
}

/// Rates for one realization, indexed `[algorithm][snr]`. Each algorithm
/// designs once (the factorization is SNR-independent) and is evaluated on
/// the whole SNR grid.
fn realization_rates(
    cfg: &ExperimentConfig,
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    r: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(r as u64 + 1);
    let ch = sample_channel(tx, rx, &cfg.channel, &mut rng);

    let hs: Vec<ComplexMatrix> = if cfg.subcarriers == 1 {
        vec![ch.h_narrowband.clone()]
    } else {
        (0..cfg.subcarriers)
            .map(|k| frequency_channel(&ch, k, cfg.subcarriers))
            .collect::<Result<_>>()?
    };
    let f_opts: Vec<ComplexMatrix> = hs
        .iter()
        .map(|h| optimal_precoder(h, cfg.n_s))
        .collect::<Result<_>>()?;
    let w_opts: Vec<ComplexMatrix> = hs
        .iter()
        .map(|h| optimal_combiner(h, cfg.n_s))
        .collect::<Result<_>>()?;

    let mut per_algo = Vec::with_capacity(cfg.algorithms.len());
    for &algo in &cfg.algorithms {
        // Seeds are drawn for every algorithm so the stream position after
        // each entry is fixed regardless of which designs consume them.
        let tx_seed = rng.gen::<u64>();
        let rx_seed = rng.gen::<u64>();
        let (f, w) = design_pair(cfg, algo, tx, rx, &ch, &f_opts, &w_opts, tx_seed, rx_seed)?;
        let rates = cfg
            .snr_db
            .iter()
            .map(|&snr| spectral_efficiency_avg(&hs, &f, &w, &LinkBudget::from_snr_db(snr)))
            .collect::<Result<Vec<_>>>()?;
        per_algo.push(rates);
    }
    Ok(per_algo)
}

/// Runs the full Monte Carlo experiment. Realizations execute on the current
/// rayon pool; the reduction is ordered, so the rows are identical for any
/// worker count. `wall_time_s` is fixed at 0 to keep output bytes
/// reproducible; callers wanting timing should measure around this call.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let tx = ArrayGeometry::square(cfg.n_t)?;
    let rx = ArrayGeometry::square(cfg.n_r)?;

    let rates: Vec<Vec<Vec<f64>>> = (0..cfg.realizations)
        .into_par_iter()
        .map(|r| realization_rates(cfg, &tx, &rx, r))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(cfg.algorithms.len() * cfg.snr_db.len());
    for (ai, &algo) in cfg.algorithms.iter().enumerate() {
        let structure = algo.row_structure(cfg.structure);
        for (si, &snr) in cfg.snr_db.iter().enumerate() {
            let samples: Vec<f64> = rates.iter().map(|r| r[ai][si]).collect();
            let n = samples.len() as f64;
            let mean = samples.iter().sum::<f64>() / n;
            let std = if samples.len() > 1 {
                (samples.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            rows.push(ResultRow {
                algorithm: algo,
                structure,
                snr_db: snr,
                n_rf: cfg.n_rf_t,
                subcarriers: cfg.subcarriers,
                mean_rate: mean,
                std_rate: std,
                mean_energy_eff: energy_efficiency(mean, structure, cfg.n_t, cfg.n_rf_t, &cfg.power),
                realizations: cfg.realizations,
                wall_time_s: 0.0,
            });
        }
    }
    Ok(rows)
}

/// Which config field a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Snr,
    NRf,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Snr => "snr",
            SweepAxis::NRf => "n_rf",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr" => Ok(SweepAxis::Snr),
            "n_rf" => Ok(SweepAxis::NRf),
            other => Err(Error::Config(format!(
                "unknown sweep axis '{other}' (expected 'snr' or 'n_rf')"
            ))),
        }
    }
}

/// Runs `cfg` once per value of the chosen axis and concatenates the rows.
/// An `n_rf` value sets the chain count on both sides.
pub fn sweep(cfg: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<ResultRow>> {
    if values.is_empty() {
        return Err(Error::Config("empty sweep value list".into()));
    }
    let mut rows = Vec::new();
    for &v in values {
        let mut point = cfg.clone();
        match axis {
            SweepAxis::Snr => {
                if !v.is_finite() {
                    return Err(Error::Config(format!("non-finite SNR sweep value {v}")));
                }
                point.snr_db = vec![v];
            }
            SweepAxis::NRf => {
                if !(v.is_finite() && v >= 1.0 && v.fract() == 0.0) {
                    return Err(Error::Config(format!(
                        "RF chain sweep value {v} is not a positive integer"
                    )));
                }
                point.n_rf_t = v as usize;
                point.n_rf_r = v as usize;
            }
        }
        rows.extend(run_experiment(&point)?);
    }
    Ok(rows)
}

pub const CSV_HEADER: &str =
    "algorithm,structure,snr_db,n_rf,subcarriers,mean_rate,std_rate,mean_energy_eff,realizations,wall_time_s";

/// Serializes rows to CSV text: fixed header, '.' decimal separator (floats
/// use Rust's shortest round-trip formatting), '\n' line endings.
pub fn render_csv(rows: &[ResultRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("no result rows to serialize".into()));
    }
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.algorithm,
            r.structure,
            r.snr_db,
            r.n_rf,
            r.subcarriers,
            r.mean_rate,
            r.std_rate,
            r.mean_energy_eff,
            r.realizations,
            r.wall_time_s
        ));
    }
    Ok(out)
}

/// Inverse of [`render_csv`]; round-trips every value exactly.
pub fn parse_results(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty results text".into()))?;
    if header != CSV_HEADER {
        return Err(Error::InvalidInput(format!(
            "unexpected results header '{header}'"
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::InvalidInput(format!(
                "data row {}: expected 10 fields, found {}",
                i + 1,
                fields.len()
            )));
        }
        let num = |j: usize, what: &str| -> Result<f64> {
            fields[j].parse().map_err(|_| {
                Error::InvalidInput(format!("data row {}: malformed {what}", i + 1))
            })
        };
        let count = |j: usize, what: &str| -> Result<usize> {
            fields[j].parse().map_err(|_| {
                Error::InvalidInput(format!("data row {}: malformed {what}", i + 1))
            })
        };
        rows.push(ResultRow {
            algorithm: fields[0].parse()?,
            structure: fields[1].parse()?,
            snr_db: num(2, "snr_db")?,
            n_rf: count(3, "n_rf")?,
            subcarriers: count(4, "subcarriers")?,
            mean_rate: num(5, "mean_rate")?,
            std_rate: num(6, "std_rate")?,
            mean_energy_eff: num(7, "mean_energy_eff")?,
            realizations: count(8, "realizations")?,
            wall_time_s: num(9, "wall_time_s")?,
        });
    }
    Ok(rows)
}

/// Output formats: plain CSV, or the same CSV plus a matplotlib script that
/// plots it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    PlotScript,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::PlotScript => "plot-script",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "plot-script" => Ok(OutputFormat::PlotScript),
            other => Err(Error::Config(format!(
                "unknown output format '{other}' (expected 'csv' or 'plot-script')"
            ))),
        }
    }
}

fn plot_script(csv_name: &str) -> String {
    format!(
        r#"#!/usr/bin/env python3
"""Plot mean spectral and energy efficiency from a results CSV.

Usage: python3 <this file> [results.csv]. Lines group by (algorithm,
structure); the x axis is snr_db when it varies, n_rf otherwise.
"""
import csv
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{csv_name}"
with open(path, newline="") as fh:
    rows = list(csv.DictReader(fh))
if not rows:
    sys.exit("no data rows in " + path)

snr_values = sorted(set(float(r["snr_db"]) for r in rows))
x_key = "snr_db" if len(snr_values) > 1 else "n_rf"
series = defaultdict(list)
for r in rows:
    key = r["algorithm"] + " (" + r["structure"] + ")"
    series[key].append(
        (float(r[x_key]), float(r["mean_rate"]), float(r["mean_energy_eff"]))
    )

fig, (ax_rate, ax_eff) = plt.subplots(1, 2, figsize=(11.0, 4.5))
for label in sorted(series):
    pts = sorted(series[label])
    xs = [p[0] for p in pts]
    ax_rate.plot(xs, [p[1] for p in pts], marker="o", label=label)
    ax_eff.plot(xs, [p[2] for p in pts], marker="s", label=label)
x_label = "SNR (dB)" if x_key == "snr_db" else "RF chains"
ax_rate.set_xlabel(x_label)
ax_rate.set_ylabel("Spectral efficiency (bits/s/Hz)")
ax_eff.set_xlabel(x_label)
ax_eff.set_ylabel("Energy efficiency (bits/Hz/J)")
for ax in (ax_rate, ax_eff):
    ax.grid(True, alpha=0.4)
ax_rate.legend(fontsize=8)
fig.tight_layout()
out = path.rsplit(".", 1)[0] + ".png"
fig.savefig(out, dpi=150)
print("wrote " + out)
"#
    )
}

/// Writes `rows` to `csv_path` and, in plot-script mode, a sibling `.py`
/// plotting script. Returns the paths written. Empty input is rejected
/// before any file is touched.
pub fn emit(rows: &[ResultRow], format: OutputFormat, csv_path: &Path) -> Result<Vec<PathBuf>> {
    let text = render_csv(rows)?;
    let write = |path: &Path, contents: &str| -> Result<()> {
        std::fs::write(path, contents).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    };
    write(csv_path, &text)?;
    let mut written = vec![csv_path.to_path_buf()];
    if format == OutputFormat::PlotScript {
        let csv_name = csv_path
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::InvalidInput("output path has no file name".into()))?;
        let script_path = csv_path.with_extension("py");
        write(&script_path, &plot_script(csv_name))?;
        written.push(script_path);
    }
    Ok(written)
}

/// Experiment presets behind the CLI `figure` subcommand. Presets with an
/// RF-chain grid expand to one config per grid point; mixed-structure
/// comparisons expand to one config per structure. The CLI concatenates all
/// resulting rows into a single table.
pub fn figure_preset(fig: u8) -> Result<Vec<ExperimentConfig>> {
    let base = ExperimentConfig::default();
    // Divisor grid: the partially-connected structure needs equal subarrays,
    // so its chain sweep visits the divisors of 144 (and 36) in 2..=8.
    let partially_grid = [2usize, 3, 4, 6];
    let fully_grid = 2usize..=8;

    let at_chains = |c: &ExperimentConfig, n_rf: usize| {
        let mut c = c.clone();
        c.n_rf_t = n_rf;
        c.n_rf_r = n_rf;
        c
    };

    let configs = match fig {
        4 => {
            let fully = ExperimentConfig {
                algorithms: vec![
                    Algorithm::Digital,
                    Algorithm::MoAltMin,
                    Algorithm::PeAltMin,
                    Algorithm::Omp,
                    Algorithm::Analog,
                ],
                ..base.clone()
            };
            let partially = ExperimentConfig {
                structure: Structure::PartiallyConnected,
                algorithms: vec![Algorithm::SdrAltMin],
                combiner_mode: CombinerMode::OptimalDigital,
                ..base
            };
            vec![fully, partially]
        }
        5 | 6 => {
            let fully = ExperimentConfig {
                n_s: 2,
                snr_db: vec![0.0],
                algorithms: if fig == 5 {
                    vec![Algorithm::Digital, Algorithm::MoAltMin, Algorithm::Omp]
                } else {
                    vec![Algorithm::MoAltMin]
                },
                ..base.clone()
            };
            let partially = ExperimentConfig {
                n_s: 2,
                snr_db: vec![0.0],
                structure: Structure::PartiallyConnected,
                algorithms: vec![Algorithm::SdrAltMin],
                ..base
            };
            let mut out: Vec<ExperimentConfig> =
                fully_grid.map(|n| at_chains(&fully, n)).collect();
            out.extend(partially_grid.iter().map(|&n| at_chains(&partially, n)));
            out
        }
        7 => [2usize, 4, 8]
            .iter()
            .map(|&n_s| {
                let mut c = at_chains(&base, n_s);
                c.n_s = n_s;
                c
            })
            .collect(),
        8 => (6usize..=11)
            .map(|n_rf| {
                let mut c = at_chains(&base, n_rf);
                c.n_s = 6;
                c.snr_db = vec![0.0];
                c
            })
            .collect(),
        9 => [3usize, 6]
            .iter()
            .map(|&n_rf| {
                let mut c = at_chains(&base, n_rf);
                c.subcarriers = 128;
                c
            })
            .collect(),
        other => {
            return Err(Error::Config(format!(
                "no preset for figure {other} (supported: 4..=9)"
            )));
        }
    };
    for c in &configs {
        c.validate()?;
    }
    Ok(configs)
}
