//! Experiment orchestration: generate random instances, solve the
//! relaxation, round, and aggregate approximation ratios across
//! realizations.
//!
//! Every random draw comes from a counter-based stream keyed by
//! (seed, realization, consumer lane), so results are bit-identical no
//! matter how realizations are scheduled across worker threads.

use groupcast_core::instance::{Channel, Field, InstanceP1, InstanceP2, InstanceRef, Model};
use groupcast_core::linalg::Cplx;
use groupcast_core::relaxation::{build_sdp1, build_sdp2, extract_solution};
use groupcast_core::rng::StreamKey;
use groupcast_core::rounding::{round_p1, round_p2, RoundedSolution};
use groupcast_core::sdp::{solve, SolverOptions};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::io;
use std::path::{Path, PathBuf};

/// Bins in the ratio histogram.
pub const HISTOGRAM_BINS: usize = 30;

/// Multi-slot settings when the experiment runs the multi-slot model.
#[derive(Clone, Debug)]
pub enum ModelConfig {
    /// Two-slot model.
    P1,
    /// Multi-slot model with slot count and per-user quotas.
    P2 {
        /// Slot count.
        q: usize,
        /// Per-user quotas, length M.
        p: Vec<usize>,
    },
}

/// Full description of one experiment run.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    /// Which problem shape to run.
    pub model: ModelConfig,
    /// Scalar field of the generated channels.
    pub field: Field,
    /// Users per realization.
    pub m: usize,
    /// Channel dimension.
    pub n: usize,
    /// Independent channel realizations.
    pub realizations: usize,
    /// Rounding trials per realization.
    pub trials: usize,
    /// Experiment seed; fixes every random draw.
    pub seed: u64,
    /// Directory receiving the report files.
    pub output_dir: PathBuf,
    /// Worker threads (None = rayon default). Not part of the result:
    /// outputs are identical for every setting.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// Model tag for reporting.
    pub fn model_tag(&self) -> Model {
        match self.model {
            ModelConfig::P1 => Model::P1,
            ModelConfig::P2 { .. } => Model::P2,
        }
    }

    /// Slot count and quotas when running the multi-slot model.
    pub fn slots(&self) -> Option<(usize, &[usize])> {
        match &self.model {
            ModelConfig::P1 => None,
            ModelConfig::P2 { q, p } => Some((*q, p)),
        }
    }
}

/// One successful realization.
#[derive(Clone, Debug)]
pub struct RealizationRecord {
    /// Realization index.
    pub realization: usize,
    /// Derived per-realization stream seed (diagnostic).
    pub seed: u64,
    /// Relaxation optimum.
    pub v_sdp: f64,
    /// Best rounded objective over the trial budget.
    pub v_ubqp: f64,
    /// `v_ubqp / v_sdp`.
    pub ratio: f64,
    /// Fraction of trials that fired the proof-threshold success event.
    pub success_freq: f64,
}

/// One realization that produced no usable ratio.
#[derive(Clone, Debug)]
pub struct FailedRealization {
    /// Realization index.
    pub realization: usize,
    /// What went wrong.
    pub reason: String,
}

/// Aggregate ratio statistics.
#[derive(Clone, Copy, Debug)]
pub struct Stats {
    /// Smallest ratio.
    pub min: f64,
    /// Largest ratio.
    pub max: f64,
    /// Arithmetic mean.
    pub mean: f64,
    /// Sample standard deviation (N-1 denominator; 0 below two samples).
    pub std: f64,
}

/// Experiment output: per-realization records in index order, failures,
/// and aggregate statistics over the successes.
#[derive(Clone, Debug)]
pub struct ExperimentReport {
    /// Echo of the configuration that produced this report.
    pub config: ExperimentConfig,
    /// Successful realizations, ascending by index.
    pub records: Vec<RealizationRecord>,
    /// Failed realizations, ascending by index, excluded from stats.
    pub failures: Vec<FailedRealization>,
    /// Statistics over the successful ratios.
    pub stats: Stats,
    /// Equal-width ratio histogram over `[1, max]`.
    pub histogram: Vec<(f64, f64, u64)>,
}

/// Draw M channels: real entries standard normal, complex entries
/// circularly symmetric with unit variance.
pub fn generate_channels(m: usize, n: usize, field: Field, rng: &mut ChaCha8Rng) -> Vec<Channel> {
    let half = 0.5f64.sqrt();
    (0..m)
        .map(|_| {
            Channel::new(
                (0..n)
                    .map(|_| match field {
                        Field::Real => Cplx::new(rng.sample(StandardNormal), 0.0),
                        Field::Complex => {
                            let re: f64 = rng.sample(StandardNormal);
                            let im: f64 = rng.sample(StandardNormal);
                            Cplx::new(re * half, im * half)
                        }
                    })
                    .collect(),
            )
        })
        .collect()
}

/// Sample statistics of the ratio list in its given order.
pub fn compute_stats(ratios: &[f64]) -> Stats {
    if ratios.is_empty() {
        return Stats { min: f64::NAN, max: f64::NAN, mean: f64::NAN, std: f64::NAN };
    }
    let n = ratios.len() as f64;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for &r in ratios {
        min = min.min(r);
        max = max.max(r);
        sum += r;
    }
    let mean = sum / n;
    let std = if ratios.len() < 2 {
        0.0
    } else {
        let ss: f64 = ratios.iter().map(|&r| (r - mean) * (r - mean)).sum();
        (ss / (n - 1.0)).sqrt()
    };
    Stats { min, max, mean, std }
}

/// Equal-width histogram over `[1, max(ratios)]` (degenerate ranges get
/// a hair of width so the single bin is well defined).
pub fn compute_histogram(ratios: &[f64], bins: usize) -> Vec<(f64, f64, u64)> {
    let lo = 1.0;
    let hi = ratios.iter().fold(lo, |a: f64, &b| a.max(b)).max(lo + 1e-9);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &r in ratios {
        let idx = (((r - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
        .collect()
}

fn run_realization(
    cfg: &ExperimentConfig,
    realization: usize,
) -> Result<RealizationRecord, FailedRealization> {
    let fail = |reason: String| FailedRealization { realization, reason };
    let key = StreamKey::new(cfg.seed, realization as u64);
    let channels = generate_channels(cfg.m, cfg.n, cfg.field, &mut key.channels());
    let opts = SolverOptions::default();

    let (v_sdp, rounded): (f64, RoundedSolution) = match &cfg.model {
        ModelConfig::P1 => {
            let inst = InstanceP1 { field: cfg.field, channels };
            let problem = build_sdp1(&inst).map_err(|e| fail(e.to_string()))?;
            let sol = solve(&problem, &opts).map_err(|e| fail(e.to_string()))?;
            let relax = extract_solution(InstanceRef::P1(&inst), &sol)
                .map_err(|e| fail(e.to_string()))?;
            let rounded = round_p1(&inst, &relax, cfg.trials, key)
                .map_err(|e| fail(e.to_string()))?;
            (relax.objective, rounded)
        }
        ModelConfig::P2 { q, p } => {
            let inst = InstanceP2 {
                field: cfg.field,
                channels,
                q: *q,
                priorities: p.clone(),
            };
            let problem = build_sdp2(&inst).map_err(|e| fail(e.to_string()))?;
            let sol = solve(&problem, &opts).map_err(|e| fail(e.to_string()))?;
            let relax = extract_solution(InstanceRef::P2(&inst), &sol)
                .map_err(|e| fail(e.to_string()))?;
            let rounded = round_p2(&inst, &relax, cfg.trials, key)
                .map_err(|e| fail(e.to_string()))?;
            (relax.objective, rounded)
        }
    };
    if !rounded.success {
        return Err(fail(String::from("no feasible trial")));
    }
    Ok(RealizationRecord {
        realization,
        seed: key.fingerprint(),
        v_sdp,
        v_ubqp: rounded.objective,
        ratio: rounded.objective / v_sdp,
        success_freq: rounded.success_events as f64 / cfg.trials as f64,
    })
}

/// Run every realization (in a worker pool when configured) and
/// aggregate. Failed realizations are excluded from the statistics and
/// reported, never imputed.
pub fn run_experiment(cfg: &ExperimentConfig) -> ExperimentReport {
    let body = || -> Vec<Result<RealizationRecord, FailedRealization>> {
        use rayon::prelude::*;
        (0..cfg.realizations)
            .into_par_iter()
            .map(|r| run_realization(cfg, r))
            .collect()
    };
    let results = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .expect("thread pool")
            .install(body),
        None => body(),
    };
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for res in results {
        match res {
            Ok(r) => records.push(r),
            Err(f) => failures.push(f),
        }
    }
    let ratios: Vec<f64> = records.iter().map(|r| r.ratio).collect();
    let stats = compute_stats(&ratios);
    let histogram = compute_histogram(&ratios, HISTOGRAM_BINS);
    ExperimentReport { config: cfg.clone(), records, failures, stats, histogram }
}

/// Paths of the three persisted report files.
#[derive(Clone, Debug)]
pub struct ReportFiles {
    /// Report JSON (config echo, stats, failure accounting).
    pub report: PathBuf,
    /// Per-realization CSV.
    pub ratios: PathBuf,
    /// Histogram CSV.
    pub histogram: PathBuf,
}

/// Persist `report.json`, `ratios.csv`, and `histogram.csv` into the
/// configured output directory, creating it when absent. Byte content
/// depends only on the records, never on the directory or thread count.
pub fn write_report_files(report: &ExperimentReport) -> io::Result<ReportFiles> {
    let dir: &Path = &report.config.output_dir;
    std::fs::create_dir_all(dir)?;
    let files = ReportFiles {
        report: dir.join("report.json"),
        ratios: dir.join("ratios.csv"),
        histogram: dir.join("histogram.csv"),
    };
    std::fs::write(&files.report, crate::formats::report_json(report))?;
    std::fs::write(&files.ratios, crate::formats::ratios_csv(&report.records))?;
    std::fs::write(&files.histogram, crate::formats::histogram_csv(&report.histogram))?;
    Ok(files)
}
