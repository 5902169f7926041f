//! Replicate batches and the experiments built on them.
//!
//! Every replicate is seeded by [`replicate_seed`]`(master, level, index)`
//! where `level` is the position of its `n` in the grid, so n levels never
//! share streams and results do not depend on the worker count. The stable
//! reference sample used by the KS comparisons lives in its own namespace.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{block_count_deviation, simulate_chain_with, ChainTrajectory};
use crate::external::{
    external_count_deviation, simulate_summary, thin_external, ExternalTrajectory,
};
use crate::oracle::{simulate_partition_with, OracleTables, PartitionRun};
use crate::rates::{AlphaParam, RateCache};
use crate::rng::{replicate_seed, replicate_streams, substream};
use crate::stable::{
    external_length_from_tau, limit_constants, normalize_external, normalize_tau, normalize_total,
    scaled_external_residual, tau_limit_scale, total_limit_scale, StableSpec, TotalLengthRegime,
};
use crate::stats::{ks_two_sample, summarize, KsResult, SampleSummary};
use crate::{Error, Result};

/// Seed namespace of the stable reference samples.
pub const REFERENCE_NAMESPACE: u64 = u64::MAX;
/// Seed namespace of partition-oracle replicates.
pub const ORACLE_NAMESPACE: u64 = u64::MAX - 1;

/// Default size of the stable reference sample for KS comparisons.
pub const DEFAULT_REFERENCE_SIZE: usize = 20_000;

/// Slack added to the residual exponent in the `lemma2` experiment.
pub const RESIDUAL_SLACK: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    Theorem1,
    Theorem2,
    Theorem3,
    Lemma1,
    Lemma2,
    Fig1,
    Fig2,
    Ratio,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        Self::Theorem1,
        Self::Theorem2,
        Self::Theorem3,
        Self::Lemma1,
        Self::Lemma2,
        Self::Fig1,
        Self::Fig2,
        Self::Ratio,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Theorem1 => "theorem1",
            Self::Theorem2 => "theorem2",
            Self::Theorem3 => "theorem3",
            Self::Lemma1 => "lemma1",
            Self::Lemma2 => "lemma2",
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::Ratio => "ratio",
        }
    }

    /// Whether the statistics need stored trajectories.
    pub fn needs_trajectories(self) -> bool {
        matches!(self, Self::Theorem3 | Self::Fig2)
    }

    fn min_n(self) -> u64 {
        match self {
            Self::Fig1 | Self::Fig2 | Self::Theorem3 => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoragePolicy {
    /// Keep per-replicate totals only, O(1) memory per replicate.
    #[default]
    Summary,
    /// Keep the chain and singleton trajectories.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub alpha: AlphaParam,
    pub n_grid: Vec<u64>,
    pub replicates: usize,
    pub seed: u64,
    /// Worker threads; 0 picks the rayon default. Never affects output.
    #[serde(skip)]
    pub workers: usize,
    pub storage: StoragePolicy,
    /// Draws in the stable reference sample of KS comparisons.
    pub reference_size: usize,
}

impl ExperimentConfig {
    pub fn new(
        experiment: ExperimentId,
        alpha: AlphaParam,
        n: u64,
        replicates: usize,
        seed: u64,
    ) -> Self {
        Self {
            experiment,
            alpha,
            n_grid: vec![n],
            replicates,
            seed,
            workers: 0,
            storage: StoragePolicy::Summary,
            reference_size: DEFAULT_REFERENCE_SIZE,
        }
    }

    pub fn with_n_grid(mut self, grid: Vec<u64>) -> Self {
        self.n_grid = grid;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_storage(mut self, storage: StoragePolicy) -> Self {
        self.storage = storage;
        self
    }

    pub fn with_reference_size(mut self, size: usize) -> Self {
        self.reference_size = size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        if self.n_grid.is_empty() {
            return Err(Error::InvalidConfig("n grid is empty".into()));
        }
        let min_n = self.experiment.min_n();
        if let Some(&n) = self.n_grid.iter().find(|&&n| n < min_n) {
            return Err(Error::InvalidConfig(format!(
                "{} needs n >= {min_n}, got {n}",
                self.experiment
            )));
        }
        if self.reference_size == 0 {
            return Err(Error::InvalidConfig(
                "reference sample size must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub n: u64,
    pub replicate: u64,
    pub seed: u64,
    pub tau: u64,
    #[serde(rename = "L")]
    pub total_length: f64,
    #[serde(rename = "ell")]
    pub external_length: f64,
    /// Experiment-specific statistics, keyed by column name.
    pub stats: BTreeMap<String, f64>,
}

/// One row of the `fig2` trajectory table: `(j, X_{τ−j}, Y_{τ−j})` with the
/// reference curve `n (j/τ)^α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub n: u64,
    pub j: u64,
    #[serde(rename = "X")]
    pub x: u64,
    #[serde(rename = "Y")]
    pub y: u64,
    pub ref_curve: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub n: u64,
    pub statistic: String,
    pub summary: SampleSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsRecord {
    pub n: u64,
    pub statistic: String,
    /// Multiplier of ς in the reference sample.
    pub reference_scale: f64,
    pub result: KsResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateBatch {
    pub config: ExperimentConfig,
    /// `theorem2` only.
    pub regime: Option<TotalLengthRegime>,
    pub records: Vec<ReplicateRecord>,
    pub aggregates: Vec<AggregateRecord>,
    pub ks: Vec<KsRecord>,
    /// `fig2` only.
    pub trajectory: Vec<TrajectoryRow>,
}

impl ReplicateBatch {
    pub fn records_for(&self, n: u64) -> impl Iterator<Item = &ReplicateRecord> {
        self.records.iter().filter(move |r| r.n == n)
    }

    /// Values of one statistic at one `n`, in replicate order. `tau`, `L` and
    /// `ell` resolve to the record fields.
    pub fn column(&self, n: u64, statistic: &str) -> Vec<f64> {
        self.records_for(n)
            .filter_map(|r| r.value(statistic))
            .collect()
    }

    pub fn aggregate(&self, n: u64, statistic: &str) -> Option<&SampleSummary> {
        self.aggregates
            .iter()
            .find(|a| a.n == n && a.statistic == statistic)
            .map(|a| &a.summary)
    }

    pub fn ks_result(&self, n: u64, statistic: &str) -> Option<&KsResult> {
        self.ks
            .iter()
            .find(|k| k.n == n && k.statistic == statistic)
            .map(|k| &k.result)
    }
}

impl ReplicateRecord {
    pub fn value(&self, statistic: &str) -> Option<f64> {
        match statistic {
            "tau" => Some(self.tau as f64),
            "L" => Some(self.total_length),
            "ell" => Some(self.external_length),
            other => self.stats.get(other).copied(),
        }
    }
}

/// Output of one simulated replicate.
struct Realization {
    tau: u64,
    total_length: f64,
    external_length: f64,
    paths: Option<(ChainTrajectory, ExternalTrajectory)>,
}

fn realize(n: u64, cache: &RateCache, seed: u64, store: bool) -> Result<Realization> {
    let (mut chain_rng, mut thin_rng) = replicate_streams(seed);
    if store {
        let mut chain = simulate_chain_with(n, cache, &mut chain_rng)?;
        chain.seed = Some(seed);
        let ext = thin_external(&chain, &mut thin_rng);
        Ok(Realization {
            tau: chain.tau() as u64,
            total_length: ext.total_length,
            external_length: ext.external_length,
            paths: Some((chain, ext)),
        })
    } else {
        let s = simulate_summary(n, cache, &mut chain_rng, &mut thin_rng)?;
        Ok(Realization {
            tau: s.tau,
            total_length: s.total_length,
            external_length: s.external_length,
            paths: None,
        })
    }
}

fn replicate_stats(
    id: ExperimentId,
    n: u64,
    alpha: AlphaParam,
    r: &Realization,
) -> BTreeMap<String, f64> {
    let mut stats = BTreeMap::new();
    let a = alpha.get();
    match id {
        ExperimentId::Ratio => {
            stats.insert("ell_over_L".into(), r.external_length / r.total_length);
        }
        ExperimentId::Fig1 => {
            stats.insert("tau_pow".into(), (r.tau as f64).powf(2.0 - a));
        }
        ExperimentId::Lemma1 => {
            stats.insert("normalized_tau".into(), normalize_tau(r.tau, n, alpha));
        }
        ExperimentId::Theorem1 => {
            stats.insert(
                "normalized_ell".into(),
                normalize_external(r.external_length, n, alpha),
            );
        }
        ExperimentId::Theorem2 => {
            let (v, _) = normalize_total(r.total_length, n, alpha);
            stats.insert("normalized_L".into(), v);
            let centered =
                r.total_length - limit_constants(alpha).c1_prime * (n as f64).powf(2.0 - a);
            stats.insert("centered_L".into(), centered);
        }
        ExperimentId::Theorem3 => {
            let (chain, ext) = r.paths.as_ref().expect("theorem3 stores trajectories");
            stats.insert("x_deviation".into(), block_count_deviation(chain));
            stats.insert("y_deviation".into(), external_count_deviation(chain, ext));
        }
        ExperimentId::Lemma2 => {
            stats.insert(
                "residual".into(),
                r.external_length - external_length_from_tau(r.tau, alpha),
            );
            stats.insert(
                "scaled_residual".into(),
                scaled_external_residual(r.external_length, r.tau, n, alpha, RESIDUAL_SLACK),
            );
        }
        ExperimentId::Fig2 => {}
    }
    stats
}

fn trajectory_rows(chain: &ChainTrajectory, ext: &ExternalTrajectory) -> Vec<TrajectoryRow> {
    let tau = chain.tau();
    let a = chain.alpha.get();
    let n = chain.n;
    (0..=tau)
        .map(|j| TrajectoryRow {
            n,
            j: j as u64,
            x: chain.x[tau - j],
            y: ext.y[tau - j],
            ref_curve: if tau == 0 {
                n as f64
            } else {
                n as f64 * (j as f64 / tau as f64).powf(a)
            },
        })
        .collect()
}

/// The (statistic, multiplier of ς) pair an experiment compares against.
fn ks_target(id: ExperimentId, alpha: AlphaParam) -> Option<(&'static str, f64)> {
    match id {
        ExperimentId::Lemma1 => Some(("normalized_tau", tau_limit_scale(alpha))),
        ExperimentId::Theorem1 => Some(("normalized_ell", limit_constants(alpha).c2)),
        ExperimentId::Theorem2 => total_limit_scale(alpha).map(|s| ("normalized_L", s)),
        _ => None,
    }
}

/// `count` draws of `multiplier · ς` from the reference namespace.
pub fn reference_sample(
    alpha: AlphaParam,
    multiplier: f64,
    count: usize,
    master: u64,
    level: u64,
) -> Vec<f64> {
    let spec = StableSpec::scaled(alpha, multiplier);
    let mut rng = substream(replicate_seed(master, REFERENCE_NAMESPACE, level), 0);
    (0..count).map(|_| spec.sample(&mut rng)).collect()
}

fn run_in_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(job))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ReplicateBatch> {
    config.validate()?;
    let id = config.experiment;
    let alpha = config.alpha;
    let store = config.storage == StoragePolicy::Full || id.needs_trajectories();
    let max_n = *config.n_grid.iter().max().expect("validated");
    let cache = RateCache::new(alpha, max_n);

    let mut records = Vec::with_capacity(config.n_grid.len() * config.replicates);
    let mut trajectory = Vec::new();
    for (level, &n) in config.n_grid.iter().enumerate() {
        let level = level as u64;
        let outcomes = run_in_pool(config.workers, || {
            (0..config.replicates as u64)
                .into_par_iter()
                .map(|i| {
                    let seed = replicate_seed(config.seed, level, i);
                    let r = realize(n, &cache, seed, store)?;
                    let rows = match (&r.paths, id == ExperimentId::Fig2 && i == 0) {
                        (Some((chain, ext)), true) => trajectory_rows(chain, ext),
                        _ => Vec::new(),
                    };
                    let record = ReplicateRecord {
                        n,
                        replicate: i,
                        seed,
                        tau: r.tau,
                        total_length: r.total_length,
                        external_length: r.external_length,
                        stats: replicate_stats(id, n, alpha, &r),
                    };
                    Ok((record, rows))
                })
                .collect::<Result<Vec<_>>>()
        })??;
        for (record, rows) in outcomes {
            records.push(record);
            trajectory.extend(rows);
        }
    }

    let mut batch = ReplicateBatch {
        config: config.clone(),
        regime: (id == ExperimentId::Theorem2).then(|| TotalLengthRegime::of(alpha)),
        records,
        aggregates: Vec::new(),
        ks: Vec::new(),
        trajectory,
    };
    batch.aggregates = aggregate(&batch)?;
    if let Some((statistic, scale)) = ks_target(id, alpha) {
        for (level, &n) in config.n_grid.iter().enumerate() {
            let sample = batch.column(n, statistic);
            let reference = reference_sample(
                alpha,
                scale,
                config.reference_size,
                config.seed,
                level as u64,
            );
            batch.ks.push(KsRecord {
                n,
                statistic: statistic.into(),
                reference_scale: scale,
                result: ks_two_sample(&sample, &reference)?,
            });
        }
    }
    Ok(batch)
}

fn aggregate(batch: &ReplicateBatch) -> Result<Vec<AggregateRecord>> {
    let mut out = Vec::new();
    for &n in &batch.config.n_grid {
        let Some(first) = batch.records_for(n).next() else {
            continue;
        };
        let names: Vec<String> = ["tau", "L", "ell"]
            .into_iter()
            .map(String::from)
            .chain(first.stats.keys().cloned())
            .collect();
        for name in names {
            let values: Vec<f64> = batch
                .column(n, &name)
                .into_iter()
                .filter(|v| !v.is_nan())
                .collect();
            if values.is_empty() {
                continue;
            }
            out.push(AggregateRecord {
                n,
                statistic: name,
                summary: summarize(&values)?,
            });
        }
    }
    Ok(out)
}

/// Reals in CSV output: 17 significant digits, which round-trip any f64.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidConfig(format!("unknown format '{other}'"))),
        }
    }
}

pub const RECORD_COLUMNS: [&str; 6] = ["replicate", "n", "seed", "tau", "L", "ell"];

/// Per-replicate CSV: the fixed columns followed by the experiment's
/// statistics in name order.
pub fn write_records_csv<W: Write>(records: &[ReplicateRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let stat_names: Vec<&String> = records
        .first()
        .map(|r| r.stats.keys().collect())
        .unwrap_or_default();
    let mut header: Vec<&str> = RECORD_COLUMNS.to_vec();
    header.extend(stat_names.iter().map(|s| s.as_str()));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.replicate.to_string(),
            r.n.to_string(),
            r.seed.to_string(),
            r.tau.to_string(),
            format_real(r.total_length),
            format_real(r.external_length),
        ];
        row.extend(stat_names.iter().map(|k| format_real(r.stats[*k])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Trajectory CSV with columns `n, j, X, Y, ref_curve`.
pub fn write_trajectory_csv<W: Write>(rows: &[TrajectoryRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "j", "X", "Y", "ref_curve"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.j.to_string(),
            r.x.to_string(),
            r.y.to_string(),
            format_real(r.ref_curve),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a per-replicate CSV written by [`write_records_csv`].
pub fn read_records_csv<R: std::io::Read>(input: R) -> Result<Vec<ReplicateRecord>> {
    let bad = |msg: String| Error::InvalidArgument(format!("record csv: {msg}"));
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.len() < RECORD_COLUMNS.len() || header.iter().zip(RECORD_COLUMNS).any(|(h, c)| h != c)
    {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let stat_names: Vec<String> = header
        .iter()
        .skip(RECORD_COLUMNS.len())
        .map(String::from)
        .collect();
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let int = |i: usize| {
            row[i]
                .parse::<u64>()
                .map_err(|e| bad(format!("column {}: {e}", &header[i])))
        };
        let real = |i: usize| {
            row[i]
                .parse::<f64>()
                .map_err(|e| bad(format!("column {}: {e}", &header[i])))
        };
        let mut stats = BTreeMap::new();
        for (offset, name) in stat_names.iter().enumerate() {
            stats.insert(name.clone(), real(RECORD_COLUMNS.len() + offset)?);
        }
        out.push(ReplicateRecord {
            replicate: int(0)?,
            n: int(1)?,
            seed: int(2)?,
            tau: int(3)?,
            total_length: real(4)?,
            external_length: real(5)?,
            stats,
        });
    }
    Ok(out)
}

/// Serialize a batch. CSV carries the per-replicate table (the trajectory
/// table for `fig2`); JSON carries everything.
pub fn emit_to<W: Write>(batch: &ReplicateBatch, format: OutputFormat, mut out: W) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: "<stream>".into(),
        source,
    };
    match format {
        OutputFormat::Csv if batch.config.experiment == ExperimentId::Fig2 => {
            write_trajectory_csv(&batch.trajectory, out).map_err(csv_err)
        }
        OutputFormat::Csv => write_records_csv(&batch.records, out).map_err(csv_err),
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, batch)?;
            out.write_all(b"\n").map_err(|source| Error::Io {
                path: "<stream>".into(),
                source,
            })
        }
    }
}

/// Write a batch to `path`.
pub fn emit(batch: &ReplicateBatch, format: OutputFormat, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut buf = Vec::new();
    emit_to(batch, format, &mut buf)?;
    let mut w = BufWriter::new(file);
    w.write_all(&buf).map_err(io_err)?;
    w.flush().map_err(io_err)
}

/// One replicate, as printed by the `simulate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub n: u64,
    pub alpha: AlphaParam,
    pub seed: u64,
    pub tau: u64,
    #[serde(rename = "L")]
    pub total_length: f64,
    pub ell: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub x: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub u: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dt: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub y: Option<Vec<u64>>,
}

/// Simulate one replicate keyed directly by `seed`.
pub fn simulate_one(
    n: u64,
    alpha: AlphaParam,
    seed: u64,
    store_trajectory: bool,
) -> Result<SimulationRecord> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be at least 1".into(),
        ));
    }
    let cache = RateCache::new(alpha, n.min(1 << 24));
    let r = realize(n, &cache, seed, store_trajectory)?;
    let (x, u, dt, y) = match r.paths {
        Some((chain, ext)) => (Some(chain.x), Some(chain.u), Some(chain.dt), Some(ext.y)),
        None => (None, None, None, None),
    };
    Ok(SimulationRecord {
        n,
        alpha,
        seed,
        tau: r.tau,
        total_length: r.total_length,
        ell: r.external_length,
        x,
        u,
        dt,
        y,
    })
}

/// `reps` partition-oracle replicates, in the per-replicate record schema.
pub fn run_oracle(
    n: u32,
    alpha: AlphaParam,
    reps: usize,
    seed: u64,
    store_history: bool,
) -> Result<(Vec<ReplicateRecord>, Vec<PartitionRun>)> {
    let mut tables = OracleTables::new(alpha);
    let mut records = Vec::with_capacity(reps);
    let mut runs = Vec::new();
    for i in 0..reps as u64 {
        let s = replicate_seed(seed, ORACLE_NAMESPACE, i);
        let mut rng = substream(s, 0);
        let run = simulate_partition_with(n, &mut tables, &mut rng, store_history)?;
        records.push(ReplicateRecord {
            n: n as u64,
            replicate: i,
            seed: s,
            tau: run.tau as u64,
            total_length: run.total_length,
            external_length: run.external_length,
            stats: BTreeMap::new(),
        });
        if store_history {
            runs.push(run);
        }
    }
    Ok((records, runs))
}
