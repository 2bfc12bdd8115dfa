//! Monte-Carlo runner: scenario -> quantize -> solve -> evaluate, then CSV
//! and JSON artifacts.
//!
//! Every random draw is seeded from the master seed and the cell's
//! coordinates, so results do not depend on scheduling order across worker
//! threads.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::metrics::{sweep_density, EvalReport, SweepRow};
use crate::scenario::{generate_sinr, pad_to_square, Cluster};
use crate::sideinfo::build_rate_matrices;
use crate::solvers::{evaluate, solve, Assignment, Evaluation, Method};

const SCENARIO_STREAM: u64 = 0x5343_454e;
const RANDOM_STREAM: u64 = 0x5241_4e44;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed from `master` and a path of labels.
pub fn derive_seed(master: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(mix(master), |acc, &l| mix(acc ^ mix(l)))
}

/// Outcome of one (repetition, cluster, bits, method) cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub repetition: usize,
    pub cluster: usize,
    pub bits: u8,
    pub method: Method,
    /// Real vehicles only.
    pub assignment: Assignment,
    pub evaluation: Evaluation,
}

fn master_seed(config: &ExperimentConfig) -> Result<u64> {
    config
        .master_seed
        .ok_or_else(|| Error::Config(vec!["master_seed must be resolved before running".into()]))
}

/// Runs every cell of `config`, ordered by (repetition, cluster, bits, method).
pub fn run_cells(config: &ExperimentConfig) -> Result<Vec<CellResult>> {
    config.validate()?;
    config.check_capacity()?;
    let master = master_seed(config)?;
    let clusters = config
        .cluster_sizes
        .iter()
        .enumerate()
        .map(|(j, &n)| Cluster::with_size(j, n))
        .collect::<Result<Vec<_>>>()?;

    let per_rep: Vec<Vec<CellResult>> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut out = Vec::new();
            for cluster in &clusters {
                simulate_cluster(config, master, rep, cluster, &mut out)
                    .map_err(|e| e.in_cluster(cluster.id()))?;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_rep.into_iter().flatten().collect())
}

fn simulate_cluster(
    config: &ExperimentConfig,
    master: u64,
    rep: usize,
    cluster: &Cluster,
    out: &mut Vec<CellResult>,
) -> Result<()> {
    let grid = &config.grid;
    let scenario_seed = derive_seed(master, &[SCENARIO_STREAM, config.scenario.seed, rep as u64]);
    let sinr = generate_sinr(&config.scenario.with_seed(scenario_seed), cluster, grid)?;
    let (padded, mask) = pad_to_square(&sinr, grid, config.scenario.floor_db)?;

    for &bits in &config.quant.bits {
        let quantizer = config.quant.quantizer(bits)?;
        let (decision, truth) = build_rate_matrices(&padded, quantizer.as_ref(), grid.b_hz())?;
        for &method in &config.methods {
            // Same stream for every bit depth: random draws ignore side information.
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                master,
                &[RANDOM_STREAM, rep as u64, cluster.id() as u64],
            ));
            let start = Instant::now();
            let assignment = solve(method, &decision, grid, &mut rng)?;
            let runtime = start.elapsed();
            assignment.validate(grid)?;
            let evaluation = evaluate(&assignment, &decision, &truth, &mask, runtime)?;
            out.push(CellResult {
                repetition: rep,
                cluster: cluster.id(),
                bits,
                method,
                assignment: assignment.truncated(mask.n_real()),
                evaluation,
            });
        }
    }
    Ok(())
}

/// One report per (method, bits), pooling vehicles over clusters and repetitions.
pub fn build_reports(config: &ExperimentConfig, cells: &[CellResult]) -> Result<Vec<EvalReport>> {
    let mut reports = Vec::new();
    for &method in &config.methods {
        for &bits in &config.quant.bits {
            let samples: Vec<f64> = cells
                .iter()
                .filter(|c| c.method == method && c.bits == bits)
                .flat_map(|c| c.evaluation.vehicle_rates.iter().copied())
                .collect();
            reports.push(EvalReport::build(method, bits, samples, config.cdf_points)?);
        }
    }
    Ok(reports)
}

/// Where a run's master seed came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedSource {
    Config,
    Flag,
    Generated,
}

/// Fills in `master_seed` from `flag`, the config, or the clock, in that order.
pub fn resolve_seed(config: &mut ExperimentConfig, flag: Option<u64>) -> SeedSource {
    if let Some(seed) = flag {
        config.master_seed = Some(seed);
        SeedSource::Flag
    } else if config.master_seed.is_some() {
        SeedSource::Config
    } else {
        let nanos = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos() as u64);
        config.master_seed = Some(mix(nanos));
        SeedSource::Generated
    }
}

#[derive(Debug, Serialize)]
struct RunRecord {
    method: Method,
    bits: u8,
    cluster: usize,
    repetition: usize,
    n_vehicles: usize,
    sum_rate_decision: f64,
    sum_rate_truth: f64,
    runtime_ms: f64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config_hash: String,
    master_seed: u64,
    seed_source: SeedSource,
    config: &'a ExperimentConfig,
    artifacts: Vec<String>,
    runs: Vec<RunRecord>,
}

#[derive(Debug, Serialize)]
struct ReportSummary {
    method: Method,
    bits: u8,
    n_samples: usize,
    highest_mbps: f64,
    average_mbps: f64,
    worst_mbps: f64,
    std_dev_mbps: f64,
    cdf: Vec<(f64, f64)>,
}

/// Files written by a command.
#[derive(Debug, Clone)]
pub struct ArtifactSet {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

fn mbps(bps: f64) -> f64 {
    bps / 1e6
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn csv_bytes<F>(header: &[&str], fill: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    fill(&mut w)?;
    w.into_inner()
        .map_err(|e| Error::io("<csv buffer>", e.into_error()))
}

pub fn cdf_csv(reports: &[EvalReport]) -> Result<Vec<u8>> {
    csv_bytes(&["method", "bits", "rate_x_mbps", "prob"], |w| {
        for r in reports {
            for p in &r.cdf {
                w.write_record([
                    r.method.to_string(),
                    r.bits.to_string(),
                    mbps(p.rate_x).to_string(),
                    p.prob.to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

pub fn criteria_csv(reports: &[EvalReport]) -> Result<Vec<u8>> {
    csv_bytes(
        &["method", "bits", "highest", "average", "worst", "std_dev"],
        |w| {
            for r in reports {
                w.write_record([
                    r.method.to_string(),
                    r.bits.to_string(),
                    mbps(r.highest).to_string(),
                    mbps(r.average).to_string(),
                    mbps(r.worst).to_string(),
                    mbps(r.std_dev).to_string(),
                ])?;
            }
            Ok(())
        },
    )
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    csv_bytes(&["method", "bits", "n_vehicles", "worst_rate_mbps"], |w| {
        for r in rows {
            w.write_record([
                r.method.to_string(),
                r.bits.to_string(),
                r.n_vehicles.to_string(),
                mbps(r.worst_rate).to_string(),
            ])?;
        }
        Ok(())
    })
}

/// Assignment CSV: `cluster,vehicle,subchannel,subframe`, zero-based.
pub fn assignment_csv<'a>(
    assignments: impl IntoIterator<Item = &'a Assignment>,
    k: usize,
) -> Result<Vec<u8>> {
    csv_bytes(&["cluster", "vehicle", "subchannel", "subframe"], |w| {
        for a in assignments {
            for (v, &sc) in a.subchannels().iter().enumerate() {
                w.write_record([
                    a.cluster_id().to_string(),
                    v.to_string(),
                    sc.to_string(),
                    (sc / k).to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

fn summaries(reports: &[EvalReport]) -> Vec<ReportSummary> {
    reports
        .iter()
        .map(|r| ReportSummary {
            method: r.method,
            bits: r.bits,
            n_samples: r.samples.len(),
            highest_mbps: mbps(r.highest),
            average_mbps: mbps(r.average),
            worst_mbps: mbps(r.worst),
            std_dev_mbps: mbps(r.std_dev),
            cdf: r.cdf.iter().map(|p| (mbps(p.rate_x), p.prob)).collect(),
        })
        .collect()
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Runs the full experiment and writes `cdf.csv`, `criteria.csv`,
/// `summary.json`, `assignments/<method>_<bits>bit.csv` (first repetition)
/// and `manifest.json` into `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig, seed_source: SeedSource) -> Result<ArtifactSet> {
    let master = master_seed(config)?;
    let cells = run_cells(config)?;
    let reports = build_reports(config, &cells)?;

    let dir = config.output_dir.clone();
    prepare_dir(&dir)?;
    prepare_dir(&dir.join("assignments"))?;
    let mut files = Vec::new();
    let mut emit = |name: String, bytes: Vec<u8>| -> Result<()> {
        write_file(&dir.join(&name), &bytes)?;
        files.push(PathBuf::from(name));
        Ok(())
    };

    emit("cdf.csv".into(), cdf_csv(&reports)?)?;
    emit("criteria.csv".into(), criteria_csv(&reports)?)?;
    emit(
        "summary.json".into(),
        serde_json::to_vec_pretty(&summaries(&reports))?,
    )?;
    for &method in &config.methods {
        for &bits in &config.quant.bits {
            let first = cells
                .iter()
                .filter(|c| c.repetition == 0 && c.method == method && c.bits == bits)
                .map(|c| &c.assignment);
            emit(
                format!("assignments/{method}_{bits}bit.csv"),
                assignment_csv(first, config.grid.k())?,
            )?;
        }
    }

    let runs = cells
        .iter()
        .map(|c| RunRecord {
            method: c.method,
            bits: c.bits,
            cluster: c.cluster,
            repetition: c.repetition,
            n_vehicles: c.evaluation.vehicle_rates.len(),
            sum_rate_decision: c.evaluation.stats.sum_rate_decision,
            sum_rate_truth: c.evaluation.stats.sum_rate_truth,
            runtime_ms: c.evaluation.stats.runtime.as_secs_f64() * 1e3,
        })
        .collect();
    let mut artifacts: Vec<String> = config
        .methods
        .iter()
        .flat_map(|m| {
            config
                .quant
                .bits
                .iter()
                .map(move |b| format!("assignments/{m}_{b}bit.csv"))
        })
        .collect();
    artifacts.splice(
        0..0,
        ["cdf.csv", "criteria.csv", "summary.json"].map(String::from),
    );
    artifacts.push("manifest.json".into());
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: "run",
        config_hash: config.hash(),
        master_seed: master,
        seed_source,
        config,
        artifacts,
        runs,
    };
    emit(
        "manifest.json".into(),
        serde_json::to_vec_pretty(&manifest)?,
    )?;
    log::info!("wrote {} files to {}", files.len(), dir.display());
    Ok(ArtifactSet { dir, files })
}

/// Runs the density sweep from `config.sweep` and writes `sweep.csv` plus
/// `sweep_manifest.json`.
pub fn run_sweep(config: &ExperimentConfig, seed_source: SeedSource) -> Result<ArtifactSet> {
    config.validate_sweep()?;
    let master = master_seed(config)?;
    let repetitions = config.sweep.repetitions.unwrap_or(config.repetitions);
    let rows = sweep_density(
        config,
        &config.sweep.n_vehicles,
        &config.sweep.bits,
        repetitions,
    )?;

    let dir = config.output_dir.clone();
    prepare_dir(&dir)?;
    write_file(&dir.join("sweep.csv"), &sweep_csv(&rows)?)?;

    #[derive(Serialize)]
    struct SweepManifest<'a> {
        tool: &'static str,
        version: &'static str,
        command: &'static str,
        config_hash: String,
        master_seed: u64,
        seed_source: SeedSource,
        repetitions: usize,
        config: &'a ExperimentConfig,
        rows: Vec<(Method, u8, usize, f64)>,
    }
    let manifest = SweepManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: "sweep",
        config_hash: config.hash(),
        master_seed: master,
        seed_source,
        repetitions,
        config,
        rows: rows
            .iter()
            .map(|r| (r.method, r.bits, r.n_vehicles, mbps(r.worst_rate)))
            .collect(),
    };
    write_file(
        &dir.join("sweep_manifest.json"),
        &serde_json::to_vec_pretty(&manifest)?,
    )?;
    Ok(ArtifactSet {
        dir,
        files: vec!["sweep.csv".into(), "sweep_manifest.json".into()],
    })
}
