//! Executes the cells of an experiment with both engines.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use laa_core::sim::{self, SimStats};
use laa_core::{fixed_point, FixedPointOptions, MetricsReport, Result, SimConfig, SystemConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::spec::{CellKey, Engine, ExperimentSpec};

/// Outcome of one engine on one cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellResult {
    pub key: CellKey,
    pub engine: Engine,
    pub config_hash: String,
    pub report: Option<MetricsReport>,
    /// Batch-means 95% half-widths (simulation only).
    pub ci_halfwidth: Option<MetricsReport>,
    pub error: Option<String>,
    pub runtime_s: f64,
    /// Fixed-point rounds (analytic) or batches (simulation).
    pub iterations: usize,
    pub from_cache: bool,
    #[serde(skip)]
    pub sim_stats: Option<SimStats>,
}

impl CellResult {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CachedAnalytic {
    config: SystemConfig,
    options: String,
    report: MetricsReport,
    rounds: usize,
}

fn fp_options(spec: &ExperimentSpec) -> FixedPointOptions {
    FixedPointOptions { tol: spec.fp_tol, damping: spec.damping, max_rounds: spec.max_rounds, ..Default::default() }
}

fn cache_path(dir: &Path, cfg: &SystemConfig, options: &str) -> PathBuf {
    let key = format!("{}{options}", cfg.to_kv_string());
    let hash = laa_core::config::sha256_hex(key.as_bytes());
    dir.join(format!("{}.json", &hash[..32]))
}

pub fn run_analytic(spec: &ExperimentSpec, key: CellKey) -> CellResult {
    let start = Instant::now();
    let mut res = CellResult {
        key,
        engine: Engine::Analytic,
        config_hash: String::new(),
        report: None,
        ci_halfwidth: None,
        error: None,
        runtime_s: 0.0,
        iterations: 0,
        from_cache: false,
        sim_stats: None,
    };
    let outcome = (|| -> Result<()> {
        let cfg = key.config(&spec.base)?;
        res.config_hash = cfg.config_hash();
        let opts = fp_options(spec);
        let options = serde_json::to_string(&opts)?;
        let cached = spec.cache.as_ref().map(|d| cache_path(d, &cfg, &options));
        if let Some(path) = cached.as_ref().filter(|p| p.exists()) {
            let hit: CachedAnalytic = serde_json::from_str(&fs::read_to_string(path)?)?;
            if hit.config == cfg && hit.options == options {
                res.report = Some(hit.report);
                res.iterations = hit.rounds;
                res.from_cache = true;
                return Ok(());
            }
        }
        let fp = fixed_point(&cfg, &opts)?;
        res.iterations = fp.trace.len();
        if let Some(path) = cached {
            fs::create_dir_all(path.parent().unwrap())?;
            let entry = CachedAnalytic { config: cfg, options, report: fp.report.clone(), rounds: fp.trace.len() };
            fs::write(&path, serde_json::to_string_pretty(&entry)?)?;
        }
        res.report = Some(fp.report);
        Ok(())
    })();
    if let Err(e) = outcome {
        log::warn!("analytic cell {} failed: {e}", key.label());
        res.error = Some(e.to_string());
    }
    res.runtime_s = start.elapsed().as_secs_f64();
    res
}

pub fn run_simulation(spec: &ExperimentSpec, key: CellKey, trace_dir: Option<&Path>) -> CellResult {
    let start = Instant::now();
    let mut res = CellResult {
        key,
        engine: Engine::Simulation,
        config_hash: String::new(),
        report: None,
        ci_halfwidth: None,
        error: None,
        runtime_s: 0.0,
        iterations: 0,
        from_cache: false,
        sim_stats: None,
    };
    let outcome = (|| -> Result<()> {
        let cfg = key.config(&spec.base)?;
        res.config_hash = cfg.config_hash();
        let runs: Vec<SimStats> = spec
            .seeds
            .iter()
            .map(|&seed| {
                let sc = SimConfig {
                    total_slots: spec.slots + spec.warmup,
                    warmup_slots: spec.warmup,
                    ..SimConfig::new(cfg.clone(), seed, spec.slots)
                };
                match trace_dir {
                    Some(dir) => {
                        fs::create_dir_all(dir)?;
                        let path = dir.join(format!("trace_{}_seed{seed}.log", key.label()));
                        let mut w = std::io::BufWriter::new(fs::File::create(path)?);
                        sim::run_traced(&sc, Some(&mut w))
                    }
                    None => sim::run(&sc),
                }
            })
            .collect::<Result<_>>()?;
        let stats = SimStats::merged(runs.iter()).expect("at least one seed");
        let m = sim::measure(&stats);
        res.iterations = m.batches;
        res.report = Some(m.report);
        res.ci_halfwidth = Some(m.ci_halfwidth);
        res.sim_stats = Some(stats);
        Ok(())
    })();
    if let Err(e) = outcome {
        log::warn!("simulation cell {} failed: {e}", key.label());
        res.error = Some(e.to_string());
    }
    res.runtime_s = start.elapsed().as_secs_f64();
    res
}

/// Runs every (cell, engine) pair on a pool of `spec.jobs` threads. Results come back
/// sorted by cell and engine, independent of scheduling.
pub fn run_cells(spec: &ExperimentSpec) -> Result<Vec<CellResult>> {
    let jobs: Vec<(CellKey, Engine)> = spec
        .cells()
        .into_iter()
        .flat_map(|k| spec.engines.iter().map(move |&e| (k, e)))
        .collect();
    let trace_dir = spec.trace.then(|| spec.out.join("traces"));
    let work = || -> Vec<CellResult> {
        jobs.par_iter()
            .map(|&(key, engine)| match engine {
                Engine::Analytic => run_analytic(spec, key),
                Engine::Simulation => run_simulation(spec, key, trace_dir.as_deref()),
            })
            .collect()
    };
    let mut results = match spec.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| laa_core::Error::InvalidArgument(e.to_string()))?
            .install(work),
        None => work(),
    };
    results.sort_by(|a, b| a.key.cmp_key(&b.key).then(a.engine.cmp(&b.engine)));
    Ok(results)
}
