//! Subcommand execution: config in, CSV/JSON artifacts plus a manifest out.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig};
use crate::ergodics::{self, tv_decay_experiment, verify_minorization, ErgodicsError};
use crate::optimizer::{
    grid_search, kiefer_wolfowitz, KwConfig, OptimizerError, SimulatedObjective,
};
use crate::trading::{long_run_objective, ObjectiveOptions, TradingError};
use crate::walk::{
    extract_crossings, extract_crossings_mirrored, extract_overshoots, price_path, write_crossings_csv,
    write_overshoots_csv, Side,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    Crossings,
    TvDecay,
    Lln,
    Overshoot,
    VerifyMinorization,
    Objective,
    OptimizeGrid,
    OptimizeKw,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::Crossings => "crossings",
            Subcommand::TvDecay => "tv-decay",
            Subcommand::Lln => "lln",
            Subcommand::Overshoot => "overshoot",
            Subcommand::VerifyMinorization => "verify-minorization",
            Subcommand::Objective => "objective",
            Subcommand::OptimizeGrid => "optimize-grid",
            Subcommand::OptimizeKw => "optimize-kw",
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("step budget exceeded: {0}")]
    Budget(String),
    #[error("{0}")]
    Failed(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl RunError {
    /// 1 for invalid configuration, 2 for an exhausted step budget.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Budget(_) => 2,
            RunError::Failed(_) | RunError::Io(_) => 3,
        }
    }
}

impl From<ErgodicsError> for RunError {
    fn from(e: ErgodicsError) -> Self {
        match e {
            ErgodicsError::BudgetExceeded { .. } => RunError::Budget(e.to_string()),
            ErgodicsError::InvalidGamma { .. }
            | ErgodicsError::InvalidBinning(_)
            | ErgodicsError::InvalidExperiment(_)
            | ErgodicsError::InsufficientReplicates(_) => {
                RunError::Config(ConfigError::new("experiment", e.to_string()))
            }
            other => RunError::Failed(other.to_string()),
        }
    }
}

impl From<TradingError> for RunError {
    fn from(e: TradingError) -> Self {
        match e {
            TradingError::PathBudgetExceeded { .. } => RunError::Budget(e.to_string()),
            other => RunError::Config(ConfigError::new("trading", other.to_string())),
        }
    }
}

impl From<OptimizerError> for RunError {
    fn from(e: OptimizerError) -> Self {
        match e {
            OptimizerError::InvalidConfig { field, reason } => {
                RunError::Config(ConfigError::new(format!("optimizer.{field}"), reason))
            }
            OptimizerError::Objective { source, .. } => source.into(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub max_steps: Option<u64>,
    pub workers: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub subcommand: &'static str,
    pub version: &'static str,
    /// SHA-256 of the config file as read.
    pub config_sha256: String,
    pub seed: u64,
    pub workers: usize,
    pub wall_time_s: f64,
    /// Effective configuration after command-line overrides.
    pub config: ExperimentConfig,
    pub artifacts: Vec<Artifact>,
}

fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

struct Outputs {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Outputs {
    fn write(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> io::Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        let path = self.dir.join(name);
        let mut file = BufWriter::new(File::create(&path)?);
        file.write_all(&buf)?;
        file.flush()?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            sha256: hex(&buf),
        });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }
}

/// Loads the config, applies overrides, runs the subcommand and writes its
/// artifacts and `manifest.json` to the output directory.
pub fn run(cmd: Subcommand, config_path: &Path, ov: &Overrides) -> Result<Manifest, RunError> {
    let (mut cfg, raw) = ExperimentConfig::load(config_path)?;
    if let Some(seed) = ov.seed {
        cfg.seed = seed;
    }
    if let Some(steps) = ov.max_steps {
        cfg.override_max_steps(steps);
    }
    if let Some(out) = &ov.out {
        cfg.output_dir = Some(out.clone());
    }
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ov.workers.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Failed(e.to_string()))?;
    let workers = pool.current_num_threads();
    let mut out = Outputs {
        dir: dir.clone(),
        artifacts: Vec::new(),
    };
    let start = Instant::now();
    pool.install(|| execute(cmd, &cfg, &mut out))?;
    let manifest = Manifest {
        subcommand: cmd.name(),
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: hex(&raw),
        seed: cfg.seed,
        workers,
        wall_time_s: start.elapsed().as_secs_f64(),
        config: cfg,
        artifacts: out.artifacts,
    };
    let file = File::create(dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &manifest)
        .map_err(|e| RunError::Io(e.into()))?;
    Ok(manifest)
}

fn execute(cmd: Subcommand, cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), RunError> {
    match cmd {
        Subcommand::Simulate => {
            let path = cfg.walk_path()?;
            out.write("path.csv", |w| path.write_csv(w))?;
            let price = price_path(&path, cfg.mu);
            out.write("price.csv", |w| {
                writeln!(w, "step,price")?;
                price.iter().enumerate().try_for_each(|(i, a)| writeln!(w, "{},{a}", i + 1))
            })?;
        }
        Subcommand::Crossings => {
            let thr = cfg.thresholds()?;
            let path = cfg.walk_path()?;
            let recs = match cfg.side {
                Side::Long => extract_crossings(&path, &thr),
                Side::Short => extract_crossings_mirrored(&path, &thr)
                    .map_err(|e| ConfigError::new("side", e.to_string()))?,
            };
            out.write("crossings.csv", |w| write_crossings_csv(&recs, w))?;
        }
        Subcommand::Overshoot => {
            let path = cfg.walk_path()?;
            let boundary = cfg.path.map(|p| p.overshoot_boundary).unwrap_or_default();
            let ov = extract_overshoots(&path, boundary);
            out.write("overshoots.csv", |w| write_overshoots_csv(&ov, w))?;
        }
        Subcommand::TvDecay => {
            let kernel = cfg.kernel()?;
            let thr = cfg.thresholds()?;
            let tv = cfg.tv.as_ref().ok_or_else(|| ConfigError::new("tv", "section is required by this subcommand"))?;
            let series = tv_decay_experiment(
                &kernel,
                &thr,
                tv.chain,
                (tv.init[0], tv.init[1]),
                &tv.n_list,
                tv.replicates,
                cfg.seed,
                &tv.options,
            )?;
            out.write("tv.csv", |w| series.write_csv(w))?;
            out.json("tv.json", &series)?;
        }
        Subcommand::Lln => {
            let kernel = cfg.kernel()?;
            let thr = cfg.thresholds()?;
            let l = cfg.lln.ok_or_else(|| ConfigError::new("lln", "section is required by this subcommand"))?;
            let run = ergodics::lln_run(&kernel, &thr, cfg.side, l.observable, l.n_cycles, cfg.seed, l.max_steps)?;
            out.write("lln.csv", |w| run.write_csv(w))?;
            out.json(
                "lln.json",
                &serde_json::json!({
                    "mean": run.mean,
                    "stderr": run.stderr,
                    "n_cycles": run.values.len(),
                    "steps": run.steps,
                }),
            )?;
        }
        Subcommand::VerifyMinorization => {
            let kernel = cfg.kernel()?;
            let thr = cfg.thresholds()?;
            let m = cfg
                .minorization
                .as_ref()
                .ok_or_else(|| ConfigError::new("minorization", "section is required by this subcommand"))?;
            let report = verify_minorization(&kernel, &thr, &m.chain, &m.probes, &m.options, cfg.seed)?;
            out.json("minorization.json", &report)?;
        }
        Subcommand::Objective => {
            let kernel = cfg.kernel()?;
            let thr = cfg.thresholds()?;
            let spec = cfg.trading()?;
            let o = cfg.objective.ok_or_else(|| ConfigError::new("objective", "section is required by this subcommand"))?;
            let opts = ObjectiveOptions {
                max_steps: o.max_steps,
                keep_trace: true,
                ..Default::default()
            };
            let est = long_run_objective(&kernel, &thr, &spec, o.n_cycles, cfg.seed, &opts)?;
            out.write("objective_trace.csv", |w| est.write_trace_csv(w))?;
            out.json(
                "objective.json",
                &serde_json::json!({
                    "mean": est.mean,
                    "stderr": est.stderr,
                    "n_cycles": est.n_cycles,
                    "steps": est.steps,
                }),
            )?;
        }
        Subcommand::OptimizeGrid | Subcommand::OptimizeKw => {
            let kernel = cfg.kernel()?;
            let h = kernel.h();
            let spec = cfg.trading()?;
            let o = cfg.objective.ok_or_else(|| ConfigError::new("objective", "section is required by this subcommand"))?;
            let opt = cfg
                .optimizer
                .as_ref()
                .ok_or_else(|| ConfigError::new("optimizer", "section is required by this subcommand"))?;
            let objective = SimulatedObjective {
                kernel,
                spec,
                n_cycles: o.n_cycles,
                boundary: cfg.thresholds.map(|t| t.boundary).unwrap_or_default(),
                options: ObjectiveOptions {
                    max_steps: o.max_steps,
                    ..Default::default()
                },
            };
            if cmd == Subcommand::OptimizeGrid {
                let bx = opt.grid.ok_or_else(|| ConfigError::new("optimizer.grid", "required"))?;
                bx.validate(h)?;
                let res = grid_search(&objective, &bx, cfg.seed)?;
                out.write("surface.csv", |w| res.write_surface_csv(w))?;
                out.json("grid.json", &serde_json::json!({ "best": res.best, "best_row": res.best_row }))?;
            } else {
                let kw: KwConfig = opt.kw.ok_or_else(|| ConfigError::new("optimizer.kw", "required"))?;
                kw.validate(h)?;
                let theta0 = opt.theta0.unwrap_or((
                    0.5 * (kw.projection.lower_range.0 + kw.projection.lower_range.1),
                    0.5 * (kw.projection.upper_range.0 + kw.projection.upper_range.1),
                ));
                let tr = kiefer_wolfowitz(&objective, &kw, theta0, cfg.seed)?;
                out.write("kw.csv", |w| tr.write_csv(w))?;
                out.json("kw.json", &serde_json::json!({ "final_theta": tr.final_theta }))?;
            }
        }
    }
    Ok(())
}
