//! Batch front end: configuration files, named scenarios and file export.

pub mod config;
pub mod export;
pub mod manifest;
pub mod scenarios;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{load_config, parse_config, ConfigError, RunConfig};
pub use manifest::RunManifest;
pub use scenarios::{check_sampling, run_scenario, SCENARIOS};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown scenario `{0}`; valid scenarios: {list}", list = SCENARIOS.join(", "))]
    UnknownScenario(String),
    #[error("sampling check failed: {0}")]
    Sampling(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("simulation error: {0}")]
    Simulation(ghost_core::Error),
}

impl From<ghost_core::Error> for CliError {
    fn from(e: ghost_core::Error) -> Self {
        match e {
            ghost_core::Error::Sampling(m) => CliError::Sampling(m),
            other => CliError::Simulation(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::UnknownScenario(_) | CliError::Simulation(_) => 2,
            CliError::Sampling(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs a scenario and writes its outputs, `summary.txt` and `manifest.txt` into `out_dir`.
pub fn run(name: &str, cfg: &RunConfig, out_dir: &Path) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    if !SCENARIOS.contains(&name) {
        return Err(CliError::UnknownScenario(name.to_string()));
    }
    check_sampling(cfg)?;
    let output = run_scenario(name, cfg)?;
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut manifest = RunManifest::new(name, cfg);
    for artifact in &output.artifacts {
        write_file(&out_dir.join(&artifact.name), &artifact.bytes)?;
        manifest.record(artifact);
    }
    let summary = output.summary.join("\n") + "\n";
    let summary = scenarios::Artifact::text("summary.txt", summary);
    write_file(&out_dir.join(&summary.name), &summary.bytes)?;
    manifest.record(&summary);
    manifest.wall_time = start.elapsed();
    write_file(&out_dir.join("manifest.txt"), manifest.to_text().as_bytes())?;
    Ok(manifest)
}

/// [`run`] inside a dedicated worker pool of `threads` threads.
pub fn run_with_threads(
    name: &str,
    cfg: &RunConfig,
    out_dir: &Path,
    threads: usize,
) -> Result<RunManifest, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| {
            CliError::Config(ConfigError {
                origin: "--threads".into(),
                line: 0,
                message: e.to_string(),
            })
        })?;
    pool.install(|| run(name, cfg, out_dir))
}
