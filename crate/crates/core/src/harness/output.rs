use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{HarnessError, ScenarioConfig, Verdict};
use crate::dynamics::RunOutput;
use crate::moments::empirical_moments;

/// Provenance of one run. Feeding `config` back in reproduces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub software: String,
    pub version: String,
    pub name: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub steps: usize,
    pub files: Vec<String>,
    pub config: ScenarioConfig,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(path)(e.into()))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(io_err(path))
}

/// Write `diagnostics.csv`, optional `trajectory.jsonl` and `moments.csv`,
/// `verdict.json` and `manifest.json` into `dir`.
pub fn write_outputs(
    dir: &Path,
    config: &ScenarioConfig,
    run: &RunOutput,
    verdict: &Verdict,
    wall_time_seconds: f64,
) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = Vec::new();

    let path = dir.join("diagnostics.csv");
    run.series.write_csv(create(&path)?).map_err(csv_err(&path))?;
    files.push(path);

    if config.outputs.trajectory {
        let path = dir.join("trajectory.jsonl");
        let mut w = create(&path)?;
        for row in run.trajectory.rows() {
            serde_json::to_writer(&mut w, &row).map_err(|e| io_err(&path)(e.into()))?;
            w.write_all(b"\n").map_err(io_err(&path))?;
        }
        w.flush().map_err(io_err(&path))?;
        files.push(path);
    }

    if let Some(res) = config.outputs.moments_resolution {
        let path = dir.join("moments.csv");
        let field = empirical_moments(&run.final_state, &config.domain, res).map_err(|e| HarnessError::Io {
            path: path.clone(),
            source: std::io::Error::other(e),
        })?;
        field.write_csv(create(&path)?).map_err(csv_err(&path))?;
        files.push(path);
    }

    let path = dir.join("verdict.json");
    write_json(&path, verdict)?;
    files.push(path);

    let path = dir.join("manifest.json");
    let mut names: Vec<String> = files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    names.push("manifest.json".into());
    let manifest = Manifest {
        software: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        name: config.name.clone(),
        seed: config.seed,
        threads: rayon::current_num_threads(),
        wall_time_seconds,
        steps: run.steps,
        files: names,
        config: config.clone(),
    };
    write_json(&path, &manifest)?;
    files.push(path);
    Ok(files)
}
