//! Named experiments. Each writes CSV files into an output directory and a
//! `manifest.json` describing inputs, seeds, per-stage wall clock and, on
//! failure, the stage that failed.

mod conditioning;
mod gauss;
mod padua;
mod quadrature;
mod timing;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::io::{emit, ensure_dir, json_bytes, Table};

pub use conditioning::CsConditioning;
pub use gauss::{SubsampleGauss1d, SubsampleGauss2d};
pub use padua::Padua;
pub use quadrature::{DoeGram, SparseDecay};
pub use timing::Timing;

pub const DEFAULT_TRIALS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
pub enum ExperimentName {
    #[value(name = "doe-gram")]
    #[serde(rename = "doe-gram")]
    DoeGram,
    #[value(name = "sparse-decay")]
    #[serde(rename = "sparse-decay")]
    SparseDecay,
    #[value(name = "cs-conditioning")]
    #[serde(rename = "cs-conditioning")]
    CsConditioning,
    #[value(name = "subsample-gauss-1d")]
    #[serde(rename = "subsample-gauss-1d")]
    SubsampleGauss1d,
    #[value(name = "subsample-gauss-2d")]
    #[serde(rename = "subsample-gauss-2d")]
    SubsampleGauss2d,
    #[value(name = "padua")]
    #[serde(rename = "padua")]
    Padua,
    #[value(name = "timing")]
    #[serde(rename = "timing")]
    Timing,
}

impl ExperimentName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentName::DoeGram => "doe-gram",
            ExperimentName::SparseDecay => "sparse-decay",
            ExperimentName::CsConditioning => "cs-conditioning",
            ExperimentName::SubsampleGauss1d => "subsample-gauss-1d",
            ExperimentName::SubsampleGauss2d => "subsample-gauss-2d",
            ExperimentName::Padua => "padua",
            ExperimentName::Timing => "timing",
        }
    }
}

/// An experiment body with its parameter schema.
pub trait Experiment: Serialize + DeserializeOwned + Default {
    fn run(&self, ctx: &mut Run) -> Result<()>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub seconds: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: ExperimentName,
    pub library_version: String,
    pub rng_algorithm: String,
    pub parameters: Value,
    pub seeds: Vec<u64>,
    pub started_unix_seconds: u64,
    pub stages: Vec<StageRecord>,
    pub outputs: Vec<String>,
    pub ok: bool,
    pub error: Option<ErrorRecord>,
}

/// State of one experiment run: output directory, seeds and the records
/// that end up in the manifest.
pub struct Run {
    dir: PathBuf,
    pub seeds: Vec<u64>,
    stages: Vec<StageRecord>,
    outputs: Vec<String>,
    hints: Vec<String>,
    failed_stage: Option<String>,
}

impl Run {
    fn new(dir: PathBuf, seeds: Vec<u64>) -> Self {
        Self {
            dir,
            seeds,
            stages: Vec::new(),
            outputs: Vec::new(),
            hints: Vec::new(),
            failed_stage: None,
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Times `f` and records it; a failure names this stage in the manifest.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f(self);
        self.stages.push(StageRecord {
            name: name.to_string(),
            seconds: t.elapsed().as_secs_f64(),
            ok: out.is_ok(),
        });
        if out.is_err() && self.failed_stage.is_none() {
            self.failed_stage = Some(name.to_string());
        }
        out.with_context(|| format!("stage '{name}'"))
    }

    pub fn table(&mut self, file: &str, t: &Table) -> Result<()> {
        emit(Some(&self.dir.join(file)), &t.to_csv()?)?;
        self.outputs.push(file.to_string());
        let cols: Vec<String> = t.header.iter().enumerate().map(|(i, h)| format!("{}={h}", i + 1)).collect();
        self.hints.push(format!("{file}: {}", cols.join(" ")));
        Ok(())
    }
}

/// Seeds from `--seeds`, else `base .. base + trials`.
pub fn resolve_seeds(base: u64, trials: Option<usize>, seeds: Option<Vec<u64>>) -> Result<Vec<u64>> {
    match (seeds, trials) {
        (Some(s), Some(t)) if s.len() != t => {
            anyhow::bail!("--trials {t} disagrees with {} seeds given", s.len())
        }
        (Some(s), _) if s.is_empty() => anyhow::bail!("--seeds is empty"),
        (Some(s), _) => Ok(s),
        (None, t) => {
            let t = t.unwrap_or(DEFAULT_TRIALS);
            if t == 0 {
                anyhow::bail!("--trials must be at least 1");
            }
            Ok((0..t as u64).map(|i| base + i).collect())
        }
    }
}

/// Inline JSON, or a path to a JSON file.
pub fn parse_params(raw: Option<&str>) -> Result<Option<Value>> {
    let Some(raw) = raw else { return Ok(None) };
    let text = if raw.trim_start().starts_with('{') {
        raw.to_string()
    } else {
        std::fs::read_to_string(raw).with_context(|| format!("reading parameters {raw}"))?
    };
    Ok(Some(serde_json::from_str(&text).context("parsing parameters")?))
}

fn execute<E: Experiment>(params: Option<&Value>, run: &mut Run, resolved: &mut Value) -> Result<()> {
    let exp: E = run.stage("parameters", |_| {
        Ok(match params {
            Some(v) => serde_json::from_value(v.clone())?,
            None => E::default(),
        })
    })?;
    *resolved = serde_json::to_value(&exp)?;
    exp.run(run)
}

pub struct Settings {
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub gnuplot_hints: bool,
}

/// Runs `name`, always writing `manifest.json`. Returns the manifest, or an
/// error after the manifest records the failing stage.
pub fn run_experiment(name: ExperimentName, params: Option<Value>, settings: Settings) -> Result<Manifest> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let dir = ensure_dir(&settings.out_dir)?;
    let mut run = Run::new(dir.clone(), settings.seeds.clone());
    let mut resolved = params.clone().unwrap_or(Value::Null);
    let p = params.as_ref();
    let result = match name {
        ExperimentName::DoeGram => execute::<DoeGram>(p, &mut run, &mut resolved),
        ExperimentName::SparseDecay => execute::<SparseDecay>(p, &mut run, &mut resolved),
        ExperimentName::CsConditioning => execute::<CsConditioning>(p, &mut run, &mut resolved),
        ExperimentName::SubsampleGauss1d => execute::<SubsampleGauss1d>(p, &mut run, &mut resolved),
        ExperimentName::SubsampleGauss2d => execute::<SubsampleGauss2d>(p, &mut run, &mut resolved),
        ExperimentName::Padua => execute::<Padua>(p, &mut run, &mut resolved),
        ExperimentName::Timing => execute::<Timing>(p, &mut run, &mut resolved),
    };

    if settings.gnuplot_hints {
        let mut text = run.hints.join("\n");
        text.push('\n');
        emit(Some(&dir.join("gnuplot_hints.txt")), text.as_bytes())?;
        run.outputs.push("gnuplot_hints.txt".into());
    }
    let error = result.as_ref().err().map(|e| ErrorRecord {
        stage: run.failed_stage.clone().unwrap_or_else(|| "setup".into()),
        message: format!("{e:#}"),
    });
    let manifest = Manifest {
        experiment: name,
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        rng_algorithm: quadkit_core::RNG_ALGORITHM.to_string(),
        parameters: resolved,
        seeds: settings.seeds,
        started_unix_seconds: started,
        stages: run.stages,
        outputs: run.outputs,
        ok: error.is_none(),
        error,
    };
    emit(Some(&dir.join("manifest.json")), &json_bytes(&manifest)?)?;
    result.map(|_| manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_resolution() {
        assert_eq!(resolve_seeds(5, Some(3), None).unwrap(), vec![5, 6, 7]);
        assert_eq!(resolve_seeds(0, None, None).unwrap().len(), DEFAULT_TRIALS);
        assert_eq!(resolve_seeds(0, None, Some(vec![9, 4])).unwrap(), vec![9, 4]);
        assert!(resolve_seeds(0, Some(3), Some(vec![1])).is_err());
        assert!(resolve_seeds(0, Some(0), None).is_err());
    }

    #[test]
    fn bad_parameters_fail_in_the_parameter_stage() {
        let dir = tempfile::tempdir().unwrap();
        let settings = Settings {
            out_dir: dir.path().to_path_buf(),
            seeds: vec![0],
            gnuplot_hints: false,
        };
        let err = run_experiment(ExperimentName::DoeGram, Some(serde_json::json!({"bogus": 1})), settings);
        assert!(err.is_err());
        let m: Manifest = crate::io::read_json(&dir.path().join("manifest.json")).unwrap();
        assert!(!m.ok);
        assert_eq!(m.error.unwrap().stage, "parameters");
    }
}
