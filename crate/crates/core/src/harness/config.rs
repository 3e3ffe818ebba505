use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datapipe::{AugmentConfig, AugmentMethod, TaskId, TaskSizes, DEFAULT_ALPHA};
use crate::error::{Error, Result};
use crate::noisemodel::{CalibrationSnapshot, NoiseSchedule, ScheduleConfig, Shots};
use crate::trainers::{BarlowConfig, FitConfig, DEFAULT_COMMITTEE};

/// Extraction schemes compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Base,
    Qleak,
    Copyqnn,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Base, Scheme::Qleak, Scheme::Copyqnn];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Base => "base",
            Scheme::Qleak => "qleak",
            Scheme::Copyqnn => "copyqnn",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Scheme::Base),
            "qleak" => Ok(Scheme::Qleak),
            "copyqnn" => Ok(Scheme::Copyqnn),
            other => Err(Error::Argument(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSettings {
    /// Disables every error source and shot sampling (control runs).
    pub zero_noise: bool,
    pub gate_error_scale: f64,
    pub jitter_sigma: f64,
    pub shots: Shots,
    /// Calibration anchors; the reference 06:00 / 18:00 snapshots when absent.
    pub anchor_a: Option<CalibrationSnapshot>,
    pub anchor_b: Option<CalibrationSnapshot>,
}

impl Default for NoiseSettings {
    fn default() -> Self {
        Self {
            zero_noise: false,
            gate_error_scale: 30.0,
            jitter_sigma: 0.3,
            shots: Shots::Finite(1024),
            anchor_a: None,
            anchor_b: None,
        }
    }
}

impl NoiseSettings {
    pub fn schedule_config(&self, num_qubits: usize, seed: u64) -> ScheduleConfig {
        let mut cfg = ScheduleConfig::reference(num_qubits, self.jitter_sigma, seed, self.gate_error_scale);
        if let Some(a) = &self.anchor_a {
            cfg.anchor_a = a.clone();
        }
        if let Some(b) = &self.anchor_b {
            cfg.anchor_b = b.clone();
        }
        cfg
    }

    pub fn schedule(&self, num_qubits: usize, seed: u64) -> Result<NoiseSchedule> {
        if self.zero_noise {
            return Ok(NoiseSchedule::noiseless(num_qubits));
        }
        self.schedule_config(num_qubits, seed).build()
    }

    pub fn effective_shots(&self) -> Shots {
        if self.zero_noise {
            Shots::Analytic
        } else {
            self.shots
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuerySettings {
    /// Number of distinct images submitted (n).
    pub samples: usize,
    /// Query rounds spread over the day (m).
    pub rounds: usize,
    /// Hour of the first round.
    pub phase: f64,
}

impl Default for QuerySettings {
    fn default() -> Self {
        Self {
            samples: 40,
            rounds: 5,
            phase: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MixupSettings {
    pub alpha: f64,
    /// Mixed copies generated per retained sample; 0 disables Mixup.
    pub copies: usize,
}

impl Default for MixupSettings {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            copies: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PretrainSettings {
    pub barlow: BarlowConfig,
    pub augment: AugmentConfig,
    /// Unlabelled source images drawn from the source task's training pool.
    pub source_images: usize,
    /// Overrides of the source task per target task name.
    pub sources: BTreeMap<String, TaskId>,
}

impl Default for PretrainSettings {
    fn default() -> Self {
        Self {
            barlow: BarlowConfig::default(),
            augment: AugmentConfig {
                method: AugmentMethod::Jitter,
                gaussian_blur: true,
                rng_seed: 0,
            },
            source_images: 256,
            sources: BTreeMap::new(),
        }
    }
}

impl PretrainSettings {
    /// The task whose images pretrain the encoder for `target`: the pair
    /// `{0,1}` borrows from `{2,3}` of the same dataset, every other pair from `{0,1}`.
    pub fn source_for(&self, target: TaskId) -> TaskId {
        if let Some(t) = self.sources.get(&target.to_string()) {
            return *t;
        }
        let (a, b) = if (target.class_a, target.class_b) == (0, 1) { (2, 3) } else { (0, 1) };
        TaskId {
            dataset: target.dataset,
            class_a: a,
            class_b: b,
        }
    }
}

/// One JSON document describing a full experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub tasks: Vec<TaskId>,
    pub sizes: TaskSizes,
    pub victim: FitConfig,
    pub noise: NoiseSettings,
    pub query: QuerySettings,
    pub rr_grid: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub seeds: Vec<u64>,
    pub pretrain: PretrainSettings,
    pub classifier: FitConfig,
    pub baseline: FitConfig,
    pub committee: usize,
    pub mixup: MixupSettings,
    pub rounds_grid: Vec<usize>,
    /// Remember ratio used when a single CopyQNN setting is needed (round sweeps).
    pub headline_rr: f64,
    /// Hours at which the fluctuation study evaluates the victim.
    pub fluctuation_hours: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("results"),
            tasks: ["m01", "m23", "f01", "f23"].iter().map(|t| t.parse().expect("valid task")).collect(),
            sizes: TaskSizes::FULL,
            victim: FitConfig::victim(),
            noise: NoiseSettings::default(),
            query: QuerySettings::default(),
            rr_grid: (1..=10).map(|k| k as f64 / 10.0).collect(),
            schemes: Scheme::ALL.to_vec(),
            seeds: vec![0, 1, 2],
            pretrain: PretrainSettings::default(),
            classifier: FitConfig::classifier(),
            baseline: FitConfig::baseline(),
            committee: DEFAULT_COMMITTEE,
            mixup: MixupSettings::default(),
            rounds_grid: vec![2, 4, 10, 20, 40],
            headline_rr: 0.6,
            fluctuation_hours: crate::qnnaas::round_hours(5, 0.0),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Shrinks the victim pools to 600 train / 200 test images.
    pub fn desk_scale(mut self) -> Self {
        self.sizes = TaskSizes::DESK;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Argument("at least one seed is required".into()));
        }
        if self.tasks.is_empty() {
            return Err(Error::Argument("at least one task is required".into()));
        }
        if let Some(rr) = self.rr_grid.iter().chain([&self.headline_rr]).find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return Err(Error::Argument(format!("remember ratio {rr} is outside (0, 1]")));
        }
        if self.query.rounds < 2 || self.rounds_grid.iter().any(|m| *m < 2) {
            return Err(Error::UndefinedVariance {
                rounds: self.query.rounds.min(self.rounds_grid.iter().copied().min().unwrap_or(2)),
            });
        }
        if self.query.samples == 0 || self.query.samples > self.sizes.public {
            return Err(Error::Argument(format!(
                "{} query samples requested from a public pool of {}",
                self.query.samples, self.sizes.public
            )));
        }
        if self.schemes.contains(&Scheme::Qleak) && self.query.samples < self.committee {
            return Err(Error::Argument("fewer query samples than committee members".into()));
        }
        self.pretrain.barlow.validate()?;
        self.noise.schedule(crate::qnnaas::VictimModel::default_architecture().0, 0)?;
        Ok(())
    }

    /// Whether comparative numbers from this config rest on enough seeds.
    pub fn verified(&self) -> bool {
        self.seeds.len() >= 3
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        cfg.validate().unwrap();
        assert_eq!(cfg.rr_grid.len(), 10);
        assert_eq!(cfg.query.samples * cfg.query.rounds, 200);
    }

    #[test]
    fn json_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.noise.shots = Shots::Analytic;
        cfg.pretrain.sources.insert("m45".into(), "m67".parse().unwrap());
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.seeds.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.rr_grid.push(0.0);
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.query.rounds = 1;
        assert!(matches!(cfg.validate(), Err(Error::UndefinedVariance { .. })));
    }

    #[test]
    fn source_tasks_differ_from_targets() {
        let p = PretrainSettings::default();
        for t in ["m01", "m23", "f01", "f89"] {
            let id: TaskId = t.parse().unwrap();
            assert_ne!(p.source_for(id), id);
            assert_eq!(p.source_for(id).dataset, id.dataset);
        }
        assert_eq!(p.source_for("m23".parse().unwrap()).to_string(), "m01");
    }
}
