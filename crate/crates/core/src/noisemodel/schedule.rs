use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::profile::{CalibrationSnapshot, NoiseProfile};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

pub const ANCHOR_A_HOUR: f64 = 6.0;
pub const ANCHOR_B_HOUR: f64 = 18.0;

/// Daily drift of the device: cosine interpolation between a 06:00 and an
/// 18:00 profile, with optional multiplicative log-normal jitter per round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    pub anchor_a: NoiseProfile,
    pub anchor_b: NoiseProfile,
    pub jitter_sigma: f64,
    pub rng_seed: u64,
}

/// On-disk form of a schedule: two calibration snapshots plus jitter and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub anchor_a: CalibrationSnapshot,
    pub anchor_b: CalibrationSnapshot,
    pub jitter_sigma: f64,
    pub seed: u64,
    /// Multiplier taking per-native-gate error rates to effective per-ansatz-gate
    /// rates (compilation depth and relaxation folded in).
    #[serde(default = "unit_scale")]
    pub gate_error_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl ScheduleConfig {
    /// Reference calibration anchors tiled over `num_qubits`.
    pub fn reference(num_qubits: usize, jitter_sigma: f64, seed: u64, gate_error_scale: f64) -> Self {
        Self {
            anchor_a: CalibrationSnapshot::reference_morning(num_qubits),
            anchor_b: CalibrationSnapshot::reference_evening(num_qubits),
            jitter_sigma,
            seed,
            gate_error_scale,
        }
    }

    pub fn build(&self) -> Result<NoiseSchedule> {
        NoiseSchedule::new(
            self.anchor_a.to_profile(self.gate_error_scale)?,
            self.anchor_b.to_profile(self.gate_error_scale)?,
            self.jitter_sigma,
            self.seed,
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

impl NoiseSchedule {
    pub fn new(
        anchor_a: NoiseProfile,
        anchor_b: NoiseProfile,
        jitter_sigma: f64,
        rng_seed: u64,
    ) -> Result<Self> {
        anchor_a.validate()?;
        anchor_b.validate()?;
        if anchor_a.num_qubits() != anchor_b.num_qubits() {
            return Err(Error::Dimension {
                expected: anchor_a.num_qubits(),
                got: anchor_b.num_qubits(),
            });
        }
        if !(jitter_sigma >= 0.0 && jitter_sigma.is_finite()) {
            return Err(Error::Argument(format!("jitter_sigma {jitter_sigma} must be ≥ 0")));
        }
        Ok(Self {
            anchor_a,
            anchor_b,
            jitter_sigma,
            rng_seed,
        })
    }

    /// A device without any error source.
    pub fn noiseless(num_qubits: usize) -> Self {
        Self {
            anchor_a: NoiseProfile::noiseless(num_qubits),
            anchor_b: NoiseProfile::noiseless(num_qubits),
            jitter_sigma: 0.0,
            rng_seed: 0,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.anchor_a.num_qubits()
    }

    /// Weight of anchor B at `hour`: 0 at 06:00, 1 at 18:00.
    pub fn drift_weight(hour: f64) -> f64 {
        let h = hour.rem_euclid(24.0);
        (1.0 - (2.0 * PI * (h - ANCHOR_A_HOUR) / 24.0).cos()) / 2.0
    }

    /// Rates at `hour`, jittered with draws from `rng` and clamped to [0, 1].
    pub fn profile_at<R: Rng + ?Sized>(&self, hour: f64, rng: &mut R) -> NoiseProfile {
        let w = Self::drift_weight(hour);
        let base = self
            .anchor_a
            .zip_rates(&self.anchor_b, |a, b| a * (1.0 - w) + b * w);
        if self.jitter_sigma == 0.0 {
            return base.map_rates(|r| r.clamp(0.0, 1.0));
        }
        let normal = Normal::new(0.0, self.jitter_sigma).expect("validated sigma");
        base.map_rates(|r| (r * normal.sample(rng).exp()).clamp(0.0, 1.0))
    }

    /// Generator for the jitter of query round `round`.
    pub fn round_rng(&self, round: u64) -> StreamRng {
        rng::stream(self.rng_seed, &[rng::tag("schedule-round"), round])
    }

    /// Profile seen by every query of round `round` issued at `hour`.
    pub fn profile_for_round(&self, hour: f64, round: u64) -> NoiseProfile {
        self.profile_at(hour, &mut self.round_rng(round))
    }
}
