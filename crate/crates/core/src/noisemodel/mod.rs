//! Mixed-state execution of a circuit on a drifting noisy device.

mod density;
mod execute;
mod profile;
mod schedule;

pub use density::DensityMatrix;
pub use execute::{noisy_density, noisy_execute, Shots};
pub use profile::{CalibrationSnapshot, NoiseProfile};
pub use schedule::{NoiseSchedule, ScheduleConfig, ANCHOR_A_HOUR, ANCHOR_B_HOUR};
