//! Desk-scale laboratory for extracting quantum neural networks served from noisy,
//! drifting hardware.
//!
//! The crate simulates a victim model behind a query service ([`qnnaas`]) running
//! on a time-varying noisy device ([`noisemodel`]), and implements the attacker
//! side: multi-round querying, variance-based cleaning ([`cleanse`]), contrastive
//! pretraining of a quantum encoder with transfer-trained classifiers
//! ([`trainers`]), two baselines, and experiment sweeps ([`harness`]).

pub mod cleanse;
pub mod datapipe;
pub mod error;
pub mod harness;
pub mod math;
pub mod noisemodel;
pub mod qnnaas;
pub mod rng;
pub mod simcore;
pub mod trainers;

pub use error::{Error, Result};
