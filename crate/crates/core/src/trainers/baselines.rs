use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{accuracy_of, fit, FitConfig, QnnClassifier, TrainLog};
use super::victim::victim_architecture;
use crate::error::{Error, Result};
use crate::math::argmax;
use crate::rng;

/// Number of committee members in the bagging baseline.
pub const DEFAULT_COMMITTEE: usize = 5;

/// Victim-architecture model trained directly on every queried sample.
pub fn train_base(
    data: &[(Vec<f64>, Vec<f64>)],
    cfg: &FitConfig,
    seed: u64,
    eval: Option<&[(Vec<f64>, usize)]>,
) -> Result<(QnnClassifier, TrainLog)> {
    let d = data.first().map_or(2, |(_, t)| t.len());
    let mut model = victim_architecture(d, cfg.logit_scale, rng::derive_seed(seed, &[rng::tag("base")]))?;
    let log = fit(&mut model, data, cfg, rng::derive_seed(seed, &[rng::tag("base-fit")]), eval)?;
    Ok((model, log))
}

/// Committee fused by majority vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub members: Vec<QnnClassifier>,
}

impl Ensemble {
    /// Majority vote of member predictions; ties go to the tied class with the
    /// largest summed softmax probability, then to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let d = self.members.first().map_or(0, QnnClassifier::num_classes);
        let mut votes = vec![0usize; d];
        let mut mass = vec![0.0; d];
        for m in &self.members {
            let p = m.probabilities(x)?;
            votes[argmax(&p)] += 1;
            mass.iter_mut().zip(&p).for_each(|(a, b)| *a += b);
        }
        let top = votes.iter().copied().max().unwrap_or(0);
        let mut best = None;
        for j in (0..d).filter(|&j| votes[j] == top) {
            match best {
                Some(b) if mass[j] <= mass[b] => {}
                _ => best = Some(j),
            }
        }
        best.ok_or_else(|| Error::Argument("empty committee".into()))
    }

    pub fn mean_probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut acc: Vec<f64> = Vec::new();
        for m in &self.members {
            let p = m.probabilities(x)?;
            if acc.is_empty() {
                acc = p;
            } else {
                acc.iter_mut().zip(&p).for_each(|(a, b)| *a += b);
            }
        }
        let k = self.members.len() as f64;
        Ok(acc.into_iter().map(|a| a / k).collect())
    }

    pub fn accuracy(&self, data: &[(Vec<f64>, usize)]) -> Result<f64> {
        accuracy_of(data, |x| self.predict(x))
    }

    pub fn num_params(&self) -> usize {
        self.members.iter().map(|m| m.circuit.num_params()).sum()
    }

    pub fn gate_counts(&self) -> (usize, usize) {
        self.members.iter().fold((0, 0), |(a, b), m| {
            let (x, y) = m.circuit.gate_counts();
            (a + x, b + y)
        })
    }
}

/// Bagging baseline: `committee` members, each trained on a bootstrap
/// resample (size n, with replacement) of the queried data.
pub fn train_qleak(
    data: &[(Vec<f64>, Vec<f64>)],
    committee: usize,
    cfg: &FitConfig,
    seed: u64,
) -> Result<(Ensemble, Vec<TrainLog>)> {
    if committee == 0 || data.len() < committee {
        return Err(Error::Argument(format!(
            "{} samples cannot feed a committee of {committee}",
            data.len()
        )));
    }
    let d = data[0].1.len();
    let trained = (0..committee)
        .into_par_iter()
        .map(|k| {
            use rand::Rng;
            let member_seed = rng::derive_seed(seed, &[rng::tag("qleak-member"), k as u64]);
            let mut pick = rng::stream(member_seed, &[rng::tag("bag")]);
            let bag: Vec<(Vec<f64>, Vec<f64>)> =
                (0..data.len()).map(|_| data[pick.random_range(0..data.len())].clone()).collect();
            let mut model = victim_architecture(d, cfg.logit_scale, member_seed)?;
            let log = fit(&mut model, &bag, cfg, member_seed, None)?;
            Ok((model, log))
        })
        .collect::<Result<Vec<_>>>()?;
    let (members, logs) = trained.into_iter().unzip();
    Ok((Ensemble { members }, logs))
}
