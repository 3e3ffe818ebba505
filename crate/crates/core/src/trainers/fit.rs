use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use crate::error::{Error, Result};
use crate::math::{argmax, log_softmax, softmax};
use crate::rng;
use crate::simcore::{features_and_gradient, forward_features, ParamCircuit};

/// Multiplier applied to Z readouts before the softmax during training.
/// Raw readouts live in [−1, 1], which caps a two-class margin at 2.
pub const DEFAULT_LOGIT_SCALE: f64 = 5.0;

/// A circuit classifier whose logits are scaled Z readouts of `class_qubits`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QnnClassifier {
    pub circuit: ParamCircuit,
    pub class_qubits: Vec<usize>,
    pub logit_scale: f64,
}

impl QnnClassifier {
    pub fn new(circuit: ParamCircuit, num_classes: usize, logit_scale: f64) -> Result<Self> {
        if num_classes < 2 || num_classes > circuit.num_qubits() {
            return Err(Error::Argument(format!(
                "{num_classes} classes cannot be read from {} qubits",
                circuit.num_qubits()
            )));
        }
        Ok(Self {
            circuit,
            class_qubits: (0..num_classes).collect(),
            logit_scale,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.class_qubits.len()
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = forward_features(x, &self.circuit)?;
        Ok(self.class_qubits.iter().map(|&q| self.logit_scale * z[q]).collect())
    }

    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.logits(x)?))
    }

    pub fn accuracy(&self, data: &[(Vec<f64>, usize)]) -> Result<f64> {
        accuracy_of(data, |x| self.predict(x))
    }

    /// Cross-entropy against `target` and its gradient wrt the circuit angles.
    pub fn loss_and_gradient(&self, x: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>, usize)> {
        if target.len() != self.num_classes() {
            return Err(Error::Dimension {
                expected: self.num_classes(),
                got: target.len(),
            });
        }
        let mut cot = vec![0.0; self.circuit.num_qubits()];
        // the cotangent depends on the forward pass, so run the readout first
        let z = forward_features(x, &self.circuit)?;
        let logits: Vec<f64> = self.class_qubits.iter().map(|&q| self.logit_scale * z[q]).collect();
        let logp = log_softmax(&logits);
        let loss = -target.iter().zip(&logp).map(|(t, l)| t * l).sum::<f64>();
        for (j, &q) in self.class_qubits.iter().enumerate() {
            cot[q] += self.logit_scale * (logp[j].exp() - target[j]);
        }
        let (_, grad) = features_and_gradient(x, &self.circuit, &cot)?;
        Ok((loss, grad, argmax(&logits)))
    }
}

pub(crate) fn accuracy_of(data: &[(Vec<f64>, usize)], predict: impl Fn(&[f64]) -> Result<usize> + Sync) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Argument("accuracy of an empty set".into()));
    }
    let hits = data
        .par_iter()
        .map(|(x, y)| predict(x).map(|p| usize::from(p == *y)))
        .collect::<Result<Vec<_>>>()?;
    Ok(hits.iter().sum::<usize>() as f64 / data.len() as f64)
}

/// One-hot probability vector.
pub fn one_hot(label: usize, num_classes: usize) -> Vec<f64> {
    let mut v = vec![0.0; num_classes];
    v[label] = 1.0;
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub epochs: usize,
    /// Minibatch size; 0 trains on the full set each step.
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub logit_scale: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self::victim()
    }
}

impl FitConfig {
    pub fn victim() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            lr: 5e-3,
            weight_decay: 1e-4,
            logit_scale: DEFAULT_LOGIT_SCALE,
        }
    }

    /// Local baselines trained on queried data.
    pub fn baseline() -> Self {
        Self { epochs: 100, ..Self::victim() }
    }

    /// Transfer training of the substitute's classifier head.
    pub fn classifier() -> Self {
        Self {
            epochs: 300,
            batch_size: 0,
            lr: 5e-2,
            ..Self::victim()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
}

impl TrainLog {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.loss).collect()
    }

    pub fn last(&self) -> Option<&EpochLog> {
        self.epochs.last()
    }

    /// CSV: `epoch,loss,train_acc,test_acc` (empty when no held-out set was given).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "loss", "train_acc", "test_acc"])?;
        for e in &self.epochs {
            w.write_record([
                e.epoch.to_string(),
                e.loss.to_string(),
                e.train_acc.to_string(),
                e.test_acc.map_or(String::new(), |a| a.to_string()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Minimizes soft-target cross-entropy with Adam. `data` pairs an input with
/// a probability vector over classes; `seed` fixes the shuffling order.
pub fn fit(
    model: &mut QnnClassifier,
    data: &[(Vec<f64>, Vec<f64>)],
    cfg: &FitConfig,
    seed: u64,
    eval: Option<&[(Vec<f64>, usize)]>,
) -> Result<TrainLog> {
    if data.is_empty() {
        return Err(Error::Training("no training samples".into()));
    }
    let batch = if cfg.batch_size == 0 { data.len() } else { cfg.batch_size };
    let mut adam = AdamState::new(model.circuit.num_params(), cfg.lr, cfg.weight_decay);
    let mut log = TrainLog::default();
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::stream(seed, &[rng::tag("fit-shuffle"), epoch as u64]));
        let (mut loss_sum, mut hits) = (0.0, 0usize);
        for chunk in order.chunks(batch) {
            let per_sample = chunk
                .par_iter()
                .map(|&i| {
                    let (x, t) = &data[i];
                    model.loss_and_gradient(x, t).map(|(l, g, p)| (l, g, usize::from(p == argmax(t))))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut grad = vec![0.0; model.circuit.num_params()];
            for (l, g, hit) in &per_sample {
                loss_sum += l;
                hits += hit;
                grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
            }
            grad.iter_mut().for_each(|g| *g /= chunk.len() as f64);
            adam.step(model.circuit.thetas_mut(), &grad)
                .map_err(|e| Error::Training(format!("epoch {epoch}: {e}")))?;
        }
        let test_acc = match eval {
            Some(set) if !set.is_empty() => Some(model.accuracy(set)?),
            _ => None,
        };
        log.epochs.push(EpochLog {
            epoch,
            loss: loss_sum / data.len() as f64,
            train_acc: hits as f64 / data.len() as f64,
            test_acc,
        });
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::simcore::Encoding;

    fn model(seed: u64) -> QnnClassifier {
        let c = ParamCircuit::random(2, 2, Encoding::AnglePair, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        QnnClassifier::new(c, 2, DEFAULT_LOGIT_SCALE).unwrap()
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let m = model(4);
        let x = [0.3, -0.6, 0.1, 0.8];
        let t = [0.3, 0.7];
        let (_, g, _) = m.loss_and_gradient(&x, &t).unwrap();
        let h = 1e-5;
        for k in 0..m.circuit.num_params() {
            let at = |d: f64| {
                let mut mm = m.clone();
                let mut th = mm.circuit.thetas().to_vec();
                th[k] += d;
                mm.circuit.set_thetas(&th).unwrap();
                mm.loss_and_gradient(&x, &t).unwrap().0
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-6 * (1.0 + fd.abs()), "param {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn single_sample_is_memorized() {
        let mut m = model(1);
        let data = vec![(vec![0.4, 0.2, -0.3, 0.9], one_hot(1, 2))];
        let cfg = FitConfig::classifier();
        let log = fit(&mut m, &data, &cfg, 3, None).unwrap();
        let (loss, _, _) = m.loss_and_gradient(&data[0].0, &data[0].1).unwrap();
        assert!(loss < 0.1, "final loss {loss}");
        assert_eq!(log.epochs.len(), 300);
    }

    #[test]
    fn separable_features_are_fit() {
        let mut m = model(2);
        let data: Vec<(Vec<f64>, Vec<f64>)> = (0..16)
            .map(|i| {
                let y = i % 2;
                let s = if y == 0 { -0.7 } else { 0.7 };
                let w = (i as f64 * 0.37).sin() * 0.2;
                (vec![s + w, w, s - w, -w], one_hot(y, 2))
            })
            .collect();
        fit(&mut m, &data, &FitConfig::classifier(), 5, None).unwrap();
        let labelled: Vec<(Vec<f64>, usize)> = data.iter().map(|(x, t)| (x.clone(), argmax(t))).collect();
        assert_eq!(m.accuracy(&labelled).unwrap(), 1.0);
    }

    #[test]
    fn fit_is_deterministic_and_logs_csv() {
        let data: Vec<(Vec<f64>, Vec<f64>)> =
            (0..10).map(|i| (vec![0.1 * i as f64 - 0.5, 0.2, 0.3, -0.1], one_hot(i % 2, 2))).collect();
        let run = || {
            let mut m = model(7);
            let cfg = FitConfig { epochs: 5, batch_size: 3, ..FitConfig::victim() };
            let log = fit(&mut m, &data, &cfg, 11, Some(&[(data[0].0.clone(), 0)])).unwrap();
            (m, log)
        };
        let (a, la) = run();
        let (b, lb) = run();
        assert_eq!(a, b);
        assert_eq!(la, lb);
        let mut buf = Vec::new();
        la.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 6);
        let mut m = model(7);
        assert!(matches!(fit(&mut m, &[], &FitConfig::victim(), 0, None), Err(Error::Training(_))));
    }
}
