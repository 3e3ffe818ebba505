//! The simulated QNN-as-a-service victim: answers queries with raw per-class
//! probabilities measured on a drifting noisy device and records every query.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{argmax, softmax};
use crate::noisemodel::{noisy_execute, NoiseSchedule, Shots};
use crate::rng;
use crate::simcore::{forward_features, Encoding, ParamCircuit};

/// Circuit served by the provider. Class `j`'s score is the raw P(read 0) of
/// qubit `class_qubits[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VictimModel {
    pub circuit: ParamCircuit,
    pub num_classes: usize,
    pub class_qubits: Vec<usize>,
    #[serde(default)]
    pub trained: bool,
}

impl VictimModel {
    /// Untrained model reading its `num_classes` scores from the first qubits.
    pub fn new(circuit: ParamCircuit, num_classes: usize) -> Result<Self> {
        if num_classes < 2 || num_classes > circuit.num_qubits() {
            return Err(Error::Argument(format!(
                "{num_classes} classes cannot be read from {} qubits",
                circuit.num_qubits()
            )));
        }
        Ok(Self {
            circuit,
            num_classes,
            class_qubits: (0..num_classes).collect(),
            trained: false,
        })
    }

    /// Default victim geometry: 4 qubits, amplitude encoding, 2 layers.
    pub fn default_architecture() -> (usize, usize, Encoding) {
        (4, 2, Encoding::Amplitude)
    }

    fn validate(&self) -> Result<()> {
        if self.class_qubits.len() != self.num_classes {
            return Err(Error::Dimension {
                expected: self.num_classes,
                got: self.class_qubits.len(),
            });
        }
        if let Some(&q) = self.class_qubits.iter().find(|&&q| q >= self.circuit.num_qubits()) {
            return Err(Error::IndexOutOfRange {
                index: q,
                len: self.circuit.num_qubits(),
            });
        }
        Ok(())
    }

    /// Scores from raw per-qubit read-0 probabilities.
    pub fn class_scores(&self, raw: &[f64]) -> Vec<f64> {
        self.class_qubits.iter().map(|&q| raw[q]).collect()
    }

    /// Noiseless, infinite-shot class scores `(1 + ⟨Z_q⟩)/2`.
    pub fn ideal_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = forward_features(x, &self.circuit)?;
        Ok(self.class_qubits.iter().map(|&q| (1.0 + z[q]) / 2.0).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: VictimModel = serde_json::from_str(text)?;
        let circuit = ParamCircuit::new(
            raw.circuit.num_qubits(),
            raw.circuit.num_layers(),
            raw.circuit.encoding(),
            raw.circuit.thetas().to_vec(),
        )?;
        let model = Self { circuit, ..raw };
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Client-side label: argmax of the softmax of the raw scores.
pub fn predict(scores: &[f64]) -> usize {
    argmax(&softmax(scores))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub round: usize,
    pub sample_index: usize,
    pub hour: f64,
    pub shots: Shots,
    pub scores: Vec<f64>,
}

/// Append-only record of every answered query.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryLedger {
    entries: Vec<LedgerEntry>,
    total_labels: usize,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn total_labels(&self) -> usize {
        self.total_labels
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn append(&mut self, entry: LedgerEntry) {
        self.entries.push(entry);
        self.total_labels += 1;
    }

    /// CSV: `round,sample_index,hour,shots,score_0..score_{d-1}`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let d = self.entries.first().map_or(0, |e| e.scores.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["round".to_string(), "sample_index".into(), "hour".into(), "shots".into()];
        header.extend((0..d).map(|j| format!("score_{j}")));
        w.write_record(&header)?;
        for e in &self.entries {
            let shots = match e.shots {
                Shots::Analytic => "analytic".to_string(),
                Shots::Finite(n) => n.to_string(),
            };
            let mut rec = vec![e.round.to_string(), e.sample_index.to_string(), e.hour.to_string(), shots];
            rec.extend(e.scores.iter().map(|s| s.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Raw responses `p[t][i][j]` of `m` rounds over `n` samples and `d` classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTensor {
    m: usize,
    n: usize,
    d: usize,
    probs: Vec<f64>,
    hours: Vec<f64>,
}

impl QueryTensor {
    pub fn new(m: usize, n: usize, d: usize, probs: Vec<f64>, hours: Vec<f64>) -> Result<Self> {
        if probs.len() != m * n * d {
            return Err(Error::Dimension {
                expected: m * n * d,
                got: probs.len(),
            });
        }
        if hours.len() != m {
            return Err(Error::Dimension {
                expected: m,
                got: hours.len(),
            });
        }
        if let Some(i) = probs.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Range {
                index: i,
                value: probs[i],
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(Self { m, n, d, probs, hours })
    }

    /// Tensor from nested `[round][sample][class]` values at the default hours.
    pub fn from_nested(rounds: &[Vec<Vec<f64>>]) -> Result<Self> {
        let m = rounds.len();
        let n = rounds.first().map_or(0, Vec::len);
        let d = rounds.first().and_then(|r| r.first()).map_or(0, Vec::len);
        let mut probs = Vec::with_capacity(m * n * d);
        for r in rounds {
            if r.len() != n {
                return Err(Error::Dimension { expected: n, got: r.len() });
            }
            for s in r {
                if s.len() != d {
                    return Err(Error::Dimension { expected: d, got: s.len() });
                }
                probs.extend_from_slice(s);
            }
        }
        Self::new(m, n, d, probs, round_hours(m, 0.0))
    }

    pub fn rounds(&self) -> usize {
        self.m
    }

    pub fn samples(&self) -> usize {
        self.n
    }

    pub fn classes(&self) -> usize {
        self.d
    }

    pub fn hours(&self) -> &[f64] {
        &self.hours
    }

    pub fn get(&self, t: usize, i: usize, j: usize) -> f64 {
        self.probs[(t * self.n + i) * self.d + j]
    }

    /// Class scores of sample `i` at round `t`.
    pub fn response(&self, t: usize, i: usize) -> &[f64] {
        let at = (t * self.n + i) * self.d;
        &self.probs[at..at + self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }
}

/// Query hours `(t−1)·24/m + phase` (mod 24) for rounds `t = 1..=m`.
pub fn round_hours(m: usize, phase: f64) -> Vec<f64> {
    (0..m)
        .map(|t| (t as f64 * 24.0 / m as f64 + phase).rem_euclid(24.0))
        .collect()
}

/// Victim hosted on a noisy device, with its query ledger.
#[derive(Debug, Clone)]
pub struct QnnService {
    victim: VictimModel,
    schedule: NoiseSchedule,
    shots: Shots,
    ledger: QueryLedger,
}

impl QnnService {
    pub fn new(victim: VictimModel, schedule: NoiseSchedule, shots: Shots) -> Result<Self> {
        victim.validate()?;
        if schedule.num_qubits() != victim.circuit.num_qubits() {
            return Err(Error::Dimension {
                expected: victim.circuit.num_qubits(),
                got: schedule.num_qubits(),
            });
        }
        if shots == Shots::Finite(0) {
            return Err(Error::Argument("shots must be at least 1".into()));
        }
        Ok(Self {
            victim,
            schedule,
            shots,
            ledger: QueryLedger::new(),
        })
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    pub fn victim(&self) -> &VictimModel {
        &self.victim
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        &self.schedule
    }

    fn ensure_trained(&self) -> Result<()> {
        if self.victim.trained {
            Ok(())
        } else {
            Err(Error::Service("victim model has not been trained".into()))
        }
    }

    fn answer(&self, x: &[f64], hour: f64, round: usize, sample_index: usize) -> Result<Vec<f64>> {
        let profile = self.schedule.profile_for_round(hour, round as u64);
        let mut shot_rng = rng::stream(
            self.schedule.rng_seed,
            &[rng::tag("shots"), round as u64, sample_index as u64],
        );
        let raw = noisy_execute(x, &self.victim.circuit, &profile, self.shots, &mut shot_rng)?;
        Ok(self.victim.class_scores(&raw))
    }

    /// Answers one query issued at `hour` as part of round `round`.
    pub fn serve_query(&mut self, x: &[f64], hour: f64, round: usize, sample_index: usize) -> Result<Vec<f64>> {
        self.ensure_trained()?;
        let scores = self.answer(x, hour, round, sample_index)?;
        self.ledger.append(LedgerEntry {
            round,
            sample_index,
            hour,
            shots: self.shots,
            scores: scores.clone(),
        });
        Ok(scores)
    }

    /// Submits all `samples` in each of `m` rounds spread evenly over the day.
    pub fn multi_round_query(&mut self, samples: &[Vec<f64>], m: usize, phase: f64) -> Result<QueryTensor> {
        if m < 2 {
            return Err(Error::UndefinedVariance { rounds: m });
        }
        if samples.is_empty() {
            return Err(Error::Argument("no samples to query".into()));
        }
        self.ensure_trained()?;
        let hours = round_hours(m, phase);
        let d = self.victim.num_classes;
        let mut probs = Vec::with_capacity(m * samples.len() * d);
        for (t, &hour) in hours.iter().enumerate() {
            let answers: Vec<Vec<f64>> = samples
                .par_iter()
                .enumerate()
                .map(|(i, x)| self.answer(x, hour, t, i))
                .collect::<Result<_>>()?;
            // appended in sample order regardless of completion order
            for (i, scores) in answers.into_iter().enumerate() {
                probs.extend_from_slice(&scores);
                self.ledger.append(LedgerEntry {
                    round: t,
                    sample_index: i,
                    hour,
                    shots: self.shots,
                    scores,
                });
            }
        }
        QueryTensor::new(m, samples.len(), d, probs, hours)
    }
}

/// Victim accuracy at each hour, with exact (infinite-shot) noisy probabilities.
pub fn fluctuation_study(
    victim: &VictimModel,
    test_set: &[(Vec<f64>, usize)],
    schedule: &NoiseSchedule,
    hours: &[f64],
) -> Result<Vec<f64>> {
    if test_set.is_empty() {
        return Err(Error::Argument("empty test set".into()));
    }
    if !victim.trained {
        return Err(Error::Service("victim model has not been trained".into()));
    }
    hours
        .iter()
        .enumerate()
        .map(|(h, &hour)| {
            let profile = schedule.profile_for_round(hour, h as u64);
            let correct = test_set
                .par_iter()
                .map(|(x, label)| -> Result<usize> {
                    let mut unused = rng::stream(0, &[]);
                    let raw = noisy_execute(x, &victim.circuit, &profile, Shots::Analytic, &mut unused)?;
                    Ok(usize::from(predict(&victim.class_scores(&raw)) == *label))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .sum::<usize>();
            Ok(correct as f64 / test_set.len() as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::noisemodel::ScheduleConfig;

    fn victim() -> VictimModel {
        let c = ParamCircuit::random(4, 2, Encoding::Amplitude, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let mut v = VictimModel::new(c, 2).unwrap();
        v.trained = true;
        v
    }

    fn inputs(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..16).map(|k| ((i * 16 + k) as f64 * 0.7).sin().abs() + 0.01).collect())
            .collect()
    }

    #[test]
    fn untrained_victim_is_refused() {
        let mut v = victim();
        v.trained = false;
        let mut s = QnnService::new(v, NoiseSchedule::noiseless(4), Shots::Analytic).unwrap();
        assert!(matches!(s.serve_query(&inputs(1)[0], 0.0, 0, 0), Err(Error::Service(_))));
        assert_eq!(s.ledger().len(), 0);
    }

    #[test]
    fn noiseless_service_matches_ideal_scores() {
        let v = victim();
        let mut s = QnnService::new(v.clone(), NoiseSchedule::noiseless(4), Shots::Analytic).unwrap();
        for (i, x) in inputs(5).iter().enumerate() {
            let got = s.serve_query(x, 3.0, 0, i).unwrap();
            let want = v.ideal_scores(x).unwrap();
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-10);
            }
            assert_eq!(s.ledger().len(), i + 1);
        }
    }

    #[test]
    fn round_hours_spread_evenly() {
        let h = round_hours(5, 0.0);
        let want = [0.0, 4.8, 9.6, 14.4, 19.2];
        for (a, b) in h.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        for m in [2, 3, 7, 40] {
            let h = round_hours(m, 1.5);
            let mut gaps: Vec<f64> = h.windows(2).map(|w| (w[1] - w[0]).rem_euclid(24.0)).collect();
            gaps.push((h[0] - h[m - 1]).rem_euclid(24.0));
            let max = gaps.iter().copied().fold(0.0, f64::max);
            assert!((max - 24.0 / m as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn multi_round_shapes_and_ledger() {
        let schedule = ScheduleConfig::reference(4, 0.05, 1, 1.0).build().unwrap();
        let mut s = QnnService::new(victim(), schedule, Shots::Finite(256)).unwrap();
        let t = s.multi_round_query(&inputs(40), 5, 0.0).unwrap();
        assert_eq!((t.rounds(), t.samples(), t.classes()), (5, 40, 2));
        assert_eq!(s.ledger().total_labels(), 200);
        assert_eq!(s.ledger().entries()[41].round, 1);
        assert_eq!(s.ledger().entries()[41].sample_index, 1);
        assert!(matches!(
            s.multi_round_query(&inputs(3), 1, 0.0),
            Err(Error::UndefinedVariance { rounds: 1 })
        ));
    }

    #[test]
    fn zero_noise_rounds_are_identical() {
        let mut s = QnnService::new(victim(), NoiseSchedule::noiseless(4), Shots::Analytic).unwrap();
        let t = s.multi_round_query(&inputs(6), 5, 0.0).unwrap();
        for i in 0..6 {
            for r in 1..5 {
                assert_eq!(t.response(r, i), t.response(0, i));
            }
        }
    }

    #[test]
    fn rerun_is_bit_identical() {
        let schedule = ScheduleConfig::reference(4, 0.05, 8, 1.0).build().unwrap();
        let run = || {
            let mut s = QnnService::new(victim(), schedule.clone(), Shots::Finite(128)).unwrap();
            s.multi_round_query(&inputs(10), 4, 0.0).unwrap()
        };
        let (a, b) = (run(), run());
        assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn ledger_csv_columns() {
        let mut s = QnnService::new(victim(), NoiseSchedule::noiseless(4), Shots::Finite(16)).unwrap();
        s.multi_round_query(&inputs(2), 2, 0.0).unwrap();
        let mut buf = Vec::new();
        s.ledger().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("round,sample_index,hour,shots,score_0,score_1\n"));
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn victim_checkpoint_round_trip() {
        let v = victim();
        let back = VictimModel::from_json(&v.to_json().unwrap()).unwrap();
        assert_eq!(back, v);
        let text = v.to_json().unwrap().replace("\"class_qubits\": [\n    0,", "\"class_qubits\": [\n    9,");
        assert!(VictimModel::from_json(&text).is_err());
    }

    #[test]
    fn fluctuation_zero_noise_is_constant() {
        let v = victim();
        let test: Vec<(Vec<f64>, usize)> = inputs(30).into_iter().enumerate().map(|(i, x)| (x, i % 2)).collect();
        let acc = fluctuation_study(&v, &test, &NoiseSchedule::noiseless(4), &round_hours(5, 0.0)).unwrap();
        assert!(acc.windows(2).all(|w| w[0] == w[1]));
    }
}
