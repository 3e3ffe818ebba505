//! Noise characterization and label cleaning: per-sample round variance,
//! label derivation from averaged responses, and Remember-Ratio filtering.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{argmax, softmax};
use crate::qnnaas::QueryTensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceScore {
    pub sample_index: usize,
    pub score: f64,
}

/// A queried sample together with the labels and score derived from the victim.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub sample_index: usize,
    pub pixels: Vec<f64>,
    pub soft_label: Vec<f64>,
    pub hard_label: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanedDataset {
    pub retained: Vec<LabeledSample>,
    pub rr: f64,
    pub dropped_count: usize,
}

/// Hard and soft label of sample `i` from its round-mean response.
pub fn derive_label(tensor: &QueryTensor, i: usize) -> Result<(usize, Vec<f64>)> {
    if i >= tensor.samples() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: tensor.samples(),
        });
    }
    let m = tensor.rounds() as f64;
    let mean: Vec<f64> = (0..tensor.classes())
        .map(|j| (0..tensor.rounds()).map(|t| tensor.get(t, i, j)).sum::<f64>() / m)
        .collect();
    let soft = softmax(&mean);
    Ok((argmax(&soft), soft))
}

/// Class-averaged population variance of each sample's responses across rounds.
pub fn variance_scores(tensor: &QueryTensor) -> Result<Vec<VarianceScore>> {
    let m = tensor.rounds();
    if m < 2 {
        return Err(Error::UndefinedVariance { rounds: m });
    }
    let d = tensor.classes();
    Ok((0..tensor.samples())
        .into_par_iter()
        .map(|i| {
            let total: f64 = (0..d)
                .map(|j| {
                    let mean = (0..m).map(|t| tensor.get(t, i, j)).sum::<f64>() / m as f64;
                    (0..m).map(|t| (tensor.get(t, i, j) - mean).powi(2)).sum::<f64>() / m as f64
                })
                .sum();
            VarianceScore {
                sample_index: i,
                score: total / d as f64,
            }
        })
        .collect())
}

/// Labels and scores every queried sample. `pixels[i]` is the image sent as sample `i`.
pub fn label_samples(pixels: &[Vec<f64>], tensor: &QueryTensor) -> Result<Vec<LabeledSample>> {
    if pixels.len() != tensor.samples() {
        return Err(Error::Dimension {
            expected: tensor.samples(),
            got: pixels.len(),
        });
    }
    let scores = variance_scores(tensor)?;
    pixels
        .iter()
        .zip(scores)
        .map(|(px, s)| {
            let (hard_label, soft_label) = derive_label(tensor, s.sample_index)?;
            Ok(LabeledSample {
                sample_index: s.sample_index,
                pixels: px.clone(),
                soft_label,
                hard_label,
                score: s.score,
            })
        })
        .collect()
}

/// Number of samples kept out of `n` at remember ratio `rr` (round half up, at least one).
pub fn retained_count(n: usize, rr: f64) -> Result<usize> {
    if !(rr > 0.0 && rr <= 1.0) {
        return Err(Error::Argument(format!("remember ratio {rr} is outside (0, 1]")));
    }
    // the epsilon absorbs products like 0.35 * 40 = 13.999999999999998
    let k = (rr * n as f64 + 0.5 + 1e-9).floor() as usize;
    Ok(k.clamp(1, n.max(1)))
}

/// Positions of the kept scores, highest score first, ties by ascending sample index.
pub fn retained_indices(scores: &[VarianceScore], rr: f64) -> Result<Vec<usize>> {
    let k = retained_count(scores.len(), rr)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .score
            .total_cmp(&scores[a].score)
            .then(scores[a].sample_index.cmp(&scores[b].sample_index))
    });
    order.truncate(k.min(scores.len()));
    Ok(order)
}

/// Keeps the `rr` fraction of samples with the highest round variance.
pub fn rr_filter(samples: &[LabeledSample], rr: f64) -> Result<CleanedDataset> {
    let scores: Vec<VarianceScore> = samples
        .iter()
        .map(|s| VarianceScore {
            sample_index: s.sample_index,
            score: s.score,
        })
        .collect();
    let keep = retained_indices(&scores, rr)?;
    Ok(CleanedDataset {
        retained: keep.iter().map(|&p| samples[p].clone()).collect(),
        rr,
        dropped_count: samples.len() - keep.len(),
    })
}

/// Fraction of `samples` whose hard label matches `ground_truth[sample_index]`.
pub fn clean_fraction(samples: &[LabeledSample], ground_truth: &[usize]) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let correct = samples
        .iter()
        .filter(|s| ground_truth.get(s.sample_index) == Some(&s.hard_label))
        .count();
    correct as f64 / samples.len() as f64
}

/// CSV report: `sample_index,score,hard_label,retained,ground_truth`.
pub fn write_report<W: Write>(
    out: W,
    samples: &[LabeledSample],
    cleaned: &CleanedDataset,
    ground_truth: Option<&[usize]>,
) -> Result<()> {
    let kept: std::collections::HashSet<usize> = cleaned.retained.iter().map(|s| s.sample_index).collect();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample_index", "score", "hard_label", "retained", "ground_truth"])?;
    for s in samples {
        let truth = ground_truth
            .and_then(|g| g.get(s.sample_index))
            .map_or(String::new(), |g| g.to_string());
        w.write_record([
            s.sample_index.to_string(),
            s.score.to_string(),
            s.hard_label.to_string(),
            u8::from(kept.contains(&s.sample_index)).to_string(),
            truth,
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn sample(i: usize, score: f64, label: usize) -> LabeledSample {
        LabeledSample {
            sample_index: i,
            pixels: vec![i as f64; 4],
            soft_label: vec![0.5, 0.5],
            hard_label: label,
            score,
        }
    }

    fn scored(scores: &[f64]) -> Vec<LabeledSample> {
        scores.iter().enumerate().map(|(i, &s)| sample(i, s, 0)).collect()
    }

    #[test]
    fn label_from_round_mean() {
        let t = QueryTensor::from_nested(&[vec![vec![0.2, 0.8]], vec![vec![0.4, 0.6]]]).unwrap();
        let (hard, soft) = derive_label(&t, 0).unwrap();
        assert_eq!(hard, 1);
        let want = softmax(&[0.3, 0.7]);
        assert!((soft[0] - want[0]).abs() < 1e-15);

        let t = QueryTensor::from_nested(&[vec![vec![0.9, 0.1]], vec![vec![0.9, 0.1]]]).unwrap();
        assert_eq!(derive_label(&t, 0).unwrap().0, 0);
        assert!(derive_label(&t, 1).is_err());
    }

    #[test]
    fn hand_variance() {
        let t = QueryTensor::from_nested(&[vec![vec![0.8, 0.2]], vec![vec![0.6, 0.4]]]).unwrap();
        let s = variance_scores(&t).unwrap();
        assert!((s[0].score - 0.01).abs() < 1e-15);
        let t = QueryTensor::from_nested(&[vec![vec![0.3, 0.7]], vec![vec![0.3, 0.7]]]).unwrap();
        assert_eq!(variance_scores(&t).unwrap()[0].score, 0.0);
        let single = QueryTensor::from_nested(&[vec![vec![0.3, 0.7]]]).unwrap();
        assert!(matches!(variance_scores(&single), Err(Error::UndefinedVariance { rounds: 1 })));
    }

    #[test]
    fn hand_filter() {
        let c = rr_filter(&scored(&[0.5, 0.1, 0.4, 0.3, 0.2]), 0.6).unwrap();
        let mut kept: Vec<usize> = c.retained.iter().map(|s| s.sample_index).collect();
        kept.sort();
        assert_eq!(kept, vec![0, 2, 3]);
        assert_eq!(c.dropped_count, 2);
        assert_eq!(retained_count(40, 0.2).unwrap(), 8);
        assert_eq!(retained_count(5, 0.1).unwrap(), 1);
        assert_eq!(retained_count(5, 0.5).unwrap(), 3);
        for k in 1..=10 {
            assert_eq!(retained_count(40, k as f64 / 10.0).unwrap(), 4 * k);
        }
        assert!(rr_filter(&scored(&[0.1]), 0.0).is_err());
        assert!(rr_filter(&scored(&[0.1]), 1.5).is_err());
    }

    #[test]
    fn ties_keep_lower_index() {
        let c = rr_filter(&scored(&[0.2, 0.2, 0.2, 0.2]), 0.5).unwrap();
        let kept: Vec<usize> = c.retained.iter().map(|s| s.sample_index).collect();
        assert_eq!(kept, vec![0, 1]);
    }

    #[test]
    fn corruption_in_low_variance_is_filtered() {
        // 100 samples; the 30 lowest-variance ones carry wrong labels
        let truth = vec![0usize; 100];
        let samples: Vec<LabeledSample> = (0..100)
            .map(|i| sample(i, i as f64 / 100.0, usize::from(i < 30)))
            .collect();
        let all = clean_fraction(&samples, &truth);
        let kept = rr_filter(&samples, 0.6).unwrap();
        assert!((all - 0.7).abs() < 1e-12);
        assert_eq!(clean_fraction(&kept.retained, &truth), 1.0);
    }

    #[test]
    fn report_has_all_rows() {
        let samples = scored(&[0.3, 0.1, 0.2]);
        let c = rr_filter(&samples, 0.34).unwrap();
        let mut buf = Vec::new();
        write_report(&mut buf, &samples, &c, Some(&[0, 1, 0])).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "sample_index,score,hard_label,retained,ground_truth");
        assert_eq!(lines[1], "0,0.3,0,1,0");
        assert_eq!(lines[2], "1,0.1,0,0,1");
    }

    fn tensor_strategy() -> impl Strategy<Value = (usize, usize, usize, Vec<f64>)> {
        (2usize..6, 1usize..12, 2usize..4)
            .prop_flat_map(|(m, n, d)| (Just(m), Just(n), Just(d), prop::collection::vec(0.0..=1.0f64, m * n * d)))
    }

    proptest! {
        #[test]
        fn variance_matches_naive_loop((m, n, d, probs) in tensor_strategy()) {
            let t = QueryTensor::new(m, n, d, probs.clone(), crate::qnnaas::round_hours(m, 0.0)).unwrap();
            let fast = variance_scores(&t).unwrap();
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..d {
                    let mut mean = 0.0;
                    for r in 0..m { mean += probs[(r * n + i) * d + j]; }
                    mean /= m as f64;
                    let mut var = 0.0;
                    for r in 0..m { var += (probs[(r * n + i) * d + j] - mean).powi(2); }
                    acc += var / m as f64;
                }
                prop_assert!((fast[i].score - acc / d as f64).abs() < 1e-12);
                prop_assert!(fast[i].score >= 0.0);
            }
        }

        #[test]
        fn retention_is_monotone(
            scores in prop::collection::vec(prop::sample::select(vec![0.0, 0.1, 0.2, 0.3, 0.5]), 1..40),
            a in 0.01..=1.0f64,
            b in 0.01..=1.0f64,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let samples = scored(&scores);
            let small = rr_filter(&samples, lo).unwrap();
            let large = rr_filter(&samples, hi).unwrap();
            for s in &small.retained {
                prop_assert!(large.retained.iter().any(|t| t.sample_index == s.sample_index));
            }
            let min_kept = small.retained.iter().map(|s| s.score).fold(f64::INFINITY, f64::min);
            for s in &samples {
                if !small.retained.iter().any(|t| t.sample_index == s.sample_index) {
                    prop_assert!(s.score <= min_kept);
                    prop_assert_eq!(s, &samples[s.sample_index]);
                }
            }
            for s in &large.retained {
                prop_assert_eq!(s, &samples[s.sample_index]);
            }
        }

        #[test]
        fn hard_label_ignores_offsets(
            q in prop::collection::vec(0.0..=1.0f64, 2..5),
            c in -0.5..0.5f64,
        ) {
            let shifted: Vec<f64> = q.iter().map(|v| v + c).collect();
            prop_assert_eq!(argmax(&softmax(&q)), argmax(&softmax(&shifted)));
            prop_assert_eq!(argmax(&softmax(&q)), argmax(&q));
        }
    }
}
