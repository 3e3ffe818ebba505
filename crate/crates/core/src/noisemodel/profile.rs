use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Instantaneous error rates of the device serving the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    /// Depolarizing probability after every single-qubit gate.
    pub p1q: f64,
    /// Two-qubit depolarizing probability after every entangler.
    pub p2q: f64,
    /// Per qubit: P(read 1 | prepared 0).
    pub readout_01: Vec<f64>,
    /// Per qubit: P(read 0 | prepared 1).
    pub readout_10: Vec<f64>,
    /// Per qubit: probability the prepared state is bit-flipped.
    pub spam_prep: Vec<f64>,
}

impl NoiseProfile {
    pub fn noiseless(num_qubits: usize) -> Self {
        Self {
            p1q: 0.0,
            p2q: 0.0,
            readout_01: vec![0.0; num_qubits],
            readout_10: vec![0.0; num_qubits],
            spam_prep: vec![0.0; num_qubits],
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.readout_01.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.readout_01.len();
        for v in [&self.readout_10, &self.spam_prep] {
            if v.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        let all = [self.p1q, self.p2q]
            .into_iter()
            .chain(self.readout_01.iter().copied())
            .chain(self.readout_10.iter().copied())
            .chain(self.spam_prep.iter().copied());
        for (i, p) in all.enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Range {
                    index: i,
                    value: p,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
        Ok(())
    }

    /// Readout confusion of qubit `k`; entry `[read][prepared]`, so columns sum to 1.
    pub fn confusion(&self, k: usize) -> [[f64; 2]; 2] {
        let (e01, e10) = (self.readout_01[k], self.readout_10[k]);
        [[1.0 - e01, e10], [e01, 1.0 - e10]]
    }

    /// Elementwise map over every rate, keeping the structure.
    pub(crate) fn map_rates(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            p1q: f(self.p1q),
            p2q: f(self.p2q),
            readout_01: self.readout_01.iter().map(|&v| f(v)).collect(),
            readout_10: self.readout_10.iter().map(|&v| f(v)).collect(),
            spam_prep: self.spam_prep.iter().map(|&v| f(v)).collect(),
        }
    }

    pub(crate) fn zip_rates(&self, other: &Self, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let zip = |a: &[f64], b: &[f64], f: &mut dyn FnMut(f64, f64) -> f64| {
            a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect::<Vec<_>>()
        };
        Self {
            p1q: f(self.p1q, other.p1q),
            p2q: f(self.p2q, other.p2q),
            readout_01: zip(&self.readout_01, &other.readout_01, &mut f),
            readout_10: zip(&self.readout_10, &other.readout_10, &mut f),
            spam_prep: zip(&self.spam_prep, &other.spam_prep, &mut f),
        }
    }
}

/// One device calibration snapshot as published per qubit.
///
/// `t1_us`/`t2_us` are carried for provenance only; relaxation is not simulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSnapshot {
    pub t1_us: Vec<f64>,
    pub t2_us: Vec<f64>,
    pub readout: Vec<f64>,
    pub err_1q: Vec<f64>,
    pub err_2q: Vec<f64>,
    pub prob_meas0_prep1: Vec<f64>,
    pub prob_meas1_prep0: Vec<f64>,
}

impl CalibrationSnapshot {
    /// Maps calibration rows onto simulated rates:
    /// `readout → readout_01`, `prob_meas0_prep1 → readout_10`,
    /// `prob_meas1_prep0 → spam_prep`; gate errors are averaged over qubits
    /// and multiplied by `gate_error_scale`.
    pub fn to_profile(&self, gate_error_scale: f64) -> Result<NoiseProfile> {
        let n = self.readout.len();
        for v in [
            &self.t1_us,
            &self.t2_us,
            &self.err_1q,
            &self.prob_meas0_prep1,
            &self.prob_meas1_prep0,
        ] {
            if v.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        if self.err_2q.is_empty() {
            return Err(Error::Argument("err_2q must list at least one value".into()));
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let profile = NoiseProfile {
            p1q: (mean(&self.err_1q) * gate_error_scale).min(1.0),
            p2q: (mean(&self.err_2q) * gate_error_scale).min(1.0),
            readout_01: self.readout.clone(),
            readout_10: self.prob_meas0_prep1.clone(),
            spam_prep: self.prob_meas1_prep0.clone(),
        };
        profile.validate()?;
        Ok(profile)
    }

    /// 06:00 calibration of two qubits (physical 2 and 3) of a 127-qubit
    /// superconducting device, tiled over `num_qubits` logical qubits.
    pub fn reference_morning(num_qubits: usize) -> Self {
        Self::tile(
            num_qubits,
            [223.5, 220.1],
            [137.5, 139.8],
            [0.0123, 0.0144],
            [1.973e-4, 2.144e-4],
            4.56e-3,
            [0.0124, 0.0082],
            [0.0074, 0.0078],
        )
    }

    /// 18:00 calibration of the same two qubits.
    pub fn reference_evening(num_qubits: usize) -> Self {
        Self::tile(
            num_qubits,
            [219.8, 223.8],
            [140.6, 138.5],
            [0.0142, 0.0091],
            [1.786e-4, 2.36e-4],
            4.98e-3,
            [0.0168, 0.0082],
            [0.0116, 0.0100],
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn tile(
        n: usize,
        t1: [f64; 2],
        t2: [f64; 2],
        readout: [f64; 2],
        err_1q: [f64; 2],
        err_2q: f64,
        m0p1: [f64; 2],
        m1p0: [f64; 2],
    ) -> Self {
        let rep = |v: [f64; 2]| (0..n).map(|k| v[k % 2]).collect::<Vec<_>>();
        Self {
            t1_us: rep(t1),
            t2_us: rep(t2),
            readout: rep(readout),
            err_1q: rep(err_1q),
            err_2q: vec![err_2q; n],
            prob_meas0_prep1: rep(m0p1),
            prob_meas1_prep0: rep(m1p0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_columns_are_stochastic() {
        let p = CalibrationSnapshot::reference_morning(4).to_profile(1.0).unwrap();
        for k in 0..4 {
            let m = p.confusion(k);
            assert!((m[0][0] + m[1][0] - 1.0).abs() < 1e-15);
            assert!((m[0][1] + m[1][1] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn reference_rows_map_onto_profile() {
        let a = CalibrationSnapshot::reference_morning(4).to_profile(1.0).unwrap();
        assert_eq!(a.readout_01, vec![0.0123, 0.0144, 0.0123, 0.0144]);
        assert_eq!(a.readout_10[0], 0.0124);
        assert_eq!(a.spam_prep[1], 0.0078);
        assert_eq!(a.p2q, 4.56e-3);
        let b = CalibrationSnapshot::reference_evening(4).to_profile(1.0).unwrap();
        assert_eq!(b.readout_01[0], 0.0142);
    }

    #[test]
    fn validate_rejects_out_of_range() {
        let mut p = NoiseProfile::noiseless(2);
        p.readout_10[1] = 1.5;
        assert!(matches!(p.validate(), Err(Error::Range { .. })));
        let mut p = NoiseProfile::noiseless(2);
        p.spam_prep.pop();
        assert!(matches!(p.validate(), Err(Error::Dimension { .. })));
    }
}
