use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::density::DensityMatrix;
use super::profile::NoiseProfile;
use crate::error::{Error, Result};
use crate::simcore::{amplitude_encode, ry, rz, Encoding, ParamCircuit, StateVector};

/// Measurement budget per query. `Analytic` returns exact probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shots {
    Analytic,
    Finite(u32),
}

impl Default for Shots {
    fn default() -> Self {
        Shots::Finite(1024)
    }
}

impl Shots {
    pub fn count(&self) -> Option<u32> {
        match self {
            Shots::Analytic => None,
            Shots::Finite(n) => Some(*n),
        }
    }
}

/// Evolves `x` through the circuit as a mixed state, applying preparation flips,
/// depolarizing after every gate, but no readout error.
pub fn noisy_density(x: &[f64], circ: &ParamCircuit, profile: &NoiseProfile) -> Result<DensityMatrix> {
    let n = circ.num_qubits();
    if profile.num_qubits() != n {
        return Err(Error::Dimension {
            expected: n,
            got: profile.num_qubits(),
        });
    }
    profile.validate()?;

    let mut rho = match circ.encoding() {
        Encoding::Amplitude => {
            // the state-preparation routine is treated as ideal; its flips land on the loaded state
            let mut rho = DensityMatrix::from_state(&amplitude_encode(x, n)?);
            for (k, &p) in profile.spam_prep.iter().enumerate() {
                rho.bit_flip(p, k);
            }
            rho
        }
        Encoding::AnglePair => {
            // validates shape and range
            crate::simcore::angle_pair_encode(x, n)?;
            let mut rho = DensityMatrix::from_state(&StateVector::zero(n)?);
            for (k, &p) in profile.spam_prep.iter().enumerate() {
                rho.bit_flip(p, k);
            }
            for k in 0..n {
                rho.apply_unitary(&ry(PI * x[2 * k]), k, None);
                rho.depolarize_1q(profile.p1q, k);
                rho.apply_unitary(&rz(PI * x[2 * k + 1]), k, None);
                rho.depolarize_1q(profile.p1q, k);
            }
            rho
        }
    };

    let thetas = circ.thetas();
    for gate in circ.gates() {
        let m = gate.matrix(thetas[gate.param()]);
        rho.apply_unitary(&m, gate.target(), gate.control());
        match gate.control() {
            Some(c) => rho.depolarize_2q(profile.p2q, c, gate.target()),
            None => rho.depolarize_1q(profile.p1q, gate.target()),
        }
    }
    Ok(rho)
}

/// Runs the circuit on the noisy device and returns, per qubit, the (empirical)
/// probability of reading 0.
pub fn noisy_execute<R: Rng + ?Sized>(
    x: &[f64],
    circ: &ParamCircuit,
    profile: &NoiseProfile,
    shots: Shots,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if shots == Shots::Finite(0) {
        return Err(Error::Argument("shots must be at least 1".into()));
    }
    let rho = noisy_density(x, circ, profile)?;
    let n = circ.num_qubits();
    match shots {
        Shots::Analytic => Ok((0..n)
            .map(|k| {
                let p0 = rho.marginal_zero(k);
                let c = profile.confusion(k);
                (c[0][0] * p0 + c[0][1] * (1.0 - p0)).clamp(0.0, 1.0)
            })
            .collect()),
        Shots::Finite(count) => {
            let cumulative: Vec<f64> = rho
                .probabilities()
                .iter()
                .scan(0.0, |acc, p| {
                    *acc += p;
                    Some(*acc)
                })
                .collect();
            let total = *cumulative.last().expect("non-empty register");
            let mut zeros = vec![0u32; n];
            for _ in 0..count {
                let u = rng.random::<f64>() * total;
                let outcome = cumulative.partition_point(|c| *c <= u).min(cumulative.len() - 1);
                for (k, z) in zeros.iter_mut().enumerate() {
                    let prepared_one = outcome >> k & 1 == 1;
                    let flip = if prepared_one {
                        profile.readout_10[k]
                    } else {
                        profile.readout_01[k]
                    };
                    let read_one = prepared_one ^ (rng.random::<f64>() < flip);
                    if !read_one {
                        *z += 1;
                    }
                }
            }
            Ok(zeros.iter().map(|&z| z as f64 / count as f64).collect())
        }
    }
}
