use std::f64::consts::PI;

use super::state::{ry, rz, StateVector, C64, ZERO};
use crate::error::{Error, Result};

/// Loads `x` (zero-padded to `2^q`) as normalized amplitudes.
pub fn amplitude_encode(x: &[f64], q: usize) -> Result<StateVector> {
    let dim = 1usize << q.min(super::MAX_QUBITS + 1);
    if x.len() > dim {
        return Err(Error::Dimension {
            expected: dim,
            got: x.len(),
        });
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::Argument(format!("input value {i} is not finite")));
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateInput("amplitude encoding of an all-zero vector"));
    }
    let mut amps = vec![ZERO; dim];
    for (a, v) in amps.iter_mut().zip(x) {
        *a = C64::new(v / norm, 0.0);
    }
    StateVector::from_amplitudes(q, amps)
}

/// Product state with `RY(π·f[2k])` then `RZ(π·f[2k+1])` on qubit `k`.
pub fn angle_pair_encode(f: &[f64], q: usize) -> Result<StateVector> {
    if f.len() != 2 * q {
        return Err(Error::Dimension {
            expected: 2 * q,
            got: f.len(),
        });
    }
    if let Some(i) = f.iter().position(|v| !(-1.0..=1.0).contains(v)) {
        return Err(Error::Range {
            index: i,
            value: f[i],
            lo: -1.0,
            hi: 1.0,
        });
    }
    let mut state = StateVector::zero(q)?;
    for k in 0..q {
        state.apply_1q(&ry(PI * f[2 * k]), k);
        state.apply_1q(&rz(PI * f[2 * k + 1]), k);
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn amps_close(s: &StateVector, want: &[C64], tol: f64) {
        assert_eq!(s.amplitudes().len(), want.len());
        for (a, b) in s.amplitudes().iter().zip(want) {
            assert!((a - b).norm() < tol, "{a} vs {b}");
        }
    }

    fn re(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| C64::new(x, 0.0)).collect()
    }

    #[test]
    fn amplitude_examples() {
        let s = amplitude_encode(&[1.0, 0.0, 0.0, 0.0], 2).unwrap();
        amps_close(&s, &re(&[1.0, 0.0, 0.0, 0.0]), 1e-15);

        let s = amplitude_encode(&[1.0; 4], 2).unwrap();
        amps_close(&s, &re(&[0.5; 4]), 1e-15);

        // 3-4-5 triangle
        let s = amplitude_encode(&[3.0, 4.0], 1).unwrap();
        amps_close(&s, &re(&[0.6, 0.8]), 1e-15);
    }

    #[test]
    fn amplitude_pads_and_normalizes() {
        let s = amplitude_encode(&[2.0, 0.0, 1.0], 3).unwrap();
        assert_eq!(s.amplitudes().len(), 8);
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn amplitude_errors() {
        assert!(matches!(
            amplitude_encode(&[0.0; 4], 2),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            amplitude_encode(&[1.0; 5], 2),
            Err(Error::Dimension { expected: 4, got: 5 })
        ));
    }

    #[test]
    fn angle_pair_examples() {
        let s = angle_pair_encode(&[0.0; 8], 4).unwrap();
        assert!((s.amplitudes()[0] - C64::new(1.0, 0.0)).norm() < 1e-15);

        let mut f = [0.0; 8];
        f[0] = 1.0;
        let s = angle_pair_encode(&f, 4).unwrap();
        assert!((s.amplitudes()[1].norm() - 1.0).abs() < 1e-12);
        assert_eq!(
            s.z_expectations().iter().map(|z| z.round() as i32).collect::<Vec<_>>(),
            vec![-1, 1, 1, 1]
        );
    }

    #[test]
    fn angle_pair_matches_per_qubit_product() {
        let f = [0.5, 0.25, -0.3, 0.9, 1.0, -1.0, 0.0, 0.7];
        let s = angle_pair_encode(&f, 4).unwrap();
        // independent oracle: closed-form single-qubit states, tensored
        let qubit = |a: f64, b: f64| {
            let (th, ph) = (PI * a, PI * b);
            [
                C64::from_polar((th / 2.0).cos(), -ph / 2.0),
                C64::from_polar((th / 2.0).sin(), ph / 2.0),
            ]
        };
        let singles: Vec<[C64; 2]> = (0..4).map(|k| qubit(f[2 * k], f[2 * k + 1])).collect();
        for (i, a) in s.amplitudes().iter().enumerate() {
            let want: C64 = (0..4).map(|k| singles[k][i >> k & 1]).product();
            assert!((a - want).norm() < 1e-12);
        }
    }

    #[test]
    fn angle_pair_errors() {
        assert!(matches!(
            angle_pair_encode(&[0.0; 7], 4),
            Err(Error::Dimension { expected: 8, got: 7 })
        ));
        assert!(matches!(
            angle_pair_encode(&[0.0, 1.5], 1),
            Err(Error::Range { index: 1, .. })
        ));
    }
}
