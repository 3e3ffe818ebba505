use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Row-major 2×2 complex matrix.
pub type Mat2 = [[C64; 2]; 2];

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 12;

/// Pure state of `num_qubits` qubits.
///
/// Qubit `k` is bit `k` of the amplitude index (qubit 0 is the least
/// significant bit).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// `|0...0⟩`.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        check_width(num_qubits)?;
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[0] = ONE;
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes. The caller is responsible for normalization.
    pub fn from_amplitudes(num_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_width(num_qubits)?;
        if amplitudes.len() != 1 << num_qubits {
            return Err(Error::Dimension {
                expected: 1 << num_qubits,
                got: amplitudes.len(),
            });
        }
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn apply_1q(&mut self, m: &Mat2, qubit: usize) {
        debug_assert!(qubit < self.num_qubits);
        let bit = 1usize << qubit;
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i | bit];
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    /// Applies `m` to `target` on the subspace where `control` is 1.
    pub fn apply_controlled(&mut self, m: &Mat2, control: usize, target: usize) {
        debug_assert!(control != target);
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        for i in 0..self.amplitudes.len() {
            if i & cbit != 0 && i & tbit == 0 {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i | tbit];
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i | tbit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    /// `(|1⟩⟨1|_control ⊗ m_target) |ψ⟩`: the control-0 block is zeroed.
    pub(crate) fn apply_projected_controlled(&mut self, m: &Mat2, control: usize, target: usize) {
        let cbit = 1usize << control;
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & cbit == 0 {
                *a = ZERO;
            }
        }
        self.apply_controlled(m, control, target);
    }

    /// `⟨Z_k⟩ = P(bit k = 0) − P(bit k = 1)`.
    pub fn z_expectation(&self, qubit: usize) -> Result<f64> {
        if qubit >= self.num_qubits {
            return Err(Error::IndexOutOfRange {
                index: qubit,
                len: self.num_qubits,
            });
        }
        let bit = 1usize << qubit;
        let z = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| if i & bit == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum::<f64>();
        Ok(z.clamp(-1.0, 1.0))
    }

    /// `⟨Z_k⟩` for every qubit, in qubit order.
    pub fn z_expectations(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.num_qubits];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            for (k, z) in out.iter_mut().enumerate() {
                if i >> k & 1 == 0 {
                    *z += p;
                } else {
                    *z -= p;
                }
            }
        }
        out.iter_mut().for_each(|z| *z = z.clamp(-1.0, 1.0));
        out
    }
}

/// `⟨Z_k⟩` of qubit `k`.
pub fn z_readout(state: &StateVector, k: usize) -> Result<f64> {
    state.z_expectation(k)
}

fn check_width(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        return Err(Error::Argument(format!(
            "register width {num_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

pub(crate) fn dagger(m: &Mat2) -> Mat2 {
    [
        [m[0][0].conj(), m[1][0].conj()],
        [m[0][1].conj(), m[1][1].conj()],
    ]
}

pub fn rz(theta: f64) -> Mat2 {
    let h = 0.5 * theta;
    [
        [C64::from_polar(1.0, -h), ZERO],
        [ZERO, C64::from_polar(1.0, h)],
    ]
}

pub fn ry(theta: f64) -> Mat2 {
    let (s, c) = (0.5 * theta).sin_cos();
    [
        [C64::new(c, 0.0), C64::new(-s, 0.0)],
        [C64::new(s, 0.0), C64::new(c, 0.0)],
    ]
}

pub fn rx(theta: f64) -> Mat2 {
    let (s, c) = (0.5 * theta).sin_cos();
    [
        [C64::new(c, 0.0), C64::new(0.0, -s)],
        [C64::new(0.0, -s), C64::new(c, 0.0)],
    ]
}

// d/dθ exp(-iθP/2) = -i/2 · P · exp(-iθP/2)

pub(crate) fn drz(theta: f64) -> Mat2 {
    let h = 0.5 * theta;
    let m = C64::new(0.0, -0.5);
    [
        [m * C64::from_polar(1.0, -h), ZERO],
        [ZERO, -m * C64::from_polar(1.0, h)],
    ]
}

pub(crate) fn dry(theta: f64) -> Mat2 {
    let (s, c) = (0.5 * theta).sin_cos();
    [
        [C64::new(-0.5 * s, 0.0), C64::new(-0.5 * c, 0.0)],
        [C64::new(0.5 * c, 0.0), C64::new(-0.5 * s, 0.0)],
    ]
}

pub(crate) fn drx(theta: f64) -> Mat2 {
    let (s, c) = (0.5 * theta).sin_cos();
    [
        [C64::new(-0.5 * s, 0.0), C64::new(0.0, -0.5 * c)],
        [C64::new(0.0, -0.5 * c), C64::new(-0.5 * s, 0.0)],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn z_readout_basis_and_plus() {
        let zero = StateVector::zero(1).unwrap();
        assert!(close(z_readout(&zero, 0).unwrap(), 1.0));

        let mut one = zero.clone();
        one.apply_1q(&rx(std::f64::consts::PI), 0);
        assert!(close(z_readout(&one, 0).unwrap(), -1.0));

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus =
            StateVector::from_amplitudes(1, vec![C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap();
        assert!(z_readout(&plus, 0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn z_readout_rejects_bad_index() {
        let s = StateVector::zero(2).unwrap();
        assert!(matches!(
            z_readout(&s, 2),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));
    }

    #[test]
    fn bit_order_is_little_endian() {
        let mut s = StateVector::zero(3).unwrap();
        s.apply_1q(&ry(std::f64::consts::PI), 1);
        assert!((s.amplitudes()[0b010].norm() - 1.0).abs() < 1e-12);
        assert_eq!(s.z_expectations().iter().map(|z| z.round() as i32).collect::<Vec<_>>(), vec![1, -1, 1]);
    }

    #[test]
    fn derivative_matrices_match_finite_difference() {
        let h = 1e-6;
        for (f, df) in [(rz as fn(f64) -> Mat2, drz as fn(f64) -> Mat2), (ry, dry), (rx, drx)] {
            let t = 0.37;
            let (p, m, d) = (f(t + h), f(t - h), df(t));
            for r in 0..2 {
                for c in 0..2 {
                    let fd = (p[r][c] - m[r][c]) / (2.0 * h);
                    assert!((fd - d[r][c]).norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn width_limits() {
        assert!(StateVector::zero(0).is_err());
        assert!(StateVector::zero(MAX_QUBITS + 1).is_err());
        assert!(StateVector::zero(MAX_QUBITS).is_ok());
    }
}
