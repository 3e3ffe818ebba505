use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::state::{drx, dry, drz, rx, ry, rz, Mat2};
use crate::error::{Error, Result};

/// How classical input is loaded into the register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    /// Zero-padded, L2-normalized amplitudes (up to `2^n` values).
    Amplitude,
    /// `RY(π·f[2k]) · RZ(π·f[2k+1])` on qubit `k` (exactly `2n` values in [-1, 1]).
    AnglePair,
}

/// One parameterized gate of the ansatz; `param` indexes into the circuit's angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Rz { qubit: usize, param: usize },
    Ry { qubit: usize, param: usize },
    Crx { control: usize, target: usize, param: usize },
}

impl Gate {
    pub fn param(&self) -> usize {
        match *self {
            Gate::Rz { param, .. } | Gate::Ry { param, .. } | Gate::Crx { param, .. } => param,
        }
    }

    pub fn is_entangler(&self) -> bool {
        matches!(self, Gate::Crx { .. })
    }

    /// Qubit the 2×2 matrix acts on.
    pub fn target(&self) -> usize {
        match *self {
            Gate::Rz { qubit, .. } | Gate::Ry { qubit, .. } => qubit,
            Gate::Crx { target, .. } => target,
        }
    }

    pub fn control(&self) -> Option<usize> {
        match *self {
            Gate::Crx { control, .. } => Some(control),
            _ => None,
        }
    }

    pub fn matrix(&self, theta: f64) -> Mat2 {
        match self {
            Gate::Rz { .. } => rz(theta),
            Gate::Ry { .. } => ry(theta),
            Gate::Crx { .. } => rx(theta),
        }
    }

    pub(crate) fn derivative(&self, theta: f64) -> Mat2 {
        match self {
            Gate::Rz { .. } => drz(theta),
            Gate::Ry { .. } => dry(theta),
            Gate::Crx { .. } => drx(theta),
        }
    }
}

/// Layered variational circuit: per layer `RZ·RY·RZ` on every qubit followed by
/// a ring of `CRX` entanglers (control `k` → target `(k+1) mod n`).
///
/// Angles are stored layer-major; within a layer the order is
/// `[rz_a(0..n), ry(0..n), rz_b(0..n), crx(0..n)]`. A single-qubit register has
/// no ring and therefore no entangler angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamCircuit {
    num_qubits: usize,
    num_layers: usize,
    encoding: Encoding,
    thetas: Vec<f64>,
}

impl ParamCircuit {
    pub fn new(
        num_qubits: usize,
        num_layers: usize,
        encoding: Encoding,
        thetas: Vec<f64>,
    ) -> Result<Self> {
        if num_qubits == 0 || num_qubits > super::MAX_QUBITS {
            return Err(Error::Argument(format!(
                "circuit width {num_qubits} outside 1..={}",
                super::MAX_QUBITS
            )));
        }
        let expected = Self::param_len(num_qubits, num_layers);
        if thetas.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: thetas.len(),
            });
        }
        if let Some(i) = thetas.iter().position(|t| !t.is_finite()) {
            return Err(Error::Argument(format!("angle {i} is not finite")));
        }
        Ok(Self {
            num_qubits,
            num_layers,
            encoding,
            thetas,
        })
    }

    pub fn zeros(num_qubits: usize, num_layers: usize, encoding: Encoding) -> Result<Self> {
        Self::new(
            num_qubits,
            num_layers,
            encoding,
            vec![0.0; Self::param_len(num_qubits, num_layers)],
        )
    }

    /// Angles drawn uniformly from [-π, π).
    pub fn random<R: Rng + ?Sized>(
        num_qubits: usize,
        num_layers: usize,
        encoding: Encoding,
        rng: &mut R,
    ) -> Result<Self> {
        let thetas = (0..Self::param_len(num_qubits, num_layers))
            .map(|_| rng.random_range(-PI..PI))
            .collect();
        Self::new(num_qubits, num_layers, encoding, thetas)
    }

    pub fn param_len(num_qubits: usize, num_layers: usize) -> usize {
        Self::layer_stride(num_qubits) * num_layers
    }

    fn entanglers(num_qubits: usize) -> usize {
        if num_qubits > 1 {
            num_qubits
        } else {
            0
        }
    }

    fn layer_stride(num_qubits: usize) -> usize {
        3 * num_qubits + Self::entanglers(num_qubits)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn num_params(&self) -> usize {
        self.thetas.len()
    }

    /// Replaces all angles; rejects wrong lengths and non-finite values.
    pub fn set_thetas(&mut self, thetas: &[f64]) -> Result<()> {
        if thetas.len() != self.thetas.len() {
            return Err(Error::Dimension {
                expected: self.thetas.len(),
                got: thetas.len(),
            });
        }
        if let Some(i) = thetas.iter().position(|t| !t.is_finite()) {
            return Err(Error::Argument(format!("angle {i} is not finite")));
        }
        self.thetas.copy_from_slice(thetas);
        Ok(())
    }

    pub(crate) fn thetas_mut(&mut self) -> &mut [f64] {
        &mut self.thetas
    }

    /// (single-qubit rotation count, entangler count).
    pub fn gate_counts(&self) -> (usize, usize) {
        (
            3 * self.num_qubits * self.num_layers,
            Self::entanglers(self.num_qubits) * self.num_layers,
        )
    }

    /// Gates in application order.
    pub fn gates(&self) -> Vec<Gate> {
        let n = self.num_qubits;
        let stride = Self::layer_stride(n);
        let mut out = Vec::with_capacity(self.thetas.len());
        for layer in 0..self.num_layers {
            let base = layer * stride;
            out.extend((0..n).map(|q| Gate::Rz { qubit: q, param: base + q }));
            out.extend((0..n).map(|q| Gate::Ry { qubit: q, param: base + n + q }));
            out.extend((0..n).map(|q| Gate::Rz { qubit: q, param: base + 2 * n + q }));
            if n > 1 {
                out.extend((0..n).map(|k| Gate::Crx {
                    control: k,
                    target: (k + 1) % n,
                    param: base + 3 * n + k,
                }));
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ParamCircuit = serde_json::from_str(text)?;
        Self::new(raw.num_qubits, raw.num_layers, raw.encoding, raw.thetas)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Gate-parameter accounting for an encoder + classifier pair:
/// `(3·(eq·el + cq·cl), eq·el + cq·cl)` single-qubit and two-qubit parameters.
pub fn param_counts(
    enc_layers: usize,
    clf_layers: usize,
    enc_qubits: usize,
    clf_qubits: usize,
) -> (usize, usize) {
    let wires = enc_qubits * enc_layers + clf_qubits * clf_layers;
    (3 * wires, wires)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn table_accounting() {
        assert_eq!(param_counts(4, 4, 8, 4), (144, 48));
        assert_eq!(param_counts(1, 1, 1, 1), (6, 2));
        // five 4-qubit, 2-layer committee members
        let member = param_counts(2, 0, 4, 0);
        assert_eq!((5 * member.0, 5 * member.1), (120, 40));
    }

    #[test]
    fn layout_counts() {
        let c = ParamCircuit::zeros(8, 4, Encoding::Amplitude).unwrap();
        assert_eq!(c.num_params(), 8 * 4 * 4);
        assert_eq!(c.gate_counts(), (96, 32));
        let single = ParamCircuit::zeros(1, 2, Encoding::Amplitude).unwrap();
        assert_eq!(single.num_params(), 6);
        assert!(single.gates().iter().all(|g| !g.is_entangler()));
    }

    #[test]
    fn every_param_used_once() {
        let c = ParamCircuit::zeros(5, 3, Encoding::Amplitude).unwrap();
        let mut seen: Vec<usize> = c.gates().iter().map(Gate::param).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..c.num_params()).collect::<Vec<_>>());
    }

    #[test]
    fn ring_wiring() {
        let c = ParamCircuit::zeros(3, 1, Encoding::Amplitude).unwrap();
        let ring: Vec<_> = c
            .gates()
            .into_iter()
            .filter_map(|g| match g {
                Gate::Crx { control, target, .. } => Some((control, target)),
                _ => None,
            })
            .collect();
        assert_eq!(ring, vec![(0, 1), (1, 2), (2, 0)]);
    }

    #[test]
    fn rejects_bad_angles() {
        assert!(matches!(
            ParamCircuit::new(2, 1, Encoding::Amplitude, vec![0.0; 3]),
            Err(Error::Dimension { expected: 8, got: 3 })
        ));
        let mut t = vec![0.0; 8];
        t[3] = f64::NAN;
        assert!(ParamCircuit::new(2, 1, Encoding::Amplitude, t).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut c = ParamCircuit::random(4, 3, Encoding::AnglePair, &mut rng).unwrap();
        c.thetas_mut()[0] = 0.1 + 0.2;
        c.thetas_mut()[1] = -1.0e-300;
        let back = ParamCircuit::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back.encoding(), Encoding::AnglePair);
        for (a, b) in c.thetas().iter().zip(back.thetas()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert!(c.to_json().unwrap().contains("\"angle-pair\""));
    }
}
