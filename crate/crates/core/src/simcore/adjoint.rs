use super::circuit::{Encoding, Gate, ParamCircuit};
use super::encode::{amplitude_encode, angle_pair_encode};
use super::state::{dagger, StateVector};
use crate::error::{Error, Result};

pub(crate) fn apply_gate(state: &mut StateVector, gate: &Gate, theta: f64) {
    let m = gate.matrix(theta);
    match gate.control() {
        Some(c) => state.apply_controlled(&m, c, gate.target()),
        None => state.apply_1q(&m, gate.target()),
    }
}

fn apply_gate_dagger(state: &mut StateVector, gate: &Gate, theta: f64) {
    let m = dagger(&gate.matrix(theta));
    match gate.control() {
        Some(c) => state.apply_controlled(&m, c, gate.target()),
        None => state.apply_1q(&m, gate.target()),
    }
}

fn apply_gate_derivative(state: &mut StateVector, gate: &Gate, theta: f64) {
    let m = gate.derivative(theta);
    match gate.control() {
        Some(c) => state.apply_projected_controlled(&m, c, gate.target()),
        None => state.apply_1q(&m, gate.target()),
    }
}

/// Runs every layer of `circ` on `state`.
pub fn apply_vqc(mut state: StateVector, circ: &ParamCircuit) -> Result<StateVector> {
    if state.num_qubits() != circ.num_qubits() {
        return Err(Error::Dimension {
            expected: circ.num_qubits(),
            got: state.num_qubits(),
        });
    }
    let thetas = circ.thetas();
    for gate in circ.gates() {
        apply_gate(&mut state, &gate, thetas[gate.param()]);
    }
    Ok(state)
}

/// Encodes `x` according to the circuit's encoding.
pub fn encode(x: &[f64], circ: &ParamCircuit) -> Result<StateVector> {
    match circ.encoding() {
        Encoding::Amplitude => amplitude_encode(x, circ.num_qubits()),
        Encoding::AnglePair => angle_pair_encode(x, circ.num_qubits()),
    }
}

/// Output state of the full model (encoding followed by the variational layers).
pub fn forward_state(x: &[f64], circ: &ParamCircuit) -> Result<StateVector> {
    apply_vqc(encode(x, circ)?, circ)
}

/// `⟨Z_k⟩` of every qubit after encoding `x` and running the circuit.
pub fn forward_features(x: &[f64], circ: &ParamCircuit) -> Result<Vec<f64>> {
    Ok(forward_state(x, circ)?.z_expectations())
}

/// Gradient of `Σ_k cotangent[k]·⟨Z_k⟩` with respect to every circuit angle,
/// by a single adjoint sweep. `cotangent` may be shorter than the register;
/// missing entries are zero.
pub fn gradient(x: &[f64], circ: &ParamCircuit, cotangent: &[f64]) -> Result<Vec<f64>> {
    Ok(features_and_gradient(x, circ, cotangent)?.1)
}

/// Features and the cotangent-weighted gradient from one forward pass.
pub fn features_and_gradient(
    x: &[f64],
    circ: &ParamCircuit,
    cotangent: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = circ.num_qubits();
    if cotangent.len() > n {
        return Err(Error::Dimension {
            expected: n,
            got: cotangent.len(),
        });
    }
    let mut psi = forward_state(x, circ)?;
    let features = psi.z_expectations();
    let mut grad = vec![0.0; circ.num_params()];
    if cotangent.iter().all(|c| *c == 0.0) {
        return Ok((features, grad));
    }

    // λ = O|ψ⟩ with O = Σ c_k Z_k (diagonal in the computational basis)
    let mut lambda = psi.clone();
    for (i, a) in lambda.amplitudes_mut().iter_mut().enumerate() {
        let w: f64 = cotangent
            .iter()
            .enumerate()
            .map(|(k, c)| if i >> k & 1 == 0 { *c } else { -*c })
            .sum();
        *a *= w;
    }

    let thetas = circ.thetas();
    let mut mu = psi.clone();
    for gate in circ.gates().iter().rev() {
        let theta = thetas[gate.param()];
        apply_gate_dagger(&mut psi, gate, theta);
        mu.amplitudes_mut().copy_from_slice(psi.amplitudes());
        apply_gate_derivative(&mut mu, gate, theta);
        grad[gate.param()] += 2.0 * lambda.inner(&mu).re;
        apply_gate_dagger(&mut lambda, gate, theta);
    }
    Ok((features, grad))
}
