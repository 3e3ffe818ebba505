//! Exact statevector simulation of the layered rotation + CRX-ring ansatz,
//! data encodings, Pauli-Z readout and adjoint gradients.

mod adjoint;
mod circuit;
mod encode;
mod state;

pub use adjoint::{
    apply_vqc, encode, features_and_gradient, forward_features, forward_state, gradient,
};
pub use circuit::{param_counts, Encoding, Gate, ParamCircuit};
pub use encode::{amplitude_encode, angle_pair_encode};
pub use state::{rx, ry, rz, z_readout, Mat2, StateVector, C64, MAX_QUBITS};
pub(crate) use state::dagger;
