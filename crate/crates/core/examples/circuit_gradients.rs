//! Runs a small variational circuit and checks its adjoint gradient against
//! central finite differences.

use qnn_extract::simcore::{forward_features, gradient, param_counts, Encoding, ParamCircuit};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> qnn_extract::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let circ = ParamCircuit::random(4, 3, Encoding::Amplitude, &mut rng)?;
    let x: Vec<f64> = (0..16).map(|i| ((i * 7) % 5) as f64 + 0.5).collect();

    let z = forward_features(&x, &circ)?;
    println!("<Z> per qubit: {z:.4?}");

    // d(sum_k c_k <Z_k>)/dθ with a fixed cotangent
    let cot = [1.0, -0.5, 0.25, 0.0];
    let g = gradient(&x, &circ, &cot)?;
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for p in 0..circ.num_params() {
        let shifted = |d: f64| -> qnn_extract::Result<f64> {
            let mut t = circ.thetas().to_vec();
            t[p] += d;
            let mut c = circ.clone();
            c.set_thetas(&t)?;
            Ok(forward_features(&x, &c)?.iter().zip(&cot).map(|(a, b)| a * b).sum())
        };
        let fd = (shifted(h)? - shifted(-h)?) / (2.0 * h);
        worst = worst.max((fd - g[p]).abs() / fd.abs().max(g[p].abs()).max(1e-8));
    }
    println!("{} parameters, worst relative gradient error {worst:.2e}", circ.num_params());
    println!("gate counts (1q, 2q) of the 8+4 qubit substitute: {:?}", param_counts(4, 4, 8, 4));
    Ok(())
}
