use crate::error::{Error, Result};
use crate::simcore::{dagger, Mat2, StateVector, C64};

/// Mixed state on `num_qubits` qubits, stored row-major (`dim × dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    dim: usize,
    entries: Vec<C64>,
}

impl DensityMatrix {
    pub fn from_state(state: &StateVector) -> Self {
        let a = state.amplitudes();
        let dim = a.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for ai in a {
            entries.extend(a.iter().map(|aj| ai * aj.conj()));
        }
        Self {
            num_qubits: state.num_qubits(),
            dim,
            entries,
        }
    }

    pub fn from_entries(num_qubits: usize, entries: Vec<C64>) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if entries.len() != dim * dim {
            return Err(Error::Dimension {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(Self {
            num_qubits,
            dim,
            entries,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim + col]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Largest `|ρ_ij − conj(ρ_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Computational-basis probabilities (the real diagonal).
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re.max(0.0)).collect()
    }

    /// `P(qubit k = 0)` before readout.
    pub fn marginal_zero(&self, qubit: usize) -> f64 {
        let bit = 1usize << qubit;
        (0..self.dim)
            .filter(|i| i & bit == 0)
            .map(|i| self.get(i, i).re)
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    pub fn z_expectation(&self, qubit: usize) -> f64 {
        2.0 * self.marginal_zero(qubit) - 1.0
    }

    /// `ρ → U ρ U†` with `U` acting on `target` (optionally controlled).
    pub fn apply_unitary(&mut self, m: &Mat2, target: usize, control: Option<usize>) {
        self.apply_left(m, target, control);
        let conj = [
            [m[0][0].conj(), m[0][1].conj()],
            [m[1][0].conj(), m[1][1].conj()],
        ];
        self.apply_right(&conj, target, control);
    }

    /// `ρ → U† ρ U`.
    pub fn apply_unitary_dagger(&mut self, m: &Mat2, target: usize, control: Option<usize>) {
        self.apply_unitary(&dagger(m), target, control);
    }

    // rows: ρ ← (U ⊗ I) ρ
    fn apply_left(&mut self, m: &Mat2, target: usize, control: Option<usize>) {
        let tbit = 1usize << target;
        let cmask = control.map_or(0, |c| 1usize << c);
        let d = self.dim;
        for i in 0..d {
            if i & tbit != 0 || i & cmask != cmask {
                continue;
            }
            let (r0, r1) = (i * d, (i | tbit) * d);
            for j in 0..d {
                let a0 = self.entries[r0 + j];
                let a1 = self.entries[r1 + j];
                self.entries[r0 + j] = m[0][0] * a0 + m[0][1] * a1;
                self.entries[r1 + j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    // columns: (ρ U†)_ij = Σ_k ρ_ik conj(U_jk), i.e. apply conj(U) along the column index
    fn apply_right(&mut self, conj: &Mat2, target: usize, control: Option<usize>) {
        let tbit = 1usize << target;
        let cmask = control.map_or(0, |c| 1usize << c);
        let d = self.dim;
        for j in 0..d {
            if j & tbit != 0 || j & cmask != cmask {
                continue;
            }
            let j1 = j | tbit;
            for i in 0..d {
                let a0 = self.entries[i * d + j];
                let a1 = self.entries[i * d + j1];
                self.entries[i * d + j] = conj[0][0] * a0 + conj[0][1] * a1;
                self.entries[i * d + j1] = conj[1][0] * a0 + conj[1][1] * a1;
            }
        }
    }

    /// Replaces qubit `q` by the maximally mixed state with probability `p`:
    /// `ρ → (1−p)ρ + p·(I/2 ⊗ Tr_q ρ)`.
    pub fn depolarize_1q(&mut self, p: f64, q: usize) {
        if p == 0.0 {
            return;
        }
        let bit = 1usize << q;
        let d = self.dim;
        let keep = 1.0 - p;
        for i in (0..d).filter(|i| i & bit == 0) {
            for j in (0..d).filter(|j| j & bit == 0) {
                let a = self.entries[i * d + j];
                let b = self.entries[(i | bit) * d + (j | bit)];
                let mixed = (a + b) * (0.5 * p);
                self.entries[i * d + j] = a * keep + mixed;
                self.entries[(i | bit) * d + (j | bit)] = b * keep + mixed;
                self.entries[i * d + (j | bit)] *= keep;
                self.entries[(i | bit) * d + j] *= keep;
            }
        }
    }

    /// Two-qubit replacement channel: `ρ → (1−p)ρ + p·(I/4 ⊗ Tr_ab ρ)`.
    pub fn depolarize_2q(&mut self, p: f64, a: usize, b: usize) {
        if p == 0.0 {
            return;
        }
        let (ba, bb) = (1usize << a, 1usize << b);
        let mask = ba | bb;
        let subs = [0, ba, bb, ba | bb];
        let d = self.dim;
        let keep = 1.0 - p;
        for i in (0..d).filter(|i| i & mask == 0) {
            for j in (0..d).filter(|j| j & mask == 0) {
                let tr: C64 = subs
                    .iter()
                    .map(|s| self.entries[(i | s) * d + (j | s)])
                    .sum();
                for s in subs {
                    for t in subs {
                        let e = &mut self.entries[(i | s) * d + (j | t)];
                        *e *= keep;
                        if s == t {
                            *e += tr * (0.25 * p);
                        }
                    }
                }
            }
        }
    }

    /// `ρ → (1−p)ρ + p·XρX` on qubit `q`.
    pub fn bit_flip(&mut self, p: f64, q: usize) {
        if p == 0.0 {
            return;
        }
        let bit = 1usize << q;
        let d = self.dim;
        let keep = 1.0 - p;
        for i in (0..d).filter(|i| i & bit == 0) {
            for j in 0..d {
                let (x, y) = (i * d + j, (i | bit) * d + (j ^ bit));
                let (u, v) = (self.entries[x], self.entries[y]);
                self.entries[x] = u * keep + v * p;
                self.entries[y] = v * keep + u * p;
            }
        }
    }
}
