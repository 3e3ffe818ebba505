use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BarlowConfig {
    /// Weight of the redundancy-reduction (off-diagonal) term.
    pub lambda: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    /// Added to each column's batch variance before taking the square root.
    pub std_eps: f64,
}

impl Default for BarlowConfig {
    fn default() -> Self {
        Self {
            lambda: 5e-3,
            batch_size: 256,
            lr: 5e-3,
            weight_decay: 1e-4,
            epochs: 100,
            std_eps: 1e-9,
        }
    }
}

impl BarlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Argument(format!("barlow lambda {} outside [0, 1]", self.lambda)));
        }
        if self.batch_size < 2 {
            return Err(Error::Argument("barlow batch size must be at least 2".into()));
        }
        if !(self.std_eps > 0.0) {
            return Err(Error::Argument("std_eps must be positive".into()));
        }
        Ok(())
    }
}

/// Batch cross-correlation of two standardized embedding sets, row-major `D×D`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCorrelation {
    pub dim: usize,
    pub c: Vec<f64>,
}

impl CrossCorrelation {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c[i * self.dim + j]
    }
}

#[derive(Debug, Clone)]
pub struct BarlowOutput {
    pub loss: f64,
    pub invariance: f64,
    pub redundancy: f64,
    pub grad_z1: Vec<Vec<f64>>,
    pub grad_z2: Vec<Vec<f64>>,
    pub correlation: CrossCorrelation,
    /// Columns whose batch variance fell below `std_eps` (as `(view, column)`).
    pub degenerate_columns: Vec<(usize, usize)>,
}

struct Standardized {
    zhat: Vec<Vec<f64>>,
    sigma: Vec<f64>,
    degenerate: Vec<usize>,
}

fn check_batch(z: &[Vec<f64>]) -> Result<usize> {
    if z.len() < 2 {
        return Err(Error::Argument(format!("batch of {} cannot be standardized", z.len())));
    }
    let d = z[0].len();
    if d == 0 {
        return Err(Error::Argument("empty embedding".into()));
    }
    if let Some(row) = z.iter().find(|r| r.len() != d) {
        return Err(Error::Dimension { expected: d, got: row.len() });
    }
    Ok(d)
}

fn standardize_columns(z: &[Vec<f64>], std_eps: f64) -> Standardized {
    let (n, d) = (z.len(), z[0].len());
    let mut zhat = vec![vec![0.0; d]; n];
    let mut sigma = vec![0.0; d];
    let mut degenerate = Vec::new();
    for j in 0..d {
        let mean = z.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let var = z.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n as f64;
        if var < std_eps {
            degenerate.push(j);
        }
        let s = (var + std_eps).sqrt();
        sigma[j] = s;
        for (out, r) in zhat.iter_mut().zip(z) {
            out[j] = (r[j] - mean) / s;
        }
    }
    Standardized { zhat, sigma, degenerate }
}

/// Column-wise batch standardization `(z − mean)/sqrt(var + std_eps)`.
pub fn standardize(z: &[Vec<f64>], std_eps: f64) -> Result<Vec<Vec<f64>>> {
    check_batch(z)?;
    Ok(standardize_columns(z, std_eps).zhat)
}

// Pulls a gradient wrt standardized values back through the standardization.
fn backprop_standardize(g: &[Vec<f64>], st: &Standardized) -> Vec<Vec<f64>> {
    let (n, d) = (g.len(), g[0].len());
    let mut out = vec![vec![0.0; d]; n];
    for j in 0..d {
        let g_mean = g.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let gz_mean = g.iter().zip(&st.zhat).map(|(r, z)| r[j] * z[j]).sum::<f64>() / n as f64;
        for k in 0..n {
            out[k][j] = (g[k][j] - g_mean - st.zhat[k][j] * gz_mean) / st.sigma[j];
        }
    }
    out
}

/// `Σ_i (1 − C_ii)² + λ Σ_{i≠j} C_ij²` with gradients wrt both raw embedding batches.
pub fn barlow_loss(z1: &[Vec<f64>], z2: &[Vec<f64>], lambda: f64, std_eps: f64) -> Result<BarlowOutput> {
    let d = check_batch(z1)?;
    if check_batch(z2)? != d {
        return Err(Error::Dimension { expected: d, got: z2[0].len() });
    }
    if z1.len() != z2.len() {
        return Err(Error::Dimension { expected: z1.len(), got: z2.len() });
    }
    let n = z1.len();
    let s1 = standardize_columns(z1, std_eps);
    let s2 = standardize_columns(z2, std_eps);

    let mut c = vec![0.0; d * d];
    for (a, b) in s1.zhat.iter().zip(&s2.zhat) {
        for i in 0..d {
            for j in 0..d {
                c[i * d + j] += a[i] * b[j];
            }
        }
    }
    c.iter_mut().for_each(|v| *v /= n as f64);

    let (mut invariance, mut redundancy) = (0.0, 0.0);
    // dL/dC
    let mut gc = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let cij = c[i * d + j];
            if i == j {
                invariance += (1.0 - cij).powi(2);
                gc[i * d + j] = -2.0 * (1.0 - cij);
            } else {
                redundancy += cij * cij;
                gc[i * d + j] = 2.0 * lambda * cij;
            }
        }
    }

    let mut g1 = vec![vec![0.0; d]; n];
    let mut g2 = vec![vec![0.0; d]; n];
    for k in 0..n {
        for i in 0..d {
            for j in 0..d {
                let w = gc[i * d + j] / n as f64;
                g1[k][i] += w * s2.zhat[k][j];
                g2[k][j] += w * s1.zhat[k][i];
            }
        }
    }

    let mut degenerate: Vec<(usize, usize)> = s1.degenerate.iter().map(|&j| (0, j)).collect();
    degenerate.extend(s2.degenerate.iter().map(|&j| (1, j)));
    Ok(BarlowOutput {
        loss: invariance + lambda * redundancy,
        invariance,
        redundancy,
        grad_z1: backprop_standardize(&g1, &s1),
        grad_z2: backprop_standardize(&g2, &s2),
        correlation: CrossCorrelation { dim: d, c },
        degenerate_columns: degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch() -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let z1 = vec![vec![0.3, -0.2], vec![0.9, 0.4], vec![-0.5, 0.1]];
        let z2 = vec![vec![0.1, 0.5], vec![0.7, -0.3], vec![-0.2, 0.2]];
        (z1, z2)
    }

    #[test]
    fn orthogonal_columns_give_zero_loss() {
        // columns are zero-mean, equal-variance and mutually orthogonal
        let z = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]];
        let out = barlow_loss(&z, &z, 5e-3, 1e-15).unwrap();
        assert!(out.loss.abs() < 1e-12);
        assert!(out.grad_z1.iter().flatten().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn self_pairs_have_no_invariance_term() {
        let (z, _) = batch();
        let out = barlow_loss(&z, &z, 0.3, 1e-15).unwrap();
        assert!(out.invariance < 1e-12);
        assert!((out.loss - 0.3 * out.redundancy).abs() < 1e-12);
        for i in 0..2 {
            assert!((out.correlation.get(i, i) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (z1, z2) = batch();
        let (lambda, eps) = (0.4, 1e-9);
        let out = barlow_loss(&z1, &z2, lambda, eps).unwrap();
        let h = 1e-6;
        for view in 0..2 {
            for k in 0..3 {
                for j in 0..2 {
                    let bump = |delta: f64| {
                        let (mut a, mut b) = (z1.clone(), z2.clone());
                        if view == 0 {
                            a[k][j] += delta;
                        } else {
                            b[k][j] += delta;
                        }
                        barlow_loss(&a, &b, lambda, eps).unwrap().loss
                    };
                    let fd = (bump(h) - bump(-h)) / (2.0 * h);
                    let an = if view == 0 { out.grad_z1[k][j] } else { out.grad_z2[k][j] };
                    assert!((fd - an).abs() < 1e-5, "view {view} [{k}][{j}]: {fd} vs {an}");
                }
            }
        }
    }

    #[test]
    fn standardized_columns_are_unit() {
        let z: Vec<Vec<f64>> = (0..50).map(|i| vec![(i as f64).sin(), (i as f64 * 0.3).cos() * 0.01]).collect();
        let s = standardize(&z, 1e-12).unwrap();
        for j in 0..2 {
            let mean = s.iter().map(|r| r[j]).sum::<f64>() / 50.0;
            let std = (s.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / 50.0).sqrt();
            assert!(mean.abs() < 1e-9);
            assert!((std - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_column_is_flagged() {
        let z = vec![vec![0.5, 0.1], vec![0.5, 0.2], vec![0.5, 0.4]];
        let out = barlow_loss(&z, &z, 0.1, 1e-9).unwrap();
        assert_eq!(out.degenerate_columns, vec![(0, 0), (1, 0)]);
        assert!(out.loss.is_finite());
        assert!(barlow_loss(&z[..1], &z[..1], 0.1, 1e-9).is_err());
    }
}
