//! Dimensionality reduction to three coordinates per prompt.
//!
//! The reference reducer is a principal-component projection. Coordinates
//! produced elsewhere can be plugged in through [`Precomputed`].

use nalgebra::{DMatrix, SymmetricEigen};

use super::PipelineError;

#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub coords: Vec<[f64; 3]>,
    /// Column means removed before projection (empty for precomputed input).
    pub mean: Vec<f64>,
    /// Unit-length principal axes, one row per output coordinate.
    pub components: Vec<Vec<f64>>,
    /// Eigenvalues of the centered scatter matrix, descending.
    pub eigenvalues: Vec<f64>,
    pub warnings: Vec<String>,
}

pub trait Reducer {
    fn reduce(&self, vectors: &[Vec<f64>]) -> Result<Reduction, PipelineError>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct PcaReducer;

/// Hands back coordinates computed by an external tool, checking only that
/// there is one triple per input vector.
#[derive(Debug, Clone)]
pub struct Precomputed(pub Vec<[f64; 3]>);

impl Reducer for Precomputed {
    fn reduce(&self, vectors: &[Vec<f64>]) -> Result<Reduction, PipelineError> {
        if !vectors.is_empty() && vectors.len() != self.0.len() {
            return Err(PipelineError::InvalidInput(format!(
                "{} precomputed coordinates for {} vectors",
                self.0.len(),
                vectors.len()
            )));
        }
        if self.0.iter().flatten().any(|v| !v.is_finite()) {
            return Err(PipelineError::InvalidInput("non-finite precomputed coordinate".into()));
        }
        Ok(Reduction {
            coords: self.0.clone(),
            mean: Vec::new(),
            components: Vec::new(),
            eigenvalues: Vec::new(),
            warnings: Vec::new(),
        })
    }
}

pub fn reduce_embeddings(vectors: &[Vec<f64>]) -> Result<Reduction, PipelineError> {
    PcaReducer.reduce(vectors)
}

impl Reducer for PcaReducer {
    fn reduce(&self, vectors: &[Vec<f64>]) -> Result<Reduction, PipelineError> {
        let n = vectors.len();
        let d = vectors.first().map_or(0, Vec::len);
        if n < 3 || d < 3 {
            return Err(PipelineError::InvalidInput(format!("need at least 3x3 data, got {n}x{d}")));
        }
        if vectors.iter().any(|v| v.len() != d) {
            return Err(PipelineError::InvalidInput("embedding rows differ in length".into()));
        }
        if vectors.iter().flatten().any(|v| !v.is_finite()) {
            return Err(PipelineError::InvalidInput("non-finite embedding entry".into()));
        }

        let mut mean = vec![0.0; d];
        for v in vectors {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let centered = DMatrix::from_fn(n, d, |i, j| vectors[i][j] - mean[j]);
        let scatter = centered.transpose() * &centered;
        let eig = SymmetricEigen::new(scatter);

        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let tol = eigenvalues[0] * 1e-10 * d as f64;

        let mut warnings = Vec::new();
        let mut components = Vec::with_capacity(3);
        for (rank, &col) in order.iter().take(3).enumerate() {
            if eigenvalues[rank] <= tol {
                warnings.push(format!("data rank below 3: component {} padded with zeros", rank + 1));
                components.push(vec![0.0; d]);
                continue;
            }
            let mut axis: Vec<f64> = eig.eigenvectors.column(col).iter().copied().collect();
            // sign convention: the largest-magnitude loading is positive
            let pivot = axis
                .iter()
                .enumerate()
                .fold(0, |best, (i, v)| if v.abs() > axis[best].abs() { i } else { best });
            if axis[pivot] < 0.0 {
                axis.iter_mut().for_each(|v| *v = -*v);
            }
            components.push(axis);
        }

        let coords = (0..n)
            .map(|i| {
                let mut c = [0.0; 3];
                for (k, axis) in components.iter().enumerate() {
                    c[k] = (0..d).map(|j| centered[(i, j)] * axis[j]).sum();
                }
                c
            })
            .collect();
        Ok(Reduction { coords, mean, components, eigenvalues, warnings })
    }
}
