//! Nodal values on the uniform grid `x_k = k/N`.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("a grid function needs at least 2 cells, got {0}")]
    TooFewCells(usize),
    #[error("non-finite value {value} at node {node}")]
    NonFinite { node: usize, value: f64 },
    #[error("grid functions have different resolutions ({0} vs {1} cells)")]
    Mismatch(usize, usize),
}

/// Values of a field at the `N + 1` nodes of a uniform grid on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() < 3 {
            return Err(GridError::TooFewCells(values.len().saturating_sub(1)));
        }
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(GridError::NonFinite { node, value });
        }
        Ok(Self { values })
    }

    pub fn zeros(n_cells: usize) -> Self {
        assert!(n_cells >= 2, "a grid function needs at least 2 cells");
        Self {
            values: vec![0.0; n_cells + 1],
        }
    }

    pub fn from_fn(n_cells: usize, mut f: impl FnMut(f64) -> f64) -> Result<Self, GridError> {
        let values = (0..=n_cells).map(|k| f(node(n_cells, k))).collect();
        Self::new(values)
    }

    pub fn n_cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n_cells() as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        node(self.n_cells(), k)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|k| self.node(k))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<(), GridError> {
        if self.n_cells() == other.n_cells() {
            Ok(())
        } else {
            Err(GridError::Mismatch(self.n_cells(), other.n_cells()))
        }
    }

    /// `self - other`, node by node.
    pub fn difference(&self, other: &GridFunction) -> Result<GridFunction, GridError> {
        self.check_same_grid(other)?;
        Ok(GridFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// `alpha * self + other`.
    pub fn axpy(&self, alpha: f64, other: &GridFunction) -> Result<GridFunction, GridError> {
        self.check_same_grid(other)?;
        Ok(GridFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| alpha * a + b)
                .collect(),
        })
    }

    pub fn max_abs_difference(&self, other: &GridFunction) -> Result<f64, GridError> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

pub(crate) fn node(n_cells: usize, k: usize) -> f64 {
    k as f64 / n_cells as f64
}
