//! Kernel functions for the authentication models.

use serde::{Deserialize, Serialize};

use super::SvmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    QuadraticPoly,
    GaussianRbf,
}

/// Kernel specification: polynomial `(1 + gamma * <x, y>)^degree` or
/// Gaussian `exp(-gamma * ||x - y||^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub gamma: f64,
    /// Polynomial degree; ignored by the Gaussian kernel.
    pub degree: u32,
}

impl KernelSpec {
    /// The binary model's kernel: second-order polynomial with gamma = 1.
    pub fn quadratic() -> KernelSpec {
        KernelSpec {
            kind: KernelKind::QuadraticPoly,
            gamma: 1.0,
            degree: 2,
        }
    }

    /// The one-class model's kernel: Gaussian RBF with gamma = 1.
    pub fn gaussian() -> KernelSpec {
        KernelSpec {
            kind: KernelKind::GaussianRbf,
            gamma: 1.0,
            degree: 0,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> KernelSpec {
        self.gamma = gamma;
        self
    }

    /// Set the polynomial degree; no-op for the Gaussian kernel.
    pub fn with_degree(mut self, degree: u32) -> KernelSpec {
        if self.kind == KernelKind::QuadraticPoly {
            self.degree = degree;
        }
        self
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        if !self.gamma.is_finite() || self.gamma <= 0.0 {
            return Err(SvmError::InvalidConfig(format!(
                "kernel gamma must be positive, got {}",
                self.gamma
            )));
        }
        if self.kind == KernelKind::QuadraticPoly && self.degree == 0 {
            return Err(SvmError::InvalidConfig(
                "polynomial kernel needs degree >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Evaluate the kernel on two vectors of equal dimension.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, SvmError> {
        if x.len() != y.len() {
            return Err(SvmError::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        Ok(self.eval_unchecked(x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            KernelKind::QuadraticPoly => {
                let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                (1.0 + self.gamma * dot).powi(self.degree as i32)
            }
            KernelKind::GaussianRbf => {
                let dist2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-self.gamma * dist2).exp()
            }
        }
    }

    /// Full Gram matrix of a point set.
    pub(crate) fn gram(&self, points: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = points.len();
        let mut k = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = self.eval_unchecked(&points[i], &points[j]);
                k[i][j] = v;
                k[j][i] = v;
            }
        }
        k
    }
}
