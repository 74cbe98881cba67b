//! Concrete smooth function oracles: dense quadratics, affine maps and closures.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::error::{Error, Result};

/// A deterministic smooth function of a dense vector.
///
/// Implementations must be pure: the same `x` always gives bit-identical
/// values and gradients.
pub trait SmoothFunction: Send + Sync + fmt::Debug {
    fn dimension(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Closed form of the function when it belongs to one of the serializable
    /// families; `None` for opaque oracles.
    fn closed_form(&self) -> Option<ClosedForm> {
        None
    }
}

/// Serializable closed forms understood by the problem-spec schema.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedForm {
    /// `½ xᵀ M x + vᵀ x + c`
    Quadratic {
        matrix: DMatrix<f64>,
        vector: DVector<f64>,
        constant: f64,
    },
    /// `aᵀ x − b`
    Affine { a: DVector<f64>, b: f64 },
}

/// `½ xᵀ M x + vᵀ x + c`.
///
/// The gradient is computed as `M x + v`, which is only correct for a
/// symmetric `M`. Non-symmetric matrices are kept as given so that a
/// gradient audit can flag them.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    matrix: DMatrix<f64>,
    vector: DVector<f64>,
    constant: f64,
}

impl Quadratic {
    pub fn new(matrix: DMatrix<f64>, vector: DVector<f64>, constant: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::invalid(
                "matrix",
                format!(
                    "expected square matrix, got {}x{}",
                    matrix.nrows(),
                    matrix.ncols()
                ),
            ));
        }
        if matrix.nrows() != vector.len() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: vector.len(),
            });
        }
        Ok(Self {
            matrix,
            vector,
            constant,
        })
    }

    /// `½ (x − c)ᵀ Q (x − c) + bᵀ x + d`, expanded into standard form.
    pub fn centered(
        q: DMatrix<f64>,
        center: &DVector<f64>,
        b: &DVector<f64>,
        d: f64,
    ) -> Result<Self> {
        let qc = &q * center;
        let vector = b - &qc;
        let constant = 0.5 * center.dot(&qc) + d;
        Self::new(q, vector, constant)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.vector
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Largest eigenvalue of the symmetric part of `M`.
    pub fn max_eigenvalue(&self) -> f64 {
        let sym = (&self.matrix + self.matrix.transpose()) * 0.5;
        sym.symmetric_eigenvalues().max()
    }

    /// Smallest eigenvalue of the symmetric part of `M`.
    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.matrix + self.matrix.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }

    /// Global minimum value, available when `M` is positive definite.
    pub fn minimum(&self) -> Option<(DVector<f64>, f64)> {
        let chol = self.matrix.clone().cholesky()?;
        let minimizer = -chol.solve(&self.vector);
        let value = 0.5 * self.vector.dot(&minimizer) + self.constant;
        Some((minimizer, value))
    }
}

impl SmoothFunction for Quadratic {
    fn dimension(&self) -> usize {
        self.vector.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let x = DVectorView::from_slice(x, x.len());
        let mx = &self.matrix * x;
        0.5 * x.dot(&mx) + self.vector.dot(&x) + self.constant
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let x = DVectorView::from_slice(x, x.len());
        let g = &self.matrix * x + &self.vector;
        g.as_slice().to_vec()
    }

    fn closed_form(&self) -> Option<ClosedForm> {
        Some(ClosedForm::Quadratic {
            matrix: self.matrix.clone(),
            vector: self.vector.clone(),
            constant: self.constant,
        })
    }
}

/// `aᵀ x − b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    a: DVector<f64>,
    b: f64,
}

impl Affine {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        Self {
            a: DVector::from_vec(a),
            b,
        }
    }

    pub fn normal(&self) -> &DVector<f64> {
        &self.a
    }

    pub fn offset(&self) -> f64 {
        self.b
    }
}

impl SmoothFunction for Affine {
    fn dimension(&self) -> usize {
        self.a.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.a
            .as_slice()
            .iter()
            .zip(x)
            .map(|(a, x)| a * x)
            .sum::<f64>()
            - self.b
    }

    fn gradient(&self, _x: &[f64]) -> Vec<f64> {
        self.a.as_slice().to_vec()
    }

    fn closed_form(&self) -> Option<ClosedForm> {
        Some(ClosedForm::Affine {
            a: self.a.clone(),
            b: self.b,
        })
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Function oracle backed by a pair of closures.
#[derive(Clone)]
pub struct FnFunction {
    dimension: usize,
    value: Arc<ValueFn>,
    gradient: Arc<GradFn>,
}

impl FnFunction {
    pub fn new(
        dimension: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dimension,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }
}

impl fmt::Debug for FnFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnFunction")
            .field("dimension", &self.dimension)
            .finish_non_exhaustive()
    }
}

impl SmoothFunction for FnFunction {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }
}
