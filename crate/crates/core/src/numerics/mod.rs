//! Shared numerical kernels: finite differences, singular values, numerical rank,
//! spline surrogates and deterministic sampling.

pub mod fd;
pub mod matrix;
pub mod quadrature;
pub mod sampling;
pub mod spline;

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

pub use fd::{fd_jacobian, fd_jacobian_richardson};
pub use matrix::{numerical_rank, relative_singular_value, singular_values, Matrix};
pub use quadrature::{gauss_legendre, BumpQuadrature};
pub use sampling::{sup_distance, Halton, PointSampler};
pub use spline::{smooth_surrogate, MollifierRule, SmoothSurrogate, SplineAxis, SurrogateHeader};

/// A point with its value, Jacobian and singular values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct JetSample<T> {
    pub x: Vec<T>,
    pub value: Vec<T>,
    pub jacobian: Matrix<T>,
    pub singular_values: Vec<T>,
    pub near_singular_set: bool,
    pub truncated: bool,
}

impl<T: Real> JetSample<T> {
    pub fn new(x: Vec<T>, value: Vec<T>, jacobian: Matrix<T>) -> Self {
        let singular_values = singular_values(&jacobian);
        Self {
            x,
            value,
            jacobian,
            singular_values,
            near_singular_set: false,
            truncated: false,
        }
    }

    pub fn rank(&self, rel_tol: T) -> usize {
        numerical_rank(&self.singular_values, rel_tol)
    }
}
