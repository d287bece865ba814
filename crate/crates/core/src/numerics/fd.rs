//! Central finite-difference Jacobians.

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::scalar::Real;

/// Central-difference Jacobian of `map` at `x`: rows are outputs, columns inputs.
///
/// The map is evaluated on the step cross `x ± step·e_j`; any failed evaluation is
/// reported as [`Error::EvaluationFailed`].
pub fn fd_jacobian<T, F>(mut map: F, x: &[T], step: T) -> Result<Matrix<T>>
where
    T: Real,
    F: FnMut(&[T]) -> Result<Vec<T>>,
{
    if !(step > T::zero()) {
        return Err(Error::InvalidParameter("finite-difference step must be positive".into()));
    }
    let dim = x.len();
    let mut probe = x.to_vec();
    let mut jac: Option<Matrix<T>> = None;
    let two_h = step + step;
    for j in 0..dim {
        probe[j] = x[j] + step;
        let plus = map(&probe).map_err(wrap)?;
        probe[j] = x[j] - step;
        let minus = map(&probe).map_err(wrap)?;
        probe[j] = x[j];
        if plus.len() != minus.len() {
            return Err(Error::EvaluationFailed("output dimension changed".into()));
        }
        let jm = jac.get_or_insert_with(|| Matrix::zeros(plus.len(), dim));
        if jm.rows() != plus.len() {
            return Err(Error::EvaluationFailed("output dimension changed".into()));
        }
        for (i, (p, m)) in plus.iter().zip(&minus).enumerate() {
            jm[(i, j)] = (*p - *m) / two_h;
        }
    }
    match jac {
        Some(j) => Ok(j),
        None => {
            let rows = map(x).map_err(wrap)?.len();
            Ok(Matrix::zeros(rows, 0))
        }
    }
}

/// Richardson-extrapolated Jacobian `(4·J(h/2) − J(h)) / 3`, fourth order on smooth maps.
pub fn fd_jacobian_richardson<T, F>(mut map: F, x: &[T], step: T) -> Result<Matrix<T>>
where
    T: Real,
    F: FnMut(&[T]) -> Result<Vec<T>>,
{
    let coarse = fd_jacobian(&mut map, x, step)?;
    let fine = fd_jacobian(&mut map, x, step / T::lit(2.0))?;
    let mut out = fine.scale(T::lit(4.0));
    for i in 0..out.rows() {
        for j in 0..out.cols() {
            out[(i, j)] = (out[(i, j)] - coarse[(i, j)]) / T::lit(3.0);
        }
    }
    Ok(out)
}

fn wrap(e: Error) -> Error {
    match e {
        Error::EvaluationFailed(_) => e,
        other => Error::EvaluationFailed(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_map_is_exact() {
        let a = [[1.0, -2.0, 0.5], [3.0, 0.25, -1.0]];
        let map = |x: &[f64]| -> Result<Vec<f64>> {
            Ok(a.iter()
                .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
                .collect())
        };
        let j = fd_jacobian(map, &[0.3, -0.7, 1.1], 1e-3).unwrap();
        for i in 0..2 {
            for k in 0..3 {
                assert!((j[(i, k)] - a[i][k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn second_order_convergence_on_smooth_map() {
        let map = |x: &[f64]| -> Result<Vec<f64>> { Ok(vec![x[0].sin() * x[1].exp()]) };
        let exact = 0.4f64.cos() * 0.2f64.exp();
        let err = |h: f64| (fd_jacobian(map, &[0.4, 0.2], h).unwrap()[(0, 0)] - exact).abs();
        let ratio = err(1e-2) / err(5e-3);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn failures_propagate() {
        let map = |_: &[f64]| -> Result<Vec<f64>> { Err(Error::ZeroVector) };
        assert!(matches!(
            fd_jacobian(map, &[0.0], 1e-3),
            Err(Error::EvaluationFailed(_))
        ));
    }
}
