//! Smoothing a map that factors through a coordinate projection: `f = Ψ⁻¹∘π₁∘Φ` on a
//! planar box, approximated by `f_ε = (Ψ⁻¹)_ε∘π₁∘Φ_ε` with mollified factors.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{NegativeControl, ReportMetadata};
use crate::error::{Error, Result};
use crate::numerics::{relative_singular_value, singular_values, BumpQuadrature, Matrix, PointSampler};
use crate::scalar::{dist, Real};

/// `Φ = S₂∘S₁` with `S₁(x, y) = (x + c·y|y|, y)`, `S₂(u, v) = (u, v + d·u|u|)` and
/// `Ψ⁻¹(p, q) = (p, q + e·p|p|)`. All three are `C^{1,1}` diffeomorphisms of the plane
/// with closed-form inverses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct SyntheticFactoredMap<T> {
    pub shear: T,
    pub bend: T,
    pub lift: T,
    pub lo: [T; 2],
    pub hi: [T; 2],
}

fn sq<T: Real>(t: T) -> T {
    t * t.abs()
}

impl<T: Real> Default for SyntheticFactoredMap<T> {
    fn default() -> Self {
        Self {
            shear: T::lit(0.5),
            bend: T::lit(0.4),
            lift: T::lit(0.7),
            lo: [T::lit(-1.0); 2],
            hi: [T::lit(1.0); 2],
        }
    }
}

impl<T: Real> SyntheticFactoredMap<T> {
    /// Rank of the factorization: `f` has rank at most one.
    pub const RANK: usize = 1;

    pub fn phi(&self, p: &[T]) -> Vec<T> {
        let u = p[0] + self.shear * sq(p[1]);
        vec![u, p[1] + self.bend * sq(u)]
    }

    pub fn phi_inverse(&self, p: &[T]) -> Vec<T> {
        let v = p[1] - self.bend * sq(p[0]);
        vec![p[0] - self.shear * sq(v), v]
    }

    pub fn phi_jacobian(&self, p: &[T]) -> Matrix<T> {
        let two = T::lit(2.0);
        let u = p[0] + self.shear * sq(p[1]);
        let a = two * self.shear * p[1].abs();
        let b = two * self.bend * u.abs();
        // [[1, 0], [b, 1]] · [[1, a], [0, 1]]
        Matrix::from_row_major(2, 2, vec![T::one(), a, b, b * a + T::one()])
    }

    pub fn psi_inv(&self, p: &[T]) -> Vec<T> {
        vec![p[0], p[1] + self.lift * sq(p[0])]
    }

    pub fn psi(&self, p: &[T]) -> Vec<T> {
        vec![p[0], p[1] - self.lift * sq(p[0])]
    }

    pub fn psi_inv_jacobian(&self, p: &[T]) -> Matrix<T> {
        let b = T::lit(2.0) * self.lift * p[0].abs();
        Matrix::from_row_major(2, 2, vec![T::one(), T::zero(), b, T::one()])
    }

    /// `f = Ψ⁻¹∘π₁∘Φ`.
    pub fn eval(&self, p: &[T]) -> Vec<T> {
        let u = self.phi(p);
        self.psi_inv(&[u[0], T::zero()])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo[0] < self.hi[0] && self.lo[1] < self.hi[1]) {
            return Err(Error::InvalidParameter("empty box".into()));
        }
        Ok(())
    }
}

/// The mollified composition at one radius.
pub struct MollifiedFactors<'a, T> {
    map: &'a SyntheticFactoredMap<T>,
    rule: &'a BumpQuadrature<T>,
    epsilon: T,
}

impl<'a, T: Real> MollifiedFactors<'a, T> {
    pub fn new(map: &'a SyntheticFactoredMap<T>, rule: &'a BumpQuadrature<T>, epsilon: T) -> Self {
        Self { map, rule, epsilon }
    }

    pub fn phi(&self, p: &[T]) -> Vec<T> {
        self.rule.apply(|q| self.map.phi(q), p, self.epsilon)
    }

    /// Exact Jacobian of the mollified `Φ` (the mollified Jacobian of `Φ`).
    pub fn phi_jacobian(&self, p: &[T]) -> Matrix<T> {
        let v = self.rule.apply(|q| self.map.phi_jacobian(q).as_slice().to_vec(), p, self.epsilon);
        Matrix::from_row_major(2, 2, v)
    }

    pub fn psi_inv(&self, p: &[T]) -> Vec<T> {
        self.rule.apply(|q| self.map.psi_inv(q), p, self.epsilon)
    }

    pub fn psi_inv_jacobian(&self, p: &[T]) -> Matrix<T> {
        let v = self.rule.apply(|q| self.map.psi_inv_jacobian(q).as_slice().to_vec(), p, self.epsilon);
        Matrix::from_row_major(2, 2, v)
    }

    /// `f_ε(p)` and `Df_ε(p) = D(Ψ⁻¹)_ε · P₁ · DΦ_ε`.
    pub fn eval_with_jacobian(&self, p: &[T], project: bool) -> (Vec<T>, Matrix<T>) {
        let u = self.phi(p);
        let q = if project { vec![u[0], T::zero()] } else { u };
        let mut proj = Matrix::identity(2);
        if project {
            proj = Matrix::from_row_major(2, 2, vec![T::one(), T::zero(), T::zero(), T::zero()]);
        }
        let jac = self.psi_inv_jacobian(&q).mul(&proj).mul(&self.phi_jacobian(p));
        (self.psi_inv(&q), jac)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxLevel {
    pub epsilon: f64,
    pub sup_error: f64,
    /// Largest `σ₂/σ₁` of `Df_ε` over the samples.
    pub max_rank_ratio: f64,
    pub min_det_dphi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxReport {
    pub map: SyntheticFactoredMap<f64>,
    pub epsilons: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    pub rank_tol: f64,
    pub levels: Vec<ApproxLevel>,
    pub error_strictly_decreasing: bool,
    pub rank_certified: bool,
    pub det_positive: bool,
    pub negative_control: NegativeControl,
    pub pass: bool,
    pub metadata: ReportMetadata,
}

/// Sup error, rank ratio and `det DΦ_ε` for each mollification radius.
pub fn experiment_local_approx<T: Real>(
    map: &SyntheticFactoredMap<T>,
    epsilons: &[T],
    n_samples: usize,
    seed: u64,
) -> Result<ApproxReport> {
    let start = Instant::now();
    map.validate()?;
    if epsilons.is_empty() {
        return Err(Error::InvalidParameter("empty epsilon list".into()));
    }
    let rule = BumpQuadrature::new(2, 16);
    let mut sampler = PointSampler::new(seed);
    let xs: Vec<Vec<T>> = (0..n_samples).map(|_| sampler.in_box(&map.lo, &map.hi)).collect();
    let rank_tol = 1e-8;
    let levels: Vec<ApproxLevel> = epsilons
        .iter()
        .map(|&eps| {
            let moll = MollifiedFactors::new(map, &rule, eps);
            let rows: Vec<(f64, f64, f64)> = xs
                .par_iter()
                .map(|x| {
                    let (v, jac) = moll.eval_with_jacobian(x, true);
                    let err = dist(&v, &map.eval(x)).to_f64_lossy();
                    let ratio = relative_singular_value(&singular_values(&jac), 1).to_f64_lossy();
                    let det = moll.phi_jacobian(x).determinant().to_f64_lossy();
                    (err, ratio, det)
                })
                .collect();
            ApproxLevel {
                epsilon: eps.to_f64_lossy(),
                sup_error: rows.iter().map(|r| r.0).fold(0.0, f64::max),
                max_rank_ratio: rows.iter().map(|r| r.1).fold(0.0, f64::max),
                min_det_dphi: rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min),
            }
        })
        .collect();
    let error_strictly_decreasing = levels.windows(2).all(|w| w[1].sup_error < w[0].sup_error);
    let rank_certified = levels.iter().all(|l| l.max_rank_ratio < rank_tol);
    let det_positive = levels.iter().all(|l| l.min_det_dphi > 0.0);

    let eps = *epsilons.last().expect("non-empty");
    let moll = MollifiedFactors::new(map, &rule, eps);
    let stat = xs
        .par_iter()
        .map(|x| relative_singular_value(&singular_values(&moll.eval_with_jacobian(x, false).1), 1).to_f64_lossy())
        .reduce(|| f64::INFINITY, f64::min);
    let negative_control = NegativeControl {
        description: "composition without the coordinate projection".into(),
        statistic: stat,
        threshold: rank_tol,
        failed_as_expected: stat > rank_tol,
    };
    let pass = error_strictly_decreasing && rank_certified && det_positive && negative_control.failed_as_expected;
    Ok(ApproxReport {
        map: SyntheticFactoredMap {
            shear: map.shear.to_f64_lossy(),
            bend: map.bend.to_f64_lossy(),
            lift: map.lift.to_f64_lossy(),
            lo: map.lo.map(|v| v.to_f64_lossy()),
            hi: map.hi.map(|v| v.to_f64_lossy()),
        },
        epsilons: epsilons.iter().map(|e| e.to_f64_lossy()).collect(),
        n_samples,
        seed,
        rank_tol,
        levels,
        error_strictly_decreasing,
        rank_certified,
        det_positive,
        negative_control,
        pass,
        metadata: ReportMetadata::since(start),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverses_are_exact() {
        let m = SyntheticFactoredMap::<f64>::default();
        for p in [[0.3, -0.7], [-0.9, 0.2], [0.0, 0.0]] {
            assert!(dist(&m.phi_inverse(&m.phi(&p)), &p) < 1e-14);
            assert!(dist(&m.psi(&m.psi_inv(&p)), &p) < 1e-14);
        }
    }

    #[test]
    fn analytic_jacobian_matches_differences() {
        let m = SyntheticFactoredMap::<f64>::default();
        let p = [0.31, -0.42];
        let j = crate::numerics::fd_jacobian(|q: &[f64]| Ok(m.phi(q)), &p, 1e-6).unwrap();
        assert!(j.max_abs_diff(&m.phi_jacobian(&p)) < 1e-8);
    }
}
