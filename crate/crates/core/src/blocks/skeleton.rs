//! Projection of the image cube minus the inscribed balls onto the grid `m`-skeleton.

use serde::{Deserialize, Serialize};

use super::profile::{retract_r, TransitionProfile};
use crate::error::{Error, Result};
use crate::instance::InstanceParams;
use crate::scalar::{dist, max_norm, Real};

/// Which formula produced a skeleton point: the outer cube boundary or a cell boundary,
/// together with the coordinate that attains the maximum norm and its sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "branch", rename_all = "snake_case")]
pub enum SkeletonBranch {
    Outer { axis: usize, sign: i8 },
    Cell { cell: usize, axis: usize, sign: i8 },
}

fn argmax_abs<T: Real>(u: &[T]) -> (usize, i8) {
    let mut best = 0;
    for (j, v) in u.iter().enumerate() {
        if v.abs() > u[best].abs() {
            best = j;
        }
    }
    (best, if u[best] < T::zero() { -1 } else { 1 })
}

/// Linear index (last coordinate fastest) and multi-index of the grid cell containing `z`.
pub fn cell_of<T: Real>(z: &[T], n: usize) -> (usize, Vec<usize>) {
    let half = T::lit(0.5);
    let nn = T::from_count(n);
    let multi: Vec<usize> = z
        .iter()
        .map(|&v| {
            let c = ((v + half) * nn).floor().to_f64_lossy();
            c.max(0.0).min((n - 1) as f64) as usize
        })
        .collect();
    let linear = multi.iter().fold(0usize, |acc, &j| acc * n + j);
    (linear, multi)
}

pub fn cell_center<T: Real>(multi: &[usize], n: usize) -> Vec<T> {
    let half = T::lit(0.5);
    let w = T::one() / T::from_count(n);
    multi
        .iter()
        .map(|&j| -half + (T::from_count(j) + half) * w)
        .collect()
}

/// Central projection of the outer shell onto `∂𝕀` and radial projection of each cell
/// (minus its inscribed ball) onto the cell boundary.
pub fn skeleton_project<T: Real>(z: &[T], params: &InstanceParams<T>) -> Result<(Vec<T>, SkeletonBranch)> {
    let half = T::lit(0.5);
    let zmax = max_norm(z);
    if zmax >= half {
        let (axis, sign) = argmax_abs(z);
        let scale = zmax + zmax;
        let mut out: Vec<T> = z.iter().map(|&v| v / scale).collect();
        out[axis] = if sign < 0 { -half } else { half };
        return Ok((out, SkeletonBranch::Outer { axis, sign }));
    }
    let n = params.n;
    let (cell, multi) = cell_of(z, n);
    let cc: Vec<T> = cell_center(&multi, n);
    let u: Vec<T> = z.iter().zip(&cc).map(|(&a, &b)| a - b).collect();
    let umax = max_norm(&u);
    if umax == T::zero() {
        return Err(Error::CellCenterSingularity { cell });
    }
    let q = params.inscribed_radius();
    if dist(z, &cc) < q * (T::one() - T::lit(1e-9)) {
        return Err(Error::InsideExcludedBall { cell });
    }
    let hw = T::one() / (T::lit(2.0) * T::from_count(n));
    let (axis, sign) = argmax_abs(&u);
    let mut out: Vec<T> = cc.iter().zip(&u).map(|(&c, &v)| c + hw * v / umax).collect();
    out[axis] = if sign < 0 { cc[axis] - hw } else { cc[axis] + hw };
    Ok((out, SkeletonBranch::Cell { cell, axis, sign }))
}

/// Smallest distance from a coordinate of `z` to the grid hyperplanes of spacing
/// `n^{−level}`; zero exactly on the `m`-skeleton of that grid.
pub fn skeleton_distance<T: Real>(z: &[T], n: usize, level: u32) -> T {
    let half = T::lit(0.5);
    let cells = T::from_count(n).powi(level as i32);
    z.iter()
        .map(|&v| {
            let s = (v + half) * cells;
            (s - s.round()).abs() / cells
        })
        .fold(T::infinity(), T::min)
}

/// Cellwise coordinate snapping `c + R(n(z − c))/n`, which maps a neighborhood of every
/// cell boundary onto it and fixes points deep inside the cell.
pub fn snap_to_cell_boundary<T: Real>(z: &[T], n: usize, profile: &TransitionProfile<T>) -> Vec<T> {
    let (_, multi) = cell_of(z, n);
    let cc: Vec<T> = cell_center(&multi, n);
    let nn = T::from_count(n);
    let local: Vec<T> = z.iter().zip(&cc).map(|(&a, &c)| (a - c) * nn).collect();
    retract_r(&local, profile)
        .iter()
        .zip(&cc)
        .map(|(&v, &c)| c + v / nn)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk() -> InstanceParams<f64> {
        InstanceParams::desk_default(7)
    }

    #[test]
    fn facet_points_are_fixed() {
        let p = desk();
        let z = [0.0, 0.1, -0.3, 0.2];
        let (out, _) = skeleton_project(&z, &p).unwrap();
        assert!(dist(&out, &z) < 1e-15);
    }

    #[test]
    fn boundary_points_are_fixed() {
        let p = desk();
        let z = [0.5, 0.1, -0.3, 0.2];
        let (out, b) = skeleton_project(&z, &p).unwrap();
        assert_eq!(out, z.to_vec());
        assert_eq!(b, SkeletonBranch::Outer { axis: 0, sign: 1 });
    }

    #[test]
    fn inscribed_sphere_maps_to_cubified_direction() {
        let p = desk();
        let cc = [0.25, 0.25, -0.25, 0.25];
        let dir = [0.6, 0.0, -0.8, 0.0];
        let q = p.inscribed_radius();
        let z: Vec<f64> = cc.iter().zip(&dir).map(|(c, d)| c + q * d).collect();
        let (out, b) = skeleton_project(&z, &p).unwrap();
        let cube = crate::spheremaps::cubify(&dir).unwrap();
        let expect: Vec<f64> = cc.iter().zip(&cube).map(|(c, d)| c + d / 2.0).collect();
        assert!(dist(&out, &expect) < 1e-15);
        assert!(matches!(b, SkeletonBranch::Cell { axis: 2, sign: -1, .. }));
    }

    #[test]
    fn excluded_points() {
        let p = desk();
        assert_eq!(
            skeleton_project(&[0.25, 0.25, 0.25, 0.25], &p),
            Err(Error::CellCenterSingularity { cell: 15 })
        );
        assert_eq!(
            skeleton_project(&[0.3, 0.25, 0.25, 0.25], &p),
            Err(Error::InsideExcludedBall { cell: 15 })
        );
    }

    #[test]
    fn skeleton_distance_levels() {
        assert_eq!(skeleton_distance(&[0.0, 0.13], 2, 1), 0.0);
        assert!((skeleton_distance(&[0.1f64, 0.13], 2, 1) - 0.1).abs() < 1e-15);
        assert_eq!(skeleton_distance(&[0.25, 0.13], 2, 2), 0.0);
    }

    #[test]
    fn snapping_lands_on_cell_boundary() {
        let prof = TransitionProfile::new(0.05f64);
        let z = [0.01, 0.2, -0.2, 0.3];
        let out = snap_to_cell_boundary(&z, 2, &prof);
        assert!(out[0].abs() < 1e-15);
        assert!((out[1] - 0.2).abs() < 1e-15);
    }
}
