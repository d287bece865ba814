//! Building blocks of the base map: the transition profile `λ_s` and retraction `R`,
//! the axis suspension `H`, the ball transports behind `G1` and `G2`, and the
//! projection onto the grid skeleton.

pub mod profile;
pub mod routing;
pub mod skeleton;
pub mod transport;

pub use profile::{lambda_s, retract_r, smoothstep, smoothstep_derivative, TransitionProfile};
pub use routing::{plan_g1, plan_g2, RoutedPipeline};
pub use skeleton::{cell_center, cell_of, skeleton_distance, skeleton_project, snap_to_cell_boundary, SkeletonBranch};
pub use transport::{make_transport, DiffeoPipeline, Stage, TransportSpec};

use crate::scalar::{norm, Real};
use crate::spheremaps::SphereMapKind;

/// `H(w, t) = (|w|·h(w/|w|), t)`, and `(0, t)` on the vertical axis. Spheres centered on
/// the axis go to spheres of the same radius and center.
pub fn axis_suspension_h<T: Real>(x: &[T], h: &SphereMapKind) -> Vec<T> {
    let (w, t) = x.split_at(x.len() - 1);
    let r = norm(w);
    let mut out = if r > T::zero() {
        let unit: Vec<T> = w.iter().map(|&v| v / r).collect();
        h.eval_unchecked(&unit).into_iter().map(|v| v * r).collect()
    } else {
        vec![T::zero(); h.target_ambient()]
    };
    out.push(t[0]);
    out
}

/// Distance from `x` to the vertical axis, where `H` is not differentiable.
pub fn axis_distance<T: Real>(x: &[T]) -> T {
    norm(&x[..x.len() - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::PointSampler;
    use crate::scalar::dist;
    use crate::spheremaps::suspend;

    #[test]
    fn axis_points_are_fixed() {
        let h = SphereMapKind::Hopf;
        assert_eq!(axis_suspension_h(&[0.0, 0.0, 0.0, 0.0, 0.7], &h), vec![0.0, 0.0, 0.0, 0.7]);
    }

    #[test]
    fn preserves_norm_and_axis_spheres() {
        let h = SphereMapKind::Hopf;
        let mut rng = PointSampler::new(4);
        for _ in 0..1000 {
            let t0 = rng.uniform() - 0.5;
            let rho = 0.3 * rng.uniform();
            let u: Vec<f64> = rng.unit_vector(5);
            let x: Vec<f64> = u.iter().enumerate().map(|(j, &v)| rho * v + if j == 4 { t0 } else { 0.0 }).collect();
            let y = axis_suspension_h(&x, &h);
            assert!((norm(&y) - norm(&x)).abs() < 1e-12);
            let s = suspend(&h, &u).unwrap();
            let expect: Vec<f64> = s.iter().enumerate().map(|(j, &v)| rho * v + if j == 3 { t0 } else { 0.0 }).collect();
            assert!(dist(&y, &expect) < 1e-14);
        }
    }
}
