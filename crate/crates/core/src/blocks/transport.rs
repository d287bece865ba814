//! Compactly supported diffeomorphisms that carry balls along straight tubes.
//!
//! Every stage is an exact similarity on the ball it carries and the identity outside
//! a validated support, so compositions keep exact similarities on every carried ball.

use serde::{Deserialize, Serialize};

use super::profile::smoothstep;
use crate::error::{Error, Result};
use crate::instance::{Ball, Similarity};
use crate::scalar::{dist, norm, Real};

/// One invertible stage of a [`DiffeoPipeline`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case", bound = "T: Real")]
pub enum Stage<T> {
    /// `x ↦ factor·x`.
    Scale { factor: T },
    /// Radial change of a ball's radius about `center`, identity for `|x − c| ≥ outer`.
    Radial {
        center: Vec<T>,
        from_radius: T,
        to_radius: T,
        outer: T,
    },
    /// Translation of the ball `B(start, radius)` to `B(end, radius)` in `steps`
    /// increments, each supported in a collar of width `margin`.
    Push {
        start: Vec<T>,
        end: Vec<T>,
        radius: T,
        margin: T,
        steps: usize,
    },
}

fn radial_params<T: Real>(from: T, to: T) -> (T, T) {
    let r_in = from.max(to);
    (r_in, from.min(to) / r_in)
}

/// Shrink profile `P` on `[0, ∞)`: `a·t` below `r_in`, `t` above `outer`.
fn shrink_profile<T: Real>(t: T, r_in: T, a: T, outer: T) -> T {
    if t <= r_in {
        a * t
    } else if t >= outer {
        t
    } else {
        let b = smoothstep((t - r_in) / (outer - r_in));
        (T::one() - b) * a * t + b * t
    }
}

fn shrink_profile_inverse<T: Real>(s: T, r_in: T, a: T, outer: T) -> T {
    if s <= a * r_in {
        return s / a;
    }
    if s >= outer {
        return s;
    }
    let (mut lo, mut hi) = (r_in, outer);
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if shrink_profile(mid, r_in, a, outer) < s {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::epsilon() * hi {
            break;
        }
    }
    (lo + hi) * T::lit(0.5)
}

fn push_bump<T: Real>(d: T, radius: T, margin: T) -> T {
    T::one() - smoothstep((d - radius) / margin)
}

/// Distance from `x` to the segment `[a, b]`.
pub fn segment_distance<T: Real>(x: &[T], a: &[T], b: &[T]) -> T {
    let mut len2 = T::zero();
    let mut proj = T::zero();
    for i in 0..x.len() {
        let d = b[i] - a[i];
        len2 = len2 + d * d;
        proj = proj + (x[i] - a[i]) * d;
    }
    let t = if len2 > T::zero() {
        (proj / len2).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    let mut acc = T::zero();
    for i in 0..x.len() {
        let v = x[i] - (a[i] + t * (b[i] - a[i]));
        acc = acc + v * v;
    }
    acc.sqrt()
}

/// Distance from `x` to `start + j·delta`.
fn step_center_distance<T: Real>(x: &[T], start: &[T], delta: &[T], j: usize) -> T {
    let jj = T::from_count(j);
    let mut acc = T::zero();
    for i in 0..x.len() {
        let v = x[i] - (start[i] + jj * delta[i]);
        acc = acc + v * v;
    }
    acc.sqrt()
}

impl<T: Real> Stage<T> {
    /// Step count making each push increment at most a quarter of the collar.
    pub fn push(start: Vec<T>, end: Vec<T>, radius: T, margin: T) -> Self {
        let len = dist(&start, &end).to_f64_lossy();
        let steps = ((4.0 * len / margin.to_f64_lossy()).ceil() as usize).max(1);
        Stage::Push {
            start,
            end,
            radius,
            margin,
            steps,
        }
    }

    pub fn forward(&self, x: &[T]) -> Vec<T> {
        match self {
            Stage::Scale { factor } => x.iter().map(|&v| *factor * v).collect(),
            Stage::Radial {
                center,
                from_radius,
                to_radius,
                outer,
            } => {
                let (r_in, a) = radial_params(*from_radius, *to_radius);
                let t = dist(x, center);
                let factor = if to_radius < from_radius {
                    if t <= r_in {
                        a
                    } else if t >= *outer {
                        return x.to_vec();
                    } else {
                        shrink_profile(t, r_in, a, *outer) / t
                    }
                } else if t <= a * r_in {
                    T::one() / a
                } else if t >= *outer {
                    return x.to_vec();
                } else {
                    shrink_profile_inverse(t, r_in, a, *outer) / t
                };
                x.iter()
                    .zip(center)
                    .map(|(&v, &c)| c + factor * (v - c))
                    .collect()
            }
            Stage::Push {
                start,
                end,
                radius,
                margin,
                steps,
            } => {
                if segment_distance(x, start, end) >= *radius + *margin {
                    return x.to_vec();
                }
                let delta = step_vector(start, end, *steps);
                let mut y = x.to_vec();
                for j in 0..*steps {
                    let psi = push_bump(step_center_distance(&y, start, &delta, j), *radius, *margin);
                    if psi > T::zero() {
                        for (v, &d) in y.iter_mut().zip(&delta) {
                            *v = *v + psi * d;
                        }
                    }
                }
                y
            }
        }
    }

    pub fn inverse(&self, y: &[T]) -> Vec<T> {
        match self {
            Stage::Scale { factor } => y.iter().map(|&v| v / *factor).collect(),
            Stage::Radial {
                center,
                from_radius,
                to_radius,
                outer,
            } => Stage::Radial {
                center: center.clone(),
                from_radius: *to_radius,
                to_radius: *from_radius,
                outer: *outer,
            }
            .forward(y),
            Stage::Push {
                start,
                end,
                radius,
                margin,
                steps,
            } => {
                if segment_distance(y, start, end) >= *radius + *margin {
                    return y.to_vec();
                }
                let delta = step_vector(start, end, *steps);
                let mut x = y.to_vec();
                for j in (0..*steps).rev() {
                    if step_center_distance(&x, start, &delta, j) >= *radius + *margin + norm(&delta) {
                        continue;
                    }
                    // Solve p + ψ(p)·δ = x; the map p ↦ x − ψ(p)·δ contracts by ½.
                    let target = x.clone();
                    let mut p = target.clone();
                    for _ in 0..200 {
                        let psi = push_bump(step_center_distance(&p, start, &delta, j), *radius, *margin);
                        let next: Vec<T> = target
                            .iter()
                            .zip(&delta)
                            .map(|(&t, &d)| t - psi * d)
                            .collect();
                        let change = dist(&next, &p);
                        p = next;
                        if change <= T::epsilon() * T::lit(4.0) {
                            break;
                        }
                    }
                    x = p;
                }
                x
            }
        }
    }

    /// Ball on which the stage acts as an exact similarity, and that similarity.
    pub fn carried(&self) -> Option<(Ball<T>, Similarity<T>)> {
        match self {
            Stage::Scale { .. } => None,
            Stage::Radial {
                center,
                from_radius,
                to_radius,
                ..
            } => {
                let a = *to_radius / *from_radius;
                let translation = center.iter().map(|&c| c - a * c).collect();
                Some((
                    Ball::new(center.clone(), *from_radius),
                    Similarity::new(a, translation),
                ))
            }
            Stage::Push {
                start, end, radius, ..
            } => {
                let translation = end.iter().zip(start).map(|(&e, &s)| e - s).collect();
                Some((
                    Ball::new(start.clone(), *radius),
                    Similarity::new(T::one(), translation),
                ))
            }
        }
    }

    /// Distance from `ball` to the support of the stage; positive means untouched.
    pub fn clearance(&self, ball: &Ball<T>) -> Option<T> {
        match self {
            Stage::Scale { .. } => None,
            Stage::Radial { center, outer, .. } => {
                Some(dist(&ball.center, center) - *outer - ball.radius)
            }
            Stage::Push {
                start,
                end,
                radius,
                margin,
                ..
            } => Some(segment_distance(&ball.center, start, end) - (*radius + *margin) - ball.radius),
        }
    }

    /// Largest `|x|` over the support.
    pub fn support_extent(&self) -> Option<T> {
        match self {
            Stage::Scale { .. } => None,
            Stage::Radial { center, outer, .. } => Some(norm(center) + *outer),
            Stage::Push {
                start,
                end,
                radius,
                margin,
                ..
            } => Some(norm(start).max(norm(end)) + *radius + *margin),
        }
    }
}

fn step_vector<T: Real>(start: &[T], end: &[T], steps: usize) -> Vec<T> {
    let k = T::from_count(steps);
    end.iter().zip(start).map(|(&e, &s)| (e - s) / k).collect()
}

/// Ordered composition of stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DiffeoPipeline<T> {
    pub dim: usize,
    pub stages: Vec<Stage<T>>,
}

impl<T: Real> DiffeoPipeline<T> {
    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            stages: Vec::new(),
        }
    }

    pub fn push_stage(&mut self, stage: Stage<T>) {
        self.stages.push(stage);
    }

    pub fn extend(&mut self, other: DiffeoPipeline<T>) {
        self.stages.extend(other.stages);
    }

    pub fn forward(&self, x: &[T]) -> Vec<T> {
        self.stages.iter().fold(x.to_vec(), |acc, s| s.forward(&acc))
    }

    pub fn inverse(&self, y: &[T]) -> Vec<T> {
        self.stages.iter().rev().fold(y.to_vec(), |acc, s| s.inverse(&acc))
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }
}

/// Carries `source` to `target` along the polyline `source.center → waypoints → target.center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TransportSpec<T> {
    pub source: Ball<T>,
    pub target: Ball<T>,
    #[serde(default)]
    pub waypoints: Vec<Vec<T>>,
    /// Width of the collar around the tube and around the radius change.
    pub tube_margin: T,
}

impl<T: Real> TransportSpec<T> {
    pub fn straight(source: Ball<T>, target: Ball<T>, tube_margin: T) -> Self {
        Self {
            source,
            target,
            waypoints: Vec::new(),
            tube_margin,
        }
    }
}

/// Builds the stages of a transport: shrink at the source, push along each leg, grow at
/// the target. Checks every stage against `obstacles` (index, ball) and keeps supports
/// inside `|x| < domain_limit`.
pub fn make_transport<T: Real>(
    spec: &TransportSpec<T>,
    moving: usize,
    obstacles: &[(usize, Ball<T>)],
    domain_limit: T,
) -> Result<DiffeoPipeline<T>> {
    let dim = spec.source.center.len();
    if spec.target.center.len() != dim || spec.waypoints.iter().any(|w| w.len() != dim) {
        return Err(Error::InvalidParameter("transport dimension mismatch".into()));
    }
    if !(spec.tube_margin > T::zero() && spec.source.radius > T::zero() && spec.target.radius > T::zero()) {
        return Err(Error::InvalidParameter("transport radii and margin must be positive".into()));
    }
    let mut pipe = DiffeoPipeline::identity(dim);
    let carried_radius = spec.source.radius.min(spec.target.radius);
    if spec.target.radius < spec.source.radius {
        pipe.push_stage(Stage::Radial {
            center: spec.source.center.clone(),
            from_radius: spec.source.radius,
            to_radius: spec.target.radius,
            outer: spec.source.radius + spec.tube_margin,
        });
    }
    let mut path = vec![spec.source.center.clone()];
    path.extend(spec.waypoints.iter().cloned());
    path.push(spec.target.center.clone());
    for leg in path.windows(2) {
        if dist(&leg[0], &leg[1]) > T::zero() {
            pipe.push_stage(Stage::push(
                leg[0].clone(),
                leg[1].clone(),
                carried_radius,
                spec.tube_margin,
            ));
        }
    }
    if spec.target.radius > spec.source.radius {
        pipe.push_stage(Stage::Radial {
            center: spec.target.center.clone(),
            from_radius: spec.source.radius,
            to_radius: spec.target.radius,
            outer: spec.target.radius + spec.tube_margin,
        });
    }
    validate_stages(&pipe, moving, obstacles, domain_limit)?;
    Ok(pipe)
}

/// Clearance threshold for stage supports against other balls.
pub const CLEARANCE_EPS: f64 = 1e-9;

pub fn validate_stages<T: Real>(
    pipe: &DiffeoPipeline<T>,
    moving: usize,
    obstacles: &[(usize, Ball<T>)],
    domain_limit: T,
) -> Result<()> {
    for stage in &pipe.stages {
        for (j, ball) in obstacles {
            if let Some(c) = stage.clearance(ball) {
                if !(c > T::lit(CLEARANCE_EPS)) {
                    return Err(Error::TubeObstructed {
                        moving,
                        blocker: *j,
                        clearance: c.to_f64_lossy(),
                    });
                }
            }
        }
        if let Some(extent) = stage.support_extent() {
            if !(extent < domain_limit) {
                return Err(Error::TubeObstructed {
                    moving,
                    blocker: usize::MAX,
                    clearance: (domain_limit - extent).to_f64_lossy(),
                });
            }
        }
    }
    Ok(())
}

/// Similarity realised by a pipeline on a ball it carries.
pub fn carried_similarity<T: Real>(pipe: &DiffeoPipeline<T>, ball: &Ball<T>) -> Similarity<T> {
    let mut sim = Similarity::identity(ball.center.len());
    let mut current = ball.clone();
    for stage in &pipe.stages {
        if let Some((b, s)) = stage.carried() {
            if dist(&b.center, &current.center) <= T::lit(1e-12) && b.radius >= current.radius * (T::one() - T::lit(1e-12)) {
                sim = s.compose(&sim);
                current = Ball::new(s.apply(&current.center), current.radius * s.scale);
            }
        } else if let Stage::Scale { factor } = stage {
            let s = Similarity::new(*factor, vec![T::zero(); current.center.len()]);
            sim = s.compose(&sim);
            current = Ball::new(s.apply(&current.center), current.radius * *factor);
        }
    }
    sim
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::PointSampler;

    #[test]
    fn identity_when_source_equals_target() {
        let b = Ball::new(vec![0.1, 0.2, 0.0], 0.1);
        let spec = TransportSpec::straight(b.clone(), b, 0.05);
        let pipe = make_transport(&spec, 0, &[], 1.0).unwrap();
        assert!(pipe.is_empty());
        assert_eq!(pipe.forward(&[0.3, 0.1, 0.2]), vec![0.3, 0.1, 0.2]);
    }

    #[test]
    fn carries_ball_as_similarity() {
        let src = Ball::new(vec![-0.3, 0.0, 0.0], 0.1);
        let tgt = Ball::new(vec![0.3, 0.1, 0.0], 0.05);
        let spec = TransportSpec::straight(src.clone(), tgt.clone(), 0.04);
        let pipe = make_transport(&spec, 0, &[], 1.0).unwrap();
        let mut rng = PointSampler::new(1);
        for _ in 0..200 {
            let v: Vec<f64> = rng.in_ball(&[0.0, 0.0, 0.0], 1.0);
            let x: Vec<f64> = src.center.iter().zip(&v).map(|(c, d)| c + 0.1 * d).collect();
            let y = pipe.forward(&x);
            let expect: Vec<f64> = tgt.center.iter().zip(&v).map(|(c, d)| c + 0.05 * d).collect();
            assert!(dist(&y, &expect) < 1e-14);
        }
        assert!(dist(&pipe.forward(&src.center), &tgt.center) < 1e-15);
        // Far away points are untouched.
        assert_eq!(pipe.forward(&[0.0, 0.8, 0.0]), vec![0.0, 0.8, 0.0]);
        let sim = carried_similarity(&pipe, &src);
        assert!((sim.scale - 0.5).abs() < 1e-15);
        assert!(dist(&sim.apply(&src.center), &tgt.center) < 1e-15);
    }

    #[test]
    fn round_trip() {
        let spec = TransportSpec::straight(
            Ball::new(vec![0.0, -0.2, 0.1, 0.0], 0.02),
            Ball::new(vec![0.2, 0.3, 0.0, 0.0], 0.2),
            0.05,
        );
        let pipe = make_transport(&spec, 0, &[], 1.0).unwrap();
        let mut rng = PointSampler::new(5);
        for _ in 0..500 {
            let x: Vec<f64> = rng.in_ball(&[0.0; 4], 0.8);
            let back = pipe.inverse(&pipe.forward(&x));
            assert!(dist(&back, &x) < 1e-12, "{x:?} {back:?}");
        }
    }

    #[test]
    fn obstruction_is_reported() {
        let spec = TransportSpec::straight(
            Ball::new(vec![-0.4, 0.0], 0.05),
            Ball::new(vec![0.4, 0.0], 0.05),
            0.02,
        );
        let blocker = (3usize, Ball::new(vec![0.0, 0.0], 0.05));
        let err = make_transport(&spec, 1, &[blocker], 1.0).unwrap_err();
        assert!(matches!(err, Error::TubeObstructed { moving: 1, blocker: 3, .. }));
    }
}
