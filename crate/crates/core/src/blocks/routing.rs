//! Planners for the two ball rearrangements `G1` (domain) and `G2` (image).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::transport::{make_transport, DiffeoPipeline, Stage, TransportSpec};
use crate::error::{Error, Result};
use crate::instance::{Ball, BallLayout, InstanceParams, Similarity};
use crate::scalar::{dist, Real};

/// Supports of `G1` stay inside `|x| < 1 − BOUNDARY_MARGIN`.
pub const BOUNDARY_MARGIN: f64 = 0.02;

const REROUTE_ATTEMPTS: usize = 16;

/// A pipeline together with the similarity it realises on each carried ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RoutedPipeline<T> {
    pub pipeline: DiffeoPipeline<T>,
    pub on_ball: Vec<Similarity<T>>,
    /// Index order in which the legs of each routing phase were executed.
    pub order: Vec<Vec<usize>>,
}

impl<T: Real> RoutedPipeline<T> {
    pub fn forward(&self, x: &[T]) -> Vec<T> {
        self.pipeline.forward(x)
    }

    pub fn inverse(&self, y: &[T]) -> Vec<T> {
        self.pipeline.inverse(y)
    }

    /// Similarity the pipeline realises on ball `i`.
    pub fn on_ball_similarity(&self, i: usize) -> &Similarity<T> {
        &self.on_ball[i]
    }
}

struct Router<T> {
    balls: Vec<Ball<T>>,
    sims: Vec<Similarity<T>>,
    pipeline: DiffeoPipeline<T>,
    order: Vec<Vec<usize>>,
    limit: T,
    rng: ChaCha8Rng,
}

impl<T: Real> Router<T> {
    fn new(balls: Vec<Ball<T>>, dim: usize, limit: T, seed: u64) -> Self {
        let sims = vec![Similarity::identity(dim); balls.len()];
        Self {
            balls,
            sims,
            pipeline: DiffeoPipeline::identity(dim),
            order: Vec::new(),
            limit,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn obstacles(&self, moving: usize) -> Vec<(usize, Ball<T>)> {
        self.balls
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != moving)
            .map(|(j, b)| (j, b.clone()))
            .collect()
    }

    fn apply_global(&mut self, stage: Stage<T>) {
        if let Stage::Scale { factor } = stage {
            let dim = self.pipeline.dim;
            let s = Similarity::new(factor, vec![T::zero(); dim]);
            for (b, sim) in self.balls.iter_mut().zip(self.sims.iter_mut()) {
                *b = Ball::new(s.apply(&b.center), b.radius * factor);
                *sim = s.compose(sim);
            }
        }
        self.pipeline.push_stage(stage);
    }

    fn commit(&mut self, i: usize, target: Ball<T>, pipe: DiffeoPipeline<T>) {
        let src = &self.balls[i];
        let a = target.radius / src.radius;
        let translation = target
            .center
            .iter()
            .zip(&src.center)
            .map(|(&t, &s)| t - a * s)
            .collect();
        self.sims[i] = Similarity::new(a, translation).compose(&self.sims[i]);
        self.balls[i] = target;
        self.pipeline.extend(pipe);
    }

    /// Executes one phase of legs: repeatedly moves the first ball whose straight path
    /// validates; if none does, retries with seeded waypoint perturbations.
    fn phase(&mut self, legs: Vec<(usize, Ball<T>, T)>) -> Result<()> {
        let mut pending = legs;
        let mut order = Vec::with_capacity(pending.len());
        while !pending.is_empty() {
            let mut moved = None;
            let mut first_err = None;
            for (pos, (i, target, margin)) in pending.iter().enumerate() {
                let spec = TransportSpec::straight(self.balls[*i].clone(), target.clone(), *margin);
                match make_transport(&spec, *i, &self.obstacles(*i), self.limit) {
                    Ok(pipe) => {
                        moved = Some((pos, pipe));
                        break;
                    }
                    Err(e) => {
                        first_err.get_or_insert(e);
                    }
                }
            }
            if moved.is_none() {
                moved = self.reroute(&pending);
            }
            match moved {
                Some((pos, pipe)) => {
                    let (i, target, _) = pending.remove(pos);
                    self.commit(i, target, pipe);
                    order.push(i);
                }
                None => return Err(first_err.unwrap_or(Error::InvalidParameter("routing failed".into()))),
            }
        }
        self.order.push(order);
        Ok(())
    }

    fn reroute(&mut self, pending: &[(usize, Ball<T>, T)]) -> Option<(usize, DiffeoPipeline<T>)> {
        for (pos, (i, target, margin)) in pending.iter().enumerate() {
            let src = self.balls[*i].clone();
            let span = dist(&src.center, &target.center);
            for _ in 0..REROUTE_ATTEMPTS {
                let mid: Vec<T> = src
                    .center
                    .iter()
                    .zip(&target.center)
                    .map(|(&a, &b)| {
                        let jitter: f64 = self.rng.gen_range(-0.5..0.5);
                        (a + b) * T::lit(0.5) + span * T::lit(jitter)
                    })
                    .collect();
                let spec = TransportSpec {
                    source: src.clone(),
                    target: target.clone(),
                    waypoints: vec![mid],
                    tube_margin: *margin,
                };
                if let Ok(pipe) = make_transport(&spec, *i, &self.obstacles(*i), self.limit) {
                    return Some((pos, pipe));
                }
            }
        }
        None
    }

    fn finish(self) -> RoutedPipeline<T> {
        RoutedPipeline {
            pipeline: self.pipeline,
            on_ball: self.sims,
            order: self.order,
        }
    }
}

fn min_pairwise<T: Real>(points: &[Vec<T>]) -> Option<T> {
    let mut best: Option<T> = None;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = dist(&points[i], &points[j]);
            if d > T::zero() {
                best = Some(best.map_or(d, |b: T| b.min(d)));
            }
        }
    }
    best
}

fn drop_last<T: Real>(x: &[T]) -> Vec<T> {
    x[..x.len() - 1].to_vec()
}

fn with_last<T: Real>(x: &[T], t: T) -> Vec<T> {
    let mut v = x[..x.len() - 1].to_vec();
    v.push(t);
    v
}

/// Plans `G1` on `R^{k+1}`: shrink every ball to radius `rho` in place, lift it
/// vertically to its slot height `t_i`, then move it horizontally onto the axis.
pub fn plan_g1<T: Real>(params: &InstanceParams<T>, layout: &BallLayout<T>) -> Result<RoutedPipeline<T>> {
    let dim = params.domain_dim();
    let rho = params.rho;
    let limit = T::one() - T::lit(BOUNDARY_MARGIN);
    let mut router = Router::new(
        (0..layout.len()).map(|i| layout.ball(i)).collect(),
        dim,
        limit,
        params.seed,
    );
    let half = T::lit(0.5);
    let gap = min_pairwise(&layout.centers).map_or(half - layout.radius, |d| d - layout.radius - layout.radius);
    let shrink_margin = T::lit(0.45) * gap;
    router.phase(
        (0..layout.len())
            .map(|i| (i, Ball::new(layout.centers[i].clone(), rho), shrink_margin))
            .collect(),
    )?;

    let feet: Vec<Vec<T>> = layout.centers.iter().map(|c| drop_last(c)).collect();
    let sep = min_pairwise(&feet).unwrap_or(half);
    let vertical_margin = T::lit(0.25) * (sep - rho - rho);
    router.phase(
        (0..layout.len())
            .map(|i| {
                (
                    i,
                    Ball::new(with_last(&layout.centers[i], layout.slots[i]), rho),
                    vertical_margin,
                )
            })
            .collect(),
    )?;

    let axis_margin = T::lit(0.45) * (params.slot_spacing() - rho - rho);
    router.phase(
        (0..layout.len())
            .map(|i| (i, Ball::new(layout.aligned_centers[i].clone(), rho), axis_margin))
            .collect(),
    )?;
    Ok(router.finish())
}

/// Plans `G2` on `R^{m+1}`: scale by `½√(m+1)`, move each aligned ball horizontally
/// above its cell center, lower it vertically onto the center, then inflate it to the
/// inscribed radius `(1−θ)/(2n)`.
pub fn plan_g2<T: Real>(params: &InstanceParams<T>, layout: &BallLayout<T>) -> Result<RoutedPipeline<T>> {
    let dim = params.image_dim();
    let rho = params.rho;
    let g = params.cube_diameter() * T::lit(0.5);
    let aligned: Vec<Ball<T>> = layout
        .slots
        .iter()
        .map(|&t| {
            let mut c = vec![T::zero(); dim];
            c[dim - 1] = t;
            Ball::new(c, rho)
        })
        .collect();
    let mut router = Router::new(aligned, dim, g, params.seed.wrapping_add(1));
    if g != T::one() {
        router.apply_global(Stage::Scale { factor: g });
    }
    let axis_margin = g * T::lit(0.45) * (params.slot_spacing() - rho - rho);
    router.phase(
        (0..layout.len())
            .map(|i| {
                let c = with_last(&layout.cell_centers[i], g * layout.slots[i]);
                (i, Ball::new(c, g * rho), axis_margin)
            })
            .collect(),
    )?;
    router.phase(
        (0..layout.len())
            .map(|i| (i, Ball::new(layout.cell_centers[i].clone(), g * rho), axis_margin))
            .collect(),
    )?;
    let q = params.inscribed_radius();
    let collar = params.theta / (T::lit(2.0) * T::from_count(params.n));
    router.phase(
        (0..layout.len())
            .map(|i| (i, Ball::new(layout.cell_centers[i].clone(), q), collar))
            .collect(),
    )?;
    Ok(router.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::pack_balls;
    use crate::numerics::PointSampler;
    use crate::scalar::norm;

    #[test]
    fn g1_aligns_balls_as_similarities() {
        let p = InstanceParams::<f64>::desk_default(7);
        let layout = pack_balls(&p).unwrap();
        let g1 = plan_g1(&p, &layout).unwrap();
        let mut rng = PointSampler::new(2);
        for i in 0..layout.len() {
            let sim = g1.on_ball_similarity(i);
            assert!((sim.scale - p.rho / p.ball_radius).abs() < 1e-15);
            assert!(dist(&sim.apply(&layout.centers[i]), &layout.aligned_centers[i]) < 1e-14);
            assert!(dist(&g1.forward(&layout.centers[i]), &layout.aligned_centers[i]) < 1e-13);
            for _ in 0..20 {
                let x = rng.in_ball(&layout.centers[i], p.ball_radius);
                assert!(dist(&g1.forward(&x), &sim.apply(&x)) < 1e-13);
            }
        }
        let x = [0.0, 0.99, 0.0, 0.0, 0.0];
        assert_eq!(g1.forward(&x), x.to_vec());
    }

    #[test]
    fn g2_places_balls_in_cells() {
        let p = InstanceParams::<f64>::desk_default(7);
        let layout = pack_balls(&p).unwrap();
        let g2 = plan_g2(&p, &layout).unwrap();
        for i in 0..layout.len() {
            let a = with_last(&vec![0.0; p.image_dim()], layout.slots[i]);
            let y = g2.forward(&a);
            assert!(dist(&y, &layout.cell_centers[i]) < 1e-13);
            let sim = g2.on_ball_similarity(i);
            assert!((sim.scale - p.inscribed_radius() / p.rho).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trips() {
        for p in [InstanceParams::<f64>::desk_default(7), InstanceParams::toy_default(7)] {
            let layout = pack_balls(&p).unwrap();
            let g1 = plan_g1(&p, &layout).unwrap();
            let g2 = plan_g2(&p, &layout).unwrap();
            let mut rng = PointSampler::new(9);
            for _ in 0..300 {
                let x: Vec<f64> = rng.in_ball(&vec![0.0; p.domain_dim()], 1.0);
                assert!(dist(&g1.inverse(&g1.forward(&x)), &x) < 1e-9);
                let z: Vec<f64> = rng.in_ball(&vec![0.0; p.image_dim()], 1.0);
                assert!(dist(&g2.inverse(&g2.forward(&z)), &z) < 1e-9);
            }
            assert!(norm(&g1.forward(&layout.centers[0])) < 0.5);
        }
    }
}
