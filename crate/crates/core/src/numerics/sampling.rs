//! Deterministic sample generation: Halton sequences and seeded random points.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::scalar::{dist, Real};

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while index > 0 {
        out += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    out
}

/// Halton points in `[0,1)^dim` with a seeded Cranley–Patterson shift.
#[derive(Debug, Clone)]
pub struct Halton {
    dim: usize,
    next: u64,
    shift: Vec<f64>,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton dimension limited to {}", PRIMES.len());
        let shift = if seed == 0 {
            vec![0.0; dim]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..dim).map(|_| rng.gen::<f64>()).collect()
        };
        Self {
            dim,
            next: 1,
            shift,
        }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let i = self.next;
        self.next += 1;
        (0..self.dim)
            .map(|d| (radical_inverse(i, PRIMES[d]) + self.shift[d]).fract())
            .collect()
    }
}

/// Seeded generator for uniform points in balls, on spheres and in boxes.
#[derive(Debug, Clone)]
pub struct PointSampler {
    rng: ChaCha8Rng,
}

impl PointSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Standard normal via Box–Muller.
    pub fn gaussian(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.gen();
            if u > 0.0 {
                let v: f64 = self.rng.gen();
                return (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos();
            }
        }
    }

    pub fn unit_vector<T: Real>(&mut self, dim: usize) -> Vec<T> {
        loop {
            let g: Vec<f64> = (0..dim).map(|_| self.gaussian()).collect();
            let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 1e-12 {
                return g.into_iter().map(|v| T::lit(v / n)).collect();
            }
        }
    }

    /// Uniform point in the ball of the given radius and center.
    pub fn in_ball<T: Real>(&mut self, center: &[T], radius: T) -> Vec<T> {
        let dim = center.len();
        let dir: Vec<T> = self.unit_vector(dim);
        let u: f64 = self.rng.gen();
        let r = radius * T::lit(u.powf(1.0 / dim as f64));
        center.iter().zip(dir).map(|(&c, d)| c + r * d).collect()
    }

    pub fn on_sphere<T: Real>(&mut self, center: &[T], radius: T) -> Vec<T> {
        let dir: Vec<T> = self.unit_vector(center.len());
        center.iter().zip(dir).map(|(&c, d)| c + radius * d).collect()
    }

    pub fn in_box<T: Real>(&mut self, lo: &[T], hi: &[T]) -> Vec<T> {
        lo.iter()
            .zip(hi)
            .map(|(&a, &b)| a + (b - a) * T::lit(self.rng.gen::<f64>()))
            .collect()
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.gen()
    }
}

/// Maximum Euclidean distance between two maps on Halton samples of a box.
///
/// Evaluation failures are propagated. Deterministic given `seed`.
pub fn sup_distance<T, F, G>(
    mut map1: F,
    mut map2: G,
    lo: &[T],
    hi: &[T],
    n_samples: usize,
    seed: u64,
) -> Result<T>
where
    T: Real,
    F: FnMut(&[T]) -> Result<Vec<T>>,
    G: FnMut(&[T]) -> Result<Vec<T>>,
{
    let mut halton = Halton::new(lo.len(), seed);
    let mut sup = T::zero();
    for _ in 0..n_samples {
        let u = halton.next_point();
        let x: Vec<T> = lo
            .iter()
            .zip(hi)
            .zip(&u)
            .map(|((&a, &b), &t)| a + (b - a) * T::lit(t))
            .collect();
        let d = dist(&map1(&x)?, &map2(&x)?);
        sup = sup.max(d);
    }
    Ok(sup)
}
