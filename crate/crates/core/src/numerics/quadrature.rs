//! Gauss–Legendre nodes and the tensor bump-weighted mollification rule built on them.

use crate::scalar::Real;

/// Nodes and weights of the `count`-point Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; count];
    let mut weights = vec![0.0; count];
    let n = count as f64;
    for i in 0..count.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=count {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if count == 1 {
                p1 = x;
                p0 = 1.0;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[count - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[count - 1 - i] = w;
    }
    (nodes, weights)
}

/// Product rule `Σ w_q g(x − ε y_q)` approximating convolution with the normalised
/// bump `∏ exp(−1/(1 − y_j²))` on `[−1, 1]^dim`.
#[derive(Debug, Clone)]
pub struct BumpQuadrature<T> {
    pub offsets: Vec<Vec<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> BumpQuadrature<T> {
    pub fn new(dim: usize, per_axis: usize) -> Self {
        let (nodes, gw) = gauss_legendre(per_axis);
        let bump: Vec<f64> = nodes
            .iter()
            .zip(&gw)
            .map(|(&y, &w)| w * (-1.0 / (1.0 - y * y)).exp())
            .collect();
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        let total = per_axis.pow(dim as u32);
        for flat in 0..total {
            let mut rem = flat;
            let mut y = Vec::with_capacity(dim);
            let mut w = 1.0;
            for _ in 0..dim {
                let j = rem % per_axis;
                rem /= per_axis;
                y.push(T::lit(nodes[j]));
                w *= bump[j];
            }
            offsets.push(y);
            weights.push(w);
        }
        let sum: f64 = weights.iter().sum();
        Self {
            offsets,
            weights: weights.into_iter().map(|w| T::lit(w / sum)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Mollified value of a vector-valued `g` at `x` with radius `epsilon`.
    pub fn apply<F>(&self, g: F, x: &[T], epsilon: T) -> Vec<T>
    where
        F: Fn(&[T]) -> Vec<T>,
    {
        let mut acc: Vec<T> = Vec::new();
        let mut p = vec![T::zero(); x.len()];
        for (y, &w) in self.offsets.iter().zip(&self.weights) {
            for j in 0..x.len() {
                p[j] = x[j] - epsilon * y[j];
            }
            let v = g(&p);
            if acc.is_empty() {
                acc = vec![T::zero(); v.len()];
            }
            for (a, b) in acc.iter_mut().zip(v) {
                *a = *a + w * b;
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(6);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // ∫ x^10 = 2/11 is exact for 6 points (degree ≤ 11).
        let v: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(10)).sum();
        assert!((v - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn mollifier_reproduces_affine_maps() {
        let q = BumpQuadrature::<f64>::new(2, 8);
        let g = |p: &[f64]| vec![3.0 * p[0] - p[1] + 1.0];
        let v = q.apply(g, &[0.2, -0.4], 0.1);
        assert!((v[0] - (0.6 + 0.4 + 1.0)).abs() < 1e-14);
    }
}
