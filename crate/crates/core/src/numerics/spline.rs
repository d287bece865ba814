//! Tensor-product B-spline surrogates of sampled vector-valued maps.
//!
//! A surrogate is built in two passes: the source map is averaged over a compactly
//! supported bump kernel of width `ε` at every node of a uniform grid, then the
//! averaged samples are interpolated by splines of order `p` (degree `p − 1`,
//! `C^{p−2}` across simple knots). The interpolation space contains every
//! polynomial of degree `< p`, so such maps are reproduced up to rounding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::numerics::sampling::Halton;
use crate::scalar::Real;

const SURROGATE_MAGIC: &[u8; 8] = b"RKSURR01";

/// Interpolating spline space on one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineAxis<T> {
    lo: T,
    hi: T,
    order: usize,
    knots: Vec<T>,
    sites: Vec<T>,
    collocation_inverse: Matrix<T>,
}

impl<T: Real> SplineAxis<T> {
    /// `count` uniform interpolation sites on `[lo, hi]`, order `order`.
    pub fn new(lo: T, hi: T, count: usize, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidParameter("spline order must be at least 2".into()));
        }
        if count < order {
            return Err(Error::InvalidParameter(format!(
                "need at least {order} grid points per axis, got {count}"
            )));
        }
        if !(hi > lo) {
            return Err(Error::InvalidParameter("empty spline interval".into()));
        }
        let h = (hi - lo) / T::from_count(count - 1);
        let sites: Vec<T> = (0..count)
            .map(|i| if i + 1 == count { hi } else { lo + h * T::from_count(i) })
            .collect();
        let interior = count - order;
        let mut knots = vec![lo; order];
        if order % 2 == 0 {
            let first = order / 2;
            knots.extend((0..interior).map(|i| sites[first + i]));
        } else {
            let first = (order - 1) / 2;
            let half = T::lit(0.5);
            knots.extend((0..interior).map(|i| (sites[first + i] + sites[first + i + 1]) * half));
        }
        knots.extend(std::iter::repeat(hi).take(order));

        let mut axis = Self {
            lo,
            hi,
            order,
            knots,
            sites,
            collocation_inverse: Matrix::zeros(0, 0),
        };
        let mut coll = Matrix::zeros(count, count);
        for (i, &x) in axis.sites.iter().enumerate() {
            let span = axis.span(x, false);
            let vals = axis.basis_derivatives(span, x, 0);
            for (j, &v) in vals[0].iter().enumerate() {
                coll[(i, span + 1 - order + j)] = v;
            }
        }
        axis.collocation_inverse = coll.inverse().ok_or_else(|| {
            Error::InvalidParameter("singular spline collocation matrix".into())
        })?;
        Ok(axis)
    }

    pub fn count(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[T] {
        &self.sites
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    /// Interior knots (where the spline is only `C^{p−2}`).
    pub fn interior_knots(&self) -> &[T] {
        &self.knots[self.order..self.knots.len() - self.order]
    }

    pub fn spacing(&self) -> T {
        (self.hi - self.lo) / T::from_count(self.count() - 1)
    }

    fn contains(&self, x: T) -> bool {
        let tol = (self.hi - self.lo) * T::lit(1e-12);
        x >= self.lo - tol && x <= self.hi + tol
    }

    /// Knot span `μ` with `t_μ ≤ x < t_{μ+1}` (right limit) or `t_μ < x ≤ t_{μ+1}`
    /// (left limit), clamped to the non-degenerate spans.
    fn span(&self, x: T, left_limit: bool) -> usize {
        let deg = self.order - 1;
        let n = self.count();
        let x = x.max(self.lo).min(self.hi);
        let (mut lo, mut hi) = (deg, n); // search in [deg, n-1]
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let go_right = if left_limit {
                x > self.knots[mid]
            } else {
                x >= self.knots[mid]
            };
            if go_right {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Nonzero basis functions and derivatives up to `nder` at `x` on `span`.
    /// Row `k` holds the k-th derivatives of `B_{span−deg}, …, B_span`.
    fn basis_derivatives(&self, span: usize, x: T, nder: usize) -> Vec<Vec<T>> {
        let p = self.order - 1;
        let u = &self.knots;
        let mut ndu = vec![vec![T::zero(); p + 1]; p + 1];
        let mut left = vec![T::zero(); p + 1];
        let mut right = vec![T::zero(); p + 1];
        ndu[0][0] = T::one();
        for j in 1..=p {
            left[j] = x - u[span + 1 - j];
            right[j] = u[span + j] - x;
            let mut saved = T::zero();
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let mut ders = vec![vec![T::zero(); p + 1]; nder + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let n = nder.min(p);
        let mut a = vec![vec![T::zero(); p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = T::one();
            for k in 1..=n {
                let mut d = T::zero();
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    let rk = rk as usize;
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                    d = a[s2][0] * ndu[rk][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d = d + a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d = d + a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = T::from_count(p);
        for k in 1..=n {
            for j in 0..=p {
                ders[k][j] = ders[k][j] * factor;
            }
            factor = factor * T::from_count(p.saturating_sub(k));
        }
        ders
    }
}

/// `C^{p−2}` tensor-product spline approximation of a map on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothSurrogate<T> {
    axes: Vec<SplineAxis<T>>,
    outputs: usize,
    order: usize,
    epsilon: T,
    coefficients: Vec<T>,
    fit_residual: T,
}

/// Header written in front of the binary coefficient payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateHeader {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub grid_res: usize,
    pub order: usize,
    pub outputs: usize,
    pub epsilon: f64,
    pub fit_residual: f64,
    pub coefficient_count: usize,
    pub layout: String,
}

/// Compactly supported product bump kernel discretised on Halton nodes of `[−1,1]^dim`.
#[derive(Debug, Clone)]
pub struct MollifierRule<T> {
    nodes: Vec<Vec<T>>,
    weights: Vec<T>,
}

impl<T: Real> MollifierRule<T> {
    pub fn new(dim: usize, count: usize) -> Self {
        if count <= 1 {
            return Self {
                nodes: vec![vec![T::zero(); dim]],
                weights: vec![T::one()],
            };
        }
        let mut halton = Halton::new(dim, 0);
        let mut nodes = Vec::with_capacity(count);
        let mut raw = Vec::with_capacity(count);
        // Node 0 is the kernel center so that a single-node rule is a plain sample.
        nodes.push(vec![T::zero(); dim]);
        raw.push((-(dim as f64)).exp());
        while nodes.len() < count {
            let u = halton.next_point();
            let y: Vec<f64> = u.iter().map(|t| 2.0 * t - 1.0).collect();
            let w: f64 = y.iter().map(|v| (-1.0 / (1.0 - v * v)).exp()).product();
            nodes.push(y.into_iter().map(T::lit).collect());
            raw.push(w);
        }
        let total: f64 = raw.iter().sum();
        Self {
            nodes,
            weights: raw.into_iter().map(|w| T::lit(w / total)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Kernel average of `map` around `x` at scale `epsilon`.
    pub fn average<F>(&self, map: &F, x: &[T], epsilon: T) -> Result<Vec<T>>
    where
        F: Fn(&[T]) -> Result<Vec<T>>,
    {
        let mut acc: Option<Vec<T>> = None;
        let mut probe = x.to_vec();
        for (node, &w) in self.nodes.iter().zip(&self.weights) {
            for ((p, &xi), &yi) in probe.iter_mut().zip(x).zip(node) {
                *p = xi + epsilon * yi;
            }
            let v = map(&probe)?;
            let a = acc.get_or_insert_with(|| vec![T::zero(); v.len()]);
            for (ai, vi) in a.iter_mut().zip(v) {
                *ai = *ai + w * vi;
            }
        }
        acc.ok_or_else(|| Error::EvaluationFailed("empty mollifier".into()))
    }
}

/// Samples `map` on a uniform `grid_res^dim` grid over `[lo, hi]`, averages over the
/// bump kernel of width `epsilon` and interpolates with order-`order` splines.
///
/// `mollifier_nodes` controls the kernel discretisation (1 = plain sampling).
/// Fails with [`Error::GridTooCoarse`] when the grid spacing exceeds a positive `epsilon`.
pub fn smooth_surrogate<T, F>(
    map: F,
    lo: &[T],
    hi: &[T],
    grid_res: usize,
    epsilon: T,
    order: usize,
    mollifier_nodes: usize,
) -> Result<SmoothSurrogate<T>>
where
    T: Real,
    F: Fn(&[T]) -> Result<Vec<T>> + Sync,
{
    if lo.len() != hi.len() || lo.is_empty() {
        return Err(Error::InvalidParameter("box bounds dimension mismatch".into()));
    }
    let axes = lo
        .iter()
        .zip(hi)
        .map(|(&a, &b)| SplineAxis::new(a, b, grid_res, order))
        .collect::<Result<Vec<_>>>()?;
    let spacing = axes
        .iter()
        .map(SplineAxis::spacing)
        .fold(T::zero(), |a, b| a.max(b));
    if epsilon > T::zero() && spacing > epsilon {
        return Err(Error::GridTooCoarse {
            spacing: spacing.to_f64_lossy(),
            epsilon: epsilon.to_f64_lossy(),
        });
    }
    let rule = if epsilon > T::zero() {
        MollifierRule::new(lo.len(), mollifier_nodes)
    } else {
        MollifierRule::new(lo.len(), 1)
    };
    let dim = lo.len();
    let total = grid_res.pow(dim as u32);
    let sites: Vec<Vec<T>> = axes.iter().map(|a| a.sites.clone()).collect();
    let node = |flat: usize| -> Vec<T> {
        let mut rem = flat;
        let mut x = vec![T::zero(); dim];
        for a in (0..dim).rev() {
            x[a] = sites[a][rem % grid_res];
            rem /= grid_res;
        }
        x
    };
    let samples: Vec<Vec<T>> = (0..total)
        .into_par_iter()
        .map(|flat| rule.average(&map, &node(flat), epsilon))
        .collect::<Result<Vec<_>>>()?;
    let outputs = samples.first().map_or(0, Vec::len);
    if samples.iter().any(|s| s.len() != outputs) {
        return Err(Error::EvaluationFailed("inconsistent output dimension".into()));
    }
    let mut coefficients: Vec<T> = samples.iter().flatten().copied().collect();
    fit_in_place(&axes, outputs, &mut coefficients);

    let mut surrogate = SmoothSurrogate {
        axes,
        outputs,
        order,
        epsilon,
        coefficients,
        fit_residual: T::zero(),
    };
    // Residual on a deterministic subset of nodes (every node when the grid is small).
    let stride = (total / 2048).max(1);
    let mut residual = T::zero();
    for flat in (0..total).step_by(stride) {
        let g = surrogate.evaluate(&node(flat))?;
        for (a, b) in g.iter().zip(&samples[flat]) {
            residual = residual.max((*a - *b).abs());
        }
    }
    surrogate.fit_residual = residual;
    Ok(surrogate)
}

/// Applies the inverse collocation matrix along every axis of the sample tensor.
fn fit_in_place<T: Real>(axes: &[SplineAxis<T>], outputs: usize, data: &mut [T]) {
    let dim = axes.len();
    let m = axes[0].count();
    let mut fiber = vec![T::zero(); m];
    let mut solved = vec![T::zero(); m];
    for (a, axis) in axes.iter().enumerate() {
        let stride = m.pow((dim - 1 - a) as u32) * outputs;
        let outer = m.pow(a as u32);
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * m * stride + inner;
                for (i, f) in fiber.iter_mut().enumerate() {
                    *f = data[base + i * stride];
                }
                for (i, s) in solved.iter_mut().enumerate() {
                    *s = axis
                        .collocation_inverse
                        .row(i)
                        .iter()
                        .zip(&fiber)
                        .fold(T::zero(), |acc, (&c, &v)| acc + c * v);
                }
                for (i, s) in solved.iter().enumerate() {
                    data[base + i * stride] = *s;
                }
            }
        }
    }
}

impl<T: Real> SmoothSurrogate<T> {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn grid_res(&self) -> usize {
        self.axes[0].count()
    }

    pub fn fit_residual(&self) -> T {
        self.fit_residual
    }

    pub fn axes(&self) -> &[SplineAxis<T>] {
        &self.axes
    }

    pub fn lo(&self) -> Vec<T> {
        self.axes.iter().map(|a| a.lo).collect()
    }

    pub fn hi(&self) -> Vec<T> {
        self.axes.iter().map(|a| a.hi).collect()
    }

    fn check(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim() || !self.axes.iter().zip(x).all(|(a, &v)| a.contains(v)) {
            return Err(Error::OutOfBox);
        }
        Ok(())
    }

    /// Sums coefficients against per-axis weight rows (one row of `order` weights per axis).
    fn contract(&self, spans: &[usize], weights: &[&[T]]) -> Vec<T> {
        let dim = self.dim();
        let p = self.order;
        let m = self.grid_res();
        let mut out = vec![T::zero(); self.outputs];
        let mut idx = vec![0usize; dim];
        loop {
            let mut w = T::one();
            let mut flat = 0usize;
            for a in 0..dim {
                w = w * weights[a][idx[a]];
                flat = flat * m + spans[a] + 1 - p + idx[a];
            }
            if w != T::zero() {
                let c = &self.coefficients[flat * self.outputs..(flat + 1) * self.outputs];
                for (o, &cv) in out.iter_mut().zip(c) {
                    *o = *o + w * cv;
                }
            }
            let mut a = dim;
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < p {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    pub fn evaluate(&self, x: &[T]) -> Result<Vec<T>> {
        self.check(x)?;
        let spans: Vec<usize> = self.axes.iter().zip(x).map(|(a, &v)| a.span(v, false)).collect();
        let basis: Vec<Vec<Vec<T>>> = self
            .axes
            .iter()
            .zip(x)
            .zip(&spans)
            .map(|((a, &v), &s)| a.basis_derivatives(s, v, 0))
            .collect();
        let rows: Vec<&[T]> = basis.iter().map(|b| b[0].as_slice()).collect();
        Ok(self.contract(&spans, &rows))
    }

    /// Exact Jacobian of the surrogate (outputs × inputs).
    pub fn jacobian(&self, x: &[T]) -> Result<Matrix<T>> {
        self.check(x)?;
        let spans: Vec<usize> = self.axes.iter().zip(x).map(|(a, &v)| a.span(v, false)).collect();
        let basis: Vec<Vec<Vec<T>>> = self
            .axes
            .iter()
            .zip(x)
            .zip(&spans)
            .map(|((a, &v), &s)| a.basis_derivatives(s, v, 1))
            .collect();
        let mut jac = Matrix::zeros(self.outputs, self.dim());
        for d in 0..self.dim() {
            let rows: Vec<&[T]> = basis
                .iter()
                .enumerate()
                .map(|(a, b)| if a == d { b[1].as_slice() } else { b[0].as_slice() })
                .collect();
            jac.set_column(d, &self.contract(&spans, &rows));
        }
        Ok(jac)
    }

    /// Mixed partial derivative with per-axis orders; `left_limit[a]` selects the
    /// one-sided limit from below on axis `a` (relevant exactly at knots).
    pub fn partial_derivative(
        &self,
        x: &[T],
        orders: &[usize],
        left_limit: &[bool],
    ) -> Result<Vec<T>> {
        self.check(x)?;
        let spans: Vec<usize> = self
            .axes
            .iter()
            .zip(x)
            .zip(left_limit)
            .map(|((a, &v), &l)| a.span(v, l))
            .collect();
        let basis: Vec<Vec<Vec<T>>> = self
            .axes
            .iter()
            .zip(x)
            .zip(&spans)
            .zip(orders)
            .map(|(((a, &v), &s), &k)| a.basis_derivatives(s, v, k))
            .collect();
        let rows: Vec<&[T]> = basis
            .iter()
            .zip(orders)
            .map(|(b, &k)| b[k].as_slice())
            .collect();
        Ok(self.contract(&spans, &rows))
    }

    pub fn header(&self) -> SurrogateHeader {
        SurrogateHeader {
            lo: self.lo().iter().map(|v| v.to_f64_lossy()).collect(),
            hi: self.hi().iter().map(|v| v.to_f64_lossy()).collect(),
            grid_res: self.grid_res(),
            order: self.order,
            outputs: self.outputs,
            epsilon: self.epsilon.to_f64_lossy(),
            fit_residual: self.fit_residual.to_f64_lossy(),
            coefficient_count: self.coefficients.len(),
            layout: "row-major grid index (last axis fastest), output innermost".into(),
        }
    }

    /// Binary form: magic, `u64` LE header length, JSON header, `f64` LE coefficients.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header())?;
        let mut out = Vec::with_capacity(16 + header.len() + 8 * self.coefficients.len());
        out.extend_from_slice(SURROGATE_MAGIC);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for c in &self.coefficients {
            out.extend_from_slice(&c.to_f64_lossy().to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Serialization(format!("surrogate: {msg}"));
        if bytes.len() < 16 || &bytes[..8] != SURROGATE_MAGIC {
            return Err(bad("missing magic"));
        }
        let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let body = bytes.get(16..16 + hlen).ok_or_else(|| bad("truncated header"))?;
        let header: SurrogateHeader = serde_json::from_slice(body)?;
        let payload = &bytes[16 + hlen..];
        if payload.len() != 8 * header.coefficient_count {
            return Err(bad("coefficient payload length mismatch"));
        }
        let axes = header
            .lo
            .iter()
            .zip(&header.hi)
            .map(|(&a, &b)| SplineAxis::new(T::lit(a), T::lit(b), header.grid_res, header.order))
            .collect::<Result<Vec<_>>>()?;
        let expected = header.grid_res.pow(axes.len() as u32) * header.outputs;
        if expected != header.coefficient_count {
            return Err(bad("coefficient count does not match grid"));
        }
        let coefficients = payload
            .chunks_exact(8)
            .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect();
        Ok(Self {
            axes,
            outputs: header.outputs,
            order: header.order,
            epsilon: T::lit(header.epsilon),
            coefficients,
            fit_residual: T::lit(header.fit_residual),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic(x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![
            1.0 + x[0] - 2.0 * x[1] * x[1] + x[0] * x[0] * x[1],
            x[0].powi(3) - 0.5 * x[1].powi(3),
        ])
    }

    #[test]
    fn partition_of_unity() {
        let axis = SplineAxis::new(0.0f64, 1.0, 9, 4).unwrap();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let s = axis.span(x, false);
            let sum: f64 = axis.basis_derivatives(s, x, 0)[0].iter().sum();
            assert!((sum - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn reproduces_polynomials_below_order() {
        let g = smooth_surrogate(cubic, &[-1.0, -0.5], &[1.0, 0.5], 9, 0.0, 4, 1).unwrap();
        assert!(g.fit_residual() < 1e-12);
        let mut h = Halton::new(2, 5);
        for _ in 0..200 {
            let u = h.next_point();
            let x = [-1.0 + 2.0 * u[0], -0.5 + u[1]];
            let (a, b) = (g.evaluate(&x).unwrap(), cubic(&x).unwrap());
            assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_map_gives_constant_surrogate() {
        let g = smooth_surrogate(|_: &[f64]| Ok(vec![2.5]), &[0.0; 3], &[1.0; 3], 6, 0.3, 4, 8)
            .unwrap();
        for x in [[0.1, 0.2, 0.3], [0.9, 0.05, 0.5]] {
            assert!((g.evaluate(&x).unwrap()[0] - 2.5).abs() < 1e-12);
            assert!(g.jacobian(&x).unwrap().as_slice().iter().all(|v| v.abs() < 1e-11));
        }
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let f = |x: &[f64]| Ok(vec![(3.0 * x[0]).sin() * x[1], (x[0] - x[1]).exp()]);
        let g = smooth_surrogate(f, &[0.0, 0.0], &[1.0, 1.0], 12, 0.0, 4, 1).unwrap();
        let x = [0.37, 0.61];
        let j = g.jacobian(&x).unwrap();
        let fd = crate::numerics::fd::fd_jacobian(|p: &[f64]| g.evaluate(p), &x, 1e-5).unwrap();
        assert!(j.max_abs_diff(&fd) < 1e-8);
    }

    #[test]
    fn second_derivative_continuous_across_knots() {
        let f = |x: &[f64]| Ok(vec![(4.0 * x[0]).sin() * (2.0 * x[1]).cos()]);
        let g = smooth_surrogate(f, &[0.0, 0.0], &[1.0, 1.0], 10, 0.0, 4, 1).unwrap();
        for &knot in g.axes()[0].interior_knots() {
            let x = [knot, 0.43];
            let left = g.partial_derivative(&x, &[2, 0], &[true, false]).unwrap();
            let right = g.partial_derivative(&x, &[2, 0], &[false, false]).unwrap();
            assert!((left[0] - right[0]).abs() < 1e-8);
            // The third derivative does jump for a generic cubic spline.
            let l3 = g.partial_derivative(&x, &[3, 0], &[true, false]).unwrap();
            let r3 = g.partial_derivative(&x, &[3, 0], &[false, false]).unwrap();
            assert!(l3[0].is_finite() && r3[0].is_finite());
        }
    }

    #[test]
    fn grid_too_coarse_is_rejected() {
        let err = smooth_surrogate(cubic, &[0.0, 0.0], &[1.0, 1.0], 5, 0.1, 4, 4).unwrap_err();
        assert!(matches!(err, Error::GridTooCoarse { .. }));
    }

    #[test]
    fn out_of_box_is_rejected() {
        let g = smooth_surrogate(cubic, &[0.0, 0.0], &[1.0, 1.0], 6, 0.0, 4, 1).unwrap();
        assert_eq!(g.evaluate(&[1.5, 0.5]), Err(Error::OutOfBox));
        assert!(matches!(g.jacobian(&[0.5]), Err(Error::OutOfBox)));
    }

    #[test]
    fn binary_round_trip() {
        let g = smooth_surrogate(cubic, &[0.0, 0.0], &[1.0, 2.0], 7, 0.0, 4, 1).unwrap();
        let back = SmoothSurrogate::<f64>::from_bytes(&g.to_bytes().unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
