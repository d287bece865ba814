//! Construction parameters, first-generation ball layout, grid geometry, Cantor
//! addressing and the similarity transforms driving the recursion.
//!
//! Everything downstream is a deterministic function of an [`InstanceParams`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dist, norm, Real};
use crate::spheremaps::SphereMapKind;

/// Largest ball count for which a layout is enumerated explicitly.
pub const MAX_ENUMERATED_BALLS: u64 = 1 << 20;

/// Parameter regime of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Ball radius `2/n`, contraction ratio below one.
    Faithful,
    /// Small grids with a decoupled ball radius; contraction is waived.
    Desk,
    /// Low-dimensional illustrations outside the dimension hypothesis.
    Toy,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "faithful" => Ok(Mode::Faithful),
            "desk" => Ok(Mode::Desk),
            "toy" => Ok(Mode::Toy),
            other => Err(Error::InvalidParameter(format!("unknown mode `{other}`"))),
        }
    }
}

/// All parameters of one construction instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct InstanceParams<T> {
    /// Target rank bound.
    pub m: usize,
    /// Dimension of the domain sphere `S^k`; the domain ball lives in `R^{k+1}`.
    pub k: usize,
    /// Grid subdivisions per axis of the unit cube.
    pub n: usize,
    /// `n^{m+1}`: number of first-generation balls and grid cells.
    pub num_cells: u64,
    /// First-generation ball radius in domain units.
    pub ball_radius: T,
    /// Half-width of the transition bands of the coordinate retraction.
    pub s: T,
    /// Radius of the aligned balls on the vertical axis.
    pub rho: T,
    /// Margin between a cell and its inscribed ball, as a fraction of the half-edge.
    pub theta: T,
    pub seed: u64,
    pub mode: Mode,
    /// Image scale over domain scale per generation, `(1/n) / ball_radius`.
    pub gamma: T,
    pub sphere_map: SphereMapKind,
}

/// Validates and completes a parameter set with default `rho`, `theta` and sphere map.
pub fn make_instance<T: Real>(
    m: usize,
    k: usize,
    n: usize,
    ball_radius: T,
    s: T,
    mode: Mode,
    seed: u64,
) -> Result<InstanceParams<T>> {
    if m == 0 || k == 0 {
        return Err(Error::InvalidParameter("m and k must be positive".into()));
    }
    if n < 2 {
        return Err(Error::InvalidParameter("n must be at least 2".into()));
    }
    if mode != Mode::Toy && !(m + 1 <= k && k + 1 < 2 * m) {
        return Err(Error::DimensionHypothesisViolated { m, k });
    }
    let num_cells = (n as u64)
        .checked_pow((m + 1) as u32)
        .ok_or_else(|| Error::InvalidParameter("n^(m+1) overflows".into()))?;
    let sphere_map = SphereMapKind::default_for(k, m).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "no built-in non-trivial sphere map S^{} -> S^{}",
            k - 1,
            m.saturating_sub(1)
        ))
    })?;
    let rho = T::one() / (T::lit(4.0) * T::lit(num_cells as f64));
    let params = InstanceParams {
        m,
        k,
        n,
        num_cells,
        ball_radius,
        s,
        rho,
        theta: T::lit(0.2),
        seed,
        mode,
        gamma: T::one() / (T::from_count(n) * ball_radius),
        sphere_map,
    };
    params.validate()?;
    Ok(params)
}

impl<T: Real> InstanceParams<T> {
    /// Desk-scale default: `m=3, k=4, n=2, r_b=0.15, s=0.05`.
    pub fn desk_default(seed: u64) -> Self {
        make_instance(3, 4, 2, T::lit(0.15), T::lit(0.05), Mode::Desk, seed)
            .expect("desk default is valid")
    }

    /// Toy default: `m=2, k=2, n=2, r_b=0.12` with the degree-2 circle map.
    pub fn toy_default(seed: u64) -> Self {
        make_instance(2, 2, 2, T::lit(0.12), T::lit(0.05), Mode::Toy, seed)
            .expect("toy default is valid")
    }

    pub fn with_rho(mut self, rho: T) -> Result<Self> {
        self.rho = rho;
        self.validate()?;
        Ok(self)
    }

    pub fn with_theta(mut self, theta: T) -> Result<Self> {
        self.theta = theta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_sphere_map(mut self, kind: SphereMapKind) -> Result<Self> {
        self.sphere_map = kind;
        self.validate()?;
        Ok(self)
    }

    pub fn domain_dim(&self) -> usize {
        self.k + 1
    }

    pub fn image_dim(&self) -> usize {
        self.m + 1
    }

    /// Vertical spacing of the aligned slots, `1/N`.
    pub fn slot_spacing(&self) -> T {
        T::one() / T::lit(self.num_cells as f64)
    }

    /// Radius of the ball inscribed in a grid cell, `(1−θ)/(2n)`.
    pub fn inscribed_radius(&self) -> T {
        (T::one() - self.theta) / (T::lit(2.0) * T::from_count(self.n))
    }

    pub fn cell_width(&self) -> T {
        T::one() / T::from_count(self.n)
    }

    /// `√(m+1)`, the diameter of the unit cube.
    pub fn cube_diameter(&self) -> T {
        T::from_count(self.m + 1).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let half = T::lit(0.5);
        if self.mode != Mode::Toy && !(self.m + 1 <= self.k && self.k + 1 < 2 * self.m) {
            return Err(Error::DimensionHypothesisViolated {
                m: self.m,
                k: self.k,
            });
        }
        if (self.n as u64).checked_pow((self.m + 1) as u32) != Some(self.num_cells) {
            return Err(Error::InvalidParameter("num_cells must equal n^(m+1)".into()));
        }
        if !(self.ball_radius > T::zero() && self.ball_radius < half) {
            return Err(Error::InvalidParameter("ball radius must lie in (0, 1/2)".into()));
        }
        if !(self.s > T::zero() && self.s < T::lit(0.25)) {
            return Err(Error::InvalidParameter("s must lie in (0, 1/4)".into()));
        }
        if !(self.theta > T::zero() && self.theta < T::one()) {
            return Err(Error::InvalidParameter("theta must lie in (0, 1)".into()));
        }
        if !(self.rho > T::zero()
            && self.rho + self.rho < self.slot_spacing()
            && self.rho < self.ball_radius)
        {
            return Err(Error::InvalidParameter(
                "rho must satisfy 0 < rho < ball_radius and 2 rho < 1/N".into(),
            ));
        }
        let gamma = T::one() / (T::from_count(self.n) * self.ball_radius);
        if (gamma - self.gamma).abs() > T::epsilon() * gamma {
            return Err(Error::InvalidParameter("gamma must equal (1/n)/ball_radius".into()));
        }
        if self.mode == Mode::Faithful && !(self.gamma < T::one()) {
            return Err(Error::NotContracting {
                gamma: self.gamma.to_f64_lossy(),
            });
        }
        // Volume comparison: N balls of radius r_b must fit inside (1/2)B^{k+1}.
        let d = (self.k + 1) as i32;
        let used = self.num_cells as f64 * self.ball_radius.to_f64_lossy().powi(d);
        let available = 0.5f64.powi(d);
        if used > available {
            return Err(Error::PackingInfeasible(format!(
                "volume: N r_b^(k+1) = {used:.6e} exceeds 2^-(k+1) = {available:.6e}"
            )));
        }
        let (src, dst) = self.sphere_map.dims();
        if src != self.k - 1 || dst + 1 != self.m {
            return Err(Error::InvalidParameter(format!(
                "sphere map {:?} has dims S^{src} -> S^{dst}, need S^{} -> S^{}",
                self.sphere_map,
                self.k - 1,
                self.m - 1
            )));
        }
        Ok(())
    }
}

/// Translation composed with a positive scaling, `x ↦ scale·x + translation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Similarity<T> {
    pub scale: T,
    pub translation: Vec<T>,
}

impl<T: Real> Similarity<T> {
    pub fn identity(dim: usize) -> Self {
        Self {
            scale: T::one(),
            translation: vec![T::zero(); dim],
        }
    }

    pub fn new(scale: T, translation: Vec<T>) -> Self {
        debug_assert!(scale > T::zero());
        Self { scale, translation }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(&self.translation)
            .map(|(&v, &t)| self.scale * v + t)
            .collect()
    }

    /// `x ↦ (x − translation) / scale`.
    pub fn apply_inverse(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(&self.translation)
            .map(|(&v, &t)| (v - t) / self.scale)
            .collect()
    }

    pub fn inverse(&self) -> Self {
        Self {
            scale: T::one() / self.scale,
            translation: self.translation.iter().map(|&t| -t / self.scale).collect(),
        }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Self) -> Self {
        Self {
            scale: self.scale * inner.scale,
            translation: inner
                .translation
                .iter()
                .zip(&self.translation)
                .map(|(&ti, &to)| self.scale * ti + to)
                .collect(),
        }
    }
}

/// Closed ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Ball<T> {
    pub center: Vec<T>,
    pub radius: T,
}

impl<T: Real> Ball<T> {
    pub fn new(center: Vec<T>, radius: T) -> Self {
        Self { center, radius }
    }

    pub fn unit(dim: usize) -> Self {
        Self::new(vec![T::zero(); dim], T::one())
    }

    pub fn contains(&self, x: &[T]) -> bool {
        dist(&self.center, x) <= self.radius
    }

    /// Whether `other` lies in the interior of `self`.
    pub fn strictly_contains(&self, other: &Ball<T>) -> bool {
        dist(&self.center, &other.center) + other.radius < self.radius
    }
}

/// Word `(j_1, …, j_d)` of zero-based first-generation indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct CantorAddress(pub Vec<usize>);

impl CantorAddress {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn push(&mut self, i: usize) {
        self.0.push(i);
    }

    pub fn child(&self, i: usize) -> Self {
        let mut w = self.0.clone();
        w.push(i);
        Self(w)
    }

    pub fn is_prefix_of(&self, other: &Self) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl std::fmt::Display for CantorAddress {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// First-generation balls, aligned axis slots and the grid they are assigned to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BallLayout<T> {
    pub centers: Vec<Vec<T>>,
    pub radius: T,
    /// Heights `t_i` of the aligned balls `(0, …, 0, t_i)`.
    pub slots: Vec<T>,
    pub aligned_centers: Vec<Vec<T>>,
    pub aligned_radius: T,
    pub cell_centers: Vec<Vec<T>>,
    /// Cell multi-index of ball `i` (ball `i` is assigned to cell `i` in lexicographic order).
    pub assignment: Vec<Vec<usize>>,
    /// Lattice pitch used for the centers.
    pub pitch: T,
}

/// Places the `N` first-generation balls on a centered axis-aligned lattice in the
/// hyperplane `x_{k+1} = 0`, then validates disjointness and containment.
pub fn pack_balls<T: Real>(params: &InstanceParams<T>) -> Result<BallLayout<T>> {
    if params.num_cells > MAX_ENUMERATED_BALLS {
        return Err(Error::InvalidParameter(format!(
            "{} balls is too many to enumerate (limit {MAX_ENUMERATED_BALLS})",
            params.num_cells
        )));
    }
    let count = params.num_cells as usize;
    let k = params.k;
    let dim = params.domain_dim();
    let r = params.ball_radius;
    let half = T::lit(0.5);

    // Smallest lattice side p with p^k >= N.
    let mut side = 1usize;
    while (side as u64).checked_pow(k as u32).map_or(false, |v| v < params.num_cells) {
        side += 1;
    }
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(side.pow(k as u32));
    let offset = (side as f64 - 1.0) / 2.0;
    let mut idx = vec![0usize; k];
    loop {
        points.push(idx.iter().map(|&j| j as f64 - offset).collect());
        let mut a = k;
        let mut done = true;
        while a > 0 {
            a -= 1;
            idx[a] += 1;
            if idx[a] < side {
                done = false;
                break;
            }
            idx[a] = 0;
        }
        if done {
            break;
        }
    }
    // Stable sort by norm keeps lexicographic order among equal norms.
    points.sort_by(|a, b| {
        let na: f64 = a.iter().map(|v| v * v).sum();
        let nb: f64 = b.iter().map(|v| v * v).sum();
        na.partial_cmp(&nb).unwrap_or(std::cmp::Ordering::Equal)
    });
    points.truncate(count);
    let max_unit = points
        .iter()
        .map(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);

    let min_pitch = r + r;
    let pitch = if max_unit == 0.0 {
        min_pitch
    } else {
        let max_pitch = (half - r) / T::lit(max_unit);
        if !(max_pitch > min_pitch) {
            return Err(Error::PackingInfeasible(format!(
                "lattice pitch {} cannot exceed ball diameter {} inside radius 1/2 - r_b",
                max_pitch, min_pitch
            )));
        }
        min_pitch + T::lit(0.4) * (max_pitch - min_pitch)
    };
    let centers: Vec<Vec<T>> = points
        .iter()
        .map(|p| {
            let mut c: Vec<T> = p.iter().map(|&v| pitch * T::lit(v)).collect();
            c.push(T::zero());
            c
        })
        .collect();

    let spacing = params.slot_spacing();
    let slots: Vec<T> = (0..count)
        .map(|i| -half + (T::from_count(i) + half) * spacing)
        .collect();
    let aligned_centers = slots
        .iter()
        .map(|&t| {
            let mut a = vec![T::zero(); dim];
            a[dim - 1] = t;
            a
        })
        .collect();

    let n = params.n;
    let cells = params.image_dim();
    let width = params.cell_width();
    let mut assignment = Vec::with_capacity(count);
    let mut cell_centers = Vec::with_capacity(count);
    for i in 0..count {
        let mut multi = vec![0usize; cells];
        let mut rem = i;
        for a in (0..cells).rev() {
            multi[a] = rem % n;
            rem /= n;
        }
        cell_centers.push(
            multi
                .iter()
                .map(|&j| -half + (T::from_count(j) + half) * width)
                .collect(),
        );
        assignment.push(multi);
    }

    let layout = BallLayout {
        centers,
        radius: r,
        slots,
        aligned_centers,
        aligned_radius: params.rho,
        cell_centers,
        assignment,
        pitch,
    };
    layout.validate()?;
    Ok(layout)
}

impl<T: Real> BallLayout<T> {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn ball(&self, i: usize) -> Ball<T> {
        Ball::new(self.centers[i].clone(), self.radius)
    }

    /// Checks containment in `(1/2)B^{k+1}` and pairwise disjointness of both ball families.
    pub fn validate(&self) -> Result<()> {
        let half = T::lit(0.5);
        let tol = T::lit(1e-12);
        for (i, c) in self.centers.iter().enumerate() {
            if norm(c) > half - self.radius + tol {
                return Err(Error::PackingInfeasible(format!(
                    "ball {i} leaves the half ball (|c| = {})",
                    norm(c)
                )));
            }
        }
        for i in 0..self.centers.len() {
            for j in (i + 1)..self.centers.len() {
                let d = dist(&self.centers[i], &self.centers[j]);
                if !(d > self.radius + self.radius) {
                    return Err(Error::PackingInfeasible(format!(
                        "balls {i} and {j} overlap (distance {d})"
                    )));
                }
            }
        }
        for (i, a) in self.aligned_centers.iter().enumerate() {
            if norm(a) + self.aligned_radius > half {
                return Err(Error::PackingInfeasible(format!(
                    "aligned ball {i} leaves the half ball"
                )));
            }
            if let Some(b) = self.aligned_centers.get(i + 1) {
                if !(dist(a, b) > self.aligned_radius + self.aligned_radius) {
                    return Err(Error::PackingInfeasible(format!(
                        "aligned balls {i} and {} overlap",
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Index of the first-generation ball containing `x` (closed balls).
    pub fn locate(&self, x: &[T]) -> Option<usize> {
        let r2 = self.radius * self.radius;
        self.centers.iter().position(|c| {
            c.iter()
                .zip(x)
                .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b))
                <= r2
        })
    }
}

/// Domain similarity `σ_i` (onto ball `i`) and image similarity `τ_i` (onto cell `i`).
pub fn child_similarities<T: Real>(
    params: &InstanceParams<T>,
    layout: &BallLayout<T>,
    i: usize,
) -> (Similarity<T>, Similarity<T>) {
    (
        Similarity::new(layout.radius, layout.centers[i].clone()),
        Similarity::new(params.cell_width(), layout.cell_centers[i].clone()),
    )
}

/// `Σ = σ_{j_1} ∘ … ∘ σ_{j_d}` and `T = τ_{j_1} ∘ … ∘ τ_{j_d}` for an address.
pub fn address_similarities<T: Real>(
    params: &InstanceParams<T>,
    layout: &BallLayout<T>,
    address: &CantorAddress,
) -> (Similarity<T>, Similarity<T>) {
    let mut sigma = Similarity::identity(params.domain_dim());
    let mut tau = Similarity::identity(params.image_dim());
    for &j in &address.0 {
        let (s, t) = child_similarities(params, layout, j);
        sigma = sigma.compose(&s);
        tau = tau.compose(&t);
    }
    (sigma, tau)
}

/// The closed ball `Σ_address(B̄^{k+1})`.
pub fn address_to_ball<T: Real>(
    params: &InstanceParams<T>,
    layout: &BallLayout<T>,
    address: &CantorAddress,
) -> Ball<T> {
    let (sigma, _) = address_similarities(params, layout, address);
    Ball::new(sigma.translation.clone(), sigma.scale)
}

/// Center of the address ball; within `r_b^d` of the Cantor set.
pub fn cantor_point<T: Real>(
    params: &InstanceParams<T>,
    layout: &BallLayout<T>,
    address: &CantorAddress,
) -> Vec<T> {
    address_to_ball(params, layout, address).center
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn faithful_large_grid_has_gamma_half() {
        let p = make_instance(3, 4, 1024, 2.0 / 1024.0, 0.05, Mode::Faithful, 0).unwrap();
        assert_eq!(p.gamma, 0.5);
        assert_eq!(p.num_cells, 1024u64.pow(4));
        assert!(matches!(pack_balls(&p), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn desk_accepts_expanding_ratio() {
        let p = make_instance::<f64>(3, 4, 2, 0.15, 0.05, Mode::Desk, 0).unwrap();
        assert!((p.gamma - 0.5 / 0.15).abs() < 1e-15);
        assert!((p.gamma - 3.333).abs() < 1e-3);
        assert!(matches!(
            make_instance(3, 4, 2, 0.15, 0.05, Mode::Faithful, 0),
            Err(Error::NotContracting { .. })
        ));
    }

    #[test]
    fn dimension_hypothesis() {
        assert_eq!(
            make_instance(3, 5, 2, 0.15, 0.05, Mode::Desk, 0).unwrap_err(),
            Error::DimensionHypothesisViolated { m: 3, k: 5 }
        );
        assert!(make_instance(2, 2, 2, 0.12f64, 0.05, Mode::Toy, 0).is_ok());
        assert!(make_instance(2, 2, 2, 0.12f64, 0.05, Mode::Desk, 0).is_err());
    }

    #[test]
    fn desk_lattice_matches_corner_layout() {
        let p = InstanceParams::<f64>::desk_default(7);
        let layout = pack_balls(&p).unwrap();
        assert_eq!(layout.len(), 16);
        for c in &layout.centers {
            assert_eq!(c.len(), 5);
            assert_eq!(c[4], 0.0);
            for &v in &c[..4] {
                assert!((v.abs() - 0.16).abs() < 1e-15, "coordinate {v}");
            }
        }
    }

    #[test]
    fn oversized_balls_are_infeasible() {
        let err = make_instance(3, 4, 2, 0.3, 0.05, Mode::Desk, 0).unwrap_err();
        assert!(matches!(err, Error::PackingInfeasible(_)));
    }

    #[test]
    fn similarity_algebra() {
        let a = Similarity::new(0.5, vec![1.0, -2.0]);
        let b = Similarity::new(3.0, vec![0.25, 0.5]);
        let x = [0.3, 0.7];
        let ab = a.compose(&b);
        let direct = a.apply(&b.apply(&x));
        let composed = ab.apply(&x);
        assert!(dist(&direct, &composed) < 1e-15);
        assert!(dist(&a.inverse().apply(&a.apply(&x)), &x) < 1e-15);
        assert!(dist(&a.apply_inverse(&a.apply(&x)), &x) < 1e-15);
    }

    #[test]
    fn address_scales() {
        let p = InstanceParams::<f64>::desk_default(7);
        let layout = pack_balls(&p).unwrap();
        let (s, t) = address_similarities(&p, &layout, &CantorAddress(vec![3, 9]));
        assert!((s.scale - 0.15 * 0.15).abs() < 1e-17);
        assert_eq!(t.scale, 0.25);
        let unit = address_to_ball(&p, &layout, &CantorAddress::empty());
        assert_eq!(unit, Ball::unit(5));
        let b = address_to_ball(&p, &layout, &CantorAddress(vec![5]));
        assert_eq!(b.center, layout.centers[5]);
        assert_eq!(b.radius, 0.15);
    }
}
