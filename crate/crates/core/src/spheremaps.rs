//! Sphere maps `h: S^{k−1} → S^{m−1}`, their suspension, the central projection onto
//! the cube boundary, and a fiber-linking certificate of non-triviality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{fd_jacobian, Matrix};
use crate::scalar::{dot, max_norm, norm, Real};

/// Built-in non-nullhomotopic sphere maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereMapKind {
    /// `S³ → S²`, `(a,b,c,d) ↦ (2(ac+bd), 2(bc−ad), a²+b²−c²−d²)`.
    Hopf,
    /// `S¹ → S¹`, `z ↦ z^d`.
    CircleDegree(i32),
    /// The Hopf map suspended `j` times, `S^{3+j} → S^{2+j}`.
    SuspendedHopf(u32),
}

impl SphereMapKind {
    /// Default map for a domain sphere `S^{k−1}` and target `S^{m−1}`.
    pub fn default_for(k: usize, m: usize) -> Option<Self> {
        match (k, m) {
            (4, 3) => Some(Self::Hopf),
            (2, 2) => Some(Self::CircleDegree(2)),
            (k, m) if k == m + 1 && m > 3 => Some(Self::SuspendedHopf((m - 3) as u32)),
            _ => None,
        }
    }

    /// `(source sphere dim, target sphere dim)`.
    pub fn dims(&self) -> (usize, usize) {
        match *self {
            Self::Hopf => (3, 2),
            Self::CircleDegree(_) => (1, 1),
            Self::SuspendedHopf(j) => (3 + j as usize, 2 + j as usize),
        }
    }

    pub fn source_ambient(&self) -> usize {
        self.dims().0 + 1
    }

    pub fn target_ambient(&self) -> usize {
        self.dims().1 + 1
    }

    /// Evaluates on a unit vector, rejecting inputs off the sphere.
    pub fn eval<T: Real>(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.source_ambient() {
            return Err(Error::InvalidParameter(format!(
                "sphere map expects {} coordinates, got {}",
                self.source_ambient(),
                x.len()
            )));
        }
        check_unit(x)?;
        Ok(self.eval_unchecked(x))
    }

    /// Evaluates without the sphere check; callers pass unit vectors.
    pub fn eval_unchecked<T: Real>(&self, x: &[T]) -> Vec<T> {
        match *self {
            Self::Hopf => hopf_unchecked(x).to_vec(),
            Self::CircleDegree(d) => circle_power(x, d),
            Self::SuspendedHopf(0) => hopf_unchecked(x).to_vec(),
            Self::SuspendedHopf(j) => {
                suspend_unchecked(&Self::SuspendedHopf(j - 1), x)
            }
        }
    }
}

impl SphereMapKind {
    /// A point `x` on the source sphere with `h(x) = y`.
    pub fn preimage<T: Real>(&self, y: &[T]) -> Result<Vec<T>> {
        if y.len() != self.target_ambient() {
            return Err(Error::InvalidParameter("target dimension mismatch".into()));
        }
        check_unit(y)?;
        Ok(match *self {
            Self::Hopf | Self::SuspendedHopf(0) => hopf_preimage(y).to_vec(),
            Self::CircleDegree(d) => {
                if d == 0 {
                    return Err(Error::InvalidParameter("constant map is not surjective".into()));
                }
                let th = y[1].atan2(y[0]) / T::lit(d as f64);
                vec![th.cos(), th.sin()]
            }
            Self::SuspendedHopf(j) => {
                let inner = Self::SuspendedHopf(j - 1);
                let (w, t) = y.split_at(y.len() - 1);
                let r = norm(w);
                let mut out = if r > T::zero() {
                    let unit: Vec<T> = w.iter().map(|&v| v / r).collect();
                    inner.preimage(&unit)?.into_iter().map(|v| v * r).collect()
                } else {
                    vec![T::zero(); inner.source_ambient()]
                };
                out.push(t[0]);
                out
            }
        })
    }
}

/// A point on `S^k` mapped to `v ∈ S^m` by `suspend(h)`.
pub fn suspension_preimage<T: Real>(h: &SphereMapKind, v: &[T]) -> Result<Vec<T>> {
    let (w, t) = v.split_at(v.len() - 1);
    let r = norm(w);
    let mut out = if r > T::zero() {
        let unit: Vec<T> = w.iter().map(|&x| x / r).collect();
        h.preimage(&unit)?.into_iter().map(|x| x * r).collect()
    } else {
        vec![T::zero(); h.source_ambient()]
    };
    out.push(t[0]);
    Ok(out)
}

fn sphere_tol<T: Real>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(100.0))
}

fn check_unit<T: Real>(x: &[T]) -> Result<()> {
    let n = norm(x);
    if (n - T::one()).abs() > sphere_tol::<T>() {
        return Err(Error::NotOnSphere {
            norm: n.to_f64_lossy(),
        });
    }
    Ok(())
}

fn hopf_unchecked<T: Real>(p: &[T]) -> [T; 3] {
    let two = T::lit(2.0);
    let (a, b, c, d) = (p[0], p[1], p[2], p[3]);
    [
        two * (a * c + b * d),
        two * (b * c - a * d),
        a * a + b * b - c * c - d * d,
    ]
}

/// The Hopf map on a unit vector of `R⁴`.
pub fn hopf<T: Real>(p: &[T]) -> Result<[T; 3]> {
    if p.len() != 4 {
        return Err(Error::InvalidParameter("Hopf map expects 4 coordinates".into()));
    }
    check_unit(p)?;
    Ok(hopf_unchecked(p))
}

fn circle_power<T: Real>(x: &[T], d: i32) -> Vec<T> {
    let angle = x[1].atan2(x[0]) * T::lit(d as f64);
    vec![angle.cos(), angle.sin()]
}

fn suspend_unchecked<T: Real>(h: &SphereMapKind, x: &[T]) -> Vec<T> {
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

/// Suspension `(w, t) ↦ (|w|·h(w/|w|), t)` on the unit sphere of `R^{k+1}`.
pub fn suspend<T: Real>(h: &SphereMapKind, x: &[T]) -> Result<Vec<T>> {
    if x.len() != h.source_ambient() + 1 {
        return Err(Error::InvalidParameter(format!(
            "suspension expects {} coordinates, got {}",
            h.source_ambient() + 1,
            x.len()
        )));
    }
    check_unit(x)?;
    Ok(suspend_unchecked(h, x))
}

/// Central projection `u ↦ u / (2‖u‖_∞)` onto the boundary of `[−½, ½]^{m+1}`.
pub fn cubify<T: Real>(u: &[T]) -> Result<Vec<T>> {
    let mx = max_norm(u);
    if !(mx > T::zero()) {
        return Err(Error::ZeroVector);
    }
    let scale = T::lit(2.0) * mx;
    Ok(u.iter().map(|&v| v / scale).collect())
}

/// `φ = cubify ∘ suspend(h)`: the boundary values of the constructed map.
pub fn phi<T: Real>(h: &SphereMapKind, x: &[T]) -> Result<Vec<T>> {
    cubify(&suspend(h, x)?)
}

/// Sampled fiber `h⁻¹(target)`: a closed curve, or the discrete fiber of a circle map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FiberCurve<T> {
    pub params: Vec<T>,
    pub points: Vec<Vec<T>>,
    pub closed: bool,
}

impl<T: Real> FiberCurve<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same curve traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        let mut params = self.params.clone();
        params.reverse();
        Self {
            params,
            points,
            closed: self.closed,
        }
    }

    /// Maximum `|h(p) − target|` over the samples.
    pub fn residual(&self, h: &SphereMapKind, target: &[T]) -> T {
        self.points
            .iter()
            .map(|p| {
                let v = h.eval_unchecked(p);
                v.iter()
                    .zip(target)
                    .fold(T::zero(), |a, (&x, &y)| a + (x - y) * (x - y))
                    .sqrt()
            })
            .fold(T::zero(), T::max)
    }

    /// CSV with header `theta,x1,…,xd`.
    pub fn to_csv(&self) -> String {
        let dim = self.points.first().map_or(0, Vec::len);
        let mut out = String::from("theta");
        for i in 1..=dim {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for (t, p) in self.params.iter().zip(&self.points) {
            out.push_str(&format!("{}", t.to_f64_lossy()));
            for v in p {
                out.push_str(&format!(",{}", v.to_f64_lossy()));
            }
            out.push('\n');
        }
        out
    }
}

/// Closed-form Hopf fiber over a unit `target ∈ S²`: the orbit `e^{iθ}·p₀`.
pub fn hopf_fiber<T: Real>(target: &[T], n_samples: usize) -> Result<FiberCurve<T>> {
    if target.len() != 3 {
        return Err(Error::InvalidParameter("Hopf target must lie in R³".into()));
    }
    check_unit(target)?;
    let p0 = hopf_preimage(target);
    let tau = T::lit(std::f64::consts::TAU);
    let mut params = Vec::with_capacity(n_samples);
    let mut points = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let th = tau * T::from_count(i) / T::from_count(n_samples);
        let (s, c) = th.sin_cos();
        points.push(vec![
            p0[0] * c - p0[1] * s,
            p0[0] * s + p0[1] * c,
            p0[2] * c - p0[3] * s,
            p0[2] * s + p0[3] * c,
        ]);
        params.push(th);
    }
    Ok(FiberCurve {
        params,
        points,
        closed: true,
    })
}

/// A point `p₀ ∈ S³` with `hopf(p₀) = q`.
fn hopf_preimage<T: Real>(q: &[T]) -> [T; 4] {
    let half = T::lit(0.5);
    let (x, y, z) = (q[0], q[1], q[2]);
    // |z1|² = (1+z)/2, |z2|² = (1−z)/2, z1·conj(z2) = (x + i y)/2.
    if z > -T::one() + T::lit(1e-12) {
        let a = ((T::one() + z) * half).sqrt();
        // z2 = conj((x + i y) / (2 a)) with z1 = a real.
        let c = x / (a + a);
        let d = -y / (a + a);
        [a, T::zero(), c, d]
    } else {
        [T::zero(), T::zero(), T::one(), T::zero()]
    }
}

/// Traces `h⁻¹(target)` by predictor–corrector continuation and resamples it at
/// `n_samples` points equally spaced in arc length. Circle maps return their
/// discrete fiber instead.
pub fn trace_fiber<T: Real>(
    h: &SphereMapKind,
    target: &[T],
    n_samples: usize,
) -> Result<FiberCurve<T>> {
    if target.len() != h.target_ambient() {
        return Err(Error::InvalidParameter("target dimension mismatch".into()));
    }
    check_unit(target)?;
    if let SphereMapKind::CircleDegree(d) = *h {
        if d == 0 {
            return Err(Error::TraceDiverged("constant circle map has no regular value".into()));
        }
        let base = target[1].atan2(target[0]);
        let count = d.unsigned_abs() as usize;
        let tau = T::lit(std::f64::consts::TAU);
        let mut params = Vec::with_capacity(count);
        let mut points = Vec::with_capacity(count);
        for j in 0..count {
            let th = (base + tau * T::from_count(j)) / T::lit(d as f64);
            params.push(th);
            points.push(vec![th.cos(), th.sin()]);
        }
        return Ok(FiberCurve {
            params,
            points,
            closed: false,
        });
    }
    let (src, dst) = h.dims();
    if src != dst + 1 {
        return Err(Error::TraceDiverged("fiber is not one-dimensional".into()));
    }
    trace_curve(h, target, n_samples.max(8))
}

fn constraint<T: Real>(h: &SphereMapKind, target: &[T], x: &[T]) -> Vec<T> {
    let nx = norm(x);
    let unit: Vec<T> = x.iter().map(|&v| v / nx).collect();
    let mut g: Vec<T> = h
        .eval_unchecked(&unit)
        .iter()
        .zip(target)
        .map(|(&a, &b)| a - b)
        .collect();
    g.push(dot(x, x) - T::one());
    g
}

fn constraint_jacobian<T: Real>(h: &SphereMapKind, target: &[T], x: &[T]) -> Result<Matrix<T>> {
    fd_jacobian(|p: &[T]| Ok(constraint(h, target, p)), x, T::lit(1e-7))
}

/// Minimal-norm Gauss–Newton projection onto the fiber; optionally constrained to the
/// hyperplane `⟨tangent, x − anchor⟩ = 0`.
fn correct<T: Real>(
    h: &SphereMapKind,
    target: &[T],
    start: &[T],
    plane: Option<(&[T], &[T])>,
) -> Result<Vec<T>> {
    let mut x = start.to_vec();
    let dim = x.len();
    for _ in 0..50 {
        let mut g = constraint(h, target, &x);
        let mut jac = constraint_jacobian(h, target, &x)?;
        if let Some((tangent, anchor)) = plane {
            let diff: Vec<T> = x.iter().zip(anchor).map(|(&a, &b)| a - b).collect();
            g.push(dot(tangent, &diff));
            let mut rows = jac.to_rows();
            rows.push(tangent.to_vec());
            jac = Matrix::from_rows(&rows);
        }
        let res = norm(&g);
        if res < T::lit(1e-13) {
            return Ok(x);
        }
        // Δ = −Jᵀ (J Jᵀ + λI)⁻¹ g
        let jt = jac.transpose();
        let mut jjt = jac.mul(&jt);
        let lambda = T::lit(1e-12);
        for i in 0..jjt.rows() {
            jjt[(i, i)] = jjt[(i, i)] + lambda;
        }
        let inv = jjt
            .inverse()
            .ok_or_else(|| Error::TraceDiverged("singular corrector system".into()))?;
        let y: Vec<T> = (0..inv.rows()).map(|i| dot(inv.row(i), &g)).collect();
        for j in 0..dim {
            let step = dot(&jt.row(j).to_vec(), &y);
            x[j] = x[j] - step;
        }
    }
    let res = norm(&constraint(h, target, &x));
    if res < T::lit(1e-10) {
        Ok(x)
    } else {
        Err(Error::TraceDiverged(format!("corrector residual {res}")))
    }
}

/// Unit null vector of the constraint Jacobian, oriented along `reference`.
fn tangent<T: Real>(h: &SphereMapKind, target: &[T], x: &[T], reference: &[T]) -> Result<Vec<T>> {
    let jac = constraint_jacobian(h, target, x)?;
    let mut basis: Vec<Vec<T>> = Vec::new();
    for i in 0..jac.rows() {
        let mut r = jac.row(i).to_vec();
        for b in &basis {
            let c = dot(&r, b);
            for (rv, &bv) in r.iter_mut().zip(b) {
                *rv = *rv - c * bv;
            }
        }
        let n = norm(&r);
        if n > T::lit(1e-6) {
            basis.push(r.iter().map(|&v| v / n).collect());
        }
    }
    let mut t = reference.to_vec();
    for _ in 0..2 {
        for b in &basis {
            let c = dot(&t, b);
            for (tv, &bv) in t.iter_mut().zip(b) {
                *tv = *tv - c * bv;
            }
        }
    }
    let n = norm(&t);
    if n < T::lit(1e-8) {
        return Err(Error::TraceDiverged("degenerate tangent".into()));
    }
    Ok(t.iter().map(|&v| v / n).collect())
}

fn trace_curve<T: Real>(h: &SphereMapKind, target: &[T], n_samples: usize) -> Result<FiberCurve<T>> {
    let dim = h.source_ambient();
    // Deterministic starting guesses.
    let mut start = None;
    for s in 0..dim * 4 {
        let guess: Vec<T> = (0..dim)
            .map(|i| T::lit(((i * 7 + s * 3) % 11) as f64 - 5.0 + 0.37 * i as f64))
            .collect();
        let n = norm(&guess);
        if n == T::zero() {
            continue;
        }
        let guess: Vec<T> = guess.iter().map(|&v| v / n).collect();
        if let Ok(x) = correct(h, target, &guess, None) {
            start = Some(x);
            break;
        }
    }
    let x0 = start.ok_or_else(|| Error::TraceDiverged("no preimage found".into()))?;
    let step = T::lit(std::f64::consts::TAU) / T::from_count(4 * n_samples);
    let generic: Vec<T> = (0..dim).map(|i| T::lit(0.3 + 0.1 * i as f64)).collect();
    let mut t = tangent(h, target, &x0, &generic)?;
    let mut pts = vec![x0.clone()];
    let mut x = x0.clone();
    let mut travelled = T::zero();
    let max_steps = 400 * n_samples;
    loop {
        let pred: Vec<T> = x.iter().zip(&t).map(|(&a, &b)| a + step * b).collect();
        let next = correct(h, target, &pred, Some((&t, &pred)))?;
        let seg = crate::scalar::dist(&next, &x);
        if seg > step * T::lit(3.0) {
            return Err(Error::TraceDiverged("corrector jumped branches".into()));
        }
        travelled = travelled + seg;
        t = tangent(h, target, &next, &t)?;
        x = next;
        let back = crate::scalar::dist(&x, &x0);
        if travelled > step * T::lit(8.0) && back < step * T::lit(1.01) {
            break;
        }
        pts.push(x.clone());
        if pts.len() > max_steps {
            return Err(Error::TraceDiverged("fiber did not close".into()));
        }
    }
    // Resample by arc length on the closed polygon.
    let m = pts.len();
    let mut cum = vec![T::zero(); m + 1];
    for i in 0..m {
        cum[i + 1] = cum[i] + crate::scalar::dist(&pts[i], &pts[(i + 1) % m]);
    }
    let total = cum[m];
    let tau = T::lit(std::f64::consts::TAU);
    let mut params = Vec::with_capacity(n_samples);
    let mut points = Vec::with_capacity(n_samples);
    let mut seg = 0usize;
    for j in 0..n_samples {
        let s = total * T::from_count(j) / T::from_count(n_samples);
        while cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let f = if len > T::zero() { (s - cum[seg]) / len } else { T::zero() };
        let (a, b) = (&pts[seg], &pts[(seg + 1) % m]);
        let guess: Vec<T> = a.iter().zip(b).map(|(&p, &q)| p + f * (q - p)).collect();
        let proj = correct(h, target, &guess, None)?;
        points.push(proj);
        params.push(tau * s / total);
    }
    let curve = FiberCurve {
        params,
        points,
        closed: true,
    };
    if curve.residual(h, target) > T::lit(1e-8) {
        return Err(Error::TraceDiverged("resampled curve left the fiber".into()));
    }
    Ok(curve)
}

/// Outcome of the Gauss linking integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkingResult {
    pub value: i64,
    pub raw: f64,
    pub pole: [f64; 4],
}

impl LinkingResult {
    pub fn rounding_error(&self) -> f64 {
        (self.raw - self.value as f64).abs()
    }
}

/// Stereographic projection from the unit `pole` onto an orthonormal frame of `pole^⊥`.
pub fn stereographic(pole: &[f64; 4], x: &[f64]) -> Result<[f64; 3]> {
    let frame = complement_frame(pole);
    let c = x.iter().zip(pole).map(|(a, b)| a * b).sum::<f64>();
    let denom = 1.0 - c;
    if denom < 1e-9 {
        return Err(Error::ProjectionPoleOnCurve);
    }
    let mut out = [0.0; 3];
    for (o, f) in out.iter_mut().zip(&frame) {
        *o = x.iter().zip(f).map(|(a, b)| a * b).sum::<f64>() / denom;
    }
    Ok(out)
}

fn complement_frame(pole: &[f64; 4]) -> [[f64; 4]; 3] {
    let mut frame: Vec<[f64; 4]> = Vec::with_capacity(3);
    for e in 0..4 {
        let mut v = [0.0; 4];
        v[e] = 1.0;
        for b in std::iter::once(pole).chain(frame.iter()) {
            let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 && frame.len() < 3 {
            frame.push(v.map(|x| x / n));
        }
    }
    [frame[0], frame[1], frame[2]]
}

/// Discretised Gauss double integral `(1/4π)∮∮ (r₁−r₂)·(dr₁×dr₂)/|r₁−r₂|³` over two
/// closed polygons in `R³` (midpoint rule on segments).
pub fn gauss_linking_integral(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    let segs = |c: &[[f64; 3]]| -> Vec<([f64; 3], [f64; 3])> {
        (0..c.len())
            .map(|i| {
                let (p, q) = (c[i], c[(i + 1) % c.len()]);
                (
                    [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, (p[2] + q[2]) / 2.0],
                    [q[0] - p[0], q[1] - p[1], q[2] - p[2]],
                )
            })
            .collect()
    };
    let (sa, sb) = (segs(a), segs(b));
    let mut total = 0.0;
    for (ra, ta) in &sa {
        for (rb, tb) in &sb {
            let d = [ra[0] - rb[0], ra[1] - rb[1], ra[2] - rb[2]];
            let cross = [
                ta[1] * tb[2] - ta[2] * tb[1],
                ta[2] * tb[0] - ta[0] * tb[2],
                ta[0] * tb[1] - ta[1] * tb[0],
            ];
            let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            total += (d[0] * cross[0] + d[1] * cross[1] + d[2] * cross[2]) / (r2 * r2.sqrt());
        }
    }
    total / (4.0 * std::f64::consts::PI)
}

fn min_pair_distance(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    let mut best = f64::INFINITY;
    for p in a {
        for q in b {
            let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
            best = best.min(d);
        }
    }
    best
}

fn max_segment(c: &[[f64; 3]]) -> f64 {
    (0..c.len())
        .map(|i| {
            let (p, q) = (c[i], c[(i + 1) % c.len()]);
            ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Linking number of two closed curves. Curves in `S³ ⊂ R⁴` are first projected
/// stereographically from `pole`; curves in `R³` are used as given.
pub fn linking_number_with_pole<T: Real>(
    c1: &FiberCurve<T>,
    c2: &FiberCurve<T>,
    pole: [f64; 4],
) -> Result<LinkingResult> {
    if !c1.closed || !c2.closed || c1.len() < 3 || c2.len() < 3 {
        return Err(Error::InvalidParameter("linking needs two closed curves".into()));
    }
    let project = |c: &FiberCurve<T>| -> Result<Vec<[f64; 3]>> {
        c.points
            .iter()
            .map(|p| {
                let v: Vec<f64> = p.iter().map(|x| x.to_f64_lossy()).collect();
                match v.len() {
                    3 => Ok([v[0], v[1], v[2]]),
                    4 => {
                        let close = v.iter().zip(&pole).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
                        if close.sqrt() < 1e-3 {
                            return Err(Error::ProjectionPoleOnCurve);
                        }
                        stereographic(&pole, &v)
                    }
                    _ => Err(Error::InvalidParameter("curves must live in R³ or R⁴".into())),
                }
            })
            .collect()
    };
    let (a, b) = (project(c1)?, project(c2)?);
    let gap = min_pair_distance(&a, &b);
    if gap < 2.0 * max_segment(&a).max(max_segment(&b)) {
        return Err(Error::CurvesTooClose(gap));
    }
    let raw = gauss_linking_integral(&a, &b);
    Ok(LinkingResult {
        value: raw.round() as i64,
        raw,
        pole,
    })
}

/// Linking number with the projection pole chosen farthest from both curves among
/// a fixed candidate set.
pub fn linking_number<T: Real>(c1: &FiberCurve<T>, c2: &FiberCurve<T>) -> Result<LinkingResult> {
    let mut candidates: Vec<[f64; 4]> = Vec::new();
    for e in 0..4 {
        for s in [1.0, -1.0] {
            let mut p = [0.0; 4];
            p[e] = s;
            candidates.push(p);
        }
    }
    for bits in 0..16u32 {
        let p: [f64; 4] = std::array::from_fn(|i| if bits >> i & 1 == 1 { -0.5 } else { 0.5 });
        candidates.push(p);
    }
    let clearance = |p: &[f64; 4]| -> f64 {
        c1.points
            .iter()
            .chain(&c2.points)
            .map(|x| {
                x.iter()
                    .zip(p)
                    .map(|(a, b)| (a.to_f64_lossy() - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let dim = c1.points.first().map_or(0, Vec::len);
    let pole = if dim == 4 {
        candidates
            .iter()
            .copied()
            .max_by(|a, b| clearance(a).total_cmp(&clearance(b)))
            .expect("non-empty candidate list")
    } else {
        [0.0, 0.0, 0.0, 1.0]
    };
    linking_number_with_pole(c1, c2, pole)
}

/// Total turning of `h(cos θ, sin θ)` divided by `2π` for a circle map.
pub fn winding_number<T: Real>(h: &SphereMapKind, samples: usize) -> Result<i64> {
    if h.dims() != (1, 1) {
        return Err(Error::InvalidParameter("winding number needs a circle map".into()));
    }
    let tau = std::f64::consts::TAU;
    let mut total = 0.0;
    let at = |i: usize| -> f64 {
        let th = tau * i as f64 / samples as f64;
        let v = h.eval_unchecked(&[T::lit(th.cos()), T::lit(th.sin())]);
        v[1].to_f64_lossy().atan2(v[0].to_f64_lossy())
    };
    let mut prev = at(0);
    for i in 1..=samples {
        let cur = at(i % samples);
        let mut d = cur - prev;
        while d > std::f64::consts::PI {
            d -= tau;
        }
        while d < -std::f64::consts::PI {
            d += tau;
        }
        total += d;
        prev = cur;
    }
    Ok((total / tau).round() as i64)
}
