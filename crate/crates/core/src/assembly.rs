//! The assembled map: base map `F₀` outside the first-generation balls, the recursive
//! self-similar evaluator for `F`, finite-difference Jacobians, and the padded map
//! `f(x, y) = (F(Φ⁻¹(x)), 0)`.

use serde::{Deserialize, Serialize};

use crate::blocks::{axis_distance, axis_suspension_h, plan_g1, plan_g2, skeleton_project, RoutedPipeline, SkeletonBranch};
use crate::error::{Error, Result};
use crate::instance::{
    address_similarities, child_similarities, pack_balls, BallLayout, CantorAddress, InstanceParams, Similarity,
};
use crate::numerics::{fd_jacobian, JetSample};
use crate::scalar::{norm, Real};
use crate::spheremaps::phi;

/// A fully built construction: parameters, ball layout and the two routing pipelines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct Instance<T> {
    pub params: InstanceParams<T>,
    pub layout: BallLayout<T>,
    pub g1: RoutedPipeline<T>,
    pub g2: RoutedPipeline<T>,
}

/// Value of `F` with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EvalResult<T> {
    pub value: Vec<T>,
    /// Number of recursion levels descended (length of `address_path`).
    pub depth_used: usize,
    pub address_path: CantorAddress,
    /// Zero when resolved by the base map, `√(m+1)·n^{−depth_used}` when truncated.
    pub error_bound: T,
    pub truncated: bool,
    /// Skeleton branch of the base map (resolved values only).
    pub branch: Option<SkeletonBranch>,
    /// Distance of `G1(y)` from the vertical axis in local coordinates (resolved only).
    pub axis_distance: Option<T>,
}

/// Base-map value with the diagnostics needed to detect its non-smooth set.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseValue<T> {
    pub value: Vec<T>,
    pub branch: SkeletonBranch,
    pub axis_distance: T,
}

impl<T: Real> Instance<T> {
    pub fn build(params: InstanceParams<T>) -> Result<Self> {
        params.validate()?;
        let layout = pack_balls(&params)?;
        let g1 = plan_g1(&params, &layout)?;
        let g2 = plan_g2(&params, &layout)?;
        Ok(Self { params, layout, g1, g2 })
    }

    pub fn desk_default(seed: u64) -> Result<Self> {
        Self::build(InstanceParams::desk_default(seed))
    }

    pub fn toy_default(seed: u64) -> Result<Self> {
        Self::build(InstanceParams::toy_default(seed))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses an instance and checks it against a rebuild from its parameters.
    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(text)?;
        inst.params.validate()?;
        inst.layout.validate()?;
        let rebuilt = Self::build(inst.params.clone())?;
        if rebuilt != inst {
            return Err(Error::InvalidParameter(
                "instance layout or pipelines do not match its parameters".into(),
            ));
        }
        Ok(inst)
    }

    pub fn domain_dim(&self) -> usize {
        self.params.domain_dim()
    }

    pub fn image_dim(&self) -> usize {
        self.params.image_dim()
    }

    /// `σ_i`, `τ_i` for first-generation index `i`.
    pub fn child(&self, i: usize) -> (Similarity<T>, Similarity<T>) {
        child_similarities(&self.params, &self.layout, i)
    }

    pub fn address(&self, address: &CantorAddress) -> (Similarity<T>, Similarity<T>) {
        address_similarities(&self.params, &self.layout, address)
    }

    /// Boundary values `φ = cubify ∘ suspend(h)` on the unit sphere.
    pub fn phi(&self, x: &[T]) -> Result<Vec<T>> {
        phi(&self.params.sphere_map, x)
    }

    /// `τ_i(φ(σ_i⁻¹(x)))`, the values `F₀` must take on `∂B_i`.
    pub fn gluing_target(&self, i: usize, x: &[T]) -> Result<Vec<T>> {
        let (sigma, tau) = self.child(i);
        let mut u = sigma.apply_inverse(x);
        let r = norm(&u);
        if r > T::zero() {
            u.iter_mut().for_each(|v| *v = *v / r);
        }
        Ok(tau.apply(&self.phi(&u)?))
    }

    /// `skeleton_project ∘ G2 ∘ H ∘ G1` with branch diagnostics.
    pub fn base_map_traced(&self, x: &[T]) -> Result<BaseValue<T>> {
        if x.len() != self.domain_dim() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coordinates, got {}",
                self.domain_dim(),
                x.len()
            )));
        }
        let y = self.g1.forward(x);
        let z = axis_suspension_h(&y, &self.params.sphere_map);
        let w = self.g2.forward(&z);
        let (value, branch) = skeleton_project(&w, &self.params)?;
        Ok(BaseValue {
            value,
            branch,
            axis_distance: axis_distance(&y),
        })
    }

    /// The base map `F₀` on `B̄^{k+1}` minus the open first-generation balls.
    pub fn base_map_f0(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.base_map_traced(x)?.value)
    }

    /// Evaluates `F` by descending through the balls containing `x`; stops after
    /// `max_depth` descents and then returns the center of the address cell.
    pub fn eval_f(&self, x: &[T], max_depth: usize) -> Result<EvalResult<T>> {
        if x.len() != self.domain_dim() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coordinates, got {}",
                self.domain_dim(),
                x.len()
            )));
        }
        if norm(x) > T::one() + T::lit(1e-9) {
            return Err(Error::EvaluationFailed("point outside the closed unit ball".into()));
        }
        let mut y = x.to_vec();
        let mut address = CantorAddress::empty();
        let mut tau = Similarity::identity(self.image_dim());
        loop {
            match self.layout.locate(&y) {
                Some(i) => {
                    let (s, t) = self.child(i);
                    y = s.apply_inverse(&y);
                    tau = tau.compose(&t);
                    address.push(i);
                    if address.depth() > max_depth {
                        let depth_used = address.depth();
                        let bound = self.params.cube_diameter()
                            * T::from_count(self.params.n).powi(-(depth_used as i32));
                        return Ok(EvalResult {
                            value: tau.translation.clone(),
                            depth_used,
                            address_path: address,
                            error_bound: bound,
                            truncated: true,
                            branch: None,
                            axis_distance: None,
                        });
                    }
                }
                None => {
                    let base = self.base_map_traced(&y)?;
                    return Ok(EvalResult {
                        value: tau.apply(&base.value),
                        depth_used: address.depth(),
                        address_path: address,
                        error_bound: T::zero(),
                        truncated: false,
                        branch: Some(base.branch),
                        axis_distance: Some(base.axis_distance),
                    });
                }
            }
        }
    }

    /// Central finite-difference Jacobian of `F`, flagging stencils that touch a
    /// truncated cell, cross a generation boundary or skeleton ridge, or come within
    /// ten steps of the vertical axis.
    pub fn jacobian_f(&self, x: &[T], depth: usize, fd_step: T) -> Result<JetSample<T>> {
        let center = self.eval_f(x, depth)?;
        let mut stencil = Vec::with_capacity(2 * x.len());
        let jac = fd_jacobian(
            |p: &[T]| {
                let r = self.eval_f(p, depth)?;
                let v = r.value.clone();
                stencil.push(r);
                Ok(v)
            },
            x,
            fd_step,
        )?;
        let mut sample = JetSample::new(x.to_vec(), center.value.clone(), jac);
        sample.truncated = center.truncated || stencil.iter().any(|r| r.truncated);
        let local_step = fd_step * self.params.ball_radius.powi(-(center.depth_used as i32));
        let near_axis = |r: &EvalResult<T>| {
            r.axis_distance
                .map_or(false, |d| d < T::lit(10.0) * local_step)
        };
        sample.near_singular_set = sample.truncated
            || near_axis(&center)
            || stencil.iter().any(|r| {
                r.address_path != center.address_path || r.branch != center.branch || near_axis(r)
            });
        Ok(sample)
    }
}

/// Radial diffeomorphism `Φ` of the open unit ball onto `R^{k+1}`, identity on the
/// ball of radius `inner_radius`, together with the padding dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct PaddedMapSpec<T> {
    pub ell: usize,
    pub r: usize,
    pub inner_radius: T,
}

impl<T: Real> PaddedMapSpec<T> {
    pub fn new(ell: usize, r: usize, inner_radius: T) -> Self {
        Self { ell, r, inner_radius }
    }

    /// `ℓ = k+1`, `r = m+1`, identity radius ¾.
    pub fn standard(params: &InstanceParams<T>) -> Self {
        Self::new(params.domain_dim(), params.image_dim(), T::lit(0.75))
    }

    pub fn validate(&self, params: &InstanceParams<T>) -> Result<()> {
        if self.ell < params.domain_dim() || self.r < params.image_dim() {
            return Err(Error::InvalidParameter(format!(
                "padding needs l >= {} and r >= {}",
                params.domain_dim(),
                params.image_dim()
            )));
        }
        // The Cantor set lies in the half ball.
        if !(self.inner_radius >= T::lit(0.5) && self.inner_radius < T::one()) {
            return Err(Error::InvalidParameter("identity radius must lie in [1/2, 1)".into()));
        }
        Ok(())
    }

    /// Radial profile `ρ(t) = t + β(u)·u/(1−u)`, `u = (t − t₀)/(1 − t₀)`.
    pub fn profile(&self, t: T) -> T {
        let t0 = self.inner_radius;
        if t <= t0 {
            return t;
        }
        let u = (t - t0) / (T::one() - t0);
        t + crate::blocks::smoothstep(u) * u / (T::one() - u)
    }

    pub fn blowup(&self, x: &[T]) -> Result<Vec<T>> {
        let t = norm(x);
        if t >= T::one() {
            return Err(Error::InvalidParameter("blow-up is defined on the open unit ball".into()));
        }
        if t <= self.inner_radius {
            return Ok(x.to_vec());
        }
        let f = self.profile(t) / t;
        Ok(x.iter().map(|&v| v * f).collect())
    }

    pub fn blowup_inverse(&self, y: &[T]) -> Vec<T> {
        let s = norm(y);
        if s <= self.inner_radius {
            return y.to_vec();
        }
        let (mut lo, mut hi) = (self.inner_radius, T::one());
        for _ in 0..200 {
            let mid = (lo + hi) * T::lit(0.5);
            if self.profile(mid) < s {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= T::epsilon() {
                break;
            }
        }
        let t = (lo + hi) * T::lit(0.5);
        y.iter().map(|&v| v * t / s).collect()
    }
}

/// `f(x', y) = (F(Φ⁻¹(x')), 0, …, 0)` on `R^ℓ → R^r`.
pub fn pad_map_f<T: Real>(inst: &Instance<T>, spec: &PaddedMapSpec<T>, x: &[T], depth: usize) -> Result<Vec<T>> {
    spec.validate(&inst.params)?;
    if x.len() != spec.ell {
        return Err(Error::InvalidParameter(format!("expected {} coordinates", spec.ell)));
    }
    let inner = spec.blowup_inverse(&x[..inst.domain_dim()]);
    let mut out = inst.eval_f(&inner, depth)?.value;
    out.resize(spec.r, T::zero());
    Ok(out)
}

/// Orthogonal projection `R^r → R^{m+1}` dropping the padding coordinates.
pub fn project_pi<T: Real>(z: &[T], m: usize) -> Vec<T> {
    z[..(m + 1).min(z.len())].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::cantor_point;
    use crate::numerics::PointSampler;
    use crate::scalar::dist;

    fn desk() -> Instance<f64> {
        Instance::desk_default(7).unwrap()
    }

    #[test]
    fn sphere_values_are_phi() {
        let inst = desk();
        let mut rng = PointSampler::new(1);
        for _ in 0..200 {
            let x: Vec<f64> = rng.unit_vector(5);
            let r = inst.eval_f(&x, 3).unwrap();
            assert_eq!(r.depth_used, 0);
            assert_eq!(r.error_bound, 0.0);
            assert!(dist(&r.value, &inst.phi(&x).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn truncation_at_depth_zero_gives_cell_center() {
        let inst = desk();
        for i in [0usize, 5, 15] {
            let x = cantor_point(&inst.params, &inst.layout, &CantorAddress(vec![i]));
            let r = inst.eval_f(&x, 0).unwrap();
            assert!(r.truncated);
            assert_eq!(r.value, inst.layout.cell_centers[i]);
            assert!((r.error_bound - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gluing_on_ball_boundaries() {
        let inst = desk();
        let mut rng = PointSampler::new(3);
        for i in 0..inst.layout.len() {
            for _ in 0..50 {
                let x = rng.on_sphere(&inst.layout.centers[i], inst.layout.radius);
                let f0 = inst.base_map_f0(&x).unwrap();
                let target = inst.gluing_target(i, &x).unwrap();
                assert!(dist(&f0, &target) < 1e-12, "{f0:?} {target:?}");
            }
        }
    }

    #[test]
    fn axis_point_outside_balls() {
        let inst = desk();
        let x = [0.0, 0.0, 0.0, 0.0, 0.8];
        let r = inst.eval_f(&x, 2).unwrap();
        assert_eq!(r.depth_used, 0);
        assert_eq!(r.axis_distance, Some(0.0));
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = desk();
        let text = inst.to_json().unwrap();
        let back = Instance::<f64>::from_json(&text).unwrap();
        assert_eq!(back, inst);
        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        value["layout"]["pitch"] = serde_json::json!(0.33);
        let tampered = value.to_string();
        assert!(Instance::<f64>::from_json(&tampered).is_err());
    }

    #[test]
    fn blowup_round_trip_and_identity_core() {
        let spec = PaddedMapSpec::new(5, 4, 0.75f64);
        let x = [0.1, 0.2, -0.3, 0.1, 0.0];
        assert_eq!(spec.blowup(&x).unwrap(), x.to_vec());
        let far = [0.0, 0.9, 0.0, 0.3, 0.0];
        let y = spec.blowup(&far).unwrap();
        assert!(norm(&y) > norm(&far));
        assert!(dist(&spec.blowup_inverse(&y), &far) < 1e-14);
    }

    #[test]
    fn padded_map_ignores_extra_coordinates() {
        let inst = desk();
        let spec = PaddedMapSpec::new(7, 5, 0.75);
        let a = pad_map_f(&inst, &spec, &[0.1, 0.2, -0.3, 0.1, 0.2, 0.0, 0.0], 2).unwrap();
        let b = pad_map_f(&inst, &spec, &[0.1, 0.2, -0.3, 0.1, 0.2, 5.0, -3.0], 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert_eq!(a[4], 0.0);
        assert_eq!(project_pi(&a, 3).len(), 4);
    }
}
