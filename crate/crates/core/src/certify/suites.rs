//! Property suites over an instance.

use rayon::prelude::*;
use serde_json::json;

use super::{CertConfig, CertReport, ExclusionStats, NegativeControl, ReportBuilder, Suite};
use crate::assembly::Instance;
use crate::blocks::{axis_suspension_h, skeleton_distance, SkeletonBranch};
use crate::error::{Error, Result};
use crate::instance::{CantorAddress, Similarity};
use crate::numerics::{fd_jacobian, relative_singular_value, singular_values, PointSampler};
use crate::scalar::{dist, max_norm, Real};
use crate::spheremaps::{
    hopf_fiber, linking_number, suspension_preimage, trace_fiber, winding_number, FiberCurve, SphereMapKind,
};

fn sampler(config: &CertConfig, suite: Suite) -> PointSampler {
    let salt = suite
        .name()
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    PointSampler::new(config.seed ^ salt)
}

fn random_address<T: Real>(inst: &Instance<T>, s: &mut PointSampler, depth: usize) -> CantorAddress {
    CantorAddress((0..depth).map(|_| s.index(inst.layout.len())).collect())
}

fn f64_dist<T: Real>(a: &[T], b: &[T]) -> f64 {
    dist(a, b).to_f64_lossy()
}

fn unit_ball<T: Real>(inst: &Instance<T>, s: &mut PointSampler, radius: T) -> Vec<T> {
    s.in_ball(&vec![T::zero(); inst.domain_dim()], radius)
}

/// Residual of `F₀` against `φ` on the unit sphere and against `τ_i∘φ∘σ_i⁻¹` on each
/// `∂B_i`. The negative control shifts every `τ_i` by `10⁻³`.
pub fn cert_boundary_and_gluing<T: Real>(inst: &Instance<T>, config: &CertConfig) -> Result<CertReport> {
    let report = ReportBuilder::start(Suite::BoundaryGluing);
    let mut s = sampler(config, Suite::BoundaryGluing);
    let dim = inst.domain_dim();
    let sphere: Vec<Vec<T>> = (0..config.samples)
        .map(|_| s.on_sphere(&vec![T::zero(); dim], T::one()))
        .collect();
    let balls: Vec<(usize, Vec<T>)> = (0..config.samples)
        .map(|_| {
            let i = s.index(inst.layout.len());
            (i, s.on_sphere(&inst.layout.centers[i], inst.layout.radius))
        })
        .collect();
    let boundary: Vec<Option<f64>> = sphere
        .par_iter()
        .map(|x| Some(f64_dist(&inst.base_map_f0(x).ok()?, &inst.phi(x).ok()?)))
        .collect();
    let gluing: Vec<Option<f64>> = balls
        .par_iter()
        .map(|(i, x)| Some(f64_dist(&inst.base_map_f0(x).ok()?, &inst.gluing_target(*i, x).ok()?)))
        .collect();
    let total = boundary.len() + gluing.len();
    let b: Vec<f64> = boundary.iter().flatten().copied().collect();
    let g: Vec<f64> = gluing.iter().flatten().copied().collect();
    let exclusion = ExclusionStats::new(total - b.len() - g.len(), total, config.exclusion_cap);
    let negative = negative_gluing(inst, &balls[..balls.len().min(1000)]);
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let details = json!({
        "boundary_max": max(&b),
        "boundary_samples": b.len(),
        "gluing_max": max(&g),
        "gluing_samples": g.len(),
    });
    let residuals: Vec<f64> = b.into_iter().chain(g).collect();
    Ok(report.finish(inst, config, &residuals, 1e-9, exclusion, Some(negative), true, details))
}

fn negative_gluing<T: Real>(inst: &Instance<T>, balls: &[(usize, Vec<T>)]) -> NegativeControl {
    let shift = T::lit(1e-3);
    let stat = balls
        .par_iter()
        .filter_map(|(i, x)| {
            let v = inst.base_map_f0(x).ok()?;
            let mut target = inst.gluing_target(*i, x).ok()?;
            target[0] = target[0] + shift;
            Some(f64_dist(&v, &target))
        })
        .reduce(|| 0.0, f64::max);
    NegativeControl {
        description: "gluing against image similarities translated by 1e-3".into(),
        statistic: stat,
        threshold: 1e-9,
        failed_as_expected: stat > 1e-9,
    }
}

/// Distance of resolved values of `F` from the grid skeleton one level below their
/// address depth, plus any excess of the max norm over `½`.
pub fn cert_skeleton<T: Real>(inst: &Instance<T>, config: &CertConfig) -> Result<CertReport> {
    let report = ReportBuilder::start(Suite::Skeleton);
    let mut s = sampler(config, Suite::Skeleton);
    let n = inst.params.n;
    let half = T::lit(0.5);
    let mut xs: Vec<Vec<T>> = Vec::new();
    let mut resolved: Vec<(f64, usize)> = Vec::with_capacity(config.samples);
    let mut drawn = 0usize;
    while resolved.len() < config.samples && drawn < 20 * config.samples.max(1) {
        let batch: Vec<Vec<T>> = (0..config.samples.max(64))
            .map(|j| {
                if j % 2 == 0 {
                    unit_ball(inst, &mut s, T::one())
                } else {
                    let d = 1 + s.index(config.depth.max(1));
                    let a = random_address(inst, &mut s, d);
                    let (sigma, _) = inst.address(&a);
                    sigma.apply(&unit_ball(inst, &mut s, T::one()))
                }
            })
            .collect();
        let evals: Vec<Option<(f64, usize)>> = batch
            .par_iter()
            .map(|x| {
                let r = inst.eval_f(x, config.depth).ok()?;
                if r.truncated {
                    return None;
                }
                let level = r.depth_used as u32 + 1;
                let off = skeleton_distance(&r.value, n, level).max((max_norm(&r.value) - half).max(T::zero()));
                Some((off.to_f64_lossy(), r.depth_used))
            })
            .collect();
        for e in evals {
            if resolved.len() == config.samples {
                break;
            }
            drawn += 1;
            resolved.extend(e);
        }
        xs.extend(batch);
    }
    let exclusion = ExclusionStats::new(drawn - resolved.len(), drawn, config.exclusion_cap);
    let mut per_depth = vec![0usize; config.depth + 1];
    for &(_, d) in &resolved {
        per_depth[d.min(config.depth)] += 1;
    }
    let residuals: Vec<f64> = resolved.iter().map(|r| r.0).collect();
    let negative = negative_skeleton(inst, &xs[..xs.len().min(1000)]);
    let enough = resolved.len() == config.samples;
    let details = json!({ "resolved_per_depth": per_depth });
    Ok(report.finish(inst, config, &residuals, 1e-12, exclusion, Some(negative), enough, details))
}

fn negative_skeleton<T: Real>(inst: &Instance<T>, xs: &[Vec<T>]) -> NegativeControl {
    let stat = xs
        .par_iter()
        .filter(|x| inst.layout.locate(x).is_none())
        .map(|x| {
            let y = inst.g1.forward(x);
            let w = inst.g2.forward(&axis_suspension_h(&y, &inst.params.sphere_map));
            skeleton_distance(&w, inst.params.n, 1).to_f64_lossy()
        })
        .reduce(|| 0.0, f64::max);
    NegativeControl {
        description: "values before the skeleton projection".into(),
        statistic: stat,
        threshold: 1e-12,
        failed_as_expected: stat > 1e-12,
    }
}

/// `σ_{m+1}/σ₁` of finite-difference Jacobians at uniform samples, excluding stencils
/// that meet a ridge, the vertical axis, a generation boundary or a truncated cell.
pub fn cert_rank_bound<T: Real>(inst: &Instance<T>, config: &CertConfig) -> Result<CertReport> {
    let report = ReportBuilder::start(Suite::Rank);
    let mut s = sampler(config, Suite::Rank);
    let m = inst.params.m;
    let step = T::lit(config.fd_step);
    let radius = T::one() - T::lit(10.0 * config.fd_step);
    let mut residuals = Vec::with_capacity(config.samples);
    let mut drawn = 0usize;
    let mut excluded = 0usize;
    let mut truncated = 0usize;
    let mut by_branch = [0usize; 2];
    let batch = config.samples.max(64);
    while residuals.len() < config.samples && drawn < 20 * config.samples.max(1) {
        let xs: Vec<Vec<T>> = (0..batch).map(|_| unit_ball(inst, &mut s, radius)).collect();
        let out: Vec<Option<(f64, bool)>> = xs
            .par_iter()
            .map(|x| {
                let jet = inst.jacobian_f(x, config.depth, step).ok()?;
                if jet.near_singular_set {
                    return None;
                }
                let outer = matches!(inst.eval_f(x, config.depth).ok()?.branch, Some(SkeletonBranch::Outer { .. }));
                Some((relative_singular_value(&jet.singular_values, m).to_f64_lossy(), outer))
            })
            .collect();
        for (x, o) in xs.iter().zip(out) {
            if residuals.len() == config.samples {
                break;
            }
            drawn += 1;
            match o {
                Some((r, outer)) => {
                    residuals.push(r);
                    by_branch[usize::from(!outer)] += 1;
                }
                None => {
                    excluded += 1;
                    if inst.eval_f(x, config.depth).map_or(false, |r| r.truncated) {
                        truncated += 1;
                    }
                }
            }
        }
    }
    let exclusion = ExclusionStats::new(excluded, drawn, config.exclusion_cap);
    let negative = negative_rank(inst, config)?;
    let enough = residuals.len() == config.samples;
    let details = json!({
        "retained": residuals.len(),
        "excluded_truncated": truncated,
        "retained_outer_branch": by_branch[0],
        "retained_cell_branch": by_branch[1],
        "sample_radius": radius.to_f64_lossy(),
    });
    Ok(report.finish(inst, config, &residuals, config.tol, exclusion, Some(negative), enough, details))
}

/// A point at distance about `offset` from a ridge where the outer branch switches
/// between two leading coordinates, so that a stencil of that size straddles it
/// asymmetrically.
pub fn ridge_point<T: Real>(inst: &Instance<T>, offset: T) -> Result<Vec<T>> {
    let m = inst.params.m;
    let mut v: Vec<T> = vec![T::lit(1.0), T::lit(1.0), T::lit(0.3), T::lit(0.2)];
    v.resize(m + 1, T::lit(0.1));
    let nv = crate::scalar::norm(&v);
    v.iter_mut().for_each(|c| *c = *c / nv);
    let p = suspension_preimage(&inst.params.sphere_map, &v)?;
    let x0: Vec<T> = p.iter().map(|&c| c * T::lit(0.95)).collect();
    let axis_of = |x: &[T]| -> Option<usize> {
        match inst.base_map_traced(x).ok()?.branch {
            SkeletonBranch::Outer { axis, .. } => Some(axis),
            SkeletonBranch::Cell { .. } => None,
        }
    };
    let a0 = axis_of(&x0);
    let mut s = PointSampler::new(inst.params.seed);
    for _ in 0..256 {
        let x1 = s.on_sphere(&x0, T::lit(0.02));
        let a1 = axis_of(&x1);
        if a1.is_none() || a1 == a0 {
            continue;
        }
        let dir: Vec<T> = x1.iter().zip(&x0).map(|(&a, &b)| (a - b) / T::lit(0.02)).collect();
        let (mut lo, mut hi) = (x0.clone(), x1);
        for _ in 0..80 {
            let mid: Vec<T> = lo.iter().zip(&hi).map(|(&a, &b)| (a + b) * T::lit(0.5)).collect();
            if axis_of(&mid) == a0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok(lo.iter().zip(&dir).map(|(&p, &d)| p - offset * d).collect());
    }
    Err(Error::EvaluationFailed("no ridge found near the reference point".into()))
}

fn negative_rank<T: Real>(inst: &Instance<T>, config: &CertConfig) -> Result<NegativeControl> {
    let x = ridge_point(inst, T::lit(0.3 * config.fd_step))?;
    let jac = fd_jacobian(|p: &[T]| Ok(inst.eval_f(p, config.depth)?.value), &x, T::lit(config.fd_step))?;
    let stat = relative_singular_value(&singular_values(&jac), inst.params.m).to_f64_lossy();
    Ok(NegativeControl {
        description: "stencil straddling an outer-shell ridge, evaluated without exclusion".into(),
        statistic: stat,
        threshold: 1e-3,
        failed_as_expected: stat > 1e-3,
    })
}

struct SelfSimCheck<T> {
    x: Vec<T>,
    address: CantorAddress,
    wrong: Option<CantorAddress>,
}

/// `|T_a⁻¹(F(Σ_a x)) − F(x)|` for random addresses of depth at most three.
pub fn cert_selfsimilarity<T: Real>(inst: &Instance<T>, config: &CertConfig) -> Result<CertReport> {
    let report = ReportBuilder::start(Suite::SelfSimilarity);
    let mut s = sampler(config, Suite::SelfSimilarity);
    let nb = inst.layout.len();
    let checks: Vec<SelfSimCheck<T>> = (0..config.checks)
        .map(|_| {
            let d = s.index(4);
            let address = random_address(inst, &mut s, d);
            let wrong = address.0.last().map(|&j| {
                let mut w = address.clone();
                let last = w.0.len() - 1;
                w.0[last] = (j + 1 + s.index(nb - 1)) % nb;
                w
            });
            SelfSimCheck {
                x: unit_ball(inst, &mut s, T::one()),
                address,
                wrong,
            }
        })
        .collect();
    let depth = config.depth;
    let residual_with = |c: &SelfSimCheck<T>, tau: &Similarity<T>| -> Option<f64> {
        let (sigma, _) = inst.address(&c.address);
        let lhs = inst.eval_f(&sigma.apply(&c.x), depth + c.address.depth()).ok()?;
        let rhs = inst.eval_f(&c.x, depth).ok()?;
        Some(f64_dist(&tau.apply_inverse(&lhs.value), &rhs.value))
    };
    let out: Vec<Option<(f64, usize)>> = checks
        .par_iter()
        .map(|c| {
            let (_, tau) = inst.address(&c.address);
            residual_with(c, &tau).map(|r| (r, c.address.depth()))
        })
        .collect();
    let ok: Vec<(f64, usize)> = out.iter().flatten().copied().collect();
    let exclusion = ExclusionStats::new(out.len() - ok.len(), out.len(), config.exclusion_cap);
    let empty_exact = ok.iter().filter(|r| r.1 == 0).all(|r| r.0 == 0.0);
    let empty_count = ok.iter().filter(|r| r.1 == 0).count();
    let tol = 2.0 * inst.params.cube_diameter().to_f64_lossy() * (inst.params.n as f64).powi(-(depth as i32));
    let neg = checks
        .par_iter()
        .filter_map(|c| {
            let (_, tau) = inst.address(c.wrong.as_ref()?);
            residual_with(c, &tau)
        })
        .reduce(|| 0.0, f64::max);
    let negative = NegativeControl {
        description: "image similarity taken from a neighbouring cell".into(),
        statistic: neg,
        threshold: tol,
        failed_as_expected: neg > tol,
    };
    let residuals: Vec<f64> = ok.iter().map(|r| r.0).collect();
    let details = json!({ "empty_address_checks": empty_count, "empty_address_exact": empty_exact });
    Ok(report.finish(inst, config, &residuals, tol, exclusion, Some(negative), empty_exact, details))
}

/// `|F(x, d) − F(x, d+2)| / (√(m+1)·n^{−d})` for `d = 1, 2, 3`, half of the points
/// drawn deep inside the Cantor set neighbourhood.
pub fn cert_convergence<T: Real>(inst: &Instance<T>, config: &CertConfig) -> Result<CertReport> {
    let report = ReportBuilder::start(Suite::Convergence);
    let mut s = sampler(config, Suite::Convergence);
    let mut jobs: Vec<(usize, Vec<T>)> = Vec::with_capacity(3 * config.checks);
    for d in 1..=3usize {
        for j in 0..config.checks {
            let x = if j % 2 == 0 {
                unit_ball(inst, &mut s, T::one())
            } else {
                let extra = s.index(3);
                let a = random_address(inst, &mut s, d + 1 + extra);
                inst.address(&a).0.apply(&unit_ball(inst, &mut s, T::one()))
            };
            jobs.push((d, x));
        }
    }
    let diam = inst.params.cube_diameter().to_f64_lossy();
    let n = inst.params.n as f64;
    let out: Vec<Option<(f64, usize)>> = jobs
        .par_iter()
        .map(|(d, x)| {
            let a = inst.eval_f(x, *d).ok()?;
            let b = inst.eval_f(x, d + 2).ok()?;
            Some((f64_dist(&a.value, &b.value) / (diam * n.powi(-(*d as i32))), *d))
        })
        .collect();
    let ok: Vec<(f64, usize)> = out.iter().flatten().copied().collect();
    let exclusion = ExclusionStats::new(out.len() - ok.len(), out.len(), config.exclusion_cap);
    let per_depth: Vec<f64> = (1..=3)
        .map(|d| ok.iter().filter(|r| r.1 == d).map(|r| r.0).fold(0.0, f64::max))
        .collect();
    let residuals: Vec<f64> = ok.iter().map(|r| r.0).collect();
    let stat = residuals.iter().copied().fold(0.0, f64::max) * 100.0;
    let negative = NegativeControl {
        description: "truncation bound tightened one hundred times".into(),
        statistic: stat,
        threshold: 1.0,
        failed_as_expected: stat > 1.0,
    };
    let details = json!({ "max_normalized_per_depth": per_depth });
    Ok(report.finish(inst, config, &residuals, 1.0, exclusion, Some(negative), true, details))
}

/// Per-generation ratio of `sup σ₁(DF)` over annulus samples pushed down random address
/// chains; must match `γ` within 15%. Also runs an analytic pilot with `n = 33`,
/// `r_b = 2/33` whose ratio is `½`.
pub fn cert_derivative_decay<T: Real>(inst: &Instance<T>, config: &CertConfig) -> Result<CertReport> {
    let report = ReportBuilder::start(Suite::Decay);
    let mut s = sampler(config, Suite::Decay);
    let gens = config.generations.max(1);
    let gamma = inst.params.gamma.to_f64_lossy();
    let ys: Vec<Vec<T>> = (0..config.checks).map(|_| annulus_point(inst, &mut s)).collect();
    let chains: Vec<Vec<CantorAddress>> = ys
        .iter()
        .map(|_| (0..=gens).map(|d| random_address(inst, &mut s, d)).collect())
        .collect();
    let rb = inst.params.ball_radius;
    let per_sample: Vec<Option<Vec<f64>>> = ys
        .par_iter()
        .zip(&chains)
        .map(|(y, chain)| {
            chain
                .iter()
                .map(|a| {
                    let d = a.depth();
                    let x = inst.address(a).0.apply(y);
                    let step = T::lit(config.fd_step) * rb.powi(d as i32);
                    let jet = inst.jacobian_f(&x, config.depth + d, step).ok()?;
                    (!jet.near_singular_set).then(|| jet.singular_values[0].to_f64_lossy())
                })
                .collect()
        })
        .collect();
    let retained: Vec<&Vec<f64>> = per_sample.iter().flatten().collect();
    let exclusion = ExclusionStats::new(per_sample.len() - retained.len(), per_sample.len(), config.exclusion_cap);
    let sups: Vec<f64> = (0..=gens)
        .map(|d| retained.iter().map(|v| v[d]).fold(0.0, f64::max))
        .collect();
    let ratios: Vec<f64> = sups.windows(2).map(|w| w[1] / w[0]).collect();
    let fitted = (sups[gens] / sups[0]).powf(1.0 / gens as f64);
    let residuals: Vec<f64> = ratios.iter().map(|r| (r - gamma).abs() / gamma).collect();

    let pilot = analytic_pilot(inst, &ys[..ys.len().min(200)], config.fd_step)?;
    let pilot_ok = pilot.iter().all(|r| (r - 0.5).abs() / 0.5 < 0.15);

    let dropped = chain_ratio(inst, &ys[..ys.len().min(200)], config.fd_step, gens, false)?;
    let stat = (dropped - gamma).abs() / gamma;
    let negative = NegativeControl {
        description: "image similarities dropped from the chain".into(),
        statistic: stat,
        threshold: 0.15,
        failed_as_expected: stat > 0.15,
    };
    let details = json!({
        "gamma": gamma,
        "sup_sigma1_per_generation": sups,
        "ratios": ratios,
        "fitted_ratio": fitted,
        "pilot": { "n": 33, "ball_radius": 2.0 / 33.0, "expected": 0.5, "ratios": pilot, "pass": pilot_ok },
    });
    Ok(report.finish(inst, config, &residuals, 0.15, exclusion, Some(negative), pilot_ok, details))
}

fn annulus_point<T: Real>(inst: &Instance<T>, s: &mut PointSampler) -> Vec<T> {
    let dir: Vec<T> = s.unit_vector(inst.domain_dim());
    let r = T::lit(0.55 + 0.35 * s.uniform());
    dir.into_iter().map(|v| v * r).collect()
}

fn sup_sigma1<T, F>(ys: &[Vec<T>], map: F, sigma: &Similarity<T>, step: T) -> f64
where
    T: Real,
    F: Fn(&[T]) -> Result<Vec<T>> + Sync,
{
    ys.par_iter()
        .filter_map(|y| {
            let jac = fd_jacobian(|p: &[T]| map(p), &sigma.apply(y), step).ok()?;
            Some(singular_values(&jac)[0].to_f64_lossy())
        })
        .reduce(|| 0.0, f64::max)
}

/// Ratio of the sup norm of `D(T∘F₀∘Σ⁻¹)` between consecutive generations for the
/// similarity chain with `n = 33`, `r_b = 2/33`.
fn analytic_pilot<T: Real>(inst: &Instance<T>, ys: &[Vec<T>], h: f64) -> Result<Vec<f64>> {
    let rb = T::lit(2.0 / 33.0);
    let cell = T::lit(1.0 / 33.0);
    let mut sups = Vec::new();
    for d in 0..=2i32 {
        let sigma = Similarity::new(rb.powi(d), vec![T::zero(); inst.domain_dim()]);
        let tau = Similarity::new(cell.powi(d), vec![T::zero(); inst.image_dim()]);
        let map = |p: &[T]| Ok(tau.apply(&inst.base_map_f0(&sigma.apply_inverse(p))?));
        sups.push(sup_sigma1(ys, map, &sigma, T::lit(h) * rb.powi(d)));
    }
    Ok(sups.windows(2).map(|w| w[1] / w[0]).collect())
}

/// Fitted per-generation ratio along the instance's first-ball chain, with or without
/// the image similarities.
fn chain_ratio<T: Real>(inst: &Instance<T>, ys: &[Vec<T>], h: f64, gens: usize, with_tau: bool) -> Result<f64> {
    let rb = inst.params.ball_radius;
    let mut sups = Vec::new();
    for d in [0, gens] {
        let a = CantorAddress(vec![0; d]);
        let (sigma, tau) = inst.address(&a);
        let map = |p: &[T]| {
            let v = inst.base_map_f0(&sigma.apply_inverse(p))?;
            Ok(if with_tau { tau.apply(&v) } else { v })
        };
        sups.push(sup_sigma1(ys, map, &sigma, T::lit(h) * rb.powi(d as i32)));
    }
    Ok((sups[1] / sups[0]).powf(1.0 / gens as f64))
}

/// Linking number of two Hopf fibers (or the degree of a circle map) as the certificate
/// that the boundary map is essential.
pub fn cert_linking<T: Real>(inst: &Instance<T>, config: &CertConfig) -> Result<CertReport> {
    let report = ReportBuilder::start(Suite::Linking);
    let mut residuals = Vec::new();
    let (extra, details, negative) = match inst.params.sphere_map {
        SphereMapKind::Hopf | SphereMapKind::SuspendedHopf(_) => {
            let mut values = Vec::new();
            let mut raws = Vec::new();
            for count in [256usize, 1024] {
                let up = hopf_fiber::<f64>(&[0.0, 0.0, 1.0], count)?;
                let down = hopf_fiber::<f64>(&[0.0, 0.0, -1.0], count)?;
                let l = linking_number(&up, &down)?;
                residuals.push(l.rounding_error());
                values.push(l.value);
                raws.push(l.raw);
            }
            let a = trace_fiber::<f64>(&SphereMapKind::Hopf, &[0.6, 0.0, 0.8], 512)?;
            let b = trace_fiber::<f64>(&SphereMapKind::Hopf, &[0.0, 0.6, -0.8], 512)?;
            let traced = linking_number(&a, &b)?;
            residuals.push(traced.rounding_error());
            let ok = values.iter().all(|v| v.abs() == 1) && values[0] == values[1] && traced.value.abs() == 1;
            let details = json!({
                "closed_form": { "samples": [256, 1024], "values": values, "raw": raws },
                "traced": { "value": traced.value, "raw": traced.raw },
            });
            (ok, details, negative_linking()?)
        }
        SphereMapKind::CircleDegree(deg) => {
            let w = winding_number::<f64>(&inst.params.sphere_map, 1024)?;
            let w2 = winding_number::<f64>(&inst.params.sphere_map, 256)?;
            residuals.push(0.0);
            let flat = winding_number::<f64>(&SphereMapKind::CircleDegree(0), 1024)?;
            let negative = NegativeControl {
                description: "degree-zero circle map".into(),
                statistic: flat as f64,
                threshold: 1.0,
                failed_as_expected: flat == 0,
            };
            let ok = w == deg as i64 && w == w2 && w != 0;
            (ok, json!({ "winding_number": w, "expected": deg }), negative)
        }
    };
    let exclusion = ExclusionStats::new(0, residuals.len(), config.exclusion_cap);
    Ok(report.finish(inst, config, &residuals, 0.05, exclusion, Some(negative), extra, details))
}

fn negative_linking() -> Result<NegativeControl> {
    let circle = |cx: f64| -> FiberCurve<f64> {
        let count = 256;
        let params: Vec<f64> = (0..count).map(|i| std::f64::consts::TAU * i as f64 / count as f64).collect();
        let points = params.iter().map(|t| vec![cx + t.cos(), t.sin(), 0.0]).collect();
        FiberCurve {
            params,
            points,
            closed: true,
        }
    };
    let l = linking_number(&circle(0.0), &circle(5.0))?;
    Ok(NegativeControl {
        description: "two separated planar circles".into(),
        statistic: l.raw.abs(),
        threshold: 0.5,
        failed_as_expected: l.value == 0,
    })
}

/// Runs every designed-to-fail configuration. The report never passes; its details
/// record whether each control failed as expected.
pub fn cert_negative_controls<T: Real>(inst: &Instance<T>, config: &CertConfig) -> Result<CertReport> {
    let report = ReportBuilder::start(Suite::Negative);
    let mut controls = serde_json::Map::new();
    let mut all_failed = true;
    for suite in Suite::ALL {
        let r = super::run_suite(inst, suite, config)?;
        if let Some(n) = r.negative_control {
            all_failed &= n.failed_as_expected;
            controls.insert(suite.name().to_string(), serde_json::to_value(&n)?);
        }
    }
    let details = json!({ "controls": controls, "all_failed_as_expected": all_failed });
    let exclusion = ExclusionStats::new(0, 0, config.exclusion_cap);
    Ok(report.finish(inst, config, &[], 0.0, exclusion, None, false, details))
}
