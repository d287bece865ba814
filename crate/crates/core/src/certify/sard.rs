//! Rank breach of smooth competitors near the Cantor set.
//!
//! A mollified spline surrogate `g` of `F` is fitted on a window around a Cantor point.
//! `g` is smooth, so wherever it fills an open part of the image cube its Jacobian must
//! reach rank `m+1`. The experiment finds an explicit ball where every sample has full
//! numerical rank and compares the occupancy of `½𝕀` by `g` and by `F`.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{NegativeControl, ReportMetadata};
use crate::assembly::Instance;
use crate::blocks::skeleton_distance;
use crate::error::{Error, Result};
use crate::instance::{CantorAddress, Similarity};
use crate::numerics::{singular_values, smooth_surrogate, Halton, PointSampler, SmoothSurrogate};
use crate::scalar::{dist, Real};

/// Experiment settings. Window half-width and `ε` default to `r_b^d` and `r_b^{d+1}`
/// for a center address of depth `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SardConfig {
    pub center_address: Vec<usize>,
    pub window_half_width: Option<f64>,
    pub epsilon: Option<f64>,
    /// Evaluation depth of `F`.
    pub depth: usize,
    pub grid_res: usize,
    /// Second, finer grid used to check that the breach persists.
    pub refine_grid_res: usize,
    pub order: usize,
    pub mollifier_nodes: usize,
    /// Relative threshold on `σ_{m+1}/σ₁`.
    pub rank_tol: f64,
    /// Jacobians with `σ₁` below this are treated as zero.
    pub zero_tol: f64,
    pub candidates: usize,
    pub ball_samples: usize,
    pub max_balls_tried: usize,
    pub occupancy_res: usize,
    pub occupancy_samples: usize,
    pub tube_tol: f64,
    pub seed: u64,
}

impl Default for SardConfig {
    fn default() -> Self {
        Self {
            center_address: vec![0],
            window_half_width: None,
            epsilon: None,
            depth: 4,
            grid_res: 15,
            refine_grid_res: 17,
            order: 4,
            mollifier_nodes: 16,
            rank_tol: 1e-6,
            zero_tol: 1e-10,
            candidates: 2000,
            ball_samples: 256,
            max_balls_tried: 32,
            occupancy_res: 8,
            occupancy_samples: 20_000,
            tube_tol: 1e-9,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum BreachOutcome {
    Found {
        center: Vec<f64>,
        radius: f64,
        samples: usize,
        full_rank_samples: usize,
        min_rank_ratio: f64,
        balls_tried: usize,
    },
    NoBreachFound {
        balls_tried: usize,
    },
}

impl BreachOutcome {
    pub fn found(&self) -> bool {
        matches!(self, BreachOutcome::Found { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreachSearch {
    pub grid_res: usize,
    pub fit_residual: f64,
    /// Fraction of window candidates where `Dg` has full numerical rank.
    pub window_rank_fraction: f64,
    pub outcome: BreachOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Occupancy {
    pub cells_per_axis: usize,
    pub samples: usize,
    /// Cells of `½𝕀` hit by `g` away from the skeleton tube.
    pub g_cells: usize,
    /// Cells of `½𝕀` hit by resolved values of `F` away from the skeleton tube.
    pub f_cells_beyond_tube: usize,
    pub f_truncated_excluded: usize,
    /// Hit counts of `g` per cell multi-index.
    pub g_hits: BTreeMap<String, usize>,
}

impl Occupancy {
    /// One line per occupied cell: multi-index and hit count.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell,hits\n");
        for (k, v) in &self.g_hits {
            out.push_str(&format!("{k},{v}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SardReport {
    pub params: serde_json::Value,
    pub config: SardConfig,
    pub window_lo: Vec<f64>,
    pub window_hi: Vec<f64>,
    pub epsilon: f64,
    /// Achieved `sup |g − F|` on window samples.
    pub delta: f64,
    /// `sup |g − F|` on the window samples inside the address ball.
    pub delta_in_ball: f64,
    pub primary: BreachSearch,
    pub refined: BreachSearch,
    pub occupancy: Occupancy,
    pub negative_control: NegativeControl,
    pub pass: bool,
    pub metadata: ReportMetadata,
}

fn box_points<T: Real>(lo: &[T], hi: &[T], count: usize, seed: u64) -> Vec<Vec<T>> {
    let mut h = Halton::new(lo.len(), seed);
    (0..count)
        .map(|_| {
            let u = h.next_point();
            lo.iter()
                .zip(hi)
                .zip(u)
                .map(|((&a, &b), t)| a + (b - a) * T::lit(t))
                .collect()
        })
        .collect()
}

fn full_rank_ratio<T: Real>(g: &SmoothSurrogate<T>, x: &[T], zero_tol: f64) -> Result<f64> {
    let sv = singular_values(&g.jacobian(x)?);
    let s1 = sv[0].to_f64_lossy();
    if s1 <= zero_tol {
        return Ok(0.0);
    }
    Ok(sv.last().map_or(0.0, |s| s.to_f64_lossy() / s1))
}

/// Searches for a ball of radius half the grid spacing inside the window on which
/// every sampled Jacobian of `g` has full numerical rank.
pub fn find_breach<T: Real>(
    g: &SmoothSurrogate<T>,
    lo: &[T],
    hi: &[T],
    config: &SardConfig,
    seed: u64,
) -> Result<BreachSearch> {
    let spacing = g.axes()[0].spacing();
    let radius = spacing * T::lit(0.5);
    let inner_lo: Vec<T> = lo.iter().map(|&v| v + radius).collect();
    let inner_hi: Vec<T> = hi.iter().map(|&v| v - radius).collect();
    let cands = box_points(&inner_lo, &inner_hi, config.candidates, seed);
    let ratios: Vec<f64> = cands
        .par_iter()
        .map(|x| full_rank_ratio(g, x, config.zero_tol))
        .collect::<Result<_>>()?;
    let mut ranked: Vec<usize> = (0..cands.len()).filter(|&i| ratios[i] > config.rank_tol).collect();
    let window_rank_fraction = ranked.len() as f64 / cands.len().max(1) as f64;
    ranked.sort_by(|&a, &b| ratios[b].total_cmp(&ratios[a]).then(a.cmp(&b)));
    let mut sampler = PointSampler::new(seed ^ 0x5eed);
    let mut tried = 0;
    let mut outcome = BreachOutcome::NoBreachFound { balls_tried: 0 };
    for &i in ranked.iter().take(config.max_balls_tried) {
        tried += 1;
        let pts: Vec<Vec<T>> = (0..config.ball_samples)
            .map(|_| sampler.in_ball(&cands[i], radius))
            .collect();
        let rs: Vec<f64> = pts
            .par_iter()
            .map(|x| full_rank_ratio(g, x, config.zero_tol))
            .collect::<Result<_>>()?;
        let full = rs.iter().filter(|&&r| r > config.rank_tol).count();
        if full == rs.len() && !rs.is_empty() {
            outcome = BreachOutcome::Found {
                center: cands[i].iter().map(|v| v.to_f64_lossy()).collect(),
                radius: radius.to_f64_lossy(),
                samples: rs.len(),
                full_rank_samples: full,
                min_rank_ratio: rs.iter().copied().fold(f64::INFINITY, f64::min),
                balls_tried: tried,
            };
            break;
        }
    }
    if let BreachOutcome::NoBreachFound { balls_tried } = &mut outcome {
        *balls_tried = tried;
    }
    Ok(BreachSearch {
        grid_res: g.grid_res(),
        fit_residual: g.fit_residual().to_f64_lossy(),
        window_rank_fraction,
        outcome,
    })
}

fn occupancy_cell<T: Real>(p: &[T], res: usize) -> Option<Vec<usize>> {
    let quarter = T::lit(0.25);
    p.iter()
        .map(|&v| {
            if v.abs() >= quarter {
                return None;
            }
            let t = ((v + quarter) / (quarter + quarter) * T::from_count(res)).floor().to_f64_lossy();
            Some((t.max(0.0) as usize).min(res - 1))
        })
        .collect()
}

fn cell_key(c: &[usize]) -> String {
    c.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
}

/// Runs the breach experiment at two grid resolutions with the occupancy comparison and
/// the constant-surrogate negative control.
pub fn experiment_sard_breach<T: Real>(inst: &Instance<T>, config: &SardConfig) -> Result<SardReport> {
    let start = Instant::now();
    let p = &inst.params;
    let address = CantorAddress(config.center_address.clone());
    if address.0.iter().any(|&i| i >= inst.layout.len()) {
        return Err(Error::InvalidParameter("center address index out of range".into()));
    }
    let rb = p.ball_radius.to_f64_lossy();
    let d = address.depth() as i32;
    let half = config.window_half_width.unwrap_or(rb.powi(d));
    let eps = config.epsilon.unwrap_or(rb.powi(d + 1));
    let (sigma, tau) = inst.address(&address);
    let center = sigma.translation.clone();
    let lo: Vec<T> = center.iter().map(|&c| c - T::lit(half)).collect();
    let hi: Vec<T> = center.iter().map(|&c| c + T::lit(half)).collect();
    let corner: f64 = center
        .iter()
        .map(|c| (c.to_f64_lossy().abs() + half + eps).powi(2))
        .sum::<f64>()
        .sqrt();
    if corner > 1.0 {
        return Err(Error::OutOfBox);
    }
    let depth = config.depth;
    let f_map = |x: &[T]| -> Result<Vec<T>> { Ok(inst.eval_f(x, depth)?.value) };

    let fit = |res: usize| smooth_surrogate(f_map, &lo, &hi, res, T::lit(eps), config.order, config.mollifier_nodes);
    let g = fit(config.grid_res)?;
    let primary = find_breach(&g, &lo, &hi, config, config.seed)?;

    let samples = box_points(&lo, &hi, config.occupancy_samples, config.seed.wrapping_add(1));
    let (occ, delta, delta_in_ball) = occupancy(inst, &g, (&sigma, &tau), &samples, config)?;
    drop(g);

    let g2 = fit(config.refine_grid_res)?;
    let refined = find_breach(&g2, &lo, &hi, config, config.seed)?;
    drop(g2);

    let constant = vec![T::lit(0.25); inst.image_dim()];
    let flat = smooth_surrogate(|_: &[T]| Ok(constant.clone()), &lo, &hi, 6, T::zero(), config.order, 1)?;
    let neg = find_breach(&flat, &lo, &hi, config, config.seed)?;
    let negative_control = NegativeControl {
        description: "constant surrogate".into(),
        statistic: neg.window_rank_fraction,
        threshold: 0.0,
        failed_as_expected: !neg.outcome.found(),
    };

    let pass = primary.outcome.found()
        && refined.outcome.found()
        && occ.g_cells > 0
        && occ.f_cells_beyond_tube == 0
        && negative_control.failed_as_expected;
    Ok(SardReport {
        params: serde_json::to_value(p)?,
        config: config.clone(),
        window_lo: lo.iter().map(|v| v.to_f64_lossy()).collect(),
        window_hi: hi.iter().map(|v| v.to_f64_lossy()).collect(),
        epsilon: eps,
        delta,
        delta_in_ball,
        primary,
        refined,
        occupancy: occ,
        negative_control,
        pass,
        metadata: ReportMetadata::since(start),
    })
}

/// Occupancy of `½𝕀` in the window's local image coordinates, and `sup |g − F|` over
/// the window and over the address ball.
fn occupancy<T: Real>(
    inst: &Instance<T>,
    g: &SmoothSurrogate<T>,
    (sigma, tau): (&Similarity<T>, &Similarity<T>),
    samples: &[Vec<T>],
    config: &SardConfig,
) -> Result<(Occupancy, f64, f64)> {
    let n = inst.params.n;
    let level = config.depth as u32 + 1;
    let tube = T::lit(config.tube_tol);
    let rows: Vec<(Option<Vec<usize>>, Option<Vec<usize>>, bool, f64, bool)> = samples
        .par_iter()
        .map(|x| {
            let gv = g.evaluate(x)?;
            let fr = inst.eval_f(x, config.depth)?;
            let delta = dist(&gv, &fr.value).to_f64_lossy();
            let g_cell = (skeleton_distance(&gv, n, level) > tube)
                .then(|| occupancy_cell(&tau.apply_inverse(&gv), config.occupancy_res))
                .flatten();
            let f_cell = (!fr.truncated && skeleton_distance(&fr.value, n, level) > tube)
                .then(|| occupancy_cell(&tau.apply_inverse(&fr.value), config.occupancy_res))
                .flatten();
            let in_ball = dist(x, &sigma.translation) <= sigma.scale;
            Ok((g_cell, f_cell, fr.truncated, delta, in_ball))
        })
        .collect::<Result<_>>()?;
    let mut g_hits = BTreeMap::new();
    let mut f_cells = BTreeMap::new();
    let mut truncated = 0;
    let mut delta = 0.0f64;
    let mut delta_ball = 0.0f64;
    for (gc, fc, tr, dl, inside) in rows {
        if let Some(c) = gc {
            *g_hits.entry(cell_key(&c)).or_insert(0) += 1;
        }
        if let Some(c) = fc {
            *f_cells.entry(cell_key(&c)).or_insert(0usize) += 1;
        }
        truncated += usize::from(tr);
        delta = delta.max(dl);
        if inside {
            delta_ball = delta_ball.max(dl);
        }
    }
    Ok((
        Occupancy {
            cells_per_axis: config.occupancy_res,
            samples: samples.len(),
            g_cells: g_hits.len(),
            f_cells_beyond_tube: f_cells.len(),
            f_truncated_excluded: truncated,
            g_hits,
        },
        delta,
        delta_ball,
    ))
}
