//! Property tests for the invariants of the construction.

use proptest::prelude::*;
use rank_obstruction::assembly::PaddedMapSpec;
use rank_obstruction::blocks::{skeleton_distance, skeleton_project};
use rank_obstruction::instance::{CantorAddress, Similarity};
use rank_obstruction::numerics::{singular_values, Matrix};
use rank_obstruction::scalar::{dist, max_norm, norm};
use rank_obstruction::spheremaps::{cubify, hopf, phi};
use rank_obstruction::Instance64;
use std::sync::OnceLock;

fn desk() -> &'static Instance64 {
    static INST: OnceLock<Instance64> = OnceLock::new();
    INST.get_or_init(|| Instance64::desk_default(7).unwrap())
}

fn toy() -> &'static Instance64 {
    static INST: OnceLock<Instance64> = OnceLock::new();
    INST.get_or_init(|| Instance64::toy_default(7).unwrap())
}

fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let r = norm(v);
    (r > 1e-3).then(|| v.iter().map(|x| x / r).collect())
}

fn vec_in(dim: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, dim)
}

/// Points of the closed unit ball in `R^dim`.
fn ball_point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    (vec_in(dim, -1.0, 1.0), 0.0f64..1.0).prop_filter_map("nonzero direction", |(v, t)| {
        normalized(&v).map(|u| u.iter().map(|x| x * t.powf(1.0 / u.len() as f64)).collect())
    })
}

fn address(max_len: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..16, 0..=max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn similarity_compose_and_inverse(
        a in 0.01f64..3.0, ta in vec_in(4, -2.0, 2.0),
        b in 0.01f64..3.0, tb in vec_in(4, -2.0, 2.0),
        x in vec_in(4, -5.0, 5.0),
    ) {
        let (sa, sb) = (Similarity::new(a, ta), Similarity::new(b, tb));
        let direct = sa.apply(&sb.apply(&x));
        prop_assert!(dist(&sa.compose(&sb).apply(&x), &direct) < 1e-12);
        prop_assert!(dist(&sa.inverse().apply(&sa.apply(&x)), &x) < 1e-12);
        prop_assert!(dist(&sa.apply_inverse(&sa.apply(&x)), &x) < 1e-12);
    }

    #[test]
    fn cubify_lands_on_cube_boundary(u in vec_in(4, -3.0, 3.0)) {
        prop_assume!(max_norm(&u) > 1e-6);
        let c = cubify(&u).unwrap();
        prop_assert!((max_norm(&c) - 0.5).abs() < 1e-15);
        // Same ray as the input.
        let s = c[0] / u[0];
        prop_assert!(s > 0.0 || u[0] == 0.0);
    }

    #[test]
    fn hopf_is_unit(v in vec_in(4, -1.0, 1.0)) {
        let Some(p) = normalized(&v) else { return Ok(()); };
        let h = hopf(&p).unwrap();
        prop_assert!((norm(&h) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_values_on_cube_boundary(v in vec_in(5, -1.0, 1.0)) {
        let Some(x) = normalized(&v) else { return Ok(()); };
        let y = phi(&desk().params.sphere_map, &x).unwrap();
        prop_assert!((max_norm(&y) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn skeleton_projection_lands_on_skeleton(z in vec_in(4, -0.7, 0.7)) {
        let p = &desk().params;
        match skeleton_project(&z, p) {
            Ok((y, _)) => {
                prop_assert!(skeleton_distance(&y, p.n, 1) < 1e-12);
                prop_assert!(max_norm(&y) <= 0.5 + 1e-15);
            }
            // Points inside an excluded inscribed ball have no projection.
            Err(_) => {}
        }
    }

    #[test]
    fn values_stay_in_unit_cube(x in ball_point(5), depth in 0usize..4) {
        let r = desk().eval_f(&x, depth).unwrap();
        prop_assert!(max_norm(&r.value) <= 0.5 + 1e-12);
        prop_assert!(r.depth_used <= depth + 1);
        if r.truncated {
            let bound = 2.0 * 2f64.powi(-(r.depth_used as i32));
            prop_assert!((r.error_bound - bound).abs() < 1e-15);
        } else {
            prop_assert_eq!(r.error_bound, 0.0);
        }
    }

    #[test]
    fn truncation_bound_holds(x in ball_point(5), depth in 0usize..3) {
        let coarse = desk().eval_f(&x, depth).unwrap();
        let fine = desk().eval_f(&x, depth + 3).unwrap();
        prop_assert!(dist(&coarse.value, &fine.value) <= coarse.error_bound + fine.error_bound + 1e-12);
    }

    #[test]
    fn self_similarity(x in ball_point(5), addr in address(2), depth in 0usize..3) {
        let inst = desk();
        let a = CantorAddress(addr);
        let (sigma, tau) = inst.address(&a);
        let inner = inst.eval_f(&x, depth).unwrap();
        let outer = inst.eval_f(&sigma.apply(&x), depth + a.depth()).unwrap();
        prop_assert_eq!(outer.depth_used, inner.depth_used + a.depth());
        prop_assert!(dist(&outer.value, &tau.apply(&inner.value)) < 1e-10);
    }

    #[test]
    fn toy_self_similarity(x in ball_point(3), i in 0usize..8) {
        let inst = toy();
        let (sigma, tau) = inst.child(i);
        let inner = inst.eval_f(&x, 2).unwrap();
        let outer = inst.eval_f(&sigma.apply(&x), 3).unwrap();
        prop_assert!(dist(&outer.value, &tau.apply(&inner.value)) < 1e-10);
    }

    #[test]
    fn routing_pipelines_invert(x in ball_point(5), z in vec_in(4, -0.5, 0.5)) {
        let inst = desk();
        let y = inst.g1.forward(&x);
        prop_assert!(dist(&inst.g1.inverse(&y), &x) < 1e-9);
        let w = inst.g2.forward(&z);
        prop_assert!(dist(&inst.g2.inverse(&w), &z) < 1e-9);
    }

    #[test]
    fn blowup_round_trip(x in ball_point(5)) {
        prop_assume!(norm(&x) < 0.999);
        let spec = PaddedMapSpec::standard(&desk().params);
        let y = spec.blowup(&x).unwrap();
        prop_assert!(norm(&y) >= norm(&x) - 1e-15);
        prop_assert!(dist(&spec.blowup_inverse(&y), &x) < 1e-9);
    }

    #[test]
    fn singular_values_sorted_and_frobenius(
        rows in 1usize..6, cols in 1usize..6, data in vec_in(36, -10.0, 10.0),
    ) {
        let a = Matrix::from_row_major(rows, cols, data[..rows * cols].to_vec());
        let sv = singular_values(&a);
        prop_assert_eq!(sv.len(), rows.min(cols));
        prop_assert!(sv.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(sv.iter().all(|&s| s >= 0.0));
        let fro: f64 = sv.iter().map(|s| s * s).sum();
        prop_assert!((fro - a.frobenius_norm_sq()).abs() <= 1e-10 * a.frobenius_norm_sq().max(1.0));
    }
}
