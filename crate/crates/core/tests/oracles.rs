//! Checks against values computed independently of the library code paths.

use nalgebra::DMatrix;
use rank_obstruction::blocks::{cell_center, cell_of};
use rank_obstruction::instance::{address_similarities, cantor_point, pack_balls, CantorAddress, InstanceParams};
use rank_obstruction::numerics::{fd_jacobian, singular_values, Matrix, PointSampler};
use rank_obstruction::scalar::dist;
use rank_obstruction::spheremaps::{hopf_fiber, linking_number, winding_number, SphereMapKind};
use rank_obstruction::{Instance32, Instance64};

#[test]
fn desk_lattice_and_gamma() {
    let p = InstanceParams::<f64>::desk_default(7);
    assert_eq!(p.num_cells, 16);
    assert!((p.gamma - 1.0 / (2.0 * 0.15)).abs() < 1e-15);
    assert_eq!(p.rho, 1.0 / 64.0);
    // Sixteen lattice points (±½)^4; the pitch sits 40% of the way from 2 r_b to
    // (½ − r_b) / max|p| = 0.35.
    let pitch = 0.3 + 0.4 * (0.35 - 0.3);
    let layout = pack_balls(&p).unwrap();
    let mut seen: Vec<[i8; 4]> = layout
        .centers
        .iter()
        .map(|c| {
            assert_eq!(c[4], 0.0);
            let mut s = [0i8; 4];
            for j in 0..4 {
                assert!((c[j].abs() - pitch / 2.0).abs() < 1e-15);
                s[j] = c[j].signum() as i8;
            }
            s
        })
        .collect();
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), 16);
}

#[test]
fn cell_assignment_matches_base_n_digits() {
    let p = InstanceParams::<f64>::desk_default(7);
    let layout = pack_balls(&p).unwrap();
    for (i, cc) in layout.cell_centers.iter().enumerate() {
        let digits = [(i >> 3) & 1, (i >> 2) & 1, (i >> 1) & 1, i & 1];
        let expect: Vec<f64> = digits.iter().map(|&d| -0.25 + 0.5 * d as f64).collect();
        assert_eq!(cc, &expect);
        assert_eq!(cell_of(cc, 2).0, i);
        assert_eq!(cell_center::<f64>(&digits, 2), expect);
    }
}

#[test]
fn cantor_point_is_nested_ball_center() {
    let p = InstanceParams::<f64>::desk_default(7);
    let layout = pack_balls(&p).unwrap();
    let addr = [3usize, 12, 5];
    let mut center = vec![0.0; 5];
    let mut scale = 1.0;
    for &j in &addr {
        for (c, v) in center.iter_mut().zip(&layout.centers[j]) {
            *c += scale * v;
        }
        scale *= 0.15;
    }
    let got = cantor_point(&p, &layout, &CantorAddress(addr.to_vec()));
    assert!(dist(&got, &center) < 1e-15);
}

#[test]
fn singular_values_match_nalgebra() {
    let mut s = PointSampler::new(11);
    for (rows, cols) in [(4, 5), (5, 4), (3, 3), (2, 6), (4, 4)] {
        for _ in 0..50 {
            let data: Vec<f64> = (0..rows * cols).map(|_| s.gaussian()).collect();
            let ours = singular_values(&Matrix::from_row_major(rows, cols, data.clone()));
            let mut theirs: Vec<f64> = DMatrix::from_row_slice(rows, cols, &data)
                .singular_values()
                .iter()
                .copied()
                .collect();
            theirs.sort_by(|a, b| b.total_cmp(a));
            for (a, b) in ours.iter().zip(&theirs) {
                assert!((a - b).abs() < 1e-12 * theirs[0], "{ours:?} vs {theirs:?}");
            }
        }
    }
}

#[test]
fn rank_deficient_matrix_has_tiny_trailing_values() {
    let mut s = PointSampler::new(3);
    let left = DMatrix::from_fn(4, 3, |_, _| s.gaussian());
    let right = DMatrix::from_fn(3, 5, |_, _| s.gaussian());
    let product = &left * &right;
    let rows: Vec<Vec<f64>> = (0..4).map(|i| product.row(i).iter().copied().collect()).collect();
    let sv = singular_values(&Matrix::from_rows(&rows));
    assert!(sv[3] < 1e-13 * sv[0]);
    assert!(sv[2] > 1e-3 * sv[0]);
}

#[test]
fn fd_jacobian_of_similarity_chain_is_scalar() {
    let p = InstanceParams::<f64>::desk_default(7);
    let layout = pack_balls(&p).unwrap();
    let (sigma, _) = address_similarities(&p, &layout, &CantorAddress(vec![1, 7]));
    let jac = fd_jacobian(|x: &[f64]| Ok(sigma.apply(x)), &[0.1, -0.2, 0.3, 0.0, 0.05], 1e-4).unwrap();
    let expect = Matrix::identity(5).scale(0.15 * 0.15);
    assert!(jac.max_abs_diff(&expect) < 1e-12);
}

#[test]
fn instance_json_round_trip() {
    for inst in [Instance64::desk_default(7).unwrap(), Instance64::toy_default(3).unwrap()] {
        let text = inst.to_json().unwrap();
        let back = Instance64::from_json(&text).unwrap();
        assert_eq!(back, inst);
        let x = [0.2, -0.1, 0.05, 0.3, -0.2];
        if inst.domain_dim() == 5 {
            assert_eq!(back.eval_f(&x, 3).unwrap(), inst.eval_f(&x, 3).unwrap());
        }
    }
}

#[test]
fn single_precision_agrees_with_double() {
    let d = Instance64::desk_default(7).unwrap();
    let f = Instance32::desk_default(7).unwrap();
    let mut s = PointSampler::new(5);
    let mut worst = 0.0f64;
    let mut compared = 0;
    for _ in 0..200 {
        let x: Vec<f64> = s.in_ball(&[0.0; 5], 0.95);
        let xf: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let (a, b) = (d.eval_f(&x, 2).unwrap(), f.eval_f(&xf, 2).unwrap());
        if a.address_path != b.address_path || a.branch != b.branch {
            continue;
        }
        let diff = a.value.iter().zip(&b.value).map(|(u, v)| (u - *v as f64).abs()).fold(0.0, f64::max);
        worst = worst.max(diff);
        compared += 1;
    }
    assert!(compared > 150, "only {compared} comparable samples");
    assert!(worst < 1e-3, "worst f32/f64 difference {worst}");
}

#[test]
fn hopf_fibers_link_once() {
    let a = hopf_fiber::<f64>(&[0.0, 0.0, 1.0], 512).unwrap();
    let b = hopf_fiber::<f64>(&[0.0, 0.0, -1.0], 512).unwrap();
    assert_eq!(linking_number(&a, &b).unwrap().value.abs(), 1);
}

#[test]
fn circle_map_degree() {
    assert_eq!(winding_number::<f64>(&SphereMapKind::CircleDegree(2), 256).unwrap(), 2);
    assert_eq!(winding_number::<f64>(&SphereMapKind::CircleDegree(-3), 256).unwrap(), -3);
}
