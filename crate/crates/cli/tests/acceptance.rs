//! Acceptance run on the desk instance (m=3, k=4, n=2, r_b=0.15, s=0.05, seed 7).
//! Prints one PASS/FAIL line per criterion and exits non-zero if any fails.

use std::process::Command;
use std::time::Instant;

use rank_obstruction::certify::{
    experiment_local_approx, experiment_sard_breach, run_suite, BreachOutcome, CertConfig, SardConfig, Suite,
    SyntheticFactoredMap,
};
use rank_obstruction::numerics::PointSampler;
use rank_obstruction::scalar::dist;
use rank_obstruction::spheremaps::{cubify, suspend};
use rank_obstruction::Instance64;
use serde_json::Value;

struct Outcome {
    pass: bool,
    detail: String,
}

fn line(id: usize, name: &str, o: &Outcome) -> bool {
    println!("criterion {id:>2} {name:<24} {}  {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    o.pass
}

fn boundary_identity(inst: &Instance64) -> Outcome {
    let start = Instant::now();
    let mut s = PointSampler::new(101);
    let mut sup = 0.0f64;
    for _ in 0..10_000 {
        let x: Vec<f64> = s.on_sphere(&[0.0; 5], 1.0);
        let oracle = cubify(&suspend(&inst.params.sphere_map, &x).unwrap()).unwrap();
        let v = inst.base_map_f0(&x).unwrap();
        sup = sup.max(dist(&v, &oracle));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: sup < 1e-9 && secs < 30.0,
        detail: format!("sup = {sup:.3e} over 10^4 samples, {secs:.2} s"),
    }
}

fn gluing_residual(inst: &Instance64) -> Outcome {
    let mut s = PointSampler::new(202);
    let mut sup = 0.0f64;
    let (r, cw) = (inst.layout.radius, inst.params.cell_width());
    for _ in 0..10_000 {
        let i = s.index(inst.layout.len());
        let u: Vec<f64> = s.unit_vector(5);
        let c = &inst.layout.centers[i];
        let x: Vec<f64> = c.iter().zip(&u).map(|(a, b)| a + r * b).collect();
        let phi = cubify(&suspend(&inst.params.sphere_map, &u).unwrap()).unwrap();
        let oracle: Vec<f64> = inst.layout.cell_centers[i]
            .iter()
            .zip(&phi)
            .map(|(cc, p)| cc + cw * p)
            .collect();
        sup = sup.max(dist(&inst.base_map_f0(&x).unwrap(), &oracle));
    }
    Outcome {
        pass: sup < 1e-9,
        detail: format!("sup = {sup:.3e} over 10^4 samples on the first-generation spheres"),
    }
}

fn suite(inst: &Instance64, suite: Suite, cfg: &CertConfig) -> rank_obstruction::certify::CertReport {
    run_suite(inst, suite, cfg).expect("suite runs")
}

fn skeleton(inst: &Instance64, cfg: &CertConfig) -> Outcome {
    let r = suite(inst, Suite::Skeleton, cfg);
    Outcome {
        pass: r.pass && r.n_samples >= 10_000 && r.residuals.max <= 1e-12,
        detail: format!("{} resolved values, max offset {:.3e}", r.n_samples, r.residuals.max),
    }
}

fn rank(inst: &Instance64, cfg: &CertConfig) -> Outcome {
    let r = suite(inst, Suite::Rank, cfg);
    let neg = r.negative_control.clone().expect("rank suite has a negative control");
    Outcome {
        pass: r.pass
            && r.n_samples >= 10_000
            && r.exclusion.fraction < 0.05
            && r.residuals.max < 1e-6
            && neg.statistic > 1e-3,
        detail: format!(
            "{} retained, excluded {:.2}%, max sigma4/sigma1 {:.3e}, ridge {:.3e}",
            r.n_samples,
            100.0 * r.exclusion.fraction,
            r.residuals.max,
            neg.statistic
        ),
    }
}

fn selfsimilarity(inst: &Instance64, cfg: &CertConfig) -> Outcome {
    let r = suite(inst, Suite::SelfSimilarity, cfg);
    let bound = 2.0 * 4f64.sqrt() * 2f64.powi(-(cfg.depth as i32));
    Outcome {
        pass: r.pass && r.n_samples >= 1000 && r.residuals.max <= bound && r.details["empty_address_exact"] == true,
        detail: format!(
            "{} checks, max {:.3e} (bound {bound}), empty address exact: {}",
            r.n_samples, r.residuals.max, r.details["empty_address_exact"]
        ),
    }
}

fn convergence(inst: &Instance64, cfg: &CertConfig) -> Outcome {
    let r = suite(inst, Suite::Convergence, cfg);
    Outcome {
        pass: r.pass && r.n_samples >= 3000 && r.residuals.max <= 1.0,
        detail: format!(
            "{} checks, max |F_d - F_(d+2)| / (2 n^-d) = {:.3}",
            r.n_samples, r.residuals.max
        ),
    }
}

fn decay(inst: &Instance64, cfg: &CertConfig) -> Outcome {
    let r = suite(inst, Suite::Decay, cfg);
    let ratios = &r.details["ratios"];
    let pilot = &r.details["pilot"]["ratios"];
    Outcome {
        pass: r.pass && r.residuals.max < 0.15 && r.details["pilot"]["pass"] == true,
        detail: format!("ratios {ratios} vs gamma {:.4}, pilot {pilot} vs 0.5", r.details["gamma"]),
    }
}

fn linking(inst: &Instance64, cfg: &CertConfig) -> Outcome {
    let r = suite(inst, Suite::Linking, cfg);
    let vals = &r.details["closed_form"]["values"];
    let stable = vals[0] == vals[1] && vals[0].as_i64().map_or(false, |v| v.abs() == 1);
    Outcome {
        pass: r.pass && stable && r.residuals.max < 0.05,
        detail: format!(
            "values {vals} at 256/1024 samples, raw {}, max rounding error {:.2e}",
            r.details["closed_form"]["raw"], r.residuals.max
        ),
    }
}

fn sard(inst: &Instance64) -> Outcome {
    let start = Instant::now();
    let r = experiment_sard_breach(inst, &SardConfig::default()).expect("experiment runs");
    let secs = start.elapsed().as_secs_f64();
    let full = |o: &BreachOutcome| match o {
        BreachOutcome::Found {
            samples,
            full_rank_samples,
            ..
        } => *samples >= 200 && full_rank_samples == samples,
        BreachOutcome::NoBreachFound { .. } => false,
    };
    Outcome {
        pass: r.pass
            && full(&r.primary.outcome)
            && full(&r.refined.outcome)
            && r.occupancy.g_cells > 0
            && r.occupancy.f_cells_beyond_tube == 0
            && secs < 600.0,
        detail: format!(
            "breach at grid {} and {}, delta {:.3e} (in ball {:.3e}), g cells {}, F cells beyond tube {}, {secs:.0} s",
            r.primary.grid_res, r.refined.grid_res, r.delta, r.delta_in_ball, r.occupancy.g_cells, r.occupancy.f_cells_beyond_tube
        ),
    }
}

fn approx() -> Outcome {
    let r = experiment_local_approx(&SyntheticFactoredMap::<f64>::default(), &[0.2, 0.1, 0.05, 0.025], 1000, 7)
        .expect("experiment runs");
    let errs: Vec<String> = r.levels.iter().map(|l| format!("{:.2e}", l.sup_error)).collect();
    let ratio = r.levels.iter().map(|l| l.max_rank_ratio).fold(0.0, f64::max);
    let det = r.levels.iter().map(|l| l.min_det_dphi).fold(f64::INFINITY, f64::min);
    Outcome {
        pass: r.pass && r.error_strictly_decreasing && ratio < 1e-8 && det > 0.0,
        detail: format!("sup errors [{}], max sigma2/sigma1 {ratio:.2e}, min det {det:.4}", errs.join(", ")),
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let run = |name: &str| -> (Option<i32>, String) {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_rankob"))
            .args(["certify", "--suite", "all", "--seed", "7", "--out"])
            .arg(&path)
            .status()
            .expect("binary runs");
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&path).expect("report")).expect("json");
        v.as_object_mut().expect("object").remove("metadata");
        (status.code(), serde_json::to_string_pretty(&v).expect("serialize"))
    };
    let (c1, a) = run("a.json");
    let (c2, b) = run("b.json");
    Outcome {
        pass: a == b && c1 == Some(0) && c2 == Some(0),
        detail: format!("exit codes {c1:?}/{c2:?}, {} bytes, identical: {}", a.len(), a == b),
    }
}

fn main() {
    let inst = Instance64::desk_default(7).expect("desk instance builds");
    let cfg = CertConfig::default();
    let mut ok = true;
    ok &= line(1, "boundary identity", &boundary_identity(&inst));
    ok &= line(2, "gluing residual", &gluing_residual(&inst));
    ok &= line(3, "skeleton membership", &skeleton(&inst, &cfg));
    ok &= line(4, "rank bound", &rank(&inst, &cfg));
    ok &= line(5, "self-similarity", &selfsimilarity(&inst, &cfg));
    ok &= line(6, "value convergence", &convergence(&inst, &cfg));
    ok &= line(7, "derivative decay", &decay(&inst, &cfg));
    ok &= line(8, "Hopf linking", &linking(&inst, &cfg));
    ok &= line(9, "Sard breach", &sard(&inst));
    ok &= line(10, "factored approximation", &approx());
    ok &= line(11, "determinism", &determinism());
    println!("acceptance: {}", if ok { "all criteria pass" } else { "FAILURES" });
    if !ok {
        std::process::exit(1);
    }
}
