use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rank_obstruction::assembly::{pad_map_f, PaddedMapSpec};
use rank_obstruction::blocks::SkeletonBranch;
use rank_obstruction::certify::{
    experiment_local_approx, experiment_sard_breach, run_suite, Suite, SyntheticFactoredMap,
};
use rank_obstruction::{EvalResult64, Instance64};
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::CliError;

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

fn output(c: &RunConfig) -> Result<Box<dyn Write>, CliError> {
    Ok(match &c.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_json(c: &RunConfig, value: &Value) -> Result<(), CliError> {
    let mut w = output(c)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(io_err)?;
    writeln!(w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

fn config_echo(c: &RunConfig) -> Value {
    serde_json::to_value(c).unwrap_or(Value::Null)
}

pub fn build(c: &RunConfig) -> Result<(), CliError> {
    let inst = c.instance()?;
    let text = inst.to_json().map_err(io_err)?;
    let mut w = output(c)?;
    writeln!(w, "{text}").map_err(io_err)?;
    w.flush().map_err(io_err)
}

fn read_rows(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    reader
        .records()
        .map(|r| {
            r.map(|rec| rec.iter().map(str::to_string).collect())
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        })
        .collect()
}

fn branch_label(b: &SkeletonBranch) -> String {
    let sign = |s: i8| if s < 0 { '-' } else { '+' };
    match *b {
        SkeletonBranch::Outer { axis, sign: s } => format!("outer/{axis}{}", sign(s)),
        SkeletonBranch::Cell { cell, axis, sign: s } => format!("cell{cell}/{axis}{}", sign(s)),
    }
}

fn face_id(r: &EvalResult64) -> String {
    let addr: Vec<String> = r.address_path.0.iter().map(usize::to_string).collect();
    let tail = match &r.branch {
        Some(b) => branch_label(b),
        None => "truncated".into(),
    };
    format!("[{}]{}", addr.join("."), tail)
}

/// Rows of `k+1` coordinates, optionally followed by a depth; `ell` coordinates for the
/// padded map.
pub fn eval(c: &RunConfig) -> Result<(), CliError> {
    let inst = c.instance()?;
    let input = c
        .input
        .as_ref()
        .ok_or_else(|| CliError::Config("eval needs --input".into()))?;
    let rows = read_rows(input)?;
    let spec = c.padded.map(|p| PaddedMapSpec::new(p.ell, p.r, 0.75));
    if let Some(s) = &spec {
        s.validate(&inst.params).map_err(|e| CliError::Config(e.to_string()))?;
    }
    let dim = spec.map_or(inst.domain_dim(), |s| s.ell);
    let mut parsed = Vec::with_capacity(rows.len());
    for (line, row) in rows.iter().enumerate() {
        if row.len() != dim && row.len() != dim + 1 {
            return Err(CliError::Io(format!(
                "row {}: expected {dim} coordinates and an optional depth, got {} fields",
                line + 1,
                row.len()
            )));
        }
        let x: Vec<f64> = row[..dim]
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Io(format!("row {}: {e}", line + 1)))?;
        let depth = match row.get(dim) {
            Some(d) => d.parse::<usize>().map_err(|e| CliError::Io(format!("row {}: {e}", line + 1)))?,
            None => c.depth,
        };
        parsed.push((x, depth));
    }
    let mut w = output(c)?;
    if parsed.is_empty() {
        return w.flush().map_err(io_err);
    }
    let columns = if spec.is_some() {
        json!(["x", "depth", "value"])
    } else {
        let mut cols = vec!["x", "depth", "value", "depth_used", "address", "error_bound", "truncated", "face_id"];
        if c.jacobian {
            cols.extend(["jacobian", "singular_values", "near_singular_set"]);
        }
        json!(cols)
    };
    let header = json!({ "record": "header", "columns": columns, "config": config_echo(c) });
    writeln!(w, "{header}").map_err(io_err)?;
    for (x, depth) in &parsed {
        let rec = match &spec {
            Some(s) => match pad_map_f(&inst, s, x, *depth) {
                Ok(v) => json!({ "record": "value", "x": x, "depth": depth, "value": v }),
                Err(e) => json!({ "record": "error", "x": x, "depth": depth, "message": e.to_string() }),
            },
            None => eval_record(&inst, c, x, *depth),
        };
        writeln!(w, "{rec}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

fn eval_record(inst: &Instance64, c: &RunConfig, x: &[f64], depth: usize) -> Value {
    let r = match inst.eval_f(x, depth) {
        Ok(r) => r,
        Err(e) => return json!({ "record": "error", "x": x, "depth": depth, "message": e.to_string() }),
    };
    let mut rec = json!({
        "record": "value",
        "x": x,
        "depth": depth,
        "value": r.value,
        "depth_used": r.depth_used,
        "address": r.address_path.0,
        "error_bound": r.error_bound,
        "truncated": r.truncated,
        "face_id": face_id(&r),
    });
    if c.jacobian {
        match inst.jacobian_f(x, depth, c.fd_step) {
            Ok(j) => {
                rec["jacobian"] = json!(j.jacobian.to_rows());
                rec["singular_values"] = json!(j.singular_values);
                rec["near_singular_set"] = json!(j.near_singular_set);
            }
            Err(e) => rec["jacobian_error"] = json!(e.to_string()),
        }
    }
    rec
}

pub fn certify(c: &RunConfig) -> Result<(), CliError> {
    let suites = Suite::parse_selection(&c.suite).map_err(|e| CliError::Config(e.to_string()))?;
    let inst = c.instance()?;
    let cert = c.cert_config();
    let mut reports = Vec::new();
    let mut runtimes = Map::new();
    let mut timestamp = 0;
    let mut pass = true;
    for suite in suites {
        let r = run_suite(&inst, suite, &cert).map_err(|e| CliError::Config(e.to_string()))?;
        pass &= r.pass;
        runtimes.insert(r.suite.clone(), json!(r.metadata.runtime_ms));
        timestamp = timestamp.max(r.metadata.timestamp);
        let mut v = serde_json::to_value(&r).map_err(io_err)?;
        if let Some(o) = v.as_object_mut() {
            o.remove("metadata");
        }
        reports.push(v);
    }
    let doc = json!({
        "config": config_echo(c),
        "pass": pass,
        "reports": reports,
        "metadata": { "timestamp": timestamp, "runtime_ms": runtimes },
    });
    write_json(c, &doc)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Failed)
    }
}

fn split_metadata(mut v: Value) -> Value {
    if let Some(o) = v.as_object_mut() {
        if let Some(meta) = o.remove("metadata") {
            o.insert("metadata".into(), meta);
        }
    }
    v
}

pub fn experiment_sard(c: &RunConfig, occupancy_csv: Option<&Path>) -> Result<(), CliError> {
    let inst = c.instance()?;
    let r = experiment_sard_breach(&inst, &c.sard).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(p) = occupancy_csv {
        std::fs::write(p, r.occupancy.to_csv()).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    }
    let mut v = split_metadata(serde_json::to_value(&r).map_err(io_err)?);
    v["run_config"] = config_echo(c);
    write_json(c, &v)?;
    if r.pass {
        Ok(())
    } else {
        Err(CliError::Failed)
    }
}

pub fn experiment_approx(c: &RunConfig) -> Result<(), CliError> {
    let map = SyntheticFactoredMap::<f64>::default();
    let r = experiment_local_approx(&map, &c.approx.epsilons, c.approx.samples, c.seed)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut v = split_metadata(serde_json::to_value(&r).map_err(io_err)?);
    v["run_config"] = config_echo(c);
    write_json(c, &v)?;
    if r.pass {
        Ok(())
    } else {
        Err(CliError::Failed)
    }
}

pub fn export_slice(c: &RunConfig) -> Result<(), CliError> {
    let s = &c.slice;
    if s.resolution == 0 {
        return Err(CliError::Config("slice resolution must be positive".into()));
    }
    let inst = c.instance()?;
    let dim = inst.domain_dim();
    let [a, b] = s.axes;
    if a >= dim || b >= dim || a == b {
        return Err(CliError::Config(format!("slice axes must be two distinct indices below {dim}")));
    }
    if !(s.extent > 0.0) {
        return Err(CliError::Config("slice extent must be positive".into()));
    }
    let base = if s.offset.is_empty() {
        vec![0.0; dim]
    } else if s.offset.len() == dim {
        s.offset.clone()
    } else {
        return Err(CliError::Config(format!("slice offset needs {dim} coordinates")));
    };
    let coord = |i: usize| {
        if s.resolution == 1 {
            0.0
        } else {
            -s.extent + 2.0 * s.extent * i as f64 / (s.resolution - 1) as f64
        }
    };
    let mut w = csv::Writer::from_writer(output(c)?);
    let mut header = vec!["u".to_string(), "v".to_string()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    header.extend((0..inst.image_dim()).map(|i| format!("y{i}")));
    header.extend(["depth_used", "truncated", "face_id"].map(String::from));
    w.write_record(&header).map_err(io_err)?;
    for i in 0..s.resolution {
        for j in 0..s.resolution {
            let (u, v) = (coord(i), coord(j));
            let mut x = base.clone();
            x[a] += u;
            x[b] += v;
            if x.iter().map(|t| t * t).sum::<f64>() > 1.0 {
                continue;
            }
            let Ok(r) = inst.eval_f(&x, c.depth) else {
                continue;
            };
            let mut rec = vec![u.to_string(), v.to_string()];
            rec.extend(x.iter().map(f64::to_string));
            rec.extend(r.value.iter().map(f64::to_string));
            rec.push(r.depth_used.to_string());
            rec.push(r.truncated.to_string());
            rec.push(face_id(&r));
            w.write_record(&rec).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}
