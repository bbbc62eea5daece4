//! Single-problem commands. Each writes one JSON document.

use std::error::Error;
use std::fs;
use std::path::Path;

use invkit::invariance::{
    build_stacked, certificate_program, certify_with, max_scaling_with, Certification, ProblemData,
};
use invkit::lp::{DenseSimplex, LinearProgram};
use invkit::oracle::exact_alpha_star;
use invkit::setrep::{InvariantSetRep, Membership};
use nalgebra::DVector;
use serde_json::{json, Value};

use crate::output::{self, Sink};
use crate::{ProblemArgs, ScaleArgs, EXIT_NEGATIVE};

pub type CliResult = Result<u8, Box<dyn Error>>;

pub fn load(args: &ProblemArgs) -> Result<ProblemData, Box<dyn Error>> {
    let text = fs::read_to_string(&args.input).map_err(|e| format!("{}: {e}", args.input.display()))?;
    let problem: ProblemData =
        serde_json::from_str(&text).map_err(|e| format!("schema error in {}: {e}", args.input.display()))?;
    Ok(match args.horizon {
        Some(n) => problem.with_horizon(n)?,
        None => problem,
    })
}

/// JSON has no infinity; unbounded scalings are written as the string "inf".
fn scalar(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn vector(v: &DVector<f64>) -> Value {
    json!(v.iter().copied().collect::<Vec<f64>>())
}

fn dump(lp: &LinearProgram, path: Option<&Path>) -> Result<(), Box<dyn Error>> {
    if let Some(p) = path {
        lp.dump(output::open(Some(p))?)?;
        log::info!("wrote LP with {} variables to {}", lp.num_vars(), p.display());
    }
    Ok(())
}

fn describe(problem: &ProblemData) -> Value {
    json!({ "n": problem.n(), "m": problem.m(), "N": problem.horizon })
}

pub fn certify(args: &ProblemArgs, solver: &DenseSimplex, dump_lp: Option<&Path>, out: &Sink) -> CliResult {
    let problem = load(args)?;
    dump(&certificate_program(&problem, false)?, dump_lp)?;
    match certify_with(&problem, solver)? {
        Certification::Certified(cert) => {
            let stacked = build_stacked(&problem)?;
            let check = cert.check(&stacked, problem.omega.rhs());
            out.write_json(&json!({
                "status": "certified",
                "problem": describe(&problem),
                "t_shape": [cert.t.nrows(), cert.t.ncols()],
                "m_shape": [cert.m.nrows(), cert.m.ncols()],
                "check": check,
                "certificate": {
                    "t": rows(&cert.t),
                    "m": rows(&cert.m),
                },
            }))?;
            Ok(0)
        }
        Certification::NotFound => {
            out.write_json(&json!({ "status": "not-found", "problem": describe(&problem) }))?;
            Ok(EXIT_NEGATIVE)
        }
    }
}

fn rows(m: &nalgebra::DMatrix<f64>) -> Value {
    json!(m.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>())
}

pub fn alpha(args: &ProblemArgs, solver: &DenseSimplex, dump_lp: Option<&Path>, out: &Sink) -> CliResult {
    let problem = load(args)?;
    dump(&certificate_program(&problem, true)?, dump_lp)?;
    match max_scaling_with(&problem, solver)? {
        Certification::Certified(cert) => {
            out.write_json(&json!({
                "status": "certified",
                "problem": describe(&problem),
                "alpha": scalar(cert.alpha),
                "gamma": cert.gamma,
                "certificate": {
                    "t": rows(&cert.t),
                    "m": rows(&cert.m),
                },
            }))?;
            Ok(0)
        }
        Certification::NotFound => {
            out.write_json(&json!({ "status": "not-found", "problem": describe(&problem) }))?;
            Ok(EXIT_NEGATIVE)
        }
    }
}

pub fn oracle_alpha(args: &ProblemArgs, out: &Sink) -> CliResult {
    let problem = load(args)?;
    let star = exact_alpha_star(&problem)?;
    out.write_json(&json!({
        "problem": describe(&problem),
        "alpha_star": scalar(star.alpha),
        "vertex_groups": star.groups,
    }))?;
    Ok(0)
}

/// The set representation at the requested or the largest certified scaling.
fn set_rep(problem: &ProblemData, scale: &ScaleArgs, solver: &DenseSimplex) -> Result<Option<InvariantSetRep>, Box<dyn Error>> {
    let alpha = match scale.alpha {
        Some(a) => a,
        None => match max_scaling_with(problem, solver)? {
            Certification::Certified(c) if c.alpha.is_finite() => c.alpha,
            Certification::Certified(_) => return Err("the certified scaling is unbounded; pass --alpha".into()),
            Certification::NotFound => return Ok(None),
        },
    };
    Ok(Some(InvariantSetRep::new(problem, alpha)?.with_solver(*solver)))
}

pub fn member(
    args: &ProblemArgs,
    scale: &ScaleArgs,
    point: &[f64],
    solver: &DenseSimplex,
    dump_lp: Option<&Path>,
    out: &Sink,
) -> CliResult {
    let problem = load(args)?;
    let Some(rep) = set_rep(&problem, scale, solver)? else {
        out.write_json(&json!({ "status": "not-found", "problem": describe(&problem) }))?;
        return Ok(EXIT_NEGATIVE);
    };
    let x = DVector::from_column_slice(point);
    if x.len() == problem.n() {
        dump(&rep.member_lp(&x)?, dump_lp)?;
    }
    match rep.member(&x)? {
        Membership::Inside(cert) => {
            let branches: Vec<Value> = rep.extract_controls(&cert).iter().map(|b| b.to_json()).collect();
            let (u, next) = rep.feedback(&cert);
            out.write_json(&json!({
                "inside": true,
                "alpha": rep.alpha(),
                "point": point,
                "certificate": cert.to_json(),
                "branches": branches,
                "feedback": { "u": vector(&u), "next": vector(&next) },
            }))?;
            Ok(0)
        }
        Membership::Outside => {
            out.write_json(&json!({ "inside": false, "alpha": rep.alpha(), "point": point }))?;
            Ok(EXIT_NEGATIVE)
        }
    }
}

pub fn ray(
    args: &ProblemArgs,
    scale: &ScaleArgs,
    direction: &[f64],
    solver: &DenseSimplex,
    dump_lp: Option<&Path>,
    out: &Sink,
) -> CliResult {
    let problem = load(args)?;
    let Some(rep) = set_rep(&problem, scale, solver)? else {
        out.write_json(&json!({ "status": "not-found", "problem": describe(&problem) }))?;
        return Ok(EXIT_NEGATIVE);
    };
    let v = DVector::from_column_slice(direction);
    if v.len() == problem.n() {
        dump(&rep.ray_lp(&v)?.0, dump_lp)?;
    }
    let hit = rep.ray_max(&v)?;
    out.write_json(&json!({
        "alpha": rep.alpha(),
        "direction": direction,
        "r": hit.r,
        "boundary_point": vector(&(&v * hit.r)),
        "certificate": hit.certificate.to_json(),
    }))?;
    Ok(0)
}
