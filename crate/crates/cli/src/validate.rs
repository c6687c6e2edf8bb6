use std::path::PathBuf;

use anyhow::Result;
use mopul::model::{check_constraints, load_problem, ConstraintCheck};
use mopul::system::{cumulative_error, rollout_approx, rollout_exact};
use serde::Serialize;

use crate::manifest::OutputSet;
use crate::solution::SolutionFile;
use crate::Outcome;

#[derive(clap::Args, Serialize)]
pub struct Args {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long)]
    pub solution: PathBuf,
    /// A constraint passes when its margin is at least `-tol`.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Also write `validation.json` and a manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report {
    satisfied: bool,
    tol: f64,
    exact_cumulative_error: f64,
    approx_cumulative_error: f64,
    checks: Vec<ConstraintCheck>,
}

pub fn run(args: Args) -> Result<Outcome> {
    let problem = load_problem(&args.problem)?;
    let solution = SolutionFile::load(&args.solution)?;
    let point = solution.point()?;
    let spec = &problem.system;
    let exact = cumulative_error(
        &rollout_exact(spec, point.a, point.u)?,
        spec,
        &problem.error_norm,
    )?;
    let approx = cumulative_error(
        &rollout_approx(spec, point.a, point.u)?,
        spec,
        &problem.error_norm,
    )?;
    let checks = check_constraints(&problem, point.a, point.u, point.omega)?;
    let satisfied = checks.iter().all(|c| c.satisfied(args.tol));

    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &checks {
        let mark = if c.satisfied(args.tol) {
            "ok  "
        } else {
            "FAIL"
        };
        println!(
            "{mark} {:<width$}  margin {:>12.4e}  {}",
            c.name, c.margin, c.detail
        );
    }
    println!("exact cumulative error   {exact:.10e}");
    println!("approx cumulative error  {approx:.10e}");
    println!(
        "{}",
        if satisfied {
            "all constraints satisfied"
        } else {
            "constraint violation"
        }
    );

    if let Some(dir) = &args.out {
        let mut out = OutputSet::create(dir)?;
        out.write_json(
            "validation.json",
            &Report {
                satisfied,
                tol: args.tol,
                exact_cumulative_error: exact,
                approx_cumulative_error: approx,
                checks,
            },
        )?;
        out.finish("validate", &args, None)?;
    }
    Ok(if satisfied {
        Outcome::Ok
    } else {
        Outcome::ValidationFailed
    })
}
