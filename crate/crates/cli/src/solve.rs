use std::path::PathBuf;

use anyhow::Result;
use mopul::model::{build_amopul, extract_solution, load_problem, Form};
use mopul::solver::{solve_traced, SolverConfig, Status};
use serde::Serialize;

use crate::manifest::OutputSet;
use crate::solution::{finite, CertificateInfo, SolutionFile};
use crate::Outcome;

#[derive(clap::Args, Serialize)]
pub struct Args {
    /// Problem JSON file.
    pub problem: PathBuf,
    /// `soc` (one second-order cone per stage) or `lmi` (arrow-matrix blocks).
    #[arg(long, default_value = "soc")]
    pub form: Form,
    #[arg(long, default_value_t = SolverConfig::default().tol_primal)]
    pub tol_primal: f64,
    #[arg(long, default_value_t = SolverConfig::default().tol_dual)]
    pub tol_dual: f64,
    #[arg(long, default_value_t = SolverConfig::default().tol_gap)]
    pub tol_gap: f64,
    #[arg(long, default_value_t = SolverConfig::default().max_iters)]
    pub max_iters: usize,
    /// Also write a per-iteration trace to `trace.txt`.
    #[arg(long)]
    pub trace: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

pub fn run(args: Args) -> Result<Outcome> {
    let problem = load_problem(&args.problem)?;
    let config = SolverConfig {
        tol_primal: args.tol_primal,
        tol_dual: args.tol_dual,
        tol_gap: args.tol_gap,
        max_iters: args.max_iters,
        ..SolverConfig::default()
    };
    let program = build_amopul(&problem, args.form)?;
    let mut out = OutputSet::create(&args.out)?;
    let mut trace = Vec::new();
    let sol = solve_traced(
        &program,
        &config,
        args.trace.then_some(&mut trace as &mut dyn std::io::Write),
    )?;
    let extracted = match sol.status {
        Status::Optimal => Some(extract_solution(&program, sol.x.as_slice())?),
        _ => None,
    };
    let file = SolutionFile {
        status: sol.status,
        form: args.form,
        iterations: sol.iterations,
        objective: finite(sol.objective),
        dual_objective: finite(sol.dual_objective),
        residuals: sol.residuals,
        a: extracted.as_ref().map(|e| e.a.clone()),
        u: extracted.as_ref().map(|e| e.u.clone()),
        omega: extracted.as_ref().map(|e| e.omega),
        xi: extracted.as_ref().map(|e| e.xi.clone()),
        certificate: sol.certificate.map(|c| CertificateInfo {
            residual: c.residual,
            ray: c.ray,
        }),
    };
    let path = out.write_json("solution.json", &file)?;
    if args.trace {
        out.write("trace.txt", &trace)?;
    }
    out.finish("solve", &args, None)?;

    println!("status      {}", sol.status);
    println!("iterations  {}", sol.iterations);
    println!("objective   {:.10e}", sol.objective);
    println!(
        "residuals   primal {:.3e}  dual {:.3e}  gap {:.3e}",
        sol.residuals.primal, sol.residuals.dual, sol.residuals.gap
    );
    if let Some(e) = &extracted {
        println!("omega       {:.10e}", e.omega);
    }
    if let Some(c) = &file.certificate {
        println!("certificate residual {:.3e}", c.residual);
    }
    println!("wrote {}", path.display());

    Ok(match sol.status {
        Status::Optimal => Outcome::Ok,
        Status::PrimalInfeasible | Status::DualInfeasible => Outcome::Infeasible,
        Status::IterationLimit | Status::NumericalFailure => Outcome::SolverFailure,
    })
}
