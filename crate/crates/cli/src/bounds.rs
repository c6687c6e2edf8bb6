use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use mopul::bounds::{
    default_beta, remark3_check, remark3_level, theorem2_certificate, theorem3_check,
    theorem3_tighten, theorem4_bound, theorem4_certificate, theorem7_certificate, BoundCertificate,
};
use mopul::model::{load_problem, MopulProblem};
use mopul::system::ErrorNorm;
use serde::Serialize;

use crate::manifest::OutputSet;
use crate::solution::SolutionFile;
use crate::Outcome;

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    /// Nested error of a solution against `(Σ βⁱ) ω^u`.
    T2,
    /// Tightened level `ω_c / Σ βⁱ`; with a solution, its nested error against `ω_c`.
    T3,
    /// Cumulative bound from per-stage reference errors `eps` and contraction `gamma`.
    T4,
    /// Nested error of a recovery solved at the tightened level, against `ω`.
    T7,
    /// Tightened level under a Q-norm; with a solution, its nested Q-norm error against `ω_c`.
    R3,
}

#[derive(clap::Args, Serialize)]
pub struct Args {
    #[arg(long, value_enum)]
    pub theorem: Which,
    #[arg(long)]
    pub problem: Option<PathBuf>,
    #[arg(long)]
    pub solution: Option<PathBuf>,
    /// Contraction bound; t2 and t7 fall back to the problem's A-box when omitted.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Decoupled level for t2 (default: the solution's ω).
    #[arg(long)]
    pub omega_u: Option<f64>,
    /// Target nested level for t3, t7 and r3.
    #[arg(long)]
    pub omega_c: Option<f64>,
    /// Horizon when no problem is given.
    #[arg(long = "N")]
    pub horizon: Option<usize>,
    /// Comma-separated per-stage reference errors for t4.
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Also write `certificate.json` and a manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct Inputs {
    problem: Option<MopulProblem>,
    solution: Option<SolutionFile>,
}

impl Inputs {
    fn problem(&self) -> Result<&MopulProblem> {
        self.problem.as_ref().context("--problem is required")
    }

    fn solution(&self) -> Result<&SolutionFile> {
        self.solution.as_ref().context("--solution is required")
    }

    fn horizon(&self, args: &Args) -> Result<usize> {
        match (args.horizon, &self.problem) {
            (Some(n), _) => Ok(n),
            (None, Some(p)) => Ok(p.system.horizon()),
            (None, None) => bail!("--N or --problem is required"),
        }
    }

    fn beta(&self, args: &Args, fallback: bool) -> Result<f64> {
        if let Some(b) = args.beta {
            return Ok(b);
        }
        if fallback {
            if let Some(b) = default_beta(self.problem()?)? {
                return Ok(b);
            }
            bail!("--beta is required: the problem has no A-box or nuclear-norm ball to derive it from");
        }
        bail!("--beta is required")
    }
}

fn required(v: Option<f64>, flag: &str) -> Result<f64> {
    v.with_context(|| format!("{flag} is required"))
}

enum Evaluation {
    Level(f64),
    Certificate(BoundCertificate),
}

fn evaluate(args: &Args, inputs: &Inputs) -> Result<Evaluation> {
    Ok(match args.theorem {
        Which::T2 => {
            let problem = inputs.problem()?;
            let p = inputs.solution()?.point()?;
            let beta = inputs.beta(args, true)?;
            let omega_u = args.omega_u.unwrap_or(p.omega);
            Evaluation::Certificate(theorem2_certificate(
                &problem.system,
                p.a,
                p.u,
                beta,
                omega_u,
            )?)
        }
        Which::T3 => {
            let omega_c = required(args.omega_c, "--omega-c")?;
            let beta = inputs.beta(args, false)?;
            match &inputs.solution {
                Some(s) => {
                    let p = s.point()?;
                    Evaluation::Certificate(theorem3_check(
                        &inputs.problem()?.system,
                        p.a,
                        p.u,
                        omega_c,
                        beta,
                    )?)
                }
                None => Evaluation::Level(theorem3_tighten(omega_c, beta, inputs.horizon(args)?)?),
            }
        }
        Which::T4 => {
            if args.eps.is_empty() {
                bail!("--eps is required");
            }
            match &inputs.solution {
                Some(s) => {
                    let p = s.point()?;
                    Evaluation::Certificate(theorem4_certificate(
                        &inputs.problem()?.system,
                        p.objective,
                        p.a,
                        p.u,
                        &args.eps,
                    )?)
                }
                None => {
                    Evaluation::Level(theorem4_bound(&args.eps, required(args.gamma, "--gamma")?)?)
                }
            }
        }
        Which::T7 => {
            let problem = inputs.problem()?;
            let p = inputs.solution()?.point()?;
            let omega_c = required(args.omega_c, "--omega-c")?;
            Evaluation::Certificate(theorem7_certificate(
                problem,
                omega_c,
                inputs.beta(args, true)?,
                p.a,
                p.u,
            )?)
        }
        Which::R3 => {
            let problem = inputs.problem()?;
            let ErrorNorm::QNorm { q } = &problem.error_norm else {
                bail!("r3 needs a problem whose error norm is a Q-norm");
            };
            let omega_c = required(args.omega_c, "--omega-c")?;
            let beta = inputs.beta(args, false)?;
            match &inputs.solution {
                Some(s) => {
                    let p = s.point()?;
                    Evaluation::Certificate(remark3_check(
                        &problem.system,
                        p.a,
                        p.u,
                        omega_c,
                        beta,
                        q,
                    )?)
                }
                None => {
                    Evaluation::Level(remark3_level(omega_c, beta, problem.system.horizon(), q)?)
                }
            }
        }
    })
}

pub fn run(args: Args) -> Result<Outcome> {
    let inputs = Inputs {
        problem: args.problem.as_deref().map(load_problem).transpose()?,
        solution: args
            .solution
            .as_deref()
            .map(SolutionFile::load)
            .transpose()?,
    };
    let result = evaluate(&args, &inputs)?;
    let (json, outcome) = match &result {
        Evaluation::Level(v) => {
            println!("{v}");
            (
                serde_json::json!({ "theorem": args.theorem, "value": v }),
                Outcome::Ok,
            )
        }
        Evaluation::Certificate(c) => {
            println!("{}", serde_json::to_string_pretty(c)?);
            let outcome = if c.holds {
                Outcome::Ok
            } else {
                Outcome::ValidationFailed
            };
            (serde_json::to_value(c)?, outcome)
        }
    };
    if let Some(dir) = &args.out {
        let mut out = OutputSet::create(dir)?;
        out.write_json("certificate.json", &json)?;
        out.finish("bounds", &args, None)?;
    }
    Ok(outcome)
}
