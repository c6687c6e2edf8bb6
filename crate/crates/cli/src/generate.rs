use std::path::PathBuf;

use anyhow::Result;
use clap::ValueEnum;
use mopul::experiments::{gen_ideal_indexed, level_scale, perturb_refs, NoiseSpec};
use mopul::model::{preset_amopul1_box, preset_amopul2, problem_to_json, MatrixBox};
use serde::Serialize;

use crate::manifest::OutputSet;
use crate::Outcome;

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Level minimisation over symmetric boxes on `A` and `u_t`.
    Amopul1,
    /// Frobenius recovery of the ideal matrix at fixed control levels.
    Amopul2,
}

#[derive(clap::Args, Serialize)]
pub struct Args {
    #[arg(long, value_enum)]
    pub preset: Preset,
    /// State dimension.
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// Horizon.
    #[arg(long = "N", default_value_t = 4)]
    pub horizon: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Instance index within the seed.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    /// Reference noise mean.
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    /// Reference noise standard deviation; 0 keeps the ideal trajectory.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// `|a_ij|` bound (amopul1; optional extra box for amopul2).
    #[arg(long)]
    pub a_bound: Option<f64>,
    /// `|u_t^i|` bound (amopul1).
    #[arg(long, default_value_t = 0.5)]
    pub u_bound: f64,
    /// Cumulative level ω̃ (amopul2); defaults to 10 scaled to the instance size.
    #[arg(long)]
    pub omega_tilde: Option<f64>,
    /// Per-stage control level ω_t (amopul2); defaults to 3 scaled to the instance size.
    #[arg(long)]
    pub omega_t: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct IdealData<'a> {
    a_hat: &'a mopul::linalg::Matrix,
    u_hat: &'a [mopul::linalg::Vector],
    x_hat: &'a [mopul::linalg::Vector],
}

fn references_csv(refs: &[mopul::linalg::Vector]) -> String {
    let p = refs.first().map_or(0, |r| r.dim());
    let mut out = String::from("t");
    for i in 1..=p {
        out.push_str(&format!(",r{i}"));
    }
    out.push('\n');
    for (t, r) in refs.iter().enumerate() {
        out.push_str(&(t + 1).to_string());
        for v in r.iter() {
            out.push_str(&format!(",{v:.17e}"));
        }
        out.push('\n');
    }
    out
}

pub fn run(args: Args) -> Result<Outcome> {
    let noise = NoiseSpec::new(args.mu, args.sigma)?;
    let inst = gen_ideal_indexed(args.n, args.horizon, args.seed, args.index)?;
    let refs = perturb_refs(&inst, noise, args.seed);
    let spec = inst.spec.with_references(refs.clone())?;
    let problem = match args.preset {
        Preset::Amopul1 => preset_amopul1_box(spec, args.a_bound.unwrap_or(0.4), args.u_bound)?,
        Preset::Amopul2 => {
            let (stage, total) = level_scale(args.n, args.horizon);
            let omega_tilde = args.omega_tilde.unwrap_or(10.0 * total);
            let omega_t = args.omega_t.unwrap_or(3.0 * stage);
            let mut p = preset_amopul2(
                spec,
                inst.a_hat.clone(),
                inst.u_hat.clone(),
                omega_tilde,
                vec![omega_t],
            )?;
            if let Some(b) = args.a_bound {
                p.constraints.a_box = Some(MatrixBox::symmetric(args.n, b));
            }
            p
        }
    };

    let mut out = OutputSet::create(&args.out)?;
    let mut text = problem_to_json(&problem)?;
    text.push('\n');
    let path = out.write("problem.json", text.as_bytes())?;
    out.write("references.csv", references_csv(&refs).as_bytes())?;
    out.write_json(
        "ideal.json",
        &IdealData {
            a_hat: &inst.a_hat,
            u_hat: &inst.u_hat,
            x_hat: &inst.x_hat,
        },
    )?;
    out.finish("generate", &args, Some(args.seed))?;
    println!("wrote {}", path.display());
    Ok(Outcome::Ok)
}
