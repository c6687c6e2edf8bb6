use std::path::PathBuf;

use anyhow::Result;
use mopul::experiments::{plot_data, raw_csv, run_default_table, summary_csv, Scale};
use serde::Serialize;

use crate::manifest::OutputSet;
use crate::Outcome;

#[derive(clap::Args, Serialize)]
pub struct Args {
    /// 1: level minimisation over boxes; 2: recovery across noise; 3: recovery across control levels.
    #[arg(long)]
    pub table: u8,
    /// `desk` (n = 20, N = 10, 10 instances) or `paper` (n = 100, N = 30, 20 instances).
    #[arg(long, default_value = "desk")]
    pub scale: Scale,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Override the number of instances per cell.
    #[arg(long)]
    pub instances: Option<usize>,
    /// Worker threads (default: `MOPUL_THREADS`, then all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

pub fn run(args: Args) -> Result<Outcome> {
    let mut run = args.scale.run_config(args.seed);
    if let Some(k) = args.instances {
        run.instances = k;
    }
    run.threads = args.threads;
    let table = run_default_table(args.table, args.scale, &run)?;

    let mut out = OutputSet::create(&args.out)?;
    out.write("summary.csv", summary_csv(&table).as_bytes())?;
    out.write("raw.csv", raw_csv(&table).as_bytes())?;
    for series in plot_data(&table) {
        out.write(
            &format!("plots/{}.dat", series.name),
            series.contents.as_bytes(),
        )?;
    }
    #[derive(Serialize)]
    struct Config<'a> {
        args: &'a Args,
        run: &'a mopul::experiments::RunConfig,
    }
    out.finish(
        "experiment",
        &Config {
            args: &args,
            run: &run,
        },
        Some(args.seed),
    )?;

    for s in &table.summaries {
        let c = &table.cells[s.cell];
        let levels = match (c.omega_tilde(), c.omega_t()) {
            (Some(w), Some(wt)) => format!("  omega_tilde {w:.4} omega_t {wt:.4}"),
            _ => String::new(),
        };
        println!(
            "cell {:>2}  mu {} sigma {}{levels}  {:<3} mean {:.4e} std {:.4e} ({} ok, {} failed)",
            s.cell,
            c.noise.mu,
            c.noise.sigma,
            s.metric.as_str(),
            s.mean,
            s.std,
            s.count,
            s.failures
        );
    }
    println!("wrote {}", args.out.display());
    Ok(Outcome::Ok)
}
