//! Synthetic recovery experiments: ideal instances, perturbed references, batch
//! solves and CE/ACE/REA/REU summaries.

mod output;
pub mod rng;

pub use output::{plot_data, raw_csv, summary_csv, PlotSeries};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::model::{self, build_amopul, extract_solution, Extracted, Form, MopulProblem};
use crate::solver::{self, SolverConfig, Status};
use crate::system::{self, ErrorNorm, SystemSpec};
use rng::{Purpose, Stream};

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "MOPUL_THREADS";

/// Ground truth `(Â, Û, X̂)` with `x̂_t = Â x̂_{t−1} + û_{t−1}` and `B = C = I`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdealInstance {
    pub a_hat: Matrix,
    pub u_hat: Vec<Vector>,
    pub x_hat: Vec<Vector>,
    /// References are the unperturbed `x̂_1..x̂_N`.
    pub spec: SystemSpec,
    pub seed: u64,
    pub index: usize,
}

/// Componentwise `N(mu, sigma²)` reference noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mu: f64,
    pub sigma: f64,
}

impl NoiseSpec {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite() && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "invalid noise (mu={mu}, sigma={sigma})"
            )));
        }
        Ok(Self { mu, sigma })
    }
}

/// Instance `index` of the run keyed by `seed`: `x̂_0 ~ U(−0.5, 0.5)ⁿ`,
/// `Â_ij ~ N(0, 0.1²)`, `û_t = 1·s_t` with `s_t ~ U(−0.5, 0.5)`.
pub fn gen_ideal_indexed(
    n: usize,
    horizon: usize,
    seed: u64,
    index: usize,
) -> Result<IdealInstance> {
    if n == 0 || horizon == 0 {
        return Err(Error::InvalidArgument("n and N must be positive".into()));
    }
    let mut s0 = Stream::new(seed, index, 0, Purpose::InitialState);
    let x0 = Vector::from((0..n).map(|_| s0.uniform(-0.5, 0.5)).collect::<Vec<_>>());
    let mut sa = Stream::new(seed, index, 0, Purpose::IdealMatrix);
    let a_hat = Matrix::from_fn(n, n, |_, _| 0.1 * sa.standard_normal());
    let u_hat: Vec<Vector> = (0..horizon)
        .map(|t| {
            let s = Stream::new(seed, index, t, Purpose::IdealControl).uniform(-0.5, 0.5);
            Vector::filled(n, s)
        })
        .collect();
    let mut x_hat = vec![x0.clone()];
    for t in 0..horizon {
        let next = a_hat.mul_vec(&x_hat[t])?.add(&u_hat[t]);
        x_hat.push(next);
    }
    let spec = SystemSpec::identity(x0, x_hat[1..].to_vec())?;
    Ok(IdealInstance {
        a_hat,
        u_hat,
        x_hat,
        spec,
        seed,
        index,
    })
}

/// [`gen_ideal_indexed`] with instance index 0.
pub fn gen_ideal(n: usize, horizon: usize, seed: u64) -> Result<IdealInstance> {
    gen_ideal_indexed(n, horizon, seed, 0)
}

/// `r_t = x̂_t + e_t`, `t = 1..N`, with `e_t` from the noise streams of `(seed, inst.index, t)`.
///
/// The same standard-normal draws are reused for every `(mu, sigma)`.
pub fn perturb_refs(inst: &IdealInstance, noise: NoiseSpec, seed: u64) -> Vec<Vector> {
    (1..inst.x_hat.len())
        .map(|t| {
            let mut s = Stream::new(seed, inst.index, t, Purpose::Noise);
            let x = &inst.x_hat[t];
            Vector::from(
                x.iter()
                    .map(|v| v + noise.mu + noise.sigma * s.standard_normal())
                    .collect::<Vec<_>>(),
            )
        })
        .collect()
}

/// Recovery metrics of one solved instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `Σ ‖x*_t − r_t‖` along the nested rollout of the solution.
    pub ce: f64,
    /// `Σ ‖A r_{t−1} + u_{t−1} − r_t‖`.
    pub ace: f64,
    /// `‖A − Â‖_F / ‖Â‖_F`; absent when `Â = 0`.
    pub rea: Option<f64>,
    /// `‖U − Û‖_F / ‖Û‖_F` over stacked controls; absent when `Û = 0`.
    pub reu: Option<f64>,
}

fn stacked_norm(vs: &[Vector]) -> f64 {
    vs.iter().map(|v| v.norm2().powi(2)).sum::<f64>().sqrt()
}

pub fn metrics(inst: &IdealInstance, refs: &[Vector], a: &Matrix, u: &[Vector]) -> Result<Metrics> {
    let spec = inst.spec.with_references(refs.to_vec())?;
    let ce = system::cumulative_error(
        &system::rollout_exact(&spec, a, u)?,
        &spec,
        &ErrorNorm::Euclidean,
    )?;
    let ace = system::cumulative_error(
        &system::rollout_approx(&spec, a, u)?,
        &spec,
        &ErrorNorm::Euclidean,
    )?;
    let a_norm = inst.a_hat.frobenius();
    let rea = (a_norm > 0.0)
        .then(|| a.sub(&inst.a_hat).map(|d| d.frobenius() / a_norm))
        .transpose()?;
    let u_norm = stacked_norm(&inst.u_hat);
    let diff: Vec<Vector> = u.iter().zip(&inst.u_hat).map(|(x, y)| x.sub(y)).collect();
    let reu = (u_norm > 0.0).then(|| stacked_norm(&diff) / u_norm);
    Ok(Metrics { ce, ace, rea, reu })
}

/// Builds, solves and extracts one problem.
pub struct Solved {
    pub program: model::ConicProgram,
    pub solution: solver::Solution,
    /// Present when the solve is optimal.
    pub extracted: Option<Extracted>,
}

pub fn solve_problem(problem: &MopulProblem, form: Form, config: &SolverConfig) -> Result<Solved> {
    let program = build_amopul(problem, form)?;
    let solution = solver::solve(&program, config)?;
    let extracted = if solution.status == Status::Optimal {
        Some(extract_solution(&program, solution.x.as_slice())?)
    } else {
        None
    };
    Ok(Solved {
        program,
        solution,
        extracted,
    })
}

/// Multipliers `(stage, total)` carrying control levels from the reference size
/// `n = 100, N = 30` to `(n, N)`: per-stage noise norms scale with
/// `√(n(1 + 0.01 n))` (from `‖e_t − Â e_{t−1}‖`), cumulative ones also with `N`.
pub fn level_scale(n: usize, horizon: usize) -> (f64, f64) {
    let per = |k: f64| (k * (1.0 + 0.01 * k)).sqrt();
    let stage = per(n as f64) / per(100.0);
    (stage, stage * horizon as f64 / 30.0)
}

/// Which model a table solves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum CellModel {
    /// Level minimisation with `|a_ij| ≤ a_bound`, `|u_t^i| ≤ u_bound`.
    Amopul1Box { a_bound: f64, u_bound: f64 },
    /// Frobenius recovery with `ACE ≤ omega_tilde`, `‖u_t − û_t‖ ≤ omega_t`.
    Amopul2 { omega_tilde: f64, omega_t: f64 },
}

/// One grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub noise: NoiseSpec,
    pub model: CellModel,
}

impl Cell {
    pub fn omega_tilde(&self) -> Option<f64> {
        match self.model {
            CellModel::Amopul2 { omega_tilde, .. } => Some(omega_tilde),
            CellModel::Amopul1Box { .. } => None,
        }
    }

    pub fn omega_t(&self) -> Option<f64> {
        match self.model {
            CellModel::Amopul2 { omega_t, .. } => Some(omega_t),
            CellModel::Amopul1Box { .. } => None,
        }
    }
}

/// Shared run parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub horizon: usize,
    pub instances: usize,
    pub seed: u64,
    #[serde(default)]
    pub form: Form,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Worker threads; `None` reads [`THREADS_ENV`], falling back to rayon's default.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl RunConfig {
    /// `n = m = p = 20`, `N = 10`, 10 instances.
    pub fn desk(seed: u64) -> Self {
        Self {
            n: 20,
            horizon: 10,
            instances: 10,
            seed,
            form: Form::Soc,
            solver: SolverConfig::default(),
            threads: None,
        }
    }

    /// `n = m = p = 100`, `N = 30`, 20 instances.
    pub fn paper(seed: u64) -> Self {
        Self {
            n: 100,
            horizon: 30,
            instances: 20,
            ..Self::desk(seed)
        }
    }
}

/// Outcome of one `(cell, instance)` solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub cell: usize,
    pub instance: usize,
    pub status: Status,
    pub iterations: usize,
    pub objective: f64,
    /// Absent unless the solve is optimal.
    pub metrics: Option<Metrics>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "CE")]
    Ce,
    #[serde(rename = "ACE")]
    Ace,
    #[serde(rename = "REA")]
    Rea,
    #[serde(rename = "REU")]
    Reu,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Ce => "CE",
            Metric::Ace => "ACE",
            Metric::Rea => "REA",
            Metric::Reu => "REU",
        }
    }

    pub fn of(&self, m: &Metrics) -> Option<f64> {
        match self {
            Metric::Ce => Some(m.ce),
            Metric::Ace => Some(m.ace),
            Metric::Rea => m.rea,
            Metric::Reu => m.reu,
        }
    }
}

/// Mean and sample standard deviation of one metric over a cell's optimal solves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: Metric,
    pub mean: f64,
    /// `n − 1` convention; 0 for a single value.
    pub std: f64,
    pub count: usize,
    /// Instances of the cell whose solve was not optimal.
    pub failures: usize,
    pub cell: usize,
    pub config: Cell,
}

/// Results of one table sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRun {
    pub table: u8,
    pub run: RunConfig,
    pub cells: Vec<Cell>,
    pub metrics: Vec<Metric>,
    pub summaries: Vec<MetricSummary>,
    pub records: Vec<InstanceRecord>,
}

impl TableRun {
    pub fn summary(&self, cell: usize, metric: Metric) -> Option<&MetricSummary> {
        self.summaries
            .iter()
            .find(|s| s.cell == cell && s.metric == metric)
    }

    pub fn mean(&self, cell: usize, metric: Metric) -> Option<f64> {
        self.summary(cell, metric).map(|s| s.mean)
    }
}

/// Mean and sample standard deviation; `None` for an empty slice.
pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, std))
}

fn build_cell_problem(
    inst: &IdealInstance,
    refs: Vec<Vector>,
    cell: &Cell,
) -> Result<MopulProblem> {
    let spec = inst.spec.with_references(refs)?;
    match cell.model {
        CellModel::Amopul1Box { a_bound, u_bound } => {
            model::preset_amopul1_box(spec, a_bound, u_bound)
        }
        CellModel::Amopul2 {
            omega_tilde,
            omega_t,
        } => model::preset_amopul2(
            spec,
            inst.a_hat.clone(),
            inst.u_hat.clone(),
            omega_tilde,
            vec![omega_t],
        ),
    }
}

fn run_one(
    inst: &IdealInstance,
    cell_index: usize,
    cell: &Cell,
    run: &RunConfig,
) -> Result<InstanceRecord> {
    let refs = perturb_refs(inst, cell.noise, run.seed);
    let problem = build_cell_problem(inst, refs.clone(), cell)?;
    let solved = solve_problem(&problem, run.form, &run.solver)?;
    let metrics = match &solved.extracted {
        Some(e) => Some(metrics(inst, &refs, &e.a, &e.u)?),
        None => None,
    };
    Ok(InstanceRecord {
        cell: cell_index,
        instance: inst.index,
        status: solved.solution.status,
        iterations: solved.solution.iterations,
        objective: solved.solution.objective,
        metrics,
    })
}

fn thread_count(run: &RunConfig) -> Result<usize> {
    if let Some(t) = run.threads {
        return Ok(t.max(1));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.parse::<usize>().map(|t| t.max(1)).map_err(|_| {
            Error::InvalidArgument(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))
        }),
        Err(_) => Ok(rayon::current_num_threads()),
    }
}

/// Solves every `(cell, instance)` pair and summarises `metrics` per cell.
///
/// Jobs run on a dedicated pool; results are reduced in `(cell, instance)` order.
pub fn run_cells(
    table: u8,
    run: &RunConfig,
    cells: Vec<Cell>,
    metric_list: Vec<Metric>,
) -> Result<TableRun> {
    use rayon::prelude::*;

    if run.instances == 0 {
        return Err(Error::InvalidArgument(
            "instances must be at least 1".into(),
        ));
    }
    run.solver.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(run)?)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let records: Vec<InstanceRecord> = pool.install(|| -> Result<Vec<InstanceRecord>> {
        let ideals: Vec<IdealInstance> = (0..run.instances)
            .into_par_iter()
            .map(|i| gen_ideal_indexed(run.n, run.horizon, run.seed, i))
            .collect::<Result<_>>()?;
        let jobs: Vec<(usize, usize)> = (0..cells.len())
            .flat_map(|c| (0..run.instances).map(move |i| (c, i)))
            .collect();
        jobs.into_par_iter()
            .map(|(c, i)| run_one(&ideals[i], c, &cells[c], run))
            .collect()
    })?;

    let mut summaries = Vec::new();
    for (c, cell) in cells.iter().enumerate() {
        let rows: Vec<&InstanceRecord> = records.iter().filter(|r| r.cell == c).collect();
        let failures = rows.iter().filter(|r| r.metrics.is_none()).count();
        for metric in &metric_list {
            let values: Vec<f64> = rows
                .iter()
                .filter_map(|r| r.metrics.as_ref().and_then(|m| metric.of(m)))
                .collect();
            if let Some((mean, std)) = mean_std(&values) {
                summaries.push(MetricSummary {
                    metric: *metric,
                    mean,
                    std,
                    count: values.len(),
                    failures,
                    cell: c,
                    config: cell.clone(),
                });
            }
        }
    }
    Ok(TableRun {
        table,
        run: run.clone(),
        cells,
        metrics: metric_list,
        summaries,
        records,
    })
}

/// Level-minimisation sweep over `noise_grid` with the box `|a_ij| ≤ 0.4`, `|u_t^i| ≤ 0.5`;
/// summarises CE, REA and REU.
pub fn run_table1(run: &RunConfig, noise_grid: &[NoiseSpec]) -> Result<TableRun> {
    let cells = noise_grid
        .iter()
        .map(|&noise| Cell {
            noise,
            model: CellModel::Amopul1Box {
                a_bound: 0.4,
                u_bound: 0.5,
            },
        })
        .collect();
    run_cells(1, run, cells, vec![Metric::Ce, Metric::Rea, Metric::Reu])
}

/// Frobenius-recovery sweep over `noise_grid` at fixed levels; summarises REA and ACE.
pub fn run_table2(
    run: &RunConfig,
    noise_grid: &[NoiseSpec],
    omega_tilde: f64,
    omega_t: f64,
) -> Result<TableRun> {
    let cells = noise_grid
        .iter()
        .map(|&noise| Cell {
            noise,
            model: CellModel::Amopul2 {
                omega_tilde,
                omega_t,
            },
        })
        .collect();
    run_cells(2, run, cells, vec![Metric::Rea, Metric::Ace])
}

/// Frobenius-recovery sweep over the level grid (`omega_t` outer, `omega_tilde` inner)
/// at fixed noise; summarises REA and ACE.
pub fn run_table3(
    run: &RunConfig,
    omega_tilde_grid: &[f64],
    omega_t_grid: &[f64],
    noise: NoiseSpec,
) -> Result<TableRun> {
    let cells = omega_t_grid
        .iter()
        .flat_map(|&omega_t| {
            omega_tilde_grid.iter().map(move |&omega_tilde| Cell {
                noise,
                model: CellModel::Amopul2 {
                    omega_tilde,
                    omega_t,
                },
            })
        })
        .collect();
    run_cells(3, run, cells, vec![Metric::Rea, Metric::Ace])
}

/// Run size: desk (`n = 20`, `N = 10`, 10 instances, reduced grids) or the full reference size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Desk,
    Paper,
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => Err(Error::InvalidArgument(format!(
                "unknown scale '{other}' (expected desk|paper)"
            ))),
        }
    }
}

impl Scale {
    pub fn run_config(self, seed: u64) -> RunConfig {
        match self {
            Scale::Desk => RunConfig::desk(seed),
            Scale::Paper => RunConfig::paper(seed),
        }
    }
}

/// Default grids; levels are given at the reference size and carried to a run with [`grids::scaled`].
pub mod grids {
    use super::*;

    fn zero_mean(sigmas: &[f64]) -> Vec<NoiseSpec> {
        sigmas
            .iter()
            .map(|&sigma| NoiseSpec { mu: 0.0, sigma })
            .collect()
    }

    pub fn table1_noise(scale: Scale) -> Vec<NoiseSpec> {
        let (base, shifted): (&[f64], &[f64]) = match scale {
            Scale::Desk => (&[0.05, 0.1, 0.2, 0.4, 0.8], &[3.0]),
            Scale::Paper => (&[0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8], &[2.5, 3.0]),
        };
        let mut g = zero_mean(base);
        g.extend(shifted.iter().map(|&sigma| NoiseSpec { mu: 1.0, sigma }));
        g
    }

    pub fn table2_noise() -> Vec<NoiseSpec> {
        zero_mean(&[0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8])
    }

    /// `(ω̃, ω_t)` at the reference size.
    pub const TABLE2_LEVELS: (f64, f64) = (10.0, 3.0);

    pub const TABLE3_NOISE: NoiseSpec = NoiseSpec {
        mu: 0.0,
        sigma: 0.5,
    };

    pub fn table3_omega_tilde(scale: Scale) -> Vec<f64> {
        match scale {
            Scale::Desk => vec![2.0, 10.0, 30.0, 50.0, 70.0, 90.0, 110.0, 130.0, 160.0],
            Scale::Paper => {
                let mut g = vec![2.0];
                g.extend((1..=16).map(|k| 10.0 * k as f64));
                g
            }
        }
    }

    pub fn table3_omega_t(scale: Scale) -> Vec<f64> {
        match scale {
            Scale::Desk => vec![3.0, 6.0, 9.0],
            Scale::Paper => vec![3.0, 4.5, 6.0, 8.0],
        }
    }

    /// Scales `(ω̃, ω_t)` lists to the run size.
    pub fn scaled(run: &RunConfig, omega_tilde: &[f64], omega_t: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (stage, total) = level_scale(run.n, run.horizon);
        (
            omega_tilde.iter().map(|w| w * total).collect(),
            omega_t.iter().map(|w| w * stage).collect(),
        )
    }
}

/// Runs table `table` with the default grids for `scale`.
pub fn run_default_table(table: u8, scale: Scale, run: &RunConfig) -> Result<TableRun> {
    match table {
        1 => run_table1(run, &grids::table1_noise(scale)),
        2 => {
            let (w, wt) = grids::TABLE2_LEVELS;
            let (w, wt) = grids::scaled(run, &[w], &[wt]);
            run_table2(run, &grids::table2_noise(), w[0], wt[0])
        }
        3 => {
            let (w, wt) = grids::scaled(
                run,
                &grids::table3_omega_tilde(scale),
                &grids::table3_omega_t(scale),
            );
            run_table3(run, &w, &wt, grids::TABLE3_NOISE)
        }
        other => Err(Error::InvalidArgument(format!(
            "unknown table {other} (expected 1, 2 or 3)"
        ))),
    }
}
