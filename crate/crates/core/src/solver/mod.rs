//! Primal-dual interior-point method for `min cᵀx  s.t.  G x + s = h, s ∈ K`
//! over products of zero, nonnegative, second-order and PSD cones.
//!
//! Homogeneous self-dual embedding, Nesterov-Todd scaling and a Mehrotra
//! predictor-corrector. Zero-cone rows are handled as equality constraints.

mod check;
mod cones;
mod kkt;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use check::{check_kkt, KktReport};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, Vector};
use crate::model::{Cone, ConicProgram};
use cones::{Block, Kind, Scaling};
use kkt::{Kkt, Reduced, SparseRows};

const STEP_FRACTION: f64 = 0.99;
const STALL_STEP: f64 = 1e-10;
const RELAXED_FACTOR: f64 = 10.0;
const BORDER_REFINE_STEPS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub tol_gap: f64,
    pub max_iters: usize,
    pub psd_side_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_primal: 1e-8,
            tol_dual: 1e-8,
            tol_gap: 1e-8,
            max_iters: 200,
            psd_side_cap: 50,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let tols = [self.tol_primal, self.tol_dual, self.tol_gap];
        if tols.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidArgument(
                "solver tolerances must be positive".into(),
            ));
        }
        if self.max_iters < 1 || self.psd_side_cap < 1 {
            return Err(Error::InvalidArgument(
                "solver caps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    IterationLimit,
    NumericalFailure,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::PrimalInfeasible => "primal_infeasible",
            Status::DualInfeasible => "dual_infeasible",
            Status::IterationLimit => "iteration_limit",
            Status::NumericalFailure => "numerical_failure",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Infeasibility ray.
///
/// For primal infeasibility `ray` is a dual vector over all rows with
/// `hᵀ ray = −1`, `Gᵀ ray ≈ 0` and `ray ∈ K*`. For dual infeasibility it is a
/// primal direction with `cᵀ ray = −1` and `−G ray ∈ K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub ray: Vector,
    /// Normalised residual (`‖Gᵀ ray‖` or the cone/equality violation of `−G ray`).
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: Status,
    pub x: Vector,
    pub slacks: Vector,
    pub duals: Vector,
    pub objective: f64,
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub certificate: Option<Certificate>,
    /// Set on numerical failure: iteration and pivot details.
    pub failure: Option<String>,
}

/// Solves without tracing.
pub fn solve(program: &ConicProgram, config: &SolverConfig) -> Result<Solution> {
    solve_traced(program, config, None)
}

struct Problem {
    c: Vec<f64>,
    g: SparseRows,
    h: Vec<f64>,
    a: SparseRows,
    b: Vec<f64>,
    blocks: Vec<Block>,
    /// Program row of each inequality row and each equality row.
    ineq_rows: Vec<usize>,
    eq_rows: Vec<usize>,
    degree: usize,
}

impl Problem {
    fn split(program: &ConicProgram) -> Self {
        let gm = &program.constraint_matrix;
        let mut ineq_rows = Vec::new();
        let mut eq_rows = Vec::new();
        let mut blocks = Vec::new();
        for (range, cone) in program.block_ranges().into_iter().zip(&program.cone_blocks) {
            let kind = match *cone {
                Cone::Zero(_) => {
                    eq_rows.extend(range);
                    continue;
                }
                Cone::Nonneg(_) => Kind::Nonneg,
                Cone::SecondOrder(_) => Kind::Soc,
                Cone::Psd(side) => Kind::Psd(side),
            };
            if range.is_empty() {
                continue;
            }
            blocks.push(Block {
                kind,
                start: ineq_rows.len(),
                dim: range.len(),
            });
            ineq_rows.extend(range);
        }
        let nx = program.num_vars;
        let g = SparseRows::from_rows(nx, ineq_rows.iter().map(|&r| gm.row(r)));
        let a = SparseRows::from_rows(nx, eq_rows.iter().map(|&r| gm.row(r)));
        let h = ineq_rows.iter().map(|&r| program.offsets[r]).collect();
        let b = eq_rows.iter().map(|&r| program.offsets[r]).collect();
        let degree = blocks.iter().map(Block::degree).sum();
        Self {
            c: program.objective_coeffs.clone(),
            g,
            h,
            a,
            b,
            blocks,
            ineq_rows,
            eq_rows,
            degree,
        }
    }
}

#[derive(Clone)]
struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
}

struct Resid {
    rx: Vec<f64>,
    ry: Vec<f64>,
    rz: Vec<f64>,
    rtau: f64,
}

#[derive(Clone)]
struct Metrics {
    pres: f64,
    dres: f64,
    gap: f64,
    pcost: f64,
    dcost: f64,
}

fn max_abs_norm(a: &[f64], b: &[f64]) -> f64 {
    (dot(a, a) + dot(b, b)).sqrt()
}

impl Problem {
    fn residuals(&self, it: &Iterate) -> Resid {
        let nx = self.c.len();
        let mut rx = vec![0.0; nx];
        self.a.tr_mul_add(&it.y, &mut rx);
        self.g.tr_mul_add(&it.z, &mut rx);
        for i in 0..nx {
            rx[i] += self.c[i] * it.tau;
        }
        let mut ry = vec![0.0; self.b.len()];
        self.a.mul(&it.x, &mut ry);
        for i in 0..ry.len() {
            ry[i] -= self.b[i] * it.tau;
        }
        let mut rz = vec![0.0; self.h.len()];
        self.g.mul(&it.x, &mut rz);
        for i in 0..rz.len() {
            rz[i] += it.s[i] - self.h[i] * it.tau;
        }
        let rtau = it.kappa + dot(&self.c, &it.x) + dot(&self.b, &it.y) + dot(&self.h, &it.z);
        Resid { rx, ry, rz, rtau }
    }

    fn metrics(&self, it: &Iterate, r: &Resid) -> Metrics {
        let bh = max_abs_norm(&self.b, &self.h).max(1.0);
        let cn = norm2(&self.c).max(1.0);
        let pres = max_abs_norm(&r.ry, &r.rz) / it.tau / bh;
        let dres = norm2(&r.rx) / it.tau / cn;
        let pcost = dot(&self.c, &it.x) / it.tau;
        let dcost = -(dot(&self.b, &it.y) + dot(&self.h, &it.z)) / it.tau;
        let scale = 1.0f64.max(pcost.abs()).max(dcost.abs());
        let comp = dot(&it.s, &it.z) / (it.tau * it.tau);
        let gap = ((pcost - dcost).abs().max(comp)) / scale;
        Metrics {
            pres,
            dres,
            gap,
            pcost,
            dcost,
        }
    }

    /// Primal infeasibility measure `‖Aᵀy + Gᵀz‖ / (−bᵀy − hᵀz)`, if the denominator is positive.
    fn primal_infeasibility(&self, it: &Iterate) -> Option<f64> {
        let denom = -(dot(&self.b, &it.y) + dot(&self.h, &it.z));
        if !(denom > 0.0) {
            return None;
        }
        let mut v = vec![0.0; self.c.len()];
        self.a.tr_mul_add(&it.y, &mut v);
        self.g.tr_mul_add(&it.z, &mut v);
        Some(norm2(&v) / denom / norm2(&self.c).max(1.0))
    }

    /// Dual infeasibility measure `‖(A x, G x + s)‖ / (−cᵀx)`, if the denominator is positive.
    fn dual_infeasibility(&self, it: &Iterate) -> Option<f64> {
        let denom = -dot(&self.c, &it.x);
        if !(denom > 0.0) {
            return None;
        }
        let mut ax = vec![0.0; self.b.len()];
        self.a.mul(&it.x, &mut ax);
        let mut gs = vec![0.0; self.h.len()];
        self.g.mul(&it.x, &mut gs);
        for i in 0..gs.len() {
            gs[i] += it.s[i];
        }
        Some(max_abs_norm(&ax, &gs) / denom / max_abs_norm(&self.b, &self.h).max(1.0))
    }
}

struct Direction {
    dx: Vec<f64>,
    dy: Vec<f64>,
    dz: Vec<f64>,
    ds: Vec<f64>,
    dtau: f64,
    dkappa: f64,
    /// Scaled directions `W⁻ᵀ ds` and `W dz`.
    ds_scaled: Vec<f64>,
    dz_scaled: Vec<f64>,
}

struct StepContext<'a> {
    problem: &'a Problem,
    scalings: &'a [Scaling],
    lambda: &'a [f64],
    reduced: Reduced<'a>,
    /// `W⁻ᵀ h`.
    scaled_h: Vec<f64>,
    /// Solution for the `dτ` column, `(−c, b, W⁻ᵀh)`.
    base: (Vec<f64>, Vec<f64>, Vec<f64>),
    base_denominator: f64,
}

impl StepContext<'_> {
    fn for_blocks(&self, mut f: impl FnMut(&Block, &Scaling, std::ops::Range<usize>)) {
        for (b, sc) in self.problem.blocks.iter().zip(self.scalings) {
            f(b, sc, b.range());
        }
    }

    fn blockwise(&self, v: &[f64], op: impl Fn(&Scaling, &[f64], &mut [f64])) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.for_blocks(|_, sc, rg| op(sc, &v[rg.clone()], &mut out[rg]));
        out
    }

    /// Solves the bordered system
    /// `Aᵀdy + G̃ᵀdz̃ + c dτ = q1`, `A dx − b dτ = q2`, `G̃ dx − dz̃ − h̃ dτ = q3`,
    /// `cᵀdx + bᵀdy + h̃ᵀdz̃ − (κ/τ) dτ = q4`.
    fn bordered(
        &self,
        q1: &[f64],
        q2: &[f64],
        q3: &[f64],
        q4: f64,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64) {
        let p = self.problem;
        let (x2, y2, z2) = self.reduced.solve(q1, q2, q3);
        let (x1, y1, z1) = &self.base;
        let dtau = (q4 - dot(&p.c, &x2) - dot(&p.b, &y2) - dot(&self.scaled_h, &z2))
            / self.base_denominator;
        let comb = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(u, v)| u + dtau * v)
                .collect::<Vec<f64>>()
        };
        (comb(&x2, x1), comb(&y2, y1), comb(&z2, z1), dtau)
    }

    /// Residual of the first two bordered equations, with `G̃ᵀdz̃` evaluated as `Gᵀ(W⁻¹dz̃)`.
    fn bordered_residual(
        &self,
        q1: &[f64],
        q2: &[f64],
        sol: &(Vec<f64>, Vec<f64>, Vec<f64>, f64),
    ) -> (Vec<f64>, Vec<f64>) {
        let p = self.problem;
        let (dx, dy, dz, dtau) = sol;
        let mut lhs1 = vec![0.0; dx.len()];
        p.a.tr_mul_add(dy, &mut lhs1);
        p.g.tr_mul_add(&self.blockwise(dz, Scaling::apply_winv), &mut lhs1);
        let e1 = (0..dx.len())
            .map(|i| q1[i] - lhs1[i] - p.c[i] * dtau)
            .collect();
        let mut ax = vec![0.0; dy.len()];
        p.a.mul(dx, &mut ax);
        let e2 = (0..dy.len())
            .map(|i| q2[i] - ax[i] + p.b[i] * dtau)
            .collect();
        (e1, e2)
    }

    /// Newton direction with residual weight `eta` and complementarity targets `ds_target`, `dkappa_target`.
    fn direction(
        &self,
        it: &Iterate,
        r: &Resid,
        eta: f64,
        ds_target: &[f64],
        dkappa_target: f64,
    ) -> Direction {
        let p = self.problem;
        let m = ds_target.len();
        let mut lds = vec![0.0; m];
        self.for_blocks(|b, sc, rg| {
            cones::jordan_divide(
                b.kind,
                sc,
                &self.lambda[rg.clone()],
                &ds_target[rg.clone()],
                &mut lds[rg],
            )
        });
        let scaled_rz = self.blockwise(&r.rz, Scaling::apply_winv_t);

        let q1: Vec<f64> = r.rx.iter().map(|v| -eta * v).collect();
        let q2: Vec<f64> = r.ry.iter().map(|v| -eta * v).collect();
        let q3: Vec<f64> = scaled_rz
            .iter()
            .zip(&lds)
            .map(|(v, l)| -eta * v - l)
            .collect();
        let q4 = -eta * r.rtau - dkappa_target / it.tau;
        let mut sol = self.bordered(&q1, &q2, &q3, q4);
        let norm =
            |e: &(Vec<f64>, Vec<f64>)| e.0.iter().chain(&e.1).fold(0.0f64, |m, v| m.max(v.abs()));
        let mut err = self.bordered_residual(&q1, &q2, &sol);
        let zero3 = vec![0.0; m];
        for _ in 0..BORDER_REFINE_STEPS {
            let e = norm(&err);
            if e == 0.0 {
                break;
            }
            let corr = self.bordered(&err.0, &err.1, &zero3, 0.0);
            let cand = (
                sol.0.iter().zip(&corr.0).map(|(a, b)| a + b).collect(),
                sol.1.iter().zip(&corr.1).map(|(a, b)| a + b).collect(),
                sol.2.iter().zip(&corr.2).map(|(a, b)| a + b).collect(),
                sol.3 + corr.3,
            );
            let cand_err = self.bordered_residual(&q1, &q2, &cand);
            if norm(&cand_err) >= e {
                break;
            }
            sol = cand;
            err = cand_err;
        }
        let (dx, dy, dz_scaled, dtau) = sol;
        let dz = self.blockwise(&dz_scaled, Scaling::apply_winv);
        let dkappa = (dkappa_target - it.kappa * dtau) / it.tau;

        // ds from the linearised primal equation, so that it is satisfied to rounding
        let mut ds = vec![0.0; m];
        p.g.mul(&dx, &mut ds);
        for i in 0..m {
            ds[i] = -eta * r.rz[i] + p.h[i] * dtau - ds[i];
        }
        let ds_scaled = self.blockwise(&ds, Scaling::apply_winv_t);
        Direction {
            dx,
            dy,
            dz,
            ds,
            dtau,
            dkappa,
            ds_scaled,
            dz_scaled,
        }
    }

    fn max_step(&self, it: &Iterate, d: &Direction) -> f64 {
        let mut alpha = f64::INFINITY;
        self.for_blocks(|b, sc, rg| {
            let lam = &self.lambda[rg.clone()];
            alpha = alpha.min(cones::max_step(b.kind, sc, lam, &d.ds_scaled[rg.clone()]));
            alpha = alpha.min(cones::max_step(b.kind, sc, lam, &d.dz_scaled[rg]));
        });
        if d.dtau < 0.0 {
            alpha = alpha.min(-it.tau / d.dtau);
        }
        if d.dkappa < 0.0 {
            alpha = alpha.min(-it.kappa / d.dkappa);
        }
        alpha
    }
}

fn within(m: &Metrics, cfg: &SolverConfig, factor: f64) -> bool {
    m.pres <= factor * cfg.tol_primal
        && m.dres <= factor * cfg.tol_dual
        && m.gap <= factor * cfg.tol_gap
}

/// Solves `program`, optionally writing one line per iteration to `trace`.
pub fn solve_traced(
    program: &ConicProgram,
    config: &SolverConfig,
    mut trace: Option<&mut dyn Write>,
) -> Result<Solution> {
    config.validate()?;
    program.validate()?;
    for cone in &program.cone_blocks {
        if let Cone::Psd(side) = *cone {
            if side > config.psd_side_cap {
                return Err(Error::PsdTooLarge {
                    side,
                    cap: config.psd_side_cap,
                });
            }
        }
    }
    let p = Problem::split(program);
    let nx = p.c.len();
    let m = p.h.len();

    let mut e = vec![0.0; m];
    for b in &p.blocks {
        cones::identity(b.kind, &mut e[b.range()]);
    }
    let mut it = Iterate {
        x: vec![0.0; nx],
        y: vec![0.0; p.b.len()],
        z: e.clone(),
        s: e.clone(),
        tau: 1.0,
        kappa: 1.0,
    };
    let mut kkt = Kkt::new(&p.g, &p.a, &p.blocks);
    let mut status = None;
    let mut failure = None;
    let mut iterations = 0;
    let mut stalls = 0;
    let mut metrics;
    let mut best: Option<(f64, Iterate, Metrics)> = None;

    if let Some(w) = trace.as_deref_mut() {
        let _ = writeln!(w, "iter mu pres dres gap tau kappa step");
    }
    loop {
        let r = p.residuals(&it);
        metrics = p.metrics(&it, &r);
        let mu = (dot(&it.s, &it.z) + it.tau * it.kappa) / (p.degree as f64 + 1.0);

        let score = (metrics.pres / config.tol_primal)
            .max(metrics.dres / config.tol_dual)
            .max(metrics.gap / config.tol_gap);
        if score.is_finite() && best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, it.clone(), metrics.clone()));
        }
        if within(&metrics, config, 1.0) {
            status = Some(Status::Optimal);
            break;
        }
        if p.primal_infeasibility(&it)
            .is_some_and(|v| v <= config.tol_primal)
        {
            status = Some(Status::PrimalInfeasible);
            break;
        }
        if p.dual_infeasibility(&it)
            .is_some_and(|v| v <= config.tol_dual)
        {
            status = Some(Status::DualInfeasible);
            break;
        }
        if iterations >= config.max_iters {
            break;
        }

        let scalings: std::result::Result<Vec<Scaling>, _> = p
            .blocks
            .iter()
            .map(|b| Scaling::compute(b, &it.s[b.range()], &it.z[b.range()]))
            .collect();
        let Ok(scalings) = scalings else {
            failure = Some(format!(
                "iteration {iterations}: scaling point left the cone interior"
            ));
            break;
        };
        let mut lambda = vec![0.0; m];
        for (b, sc) in p.blocks.iter().zip(&scalings) {
            sc.lambda(&it.z[b.range()], &mut lambda[b.range()]);
        }
        if let Err(f) = kkt.factor(&p.g, &p.a, &p.blocks, &scalings) {
            failure = Some(format!(
                "iteration {iterations}: KKT factorization breakdown at pivot {} (value {:e})",
                f.pivot, f.value
            ));
            break;
        }
        let reduced = Reduced {
            g: &p.g,
            a: &p.a,
            kkt: &kkt,
        };
        let mut scaled_h = vec![0.0; m];
        for (b, sc) in p.blocks.iter().zip(&scalings) {
            sc.apply_winv_t(&p.h[b.range()], &mut scaled_h[b.range()]);
        }
        let neg_c: Vec<f64> = p.c.iter().map(|v| -v).collect();
        let base = reduced.solve(&neg_c, &p.b, &scaled_h);
        let base_denominator =
            dot(&p.c, &base.0) + dot(&p.b, &base.1) + dot(&scaled_h, &base.2) - it.kappa / it.tau;
        let ctx = StepContext {
            problem: &p,
            scalings: &scalings,
            lambda: &lambda,
            reduced,
            scaled_h,
            base,
            base_denominator,
        };

        // predictor
        let mut lam_sq = vec![0.0; m];
        for b in &p.blocks {
            let rg = b.range();
            cones::jordan_product(
                b.kind,
                &lambda[rg.clone()],
                &lambda[rg.clone()],
                &mut lam_sq[rg],
            );
        }
        let ds_aff: Vec<f64> = lam_sq.iter().map(|v| -v).collect();
        let d_aff = ctx.direction(&it, &r, 1.0, &ds_aff, -it.tau * it.kappa);
        let alpha_aff = ctx.max_step(&it, &d_aff).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // corrector
        let mut cross = vec![0.0; m];
        let mut ident = vec![0.0; m];
        for b in &p.blocks {
            let rg = b.range();
            cones::jordan_product(
                b.kind,
                &d_aff.ds_scaled[rg.clone()],
                &d_aff.dz_scaled[rg.clone()],
                &mut cross[rg.clone()],
            );
            cones::identity(b.kind, &mut ident[rg]);
        }
        let ds_comb: Vec<f64> = (0..m)
            .map(|i| -lam_sq[i] - cross[i] + sigma * mu * ident[i])
            .collect();
        let dk_comb = -it.tau * it.kappa - d_aff.dtau * d_aff.dkappa + sigma * mu;
        let d = ctx.direction(&it, &r, 1.0 - sigma, &ds_comb, dk_comb);
        let alpha = (STEP_FRACTION * ctx.max_step(&it, &d)).min(1.0);

        let finite =
            d.dx.iter()
                .chain(&d.dz)
                .chain(&d.ds)
                .chain(&d.dy)
                .all(|v| v.is_finite())
                && d.dtau.is_finite()
                && d.dkappa.is_finite();
        if !finite || !(alpha > 0.0) {
            failure = Some(format!("iteration {iterations}: non-finite or zero step"));
            break;
        }
        if let Some(w) = trace.as_deref_mut() {
            let _ = writeln!(
                w,
                "{iterations} {mu:.6e} {:.6e} {:.6e} {:.6e} {:.6e} {:.6e} {alpha:.6e}",
                metrics.pres, metrics.dres, metrics.gap, it.tau, it.kappa
            );
        }
        for i in 0..nx {
            it.x[i] += alpha * d.dx[i];
        }
        for i in 0..it.y.len() {
            it.y[i] += alpha * d.dy[i];
        }
        for i in 0..m {
            it.z[i] += alpha * d.dz[i];
            it.s[i] += alpha * d.ds[i];
        }
        it.tau += alpha * d.dtau;
        it.kappa += alpha * d.dkappa;
        iterations += 1;

        if alpha < STALL_STEP {
            stalls += 1;
            if stalls >= 3 {
                failure = Some(format!(
                    "iteration {iterations}: step length stalled at {alpha:e}"
                ));
                break;
            }
        } else {
            stalls = 0;
        }
    }

    if status.is_none() {
        if let Some((_, b_it, b_metrics)) = best.filter(|b| b.0 <= RELAXED_FACTOR) {
            it = b_it;
            metrics = b_metrics;
        }
    }
    let status = match status {
        Some(s) => s,
        None if within(&metrics, config, RELAXED_FACTOR) => Status::Optimal,
        None if failure.is_some() => Status::NumericalFailure,
        None => Status::IterationLimit,
    };
    if status == Status::Optimal {
        failure = None;
    }
    Ok(assemble_solution(
        program, &p, &it, &metrics, status, iterations, failure,
    ))
}

fn assemble_solution(
    program: &ConicProgram,
    p: &Problem,
    it: &Iterate,
    metrics: &Metrics,
    status: Status,
    iterations: usize,
    failure: Option<String>,
) -> Solution {
    let rows = program.num_rows();
    let mut slacks = vec![0.0; rows];
    let mut duals = vec![0.0; rows];
    let mut certificate = None;
    let mut x = it.x.clone();
    match status {
        Status::PrimalInfeasible => {
            let denom = -(dot(&p.b, &it.y) + dot(&p.h, &it.z));
            for (k, &r) in p.ineq_rows.iter().enumerate() {
                duals[r] = it.z[k] / denom;
            }
            for (k, &r) in p.eq_rows.iter().enumerate() {
                duals[r] = it.y[k] / denom;
            }
            let residual = p.primal_infeasibility(it).unwrap_or(f64::INFINITY);
            certificate = Some(Certificate {
                ray: Vector::from(duals.clone()),
                residual,
            });
            x.iter_mut().for_each(|v| *v = 0.0);
            slacks.iter_mut().for_each(|v| *v = 0.0);
        }
        Status::DualInfeasible => {
            let denom = -dot(&p.c, &it.x);
            x.iter_mut().for_each(|v| *v /= denom);
            let residual = p.dual_infeasibility(it).unwrap_or(f64::INFINITY);
            certificate = Some(Certificate {
                ray: Vector::from(x.clone()),
                residual,
            });
            for (k, &r) in p.ineq_rows.iter().enumerate() {
                slacks[r] = it.s[k] / denom;
            }
            duals.iter_mut().for_each(|v| *v = 0.0);
        }
        _ => {
            x.iter_mut().for_each(|v| *v /= it.tau);
            for (k, &r) in p.ineq_rows.iter().enumerate() {
                slacks[r] = it.s[k] / it.tau;
                duals[r] = it.z[k] / it.tau;
            }
            for (k, &r) in p.eq_rows.iter().enumerate() {
                duals[r] = it.y[k] / it.tau;
            }
        }
    }
    let objective = match status {
        Status::PrimalInfeasible => f64::INFINITY,
        Status::DualInfeasible => f64::NEG_INFINITY,
        _ => metrics.pcost + program.objective_offset,
    };
    let dual_objective = match status {
        Status::PrimalInfeasible | Status::DualInfeasible => f64::NAN,
        _ => metrics.dcost + program.objective_offset,
    };
    Solution {
        status,
        x: Vector::from(x),
        slacks: Vector::from(slacks),
        duals: Vector::from(duals),
        objective,
        dual_objective,
        residuals: Residuals {
            primal: metrics.pres,
            dual: metrics.dres,
            gap: metrics.gap,
        },
        iterations,
        certificate,
        failure,
    }
}

#[cfg(test)]
mod tests;
