//! Direct evaluation of every constraint on an `(A, U, ω)` candidate, independent
//! of the conic lowering.

use serde::{Deserialize, Serialize};

use super::{MopulProblem, OmegaMode, Relation};
use crate::error::Result;
use crate::linalg::{self, Matrix, Vector};
use crate::system;

/// Outcome of one constraint: `margin ≥ 0` means satisfied.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub margin: f64,
    pub detail: String,
}

impl ConstraintCheck {
    pub fn satisfied(&self, tol: f64) -> bool {
        self.margin >= -tol
    }
}

struct Collector(Vec<ConstraintCheck>);

impl Collector {
    fn push(&mut self, name: impl Into<String>, margin: f64, detail: impl Into<String>) {
        self.0.push(ConstraintCheck {
            name: name.into(),
            margin,
            detail: detail.into(),
        });
    }

    fn relation(&mut self, name: String, lhs: f64, rhs: f64, rel: Relation) {
        match rel {
            Relation::Le => self.push(name, rhs - lhs, format!("{lhs:.6e} <= {rhs:.6e}")),
            Relation::Eq => self.push(name, -(lhs - rhs).abs(), format!("{lhs:.6e} == {rhs:.6e}")),
        }
    }
}

fn worst_entry(entries: impl Iterator<Item = (String, f64)>) -> Option<(String, f64)> {
    entries.fold(None, |best: Option<(String, f64)>, (name, m)| match best {
        Some((_, bm)) if bm <= m => best,
        _ => Some((name, m)),
    })
}

/// Evaluates every constraint of `problem` at `(a, u, omega)`.
pub fn check_constraints(
    problem: &MopulProblem,
    a: &Matrix,
    u: &[Vector],
    omega: f64,
) -> Result<Vec<ConstraintCheck>> {
    let spec = &problem.system;
    spec.check_inputs(a, u)?;
    let (n, m, horizon) = (spec.n(), spec.m(), spec.horizon());
    let cs = &problem.constraints;
    let mut out = Collector(Vec::new());

    let traj = system::rollout_approx(spec, a, u)?;
    let ace = system::cumulative_error(&traj, spec, &problem.error_norm)?;
    let level = match cs.omega_mode {
        OmegaMode::Fixed { value } => value,
        OmegaMode::Variable { .. } => omega,
    };
    out.push(
        "approximate_cumulative_error",
        level - ace,
        format!("{ace:.6e} <= {level:.6e}"),
    );
    if let OmegaMode::Variable { upper } = cs.omega_mode {
        out.push(
            "omega_upper",
            upper - omega,
            format!("{omega:.6e} <= {upper:.6e}"),
        );
    }

    if let Some(bx) = &cs.a_box {
        let worst = worst_entry(
            (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let v = a[(i, j)];
                    (
                        format!("A[{i},{j}] = {v:.6e}"),
                        (v - bx.lower[(i, j)]).min(bx.upper[(i, j)] - v),
                    )
                }),
        );
        if let Some((d, mg)) = worst {
            out.push("a_box", mg, d);
        }
    }
    if let Some(bx) = &cs.u_box {
        let worst = worst_entry((0..horizon).flat_map(|t| (0..m).map(move |k| (t, k))).map(
            |(t, k)| {
                let v = u[t][k];
                (
                    format!("u_{t}[{k}] = {v:.6e}"),
                    (v - bx.lower[k]).min(bx.upper[k] - v),
                )
            },
        ));
        if let Some((d, mg)) = worst {
            out.push("u_box", mg, d);
        }
    }
    if let Some(rate) = &cs.u_rate {
        let worst = worst_entry((1..horizon).flat_map(|t| (0..m).map(move |k| (t, k))).map(
            |(t, k)| {
                let v = u[t][k] - u[t - 1][k];
                (
                    format!("u_{t}[{k}] - u_{}[{k}] = {v:.6e}", t - 1),
                    (v - rate.lower[k]).min(rate.upper[k] - v),
                )
            },
        ));
        if let Some((d, mg)) = worst {
            out.push("u_rate", mg, d);
        }
    }
    if let Some(balls) = &cs.u_balls {
        for (t, ball) in balls.iter().enumerate() {
            let dist = u[t].sub(&ball.center).norm2();
            out.push(
                format!("u_ball[{t}]"),
                ball.radius - dist,
                format!("{dist:.6e} <= {:.6e}", ball.radius),
            );
        }
    }
    for (q, ineq) in cs.a_linear.iter().enumerate() {
        let lhs = linalg::dot(ineq.coeffs.as_slice(), a.as_slice());
        out.relation(format!("a_linear[{q}]"), lhs, ineq.rhs, ineq.relation);
    }
    if cs.stochastic_columns {
        let min_entry = a.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
        out.push(
            "stochastic_nonneg",
            min_entry,
            format!("min entry {min_entry:.6e}"),
        );
        let dev = (0..n)
            .map(|j| ((0..n).map(|i| a[(i, j)]).sum::<f64>() - 1.0).abs())
            .fold(0.0f64, f64::max);
        out.push(
            "stochastic_column_sum",
            -dev,
            format!("max |column sum - 1| = {dev:.6e}"),
        );
    }
    if let Some(alpha) = cs.nuclear_ball {
        let nn = linalg::nuclear_norm(a)?;
        out.push(
            "nuclear_ball",
            alpha - nn,
            format!("{nn:.6e} <= {alpha:.6e}"),
        );
    }
    if let Some(io) = &cs.io_structure {
        let m1 = io.m1;
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in m1..n {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((a[(i, j)] - target).abs());
            }
        }
        out.push(
            "io_structure",
            -dev,
            format!("max deviation from fixed blocks {dev:.6e}"),
        );
        for (q, ineq) in io.inequalities.iter().enumerate() {
            let mut lhs = 0.0;
            for i in 0..m1 {
                for j in 0..m1 {
                    let g = if i == j { 1.0 } else { 0.0 } - a[(i, j)];
                    lhs += ineq.g_coeffs[(i, j)] * g;
                }
            }
            for i in 0..io.m2 {
                for j in 0..m1 {
                    lhs += ineq.h_coeffs[(i, j)] * (-a[(m1 + i, j)]);
                }
            }
            out.relation(format!("io_inequality[{q}]"), lhs, ineq.rhs, ineq.relation);
        }
    }
    Ok(out.0)
}
