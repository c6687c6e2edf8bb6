//! Independent recomputation of optimality and certificate residuals from the
//! dense program data.

use serde::{Deserialize, Serialize};

use super::{Solution, Status};
use crate::error::{dim_err, Result};
use crate::linalg::{dot, norm2};
use crate::model::{Cone, ConeMargin, ConicProgram};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KktReport {
    /// `‖G x + s − h‖ / max(1, ‖h‖)`.
    pub primal_residual: f64,
    /// `‖Gᵀ z + c‖ / max(1, ‖c‖)`.
    pub dual_residual: f64,
    /// `|cᵀx + hᵀz| / max(1, |cᵀx|, |hᵀz|)`.
    pub gap: f64,
    /// `sᵀz`.
    pub complementarity: f64,
    pub slack_margins: Vec<ConeMargin>,
    /// Dual cone margins (zero-cone duals are free and report +∞).
    pub dual_margins: Vec<ConeMargin>,
    /// For infeasibility statuses: the Farkas value (`hᵀ ray` or `cᵀ ray`, expected −1)
    /// and the normalised residual of the ray.
    pub certificate_value: Option<f64>,
    pub certificate_residual: Option<f64>,
}

impl KktReport {
    pub fn min_slack_margin(&self) -> f64 {
        self.slack_margins
            .iter()
            .map(|m| m.margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_dual_margin(&self) -> f64 {
        self.dual_margins
            .iter()
            .map(|m| m.margin)
            .fold(f64::INFINITY, f64::min)
    }
}

fn dual_margins(program: &ConicProgram, z: &[f64]) -> Vec<ConeMargin> {
    program
        .block_ranges()
        .into_iter()
        .zip(&program.cone_blocks)
        .zip(&program.block_labels)
        .map(|((r, cone), label)| ConeMargin {
            label: label.clone(),
            cone: *cone,
            margin: match cone {
                Cone::Zero(_) => f64::INFINITY,
                _ => cone.margin(&z[r]),
            },
        })
        .collect()
}

pub fn check_kkt(program: &ConicProgram, solution: &Solution) -> Result<KktReport> {
    let rows = program.num_rows();
    if solution.x.dim() != program.num_vars {
        return Err(dim_err("solution x", program.num_vars, solution.x.dim()));
    }
    if solution.slacks.dim() != rows || solution.duals.dim() != rows {
        return Err(dim_err(
            "solution slacks/duals",
            rows,
            solution.slacks.dim(),
        ));
    }
    let g = &program.constraint_matrix;
    let h = &program.offsets;
    let c = &program.objective_coeffs;
    let x = solution.x.as_slice();
    let s = solution.slacks.as_slice();
    let z = solution.duals.as_slice();

    let gx = g.mul_vec(x)?;
    let pres_vec: Vec<f64> = (0..rows).map(|i| gx[i] + s[i] - h[i]).collect();
    let primal_residual = norm2(&pres_vec) / norm2(h).max(1.0);
    let mut gtz = g.tr_mul_vec(z)?.into_vec();
    for (v, ci) in gtz.iter_mut().zip(c) {
        *v += ci;
    }
    let dual_residual = norm2(&gtz) / norm2(c).max(1.0);
    let cx = dot(c, x);
    let hz = dot(h, z);
    let gap = (cx + hz).abs() / 1.0f64.max(cx.abs()).max(hz.abs());

    let (certificate_value, certificate_residual) = match solution.status {
        Status::PrimalInfeasible => {
            let gtr = g.tr_mul_vec(z)?;
            (Some(hz), Some(gtr.norm2() / norm2(c).max(1.0)))
        }
        Status::DualInfeasible => {
            // −G x must lie in K: measure via the slack margins of −G x
            let neg: Vec<f64> = gx.iter().map(|v| -v).collect();
            let worst = program
                .margins_of(&neg)
                .iter()
                .map(|m| m.margin)
                .fold(f64::INFINITY, f64::min)
                .min(0.0);
            (Some(cx), Some(-worst))
        }
        _ => (None, None),
    };

    Ok(KktReport {
        primal_residual,
        dual_residual,
        gap,
        complementarity: dot(s, z),
        slack_margins: program.margins_of(s),
        dual_margins: dual_margins(program, z),
        certificate_value,
        certificate_residual,
    })
}
