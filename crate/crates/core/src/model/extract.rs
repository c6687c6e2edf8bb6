use serde::{Deserialize, Serialize};

use super::conic::{ConicProgram, VariableLayout};
use super::{MatrixTerm, MopulProblem};
use crate::error::{dim_err, Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::system;

/// Decision variables read back from a program solution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Extracted {
    pub a: Matrix,
    pub u: Vec<Vector>,
    pub omega: f64,
    pub xi: Vector,
}

fn layout_of(program: &ConicProgram) -> Result<&VariableLayout> {
    program
        .layout
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("program has no variable layout".into()))
}

/// Reads `(A, U, ω, ξ)` out of a variable vector.
pub fn extract_solution(program: &ConicProgram, x: &[f64]) -> Result<Extracted> {
    if x.len() != program.num_vars {
        return Err(dim_err("solution vector", program.num_vars, x.len()));
    }
    let l = layout_of(program)?;
    let a = Matrix::new(l.n, l.n, x[..l.n * l.n].to_vec())?;
    let u = (0..l.horizon)
        .map(|t| Vector::new(x[l.u_index(t, 0)..l.u_index(t, 0) + l.m].to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let omega = match (l.omega, l.fixed_omega) {
        (Some(k), _) => x[k],
        (None, Some(v)) => v,
        (None, None) => return Err(Error::InvalidArgument("layout has no control level".into())),
    };
    let xi = Vector::new(x[l.xi_start..l.xi_start + l.horizon].to_vec())?;
    Ok(Extracted { a, u, omega, xi })
}

/// Builds a full variable vector from `(A, U, ω)`, filling every auxiliary
/// variable with its tightest feasible value.
pub fn pack_assignment(
    program: &ConicProgram,
    problem: &MopulProblem,
    a: &Matrix,
    u: &[Vector],
    omega: f64,
) -> Result<Vec<f64>> {
    let l = layout_of(program)?;
    let spec = &problem.system;
    spec.check_inputs(a, u)?;
    let mut x = vec![0.0; program.num_vars];
    x[..l.n * l.n].copy_from_slice(a.as_slice());
    for (t, ut) in u.iter().enumerate() {
        x[l.u_index(t, 0)..l.u_index(t, 0) + l.m].copy_from_slice(ut);
    }
    if let Some(k) = l.omega {
        x[k] = omega;
    }
    let factor = problem.error_norm.factor(spec.p())?;
    let traj = system::rollout_approx(spec, a, u)?;
    for t in 1..=l.horizon {
        let diff = traj.outputs[t].sub(spec.reference(t));
        x[l.xi_index(t)] = match &factor {
            Some(lf) => linalg::q_norm_with_factor(&diff, lf),
            None => diff.norm2(),
        };
    }
    if let (Some(k), MatrixTerm::FrobeniusDist { a_ref }) =
        (l.frobenius_epigraph, &problem.objective.f1)
    {
        x[k] = a.sub(a_ref)?.frobenius();
    }
    if let Some(s) = l.effort_start {
        for t in 1..l.horizon {
            x[s + t - 1] = u[t].sub(&u[t - 1]).norm2();
        }
    }
    if let (Some(w1), Some(w2)) = (l.w1_start, l.w2_start) {
        let d = linalg::svd(a)?;
        let k = d.singular_values.dim();
        for i in 0..l.n {
            for j in 0..=i {
                let mut left = 0.0;
                let mut right = 0.0;
                for r in 0..k {
                    let s = d.singular_values[r];
                    left += d.u[(i, r)] * s * d.u[(j, r)];
                    right += d.v[(i, r)] * s * d.v[(j, r)];
                }
                x[l.sym_index(w1, i, j)] = left;
                x[l.sym_index(w2, i, j)] = right;
            }
        }
    }
    Ok(x)
}
