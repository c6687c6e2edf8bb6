//! The `solution.json` file written by `solve` and read by `validate` and `bounds`.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use mopul::linalg::{Matrix, Vector};
use mopul::model::Form;
use mopul::solver::{Residuals, Status};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateInfo {
    pub residual: f64,
    pub ray: Vector,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionFile {
    pub status: Status,
    pub form: Form,
    pub iterations: usize,
    pub objective: Option<f64>,
    pub dual_objective: Option<f64>,
    pub residuals: Residuals,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<Vector>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateInfo>,
}

/// `(A, U, ω)` of an optimal solution.
pub struct Point<'a> {
    pub a: &'a Matrix,
    pub u: &'a [Vector],
    pub omega: f64,
    pub objective: f64,
}

impl SolutionFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn point(&self) -> Result<Point<'_>> {
        match (&self.a, &self.u, self.omega, self.objective) {
            (Some(a), Some(u), Some(omega), Some(objective)) => Ok(Point {
                a,
                u,
                omega,
                objective,
            }),
            _ => bail!(
                "solution has status {} and carries no (A, U, omega)",
                self.status
            ),
        }
    }
}

pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}
