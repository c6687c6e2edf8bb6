//! Problem data, conic program assembly, and application presets.

mod build;
mod check;
mod conic;
mod extract;
mod io;
mod presets;

pub use build::{build_amopul, Form};
pub use check::{check_constraints, ConstraintCheck};
pub use conic::{
    arrow_matrix, smat, svec, svec_index, svec_len, Cone, ConeMargin, ConicProgram, VariableLayout,
};
pub use extract::{extract_solution, pack_assignment, Extracted};
pub use io::{load_problem, problem_from_json, problem_to_json, save_problem};
pub use presets::{
    preset_amopul1_box, preset_amopul2, preset_covid, preset_io1, preset_io2, preset_markov,
    preset_mpc,
};

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::system::{ErrorNorm, SystemSpec};

/// Default cap `ω ≤ ω^u` appended when the control level is a variable.
pub const DEFAULT_OMEGA_UPPER: f64 = 1e4;

/// Term acting on the transition matrix.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MatrixTerm {
    #[default]
    Zero,
    /// `‖A − A_ref‖_F`.
    FrobeniusDist { a_ref: Matrix },
}

/// Term acting on the controls.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlTerm {
    #[default]
    Zero,
    /// `Σ_{t=1}^{N−1} ‖u_t − u_{t−1}‖₂`.
    ControlEffort,
}

/// Term acting on the control level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelTerm {
    #[default]
    Zero,
    Identity,
}

/// `λ1·f1(A) + λ2·f2(U) + λ3·f3(ω)`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    #[serde(default)]
    pub f1: MatrixTerm,
    #[serde(default)]
    pub f2: ControlTerm,
    #[serde(default)]
    pub f3: LevelTerm,
}

impl ObjectiveSpec {
    pub fn level_only() -> Self {
        Self {
            lambda3: 1.0,
            f3: LevelTerm::Identity,
            ..Self::default()
        }
    }

    pub fn frobenius(a_ref: Matrix) -> Self {
        Self {
            lambda1: 1.0,
            f1: MatrixTerm::FrobeniusDist { a_ref },
            ..Self::default()
        }
    }

    pub fn frobenius_active(&self) -> bool {
        self.lambda1 > 0.0 && matches!(self.f1, MatrixTerm::FrobeniusDist { .. })
    }

    pub fn effort_active(&self) -> bool {
        self.lambda2 > 0.0 && self.f2 == ControlTerm::ControlEffort
    }

    pub fn level_active(&self) -> bool {
        self.lambda3 > 0.0 && self.f3 == LevelTerm::Identity
    }
}

/// Entrywise bounds `lower ≤ A ≤ upper`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixBox {
    pub lower: Matrix,
    pub upper: Matrix,
}

impl MatrixBox {
    pub fn symmetric(n: usize, bound: f64) -> Self {
        Self {
            lower: Matrix::from_fn(n, n, |_, _| -bound),
            upper: Matrix::from_fn(n, n, |_, _| bound),
        }
    }

    /// Entrywise `max(|lower|, |upper|)`.
    pub fn magnitude(&self) -> Matrix {
        let (r, c) = self.lower.shape();
        Matrix::from_fn(r, c, |i, j| {
            self.lower[(i, j)].abs().max(self.upper[(i, j)].abs())
        })
    }
}

/// Entrywise bounds applied to every stage's control (or control increment).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VectorBox {
    pub lower: Vector,
    pub upper: Vector,
}

impl VectorBox {
    pub fn symmetric(m: usize, bound: f64) -> Self {
        Self {
            lower: Vector::filled(m, -bound),
            upper: Vector::filled(m, bound),
        }
    }
}

/// `‖u_t − center‖₂ ≤ radius`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ControlBall {
    pub center: Vector,
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OmegaMode {
    /// ω is a decision variable with `ω ≤ upper`.
    Variable { upper: f64 },
    /// ω is the constant `value`.
    Fixed { value: f64 },
}

impl Default for OmegaMode {
    fn default() -> Self {
        OmegaMode::Variable {
            upper: DEFAULT_OMEGA_UPPER,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    #[default]
    Le,
    Eq,
}

/// `⟨coeffs, A⟩ (≤ | =) rhs`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixInequality {
    pub coeffs: Matrix,
    pub rhs: f64,
    #[serde(default)]
    pub relation: Relation,
}

/// `⟨g_coeffs, G⟩ + ⟨h_coeffs, H⟩ (≤ | =) rhs`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IoInequality {
    pub g_coeffs: Matrix,
    pub h_coeffs: Matrix,
    pub rhs: f64,
    #[serde(default)]
    pub relation: Relation,
}

/// `A = [[I − G, O], [−H, I]]` with `G` of size `m1×m1` and `H` of size `m2×m1`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IoStructure {
    pub m1: usize,
    pub m2: usize,
    #[serde(default)]
    pub inequalities: Vec<IoInequality>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ConstraintSet {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_box: Option<MatrixBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_box: Option<VectorBox>,
    /// `lower ≤ u_t − u_{t−1} ≤ upper` for `t = 1..N−1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_rate: Option<VectorBox>,
    /// One ball per stage `t = 0..N−1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_balls: Option<Vec<ControlBall>>,
    #[serde(default)]
    pub omega_mode: OmegaMode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub a_linear: Vec<MatrixInequality>,
    #[serde(default)]
    pub stochastic_columns: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nuclear_ball: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub io_structure: Option<IoStructure>,
}

/// A full instance: system data, objective, constraint set and error norm.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MopulProblem {
    pub system: SystemSpec,
    pub objective: ObjectiveSpec,
    #[serde(default)]
    pub constraints: ConstraintSet,
    #[serde(default)]
    pub error_norm: ErrorNorm,
}

fn check_shape(what: &str, m: &Matrix, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(dim_err(
            what,
            format!("{rows}x{cols}"),
            format!("{}x{}", m.rows(), m.cols()),
        ));
    }
    Ok(())
}

fn check_nonneg(what: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::InvalidProblem(format!(
            "{what} must be a finite nonnegative number, got {v}"
        )));
    }
    Ok(())
}

impl MopulProblem {
    pub fn new(
        system: SystemSpec,
        objective: ObjectiveSpec,
        constraints: ConstraintSet,
        error_norm: ErrorNorm,
    ) -> Result<Self> {
        let p = Self {
            system,
            objective,
            constraints,
            error_norm,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks dimension coherence and the value constraints of every feature.
    pub fn validate(&self) -> Result<()> {
        let n = self.system.n();
        let m = self.system.m();
        let horizon = self.system.horizon();
        let obj = &self.objective;
        check_nonneg("lambda1", obj.lambda1)?;
        check_nonneg("lambda2", obj.lambda2)?;
        check_nonneg("lambda3", obj.lambda3)?;
        if let MatrixTerm::FrobeniusDist { a_ref } = &obj.f1 {
            check_shape("objective a_ref", a_ref, n, n)?;
        }
        let level_counts =
            obj.level_active() && matches!(self.constraints.omega_mode, OmegaMode::Variable { .. });
        if !(obj.frobenius_active() || obj.effort_active() || level_counts) {
            return Err(Error::EmptyObjective);
        }

        let cs = &self.constraints;
        if let Some(bx) = &cs.a_box {
            check_shape("a_box lower", &bx.lower, n, n)?;
            check_shape("a_box upper", &bx.upper, n, n)?;
            if let Some(k) = (0..n * n).find(|&k| bx.lower.as_slice()[k] > bx.upper.as_slice()[k]) {
                return Err(Error::InvalidProblem(format!(
                    "a_box lower > upper at entry ({}, {})",
                    k / n,
                    k % n
                )));
            }
        }
        for (name, bx) in [("u_box", &cs.u_box), ("u_rate", &cs.u_rate)] {
            if let Some(bx) = bx {
                if bx.lower.dim() != m || bx.upper.dim() != m {
                    return Err(dim_err(name, m, bx.lower.dim().max(bx.upper.dim())));
                }
                if let Some(i) = (0..m).find(|&i| bx.lower[i] > bx.upper[i]) {
                    return Err(Error::InvalidProblem(format!(
                        "{name} lower > upper at component {i}"
                    )));
                }
            }
        }
        if let Some(balls) = &cs.u_balls {
            if balls.len() != horizon {
                return Err(dim_err("u_balls", horizon, balls.len()));
            }
            for (t, ball) in balls.iter().enumerate() {
                if ball.center.dim() != m {
                    return Err(dim_err(
                        &format!("u_balls[{t}] center"),
                        m,
                        ball.center.dim(),
                    ));
                }
                check_nonneg(&format!("u_balls[{t}] radius"), ball.radius)?;
            }
        }
        match cs.omega_mode {
            OmegaMode::Variable { upper } => check_nonneg("omega upper bound", upper)?,
            OmegaMode::Fixed { value } => check_nonneg("fixed omega", value)?,
        }
        for (k, ineq) in cs.a_linear.iter().enumerate() {
            check_shape(&format!("a_linear[{k}] coeffs"), &ineq.coeffs, n, n)?;
            if !ineq.rhs.is_finite() {
                return Err(Error::InvalidProblem(format!(
                    "a_linear[{k}] rhs not finite"
                )));
            }
        }
        if let Some(alpha) = cs.nuclear_ball {
            if !(alpha > 0.0 && alpha < n as f64) {
                return Err(Error::InvalidProblem(format!(
                    "nuclear ball radius must satisfy 0 < alpha < {n}, got {alpha}"
                )));
            }
        }
        if let Some(io) = &cs.io_structure {
            if io.m1 + io.m2 != n || io.m1 == 0 {
                return Err(dim_err("io_structure m1 + m2", n, io.m1 + io.m2));
            }
            for (k, ineq) in io.inequalities.iter().enumerate() {
                check_shape(
                    &format!("io inequality {k} g_coeffs"),
                    &ineq.g_coeffs,
                    io.m1,
                    io.m1,
                )?;
                check_shape(
                    &format!("io inequality {k} h_coeffs"),
                    &ineq.h_coeffs,
                    io.m2,
                    io.m1,
                )?;
            }
        }
        self.error_norm.factor(self.system.p())?;
        Ok(())
    }

    pub fn fixed_omega(&self) -> Option<f64> {
        match self.constraints.omega_mode {
            OmegaMode::Fixed { value } => Some(value),
            OmegaMode::Variable { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SystemSpec {
        SystemSpec::identity(
            Vector::new(vec![0.1, -0.2]).unwrap(),
            vec![Vector::new(vec![0.3, 0.1]).unwrap(); 2],
        )
        .unwrap()
    }

    #[test]
    fn rejects_empty_objective() {
        let obj = ObjectiveSpec::default();
        let err = MopulProblem::new(
            small_spec(),
            obj,
            ConstraintSet::default(),
            ErrorNorm::Euclidean,
        );
        assert!(matches!(err, Err(Error::EmptyObjective)));
        let obj = ObjectiveSpec::level_only();
        let cs = ConstraintSet {
            omega_mode: OmegaMode::Fixed { value: 1.0 },
            ..ConstraintSet::default()
        };
        let err = MopulProblem::new(small_spec(), obj, cs, ErrorNorm::Euclidean);
        assert!(matches!(err, Err(Error::EmptyObjective)));
    }

    #[test]
    fn rejects_inverted_box_and_bad_alpha() {
        let mut cs = ConstraintSet {
            a_box: Some(MatrixBox::symmetric(2, -1.0)),
            ..ConstraintSet::default()
        };
        assert!(MopulProblem::new(
            small_spec(),
            ObjectiveSpec::level_only(),
            cs.clone(),
            ErrorNorm::Euclidean
        )
        .is_err());
        cs.a_box = None;
        cs.nuclear_ball = Some(2.0);
        assert!(MopulProblem::new(
            small_spec(),
            ObjectiveSpec::level_only(),
            cs,
            ErrorNorm::Euclidean
        )
        .is_err());
    }

    #[test]
    fn rejects_non_spd_q() {
        let q = Matrix::from_diag(&[1.0, -1.0]);
        let err = MopulProblem::new(
            small_spec(),
            ObjectiveSpec::level_only(),
            ConstraintSet::default(),
            ErrorNorm::QNorm { q },
        );
        assert!(matches!(err, Err(Error::NotPositiveDefinite { .. })));
    }
}
