//! Finite-horizon linear systems `x_t = A x_{t-1} + B u_{t-1}`, `y_t = C x_t`.

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::linalg::{self, Matrix, Vector};

/// System data shared by every problem over the horizon `1..=N`.
///
/// `r0 = C x0` is derived, never supplied, and `C` must have full column rank.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SystemSpecData", into = "SystemSpecData")]
pub struct SystemSpec {
    b: Matrix,
    c: Matrix,
    x0: Vector,
    references: Vec<Vector>,
    c_pinv: Matrix,
    r0: Vector,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SystemSpecData {
    b: Matrix,
    c: Matrix,
    x0: Vector,
    references: Vec<Vector>,
}

impl TryFrom<SystemSpecData> for SystemSpec {
    type Error = Error;

    fn try_from(d: SystemSpecData) -> Result<Self> {
        SystemSpec::new(d.b, d.c, d.x0, d.references)
    }
}

impl From<SystemSpec> for SystemSpecData {
    fn from(s: SystemSpec) -> Self {
        SystemSpecData {
            b: s.b,
            c: s.c,
            x0: s.x0,
            references: s.references,
        }
    }
}

impl SystemSpec {
    pub fn new(b: Matrix, c: Matrix, x0: Vector, references: Vec<Vector>) -> Result<Self> {
        let n = x0.dim();
        if n == 0 {
            return Err(Error::InvalidProblem(
                "state dimension must be positive".into(),
            ));
        }
        if b.rows() != n {
            return Err(dim_err("B rows", n, b.rows()));
        }
        if c.cols() != n {
            return Err(dim_err("C cols", n, c.cols()));
        }
        if references.is_empty() {
            return Err(Error::InvalidProblem("horizon N must be at least 1".into()));
        }
        let p = c.rows();
        if let Some((t, r)) = references.iter().enumerate().find(|(_, r)| r.dim() != p) {
            return Err(dim_err(&format!("reference r_{}", t + 1), p, r.dim()));
        }
        let rank = linalg::svd(&c)?.rank();
        if rank < n {
            return Err(Error::RankDeficient { rank, cols: n });
        }
        let c_pinv = linalg::pinv(&c)?;
        let r0 = c.mul_vec(&x0)?;
        Ok(Self {
            b,
            c,
            x0,
            references,
            c_pinv,
            r0,
        })
    }

    /// `B = C = I` system of size `n`.
    pub fn identity(x0: Vector, references: Vec<Vector>) -> Result<Self> {
        let n = x0.dim();
        Self::new(Matrix::identity(n), Matrix::identity(n), x0, references)
    }

    /// Same matrices and initial state with new references.
    pub fn with_references(&self, references: Vec<Vector>) -> Result<Self> {
        Self::new(self.b.clone(), self.c.clone(), self.x0.clone(), references)
    }

    pub fn n(&self) -> usize {
        self.x0.dim()
    }

    pub fn m(&self) -> usize {
        self.b.cols()
    }

    pub fn p(&self) -> usize {
        self.c.rows()
    }

    pub fn horizon(&self) -> usize {
        self.references.len()
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn c_pinv(&self) -> &Matrix {
        &self.c_pinv
    }

    pub fn x0(&self) -> &Vector {
        &self.x0
    }

    pub fn r0(&self) -> &Vector {
        &self.r0
    }

    /// `r_1..r_N`.
    pub fn references(&self) -> &[Vector] {
        &self.references
    }

    /// `r_t` for `t` in `0..=N`.
    pub fn reference(&self, t: usize) -> &Vector {
        if t == 0 {
            &self.r0
        } else {
            &self.references[t - 1]
        }
    }

    pub fn check_inputs(&self, a: &Matrix, u: &[Vector]) -> Result<()> {
        let n = self.n();
        if a.shape() != (n, n) {
            return Err(dim_err(
                "A",
                format!("{n}x{n}"),
                format!("{}x{}", a.rows(), a.cols()),
            ));
        }
        if u.len() != self.horizon() {
            return Err(dim_err("U stages", self.horizon(), u.len()));
        }
        if let Some((t, ut)) = u.iter().enumerate().find(|(_, ut)| ut.dim() != self.m()) {
            return Err(dim_err(&format!("u_{t}"), self.m(), ut.dim()));
        }
        Ok(())
    }
}

/// States `x_0..x_N` and outputs `y_0..y_N`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<Vector>,
    pub outputs: Vec<Vector>,
}

impl Trajectory {
    fn from_states(spec: &SystemSpec, states: Vec<Vector>) -> Trajectory {
        let outputs = states
            .iter()
            .map(|x| spec.c.mul_vec(x).expect("dimensions checked"))
            .collect();
        Trajectory { states, outputs }
    }
}

/// Which norm measures the per-stage output error.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ErrorNorm {
    #[default]
    Euclidean,
    QNorm {
        q: Matrix,
    },
}

impl ErrorNorm {
    /// Validates the norm for output dimension `p`; returns the Cholesky factor for a Q-norm.
    pub fn factor(&self, p: usize) -> Result<Option<Matrix>> {
        match self {
            ErrorNorm::Euclidean => Ok(None),
            ErrorNorm::QNorm { q } => {
                if q.shape() != (p, p) {
                    return Err(dim_err("Q", format!("{p}x{p}"), format!("{:?}", q.shape())));
                }
                let scale = q.max_abs().max(1.0);
                if q.asymmetry() > 1e-12 * scale {
                    return Err(Error::NotSymmetric(q.asymmetry()));
                }
                linalg::cholesky(q).map(Some)
            }
        }
    }
}

fn affine_step(spec: &SystemSpec, a: &Matrix, prev: &[f64], u: &[f64]) -> Vector {
    let ax = a.mul_vec(prev).expect("dimensions checked");
    let bu = spec.b.mul_vec(u).expect("dimensions checked");
    ax.add(&bu)
}

/// Nested rollout `x_t = A x_{t-1} + B u_{t-1}` from `x_0`.
pub fn rollout_exact(spec: &SystemSpec, a: &Matrix, u: &[Vector]) -> Result<Trajectory> {
    spec.check_inputs(a, u)?;
    let mut states = Vec::with_capacity(spec.horizon() + 1);
    states.push(spec.x0.clone());
    for ut in u {
        let next = affine_step(spec, a, states.last().unwrap(), ut);
        states.push(next);
    }
    Ok(Trajectory::from_states(spec, states))
}

/// Decoupled rollout `x_t = A C† r_{t-1} + B u_{t-1}` with `x_0` unchanged.
pub fn rollout_approx(spec: &SystemSpec, a: &Matrix, u: &[Vector]) -> Result<Trajectory> {
    spec.check_inputs(a, u)?;
    let mut states = Vec::with_capacity(spec.horizon() + 1);
    states.push(spec.x0.clone());
    for (t, ut) in u.iter().enumerate() {
        let lifted = spec.c_pinv.mul_vec(spec.reference(t))?;
        states.push(affine_step(spec, a, &lifted, ut));
    }
    Ok(Trajectory::from_states(spec, states))
}

/// `Σ_{t=1..N} ‖y_t − r_t‖` under the chosen norm.
pub fn cumulative_error(traj: &Trajectory, spec: &SystemSpec, norm: &ErrorNorm) -> Result<f64> {
    let n_stages = spec.horizon();
    if traj.outputs.len() != n_stages + 1 {
        return Err(dim_err(
            "trajectory outputs",
            n_stages + 1,
            traj.outputs.len(),
        ));
    }
    let factor = norm.factor(spec.p())?;
    let mut total = 0.0;
    for t in 1..=n_stages {
        let y = &traj.outputs[t];
        if y.dim() != spec.p() {
            return Err(dim_err(&format!("y_{t}"), spec.p(), y.dim()));
        }
        let diff = y.sub(spec.reference(t));
        total += match &factor {
            None => diff.norm2(),
            Some(l) => linalg::q_norm_with_factor(&diff, l),
        };
    }
    Ok(total)
}

/// Per-stage Euclidean errors `‖y_t − r_t‖₂`, `t = 1..N`.
pub fn stage_errors(traj: &Trajectory, spec: &SystemSpec) -> Vec<f64> {
    (1..=spec.horizon())
        .map(|t| traj.outputs[t].sub(spec.reference(t)).norm2())
        .collect()
}

/// `‖y_t − r_t‖₂²` from the closed-form polynomial expansion in powers of `A`.
pub fn poly_error(spec: &SystemSpec, a: &Matrix, u: &[Vector], t: usize) -> Result<f64> {
    spec.check_inputs(a, u)?;
    if t == 0 || t > spec.horizon() {
        return Err(Error::InvalidArgument(format!(
            "stage {t} outside 1..={}",
            spec.horizon()
        )));
    }
    let c = &spec.c;
    let b = &spec.b;
    let r = spec.reference(t);

    let mut powers = Vec::with_capacity(t + 1);
    powers.push(Matrix::identity(spec.n()));
    for j in 1..=t {
        let next = powers[j - 1].matmul(a)?;
        powers.push(next);
    }
    // w = C A^t x0 and g_j = C A^j B u_{t-1-j}
    let w = c.mul_vec(&powers[t].mul_vec(&spec.x0)?)?;
    let g: Vec<Vector> = (0..t)
        .map(|j| {
            let bu = b.mul_vec(&u[t - 1 - j])?;
            c.mul_vec(&powers[j].mul_vec(&bu)?)
        })
        .collect::<Result<_>>()?;

    let term_x0 = w.dot(&w);
    let term_cross: f64 = 2.0 * g.iter().map(|gj| w.dot(gj)).sum::<f64>();
    let mut term_u = 0.0;
    for gi in &g {
        for gj in &g {
            term_u += gi.dot(gj);
        }
    }
    let term_x0_ref = -2.0 * w.dot(r);
    let term_u_ref = -2.0 * g.iter().map(|gi| gi.dot(r)).sum::<f64>();
    let term_ref = r.dot(r);
    Ok(term_x0 + term_cross + term_u + term_x0_ref + term_u_ref + term_ref)
}
