use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::linalg::{self, norm2, Matrix};

/// A cone block; the slack rows it owns are contiguous.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "size", rename_all = "snake_case")]
pub enum Cone {
    Zero(usize),
    Nonneg(usize),
    /// `s_0 ≥ ‖s_{1..}‖₂`, total dimension given.
    SecondOrder(usize),
    /// Symmetric matrix of the given side in scaled lower-triangular packing.
    Psd(usize),
}

impl Cone {
    /// Number of slack rows.
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(d) | Cone::Nonneg(d) | Cone::SecondOrder(d) => d,
            Cone::Psd(side) => svec_len(side),
        }
    }

    /// Barrier degree of the block.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Zero(_) => 0,
            Cone::Nonneg(d) => d,
            Cone::SecondOrder(_) => 1,
            Cone::Psd(side) => side,
        }
    }

    /// Signed distance-like membership margin; nonnegative iff `s` lies in the cone.
    pub fn margin(&self, s: &[f64]) -> f64 {
        debug_assert_eq!(s.len(), self.dim());
        match *self {
            Cone::Zero(_) => -s.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            Cone::Nonneg(_) => s.iter().copied().fold(f64::INFINITY, f64::min),
            Cone::SecondOrder(_) => s[0] - norm2(&s[1..]),
            Cone::Psd(side) => {
                if side == 0 {
                    return f64::INFINITY;
                }
                match linalg::sym_eigs(&smat(s, side)) {
                    Ok(e) => e[0],
                    Err(_) => f64::NEG_INFINITY,
                }
            }
        }
    }
}

pub fn svec_len(side: usize) -> usize {
    side * (side + 1) / 2
}

/// Position of entry `(i, j)`, `i ≥ j`, in column-major lower-triangular packing.
#[inline]
pub fn svec_index(side: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    j * side - j * j.saturating_sub(1) / 2 + (i - j)
}

/// Packs a symmetric matrix with off-diagonals scaled by √2.
pub fn svec(m: &Matrix) -> Vec<f64> {
    let side = m.rows();
    let mut out = vec![0.0; svec_len(side)];
    for j in 0..side {
        for i in j..side {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            out[svec_index(side, i, j)] = if i == j {
                v
            } else {
                v * std::f64::consts::SQRT_2
            };
        }
    }
    out
}

/// `[[ξI, v], [vᵀ, ξ]]`, positive semidefinite exactly when `‖v‖₂ ≤ ξ`.
pub fn arrow_matrix(v: &[f64], xi: f64) -> Matrix {
    let p = v.len();
    Matrix::from_fn(p + 1, p + 1, |i, j| match (i == p, j == p) {
        (false, false) => {
            if i == j {
                xi
            } else {
                0.0
            }
        }
        (true, true) => xi,
        (false, true) => v[i],
        (true, false) => v[j],
    })
}

/// Inverse of [`svec`].
pub fn smat(v: &[f64], side: usize) -> Matrix {
    let mut m = Matrix::zeros(side, side);
    for j in 0..side {
        for i in j..side {
            let x = v[svec_index(side, i, j)];
            if i == j {
                m[(i, i)] = x;
            } else {
                let y = x / std::f64::consts::SQRT_2;
                m[(i, j)] = y;
                m[(j, i)] = y;
            }
        }
    }
    m
}

/// Where each group of decision variables lives in the variable vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableLayout {
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
    pub u_start: usize,
    pub omega: Option<usize>,
    pub xi_start: usize,
    pub frobenius_epigraph: Option<usize>,
    pub effort_start: Option<usize>,
    pub w1_start: Option<usize>,
    pub w2_start: Option<usize>,
    /// Constant control level when `omega` is not a variable.
    pub fixed_omega: Option<f64>,
}

impl VariableLayout {
    #[inline]
    pub fn a_index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    #[inline]
    pub fn u_index(&self, t: usize, k: usize) -> usize {
        self.u_start + t * self.m + k
    }

    /// Index of `ξ_t`, `t = 1..N`.
    #[inline]
    pub fn xi_index(&self, t: usize) -> usize {
        self.xi_start + t - 1
    }

    /// Index of the symmetric auxiliary entry `(i, j)` starting at `start`.
    #[inline]
    pub fn sym_index(&self, start: usize, i: usize, j: usize) -> usize {
        start + svec_index(self.n, i, j)
    }
}

/// `minimize cᵀx + offset  s.t.  G x + s = h,  s ∈ K`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConicProgram {
    pub num_vars: usize,
    pub objective_coeffs: Vec<f64>,
    pub objective_offset: f64,
    pub constraint_matrix: Matrix,
    pub offsets: Vec<f64>,
    pub cone_blocks: Vec<Cone>,
    pub block_labels: Vec<String>,
    pub var_names: Vec<String>,
    pub layout: Option<VariableLayout>,
}

/// Membership margin of one block.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeMargin {
    pub label: String,
    pub cone: Cone,
    pub margin: f64,
}

impl ConicProgram {
    /// A bare program with generated names and labels.
    pub fn new(
        objective_coeffs: Vec<f64>,
        constraint_matrix: Matrix,
        offsets: Vec<f64>,
        cone_blocks: Vec<Cone>,
    ) -> Result<Self> {
        let num_vars = objective_coeffs.len();
        let var_names = (0..num_vars).map(|k| format!("x[{k}]")).collect();
        let block_labels = (0..cone_blocks.len())
            .map(|k| format!("block[{k}]"))
            .collect();
        let p = Self {
            num_vars,
            objective_coeffs,
            objective_offset: 0.0,
            constraint_matrix,
            offsets,
            cone_blocks,
            block_labels,
            var_names,
            layout: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn num_rows(&self) -> usize {
        self.offsets.len()
    }

    pub fn validate(&self) -> Result<()> {
        let rows: usize = self.cone_blocks.iter().map(Cone::dim).sum();
        if self.constraint_matrix.rows() != rows || self.offsets.len() != rows {
            return Err(dim_err("cone rows", rows, self.constraint_matrix.rows()));
        }
        if self.constraint_matrix.cols() != self.num_vars
            || self.objective_coeffs.len() != self.num_vars
        {
            return Err(dim_err(
                "program variables",
                self.num_vars,
                self.constraint_matrix.cols(),
            ));
        }
        if self.block_labels.len() != self.cone_blocks.len()
            || self.var_names.len() != self.num_vars
        {
            return Err(Error::InvalidProblem(
                "labels do not match blocks or variables".into(),
            ));
        }
        if self
            .offsets
            .iter()
            .chain(&self.objective_coeffs)
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidProblem("non-finite program data".into()));
        }
        if self
            .cone_blocks
            .iter()
            .any(|c| matches!(c, Cone::SecondOrder(0)))
        {
            return Err(Error::InvalidProblem("empty second-order cone".into()));
        }
        Ok(())
    }

    /// Row ranges of each block, in order.
    pub fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.cone_blocks
            .iter()
            .map(|c| {
                let r = start..start + c.dim();
                start = r.end;
                r
            })
            .collect()
    }

    pub fn count_blocks(&self, pred: impl Fn(&Cone) -> bool) -> usize {
        self.cone_blocks.iter().filter(|c| pred(c)).count()
    }

    /// `h − G x`.
    pub fn slack(&self, x: &[f64]) -> Result<Vec<f64>> {
        let gx = self.constraint_matrix.mul_vec(x)?;
        Ok(self
            .offsets
            .iter()
            .zip(gx.iter())
            .map(|(h, g)| h - g)
            .collect())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.objective_coeffs, x) + self.objective_offset
    }

    /// Margins of `h − G x` in every block.
    pub fn cone_margins(&self, x: &[f64]) -> Result<Vec<ConeMargin>> {
        let s = self.slack(x)?;
        Ok(self.margins_of(&s))
    }

    /// Margins of an explicit slack vector in every block.
    pub fn margins_of(&self, s: &[f64]) -> Vec<ConeMargin> {
        self.block_ranges()
            .into_iter()
            .zip(&self.cone_blocks)
            .zip(&self.block_labels)
            .map(|((r, cone), label)| ConeMargin {
                label: label.clone(),
                cone: *cone,
                margin: cone.margin(&s[r]),
            })
            .collect()
    }
}
