use serde::{Deserialize, Serialize};

use super::conic::{svec_index, svec_len, Cone, ConicProgram, VariableLayout};
use super::{MatrixTerm, MopulProblem, OmegaMode, Relation};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Lowering of the per-stage error bound `‖v_t‖ ≤ ξ_t`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    /// One second-order cone per stage.
    #[default]
    Soc,
    /// One arrow-matrix semidefinite block `[[ξI, v], [vᵀ, ξ]]` per stage.
    Lmi,
}

impl std::str::FromStr for Form {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soc" => Ok(Form::Soc),
            "lmi" => Ok(Form::Lmi),
            other => Err(Error::InvalidArgument(format!(
                "unknown form '{other}' (expected soc or lmi)"
            ))),
        }
    }
}

/// `constant + Σ coef·x_var`.
#[derive(Clone, Debug, Default)]
struct Affine {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

impl Affine {
    fn constant(c: f64) -> Self {
        Affine {
            terms: Vec::new(),
            constant: c,
        }
    }

    fn var(k: usize) -> Self {
        Affine {
            terms: vec![(k, 1.0)],
            constant: 0.0,
        }
    }

    fn add_term(&mut self, k: usize, coef: f64) -> &mut Self {
        if coef != 0.0 {
            self.terms.push((k, coef));
        }
        self
    }

    fn scaled(mut self, s: f64) -> Self {
        self.constant *= s;
        self.terms.iter_mut().for_each(|t| t.1 *= s);
        self
    }
}

/// Collects cone blocks whose slack rows are affine expressions.
struct Assembler {
    num_vars: usize,
    zero_rows: Vec<(Affine, String)>,
    nonneg_rows: Vec<(Affine, String)>,
    blocks: Vec<(Cone, String, Vec<Affine>)>,
}

impl Assembler {
    fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            zero_rows: Vec::new(),
            nonneg_rows: Vec::new(),
            blocks: Vec::new(),
        }
    }

    fn equal_zero(&mut self, expr: Affine, label: impl Into<String>) {
        self.zero_rows.push((expr, label.into()));
    }

    fn nonneg(&mut self, expr: Affine, label: impl Into<String>) {
        self.nonneg_rows.push((expr, label.into()));
    }

    fn relation(&mut self, expr: Affine, relation: Relation, label: impl Into<String>) {
        match relation {
            Relation::Le => self.nonneg(expr, label),
            Relation::Eq => self.equal_zero(expr, label),
        }
    }

    fn block(&mut self, cone: Cone, label: impl Into<String>, rows: Vec<Affine>) {
        debug_assert_eq!(cone.dim(), rows.len());
        self.blocks.push((cone, label.into(), rows));
    }

    fn finish(
        self,
        objective: Vec<f64>,
        offset: f64,
        var_names: Vec<String>,
        layout: VariableLayout,
    ) -> Result<ConicProgram> {
        let mut cones = Vec::new();
        let mut labels = Vec::new();
        let mut rows: Vec<Affine> = Vec::new();
        if !self.zero_rows.is_empty() {
            cones.push(Cone::Zero(self.zero_rows.len()));
            labels.push(group_label("equalities", &self.zero_rows));
            rows.extend(self.zero_rows.into_iter().map(|r| r.0));
        }
        if !self.nonneg_rows.is_empty() {
            cones.push(Cone::Nonneg(self.nonneg_rows.len()));
            labels.push(group_label("inequalities", &self.nonneg_rows));
            rows.extend(self.nonneg_rows.into_iter().map(|r| r.0));
        }
        for (cone, label, block_rows) in self.blocks {
            cones.push(cone);
            labels.push(label);
            rows.extend(block_rows);
        }
        let mut g = Matrix::zeros(rows.len(), self.num_vars);
        let mut h = Vec::with_capacity(rows.len());
        for (r, expr) in rows.iter().enumerate() {
            let grow = g.row_mut(r);
            for &(k, coef) in &expr.terms {
                grow[k] -= coef;
            }
            h.push(expr.constant);
        }
        let program = ConicProgram {
            num_vars: self.num_vars,
            objective_coeffs: objective,
            objective_offset: offset,
            constraint_matrix: g,
            offsets: h,
            cone_blocks: cones,
            block_labels: labels,
            var_names,
            layout: Some(layout),
        };
        program.validate()?;
        Ok(program)
    }
}

fn group_label(kind: &str, rows: &[(Affine, String)]) -> String {
    let mut names: Vec<&str> = Vec::new();
    for (_, l) in rows {
        if names.last() != Some(&l.as_str()) {
            names.push(l);
        }
    }
    format!("{kind}: {}", names.join(", "))
}

/// Assembles the conic program for `problem` with the error bounds lowered per `form`.
pub fn build_amopul(problem: &MopulProblem, form: Form) -> Result<ConicProgram> {
    problem.validate()?;
    let spec = &problem.system;
    let (n, m, p, horizon) = (spec.n(), spec.m(), spec.p(), spec.horizon());
    let obj = &problem.objective;
    let cs = &problem.constraints;

    // variable layout: A, U, [ω], ξ, auxiliaries
    let mut names: Vec<String> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            names.push(format!("A[{i},{j}]"));
        }
    }
    let u_start = names.len();
    for t in 0..horizon {
        for k in 0..m {
            names.push(format!("u_{t}[{k}]"));
        }
    }
    let omega = match cs.omega_mode {
        OmegaMode::Variable { .. } => {
            names.push("omega".into());
            Some(names.len() - 1)
        }
        OmegaMode::Fixed { .. } => None,
    };
    let xi_start = names.len();
    for t in 1..=horizon {
        names.push(format!("xi_{t}"));
    }
    let frobenius_epigraph = if obj.frobenius_active() {
        names.push("frobenius_epigraph".into());
        Some(names.len() - 1)
    } else {
        None
    };
    let effort_start = if obj.effort_active() && horizon > 1 {
        let s = names.len();
        for t in 1..horizon {
            names.push(format!("effort_{t}"));
        }
        Some(s)
    } else {
        None
    };
    let (w1_start, w2_start) = if cs.nuclear_ball.is_some() {
        let mut starts = [0usize; 2];
        for (w, start) in starts.iter_mut().enumerate() {
            *start = names.len();
            for j in 0..n {
                for i in j..n {
                    names.push(format!("W{}[{i},{j}]", w + 1));
                }
            }
        }
        (Some(starts[0]), Some(starts[1]))
    } else {
        (None, None)
    };
    let layout = VariableLayout {
        n,
        m,
        horizon,
        u_start,
        omega,
        xi_start,
        frobenius_epigraph,
        effort_start,
        w1_start,
        w2_start,
        fixed_omega: problem.fixed_omega(),
    };
    let num_vars = names.len();
    let mut asm = Assembler::new(num_vars);

    // objective
    let mut c = vec![0.0; num_vars];
    let mut offset = 0.0;
    if let Some(k) = frobenius_epigraph {
        c[k] = obj.lambda1;
    }
    if let Some(s) = effort_start {
        for t in 1..horizon {
            c[s + t - 1] = obj.lambda2;
        }
    }
    if obj.level_active() {
        match (omega, cs.omega_mode) {
            (Some(k), _) => c[k] = obj.lambda3,
            (None, OmegaMode::Fixed { value }) => offset += obj.lambda3 * value,
            _ => {}
        }
    }

    // per-stage error residuals v_t = C A C† r_{t−1} + C B u_{t−1} − r_t, optionally weighted by Lᵀ
    let factor = problem.error_norm.factor(p)?;
    let weight = match &factor {
        Some(l) => l.transpose(),
        None => Matrix::identity(p),
    };
    let wc = weight.matmul(spec.c())?;
    let wcb = wc.matmul(spec.b())?;
    for t in 1..=horizon {
        let z = spec.c_pinv().mul_vec(spec.reference(t - 1))?;
        let wr = weight.mul_vec(spec.reference(t))?;
        let mut tail = Vec::with_capacity(p);
        for i in 0..p {
            let mut e = Affine::constant(-wr[i]);
            for kk in 0..n {
                let cik = wc[(i, kk)];
                if cik == 0.0 {
                    continue;
                }
                for l in 0..n {
                    e.add_term(layout.a_index(kk, l), cik * z[l]);
                }
            }
            for j in 0..m {
                e.add_term(layout.u_index(t - 1, j), wcb[(i, j)]);
            }
            tail.push(e);
        }
        let xi = Affine::var(layout.xi_index(t));
        match form {
            Form::Soc => {
                let mut rows = Vec::with_capacity(p + 1);
                rows.push(xi);
                rows.extend(tail);
                asm.block(Cone::SecondOrder(p + 1), format!("stage_error[{t}]"), rows);
            }
            Form::Lmi => {
                let side = p + 1;
                let mut rows = vec![Affine::default(); svec_len(side)];
                for d in 0..side {
                    rows[svec_index(side, d, d)] = Affine::var(layout.xi_index(t));
                }
                for (i, e) in tail.into_iter().enumerate() {
                    rows[svec_index(side, p, i)] = e.scaled(SQRT2);
                }
                asm.block(Cone::Psd(side), format!("stage_error_lmi[{t}]"), rows);
            }
        }
    }

    // Σ ξ_t ≤ ω
    let mut budget = match (omega, cs.omega_mode) {
        (Some(k), _) => Affine::var(k),
        (None, OmegaMode::Fixed { value }) => Affine::constant(value),
        _ => unreachable!(),
    };
    for t in 1..=horizon {
        budget.add_term(layout.xi_index(t), -1.0);
    }
    asm.nonneg(budget, "error_budget");
    if let (Some(k), OmegaMode::Variable { upper }) = (omega, cs.omega_mode) {
        let mut e = Affine::constant(upper);
        e.add_term(k, -1.0);
        asm.nonneg(e, "omega_upper");
    }

    // objective epigraphs
    if let (Some(k), MatrixTerm::FrobeniusDist { a_ref }) = (frobenius_epigraph, &obj.f1) {
        let mut rows = Vec::with_capacity(n * n + 1);
        rows.push(Affine::var(k));
        for i in 0..n {
            for j in 0..n {
                let mut e = Affine::constant(-a_ref[(i, j)]);
                e.add_term(layout.a_index(i, j), 1.0);
                rows.push(e);
            }
        }
        asm.block(Cone::SecondOrder(n * n + 1), "frobenius_objective", rows);
    }
    if let Some(s) = effort_start {
        for t in 1..horizon {
            let mut rows = Vec::with_capacity(m + 1);
            rows.push(Affine::var(s + t - 1));
            for k in 0..m {
                let mut e = Affine::default();
                e.add_term(layout.u_index(t, k), 1.0)
                    .add_term(layout.u_index(t - 1, k), -1.0);
                rows.push(e);
            }
            asm.block(
                Cone::SecondOrder(m + 1),
                format!("control_effort[{t}]"),
                rows,
            );
        }
    }

    // constraint set
    if let Some(bx) = &cs.a_box {
        for i in 0..n {
            for j in 0..n {
                let (lo, hi) = (bx.lower[(i, j)], bx.upper[(i, j)]);
                let k = layout.a_index(i, j);
                if lo == hi {
                    let mut e = Affine::constant(hi);
                    e.add_term(k, -1.0);
                    asm.equal_zero(e, "a_box");
                } else {
                    let mut lower = Affine::constant(-lo);
                    lower.add_term(k, 1.0);
                    asm.nonneg(lower, "a_box");
                    let mut upper = Affine::constant(hi);
                    upper.add_term(k, -1.0);
                    asm.nonneg(upper, "a_box");
                }
            }
        }
    }
    if let Some(bx) = &cs.u_box {
        for t in 0..horizon {
            for k in 0..m {
                let (lo, hi) = (bx.lower[k], bx.upper[k]);
                let idx = layout.u_index(t, k);
                if lo == hi {
                    let mut e = Affine::constant(hi);
                    e.add_term(idx, -1.0);
                    asm.equal_zero(e, "u_box");
                } else {
                    let mut lower = Affine::constant(-lo);
                    lower.add_term(idx, 1.0);
                    asm.nonneg(lower, "u_box");
                    let mut upper = Affine::constant(hi);
                    upper.add_term(idx, -1.0);
                    asm.nonneg(upper, "u_box");
                }
            }
        }
    }
    if let Some(rate) = &cs.u_rate {
        for t in 1..horizon {
            for k in 0..m {
                let (cur, prev) = (layout.u_index(t, k), layout.u_index(t - 1, k));
                let mut lower = Affine::constant(-rate.lower[k]);
                lower.add_term(cur, 1.0).add_term(prev, -1.0);
                let mut upper = Affine::constant(rate.upper[k]);
                upper.add_term(cur, -1.0).add_term(prev, 1.0);
                if rate.lower[k] == rate.upper[k] {
                    asm.equal_zero(upper, "u_rate");
                } else {
                    asm.nonneg(lower, "u_rate");
                    asm.nonneg(upper, "u_rate");
                }
            }
        }
    }
    if let Some(balls) = &cs.u_balls {
        for (t, ball) in balls.iter().enumerate() {
            let diffs: Vec<Affine> = (0..m)
                .map(|k| {
                    let mut e = Affine::constant(-ball.center[k]);
                    e.add_term(layout.u_index(t, k), 1.0);
                    e
                })
                .collect();
            if ball.radius == 0.0 {
                for d in diffs {
                    asm.equal_zero(d, "u_ball");
                }
            } else {
                let mut rows = Vec::with_capacity(m + 1);
                rows.push(Affine::constant(ball.radius));
                rows.extend(diffs);
                asm.block(Cone::SecondOrder(m + 1), format!("u_ball[{t}]"), rows);
            }
        }
    }
    for (q, ineq) in cs.a_linear.iter().enumerate() {
        let mut e = Affine::constant(ineq.rhs);
        for i in 0..n {
            for j in 0..n {
                e.add_term(layout.a_index(i, j), -ineq.coeffs[(i, j)]);
            }
        }
        asm.relation(e, ineq.relation, format!("a_linear[{q}]"));
    }
    if cs.stochastic_columns {
        for j in 0..n {
            let mut sum = Affine::constant(1.0);
            for i in 0..n {
                sum.add_term(layout.a_index(i, j), -1.0);
                asm.nonneg(Affine::var(layout.a_index(i, j)), "stochastic_nonneg");
            }
            asm.equal_zero(sum, "stochastic_column_sum");
        }
    }
    if let (Some(alpha), Some(w1), Some(w2)) = (cs.nuclear_ball, w1_start, w2_start) {
        let side = 2 * n;
        let mut rows = vec![Affine::default(); svec_len(side)];
        for j in 0..side {
            for i in j..side {
                let scale = if i == j { 1.0 } else { SQRT2 };
                let var = if i < n {
                    layout.sym_index(w1, i, j)
                } else if j >= n {
                    layout.sym_index(w2, i - n, j - n)
                } else {
                    // lower-left block is Aᵀ: entry (i, j) = A[j, i − n]
                    layout.a_index(j, i - n)
                };
                let mut e = Affine::default();
                e.add_term(var, scale);
                rows[svec_index(side, i, j)] = e;
            }
        }
        asm.block(Cone::Psd(side), "nuclear_ball_lmi", rows);
        let mut trace = Affine::constant(alpha);
        for d in 0..n {
            trace.add_term(layout.sym_index(w1, d, d), -0.5);
            trace.add_term(layout.sym_index(w2, d, d), -0.5);
        }
        asm.nonneg(trace, "nuclear_ball_trace");
    }
    if let Some(io) = &cs.io_structure {
        let m1 = io.m1;
        for i in 0..n {
            for j in m1..n {
                // upper-right O block and lower-right I block are fixed
                let target = if i >= m1 && i == j { 1.0 } else { 0.0 };
                let mut e = Affine::constant(target);
                e.add_term(layout.a_index(i, j), -1.0);
                asm.equal_zero(e, "io_structure");
            }
        }
        for (q, ineq) in io.inequalities.iter().enumerate() {
            // G = I − A11, H = −A21
            let mut e = Affine::constant(ineq.rhs);
            for i in 0..m1 {
                for j in 0..m1 {
                    let g = ineq.g_coeffs[(i, j)];
                    if i == j {
                        e.constant -= g;
                    }
                    e.add_term(layout.a_index(i, j), g);
                }
            }
            for i in 0..io.m2 {
                for j in 0..m1 {
                    e.add_term(layout.a_index(m1 + i, j), ineq.h_coeffs[(i, j)]);
                }
            }
            asm.relation(e, ineq.relation, format!("io_inequality[{q}]"));
        }
    }

    asm.finish(c, offset, names, layout)
}
