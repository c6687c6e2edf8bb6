//! Error-amplification bounds between the decoupled and nested rollouts, with
//! per-solution certificates.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{dim_err, Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::model::MopulProblem;
use crate::system::{self, ErrorNorm, SystemSpec};

/// Relative slack granted to `observed ≤ bound`.
pub const HOLDS_TOL: f64 = 1e-7;

/// Which guarantee a certificate evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    /// Nested-rollout error of an optimum is at most `(Σ βⁱ) ω^u`.
    T2,
    /// A tightened control level lifts back to the nested rollout.
    T3,
    /// Optimal level is at most `(1+γ) Σ_{t<N} ε_t + ε_N`.
    T4,
    /// `v_A1 ≤ (1+γ) v_M1`.
    T5,
    /// `v_M1 ≤ (Σ ζⁱ) v_A1`.
    T6,
    /// Tightened Frobenius-recovery solutions respect the nested level.
    T7,
    /// Q-norm version of the tightened level.
    R3,
    /// Two-sided ratio `1/Σζⁱ ≤ v_A1/v_M1 ≤ 1+γ`.
    R5,
}

mod nan_as_null {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// An evaluated guarantee: `holds ⇔ observed ≤ bound + 1e-7·max(1, bound)`.
///
/// Non-finite values serialize as `null`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub theorem: Theorem,
    pub inputs: BTreeMap<String, f64>,
    #[serde(with = "nan_as_null")]
    pub bound_value: f64,
    #[serde(with = "nan_as_null")]
    pub observed_value: f64,
    pub holds: bool,
    #[serde(with = "nan_as_null")]
    pub slack: f64,
    /// False when the guarantee's hypotheses were not met (or could not be checked).
    pub preconditions_met: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BoundCertificate {
    pub fn new(
        theorem: Theorem,
        inputs: BTreeMap<String, f64>,
        bound_value: f64,
        observed_value: f64,
    ) -> Self {
        Self {
            theorem,
            inputs,
            bound_value,
            observed_value,
            holds: holds(observed_value, bound_value),
            slack: bound_value - observed_value,
            preconditions_met: true,
            note: None,
        }
    }

    /// A certificate that could not be computed.
    pub fn not_evaluated(theorem: Theorem, inputs: BTreeMap<String, f64>, reason: &str) -> Self {
        Self {
            note: Some(format!("not evaluated: {reason}")),
            preconditions_met: false,
            ..Self::new(theorem, inputs, f64::NAN, f64::NAN)
        }
    }

    pub fn evaluated(&self) -> bool {
        self.bound_value.is_finite() && self.observed_value.is_finite()
    }

    fn with_precondition(mut self, ok: bool, note: String) -> Self {
        if !ok {
            self.preconditions_met = false;
            self.note = Some(note);
        }
        self
    }

    fn with_note(mut self, note: &str) -> Self {
        self.note = Some(note.to_string());
        self
    }
}

fn holds(observed: f64, bound: f64) -> bool {
    observed <= bound + HOLDS_TOL * bound.max(1.0)
}

fn inputs(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn check_level(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "{name} must be finite and nonnegative, got {v}"
        )));
    }
    Ok(())
}

/// `‖C A C†‖₂`.
pub fn contraction_factor(spec: &SystemSpec, a: &Matrix) -> Result<f64> {
    if a.shape() != (spec.n(), spec.n()) {
        return Err(dim_err(
            "A",
            format!("{0}x{0}", spec.n()),
            format!("{}x{}", a.rows(), a.cols()),
        ));
    }
    let cac = spec.c().matmul(a)?.matmul(spec.c_pinv())?;
    linalg::spectral_norm(&cac)
}

/// `Σ_{i=0}^{N−1} βⁱ`, equal to 1 for `β = 0`.
pub fn geometric_sum(beta: f64, horizon: usize) -> f64 {
    (0..horizon).map(|i| beta.powi(i as i32)).sum()
}

/// `β = α ‖C‖₂ ‖C†‖₂` from an a-priori bound `‖A‖₂ ≤ α` implied by the constraint set.
///
/// `α` is the smaller of `‖M‖₂` for the a-box magnitude `M` (since `|A| ≤ M`
/// entrywise gives `‖A‖₂ ≤ ‖M‖₂`) and the nuclear-ball radius. `None` if neither is present.
pub fn default_beta(problem: &MopulProblem) -> Result<Option<f64>> {
    let cs = &problem.constraints;
    let mut alpha: Option<f64> = None;
    if let Some(bx) = &cs.a_box {
        alpha = Some(linalg::spectral_norm(&bx.magnitude())?);
    }
    if let Some(r) = cs.nuclear_ball {
        alpha = Some(alpha.map_or(r, |a| a.min(r)));
    }
    let Some(alpha) = alpha else { return Ok(None) };
    let spec = &problem.system;
    Ok(Some(
        alpha * linalg::spectral_norm(spec.c())? * linalg::spectral_norm(spec.c_pinv())?,
    ))
}

fn exact_error(spec: &SystemSpec, a: &Matrix, u: &[Vector], norm: &ErrorNorm) -> Result<f64> {
    system::cumulative_error(&system::rollout_exact(spec, a, u)?, spec, norm)
}

fn approx_error(spec: &SystemSpec, a: &Matrix, u: &[Vector], norm: &ErrorNorm) -> Result<f64> {
    system::cumulative_error(&system::rollout_approx(spec, a, u)?, spec, norm)
}

/// Nested-rollout error of `(a, u)` against `(Σ βⁱ) ω^u`.
///
/// Hypotheses checked on this solution: `‖C A C†‖₂ ≤ β` and decoupled error `≤ ω^u`.
pub fn theorem2_certificate(
    spec: &SystemSpec,
    a: &Matrix,
    u: &[Vector],
    beta: f64,
    omega_u: f64,
) -> Result<BoundCertificate> {
    check_level("beta", beta)?;
    check_level("omega_u", omega_u)?;
    let zeta = contraction_factor(spec, a)?;
    let approx = approx_error(spec, a, u, &ErrorNorm::Euclidean)?;
    let observed = exact_error(spec, a, u, &ErrorNorm::Euclidean)?;
    let bound = geometric_sum(beta, spec.horizon()) * omega_u;
    let ins = inputs(&[
        ("beta", beta),
        ("omega_u", omega_u),
        ("contraction", zeta),
        ("approx_error", approx),
    ]);
    let ok = holds(zeta, beta) && holds(approx, omega_u);
    Ok(BoundCertificate::new(Theorem::T2, ins, bound, observed).with_precondition(
        ok,
        format!("hypotheses violated: contraction {zeta:.6e} vs beta {beta:.6e}, approximate error {approx:.6e} vs omega_u {omega_u:.6e}"),
    ))
}

/// Tightened decoupled level `ω^c / Σ βⁱ`.
pub fn theorem3_tighten(omega_c: f64, beta: f64, horizon: usize) -> Result<f64> {
    check_level("omega_c", omega_c)?;
    check_level("beta", beta)?;
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    Ok(omega_c / geometric_sum(beta, horizon))
}

/// Nested-rollout error of a solution obtained at the tightened level, against `ω^c`.
pub fn theorem3_check(
    spec: &SystemSpec,
    a: &Matrix,
    u: &[Vector],
    omega_c: f64,
    beta: f64,
) -> Result<BoundCertificate> {
    let level = theorem3_tighten(omega_c, beta, spec.horizon())?;
    let zeta = contraction_factor(spec, a)?;
    let approx = approx_error(spec, a, u, &ErrorNorm::Euclidean)?;
    let observed = exact_error(spec, a, u, &ErrorNorm::Euclidean)?;
    let ins = inputs(&[
        ("omega_c", omega_c),
        ("beta", beta),
        ("tightened_level", level),
        ("contraction", zeta),
        ("approx_error", approx),
    ]);
    let ok = holds(zeta, beta) && holds(approx, level);
    Ok(BoundCertificate::new(Theorem::T3, ins, omega_c, observed).with_precondition(
        ok,
        format!("hypotheses violated: contraction {zeta:.6e} vs beta {beta:.6e}, approximate error {approx:.6e} vs level {level:.6e}"),
    ))
}

/// `(1+γ) Σ_{t=1}^{N−1} ε_t + ε_N`.
pub fn theorem4_bound(eps: &[f64], gamma: f64) -> Result<f64> {
    check_level("gamma", gamma)?;
    for (t, e) in eps.iter().enumerate() {
        check_level(&format!("epsilon[{}]", t + 1), *e)?;
    }
    let Some((last, head)) = eps.split_last() else {
        return Ok(0.0);
    };
    Ok((1.0 + gamma) * head.iter().sum::<f64>() + last)
}

/// Per-stage margins `ε_t − ‖ŷ_t − r_t‖₂` of the recursion
/// `ŷ_0 = C x_0`, `ŷ_t = C A C† ŷ_{t−1} + C B u_{t−1}`.
pub fn z_epsilon_margins(
    spec: &SystemSpec,
    a: &Matrix,
    u: &[Vector],
    eps: &[f64],
) -> Result<Vec<f64>> {
    spec.check_inputs(a, u)?;
    if eps.len() != spec.horizon() {
        return Err(dim_err("epsilon", spec.horizon(), eps.len()));
    }
    let cac = spec.c().matmul(a)?.matmul(spec.c_pinv())?;
    let cb = spec.c().matmul(spec.b())?;
    let mut y = spec.r0().clone();
    let mut margins = Vec::with_capacity(eps.len());
    for t in 1..=spec.horizon() {
        y = cac.mul_vec(&y)?.add(&cb.mul_vec(&u[t - 1])?);
        margins.push(eps[t - 1] - y.sub(spec.reference(t)).norm2());
    }
    Ok(margins)
}

/// Whether `(a, u)` lies in the ε-set (ignoring the problem's own constraint set).
pub fn z_epsilon_member(spec: &SystemSpec, a: &Matrix, u: &[Vector], eps: &[f64]) -> Result<bool> {
    Ok(z_epsilon_margins(spec, a, u, eps)?
        .iter()
        .all(|m| *m >= -1e-12))
}

/// Optimal decoupled level `v_A1` against the ε-bound evaluated at a member `(a, u)`,
/// with `γ = ‖C A C†‖₂` of that member.
pub fn theorem4_certificate(
    spec: &SystemSpec,
    v_a1: f64,
    member_a: &Matrix,
    member_u: &[Vector],
    eps: &[f64],
) -> Result<BoundCertificate> {
    let gamma = contraction_factor(spec, member_a)?;
    let bound = theorem4_bound(eps, gamma)?;
    let member = z_epsilon_member(spec, member_a, member_u, eps)?;
    let ins = inputs(&[("gamma", gamma), ("epsilon_sum", eps.iter().sum())]);
    Ok(BoundCertificate::new(Theorem::T4, ins, bound, v_a1)
        .with_precondition(member, "candidate is not in the epsilon set".into()))
}

/// A nested-rollout reference optimum for the level-minimisation problem, obtained externally.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NestedOptimum {
    pub value: f64,
    pub a: Matrix,
    pub u: Vec<Vector>,
}

/// Ratio certificates for a solved decoupled optimum `(a, u)` with value `v_a1`.
///
/// Returns `(T5, T6)`. `ζ` is the contraction at the solved optimum, an upper bound on
/// the infimum over the optimal set. T6 compares against the nested reference value when
/// given, otherwise against the nested-rollout error of the solved optimum (itself an
/// upper bound on `v_M1`). T5 needs the nested reference and uses `γ` of its minimiser.
pub fn theorem56_ratio(
    spec: &SystemSpec,
    a: &Matrix,
    u: &[Vector],
    v_a1: f64,
    nested: Option<&NestedOptimum>,
) -> Result<(BoundCertificate, BoundCertificate)> {
    let zeta = contraction_factor(spec, a)?;
    let sum = geometric_sum(zeta, spec.horizon());
    let t6 = match nested {
        Some(m) => BoundCertificate::new(
            Theorem::T6,
            inputs(&[("zeta", zeta), ("v_a1", v_a1)]),
            sum * v_a1,
            m.value,
        )
        .with_note("per-solution zeta"),
        None => {
            let ce = exact_error(spec, a, u, &ErrorNorm::Euclidean)?;
            BoundCertificate::new(
                Theorem::T6,
                inputs(&[("zeta", zeta), ("v_a1", v_a1)]),
                sum * v_a1,
                ce,
            )
            .with_note("per-solution zeta; observed is the nested error of the solved optimum")
        }
    };
    let t5 = match nested {
        Some(m) => {
            let gamma = contraction_factor(spec, &m.a)?;
            let bound = (1.0 + gamma) * m.value;
            BoundCertificate::new(
                Theorem::T5,
                inputs(&[("gamma", gamma), ("v_m1", m.value)]),
                bound,
                v_a1,
            )
            .with_note("per-solution gamma")
        }
        None => BoundCertificate::not_evaluated(
            Theorem::T5,
            inputs(&[("v_a1", v_a1)]),
            "no nested reference optimum",
        ),
    };
    Ok((t5, t6))
}

/// Two-sided ratio `1/Σζⁱ ≤ v_A1/v_M1 ≤ 1+γ` encoded as
/// `observed = max(lower − ratio, ratio − upper) ≤ 0`.
pub fn remark5_sandwich(
    v_a1: f64,
    v_m1: f64,
    zeta: f64,
    gamma: f64,
    horizon: usize,
) -> BoundCertificate {
    let lower = 1.0 / geometric_sum(zeta, horizon);
    let upper = 1.0 + gamma;
    let ins = inputs(&[
        ("v_a1", v_a1),
        ("v_m1", v_m1),
        ("zeta", zeta),
        ("gamma", gamma),
        ("lower", lower),
        ("upper", upper),
    ]);
    if !(v_m1 > 0.0) {
        return BoundCertificate::not_evaluated(Theorem::R5, ins, "nested optimum is zero");
    }
    let ratio = v_a1 / v_m1;
    let mut c = BoundCertificate::new(Theorem::R5, ins, 0.0, (lower - ratio).max(ratio - upper));
    c.inputs.insert("ratio".into(), ratio);
    c
}

/// Nested error of a solution obtained with `ω̃ = ω / Σ βⁱ` against `ω`;
/// the Frobenius objective is recorded as an upper bound on the nested optimum.
pub fn theorem7_certificate(
    problem: &MopulProblem,
    omega: f64,
    beta: f64,
    a: &Matrix,
    u: &[Vector],
) -> Result<BoundCertificate> {
    let spec = &problem.system;
    let level = theorem3_tighten(omega, beta, spec.horizon())?;
    let zeta = contraction_factor(spec, a)?;
    let observed = exact_error(spec, a, u, &ErrorNorm::Euclidean)?;
    let approx = approx_error(spec, a, u, &ErrorNorm::Euclidean)?;
    let mut ins = inputs(&[
        ("omega", omega),
        ("beta", beta),
        ("tightened_level", level),
        ("contraction", zeta),
        ("approx_error", approx),
    ]);
    if let crate::model::MatrixTerm::FrobeniusDist { a_ref } = &problem.objective.f1 {
        ins.insert("objective_upper_bound".into(), a.sub(a_ref)?.frobenius());
    }
    let used = problem.fixed_omega();
    let level_ok = used.is_some_and(|w| (w - level).abs() <= 1e-9 * level.max(1.0));
    let ok = level_ok && holds(zeta, beta) && holds(approx, level);
    Ok(BoundCertificate::new(Theorem::T7, ins, omega, observed).with_precondition(
        ok,
        format!(
            "hypotheses violated: fixed level {used:?} vs tightened {level:.6e}, contraction {zeta:.6e} vs beta {beta:.6e}"
        ),
    ))
}

/// Norm-equivalence constants `η₁ = 1/√λ_max(Q)`, `η₂ = 1/√λ_min(Q)`.
pub fn q_norm_constants(q: &Matrix) -> Result<(f64, f64)> {
    linalg::cholesky(q)?;
    let eig = linalg::sym_eigs(q)?;
    let (lo, hi) = (eig[0], eig[eig.dim() - 1]);
    Ok((1.0 / hi.sqrt(), 1.0 / lo.sqrt()))
}

/// Q-norm decoupled level
/// `ω^c / ((η₂β/η₁)^{N−1} + Σ_{i=0}^{N−2} η₂^{i+1} βⁱ / η₁^{i+1})`.
pub fn remark3_level(omega_c: f64, beta: f64, horizon: usize, q: &Matrix) -> Result<f64> {
    check_level("omega_c", omega_c)?;
    check_level("beta", beta)?;
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let (e1, e2) = q_norm_constants(q)?;
    let n = horizon as i32;
    let mut denom = (e2 * beta / e1).powi(n - 1);
    for i in 0..(n - 1) {
        denom += e2.powi(i + 1) * beta.powi(i) / e1.powi(i + 1);
    }
    Ok(omega_c / denom)
}

/// Q-norm nested error of a solution obtained at the Remark-3 level, against `ω^c`.
pub fn remark3_check(
    spec: &SystemSpec,
    a: &Matrix,
    u: &[Vector],
    omega_c: f64,
    beta: f64,
    q: &Matrix,
) -> Result<BoundCertificate> {
    let level = remark3_level(omega_c, beta, spec.horizon(), q)?;
    let norm = ErrorNorm::QNorm { q: q.clone() };
    let zeta = contraction_factor(spec, a)?;
    let approx = approx_error(spec, a, u, &norm)?;
    let observed = exact_error(spec, a, u, &norm)?;
    let ins = inputs(&[
        ("omega_c", omega_c),
        ("beta", beta),
        ("level", level),
        ("contraction", zeta),
        ("approx_error", approx),
    ]);
    let ok = holds(zeta, beta) && holds(approx, level);
    Ok(BoundCertificate::new(Theorem::R3, ins, omega_c, observed)
        .with_precondition(ok, format!("hypotheses violated: contraction {zeta:.6e} vs beta {beta:.6e}, approximate error {approx:.6e} vs level {level:.6e}")))
}
