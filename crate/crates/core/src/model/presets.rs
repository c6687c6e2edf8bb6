//! Constructors for the application models and the experiment models.

use super::{
    ConstraintSet, ControlBall, ControlTerm, IoInequality, IoStructure, LevelTerm, MatrixBox,
    MopulProblem, ObjectiveSpec, OmegaMode, VectorBox,
};
use crate::error::{dim_err, Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::system::{ErrorNorm, SystemSpec};

const SIMPLEX_TOL: f64 = 1e-6;

fn is_identity(m: &Matrix) -> bool {
    m.is_square()
        && m.sub(&Matrix::identity(m.rows()))
            .map(|d| d.max_abs() == 0.0)
            .unwrap_or(false)
}

/// Tracking with control-effort penalty: `Σ‖y_t − r_t‖ + λ Σ‖u_t − u_{t−1}‖`.
pub fn preset_mpc(spec: SystemSpec, lambda: f64, extra: ConstraintSet) -> Result<MopulProblem> {
    let objective = ObjectiveSpec {
        lambda1: 0.0,
        lambda2: lambda,
        lambda3: 1.0,
        f2: ControlTerm::ControlEffort,
        f3: LevelTerm::Identity,
        ..ObjectiveSpec::default()
    };
    MopulProblem::new(spec, objective, extra, ErrorNorm::Euclidean)
}

/// Four-compartment epidemic fit with `B = C = I`.
pub fn preset_covid(spec: SystemSpec, extra: ConstraintSet) -> Result<MopulProblem> {
    if spec.n() != 4 || spec.m() != 4 || spec.p() != 4 {
        return Err(dim_err(
            "epidemic model dimensions n, m, p",
            4,
            format!("{}, {}, {}", spec.n(), spec.m(), spec.p()),
        ));
    }
    if !is_identity(spec.b()) || !is_identity(spec.c()) {
        return Err(Error::InvalidProblem(
            "epidemic model requires B = C = I".into(),
        ));
    }
    MopulProblem::new(
        spec,
        ObjectiveSpec::level_only(),
        extra,
        ErrorNorm::Euclidean,
    )
}

fn check_distribution(what: &str, v: &Vector) -> Result<()> {
    let sum: f64 = v.iter().sum();
    if v.iter().any(|&x| x < -SIMPLEX_TOL) || (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidProblem(format!(
            "{what} is not a probability vector (sum {sum})"
        )));
    }
    Ok(())
}

/// Transition-matrix estimation from observed state frequencies.
///
/// `initial` is the distribution at time 0; `observations` are the frequencies
/// at times `1..N`. Columns of the estimate sum to one and its nuclear norm is
/// at most `alpha`.
pub fn preset_markov(
    num_states: usize,
    alpha: f64,
    initial: Vector,
    observations: Vec<Vector>,
) -> Result<MopulProblem> {
    if initial.dim() != num_states {
        return Err(dim_err("initial distribution", num_states, initial.dim()));
    }
    check_distribution("initial distribution", &initial)?;
    for (t, obs) in observations.iter().enumerate() {
        if obs.dim() != num_states {
            return Err(dim_err(
                &format!("observation {}", t + 1),
                num_states,
                obs.dim(),
            ));
        }
        check_distribution(&format!("observation {}", t + 1), obs)?;
    }
    let spec = SystemSpec::new(
        Matrix::zeros(num_states, 1),
        Matrix::identity(num_states),
        initial,
        observations,
    )?;
    let constraints = ConstraintSet {
        u_box: Some(VectorBox::symmetric(1, 0.0)),
        stochastic_columns: true,
        nuclear_ball: Some(alpha),
        ..ConstraintSet::default()
    };
    MopulProblem::new(
        spec,
        ObjectiveSpec::level_only(),
        constraints,
        ErrorNorm::Euclidean,
    )
}

fn io_spec_check(m1: usize, m2: usize, spec: &SystemSpec) -> Result<()> {
    if spec.n() != m1 + m2 {
        return Err(dim_err("input-output system size", m1 + m2, spec.n()));
    }
    if !is_identity(spec.b()) || !is_identity(spec.c()) {
        return Err(Error::InvalidProblem(
            "input-output model requires B = C = I".into(),
        ));
    }
    Ok(())
}

/// Enterprise input-output fit with `A = [[I − G, O], [−H, I]]`.
pub fn preset_io1(
    m1: usize,
    m2: usize,
    spec: SystemSpec,
    io_ineqs: Vec<IoInequality>,
) -> Result<MopulProblem> {
    io_spec_check(m1, m2, &spec)?;
    let constraints = ConstraintSet {
        io_structure: Some(IoStructure {
            m1,
            m2,
            inequalities: io_ineqs,
        }),
        ..ConstraintSet::default()
    };
    MopulProblem::new(
        spec,
        ObjectiveSpec::level_only(),
        constraints,
        ErrorNorm::Euclidean,
    )
}

/// Input-output model with minimal technology change under a fixed error level.
#[allow(clippy::too_many_arguments)]
pub fn preset_io2(
    m1: usize,
    m2: usize,
    spec: SystemSpec,
    a_ref: Matrix,
    u_refs: Vec<Vector>,
    omega: f64,
    omega_t: Vec<f64>,
    io_ineqs: Vec<IoInequality>,
) -> Result<MopulProblem> {
    io_spec_check(m1, m2, &spec)?;
    let mut problem = preset_amopul2(spec, a_ref, u_refs, omega, omega_t)?;
    problem.constraints.io_structure = Some(IoStructure {
        m1,
        m2,
        inequalities: io_ineqs,
    });
    problem.validate()?;
    Ok(problem)
}

/// Level minimisation with `|a_ij| ≤ a_bound` and `|u_t^i| ≤ u_bound`.
pub fn preset_amopul1_box(spec: SystemSpec, a_bound: f64, u_bound: f64) -> Result<MopulProblem> {
    if !(a_bound >= 0.0 && u_bound >= 0.0) {
        return Err(Error::InvalidArgument(
            "box bounds must be nonnegative".into(),
        ));
    }
    let constraints = ConstraintSet {
        a_box: Some(MatrixBox::symmetric(spec.n(), a_bound)),
        u_box: Some(VectorBox::symmetric(spec.m(), u_bound)),
        ..ConstraintSet::default()
    };
    MopulProblem::new(
        spec,
        ObjectiveSpec::level_only(),
        constraints,
        ErrorNorm::Euclidean,
    )
}

/// `min ‖A − A_ref‖_F` with approximate cumulative error at most `omega_tilde`
/// and `‖u_t − u_refs[t]‖ ≤ omega_t[t]`.
pub fn preset_amopul2(
    spec: SystemSpec,
    a_ref: Matrix,
    u_refs: Vec<Vector>,
    omega_tilde: f64,
    omega_t: Vec<f64>,
) -> Result<MopulProblem> {
    if u_refs.len() != spec.horizon() {
        return Err(dim_err("control references", spec.horizon(), u_refs.len()));
    }
    let omega_t = if omega_t.len() == 1 {
        vec![omega_t[0]; spec.horizon()]
    } else {
        omega_t
    };
    if omega_t.len() != spec.horizon() {
        return Err(dim_err("control levels", spec.horizon(), omega_t.len()));
    }
    let balls = u_refs
        .into_iter()
        .zip(omega_t)
        .map(|(center, radius)| ControlBall { center, radius })
        .collect();
    let constraints = ConstraintSet {
        u_balls: Some(balls),
        omega_mode: OmegaMode::Fixed { value: omega_tilde },
        ..ConstraintSet::default()
    };
    MopulProblem::new(
        spec,
        ObjectiveSpec::frobenius(a_ref),
        constraints,
        ErrorNorm::Euclidean,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MatrixTerm;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn mpc_mapping() {
        let spec = SystemSpec::identity(v(&[0.0]), vec![v(&[1.0])]).unwrap();
        let p = preset_mpc(spec.clone(), 0.0, ConstraintSet::default()).unwrap();
        assert!(!p.objective.effort_active());
        assert!(p.objective.level_active());
        let p = preset_mpc(spec, 2.5, ConstraintSet::default()).unwrap();
        assert_eq!(p.objective.lambda2, 2.5);
        assert_eq!(p.objective.lambda1, 0.0);
    }

    #[test]
    fn covid_requires_identity_four() {
        let refs = vec![v(&[0.25; 4]); 3];
        let spec = SystemSpec::identity(v(&[0.25; 4]), refs.clone()).unwrap();
        assert!(preset_covid(spec, ConstraintSet::default()).is_ok());
        let spec3 = SystemSpec::identity(v(&[0.3; 3]), vec![v(&[0.3; 3])]).unwrap();
        assert!(preset_covid(spec3, ConstraintSet::default()).is_err());
        let b = Matrix::from_diag(&[2.0, 1.0, 1.0, 1.0]);
        let spec = SystemSpec::new(b, Matrix::identity(4), v(&[0.25; 4]), refs).unwrap();
        assert!(preset_covid(spec, ConstraintSet::default()).is_err());
    }

    #[test]
    fn markov_validation() {
        let pi0 = v(&[0.5, 0.5]);
        assert!(preset_markov(2, 1.5, pi0.clone(), vec![v(&[0.4, 0.6])]).is_ok());
        assert!(preset_markov(2, 1.5, pi0.clone(), vec![v(&[0.4, 0.7])]).is_err());
        assert!(preset_markov(2, 1.5, pi0.clone(), vec![v(&[-0.1, 1.1])]).is_err());
        assert!(preset_markov(2, 2.0, pi0, vec![v(&[0.4, 0.6])]).is_err());
    }

    #[test]
    fn amopul2_mapping() {
        let spec = SystemSpec::identity(v(&[0.0, 0.0]), vec![v(&[1.0, 0.0]); 3]).unwrap();
        let p = preset_amopul2(
            spec,
            Matrix::identity(2),
            vec![v(&[0.0, 0.0]); 3],
            10.0,
            vec![3.0],
        )
        .unwrap();
        assert_eq!(p.fixed_omega(), Some(10.0));
        assert_eq!(p.constraints.u_balls.as_ref().unwrap().len(), 3);
        assert!(matches!(p.objective.f1, MatrixTerm::FrobeniusDist { .. }));
        for wt in [3.0, 4.5, 6.0, 8.0] {
            for omega in [2.0, 10.0, 160.0] {
                let spec = SystemSpec::identity(v(&[0.0]), vec![v(&[1.0])]).unwrap();
                assert!(preset_amopul2(
                    spec,
                    Matrix::identity(1),
                    vec![v(&[0.0])],
                    omega,
                    vec![wt]
                )
                .is_ok());
            }
        }
    }

    #[test]
    fn box_preset_bounds() {
        let spec = SystemSpec::identity(v(&[0.0, 0.0]), vec![v(&[1.0, 0.0])]).unwrap();
        let p = preset_amopul1_box(spec, 0.4, 0.5).unwrap();
        let bx = p.constraints.a_box.unwrap();
        assert_eq!(bx.upper[(1, 0)], 0.4);
        assert_eq!(p.constraints.u_box.unwrap().lower[1], -0.5);
    }
}
