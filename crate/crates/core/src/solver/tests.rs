use super::*;
use crate::linalg::Matrix;
use crate::model::{smat, svec};

fn program(c: &[f64], g: &[Vec<f64>], h: &[f64], cones: Vec<Cone>) -> ConicProgram {
    ConicProgram::new(c.to_vec(), Matrix::from_rows(g).unwrap(), h.to_vec(), cones).unwrap()
}

fn solve_ok(p: &ConicProgram) -> Solution {
    let sol = solve(p, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal, "{sol:?}");
    let rep = check_kkt(p, &sol).unwrap();
    assert!(rep.primal_residual <= 1e-7, "{rep:?}");
    assert!(rep.dual_residual <= 1e-7, "{rep:?}");
    assert!(rep.min_slack_margin() >= -1e-9);
    assert!(rep.min_dual_margin() >= -1e-9);
    sol
}

#[test]
fn lp_corner() {
    // min x  s.t. x ≥ 1  ⇔  −x + s = −1, s ≥ 0
    let p = program(&[1.0], &[vec![-1.0]], &[-1.0], vec![Cone::Nonneg(1)]);
    let sol = solve_ok(&p);
    assert!((sol.x[0] - 1.0).abs() < 1e-7);
    assert!((sol.objective - 1.0).abs() < 1e-7);
}

#[test]
fn soc_projection() {
    // min t  s.t. (t, 3, 4) ∈ SOC
    let p = program(
        &[1.0],
        &[vec![-1.0], vec![0.0], vec![0.0]],
        &[0.0, 3.0, 4.0],
        vec![Cone::SecondOrder(3)],
    );
    let sol = solve_ok(&p);
    assert!((sol.objective - 5.0).abs() < 1e-7);
}

#[test]
fn sdp_trace_with_fixed_diagonal() {
    // X = [[x0, x1], [x1, x2]] ⪰ 0, x0 = 1, x2 = 2, min tr X
    let r2 = std::f64::consts::SQRT_2;
    let g = vec![
        vec![1.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![-1.0, 0.0, 0.0],
        vec![0.0, -r2, 0.0],
        vec![0.0, 0.0, -1.0],
    ];
    let p = program(
        &[1.0, 0.0, 1.0],
        &g,
        &[1.0, 2.0, 0.0, 0.0, 0.0],
        vec![Cone::Zero(2), Cone::Psd(2)],
    );
    let sol = solve_ok(&p);
    assert!((sol.objective - 3.0).abs() < 1e-7);
    let x = smat(&sol.slacks.as_slice()[2..], 2);
    assert!((x[(0, 0)] - 1.0).abs() < 1e-7 && (x[(1, 1)] - 2.0).abs() < 1e-7);
    // brute force over parameterised 2×2 PSD matrices with the fixed diagonal
    let brute = (-200..=200)
        .map(|k| {
            Matrix::from_rows(&[vec![1.0, k as f64 / 100.0], vec![k as f64 / 100.0, 2.0]]).unwrap()
        })
        .filter(|m| crate::linalg::sym_eigs(m).unwrap()[0] >= 0.0)
        .map(|m| m.trace())
        .fold(f64::INFINITY, f64::min);
    assert!((sol.objective - brute).abs() < 1e-7);
}

#[test]
fn min_eigenvalue_sdp() {
    // max t s.t. M − tI ⪰ 0  ⇒  t = λ_min(M)
    let m = Matrix::from_rows(&[
        vec![2.0, 1.0, 0.0],
        vec![1.0, 3.0, 0.5],
        vec![0.0, 0.5, 1.0],
    ])
    .unwrap();
    let h = svec(&m);
    let id = svec(&Matrix::identity(3));
    let g: Vec<Vec<f64>> = id.iter().map(|v| vec![*v]).collect();
    let p = program(&[-1.0], &g, &h, vec![Cone::Psd(3)]);
    let sol = solve_ok(&p);
    let lmin = crate::linalg::sym_eigs(&m).unwrap()[0];
    assert!((-sol.objective - lmin).abs() < 1e-7);
}

#[test]
fn infeasible_lp_has_certificate() {
    // x ≤ 0 and x ≥ 1
    let p = program(
        &[1.0],
        &[vec![1.0], vec![-1.0]],
        &[0.0, -1.0],
        vec![Cone::Nonneg(2)],
    );
    let sol = solve(&p, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, Status::PrimalInfeasible);
    let rep = check_kkt(&p, &sol).unwrap();
    assert!((rep.certificate_value.unwrap() + 1.0).abs() < 1e-6);
    assert!(rep.certificate_residual.unwrap() < 1e-6);
    assert!(rep.min_dual_margin() >= -1e-9);
}

#[test]
fn unbounded_lp_is_dual_infeasible() {
    // min −x s.t. x ≥ 0
    let p = program(&[-1.0], &[vec![-1.0]], &[0.0], vec![Cone::Nonneg(1)]);
    let sol = solve(&p, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, Status::DualInfeasible);
    let rep = check_kkt(&p, &sol).unwrap();
    assert!((rep.certificate_value.unwrap() + 1.0).abs() < 1e-6);
}

#[test]
fn equality_only_program() {
    // min x0 + x1 s.t. x0 = 1, x1 = 2, x0 ≥ 0
    let p = program(
        &[1.0, 1.0],
        &[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]],
        &[1.0, 2.0, 0.0],
        vec![Cone::Zero(2), Cone::Nonneg(1)],
    );
    let sol = solve_ok(&p);
    assert!((sol.objective - 3.0).abs() < 1e-7);
}

#[test]
fn psd_cap_is_enforced() {
    let h = svec(&Matrix::identity(3));
    let g: Vec<Vec<f64>> = h.iter().map(|v| vec![*v]).collect();
    let p = program(&[-1.0], &g, &h, vec![Cone::Psd(3)]);
    let cfg = SolverConfig {
        psd_side_cap: 2,
        ..SolverConfig::default()
    };
    assert!(matches!(
        solve(&p, &cfg),
        Err(Error::PsdTooLarge { side: 3, cap: 2 })
    ));
    let bad = SolverConfig {
        tol_gap: 0.0,
        ..SolverConfig::default()
    };
    assert!(solve(&p, &bad).is_err());
}

#[test]
fn trace_is_deterministic() {
    let p = program(
        &[1.0, 2.0],
        &[
            vec![-1.0, 0.0],
            vec![0.0, -1.0],
            vec![-1.0, -1.0],
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        ],
        &[0.0, 0.0, -1.0, 2.0, 0.0, 0.0],
        vec![Cone::Nonneg(3), Cone::SecondOrder(3)],
    );
    let mut a = Vec::new();
    let mut b = Vec::new();
    let sa = solve_traced(&p, &SolverConfig::default(), Some(&mut a)).unwrap();
    let sb = solve_traced(&p, &SolverConfig::default(), Some(&mut b)).unwrap();
    assert_eq!(a, b);
    assert!(a.len() > 30);
    assert_eq!(
        serde_json::to_string(&sa).unwrap(),
        serde_json::to_string(&sb).unwrap()
    );
    assert_eq!(sa.status, Status::Optimal);
    assert!((sa.objective - 1.0).abs() < 1e-7);
}

#[test]
fn perturbed_x_grows_primal_residual_linearly() {
    let p = program(&[1.0], &[vec![-1.0]], &[-1.0], vec![Cone::Nonneg(1)]);
    let sol = solve_ok(&p);
    let base = check_kkt(&p, &sol).unwrap().primal_residual;
    for eps in [1e-4, 1e-3, 1e-2] {
        let mut s2 = sol.clone();
        s2.x = Vector::from(vec![sol.x[0] + eps]);
        let r = check_kkt(&p, &s2).unwrap().primal_residual;
        assert!(((r - base) / eps - 1.0).abs() < 1e-3, "{r} {eps}");
    }
}
