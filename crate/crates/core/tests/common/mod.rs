//! Fixtures shared by the integration tests: an analytic conic library, small random
//! AMOPUL instances and a brute-force nested-rollout oracle for `n = N = 2`.
#![allow(dead_code)]

use mopul::bounds::NestedOptimum;
use mopul::experiments::{gen_ideal_indexed, perturb_refs, solve_problem, NoiseSpec};
use mopul::linalg::{Matrix, Vector};
use mopul::model::{self, svec, Cone, ConicProgram, Form, MatrixBox, MopulProblem};
use mopul::solver::SolverConfig;
use mopul::system::SystemSpec;

/// A conic program with a known optimal value.
pub struct LibraryCase {
    pub name: &'static str,
    pub program: ConicProgram,
    pub optimum: f64,
}

fn case(
    name: &'static str,
    c: &[f64],
    g: &[Vec<f64>],
    h: &[f64],
    cones: Vec<Cone>,
    optimum: f64,
) -> LibraryCase {
    let program =
        ConicProgram::new(c.to_vec(), Matrix::from_rows(g).unwrap(), h.to_vec(), cones).unwrap();
    LibraryCase {
        name,
        program,
        optimum,
    }
}

fn neg_identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { -1.0 } else { 0.0 }).collect())
        .collect()
}

/// `s = h − G x` for a PSD block `smat(s) = M − Σ x_k B_k` (columns `svec(B_k)`).
fn psd_rows(basis: &[Matrix], m: &Matrix) -> (Vec<Vec<f64>>, Vec<f64>) {
    let cols: Vec<Vec<f64>> = basis.iter().map(svec).collect();
    let h = svec(m);
    let rows = (0..h.len())
        .map(|r| cols.iter().map(|c| c[r]).collect())
        .collect();
    (rows, h)
}

pub fn library() -> Vec<LibraryCase> {
    let r2 = std::f64::consts::SQRT_2;
    let mut out = vec![
        // min x s.t. x ≥ 1
        case(
            "lp_single_bound",
            &[1.0],
            &[vec![-1.0]],
            &[-1.0],
            vec![Cone::Nonneg(1)],
            1.0,
        ),
        // max x + y s.t. x + 2y ≤ 4, 3x + y ≤ 6, x, y ≥ 0: vertex (8/5, 6/5)
        case(
            "lp_two_constraint_vertex",
            &[-1.0, -1.0],
            &[
                vec![1.0, 2.0],
                vec![3.0, 1.0],
                vec![-1.0, 0.0],
                vec![0.0, -1.0],
            ],
            &[4.0, 6.0, 0.0, 0.0],
            vec![Cone::Nonneg(4)],
            -2.8,
        ),
        // min x1 + 2x2 + 3x3 on the simplex
        case(
            "lp_simplex",
            &[1.0, 2.0, 3.0],
            &[
                vec![1.0, 1.0, 1.0],
                vec![-1.0, 0.0, 0.0],
                vec![0.0, -1.0, 0.0],
                vec![0.0, 0.0, -1.0],
            ],
            &[1.0, 0.0, 0.0, 0.0],
            vec![Cone::Zero(1), Cone::Nonneg(3)],
            1.0,
        ),
        // min cᵀx over [−1, 1]⁴: −‖c‖₁
        {
            let c = [1.0, -2.0, 3.0, -4.0];
            let mut g = Vec::new();
            let mut h = Vec::new();
            for i in 0..4 {
                for s in [1.0, -1.0] {
                    let mut row = vec![0.0; 4];
                    row[i] = s;
                    g.push(row);
                    h.push(1.0);
                }
            }
            case("lp_box", &c, &g, &h, vec![Cone::Nonneg(8)], -10.0)
        },
        // min t s.t. ‖(3, 4)‖ ≤ t
        case(
            "soc_norm_of_constant",
            &[1.0],
            &[vec![-1.0], vec![0.0], vec![0.0]],
            &[0.0, 3.0, 4.0],
            vec![Cone::SecondOrder(3)],
            5.0,
        ),
        // min aᵀx s.t. ‖x‖ ≤ 1 with a = (1, 2, 2): −‖a‖
        case(
            "soc_linear_over_ball",
            &[1.0, 2.0, 2.0],
            &[
                vec![0.0, 0.0, 0.0],
                vec![-1.0, 0.0, 0.0],
                vec![0.0, -1.0, 0.0],
                vec![0.0, 0.0, -1.0],
            ],
            &[1.0, 0.0, 0.0, 0.0],
            vec![Cone::SecondOrder(4)],
            -3.0,
        ),
        // min ‖x − p‖ s.t. x1 + x2 + x3 = 0, p = (1, 2, 3): distance 6/√3
        case(
            "soc_distance_to_plane",
            &[0.0, 0.0, 0.0, 1.0],
            &[
                vec![1.0, 1.0, 1.0, 0.0],
                vec![0.0, 0.0, 0.0, -1.0],
                vec![-1.0, 0.0, 0.0, 0.0],
                vec![0.0, -1.0, 0.0, 0.0],
                vec![0.0, 0.0, -1.0, 0.0],
            ],
            &[0.0, 0.0, -1.0, -2.0, -3.0],
            vec![Cone::Zero(1), Cone::SecondOrder(4)],
            6.0 / 3f64.sqrt(),
        ),
        // min ‖(x, y)‖ s.t. x + y ≥ 2: √2 at (1, 1)
        case(
            "soc_min_norm_halfspace",
            &[0.0, 0.0, 1.0],
            &[
                vec![-1.0, -1.0, 0.0],
                vec![0.0, 0.0, -1.0],
                vec![-1.0, 0.0, 0.0],
                vec![0.0, -1.0, 0.0],
            ],
            &[-2.0, 0.0, 0.0, 0.0],
            vec![Cone::Nonneg(1), Cone::SecondOrder(3)],
            r2,
        ),
        // min t s.t. ‖(x − 1, y − 2)‖ ≤ t, x ≥ 3: 2 at (3, 2)
        case(
            "soc_with_bound",
            &[0.0, 0.0, 1.0],
            &[
                vec![-1.0, 0.0, 0.0],
                vec![0.0, 0.0, -1.0],
                vec![-1.0, 0.0, 0.0],
                vec![0.0, -1.0, 0.0],
            ],
            &[-3.0, 0.0, -1.0, -2.0],
            vec![Cone::Nonneg(1), Cone::SecondOrder(3)],
            2.0,
        ),
        // [[x0, x1], [x1, x2]] ⪰ 0 with x0 = 1, x2 = 2: min tr = 3
        case(
            "sdp_trace_fixed_diagonal",
            &[1.0, 0.0, 1.0],
            &[
                vec![1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![-1.0, 0.0, 0.0],
                vec![0.0, -r2, 0.0],
                vec![0.0, 0.0, -1.0],
            ],
            &[1.0, 2.0, 0.0, 0.0, 0.0],
            vec![Cone::Zero(2), Cone::Psd(2)],
            3.0,
        ),
    ];

    // max t s.t. M − tI ⪰ 0: λ_min(M) = 1 for M = [[2, 1], [1, 2]]
    let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
    let (g, h) = psd_rows(&[Matrix::identity(2)], &m);
    out.push(case(
        "sdp_min_eigenvalue",
        &[-1.0],
        &g,
        &h,
        vec![Cone::Psd(2)],
        -1.0,
    ));

    // min t s.t. tI − M ⪰ 0: λ_max(M) = 3 for M = [[1, 2], [2, 1]]
    let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
    let (g, h) = psd_rows(&[Matrix::identity(2)], &m.scale(-1.0));
    let g: Vec<Vec<f64>> = g
        .into_iter()
        .map(|r| r.into_iter().map(|v| -v).collect())
        .collect();
    out.push(case(
        "sdp_max_eigenvalue",
        &[1.0],
        &g,
        &h,
        vec![Cone::Psd(2)],
        3.0,
    ));

    // min ⟨C, X⟩ s.t. tr X = 1, X ⪰ 0: λ_min(C) = 2, C has eigenvalues {2, 4, 5}
    let cm = Matrix::from_rows(&[
        vec![3.0, 1.0, 0.0],
        vec![1.0, 3.0, 0.0],
        vec![0.0, 0.0, 5.0],
    ])
    .unwrap();
    let c = svec(&cm);
    let id = svec(&Matrix::identity(3));
    let mut g = vec![id.clone()];
    g.extend(neg_identity(6));
    let mut h = vec![1.0];
    h.extend(std::iter::repeat_n(0.0, 6));
    out.push(case(
        "sdp_trace_one",
        &c,
        &g,
        &h,
        vec![Cone::Zero(1), Cone::Psd(3)],
        2.0,
    ));
    out
}

/// `ACE ≤ 0` with `u_t` pinned to its reference and references not reachable by any `A`:
/// `N = 4 > n = 2`, so `A r_{t−1} = r_t − û_{t−1}` is overdetermined.
pub fn amopul2_infeasible() -> MopulProblem {
    let inst = gen_ideal_indexed(2, 4, 17, 0).unwrap();
    let refs = perturb_refs(&inst, NoiseSpec::new(0.0, 0.3).unwrap(), 17);
    let spec = inst.spec.with_references(refs).unwrap();
    model::preset_amopul2(spec, inst.a_hat.clone(), inst.u_hat.clone(), 0.0, vec![0.0]).unwrap()
}

fn dist_to_box(v: &[f64; 2], bound: f64) -> f64 {
    v.iter()
        .map(|x| (x.abs() - bound).max(0.0).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn clamp_box(v: &[f64; 2], bound: f64) -> [f64; 2] {
    [v[0].clamp(-bound, bound), v[1].clamp(-bound, bound)]
}

/// Level-minimisation instance with `n = N = 2`, `B = C = I`.
pub struct TinyM1 {
    pub x0: [f64; 2],
    pub r1: [f64; 2],
    pub r2: [f64; 2],
    pub a_bound: f64,
    pub u_bound: f64,
}

impl TinyM1 {
    pub fn from_spec(spec: &SystemSpec, a_bound: f64, u_bound: f64) -> Self {
        assert_eq!((spec.n(), spec.horizon()), (2, 2));
        let v = |x: &Vector| [x[0], x[1]];
        Self {
            x0: v(spec.x0()),
            r1: v(spec.reference(1)),
            r2: v(spec.reference(2)),
            a_bound,
            u_bound,
        }
    }

    fn apply(a: &[f64; 4], x: &[f64; 2]) -> [f64; 2] {
        [a[0] * x[0] + a[1] * x[1], a[2] * x[0] + a[3] * x[1]]
    }

    /// Nested error with `u_1` eliminated by projection onto its box.
    fn cost(&self, a: &[f64; 4], u0: &[f64; 2]) -> f64 {
        let ax = Self::apply(a, &self.x0);
        let y1 = [ax[0] + u0[0], ax[1] + u0[1]];
        let e1 = ((y1[0] - self.r1[0]).powi(2) + (y1[1] - self.r1[1]).powi(2)).sqrt();
        let ay = Self::apply(a, &y1);
        e1 + dist_to_box(&[self.r2[0] - ay[0], self.r2[1] - ay[1]], self.u_bound)
    }

    /// Convex in `u0` for fixed `A`: grid start, then compass search down to 1e-12.
    fn best_u0(&self, a: &[f64; 4], start: Option<[f64; 2]>) -> ([f64; 2], f64) {
        let b = self.u_bound;
        let mut best = start
            .map(|u| (u, self.cost(a, &u)))
            .unwrap_or(([0.0, 0.0], f64::INFINITY));
        let k = 10;
        for i in 0..=2 * k {
            for j in 0..=2 * k {
                let u = [
                    b * (i as f64 / k as f64 - 1.0),
                    b * (j as f64 / k as f64 - 1.0),
                ];
                let c = self.cost(a, &u);
                if c < best.1 {
                    best = (u, c);
                }
            }
        }
        let dirs = [
            [1.0, 0.0],
            [-1.0, 0.0],
            [0.0, 1.0],
            [0.0, -1.0],
            [1.0, 1.0],
            [1.0, -1.0],
            [-1.0, 1.0],
            [-1.0, -1.0],
        ];
        let mut step = b / k as f64;
        while step > 1e-12 {
            let mut moved = false;
            for d in &dirs {
                let u = clamp_box(&[best.0[0] + step * d[0], best.0[1] + step * d[1]], b);
                let c = self.cost(a, &u);
                if c < best.1 {
                    best = (u, c);
                    moved = true;
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        best
    }

    fn value(&self, a: &[f64; 4]) -> f64 {
        self.best_u0(a, None).1
    }

    /// Grid over `A` with step 0.05, then compass search from the best grid points and `seed`.
    pub fn solve(&self, seed: Option<(&Matrix, &[Vector])>) -> NestedOptimum {
        let b = self.a_bound;
        let k = (b / 0.05).round() as i64;
        let coord = |i: i64| (i as f64 * 0.05).clamp(-b, b);
        let mut grid: Vec<([f64; 4], f64)> = Vec::new();
        for i0 in -k..=k {
            for i1 in -k..=k {
                for i2 in -k..=k {
                    for i3 in -k..=k {
                        let a = [coord(i0), coord(i1), coord(i2), coord(i3)];
                        grid.push((a, self.coarse_value(&a)));
                    }
                }
            }
        }
        grid.sort_by(|x, y| x.1.total_cmp(&y.1));
        let mut starts: Vec<[f64; 4]> = grid.iter().take(6).map(|g| g.0).collect();
        if let Some((a, _)) = seed {
            starts.push([a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]]);
        }
        let mut best: Option<([f64; 4], f64)> = None;
        for s in starts {
            let r = self.refine_a(s);
            if best.is_none_or(|b| r.1 < b.1) {
                best = Some(r);
            }
        }
        let (a, _) = best.unwrap();
        let (u0, value) = self.best_u0(&a, None);
        let y1 = {
            let ax = Self::apply(&a, &self.x0);
            [ax[0] + u0[0], ax[1] + u0[1]]
        };
        let ay = Self::apply(&a, &y1);
        let u1 = clamp_box(&[self.r2[0] - ay[0], self.r2[1] - ay[1]], self.u_bound);
        NestedOptimum {
            value,
            a: Matrix::from_rows(&[vec![a[0], a[1]], vec![a[2], a[3]]]).unwrap(),
            u: vec![Vector::from(u0.to_vec()), Vector::from(u1.to_vec())],
        }
    }

    /// Cheap grid value: `u0` on a 0.1 lattice only.
    fn coarse_value(&self, a: &[f64; 4]) -> f64 {
        let b = self.u_bound;
        let k = 5;
        let mut best = f64::INFINITY;
        for i in 0..=2 * k {
            for j in 0..=2 * k {
                let u = [
                    b * (i as f64 / k as f64 - 1.0),
                    b * (j as f64 / k as f64 - 1.0),
                ];
                best = best.min(self.cost(a, &u));
            }
        }
        best
    }

    fn refine_a(&self, start: [f64; 4]) -> ([f64; 4], f64) {
        let b = self.a_bound;
        let mut a = start;
        let mut val = self.value(&a);
        let mut step = 0.025;
        while step > 1e-7 {
            let mut moved = false;
            for i in 0..4 {
                for s in [1.0, -1.0] {
                    let mut c = a;
                    c[i] = (c[i] + s * step).clamp(-b, b);
                    let v = self.value(&c);
                    if v < val {
                        a = c;
                        val = v;
                        moved = true;
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        (a, val)
    }
}

/// `(spec, problem)` for tiny instance `index`: `n = N = 2`, references `x̂_t + N(1, 1)`.
pub fn tiny_m1_instance(
    seed: u64,
    index: usize,
    a_bound: f64,
    u_bound: f64,
) -> (SystemSpec, MopulProblem) {
    let inst = gen_ideal_indexed(2, 2, seed, index).unwrap();
    let refs = perturb_refs(&inst, NoiseSpec::new(1.0, 1.0).unwrap(), seed);
    let spec = inst.spec.with_references(refs).unwrap();
    let problem = model::preset_amopul1_box(spec.clone(), a_bound, u_bound).unwrap();
    (spec, problem)
}

/// Random small level-minimisation or Frobenius-recovery problem (`n ≤ 5`, `N ≤ 5`).
pub fn random_small_problem(index: usize) -> MopulProblem {
    let n = 1 + index % 5;
    let horizon = 1 + (index / 5) % 5;
    let inst = gen_ideal_indexed(n, horizon, 1000 + index as u64, index).unwrap();
    let sigma = [0.0, 0.05, 0.3, 1.0][index % 4];
    let refs = perturb_refs(&inst, NoiseSpec::new(0.0, sigma).unwrap(), 99);
    let spec = inst.spec.with_references(refs).unwrap();
    if index % 2 == 0 {
        model::preset_amopul1_box(spec, 0.4, 0.5).unwrap()
    } else {
        let mut p = model::preset_amopul2(
            spec,
            inst.a_hat.clone(),
            inst.u_hat.clone(),
            0.5 + sigma * horizon as f64,
            vec![0.3],
        )
        .unwrap();
        p.constraints.a_box = Some(MatrixBox::symmetric(n, 1.0));
        p
    }
}

pub fn solve_form(problem: &MopulProblem, form: Form) -> mopul::experiments::Solved {
    solve_problem(problem, form, &SolverConfig::default()).unwrap()
}
