//! Golden problem files under `tests/golden/`: stable serialisation and frozen optimal values.
//! Regenerate with `GOLDEN_UPDATE=1 cargo test -p mopul-core --test golden`.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use mopul::experiments::{gen_ideal_indexed, perturb_refs, solve_problem, NoiseSpec};
use mopul::linalg::{Matrix, Vector};
use mopul::model::{
    preset_amopul1_box, preset_amopul2, preset_covid, preset_markov, preset_mpc, problem_from_json,
    problem_to_json, ConstraintSet, Form, MatrixBox, MopulProblem, VectorBox,
};
use mopul::solver::{SolverConfig, Status};
use mopul::system::SystemSpec;

const OBJECTIVE_REL: f64 = 1e-6;

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("golden")
}

fn noisy_spec(
    n: usize,
    horizon: usize,
    seed: u64,
    sigma: f64,
) -> (SystemSpec, mopul::experiments::IdealInstance) {
    let inst = gen_ideal_indexed(n, horizon, seed, 0).unwrap();
    let refs = perturb_refs(&inst, NoiseSpec::new(0.0, sigma).unwrap(), seed);
    (inst.spec.with_references(refs).unwrap(), inst)
}

fn cases() -> Vec<(&'static str, MopulProblem)> {
    let (spec, _) = noisy_spec(3, 3, 7, 0.5);
    let amopul1 = preset_amopul1_box(spec, 0.2, 0.1).unwrap();

    let (spec, inst) = noisy_spec(3, 4, 8, 0.3);
    let mut amopul2 = preset_amopul2(
        spec,
        inst.a_hat.clone(),
        inst.u_hat.clone(),
        0.6,
        vec![0.25],
    )
    .unwrap();
    amopul2.constraints.a_box = Some(MatrixBox::symmetric(3, 1.0));

    let (spec, _) = noisy_spec(2, 4, 9, 0.1);
    let mpc = preset_mpc(
        spec,
        0.5,
        ConstraintSet {
            a_box: Some(MatrixBox::symmetric(2, 0.6)),
            u_box: Some(VectorBox::symmetric(2, 0.5)),
            u_rate: Some(VectorBox::symmetric(2, 0.2)),
            ..ConstraintSet::default()
        },
    )
    .unwrap();

    let dist = |v: &[f64]| Vector::new(v.to_vec()).unwrap();
    let markov = preset_markov(
        3,
        1.5,
        dist(&[0.5, 0.3, 0.2]),
        vec![
            dist(&[0.45, 0.33, 0.22]),
            dist(&[0.41, 0.35, 0.24]),
            dist(&[0.40, 0.34, 0.26]),
        ],
    )
    .unwrap();

    let x0 = dist(&[0.97, 0.02, 0.01, 0.0]);
    let refs = vec![
        dist(&[0.95, 0.03, 0.015, 0.005]),
        dist(&[0.93, 0.04, 0.02, 0.01]),
        dist(&[0.90, 0.05, 0.03, 0.02]),
    ];
    let covid = preset_covid(
        SystemSpec::identity(x0, refs).unwrap(),
        ConstraintSet {
            a_box: Some(MatrixBox {
                lower: Matrix::zeros(4, 4),
                upper: Matrix::from_fn(4, 4, |_, _| 1.0),
            }),
            u_box: Some(VectorBox::symmetric(4, 0.001)),
            ..ConstraintSet::default()
        },
    )
    .unwrap();

    vec![
        ("amopul1_box", amopul1),
        ("amopul2", amopul2),
        ("mpc", mpc),
        ("markov", markov),
        ("covid", covid),
    ]
}

fn objective(problem: &MopulProblem, form: Form) -> f64 {
    let solved = solve_problem(problem, form, &SolverConfig::default()).unwrap();
    assert_eq!(solved.solution.status, Status::Optimal);
    solved.solution.objective
}

#[test]
fn golden_problems_round_trip_and_solve_to_frozen_values() {
    let update = std::env::var_os("GOLDEN_UPDATE").is_some();
    let values_path = dir().join("objectives.json");
    let mut frozen: BTreeMap<String, f64> = if update {
        BTreeMap::new()
    } else {
        serde_json::from_str(&fs::read_to_string(&values_path).unwrap()).unwrap()
    };
    for (name, built) in cases() {
        let path = dir().join(format!("{name}.json"));
        let text = problem_to_json(&built).unwrap() + "\n";
        if update {
            fs::create_dir_all(dir()).unwrap();
            fs::write(&path, &text).unwrap();
            frozen.insert(name.to_string(), objective(&built, Form::Soc));
        }
        let on_disk = fs::read_to_string(&path).unwrap();
        assert_eq!(
            on_disk, text,
            "{name}: builder output drifted from the golden file"
        );
        let loaded = problem_from_json(&on_disk).unwrap();
        assert_eq!(
            problem_to_json(&loaded).unwrap() + "\n",
            on_disk,
            "{name}: re-serialisation differs"
        );

        let expected = frozen[name];
        for form in [Form::Soc, Form::Lmi] {
            let v = objective(&loaded, form);
            assert!(
                (v - expected).abs() <= OBJECTIVE_REL * expected.abs().max(1.0),
                "{name} {form:?}: {v} vs {expected}"
            );
        }
    }
    if update {
        fs::write(
            &values_path,
            serde_json::to_string_pretty(&frozen).unwrap() + "\n",
        )
        .unwrap();
    }
}
