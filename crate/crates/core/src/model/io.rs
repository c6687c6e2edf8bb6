use std::fs;
use std::path::Path;

use super::MopulProblem;
use crate::error::{Error, Result};

/// Parses and validates a problem. Syntax errors carry line and column.
pub fn problem_from_json(text: &str) -> Result<MopulProblem> {
    let problem: MopulProblem = serde_json::from_str(text)?;
    problem.validate()?;
    Ok(problem)
}

pub fn problem_to_json(problem: &MopulProblem) -> Result<String> {
    Ok(serde_json::to_string_pretty(problem)?)
}

pub fn load_problem(path: &Path) -> Result<MopulProblem> {
    let text = fs::read_to_string(path)?;
    problem_from_json(&text).map_err(|e| match e {
        Error::Json(j) => Error::InvalidProblem(format!("{}: {j}", path.display())),
        other => other,
    })
}

pub fn save_problem(problem: &MopulProblem, path: &Path) -> Result<()> {
    let mut text = problem_to_json(problem)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Matrix, Vector};
    use crate::model::{preset_amopul2, preset_markov};
    use crate::system::SystemSpec;

    #[test]
    fn round_trip_preserves_problem() {
        let spec = SystemSpec::identity(
            Vector::new(vec![0.1, 0.2]).unwrap(),
            vec![Vector::new(vec![0.3, -0.1]).unwrap(); 2],
        )
        .unwrap();
        let p = preset_amopul2(
            spec,
            Matrix::identity(2),
            vec![Vector::zeros(2); 2],
            3.0,
            vec![1.5],
        )
        .unwrap();
        let text = problem_to_json(&p).unwrap();
        let back = problem_from_json(&text).unwrap();
        assert_eq!(problem_to_json(&back).unwrap(), text);

        let m = preset_markov(
            2,
            1.5,
            Vector::new(vec![0.5, 0.5]).unwrap(),
            vec![Vector::new(vec![0.4, 0.6]).unwrap()],
        )
        .unwrap();
        let text = problem_to_json(&m).unwrap();
        assert_eq!(
            problem_to_json(&problem_from_json(&text).unwrap()).unwrap(),
            text
        );
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = problem_from_json("{\n  \"system\": [1, 2,\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn invalid_content_is_rejected() {
        let text = r#"{"system": {"b": [[1.0]], "c": [[0.0]], "x0": [1.0], "references": [[1.0]]},
                       "objective": {"lambda1": 0, "lambda2": 0, "lambda3": 1, "f3": "identity"}}"#;
        assert!(problem_from_json(text).is_err());
    }
}
