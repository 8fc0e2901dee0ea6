use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use super::backend::{MilpBackend, SolveOptions, SolveResult, SolveStatus};
use super::lp_format::{format_number, lp_name, write_lp_file};
use super::ModelIR;
use crate::error::{Error, Result};

/// Writes the model as an LP file and runs an external solver on it.
///
/// The executable is driven with the HiGHS command-line conventions:
/// `--model_file`, `--options_file`, `--solution_file` and `--time_limit`,
/// and must leave a HiGHS-style raw solution file behind.
#[derive(Debug, Clone)]
pub struct LpFileBackend {
    pub program: PathBuf,
    /// Arguments placed before the generated ones (e.g. a script path).
    pub prefix_args: Vec<String>,
}

impl LpFileBackend {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        Self {
            program: program.into(),
            prefix_args: Vec::new(),
        }
    }

    pub fn with_prefix_args(mut self, args: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.prefix_args = args.into_iter().map(Into::into).collect();
        self
    }
}

impl MilpBackend for LpFileBackend {
    fn name(&self) -> &str {
        "lp-file"
    }

    fn solve_from(
        &self,
        model: &ModelIR,
        options: &SolveOptions,
        _start: Option<&[f64]>,
    ) -> Result<SolveResult> {
        model.validate()?;
        let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
        let model_path = dir.path().join("model.lp");
        let options_path = dir.path().join("highs.opt");
        let solution_path = dir.path().join("model.sol");
        write_lp_file(model, &model_path)?;
        let opts = format!(
            "mip_rel_gap = {}\nthreads = {}\nrandom_seed = 0\nmip_feasibility_tolerance = 1e-7\n\
             primal_feasibility_tolerance = 1e-8\noutput_flag = false\n",
            format_number(options.mip_gap_tol),
            options.threads.max(1)
        );
        fs::write(&options_path, opts).map_err(|e| Error::io(&options_path, e))?;

        let start = Instant::now();
        let output = Command::new(&self.program)
            .args(&self.prefix_args)
            .arg("--model_file")
            .arg(&model_path)
            .arg("--options_file")
            .arg(&options_path)
            .arg("--solution_file")
            .arg(&solution_path)
            .arg("--time_limit")
            .arg(format_number(options.time_limit))
            .output()
            .map_err(|e| Error::BackendUnavailable {
                backend: format!("{} ({})", self.name(), self.program.display()),
                message: e.to_string(),
            })?;
        let elapsed = start.elapsed().as_secs_f64();
        if !output.status.success() {
            let log = String::from_utf8_lossy(&output.stderr).to_string()
                + &String::from_utf8_lossy(&output.stdout);
            return Err(Error::NumericFailure(format!(
                "solver exited with {}: {}",
                output.status,
                tail(&log, 800)
            )));
        }
        let parsed = parse_solution_file(&solution_path)?;
        if !parsed.has_point() {
            return Ok(SolveResult::without_point(parsed.status, elapsed));
        }
        let point = model
            .variables()
            .iter()
            .map(|v| {
                parsed
                    .columns
                    .get(&lp_name(&v.name))
                    .copied()
                    .ok_or_else(|| Error::MissingVariable(v.name.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        SolveResult::from_point(
            model,
            parsed.status,
            point,
            parsed.objective,
            f64::NAN,
            elapsed,
        )
    }
}

fn tail(text: &str, max: usize) -> &str {
    let start = text.len().saturating_sub(max);
    let start = (start..text.len())
        .find(|&i| text.is_char_boundary(i))
        .unwrap_or(text.len());
    &text[start..]
}

#[derive(Debug)]
pub(crate) struct ParsedSolution {
    pub status: SolveStatus,
    pub feasible: bool,
    pub objective: f64,
    pub columns: HashMap<String, f64>,
}

impl ParsedSolution {
    fn has_point(&self) -> bool {
        self.feasible && matches!(self.status, SolveStatus::Optimal | SolveStatus::TimeLimit)
    }
}

fn map_status(text: &str) -> SolveStatus {
    let t = text.trim().to_ascii_lowercase();
    if t == "optimal" || t == "empty" {
        SolveStatus::Optimal
    } else if t.contains("time limit") {
        SolveStatus::TimeLimit
    } else if t == "infeasible" {
        SolveStatus::Infeasible
    } else if t.contains("unbounded") {
        SolveStatus::Unbounded
    } else {
        SolveStatus::NumericFailure
    }
}

/// Reads a HiGHS raw solution file.
pub(crate) fn parse_solution_file(path: &Path) -> Result<ParsedSolution> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_solution_text(&text)
}

pub(crate) fn parse_solution_text(text: &str) -> Result<ParsedSolution> {
    let bad = |msg: &str| Error::Parse {
        what: "solution file".into(),
        message: msg.to_string(),
    };
    let mut lines = text.lines().map(str::trim);
    let mut status = None;
    let mut feasible = false;
    let mut objective = f64::NAN;
    let mut columns = HashMap::new();
    while let Some(line) = lines.next() {
        if line == "Model status" {
            status = Some(map_status(lines.next().ok_or_else(|| bad("missing status"))?));
        } else if line == "# Primal solution values" {
            feasible = lines.next().map(|l| l == "Feasible").unwrap_or(false);
        } else if let Some(value) = line.strip_prefix("Objective ") {
            objective = value.trim().parse().map_err(|_| bad("bad objective"))?;
        } else if let Some(count) = line.strip_prefix("# Columns ") {
            let count: usize = count.trim().parse().map_err(|_| bad("bad column count"))?;
            for _ in 0..count {
                let entry = lines.next().ok_or_else(|| bad("truncated column list"))?;
                let (name, value) = entry.rsplit_once(' ').ok_or_else(|| bad("bad column line"))?;
                let value: f64 = value.parse().map_err(|_| bad("bad column value"))?;
                columns.insert(name.trim().to_string(), value);
            }
            break;
        }
    }
    Ok(ParsedSolution {
        status: status.ok_or_else(|| bad("missing `Model status`"))?,
        feasible,
        objective,
        columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_highs_raw_solution() {
        let text = "Model status\nOptimal\n\n# Primal solution values\nFeasible\n\
                    Objective 2.75\n# Columns 2\nx(1) 1\ny 0.5\n# Rows 1\nc1 1\n";
        let sol = parse_solution_text(text).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.feasible);
        assert_eq!(sol.objective, 2.75);
        assert_eq!(sol.columns["x(1)"], 1.0);
        assert_eq!(sol.columns["y"], 0.5);
    }

    #[test]
    fn infeasible_status_has_no_point() {
        let text = "Model status\nInfeasible\n\n# Primal solution values\nNone\n";
        let sol = parse_solution_text(text).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert!(!sol.has_point());
    }

    #[test]
    fn missing_program_is_backend_unavailable() {
        let mut m = ModelIR::new();
        m.continuous("x", 0.0, 1.0).unwrap();
        let backend = LpFileBackend::new("/nonexistent/solver-binary");
        assert!(matches!(
            backend.solve(&m, &SolveOptions::default()),
            Err(Error::BackendUnavailable { .. })
        ));
    }
}
