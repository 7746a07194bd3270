//! External-solver bridge: writes the model as MPS, runs a user-configured
//! solver process from a command template, parses the solution file and
//! reconstructs a typed [`Schedule`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::build::{names, PlantScenario};
use crate::milp::{MilpModel, ObjSense};
use crate::physics::OpState;
use crate::schedule::{Schedule, UnitStep, SCHEDULE_FORMAT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    FeasibleGap,
    Infeasible,
    TimeLimitNoSolution,
    SolverError,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::FeasibleGap)
    }
}

/// How to read the solver's solution file: prefixes for the header lines,
/// status-word mapping, and comment markers. Data-driven so other solver
/// wrappers can be supported from configuration alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionDialect {
    pub status_prefix: String,
    pub objective_prefix: String,
    pub gap_prefix: String,
    pub comment_prefixes: Vec<String>,
    /// Maps status words to outcomes; unmapped words are solver errors.
    pub status_map: Vec<(String, SolveStatus)>,
}

impl Default for SolutionDialect {
    fn default() -> Self {
        SolutionDialect {
            status_prefix: "=status=".to_string(),
            objective_prefix: "=objective=".to_string(),
            gap_prefix: "=gap=".to_string(),
            comment_prefixes: vec!["*".to_string(), "#".to_string()],
            status_map: vec![
                ("optimal".to_string(), SolveStatus::Optimal),
                ("feasible".to_string(), SolveStatus::FeasibleGap),
                ("infeasible".to_string(), SolveStatus::Infeasible),
                ("timeout".to_string(), SolveStatus::TimeLimitNoSolution),
                ("unbounded".to_string(), SolveStatus::SolverError),
                ("error".to_string(), SolveStatus::SolverError),
            ],
        }
    }
}

/// External solver invocation: a command template with `{model}`,
/// `{solution}`, `{timelimit}` and `{gap}` placeholders.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub command: String,
    /// Solver time limit [s].
    pub time_limit: f64,
    /// Relative MIP gap.
    pub mip_gap: f64,
    /// Where per-solve temp directories are created; system default if unset.
    pub work_dir: Option<PathBuf>,
    /// Keep temp files for debugging.
    pub keep_temps: bool,
    /// Emit a minimizing model with negated objective for solvers that
    /// ignore the sense comment; the reported objective is negated back.
    pub negate_objective: bool,
    /// Row feasibility tolerance applied to returned assignments,
    /// scaled by `1 + |rhs|`.
    pub feas_tol: f64,
    /// Heuristic effort hint substituted for `{effort}` in the template.
    pub heuristic_effort: f64,
    pub dialect: SolutionDialect,
}

impl SolverConfig {
    pub fn new(command: &str) -> Self {
        SolverConfig {
            command: command.to_string(),
            time_limit: 600.0,
            mip_gap: 0.01,
            work_dir: None,
            keep_temps: false,
            negate_objective: false,
            feas_tol: 1e-6,
            heuristic_effort: 0.3,
            dialect: SolutionDialect::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !self.command.contains("{model}") || !self.command.contains("{solution}") {
            return Err(SolveError::BadTemplate(self.command.clone()));
        }
        if !(self.time_limit > 0.0) {
            return Err(SolveError::BadConfig(format!(
                "time_limit must be positive, got {}",
                self.time_limit
            )));
        }
        if !(0.0..1.0).contains(&self.mip_gap) {
            return Err(SolveError::BadConfig(format!(
                "mip_gap must be in [0, 1), got {}",
                self.mip_gap
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    /// Variable assignment by name; present iff the status carries a solution.
    pub assignment: Option<BTreeMap<String, f64>>,
    pub gap: Option<f64>,
    pub wall_time_s: f64,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("solver command template must contain {{model}} and {{solution}}: `{0}`")]
    BadTemplate(String),
    #[error("bad solver config: {0}")]
    BadConfig(String),
    #[error("model invalid: {0}")]
    Model(#[from] crate::milp::ModelError),
    #[error("mps error: {0}")]
    Mps(#[from] crate::mps::MpsError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver process failed (exit {code:?}): {excerpt}")]
    ProcessFailed { code: Option<i32>, excerpt: String },
    #[error("solver produced no solution file at {0}")]
    NoSolutionFile(String),
    #[error("unparsable solver output at line {line}: {msg}")]
    BadSolution { line: usize, msg: String },
    #[error("solution is missing variable `{0}`")]
    MissingVariable(String),
    #[error("returned assignment violates the model: {0}")]
    InfeasibleAssignment(String),
    #[error("schedule extraction failed at unit {unit} step {step}: {reason}")]
    Extraction {
        unit: usize,
        step: usize,
        reason: String,
    },
}

/// Writes the model to a temp dir, runs the configured solver and parses
/// the solution. Returned assignments are feasibility-checked against every
/// model row before being handed to schedule extraction.
pub fn solve(model: &MilpModel, config: &SolverConfig) -> Result<SolveResult, SolveError> {
    solve_with_start(model, config, None)
}

/// [`solve`] with an optional starting incumbent, handed to the solver
/// through a `{warm}` file of `<name> <value>` lines when the command
/// template asks for one.
pub fn solve_with_start(
    model: &MilpModel,
    config: &SolverConfig,
    warm_start: Option<&BTreeMap<String, f64>>,
) -> Result<SolveResult, SolveError> {
    config.validate()?;
    model.validate()?;
    let dir = match &config.work_dir {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            tempfile::Builder::new().prefix("p2h-solve-").tempdir_in(d)?
        }
        None => tempfile::Builder::new().prefix("p2h-solve-").tempdir()?,
    };
    let dir_path = if config.keep_temps {
        let p = dir.keep();
        eprintln!("solver temp files kept at {}", p.display());
        p
    } else {
        dir.path().to_path_buf()
    };
    let model_path = dir_path.join("model.mps");
    let solution_path = dir_path.join("solution.txt");

    let negated;
    let to_write = if config.negate_objective {
        let mut m = model.clone();
        for (_, c) in &mut m.objective {
            *c = -*c;
        }
        m.obj_sense = match m.obj_sense {
            ObjSense::Maximize => ObjSense::Minimize,
            ObjSense::Minimize => ObjSense::Maximize,
        };
        negated = true;
        std::borrow::Cow::Owned(m)
    } else {
        negated = false;
        std::borrow::Cow::Borrowed(model)
    };
    crate::mps::write_mps(&to_write, &model_path)?;
    let warm_path = dir_path.join("warm.txt");
    if config.command.contains("{warm}") {
        let mut text = String::new();
        if let Some(start) = warm_start {
            for (name, value) in start {
                text.push_str(&format!("{name} {value:?}\n"));
            }
        }
        std::fs::write(&warm_path, text)?;
    }

    let cmdline = config
        .command
        .replace("{model}", &model_path.display().to_string())
        .replace("{solution}", &solution_path.display().to_string())
        .replace("{timelimit}", &format!("{}", config.time_limit))
        .replace("{gap}", &format!("{}", config.mip_gap))
        .replace("{warm}", &warm_path.display().to_string())
        .replace("{effort}", &format!("{}", config.heuristic_effort));
    let argv: Vec<&str> = cmdline.split_whitespace().collect();
    if argv.is_empty() {
        return Err(SolveError::BadTemplate(config.command.clone()));
    }

    let start = Instant::now();
    let output = run_with_deadline(
        argv[0],
        &argv[1..],
        Duration::from_secs_f64(config.time_limit * 2.0 + 120.0),
    )?;
    let wall = start.elapsed().as_secs_f64();
    if !output.status.success() {
        let excerpt = excerpt(&output.stderr, &output.stdout);
        return Err(SolveError::ProcessFailed {
            code: output.status.code(),
            excerpt,
        });
    }
    if !solution_path.exists() {
        return Err(SolveError::NoSolutionFile(
            solution_path.display().to_string(),
        ));
    }
    let text = std::fs::read_to_string(&solution_path)?;
    let mut result = parse_solution(&text, &config.dialect)?;
    result.wall_time_s = wall;
    if negated {
        result.objective = result.objective.map(|o| -o);
    }

    if result.status.has_solution() {
        let assignment = result
            .assignment
            .as_ref()
            .expect("statuses with solutions carry assignments");
        let index = model.var_index();
        let mut values = vec![0.0; model.vars.len()];
        for (name, &i) in &index {
            match assignment.get(*name) {
                Some(&v) => values[i] = v,
                None => return Err(SolveError::MissingVariable(name.to_string())),
            }
        }
        let violations = model.violations(&values, config.feas_tol);
        if !violations.is_empty() {
            return Err(SolveError::InfeasibleAssignment(violations.join("; ")));
        }
    }
    Ok(result)
}

fn excerpt(stderr: &[u8], stdout: &[u8]) -> String {
    let text = if stderr.is_empty() { stdout } else { stderr };
    let s = String::from_utf8_lossy(text);
    s.chars().take(800).collect()
}

fn run_with_deadline(
    program: &str,
    args: &[&str],
    deadline: Duration,
) -> Result<std::process::Output, SolveError> {
    use std::process::Stdio;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()?;
    let start = Instant::now();
    loop {
        if child.try_wait()?.is_some() {
            return Ok(child.wait_with_output()?);
        }
        if start.elapsed() > deadline {
            let _ = child.kill();
            let _ = child.wait();
            return Err(SolveError::ProcessFailed {
                code: None,
                excerpt: format!("killed after exceeding the {deadline:?} process deadline"),
            });
        }
        std::thread::sleep(Duration::from_millis(25));
    }
}

fn parse_solution(text: &str, dialect: &SolutionDialect) -> Result<SolveResult, SolveError> {
    let mut status: Option<SolveStatus> = None;
    let mut objective = None;
    let mut gap = None;
    let mut assignment = BTreeMap::new();
    'line: for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        for c in &dialect.comment_prefixes {
            if line.starts_with(c.as_str()) {
                continue 'line;
            }
        }
        let bad = |msg: String| SolveError::BadSolution {
            line: lineno + 1,
            msg,
        };
        if let Some(word) = line.strip_prefix(dialect.status_prefix.as_str()) {
            let word = word.trim();
            status = Some(
                dialect
                    .status_map
                    .iter()
                    .find(|(w, _)| w == word)
                    .map(|(_, s)| *s)
                    .ok_or_else(|| bad(format!("unknown status word `{word}`")))?,
            );
            continue;
        }
        if let Some(v) = line.strip_prefix(dialect.objective_prefix.as_str()) {
            objective = Some(
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("bad objective `{v}`")))?,
            );
            continue;
        }
        if let Some(v) = line.strip_prefix(dialect.gap_prefix.as_str()) {
            gap = Some(
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("bad gap `{v}`")))?,
            );
            continue;
        }
        let mut parts = line.split_whitespace();
        let (name, value) = (
            parts.next().ok_or_else(|| bad("empty line".to_string()))?,
            parts
                .next()
                .ok_or_else(|| bad(format!("missing value after `{line}`")))?,
        );
        if parts.next().is_some() {
            return Err(bad(format!("trailing tokens on `{line}`")));
        }
        let value = value
            .parse::<f64>()
            .map_err(|_| bad(format!("bad value `{value}`")))?;
        assignment.insert(name.to_string(), value);
    }
    let status = status.ok_or(SolveError::BadSolution {
        line: 0,
        msg: "no status line".to_string(),
    })?;
    Ok(SolveResult {
        status,
        objective: if status.has_solution() { objective } else { None },
        assignment: if status.has_solution() {
            Some(assignment)
        } else {
            None
        },
        gap: if status.has_solution() { gap } else { None },
        wall_time_s: 0.0,
    })
}

/// Reads a typed schedule out of a solved assignment.
///
/// State binaries are rounded at 0.5; a one-hot violation beyond 1e-4 is an
/// extraction error naming the unit and step. Startup/shutdown flags are
/// re-derived from the state sequence (the model only lower-bounds the
/// indicator variables, so degenerate optima may leave them spuriously set).
pub fn extract_schedule(
    result: &SolveResult,
    scenario: &PlantScenario,
) -> Result<Schedule, SolveError> {
    let assignment = result.assignment.as_ref().ok_or(SolveError::Extraction {
        unit: 0,
        step: 0,
        reason: format!("no assignment in a {:?} result", result.status),
    })?;
    let get = |name: &str, i: usize, k: usize| -> Result<f64, SolveError> {
        assignment
            .get(name)
            .copied()
            .ok_or_else(|| SolveError::Extraction {
                unit: i,
                step: k,
                reason: format!("variable `{name}` missing from the assignment"),
            })
    };
    let opt = |name: &str| -> Option<f64> { assignment.get(name).copied() };
    let mut units = Vec::with_capacity(scenario.fleet);
    for i in 0..scenario.fleet {
        let mut steps = Vec::with_capacity(scenario.horizon);
        let mut prev_idle = scenario.initial_states[i].op_state == OpState::Idle;
        for k in 0..scenario.horizon {
            let on = get(&names::unit_step(names::ON, i, k), i, k)?;
            let sb = get(&names::unit_step(names::STANDBY, i, k), i, k)?;
            let id = get(&names::unit_step(names::IDLE, i, k), i, k)?;
            if (on + sb + id - 1.0).abs() > 1e-4 {
                return Err(SolveError::Extraction {
                    unit: i,
                    step: k,
                    reason: format!("state binaries sum to {}, not 1", on + sb + id),
                });
            }
            let rounded = [on > 0.5, sb > 0.5, id > 0.5];
            let n_set = rounded.iter().filter(|&&b| b).count();
            if n_set != 1 {
                return Err(SolveError::Extraction {
                    unit: i,
                    step: k,
                    reason: format!("ambiguous state binaries on={on} standby={sb} idle={id}"),
                });
            }
            let state = if rounded[0] {
                OpState::Production
            } else if rounded[1] {
                OpState::Standby
            } else {
                OpState::Idle
            };
            let clamp = |x: f64| if x.abs() < 1e-9 { 0.0 } else { x };
            let p_ele = clamp(get(&names::unit_step(names::P_ELE, i, k), i, k)?);
            let p_heat = clamp(get(&names::unit_step(names::P_HEAT, i, k), i, k)?);
            let p_cool = clamp(get(&names::unit_step(names::P_COOL, i, k), i, k)?);
            let prod = clamp(get(&names::unit_step(names::PROD, i, k), i, k)?);
            if state != OpState::Production && prod > 1e-5 {
                return Err(SolveError::Extraction {
                    unit: i,
                    step: k,
                    reason: format!("production {prod} while {state}"),
                });
            }
            let idle_now = state == OpState::Idle;
            let startup = prev_idle && !idle_now;
            let shutdown = !prev_idle && idle_now;
            prev_idle = idle_now;
            steps.push(UnitStep {
                state,
                startup,
                shutdown,
                p_ele_mw: if state == OpState::Production { p_ele } else { 0.0 },
                p_heat_mw: p_heat,
                p_cool_mw: p_cool,
                prod_mol_s: if state == OpState::Production { prod } else { 0.0 },
                temp_k: opt(&names::unit_step(names::TEMP, i, k)),
                hto_mol: opt(&names::unit_step(names::HTO, i, k)),
            });
        }
        units.push(steps);
    }
    let schedule = Schedule {
        version: SCHEDULE_FORMAT_VERSION,
        scenario: scenario.name.clone(),
        fleet: scenario.fleet,
        horizon: scenario.horizon,
        step_s: scenario.step_s,
        units,
    };
    schedule.validate().map_err(|e| SolveError::Extraction {
        unit: 0,
        step: 0,
        reason: e.to_string(),
    })?;
    Ok(schedule)
}

/// Command template for the bundled scipy/HiGHS driver script.
pub fn bundled_solver_command(script_path: &Path) -> String {
    format!(
        "python3 {} {{model}} {{solution}} --time-limit {{timelimit}} --gap {{gap}} --warm {{warm}} --effort {{effort}}",
        script_path.display()
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dialect_parses_and_rejects() {
        let d = SolutionDialect::default();
        let ok = "=status= optimal\n=objective= 5.5\n=gap= 0.001\n* a comment\nx 1.0\ny -2.5e-3\n";
        let res = parse_solution(ok, &d).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert_eq!(res.objective, Some(5.5));
        let a = res.assignment.unwrap();
        assert_eq!(a["x"], 1.0);
        assert_eq!(a["y"], -2.5e-3);

        let infeasible = "=status= infeasible\n";
        let res = parse_solution(infeasible, &d).unwrap();
        assert_eq!(res.status, SolveStatus::Infeasible);
        assert!(res.assignment.is_none());
        assert!(res.objective.is_none());

        let bad = "=status= optimal\nx notanumber\n";
        assert!(matches!(
            parse_solution(bad, &d),
            Err(SolveError::BadSolution { line: 2, .. })
        ));
        let nostatus = "x 1.0\n";
        assert!(parse_solution(nostatus, &d).is_err());
    }

    #[test]
    fn template_validation() {
        assert!(SolverConfig::new("solver {model} {solution}").validate().is_ok());
        assert!(SolverConfig::new("solver {model}").validate().is_err());
        let mut c = SolverConfig::new("s {model} {solution}");
        c.mip_gap = 1.5;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::new("s {model} {solution}");
        c.time_limit = 0.0;
        assert!(c.validate().is_err());
    }
}
