//! Command-line entry points: scheduling, simulation, impurity sweeps,
//! method comparison, MPS emission and schedule auditing.
//!
//! Exit codes: 0 success (audit clean where applicable), 2 audit findings,
//! 3 solver failure, 4 input errors.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::milp::build::{
    build_baseline_model, build_model, LinearizationOptions, PlantScenario,
};
use crate::physics::{self, ElectrolyzerParams, ElectrolyzerState, OpState, StepInputs};
use crate::scenario::{self, load_scenario};
use crate::schedule::Schedule;
use crate::solve::SolverConfig;
use crate::surface::default_envelope;
use crate::validate::{
    self, audit, simulate_schedule, AuditTolerances, ComparisonSummary, RunOutcome,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_INPUT: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "p2h-sched",
    about = "Process-aware scheduling for power-to-hydrogen plants",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Electrolyzer parameter file; the bundled reference unit when omitted.
    #[arg(long, env = "P2H_PARAMS")]
    params: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, env = "P2H_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Solver command template with {model} {solution} {timelimit} {gap}
    /// placeholders (optionally {warm} and {effort}).
    #[arg(long, env = "P2H_SOLVER_CMD")]
    solver_cmd: Option<String>,
    /// Solver time limit per solve [s].
    #[arg(long, env = "P2H_TIME_LIMIT", default_value_t = 600.0)]
    time_limit: f64,
    /// Relative MIP gap.
    #[arg(long, env = "P2H_GAP", default_value_t = 0.01)]
    gap: f64,
    /// Parallel scenario workers for batch comparison.
    #[arg(long, env = "P2H_JOBS", default_value_t = 1)]
    jobs: usize,
    /// Keep solver temp files.
    #[arg(long, env = "P2H_DEBUG_KEEP_TEMPS")]
    debug_keep_temps: bool,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let command = self.solver_cmd.clone().unwrap_or_else(|| {
            crate::solve::bundled_solver_command(&default_solver_script())
        });
        let mut config = SolverConfig::new(&command);
        config.time_limit = self.time_limit;
        config.mip_gap = self.gap;
        config.keep_temps = self.debug_keep_temps;
        config
    }
}

/// Location of the bundled solver driver script (repo layout).
pub fn default_solver_script() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../tools/solve_mps.py")
        .canonicalize()
        .unwrap_or_else(|_| {
            Path::new(env!("CARGO_MANIFEST_DIR")).join("../../tools/solve_mps.py")
        })
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Solve the process-aware schedule for a scenario, audit it and emit
    /// schedule, traces and audit artifacts.
    Schedule {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Scenario file (JSON).
        #[arg(long)]
        scenario: PathBuf,
        /// Solve the traditional constant-constraint model instead.
        #[arg(long)]
        baseline: bool,
        /// Nominal temperature for the baseline production surface [K].
        #[arg(long, default_value_t = 353.0)]
        nominal_temp: f64,
    },
    /// Forward-simulate one electrolyzer under a power reference CSV.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Power reference CSV with header `step,power_MW`.
        #[arg(long)]
        profile: PathBuf,
        /// Scheduling step length [s].
        #[arg(long, default_value_t = 900.0)]
        step_s: f64,
        /// Initial stack temperature [K].
        #[arg(long, default_value_t = 298.0)]
        initial_temp: f64,
        /// Initial impurity amount [mol].
        #[arg(long, default_value_t = 0.0)]
        initial_hto: f64,
        /// Integration substeps per scheduling step.
        #[arg(long, default_value_t = 1)]
        substeps: usize,
    },
    /// Sweep steady loads and write the impurity-ratio trajectories.
    HtoCurve {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated load fractions of rated production.
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.3,0.34,0.4")]
        loads: Vec<f64>,
        /// Simulated duration [h].
        #[arg(long, default_value_t = 24.0)]
        hours: f64,
        /// Starting impurity ratio; defaults to the shutdown limit so the
        /// sweep shows which loads push over and which pull under.
        #[arg(long)]
        initial_ratio: Option<f64>,
        /// Step length [s].
        #[arg(long, default_value_t = 900.0)]
        step_s: f64,
    },
    /// Solve proposed and traditional models on one or more scenarios and
    /// tabulate production and profit.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Scenario files; repeat for a batch.
        #[arg(long, required = true)]
        scenario: Vec<PathBuf>,
        #[arg(long, default_value_t = 353.0)]
        nominal_temp: f64,
    },
    /// Build the scheduling model and write it as MPS plus metadata.
    EmitMps {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        baseline: bool,
        #[arg(long, default_value_t = 353.0)]
        nominal_temp: f64,
    },
    /// Audit an existing schedule file against a scenario.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
    },
}

/// Parses arguments and runs a subcommand; returns the process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with successful exit
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code
        }
    }
}

struct CliError {
    exit_code: i32,
    message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError {
        exit_code: EXIT_INPUT,
        message: e.to_string(),
    }
}

fn solver_err(e: impl std::fmt::Display) -> CliError {
    CliError {
        exit_code: EXIT_SOLVER,
        message: e.to_string(),
    }
}

fn load_params_or_reference(common: &CommonArgs) -> Result<ElectrolyzerParams, CliError> {
    match &common.params {
        Some(path) => scenario::load_params(path).map_err(input_err),
        None => Ok(scenario::reference_params()),
    }
}

fn ensure_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(input_err)
}

fn write_artifact(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(input_err)
}

fn emit_run_artifacts(
    out: &Path,
    outcome: &RunOutcome,
    label: &str,
) -> Result<(), CliError> {
    outcome
        .schedule
        .save(&out.join(format!("{label}_schedule.json")))
        .map_err(input_err)?;
    for (i, unit) in outcome.trace.units.iter().enumerate() {
        write_artifact(
            &out.join(format!("{label}_unit{i}_trace.csv")),
            &validate::trace_to_csv(unit),
        )?;
    }
    write_artifact(
        &out.join(format!("{label}_audit.json")),
        &serde_json::to_string_pretty(&outcome.report).expect("report serializes"),
    )?;
    write_artifact(
        &out.join(format!("{label}_audit_findings.jsonl")),
        &validate::findings_to_jsonl(&outcome.report),
    )?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.cmd {
        Cmd::Schedule {
            common,
            solver,
            scenario: scenario_path,
            baseline,
            nominal_temp,
        } => {
            let params = load_params_or_reference(&common)?;
            let sc = load_scenario(&scenario_path).map_err(input_err)?;
            let hs = default_envelope(&params).map_err(input_err)?;
            let options = LinearizationOptions::derive(&params);
            let config = solver.config();
            let tol = AuditTolerances::default();
            ensure_out(&common.out)?;
            let outcome = if baseline {
                validate::run_baseline(&sc, &params, &hs, nominal_temp, &config, &tol)
            } else {
                validate::run_proposed(&sc, &params, &hs, &options, &config, &tol)
            }
            .map_err(solver_err)?;
            let label = if baseline { "baseline" } else { "proposed" };
            emit_run_artifacts(&common.out, &outcome, label)?;
            println!(
                "{}: status {:?}, objective {:?}, realized profit {:.2} $, audit {}",
                sc.name,
                outcome.status,
                outcome.objective,
                outcome.report.realized_profit_usd,
                if outcome.report.pass { "pass" } else { "FINDINGS" }
            );
            Ok(if outcome.report.pass {
                EXIT_OK
            } else {
                EXIT_FINDINGS
            })
        }
        Cmd::Simulate {
            common,
            profile,
            step_s,
            initial_temp,
            initial_hto,
            substeps,
        } => {
            let params = load_params_or_reference(&common)?;
            let series = scenario::load_pv_csv(&profile).map_err(input_err)?;
            let profile: Vec<(OpState, StepInputs)> = series
                .iter()
                .map(|&p| {
                    if p > 0.0 {
                        (
                            OpState::Production,
                            StepInputs {
                                electrolytic_power: p.min(params.rated_power),
                                ..Default::default()
                            },
                        )
                    } else {
                        (OpState::Idle, StepInputs::default())
                    }
                })
                .collect();
            let initial = ElectrolyzerState {
                temperature: initial_temp,
                hto_moles: initial_hto,
                op_state: profile
                    .first()
                    .map(|(s, _)| *s)
                    .unwrap_or(OpState::Idle),
            };
            let trace =
                physics::simulate_trajectory(&profile, &initial, &params, step_s, substeps)
                    .map_err(input_err)?;
            ensure_out(&common.out)?;
            write_artifact(&common.out.join("trace.csv"), &validate::trace_to_csv(&trace))?;
            println!(
                "simulated {} steps; total production {:.1} Nm3",
                trace.points.len(),
                trace.total_production_nm3(step_s)
            );
            Ok(EXIT_OK)
        }
        Cmd::HtoCurve {
            common,
            loads,
            hours,
            initial_ratio,
            step_s,
        } => {
            let params = load_params_or_reference(&common)?;
            for &l in &loads {
                if !(0.0..=1.0).contains(&l) {
                    return Err(input_err(format!("load fraction {l} outside [0, 1]")));
                }
            }
            let csv = hto_curve_csv(&params, &loads, hours, initial_ratio, step_s);
            ensure_out(&common.out)?;
            write_artifact(&common.out.join("hto_curve.csv"), &csv)?;
            println!("wrote hto_curve.csv for loads {loads:?} over {hours} h");
            Ok(EXIT_OK)
        }
        Cmd::Compare {
            common,
            solver,
            scenario: scenario_paths,
            nominal_temp,
        } => {
            let params = load_params_or_reference(&common)?;
            let scenarios: Vec<PlantScenario> = scenario_paths
                .iter()
                .map(|p| load_scenario(p))
                .collect::<Result<_, _>>()
                .map_err(input_err)?;
            let hs = default_envelope(&params).map_err(input_err)?;
            let options = LinearizationOptions::derive(&params);
            let config = solver.config();
            let tol = AuditTolerances::default();
            ensure_out(&common.out)?;
            let summary = compare_parallel(
                &scenarios,
                &params,
                &hs,
                &options,
                nominal_temp,
                &config,
                &tol,
                solver.jobs.max(1),
            );
            write_artifact(&common.out.join("comparison.csv"), &summary.to_csv())?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "compared {} scenario(s); mean profit delta {:?} %",
                scenarios.len(),
                summary.mean_delta_profit_pct
            );
            if summary.warnings.is_empty() {
                Ok(EXIT_OK)
            } else {
                Ok(EXIT_SOLVER)
            }
        }
        Cmd::EmitMps {
            common,
            scenario: scenario_path,
            baseline,
            nominal_temp,
        } => {
            let params = load_params_or_reference(&common)?;
            let sc = load_scenario(&scenario_path).map_err(input_err)?;
            let hs = default_envelope(&params).map_err(input_err)?;
            let options = LinearizationOptions::derive(&params);
            let model = if baseline {
                build_baseline_model(&sc, &params, &hs, nominal_temp)
            } else {
                build_model(&sc, &params, &hs, &options)
            }
            .map_err(input_err)?;
            ensure_out(&common.out)?;
            crate::mps::write_mps(&model, &common.out.join("model.mps")).map_err(input_err)?;
            write_artifact(
                &common.out.join("model_meta.json"),
                &serde_json::to_string_pretty(&model.metadata_json()).expect("meta serializes"),
            )?;
            println!(
                "wrote model.mps ({} vars, {} rows)",
                model.vars.len(),
                model.constraints.len()
            );
            Ok(EXIT_OK)
        }
        Cmd::Validate {
            common,
            scenario: scenario_path,
            schedule: schedule_path,
        } => {
            let params = load_params_or_reference(&common)?;
            let sc = load_scenario(&scenario_path).map_err(input_err)?;
            let schedule = Schedule::load(&schedule_path).map_err(input_err)?;
            let trace = simulate_schedule(&schedule, &sc, &params, 1).map_err(input_err)?;
            let report = audit(&schedule, &trace, &sc, &params, &AuditTolerances::default());
            ensure_out(&common.out)?;
            write_artifact(
                &common.out.join("audit.json"),
                &serde_json::to_string_pretty(&report).expect("report serializes"),
            )?;
            write_artifact(
                &common.out.join("audit_findings.jsonl"),
                &validate::findings_to_jsonl(&report),
            )?;
            println!(
                "audit {}: {} finding(s), realized profit {:.2} $",
                if report.pass { "pass" } else { "FINDINGS" },
                report.findings.len(),
                report.realized_profit_usd
            );
            Ok(if report.pass { EXIT_OK } else { EXIT_FINDINGS })
        }
    }
}

/// Impurity-ratio trajectories at fixed production loads, as a wide CSV.
///
/// Each load column holds the unit at `load * rated_production` with the
/// separator starting at `initial_ratio` (the shutdown limit by default).
pub fn hto_curve_csv(
    params: &ElectrolyzerParams,
    loads: &[f64],
    hours: f64,
    initial_ratio: Option<f64>,
    step_s: f64,
) -> String {
    let steps = ((hours * 3600.0 / step_s).round() as usize).max(1);
    let start_ratio = initial_ratio.unwrap_or(params.hto_limit);
    let rated = params.rated_production();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(loads.len());
    for &load in loads {
        let o2_rate = load * rated / 2.0;
        let mut n = start_ratio * params.o2_holdup;
        let mut col = Vec::with_capacity(steps + 1);
        col.push(physics::hto_ratio(n, params));
        for _ in 0..steps {
            let state = ElectrolyzerState {
                temperature: params.max_temp,
                hto_moles: n,
                op_state: OpState::Production,
            };
            n = physics::hto_step(&state, o2_rate, load > 0.0, params, step_s);
            col.push(physics::hto_ratio(n, params));
        }
        columns.push(col);
    }
    let mut out = String::from("time_h");
    for &load in loads {
        out.push_str(&format!(",ratio_{load}"));
    }
    out.push('\n');
    for k in 0..=steps {
        out.push_str(&format!("{:.4}", k as f64 * step_s / 3600.0));
        for col in &columns {
            out.push_str(&format!(",{:.8}", col[k]));
        }
        out.push('\n');
    }
    out
}

/// Runs the comparison over scenario chunks on `jobs` worker threads.
#[allow(clippy::too_many_arguments)]
fn compare_parallel(
    scenarios: &[PlantScenario],
    params: &ElectrolyzerParams,
    hs: &crate::surface::HalfspaceSet,
    options: &LinearizationOptions,
    nominal_temp: f64,
    config: &SolverConfig,
    tol: &AuditTolerances,
    jobs: usize,
) -> ComparisonSummary {
    if jobs <= 1 || scenarios.len() <= 1 {
        return validate::compare(scenarios, params, hs, options, nominal_temp, config, tol);
    }
    let chunk = scenarios.len().div_ceil(jobs);
    let summaries: Vec<ComparisonSummary> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    validate::compare(part, params, hs, options, nominal_temp, config, tol)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker")).collect()
    });
    // merge preserving scenario order and recompute the means
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut dp = Vec::new();
    let mut df = Vec::new();
    for s in summaries {
        for r in &s.rows {
            if r.method == "proposed" {
                if let Some(d) = r.delta_production_pct {
                    dp.push(d);
                }
                if let Some(d) = r.delta_profit_pct {
                    df.push(d);
                }
            }
        }
        rows.extend(s.rows);
        warnings.extend(s.warnings);
    }
    let mean = |v: &[f64]| {
        if v.is_empty() {
            None
        } else {
            Some(v.iter().sum::<f64>() / v.len() as f64)
        }
    };
    ComparisonSummary {
        rows,
        mean_delta_production_pct: mean(&dp),
        mean_delta_profit_pct: mean(&df),
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_args_exit_with_input_code() {
        assert_eq!(run_command(["p2h-sched", "definitely-not-a-command"]), EXIT_INPUT);
        assert_eq!(
            run_command(["p2h-sched", "schedule", "--scenario"]),
            EXIT_INPUT
        );
    }

    #[test]
    fn help_exits_cleanly() {
        assert_eq!(run_command(["p2h-sched", "--help"]), EXIT_OK);
    }

    #[test]
    fn hto_curve_discriminates_loads() {
        let params = scenario::reference_params();
        let csv = hto_curve_csv(&params, &[0.2, 0.34, 0.4], 24.0, None, 900.0);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "time_h,ratio_0.2,ratio_0.34,ratio_0.4");
        let last: Vec<f64> = lines
            .last()
            .unwrap()
            .split(',')
            .skip(1)
            .map(|v| v.parse().unwrap())
            .collect();
        assert!(last[0] > 0.02, "20% load must exceed the limit");
        assert!((last[1] - 0.02).abs() < 5e-4, "34% holds the limit");
        assert!(last[2] < 0.02, "40% pulls under the limit");
    }
}
