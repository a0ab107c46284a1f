//! `isofair`: solve bandwidth allocations, run scaling-law checks, and sweep
//! scenario batteries from the command line.
//!
//! Exit codes: 0 success/consistent, 2 unusable input, 3 property violated or
//! expected pattern broken, 4 inconclusive (solver gave up somewhere).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use isofair_core::{
    check_access_scalability, check_capacity_scaling, check_flow_scalability, check_homogeneity,
    check_iso_elastic, classify_linear, has_local_traffic, is_connected, load_scenario, log_grid,
    report, rra_profile, solve_num, sweep_scenarios, AggregationMode, CheckReport, Error,
    NetworkUtilityProfile, SampleConfig, Scenario, SolveResult, SolverConfig, UtilitySpec,
};

#[derive(Parser)]
#[command(name = "isofair", version, about = "Bandwidth allocation and scale-law checks over link/route networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario; writes allocation.csv, links.csv, report.txt.
    Solve(CommonArgs),
    /// Run one property check; writes report.txt and witnesses.csv.
    Check {
        #[command(flatten)]
        common: CommonArgs,
        /// One of: iso-elasticity, homogeneity, flow-scalability,
        /// capacity-scaling, access-scalability.
        #[arg(long)]
        property: String,
    },
    /// Run every scenario in a directory against its expected pattern;
    /// writes summary.csv and report.txt.
    Sweep(CommonArgs),
    /// Print structural facts about a scenario's topology.
    Classify {
        /// Scenario file.
        input: PathBuf,
    },
    /// Estimate a route utility's relative risk aversion profile; writes
    /// report.txt and rra.csv.
    ProfileRra(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (a directory of scenarios for `sweep`).
    input: PathBuf,
    /// Directory for output artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override a knob as key=value; repeatable. See `--set help=1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Sampling seed; shorthand for --set seed=N.
    #[arg(long)]
    seed: Option<u64>,
}

struct Overrides {
    solver: SolverConfig,
    sample: SampleConfig,
    alpha: Option<f64>,
    mode: Option<AggregationMode>,
    route: Option<String>,
    grid_lo: f64,
    grid_hi: f64,
    grid_n: usize,
}

const SET_KEYS: &str = "primal_tol, kkt_tol, max_iters, step_c, interior_floor, \
n_pairs, a_grid, rate_lo, rate_hi, pop_lo, pop_hi, seed, gap_tol, \
alpha, mode, route, grid_lo, grid_hi, grid_n";

fn parse_overrides(sets: &[String], seed: Option<u64>) -> Result<Overrides, String> {
    let mut ov = Overrides {
        solver: SolverConfig::default(),
        sample: SampleConfig::default(),
        alpha: None,
        mode: None,
        route: None,
        grid_lo: 0.1,
        grid_hi: 10.0,
        grid_n: 33,
    };
    if let Some(s) = seed {
        ov.sample.seed = s;
    }
    for item in sets {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| format!("--set {item}: expected key=value"))?;
        let bad = |e: std::num::ParseFloatError| format!("--set {key}: {e}");
        match key {
            "primal_tol" => ov.solver.primal_tol = value.parse().map_err(bad)?,
            "kkt_tol" => ov.solver.kkt_tol = value.parse().map_err(bad)?,
            "max_iters" => {
                ov.solver.max_iters =
                    value.parse().map_err(|e| format!("--set max_iters: {e}"))?
            }
            "step_c" => ov.solver.step_c = value.parse().map_err(bad)?,
            "interior_floor" => ov.solver.interior_floor = value.parse().map_err(bad)?,
            "n_pairs" => {
                ov.sample.n_pairs = value.parse().map_err(|e| format!("--set n_pairs: {e}"))?
            }
            "a_grid" => {
                let grid: Result<Vec<f64>, _> = value.split(',').map(str::parse).collect();
                ov.sample.a_grid = grid.map_err(bad)?;
            }
            "rate_lo" => ov.sample.rate_range.0 = value.parse().map_err(bad)?,
            "rate_hi" => ov.sample.rate_range.1 = value.parse().map_err(bad)?,
            "pop_lo" => ov.sample.pop_range.0 = value.parse().map_err(bad)?,
            "pop_hi" => ov.sample.pop_range.1 = value.parse().map_err(bad)?,
            "seed" => ov.sample.seed = value.parse().map_err(|e| format!("--set seed: {e}"))?,
            "gap_tol" => ov.sample.gap_tol = value.parse().map_err(bad)?,
            "alpha" => ov.alpha = Some(value.parse().map_err(bad)?),
            "mode" => {
                ov.mode = Some(match value {
                    "average" => AggregationMode::Average,
                    "aggregate" => AggregationMode::Aggregate,
                    other => return Err(format!("--set mode: unknown mode '{other}'")),
                })
            }
            "route" => ov.route = Some(value.to_string()),
            "grid_lo" => ov.grid_lo = value.parse().map_err(bad)?,
            "grid_hi" => ov.grid_hi = value.parse().map_err(bad)?,
            "grid_n" => ov.grid_n = value.parse().map_err(|e| format!("--set grid_n: {e}"))?,
            other => return Err(format!("--set: unknown key '{other}'; valid keys: {SET_KEYS}")),
        }
    }
    Ok(ov)
}

/// Rewrites the exponent of every power-family route; other kinds keep their
/// own shape parameters and are reported untouched.
fn apply_profile_overrides(profile: &mut NetworkUtilityProfile, ov: &Overrides) {
    if let Some(alpha) = ov.alpha {
        let mut skipped = 0usize;
        for u in &mut profile.route_utilities {
            match u {
                UtilitySpec::AlphaFair { alpha: a, .. } => *a = alpha,
                _ => skipped += 1,
            }
        }
        if skipped > 0 {
            eprintln!("warning: --set alpha left {skipped} non-power route(s) unchanged");
        }
    }
    if let Some(mode) = ov.mode {
        profile.mode = mode;
    }
}

fn load(input: &Path) -> Result<Scenario, String> {
    let scenario = load_scenario(input).map_err(|e| e.to_string())?;
    for w in &scenario.warnings {
        eprintln!("warning: {w}");
    }
    scenario.profile.validate().map_err(|e| e.to_string())?;
    Ok(scenario)
}

fn write_artifacts(out: &Path, files: &[(&str, String)]) -> Result<(), String> {
    std::fs::create_dir_all(out)
        .map_err(|e| format!("cannot create output directory {}: {e}", out.display()))?;
    for (name, content) in files {
        report::write_atomic(&out.join(name), content).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn cmd_solve(args: &CommonArgs) -> Result<i32, String> {
    let ov = parse_overrides(&args.set, args.seed)?;
    let mut sc = load(&args.input)?;
    apply_profile_overrides(&mut sc.profile, &ov);
    let (result, code): (SolveResult, i32) =
        match solve_num(&sc.topology, &sc.profile, &sc.population, &ov.solver) {
            Ok(r) => (r, 0),
            Err(Error::NotConverged { iterations, residual, result }) => {
                eprintln!(
                    "warning: no convergence after {iterations} sweeps (residual {}); \
                     writing best iterate",
                    report::fmt_sig6(residual)
                );
                (*result, 4)
            }
            Err(e) => return Err(e.to_string()),
        };
    write_artifacts(
        &args.out,
        &[
            ("allocation.csv", report::allocation_csv(&sc.topology, &sc.population, &result)),
            ("links.csv", report::links_csv(&sc.topology, &result).map_err(|e| e.to_string())?),
            ("report.txt", report::solve_report(&result)),
        ],
    )?;
    println!("objective {}", report::fmt_sig6(result.objective));
    println!("kkt residual {}", report::fmt_sig6(result.kkt_residual));
    println!("converged {}", if result.converged { "yes" } else { "no" });
    Ok(code)
}

fn cmd_check(args: &CommonArgs, property: &str) -> Result<i32, String> {
    let ov = parse_overrides(&args.set, args.seed)?;
    let mut sc = load(&args.input)?;
    apply_profile_overrides(&mut sc.profile, &ov);
    ov.sample.validate().map_err(|e| e.to_string())?;
    let report_data: CheckReport = match property {
        "iso-elasticity" => check_iso_elastic(&sc.profile, &ov.sample),
        "homogeneity" => check_homogeneity(&sc.profile, &ov.sample),
        "access-scalability" => check_access_scalability(&sc.profile, &ov.sample),
        "flow-scalability" => {
            check_flow_scalability(&sc.topology, &sc.profile, &sc.population, &ov.sample, &ov.solver)
        }
        "capacity-scaling" => {
            check_capacity_scaling(&sc.topology, &sc.profile, &sc.population, &ov.sample, &ov.solver)
        }
        other => {
            return Err(format!(
                "unknown property '{other}'; expected iso-elasticity, homogeneity, \
                 flow-scalability, capacity-scaling, or access-scalability"
            ))
        }
    }
    .map_err(|e| e.to_string())?;
    write_artifacts(
        &args.out,
        &[
            ("report.txt", report::check_report_text(&report_data)),
            ("witnesses.csv", report::witnesses_csv(&report_data)),
        ],
    )?;
    println!(
        "{}: {} ({} violations, {} inconclusive, {} tested, {} skipped)",
        report_data.property.name(),
        match report_data.exit_code() {
            0 => "consistent",
            4 => "inconclusive",
            _ => "violated",
        },
        report_data.violations.len(),
        report_data.inconclusive.len(),
        report_data.pairs_tested,
        report_data.pairs_skipped,
    );
    Ok(report_data.exit_code())
}

fn cmd_sweep(args: &CommonArgs) -> Result<i32, String> {
    let ov = parse_overrides(&args.set, args.seed)?;
    ov.sample.validate().map_err(|e| e.to_string())?;
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&args.input)
        .map_err(|e| format!("cannot read scenario directory {}: {e}", args.input.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(format!("no .json scenarios in {}", args.input.display()));
    }
    let mut scenarios = Vec::with_capacity(paths.len());
    for path in &paths {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let mut sc =
            load_scenario(path).map_err(|e| format!("{}: {e}", path.display()))?;
        for w in &sc.warnings {
            eprintln!("warning: {}: {w}", path.display());
        }
        apply_profile_overrides(&mut sc.profile, &ov);
        scenarios.push((name, sc));
    }
    let summary =
        sweep_scenarios(&scenarios, &ov.sample, &ov.solver).map_err(|e| e.to_string())?;
    write_artifacts(
        &args.out,
        &[
            ("summary.csv", report::summary_csv(&summary)),
            ("report.txt", report::sweep_report_text(&summary)),
        ],
    )?;
    println!(
        "pattern {} over {} rows{}",
        if summary.pattern_ok { "holds" } else { "broken" },
        summary.rows.len(),
        if summary.inconclusive { " (with inconclusive rows)" } else { "" },
    );
    println!("{}", summary.note);
    Ok(summary.exit_code())
}

fn cmd_classify(input: &Path) -> Result<i32, String> {
    let sc = load(input)?;
    let yes_no = |b: bool| if b { "yes" } else { "no" };
    println!(
        "linear: {}, local-traffic: {}, connected: {}",
        yes_no(classify_linear(&sc.topology).is_some()),
        yes_no(has_local_traffic(&sc.topology)),
        yes_no(is_connected(&sc.topology)),
    );
    Ok(0)
}

fn cmd_profile_rra(args: &CommonArgs) -> Result<i32, String> {
    let ov = parse_overrides(&args.set, args.seed)?;
    let sc = load(&args.input)?;
    let idx = match &ov.route {
        Some(id) => sc
            .topology
            .routes()
            .iter()
            .position(|r| r.id == *id)
            .ok_or_else(|| format!("no route named '{id}'"))?,
        None => 0,
    };
    let utility = sc.profile.route_utilities[idx];
    let grid = log_grid(ov.grid_lo, ov.grid_hi, ov.grid_n);
    let profile = rra_profile(&utility, &grid).map_err(|e| e.to_string())?;
    write_artifacts(
        &args.out,
        &[
            ("report.txt", report::rra_report_text(&profile)),
            ("rra.csv", report::rra_csv(&profile)),
        ],
    )?;
    println!(
        "route {} estimated exponent {} (constant: {})",
        sc.topology.routes()[idx].id,
        report::fmt_sig6(profile.alpha_hat),
        if profile.is_constant { "yes" } else { "no" },
    );
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Check { common, property } => cmd_check(common, property),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Classify { input } => cmd_classify(input),
        Command::ProfileRra(args) => cmd_profile_rra(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
