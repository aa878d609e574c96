//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error reported by the argument parser
//! (help and version exit 0), 2 configuration error, 3 I/O or file format
//! error, 4 simulation error (grid cap, empty aggregate), 5 ELP compliance
//! check failed.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Result, RfpError};
use crate::model::ComparisonSpec;
use crate::output::{read_json_file, render_reports, write_sidecar, PairFile, ReportFormat};
use crate::policy::{verify_elp_compliance, ComplianceReport, PolicyKind};
use crate::scenario::{
    preset_by_name, run_spec, sweep_dmin2, sweep_neighbor_levels, ComparisonReport, Method,
    PresetOverride, ScenarioPreset, SimSettings, SCHEMA_VERSION,
};
use crate::simulator::{build_grid_capped, distance_profile, export_heatmap, DEFAULT_MAX_PIXELS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_SIMULATION: i32 = 4;
pub const EXIT_NONCOMPLIANT: i32 = 5;

pub fn exit_code(err: &RfpError) -> i32 {
    match err {
        RfpError::Config(_) | RfpError::Domain(_) | RfpError::Json(_) => EXIT_CONFIG,
        RfpError::Io { .. } | RfpError::Format { .. } => EXIT_IO,
        RfpError::GridTooLarge { .. } | RfpError::EmptyAggregate { .. } => EXIT_SIMULATION,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rfp",
    version,
    about = "Radio-frequency pollution of cellular deployments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Model,
    Simulation,
    Both,
}

impl MethodArg {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::Model => vec![Method::Model],
            MethodArg::Simulation => vec![Method::Simulation],
            MethodArg::Both => vec![Method::Model, Method::Simulation],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

impl Side {
    fn index(self) -> usize {
        match self {
            Side::One => 0,
            Side::Two => 1,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Scenario id, S1..S5. Overrides `scenario` in the config file.
    #[arg(long)]
    pub id: Option<String>,
    /// JSON file with preset overrides.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PolicyKind::Msp)]
    pub policy: PolicyKind,
    /// First-ring neighbor count, 0 or 6.
    #[arg(long, default_value_t = 0)]
    pub neighbors: u32,
    /// Overrides `d_min2_m` in the config file.
    #[arg(long)]
    pub d_min2: Option<f64>,
    /// Overrides `epsilon_m` in the config file.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 1.0)]
    pub pixel_size: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_PIXELS)]
    pub max_pixels: u64,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare the two deployments of a reference scenario.
    Scenario {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value_t = MethodArg::Model)]
        method: MethodArg,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Compare an arbitrary deployment pair from a JSON file.
    Compare {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Model)]
        method: MethodArg,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Simulate a scenario on the pixel grid, optionally writing distance profiles.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Neighbor rings to simulate (0, 1 or 2); follows --neighbors when absent.
        #[arg(long)]
        levels: Option<u8>,
        /// Directory receiving profile_dep1.csv and profile_dep2.csv.
        #[arg(long)]
        profile_dir: Option<PathBuf>,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sweep deployment (2)'s exclusion radius or the simulated neighbor rings.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated d_min2 values in meters.
        #[arg(
            long,
            value_delimiter = ',',
            conflicts_with = "levels",
            required_unless_present = "levels"
        )]
        dmin2: Vec<f64>,
        /// Comma-separated neighbor ring counts (simulation only).
        #[arg(long, value_delimiter = ',')]
        levels: Vec<u8>,
        #[arg(long, value_enum, default_value_t = MethodArg::Model)]
        method: MethodArg,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Write the RFP raster of one deployment as CSV in dBm.
    Heatmap {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value_t = Side::One)]
        deployment: Side,
        #[arg(long)]
        levels: Option<u8>,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the summed power density of all sites against the ELP limit.
    VerifyElp {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Neighbor rings included in the check (default 1).
        #[arg(long)]
        levels: Option<u8>,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Fully resolved invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub task: Task,
    pub sim: SimSettings,
    pub out: Option<PathBuf>,
    pub format: ReportFormat,
    pub command_line: String,
}

#[derive(Debug, Clone)]
pub enum Task {
    Compare {
        label: String,
        spec: ComparisonSpec,
        methods: Vec<Method>,
    },
    Simulate {
        label: String,
        spec: ComparisonSpec,
        profile_dir: Option<PathBuf>,
    },
    SweepDmin2 {
        preset: ScenarioPreset,
        policy: PolicyKind,
        n_i: u32,
        values: Vec<f64>,
        methods: Vec<Method>,
    },
    SweepLevels {
        preset: ScenarioPreset,
        policy: PolicyKind,
        levels: Vec<u8>,
    },
    Heatmap {
        spec: ComparisonSpec,
        side: usize,
        levels: u8,
    },
    VerifyElp {
        label: String,
        spec: ComparisonSpec,
        levels: u8,
    },
}

/// Merges preset, config file and flags; flags win over the file, the file
/// over the preset.
pub fn resolve_preset(args: &ScenarioArgs) -> Result<ScenarioPreset> {
    let file: PresetOverride = match &args.config {
        Some(path) => read_json_file(path)?,
        None => PresetOverride::default(),
    };
    if let Some(v) = file.schema_version {
        if v != SCHEMA_VERSION {
            return Err(RfpError::Config(format!(
                "config schema_version {v} is not supported (expected {SCHEMA_VERSION})"
            )));
        }
    }
    let id = args
        .id
        .as_deref()
        .or(file.scenario.as_deref())
        .ok_or_else(|| {
            RfpError::Config("no scenario given: pass --id or set \"scenario\" in --config".into())
        })?;
    let mut merged = file.clone();
    if args.d_min2.is_some() {
        merged.d_min2_m = args.d_min2;
        merged.d_fx2_m = None;
    }
    if args.epsilon.is_some() {
        merged.epsilon_m = args.epsilon;
    }
    Ok(preset_by_name(id)?.apply(&merged))
}

fn check_levels_arg(levels: Option<u8>, n_i: u32) -> Result<u8> {
    let l = levels.unwrap_or(if n_i > 0 { 1 } else { 0 });
    crate::geometry::check_levels(l)?;
    Ok(l)
}

fn sim_settings(sim: &SimArgs, levels: Option<u8>) -> SimSettings {
    SimSettings {
        pixel_size: sim.pixel_size,
        max_pixels: sim.max_pixels,
        neighbor_levels: levels,
    }
}

pub fn parse_config<I, T>(argv: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&argv).map_err(|e| RfpError::Config(e.to_string()))?;
    resolve(cli, &argv)
}

fn resolve(cli: Cli, argv: &[OsString]) -> Result<RunConfig> {
    let command_line = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ");
    let (task, sim, out, format) = match cli.command {
        Command::Scenario {
            scenario,
            method,
            sim,
            out,
        } => {
            let p = resolve_preset(&scenario)?;
            let spec = p.comparison(scenario.policy, scenario.neighbors)?;
            let task = Task::Compare {
                label: p.id.to_string(),
                spec,
                methods: method.methods(),
            };
            (task, sim_settings(&sim, None), out.out, out.format)
        }
        Command::Compare {
            pair,
            method,
            sim,
            out,
        } => {
            let file: PairFile = read_json_file(&pair)?;
            let task = Task::Compare {
                label: file.label.clone().unwrap_or_else(|| "custom".into()),
                spec: file.spec()?,
                methods: method.methods(),
            };
            (task, sim_settings(&sim, None), out.out, out.format)
        }
        Command::Simulate {
            scenario,
            levels,
            profile_dir,
            sim,
            out,
        } => {
            let p = resolve_preset(&scenario)?;
            let levels = check_levels_arg(levels, scenario.neighbors)?;
            let task = Task::Simulate {
                label: p.id.to_string(),
                spec: p.comparison(scenario.policy, scenario.neighbors)?,
                profile_dir,
            };
            (task, sim_settings(&sim, Some(levels)), out.out, out.format)
        }
        Command::Sweep {
            scenario,
            dmin2,
            levels,
            method,
            sim,
            out,
        } => {
            let p = resolve_preset(&scenario)?;
            let task = if levels.is_empty() {
                p.comparison(scenario.policy, scenario.neighbors)?;
                Task::SweepDmin2 {
                    preset: p,
                    policy: scenario.policy,
                    n_i: scenario.neighbors,
                    values: dmin2,
                    methods: method.methods(),
                }
            } else {
                if method == MethodArg::Both {
                    return Err(RfpError::Config(
                        "--levels sweeps are simulation-only; drop --method both".into(),
                    ));
                }
                for &l in &levels {
                    crate::geometry::check_levels(l)?;
                }
                Task::SweepLevels {
                    preset: p,
                    policy: scenario.policy,
                    levels,
                }
            };
            (task, sim_settings(&sim, None), out.out, out.format)
        }
        Command::Heatmap {
            scenario,
            deployment,
            levels,
            sim,
            out,
        } => {
            let p = resolve_preset(&scenario)?;
            let levels = check_levels_arg(levels, scenario.neighbors)?;
            let task = Task::Heatmap {
                spec: p.comparison(scenario.policy, scenario.neighbors)?,
                side: deployment.index(),
                levels,
            };
            (
                task,
                sim_settings(&sim, Some(levels)),
                Some(out),
                ReportFormat::Csv,
            )
        }
        Command::VerifyElp {
            scenario,
            levels,
            sim,
            out,
        } => {
            if scenario.policy != PolicyKind::Elp {
                return Err(RfpError::Config(format!(
                    "verify-elp needs --policy elp, got {}",
                    scenario.policy
                )));
            }
            let p = resolve_preset(&scenario)?;
            let levels = levels.unwrap_or(1);
            crate::geometry::check_levels(levels)?;
            let task = Task::VerifyElp {
                label: p.id.to_string(),
                spec: p.comparison(PolicyKind::Elp, scenario.neighbors)?,
                levels,
            };
            (
                task,
                sim_settings(&sim, Some(levels)),
                out,
                ReportFormat::Json,
            )
        }
    };
    Ok(RunConfig {
        task,
        sim,
        out,
        format,
        command_line,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplianceEntry {
    pub scenario: String,
    pub deployment: usize,
    pub neighbor_levels: u8,
    #[serde(flatten)]
    pub report: ComplianceReport,
    pub schema_version: u32,
}

/// What a run produced.
#[derive(Debug)]
pub enum Outcome {
    Reports(Vec<ComparisonReport>),
    Heatmap(PathBuf),
    Compliance(Vec<ComplianceEntry>),
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    let sim = &cfg.sim;
    Ok(match &cfg.task {
        Task::Compare {
            label,
            spec,
            methods,
        } => Outcome::Reports(
            methods
                .iter()
                .map(|&m| run_spec(label, spec, m, sim))
                .collect::<Result<_>>()?,
        ),
        Task::Simulate {
            label,
            spec,
            profile_dir,
        } => {
            let report = run_spec(label, spec, Method::Simulation, sim)?;
            if let Some(dir) = profile_dir {
                std::fs::create_dir_all(dir).map_err(|e| RfpError::io(dir, e))?;
                let levels = report.neighbor_levels;
                for (k, dep) in [spec.dep1(), spec.dep2()].into_iter().enumerate() {
                    let grid = build_grid_capped(dep, levels, sim.pixel_size, sim.max_pixels)?;
                    let path = dir.join(format!("profile_dep{}.csv", k + 1));
                    let file = std::fs::File::create(&path).map_err(|e| RfpError::io(&path, e))?;
                    distance_profile(&grid).write_csv(file)?;
                }
            }
            Outcome::Reports(vec![report])
        }
        Task::SweepDmin2 {
            preset,
            policy,
            n_i,
            values,
            methods,
        } => {
            let mut all = Vec::new();
            for &m in methods {
                all.extend(sweep_dmin2(preset, *policy, values, *n_i, m, sim)?);
            }
            Outcome::Reports(all)
        }
        Task::SweepLevels {
            preset,
            policy,
            levels,
        } => Outcome::Reports(sweep_neighbor_levels(preset, *policy, levels, sim)?),
        Task::Heatmap { spec, side, levels } => {
            let dep = if *side == 0 { spec.dep1() } else { spec.dep2() };
            let grid = build_grid_capped(dep, *levels, sim.pixel_size, sim.max_pixels)?;
            let path = cfg.out.clone().expect("heatmap output path");
            export_heatmap(&grid, &path)?;
            Outcome::Heatmap(path)
        }
        Task::VerifyElp {
            label,
            spec,
            levels,
        } => {
            let mut entries = Vec::new();
            for (k, dep) in [spec.dep1(), spec.dep2()].into_iter().enumerate() {
                let grid = build_grid_capped(dep, *levels, sim.pixel_size, sim.max_pixels)?;
                entries.push(ComplianceEntry {
                    scenario: label.clone(),
                    deployment: k + 1,
                    neighbor_levels: *levels,
                    report: verify_elp_compliance(dep, &grid)?,
                    schema_version: SCHEMA_VERSION,
                });
            }
            Outcome::Compliance(entries)
        }
    })
}

fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| RfpError::io(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| RfpError::io("<stdout>", e)),
    }
}

/// Writes the outcome and returns the process exit code.
pub fn deliver(cfg: &RunConfig, outcome: &Outcome) -> Result<i32> {
    let out = cfg.out.as_deref();
    match outcome {
        Outcome::Reports(reports) => {
            let text = render_reports(reports, cfg.format)?;
            write_text(out, &text)?;
            if let Some(path) = out {
                let fmt = match cfg.format {
                    ReportFormat::Json => "json",
                    ReportFormat::Csv => "csv",
                };
                write_sidecar(
                    path,
                    &cfg.command_line,
                    fmt,
                    reports.iter().map(|r| r.elapsed_s).collect(),
                )?;
            }
            Ok(EXIT_OK)
        }
        Outcome::Heatmap(path) => {
            write_sidecar(path, &cfg.command_line, "heatmap-csv", Vec::new())?;
            Ok(EXIT_OK)
        }
        Outcome::Compliance(entries) => {
            let mut text = serde_json::to_string_pretty(entries)?;
            text.push('\n');
            write_text(out, &text)?;
            if let Some(path) = out {
                write_sidecar(path, &cfg.command_line, "json", Vec::new())?;
            }
            let passed = entries.iter().all(|e| e.report.passed);
            Ok(if passed { EXIT_OK } else { EXIT_NONCOMPLIANT })
        }
    }
}

/// Entry point used by the binary.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = resolve(cli, &argv).and_then(|cfg| {
        let outcome = execute(&cfg)?;
        deliver(&cfg, &outcome)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_flags_map_to_tasks() {
        let cfg = parse_config([
            "rfp",
            "scenario",
            "--id",
            "S5",
            "--policy",
            "msp",
            "--neighbors",
            "6",
            "--method",
            "both",
        ])
        .unwrap();
        match cfg.task {
            Task::Compare {
                label,
                spec,
                methods,
            } => {
                assert_eq!(label, "S5");
                assert_eq!(spec.dep1().n_i(), 6);
                assert_eq!(methods, vec![Method::Model, Method::Simulation]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_scenario() {
        let err = parse_config(["rfp", "scenario", "--id", "S9"]).unwrap_err();
        assert!(err.to_string().contains("unknown scenario"));
        assert_eq!(exit_code(&err), EXIT_CONFIG);
    }

    #[test]
    fn precedence_flag_over_file_over_preset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("o.json");
        std::fs::write(
            &path,
            r#"{"scenario": "S5", "d_min2_m": 5, "epsilon_m": 0.5}"#,
        )
        .unwrap();
        let p = path.to_str().unwrap();

        let cfg = parse_config(["rfp", "scenario", "--config", p]).unwrap();
        let Task::Compare { spec, label, .. } = cfg.task else {
            panic!()
        };
        assert_eq!(label, "S5");
        assert_eq!(
            (spec.dep2().d_min(), spec.d_fx2(), spec.epsilon()),
            (5.0, 6.0, 0.5)
        );
        assert_eq!(spec.dep1().d_min(), 15.0);

        let cfg = parse_config([
            "rfp",
            "scenario",
            "--config",
            p,
            "--d-min2",
            "10",
            "--epsilon",
            "1",
            "--id",
            "S2",
        ])
        .unwrap();
        let Task::Compare { spec, label, .. } = cfg.task else {
            panic!()
        };
        assert_eq!(label, "S2");
        assert_eq!(
            (spec.dep2().d_min(), spec.d_fx2(), spec.epsilon()),
            (10.0, 11.0, 1.0)
        );
        assert_eq!(spec.dep2().d_max(), 100.0);
    }

    #[test]
    fn malformed_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{ not json").unwrap();
        let err = parse_config([
            "rfp",
            "scenario",
            "--id",
            "S1",
            "--config",
            path.to_str().unwrap(),
        ])
        .unwrap_err();
        assert_eq!(exit_code(&err), EXIT_IO);
        assert!(err.to_string().contains("malformed JSON"));
    }

    #[test]
    fn conflicting_sweep_flags() {
        assert!(
            parse_config(["rfp", "sweep", "--id", "S5", "--dmin2", "5", "--levels", "1"]).is_err()
        );
        assert!(parse_config(["rfp", "sweep", "--id", "S5"]).is_err());
        assert!(parse_config(["rfp", "verify-elp", "--id", "S5", "--policy", "msp"]).is_err());
    }
}
