//! `armsizer` command line.

use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use armsizer::analysis::{agreement_gate, compare_profiles, write_metrics_csv, AnalysisError, GateThresholds};
use armsizer::dynamics::{read_torque_csv, DynamicsError, TorquePath};
use armsizer::model::{RobotKind, ScalingLaw};
use armsizer::pipeline::{run_pipeline, size_run_dir, PipelineError, RunInputs, ScenarioConfig, Stage};
use armsizer::sizing::{bundled_catalog, load_catalog, load_catalog_csv, ActuatorCatalog, SizingConfig, SizingError};
use armsizer::trajectory::{palletizing_cycle, PalletizingLayout, Program, TrajectoryError};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::AppState;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Sizing(#[from] SizingError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Parse { path: path.into(), message: e.to_string() })
}

#[derive(Debug, Parser)]
#[command(name = "armsizer", version, about = "Trajectory dynamics and actuator sizing for palletizing arms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Program + scenario → run directory of artifacts.
    Simulate(SimulateArgs),
    /// Run directory → sizing report (JSON).
    Size(SizeArgs),
    /// DEMO and PRO torque CSVs → metrics CSV.
    Compare(CompareArgs),
    /// Start the HTTP/WebSocket service.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RobotArg {
    Cr4,
    Cr6,
}

impl From<RobotArg> for RobotKind {
    fn from(r: RobotArg) -> Self {
        match r {
            RobotArg::Cr4 => RobotKind::Cr4,
            RobotArg::Cr6 => RobotKind::Cr6,
        }
    }
}

/// Catalog source: bundled by default, else JSON or a motors/gearboxes CSV pair.
#[derive(Debug, Default, Args)]
pub struct CatalogArgs {
    #[arg(long, conflicts_with_all = ["motors", "gearboxes"])]
    pub catalog: Option<PathBuf>,
    #[arg(long, requires = "gearboxes")]
    pub motors: Option<PathBuf>,
    #[arg(long, requires = "motors")]
    pub gearboxes: Option<PathBuf>,
}

impl CatalogArgs {
    pub fn load(&self) -> Result<ActuatorCatalog, CliError> {
        let catalog = match (&self.catalog, &self.motors, &self.gearboxes) {
            (Some(p), _, _) => load_catalog(&read(p)?)?,
            (None, Some(m), Some(g)) => load_catalog_csv(&read(m)?, &read(g)?)?,
            _ => bundled_catalog(),
        };
        Ok(catalog)
    }
}

/// Sizing configuration: a JSON file and/or the individual factors.
#[derive(Debug, Default, Args)]
pub struct SizingArgs {
    #[arg(long = "sizing")]
    pub sizing_file: Option<PathBuf>,
    #[arg(long)]
    pub sf_torque: Option<f64>,
    #[arg(long)]
    pub sf_speed: Option<f64>,
    #[arg(long)]
    pub max_round2_iterations: Option<usize>,
}

impl SizingArgs {
    pub fn load(&self) -> Result<SizingConfig, CliError> {
        let mut c: SizingConfig = match &self.sizing_file {
            Some(p) => parse_json(p)?,
            None => SizingConfig::default(),
        };
        if let Some(v) = self.sf_torque {
            c.sf_torque = v;
        }
        if let Some(v) = self.sf_speed {
            c.sf_speed = v;
        }
        if let Some(v) = self.max_round2_iterations {
            c.max_round2_iterations = v;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "cr4")]
    pub robot: RobotArg,
    /// Start from the palletizing benchmark scenario instead of the defaults.
    #[arg(long)]
    pub benchmark: bool,
    /// Scenario JSON; individual flags below override its fields.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub mass_exponent: Option<f64>,
    #[arg(long)]
    pub inertia_exponent: Option<f64>,
    #[arg(long)]
    pub payload_mass: Option<f64>,
    /// Program JSON; defaults to the palletizing cycle (4-axis robots only).
    #[arg(long)]
    pub program: Option<PathBuf>,
    #[command(flatten)]
    pub catalog: CatalogArgs,
    #[command(flatten)]
    pub sizing: SizingArgs,
    #[arg(long)]
    pub out: PathBuf,
}

impl SimulateArgs {
    pub fn scenario(&self) -> Result<ScenarioConfig, CliError> {
        let mut s = match (&self.scenario, self.benchmark) {
            (Some(p), _) => parse_json(p)?,
            (None, true) => ScenarioConfig::benchmark(),
            (None, false) => ScenarioConfig::default(),
        };
        if let Some(v) = self.scale {
            s.scale = v;
        }
        let law = &mut s.scaling_law;
        if let Some(v) = self.mass_exponent {
            *law = ScalingLaw { mass_exponent: v, ..*law };
        }
        if let Some(v) = self.inertia_exponent {
            *law = ScalingLaw { inertia_exponent: v, ..*law };
        }
        if let Some(v) = self.payload_mass {
            s.payload.mass = v;
        }
        Ok(s)
    }

    pub fn inputs(&self) -> Result<RunInputs, CliError> {
        let robot = RobotKind::from(self.robot);
        let scenario = self.scenario()?;
        let program: Program = match &self.program {
            Some(p) => parse_json(p)?,
            None => {
                let model = scenario.build_model(robot)?;
                palletizing_cycle(&model, &PalletizingLayout::default()).map_err(|e| match e {
                    TrajectoryError::Dimension { .. } => {
                        CliError::Usage("the built-in palletizing program needs a 4-axis robot; pass --program".into())
                    }
                    e => CliError::Pipeline(PipelineError::Compile(e)),
                })?
            }
        };
        Ok(RunInputs {
            robot,
            scenario,
            program,
            catalog: self.catalog.load()?,
            sizing: self.sizing.load()?,
            gate: GateThresholds::default(),
        })
    }
}

#[derive(Debug, Args)]
pub struct SizeArgs {
    /// Run directory written by `simulate` or the service.
    #[arg(long)]
    pub run: PathBuf,
    #[command(flatten)]
    pub catalog: CatalogArgs,
    #[command(flatten)]
    pub sizing: SizingArgs,
    /// Report path; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub demo: PathBuf,
    #[arg(long)]
    pub pro: PathBuf,
    /// Metrics CSV path; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = GateThresholds::default().min_correlation)]
    pub min_correlation: f64,
    #[arg(long, default_value_t = GateThresholds::default().max_rmse)]
    pub max_rmse: f64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Where run directories are created.
    #[arg(long, default_value = "runs")]
    pub data_dir: PathBuf,
    #[command(flatten)]
    pub catalog: CatalogArgs,
}

fn emit(path: Option<&Path>, bytes: &[u8], out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes)?,
        None => out.write_all(bytes)?,
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let inputs = args.inputs()?;
    let mut stages: Vec<Stage> = vec![];
    let results = run_pipeline(&inputs, Some(&args.out), &mut |s| stages.push(s))?;
    writeln!(out, "run directory: {}", args.out.display())?;
    writeln!(out, "samples: {}  duration: {:.3} s", results.trajectory.len(), results.trajectory.duration())?;
    writeln!(out, "joint  correlation  rmse_Nm  bias_Nm")?;
    for m in &results.metrics.joints {
        let corr = m.correlation.map_or("undefined".to_string(), |c| format!("{c:.6}"));
        writeln!(out, "{:<5}  {corr:>11}  {:>7.3}  {:>7.3}", m.joint, m.rmse, m.bias)?;
    }
    let sizing = &results.sizing;
    for (label, sel) in [("round 1", &sizing.round1), ("round 2", &sizing.round2)] {
        writeln!(out, "{label}:")?;
        for j in &sel.joints {
            let mark = if j.changed { "  (changed)" } else { "" };
            writeln!(out, "  {}  {} + {}{mark}", j.joint, j.motor, j.gearbox)?;
        }
    }
    Ok(())
}

pub fn size(args: &SizeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let report = size_run_dir(&args.run, &args.catalog.load()?, &args.sizing.load()?)?;
    emit(args.out.as_deref(), report.to_json().as_bytes(), out)
}

pub fn compare(args: &CompareArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let demo = read_torque_csv(read(&args.demo)?.as_bytes(), TorquePath::Demo)?;
    let pro = read_torque_csv(read(&args.pro)?.as_bytes(), TorquePath::Pro)?;
    let metrics = compare_profiles(&demo, &pro)?;
    let mut csv = Vec::new();
    write_metrics_csv(&metrics, &mut csv)?;
    emit(args.out.as_deref(), &csv, out)?;
    if args.out.is_some() {
        let gate = GateThresholds { min_correlation: args.min_correlation, max_rmse: args.max_rmse };
        for v in agreement_gate(&metrics, &gate) {
            let verdict = if v.pass { "agree" } else { "disagree" };
            writeln!(out, "{}: {verdict}{}", v.joint, v.reasons.iter().map(|r| format!("; {r}")).collect::<String>())?;
        }
    }
    Ok(())
}

pub fn serve(args: &ServeArgs) -> Result<(), CliError> {
    let state = AppState::new(&args.data_dir, args.catalog.load()?);
    fs::create_dir_all(&args.data_dir)?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(crate::serve(args.addr, state))?;
    Ok(())
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(a) => simulate(a, out),
        Command::Size(a) => size(a, out),
        Command::Compare(a) => compare(a, out),
        Command::Serve(a) => serve(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_the_scenario() {
        let cli = Cli::parse_from([
            "armsizer", "simulate", "--benchmark", "--scale", "1.3", "--payload-mass", "5", "--out", "x",
        ]);
        let Command::Simulate(a) = cli.command else { panic!() };
        let s = a.scenario().unwrap();
        assert_eq!(s.scale, 1.3);
        assert_eq!(s.payload.mass, 5.0);
        assert_eq!(s.scaling_law, ScalingLaw::CALIBRATED);
    }

    #[test]
    fn catalog_csv_needs_both_files() {
        assert!(Cli::try_parse_from(["armsizer", "size", "--run", "r", "--motors", "m.csv"]).is_err());
        assert!(Cli::try_parse_from(["armsizer", "size", "--run", "r", "--catalog", "c.json", "--motors", "m.csv", "--gearboxes", "g.csv"]).is_err());
    }

    #[test]
    fn sizing_flags_are_validated() {
        let a = SizingArgs { sf_torque: Some(0.5), ..Default::default() };
        assert!(a.load().is_err());
    }
}
