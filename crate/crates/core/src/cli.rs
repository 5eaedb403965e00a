//! The `dynid` command-line driver. Failures print one machine-parsable
//! line, `error=<code> msg=<text>`, on stderr and exit with that code:
//! 1 usage (including stage order), 2 schema, 3 numeric.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use crate::dataio::samples::DEFAULT_QD_THRESHOLD;
use crate::dataio::table::{numbered, trajectory_from_table, trajectory_table};
use crate::dataio::{
    read_samples, simulate_states, write_samples, AccelerationMode, NoiseSpec, PayloadFile, RobotModel, SampleSet,
    SimulationConfig, Table,
};
use crate::error::{Error, Result};
use crate::estimation::{EstimationReport, GainBounds, KnownPayload, PathChoice};
use crate::payload::payload_to_frame_n;
use crate::pipeline::{identify_friction, identify_gains, identify_linear, predict_sample_currents, LinearOptions};
use crate::reduction::{DEFAULT_PROBES, DEFAULT_SVD_TOLERANCE};
use crate::solver::IdentifiedModel;
use crate::trajectory::{random_trajectory, TrajectoryConfig, DEFAULT_HARMONICS, DEFAULT_PERIOD_S, DEFAULT_RATE_HZ};

#[derive(Debug, Parser)]
#[command(name = "dynid", version, about = "Current-based dynamic identification and inverse dynamics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Excitation trajectories.
    Traj {
        #[command(subcommand)]
        command: TrajCommand,
    },
    /// Record a trajectory on a reference model (the oracle).
    Simulate(SimulateArgs),
    /// Run one identification stage.
    Identify {
        #[command(subcommand)]
        stage: IdentifyCommand,
    },
    /// Torque and its decomposition along a trajectory.
    Solve(SolveArgs),
    /// Per-joint error metrics of predicted against measured currents.
    Validate(ValidateArgs),
}

#[derive(Debug, Subcommand)]
pub enum TrajCommand {
    /// Random band-limited Fourier trajectory within the robot's limits.
    Gen(TrajGenArgs),
}

#[derive(Debug, Args)]
pub struct TrajGenArgs {
    #[arg(long)]
    pub robot: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PERIOD_S)]
    pub duration: f64,
    #[arg(long, default_value_t = DEFAULT_PERIOD_S)]
    pub period: f64,
    #[arg(long, default_value_t = DEFAULT_HARMONICS)]
    pub harmonics: usize,
    #[arg(long, default_value_t = DEFAULT_RATE_HZ)]
    pub rate_hz: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub robot: PathBuf,
    #[arg(long)]
    pub traj: PathBuf,
    /// Attach a payload; the recording is tagged scenario b.
    #[arg(long)]
    pub payload: Option<PathBuf>,
    /// Current noise standard deviation, A.
    #[arg(long, default_value_t = 0.0)]
    pub noise_v: f64,
    /// Velocity noise standard deviation, rad/s.
    #[arg(long, default_value_t = 0.0)]
    pub noise_qd: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Channels low-passed before a stage runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterChannels {
    None,
    /// Velocities only; accelerations are re-derived.
    Qd,
    /// Velocities and currents.
    All,
}

#[derive(Debug, Clone, Args)]
pub struct FilterArgs {
    #[arg(long, value_enum, default_value_t = FilterChannels::Qd)]
    pub filter: FilterChannels,
    #[arg(long, default_value_t = crate::dataio::filter::DEFAULT_CUTOFF_HZ)]
    pub cutoff_hz: f64,
}

impl FilterArgs {
    fn apply(&self, set: SampleSet) -> Result<SampleSet> {
        match self.filter {
            FilterChannels::None => Ok(set),
            FilterChannels::Qd => set.filtered(self.cutoff_hz, false),
            FilterChannels::All => set.filtered(self.cutoff_hz, true),
        }
    }

    fn load(&self, path: &Path) -> Result<SampleSet> {
        self.apply(read_samples(path)?)
    }
}

#[derive(Debug, Subcommand)]
pub enum IdentifyCommand {
    /// Stage 1: current-level coefficients on the linearity region.
    Linear(LinearArgs),
    /// Stage 2: sigmoid friction on the nonlinearity region.
    Friction(FrictionArgs),
    /// Stage 3: motor drive gains from payload-free and payload recordings.
    Gains(GainsArgs),
}

#[derive(Debug, Args)]
pub struct LinearArgs {
    /// Robot description; only the kinematics and limits are used.
    #[arg(long)]
    pub robot: PathBuf,
    /// Scenario-a samples.
    #[arg(long)]
    pub samples: PathBuf,
    /// Seed of the probe states behind the base-parameter map.
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_QD_THRESHOLD)]
    pub qd_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_PROBES)]
    pub probes: usize,
    #[arg(long, default_value_t = DEFAULT_SVD_TOLERANCE)]
    pub svd_tolerance: f64,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Debug, Args)]
pub struct FrictionArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub samples: PathBuf,
    /// Defaults to updating `--model` in place.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Debug, Args)]
pub struct GainsArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub samples_a: PathBuf,
    #[arg(long)]
    pub samples_b: PathBuf,
    /// Payload file; its `known_parameters` list selects what is known.
    #[arg(long)]
    pub payload: PathBuf,
    /// Lower gain bound, N·m/A.
    #[arg(long, default_value_t = crate::estimation::gains::DEFAULT_LOWER_GAIN)]
    pub lower: f64,
    /// Upper gain bound, N·m/A; default is the largest gain of the
    /// preceding joints.
    #[arg(long)]
    pub upper: Option<f64>,
    /// Solve every joint through the regrouped bounded problem.
    #[arg(long)]
    pub force_regrouped: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub payload: Option<PathBuf>,
    /// Trajectory CSV as written by `traj gen`.
    #[arg(long)]
    pub traj: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Model whose predictions are scored.
    #[arg(long, required_unless_present = "predictions", conflicts_with = "predictions")]
    pub model: Option<PathBuf>,
    /// Precomputed predictions (`t,v1..vn`) instead of a model.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Payload configured on the model before predicting.
    #[arg(long, requires = "model")]
    pub payload: Option<PathBuf>,
    #[arg(long)]
    pub samples: PathBuf,
    /// Comparison predictions (`t,v1..vn`); adds the `eta` column.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long)]
    pub report: PathBuf,
    /// Also write the scored predictions (`t,v1..vn`).
    #[arg(long)]
    pub write_predictions: Option<PathBuf>,
    #[command(flatten)]
    pub filter: FilterArgs,
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            report_error(1, &e.to_string());
            return 1;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            report_error(code, &e.to_string());
            code
        }
    }
}

fn report_error(code: i32, msg: &str) {
    let first = msg.trim().replace('\n', " ");
    let _ = writeln!(std::io::stderr(), "error={code} msg={first}");
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Traj {
            command: TrajCommand::Gen(a),
        } => traj_gen(&a),
        Command::Simulate(a) => simulate_cmd(&a),
        Command::Identify { stage } => match stage {
            IdentifyCommand::Linear(a) => identify_linear_cmd(&a),
            IdentifyCommand::Friction(a) => identify_friction_cmd(&a),
            IdentifyCommand::Gains(a) => identify_gains_cmd(&a),
        },
        Command::Solve(a) => solve_cmd(&a),
        Command::Validate(a) => validate_cmd(&a),
    }
}

fn traj_gen(a: &TrajGenArgs) -> Result<()> {
    let robot = RobotModel::read(&a.robot)?;
    let limits = robot.limits.as_ref().ok_or(Error::IncompleteModel("limits"))?;
    if !(a.rate_hz > 0.0) {
        return Err(Error::InvalidInput("--rate-hz must be positive".into()));
    }
    let cfg = TrajectoryConfig {
        harmonics: a.harmonics,
        period: a.period,
        duration: a.duration,
        sample_period: 1.0 / a.rate_hz,
    };
    let traj = random_trajectory(a.seed, limits, &cfg)?;
    trajectory_table(&traj.times(), &traj.sample()).write(&a.out)
}

fn simulate_cmd(a: &SimulateArgs) -> Result<()> {
    let robot = RobotModel::read(&a.robot)?;
    let (t, states) = trajectory_from_table(&Table::read(&a.traj)?)?;
    let payload = a.payload.as_deref().map(PayloadFile::read).transpose()?;
    let cfg = SimulationConfig {
        noise: NoiseSpec {
            v: a.noise_v,
            qd: a.noise_qd,
        },
        seed: a.seed,
        mode: AccelerationMode::Recompute,
    };
    let set = simulate_states(&robot, &t, &states, payload.as_ref().map(|p| &p.spec), &cfg)?;
    write_samples(&a.out, &set)
}

fn print_line(line: String) {
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn identify_linear_cmd(a: &LinearArgs) -> Result<()> {
    let robot = RobotModel::read(&a.robot)?;
    let samples = a.filter.load(&a.samples)?;
    let opts = LinearOptions {
        n_probe: a.probes,
        probe_seed: a.seed,
        svd_tolerance: a.svd_tolerance,
        qd_threshold: a.qd_threshold,
    };
    let (model, reports) = identify_linear(&robot, &samples, &opts)?;
    let id = model.identification.as_ref().ok_or(Error::IncompleteModel("identification"))?;
    if let Some(w) = &id.map.rank_warning {
        let _ = writeln!(std::io::stderr(), "warning: {w}");
    }
    print_line(format!("stage=linear coefficients={} inertial={}", id.map.n_coeff(), id.map.n_inertial()));
    for (j, r) in reports.iter().enumerate() {
        print_line(format!(
            "joint={} samples={} condition={:.3e} irls_iterations={} converged={} residual_rms={:.6e}",
            j + 1,
            r.samples,
            r.condition,
            r.irls_iterations,
            r.irls_converged,
            r.residual_rms
        ));
    }
    model.write(&a.out)
}

fn identify_friction_cmd(a: &FrictionArgs) -> Result<()> {
    let model = RobotModel::read(&a.model)?;
    let samples = a.filter.load(&a.samples)?;
    let (model, reports) = identify_friction(&model, &samples)?;
    for (j, r) in reports.iter().enumerate() {
        let p = model.friction.as_ref().map(|f| f.set.0[j]).unwrap_or_default();
        print_line(format!(
            "joint={} samples={} objective={:.6e} f_o={} f_v={} f_c={} delta={} nu={}",
            j + 1,
            r.samples,
            r.objective,
            p.f_o,
            p.f_v,
            p.f_c,
            p.delta,
            p.nu
        ));
    }
    model.write(a.out.as_deref().unwrap_or(&a.model))
}

fn identify_gains_cmd(a: &GainsArgs) -> Result<()> {
    let model = RobotModel::read(&a.model)?;
    // Stage order is checked before any data is read.
    model.stage().require(crate::dataio::Stage::Friction, "gains")?;
    let samples_a = a.filter.load(&a.samples_a)?;
    let samples_b = a.filter.load(&a.samples_b)?;
    let file = PayloadFile::read(&a.payload)?;
    let payload = KnownPayload {
        values: payload_to_frame_n(&file.spec)?,
        known: file.known,
    };
    let bounds = GainBounds {
        lower: a.lower,
        upper: a.upper,
    };
    let choice = if a.force_regrouped {
        PathChoice::Regrouped
    } else {
        PathChoice::Auto
    };
    let (model, estimate) = identify_gains(&model, &samples_a, &samples_b, &payload, &bounds, choice)?;
    for (j, g) in estimate.joints.iter().enumerate() {
        print_line(format!(
            "joint={} K={} path={:?} rank={}/{} bounds=[{}, {}]",
            j + 1,
            estimate.k[j],
            g.solve.path,
            g.solve.rank,
            g.solve.zeta.len(),
            g.bounds.0,
            g.bounds.1
        ));
    }
    model.write(a.out.as_deref().unwrap_or(&a.model))
}

fn solve_cmd(a: &SolveArgs) -> Result<()> {
    let model = RobotModel::read(&a.model)?;
    let mut solver = IdentifiedModel::from_robot_model(&model)?;
    if let Some(p) = &a.payload {
        solver = solver.configure_payload(&PayloadFile::read(p)?.spec)?;
    }
    let (t, states) = trajectory_from_table(&Table::read(&a.traj)?)?;
    let n = solver.dof();
    let mut header = vec!["t".to_string()];
    for prefix in ["tau", "mqdd", "cqd", "f", "g"] {
        header.extend(numbered(prefix, n));
    }
    let mut table = Table::new(header);
    for (tk, s) in t.iter().zip(&states) {
        let terms = solver.terms(s)?;
        let tau = solver.torque(s)?;
        let mut row = vec![*tk];
        for v in [&tau, &terms.inertia_qdd, &terms.coriolis_qd, &terms.friction, &terms.gravity] {
            row.extend(v.iter());
        }
        table.rows.push(row);
    }
    table.write(&a.out)
}

fn predictions_table(t: &[f64], v: &[DVector<f64>]) -> Table {
    let n = v.first().map_or(0, |x| x.len());
    let mut header = vec!["t".to_string()];
    header.extend(numbered("v", n));
    let mut table = Table::new(header);
    for (tk, vk) in t.iter().zip(v) {
        let mut row = vec![*tk];
        row.extend(vk.iter());
        table.rows.push(row);
    }
    table
}

/// Reads `v1..vn` from a predictions file; `t`, if present, is ignored.
pub fn read_predictions(path: &Path, n: usize) -> Result<Vec<DVector<f64>>> {
    let table = Table::read(path)?;
    let cols = numbered("v", n)
        .iter()
        .map(|c| table.column(c))
        .collect::<Result<Vec<_>>>()?;
    Ok(table
        .rows
        .iter()
        .map(|row| DVector::from_iterator(n, cols.iter().map(|&c| row[c])))
        .collect())
}

fn validate_cmd(a: &ValidateArgs) -> Result<()> {
    let mut samples = a.filter.load(&a.samples)?;
    let predicted = match (&a.model, &a.predictions) {
        (Some(m), _) => {
            let model = RobotModel::read(m)?;
            // The nonlinearity-region column uses the model's own threshold.
            if let Some(id) = &model.identification {
                samples.qd_threshold = id.qd_threshold;
            }
            let payload = a.payload.as_deref().map(PayloadFile::read).transpose()?;
            predict_sample_currents(&model, payload.as_ref().map(|p| &p.spec), &samples)?
        }
        (None, Some(p)) => read_predictions(p, samples.dof())?,
        (None, None) => return Err(Error::InvalidInput("--model or --predictions is required".into())),
    };
    finish_validation(a, &samples, &predicted)
}

fn finish_validation(a: &ValidateArgs, samples: &SampleSet, predicted: &[DVector<f64>]) -> Result<()> {
    let baseline = a
        .baseline
        .as_deref()
        .map(|p| read_predictions(p, samples.dof()))
        .transpose()?;
    let report = EstimationReport::compare(samples, predicted, baseline.as_deref())?;
    if let Some(path) = &a.write_predictions {
        predictions_table(&samples.t, predicted).write(path)?;
    }
    print_line(format!(
        "average_mnae={} max_mnae={}",
        report.average_mnae(),
        report.max_mnae()
    ));
    report.to_table().write(&a.report)
}
