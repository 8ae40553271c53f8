//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 solver,
//! input or guard error. Errors go to stderr as `error[CODE]: message`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use resilient_te::net::{enumerate_scenarios, NodeId, Scenario};
use resilient_te::oracle::worst_case_optimal;
use resilient_te::prob::{
    auto_beta, benders_run, sample_link_probs, solve_cvar, solve_direct_mip, BendersOptions, CvarVariant,
    DirectOptions, ProbabilisticInstance, WeibullParams, DEFAULT_CUTOFF,
};
use resilient_te::realize::{extract_routing_with, proportional_routing, SolveMethod};
use resilient_te::robust::{solve_robust, FailureSpec, Mode, ModelKind, Objective};
use resilient_te::Error as CoreError;

use crate::bundled::bundled;
use crate::error::{HarnessError, Result};
use crate::format::InstanceFile;
use crate::gen::{generate_gravity_demands, select_tunnels, split_instance, GravityWeights};
use crate::report::{robust_report, scheme_report, write_csv, Scheme};

/// Caps the worker threads used by parallel solves.
pub const THREADS_ENV: &str = "RESILIENT_TE_THREADS";
/// Default seed for generators when `--seed` is absent.
pub const SEED_ENV: &str = "RESILIENT_TE_SEED";

#[derive(Debug, Parser)]
#[command(name = "resilient-te", version, about = "Failure-resilient traffic engineering toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check an instance file for structural errors.
    Validate(Input),
    /// Generate demands, tunnels, scenarios or sub-links.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Solve a robust reservation model.
    Solve(SolveArgs),
    /// Worst-case optimal multi-commodity flow over all failures of up to k links.
    Oracle(OracleArgs),
    /// Realize a reservation plan as per-tunnel flows in one scenario.
    Realize(RealizeArgs),
    /// Percentile-loss routing.
    #[command(subcommand)]
    Flomore(FlomoreCommand),
    /// Compare percentile-loss schemes as CSV.
    Analyze(AnalyzeArgs),
    /// Compare robust models against the optimum as CSV.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct Input {
    /// Instance file, or `fixture:NAME` for a bundled fixture.
    input: String,
}

#[derive(Debug, Args)]
struct Output {
    /// Write the result here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum GenCommand {
    /// Replace demands with gravity-model demands.
    Demands {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 0.5)]
        min_mlu: f64,
        #[arg(long, default_value_t = 0.7)]
        max_mlu: f64,
        #[arg(long, value_enum, default_value_t = WeightsArg::Degree)]
        weights: WeightsArg,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Replace tunnels with disjoint-first tunnels for every demand pair.
    Tunnels {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 3)]
        count: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Attach failure scenarios: all sets of at most `--k` links, or
    /// probabilistic scenarios above `--cutoff`.
    Scenarios {
        #[command(flatten)]
        input: Input,
        #[arg(long, conflicts_with = "cutoff")]
        k: Option<usize>,
        #[arg(long)]
        cutoff: Option<f64>,
        /// Draw link failure probabilities from a Weibull law first.
        #[arg(long)]
        sample_probs: bool,
        #[arg(long, default_value_t = WeibullParams::default().shape)]
        shape: f64,
        #[arg(long, default_value_t = 1e-3)]
        median: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Split every link into two half-capacity sub-links.
    Sublinks {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WeightsArg {
    Degree,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Ffc,
    FfcPlus,
    Ls,
    Cls,
    Flow,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Ffc => ModelKind::Ffc,
            ModelArg::FfcPlus => ModelKind::FfcPlus,
            ModelArg::Ls => ModelKind::Ls,
            ModelArg::Cls => ModelKind::Cls,
            ModelArg::Flow => ModelKind::LogicalFlow,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    DemandScale,
    Throughput,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::DemandScale => Objective::DemandScale,
            ObjectiveArg::Throughput => Objective::Throughput,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Dual,
    Enumerate,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Dual => Mode::Dual,
            ModeArg::Enumerate => Mode::Enumerate,
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::DemandScale)]
    objective: ObjectiveArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Dual)]
    mode: ModeArg,
    /// Print the whole plan as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::DemandScale)]
    objective: ObjectiveArg,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct RealizeArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum, default_value_t = ModelArg::Ls)]
    model: ModelArg,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Failed links, comma separated; empty for no failure.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    scenario: Vec<String>,
    #[arg(long, value_enum, default_value_t = MethodArg::Gaussian)]
    method: MethodArg,
    /// Use local proportional splitting instead of the linear system.
    #[arg(long)]
    proportional: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Gaussian,
    Jacobi,
}

#[derive(Debug, Args)]
struct ProbArgs {
    #[command(flatten)]
    input: Input,
    /// Availability target; defaults to the file's, then to the automatic choice.
    #[arg(long)]
    beta: Option<f64>,
    /// Probability cutoff when scenarios come from link probabilities.
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    cutoff: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum FlomoreCommand {
    /// Solve the percentile-loss program as one mixed-integer program.
    Solve {
        #[command(flatten)]
        prob: ProbArgs,
        #[arg(long, default_value_t = DirectOptions::default().node_budget)]
        node_budget: usize,
    },
    /// Solve the percentile-loss program by Benders decomposition.
    Benders {
        #[command(flatten)]
        prob: ProbArgs,
        #[arg(long, default_value_t = BendersOptions::default().max_iterations)]
        max_iterations: usize,
        /// Disable the Hamming-ball step restriction.
        #[arg(long)]
        no_hamming: bool,
    },
    /// Minimize conditional value at risk.
    Cvar {
        #[command(flatten)]
        prob: ProbArgs,
        #[arg(long, value_enum, default_value_t = VariantArg::FlowAdaptive)]
        variant: VariantArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    FlowAdaptive,
    FlowStatic,
    ScenStatic,
}

impl From<VariantArg> for CvarVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::FlowAdaptive => CvarVariant::FlowAdaptive,
            VariantArg::FlowStatic => CvarVariant::FlowStatic,
            VariantArg::ScenStatic => CvarVariant::ScenStatic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Flomore,
    Smore,
    Teavar,
    CvarFlowAdaptive,
    CvarFlowStatic,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Flomore => Scheme::Flomore,
            SchemeArg::Smore => Scheme::Smore,
            SchemeArg::Teavar => Scheme::Teavar,
            SchemeArg::CvarFlowAdaptive => Scheme::CvarFlowAdaptive,
            SchemeArg::CvarFlowStatic => Scheme::CvarFlowStatic,
        }
    }
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    prob: ProbArgs,
    /// Schemes to compare; all by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    schemes: Vec<SchemeArg>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    input: Input,
    /// Models to compare; all by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    models: Vec<ModelArg>,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2])]
    k: Vec<usize>,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::DemandScale)]
    objective: ObjectiveArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Dual)]
    mode: ModeArg,
}

/// Value formatting shared by every single-number output: rounded to nine
/// decimals so exact answers print as `1.0`, `0.5`.
pub fn format_value(v: f64) -> String {
    let r = (v * 1e9).round() / 1e9;
    format!("{:?}", if r == 0.0 { 0.0 } else { r })
}

fn load(input: &str) -> Result<InstanceFile> {
    match input.strip_prefix("fixture:") {
        Some(name) => bundled(name),
        None => InstanceFile::read(Path::new(input)),
    }
}

fn env_seed() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CoreError::InvalidParameter(format!("{SEED_ENV}={s} is not an unsigned integer")).into()),
        Err(_) => Ok(0),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    match writeln!(out, "{text}") {
        // A closed pipe (`| head`) is not an error for the command itself.
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => r.map_err(|source| HarnessError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    emit(out, &serde_json::to_string_pretty(value)?)
}

fn write_file(file: &InstanceFile, output: &Output, out: &mut dyn Write) -> Result<()> {
    match &output.output {
        Some(p) => file.write(p),
        None => emit(out, &file.to_json()),
    }
}

fn prob_instance(file: &InstanceFile, args: &ProbArgs) -> Result<ProbabilisticInstance> {
    let inst = file.instance();
    let mut pinst = if file.scenarios.is_empty() {
        ProbabilisticInstance::from_link_probs(inst, 0.0, args.cutoff)?
    } else {
        ProbabilisticInstance::with_scenarios(inst, file.scenarios.clone(), 0.0)?
    };
    pinst.flow_sets = file.flow_sets.clone();
    pinst.beta = match args.beta.or(file.beta) {
        Some(b) => b,
        None => auto_beta(&pinst)?.ok_or_else(|| {
            CoreError::InvalidParameter("no availability target keeps every flow connected; pass --beta".into())
        })?,
    };
    pinst.check()?;
    Ok(pinst)
}

fn run_command(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Validate(input) => {
            let text = match input.input.strip_prefix("fixture:") {
                Some(name) => bundled(name)?.to_json(),
                None => std::fs::read_to_string(&input.input).map_err(|source| HarnessError::Io {
                    path: input.input.clone(),
                    source,
                })?,
            };
            let file = InstanceFile::parse(&text)?;
            let diags = file.diagnostics();
            if diags.is_empty() {
                return emit(out, "ok");
            }
            for d in &diags {
                let _ = writeln!(err, "error[{}]: {}", d.code, d.message);
            }
            Err(HarnessError::Invalid(format!("{} issue(s)", diags.len())))
        }
        Command::Gen(g) => run_gen(g, out),
        Command::Solve(a) => {
            let file = load(&a.input.input)?;
            let plan = solve_robust(
                &file.instance(),
                a.model.into(),
                &FailureSpec::links(a.k),
                a.objective.into(),
                a.mode.into(),
            )?;
            if a.json {
                emit_json(out, &plan)
            } else {
                emit(out, &format_value(plan.objective))
            }
        }
        Command::Oracle(a) => {
            let file = load(&a.input.input)?;
            let (value, witness) = worst_case_optimal(&file.instance(), a.k, a.objective.into())?;
            if a.json {
                emit_json(out, &serde_json::json!({ "value": value, "witness": witness }))
            } else {
                emit(out, &format_value(value))
            }
        }
        Command::Realize(a) => {
            let file = load(&a.input.input)?;
            let inst = file.instance();
            let plan = solve_robust(&inst, a.model.into(), &FailureSpec::links(a.k), Objective::DemandScale, Mode::Dual)?;
            let failed: Vec<&str> = a.scenario.iter().map(String::as_str).filter(|s| !s.is_empty()).collect();
            let scenario = Scenario::new(&failed);
            let routing = if a.proportional {
                proportional_routing(&plan, &inst, &scenario)?
            } else {
                let method = match a.method {
                    MethodArg::Gaussian => SolveMethod::Gaussian,
                    MethodArg::Jacobi => SolveMethod::Jacobi,
                };
                extract_routing_with(&plan, &inst, &scenario, method)?
            };
            let check = routing.check(&plan, &inst)?;
            emit_json(out, &serde_json::json!({ "routing": routing, "check": check }))
        }
        Command::Flomore(f) => run_flomore(f, out),
        Command::Analyze(a) => {
            let file = load(&a.prob.input.input)?;
            let pinst = prob_instance(&file, &a.prob)?;
            let schemes: Vec<Scheme> = if a.schemes.is_empty() {
                Scheme::ALL.to_vec()
            } else {
                a.schemes.into_iter().map(Scheme::from).collect()
            };
            write_csv(out, &scheme_report(&pinst, &schemes)?)
        }
        Command::Report(a) => {
            let file = load(&a.input.input)?;
            let models: Vec<ModelKind> = if a.models.is_empty() {
                vec![
                    ModelKind::Ffc,
                    ModelKind::FfcPlus,
                    ModelKind::Ls,
                    ModelKind::Cls,
                    ModelKind::LogicalFlow,
                ]
            } else {
                a.models.into_iter().map(ModelKind::from).collect()
            };
            let rows = robust_report(&file.instance(), &models, &a.k, a.objective.into(), a.mode.into())?;
            write_csv(out, &rows)
        }
    }
}

fn run_gen(g: GenCommand, out: &mut dyn Write) -> Result<()> {
    match g {
        GenCommand::Demands {
            input,
            min_mlu,
            max_mlu,
            weights,
            seed,
            output,
        } => {
            let mut file = load(&input.input)?;
            let weights = match weights {
                WeightsArg::Degree => GravityWeights::Degree,
                WeightsArg::Uniform => GravityWeights::Uniform,
            };
            let seed = seed.map_or_else(env_seed, Ok)?;
            file.demands = generate_gravity_demands(&file.topology, weights, (min_mlu, max_mlu), seed)?;
            // Flow sets name the old demands.
            file.flow_sets = None;
            write_file(&file, &output, out)
        }
        GenCommand::Tunnels { input, count, output } => {
            let mut file = load(&input.input)?;
            let pairs: std::collections::BTreeSet<(NodeId, NodeId)> =
                file.demands.iter().map(|d| (d.src.clone(), d.dst.clone())).collect();
            file.tunnels = pairs
                .iter()
                .flat_map(|(s, t)| select_tunnels(&file.topology, s, t, count))
                .collect();
            write_file(&file, &output, out)
        }
        GenCommand::Scenarios {
            input,
            k,
            cutoff,
            sample_probs,
            shape,
            median,
            seed,
            output,
        } => {
            let mut file = load(&input.input)?;
            if sample_probs {
                let seed = seed.map_or_else(env_seed, Ok)?;
                file.topology = sample_link_probs(&file.topology, WeibullParams::with_median(shape, median), seed)?;
            }
            file.scenarios = match (k, cutoff) {
                (Some(k), _) => enumerate_scenarios(&file.topology, k)?,
                (None, c) => resilient_te::prob::enumerate_prob_scenarios(&file.topology, c.unwrap_or(DEFAULT_CUTOFF))?,
            };
            write_file(&file, &output, out)
        }
        GenCommand::Sublinks { input, output } => {
            let file = load(&input.input)?;
            let (inst, scenarios) = split_instance(&file.instance(), &file.scenarios);
            let mut split = InstanceFile::from_instance(inst);
            split.scenarios = scenarios;
            split.beta = file.beta;
            split.flow_sets = file.flow_sets;
            write_file(&split, &output, out)
        }
    }
}

fn run_flomore(f: FlomoreCommand, out: &mut dyn Write) -> Result<()> {
    match f {
        FlomoreCommand::Solve { prob, node_budget } => {
            let pinst = prob_instance(&load(&prob.input.input)?, &prob)?;
            let r = solve_direct_mip(&pinst, &DirectOptions { node_budget })?;
            if prob.json {
                emit_json(out, &r)
            } else {
                emit(out, &format_value(r.alpha))
            }
        }
        FlomoreCommand::Benders {
            prob,
            max_iterations,
            no_hamming,
        } => {
            let pinst = prob_instance(&load(&prob.input.input)?, &prob)?;
            let mut options = BendersOptions {
                max_iterations,
                ..Default::default()
            };
            if no_hamming {
                options.hamming_fraction = None;
            }
            let r = benders_run(&pinst, &options)?;
            if prob.json {
                emit_json(out, &r)
            } else {
                emit(out, &format_value(r.state.incumbent))
            }
        }
        FlomoreCommand::Cvar { prob, variant } => {
            let pinst = prob_instance(&load(&prob.input.input)?, &prob)?;
            let r = solve_cvar(&pinst, variant.into())?;
            if prob.json {
                emit_json(out, &r)
            } else {
                emit(out, &format_value(r.cvar))
            }
        }
    }
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV}={v} is not a positive integer"))?;
    // A pool may already exist when the CLI runs in-process more than once.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    if let Err(msg) = configure_threads() {
        let _ = writeln!(err, "error[USAGE]: {msg}");
        return 1;
    }
    match run_command(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error[{}]: {e}", e.code());
            2
        }
    }
}
