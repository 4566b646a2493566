use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use rowdefect::drury_arveson::{
    blaschke_model, first_defect_polynomials, first_defect_stability, quotient_theta_maximality, submodule_defect,
    submodule_from_inner_with_tolerance, submodule_maximality_experiment, submodule_poisson_test,
    submodule_with_tolerance, InnerFunction, Polynomial,
};
use rowdefect::experiment::{
    poisson_residuals, profile_csv, property_suite, run, scenario_manifest, ExperimentConfig, ProfileRow,
    ScenarioReport, DEFAULT_RANDOM_COUNT,
};
use rowdefect::fock::theorem39_battery;
use rowdefect::maximality::{find_annihilator, is_maximal, Mode};
use rowdefect::random::{random_contractive_tuple, random_low_defect_tuple};
use rowdefect::zoo::parse_tuple;
use rowdefect::{defect_sequence, Error, MultiIndex, OperatorTuple, TolerancePolicy, C64};

#[derive(Parser)]
#[command(name = "rowdefect", version, about = "Defect sequences and maximality of contractive operator tuples")]
struct Cli {
    /// Experiment config (JSON); its seed, horizon, tolerance and out fields act as defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    horizon: Option<usize>,
    /// Absolute tolerance for identity checks
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Relative singular-value cutoff for ranks
    #[arg(long, global = true)]
    rank_rtol: Option<f64>,
    /// Write reports to this directory instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct TupleArg {
    /// Tuple such as `shift:5`, `creation:2:3`, `dshift:2:4`, `random:2:4[:commuting]`
    #[arg(long, conflicts_with = "tuple_file")]
    tuple: Option<String>,
    /// Tuple as JSON: {"dim", "arity", "commuting", "matrices"}
    #[arg(long)]
    tuple_file: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Commuting,
    NonCommuting,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Commuting => Mode::Commuting,
            ModeArg::NonCommuting => Mode::NonCommuting,
        }
    }
}

#[derive(Args)]
struct ThetaArg {
    /// θ = z^M
    #[arg(long, conflicts_with = "blaschke")]
    theta_power: Option<usize>,
    /// Blaschke zeros as `re,im;re,im;...`
    #[arg(long)]
    blaschke: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Defect indices Δ^1..Δ^horizon
    DefectSeq(TupleArg),
    /// Maximality verdict against the capped maximal profile
    Maximality(TupleArg),
    /// Smallest-degree polynomial annihilating the first defect space
    Annihilator {
        #[command(flatten)]
        tuple: TupleArg,
        #[arg(long)]
        max_degree: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Poisson kernel identities on the truncated Fock space
    FockPoisson {
        #[command(flatten)]
        tuple: TupleArg,
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
    /// Equivalence battery for pure tuples with one-dimensional defect
    Theorem39 {
        #[command(flatten)]
        tuple: TupleArg,
        #[arg(long, default_value_t = 200)]
        purity_steps: usize,
    },
    /// Defect profile and maximality of a Drury-Arveson submodule
    DaSubmodule {
        /// Number of variables
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Truncation degree
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Monomial generator as comma-separated exponents; repeatable
        #[arg(long)]
        monomial: Vec<String>,
        /// JSON array of polynomials
        #[arg(long)]
        generators_file: Option<PathBuf>,
        #[command(flatten)]
        theta: ThetaArg,
    },
    /// Compressed shift on the model space H_θ
    ModelTheta {
        #[command(flatten)]
        theta: ThetaArg,
        /// Truncation degree
        #[arg(long, default_value_t = 12)]
        n: usize,
    },
    /// Randomized invariant battery
    PropertySuite {
        #[arg(long, default_value_t = DEFAULT_RANDOM_COUNT)]
        count: usize,
    },
    /// Seeded random contractive tuple as JSON
    RandomTuple {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long)]
        commuting: bool,
        /// Build a tuple with this first defect index instead
        #[arg(long)]
        low_defect: Option<usize>,
    },
    /// Run a named scenario (or the one named in --config)
    Run {
        scenario: Option<String>,
        /// Run every preset scenario
        #[arg(long, conflicts_with = "scenario")]
        all: bool,
    },
    /// List preset scenarios
    Scenarios,
}

enum Failure {
    Config(String),
    Assertion(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

struct Output {
    name: String,
    json: Value,
    rows: Option<Vec<ProfileRow>>,
    failed: Vec<String>,
}

impl Output {
    fn new(name: &str, json: impl Serialize) -> Result<Self, Failure> {
        Ok(Self {
            name: name.into(),
            json: serde_json::to_value(json).map_err(Error::from)?,
            rows: None,
            failed: Vec::new(),
        })
    }

    fn rows(mut self, rows: Vec<ProfileRow>) -> Self {
        self.rows = Some(rows);
        self
    }

    fn require(mut self, name: &str, ok: bool) -> Self {
        if !ok {
            self.failed.push(name.into());
        }
        self
    }
}

struct Context {
    config: Option<ExperimentConfig>,
    seed: u64,
    horizon: Option<usize>,
    tol: TolerancePolicy,
}

impl Context {
    fn from_cli(cli: &Cli) -> Result<Self, Failure> {
        let config = cli.config.as_deref().map(ExperimentConfig::from_json_file).transpose()?;
        let base = match &config {
            Some(c) => c.tolerance_policy()?,
            None => TolerancePolicy::default(),
        };
        let tol = TolerancePolicy::new(
            cli.rank_rtol.unwrap_or(base.rank_rtol),
            cli.tol.unwrap_or(base.identity_atol),
        )?;
        let seed = cli.seed.or(config.as_ref().and_then(|c| c.seed)).unwrap_or(rowdefect::experiment::DEFAULT_SEED);
        let horizon = cli.horizon.or(config.as_ref().and_then(|c| c.horizon));
        Ok(Self {
            config,
            seed,
            horizon,
            tol,
        })
    }

    fn tuple(&self, arg: &TupleArg) -> Result<OperatorTuple, Failure> {
        let t = match (&arg.tuple, &arg.tuple_file) {
            (Some(text), None) => parse_tuple(text, self.seed)?,
            (None, Some(path)) => {
                let text = fs::read_to_string(path).map_err(Error::from)?;
                serde_json::from_str(&text).map_err(Error::from)?
            }
            _ => return Err(Failure::Config("give --tuple SPEC or --tuple-file PATH".into())),
        };
        Ok(t.with_tolerance(self.tol)?)
    }

    fn horizon_or(&self, default: usize) -> usize {
        self.horizon.unwrap_or(default)
    }
}

fn parse_zeros(text: &str) -> Result<Vec<C64>, Failure> {
    text.split(';')
        .map(|pair| {
            let parts: Vec<&str> = pair.split(',').map(str::trim).collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| Failure::Config(format!("bad zero `{pair}`")));
            match parts.as_slice() {
                [re] => Ok(C64::new(num(re)?, 0.0)),
                [re, im] => Ok(C64::new(num(re)?, num(im)?)),
                _ => Err(Failure::Config(format!("bad zero `{pair}`"))),
            }
        })
        .collect()
}

fn theta_from(arg: &ThetaArg) -> Result<Option<InnerFunction>, Failure> {
    Ok(match (arg.theta_power, &arg.blaschke) {
        (Some(m), None) => Some(InnerFunction::Monomial { m }),
        (None, Some(z)) => Some(InnerFunction::blaschke(&parse_zeros(z)?)?),
        _ => None,
    })
}

fn profile_row(label: &str, mode: Mode, certified: Option<usize>, verdict: &str, deltas: &[usize]) -> ProfileRow {
    ProfileRow {
        label: label.into(),
        mode,
        certified_depth: certified,
        verdict: verdict.into(),
        deltas: deltas.to_vec(),
    }
}

fn verdict_word(maximal: bool) -> &'static str {
    if maximal {
        "maximal"
    } else {
        "not-maximal"
    }
}

fn label(arg: &TupleArg) -> String {
    match (&arg.tuple, &arg.tuple_file) {
        (Some(s), _) => s.clone(),
        (_, Some(p)) => p.display().to_string(),
        _ => String::new(),
    }
}

fn execute(cli: &Cli, ctx: &Context) -> Result<Vec<Output>, Failure> {
    let out = match &cli.command {
        Command::DefectSeq(arg) => {
            let t = ctx.tuple(arg)?;
            let p = defect_sequence(&t, ctx.horizon_or(t.dim() + 1));
            let row = profile_row(&label(arg), Mode::of(&t), None, "n/a", &p.deltas);
            Output::new("defect-seq", &p)?.rows(vec![row])
        }
        Command::Maximality(arg) => {
            let t = ctx.tuple(arg)?;
            let v = is_maximal(&t, ctx.horizon_or(t.dim() + 1))?;
            let row = profile_row(&label(arg), Mode::of(&t), None, verdict_word(v.is_maximal), &v.deltas);
            Output::new("maximality", &v)?.rows(vec![row])
        }
        Command::Annihilator { tuple, max_degree, mode } => {
            let t = ctx.tuple(tuple)?;
            let mode = mode.map(Mode::from).unwrap_or(Mode::of(&t));
            let a = find_annihilator(&t, max_degree.unwrap_or(t.dim()), mode)?;
            Output::new("annihilator", &a)?
        }
        Command::FockPoisson { tuple, depth } => {
            let t = ctx.tuple(tuple)?;
            let r = poisson_residuals(&t, *depth)?;
            let atol = ctx.tol.identity_atol;
            Output::new("fock-poisson", json!({ "depth": depth, "tolerance": atol, "residuals": r }))?
                .require("poisson gram identity", r.gram <= atol)
                .require("poisson adjoint columns", r.adjoint <= atol)
                .require("intertwining", r.intertwining <= atol)
        }
        Command::Theorem39 { tuple, purity_steps } => {
            let t = ctx.tuple(tuple)?;
            let r = theorem39_battery(&t, ctx.horizon_or(t.dim()), *purity_steps, None)?;
            let row = profile_row(&label(tuple), Mode::NonCommuting, None, verdict_word(r.maximal), &r.deltas);
            let agree = r.skipped.is_some() || r.agree;
            Output::new("theorem39", &r)?.rows(vec![row]).require("battery conditions agree", agree)
        }
        Command::DaSubmodule {
            d,
            n,
            monomial,
            generators_file,
            theta,
        } => da_submodule(ctx, *d, *n, monomial, generators_file.as_ref(), theta)?,
        Command::ModelTheta { theta, n } => {
            let theta = theta_from(theta)?.ok_or_else(|| Failure::Config("give --theta-power or --blaschke".into()))?;
            let model = blaschke_model(&theta, *n)?;
            let q = quotient_theta_maximality(&theta, *n, ctx.horizon_or(model.dim + 1))?;
            let v_residual = model.v_residual((*n).min(6))?;
            let row = profile_row(&theta_label(&theta), Mode::Commuting, None, verdict_word(q.maximal), &q.deltas);
            Output::new("model-theta", json!({ "model": model, "quotient": q, "v_residual": v_residual }))?
                .rows(vec![row])
                .require("v_i agree", v_residual < 1e-8)
        }
        Command::PropertySuite { count } => {
            let s = property_suite(ctx.seed, *count, ctx.tol)?;
            let failing: Vec<String> = s.checks.iter().filter(|c| !c.failures.is_empty()).map(|c| c.name.clone()).collect();
            let mut o = Output::new("property-suite", &s)?;
            o.failed = failing;
            o
        }
        Command::RandomTuple {
            d,
            m,
            commuting,
            low_defect,
        } => {
            let t = match low_defect {
                Some(k) => random_low_defect_tuple(*d, *m, *k, ctx.seed)?,
                None => random_contractive_tuple(*d, *m, *commuting, ctx.seed)?,
            };
            Output::new("random-tuple", &t)?
        }
        Command::Run { scenario, all } => return run_scenarios(cli, ctx, scenario.as_deref(), *all),
        Command::Scenarios => Output::new("scenarios", scenario_manifest())?,
    };
    Ok(vec![out])
}

fn theta_label(theta: &InnerFunction) -> String {
    match theta {
        InnerFunction::Monomial { m } => format!("theta=z^{m}"),
        other => {
            let zeros: Vec<String> = other
                .zeros()
                .iter()
                .map(|z| if z.im == 0.0 { format!("{}", z.re) } else { format!("{}{:+}i", z.re, z.im) })
                .collect();
            format!("theta=blaschke({})", zeros.join(","))
        }
    }
}

fn da_submodule(
    ctx: &Context,
    d: usize,
    n: usize,
    monomials: &[String],
    generators_file: Option<&PathBuf>,
    theta: &ThetaArg,
) -> Result<Output, Failure> {
    let s = if let Some(theta) = theta_from(theta)? {
        submodule_from_inner_with_tolerance(&theta, n, ctx.tol)?
    } else {
        let mut gens = Vec::new();
        for m in monomials {
            let exps = m
                .split(',')
                .map(|e| e.trim().parse::<u32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| Failure::Config(format!("bad monomial `{m}`")))?;
            gens.push(Polynomial::monomial(MultiIndex::new(exps)));
        }
        if let Some(path) = generators_file {
            let text = fs::read_to_string(path).map_err(Error::from)?;
            let polys: Vec<Polynomial> = serde_json::from_str(&text).map_err(Error::from)?;
            gens.extend(polys);
        }
        if gens.is_empty() {
            return Err(Failure::Config("give --monomial, --generators-file, --theta-power or --blaschke".into()));
        }
        submodule_with_tolerance(&gens, d, n, ctx.tol)?
    };
    let horizon = ctx.horizon_or(s.certified_defect_depth.min(4));
    let defect = submodule_defect(&s, horizon);
    let stability = first_defect_stability(&s)?;
    let (verdict, word) = match submodule_maximality_experiment(&s, horizon) {
        Ok(v) => {
            let w = verdict_word(v.is_maximal);
            (Some(v), w)
        }
        Err(Error::UnstableDefect { .. }) => (None, "no-verdict"),
        Err(e) => return Err(e.into()),
    };
    let poisson = if horizon >= 1 && horizon <= s.certified_defect_depth {
        Some(submodule_poisson_test(&s, horizon - 1)?)
    } else {
        None
    };
    let label = s.generators.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ");
    let row = profile_row(&format!("({label})"), Mode::Commuting, Some(s.certified_defect_depth), word, &defect.profile.deltas);
    let first: Vec<String> = first_defect_polynomials(&s).iter().map(|p| p.to_string()).collect();
    Ok(Output::new(
        "da-submodule",
        json!({
            "submodule": s,
            "defect": defect,
            "first_defect_space": first,
            "first_defect_stability": stability,
            "verdict": verdict,
            "poisson_kernel_dim": poisson,
        }),
    )?
    .rows(vec![row]))
}

fn run_scenarios(cli: &Cli, ctx: &Context, scenario: Option<&str>, all: bool) -> Result<Vec<Output>, Failure> {
    let mut base = ctx.config.clone().unwrap_or_else(|| ExperimentConfig::new(""));
    base.seed = Some(ctx.seed);
    base.horizon = ctx.horizon;
    base.tolerance.rank_rtol = Some(ctx.tol.rank_rtol);
    base.tolerance.identity_atol = Some(ctx.tol.identity_atol);
    if cli.out.is_some() {
        base.out = cli.out.clone();
    }
    let names: Vec<String> = if all {
        scenario_manifest()
            .iter()
            .filter(|s| !matches!(s.name, "shift" | "creation" | "dshift"))
            .map(|s| s.name.to_string())
            .collect()
    } else if let Some(name) = scenario {
        vec![name.to_string()]
    } else if !base.scenario.is_empty() {
        vec![base.scenario.clone()]
    } else {
        return Err(Failure::Config("give a scenario name, --all, or --config".into()));
    };
    let configs: Vec<ExperimentConfig> = names
        .into_iter()
        .map(|name| ExperimentConfig {
            scenario: name,
            ..base.clone()
        })
        .collect();
    // scenarios are independent; reports are assembled in manifest order
    let results: Vec<Result<ScenarioReport, Error>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || run(c).map(|o| o.report)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    });
    let mut outputs = Vec::new();
    for r in results {
        let report = r?;
        let failed = report.failed_assertions().map(|a| format!("{}: {}", report.scenario, a.name)).collect();
        let rows = report.rows.clone();
        let mut o = Output::new(&report.scenario, &report)?.rows(rows);
        o.failed = failed;
        outputs.push(o);
    }
    Ok(outputs)
}

fn emit(cli: &Cli, outputs: &[Output]) -> Result<(), Failure> {
    let is_run = matches!(cli.command, Command::Run { .. });
    for o in outputs {
        let text = match cli.format {
            Format::Json => serde_json::to_string_pretty(&o.json).map_err(Error::from)? + "\n",
            Format::Csv => match &o.rows {
                Some(rows) => profile_csv(rows)?,
                None => return Err(Failure::Config(format!("{} has no CSV form; use --format json", o.name))),
            },
        };
        match &cli.out {
            // `run` already wrote its report files
            Some(_) if is_run => println!("{}: {}", o.name, if o.failed.is_empty() { "pass" } else { "FAIL" }),
            Some(dir) => {
                fs::create_dir_all(dir).map_err(Error::from)?;
                let ext = if cli.format == Format::Json { "json" } else { "csv" };
                fs::write(dir.join(format!("{}.{ext}", o.name)), text).map_err(Error::from)?;
            }
            None => print!("{text}"),
        }
    }
    let failed: Vec<&String> = outputs.iter().flat_map(|o| &o.failed).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assertion(failed.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("; ")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Context::from_cli(&cli).and_then(|ctx| execute(&cli, &ctx)).and_then(|o| emit(&cli, &o));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion(msg)) => {
            eprintln!("assertion failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
