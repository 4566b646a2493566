//! Named scenarios, config-driven runs, the randomized property suite, and
//! JSON/CSV report files.
//!
//! Reports contain no timings or other run-dependent data, so two runs with
//! the same config produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::drury_arveson::{
    blaschke_model, check_weights, first_defect_polynomials, first_defect_stability, interior_identity_residual,
    quotient_theta_maximality, rank_one_decomposition_check, submodule_defect, submodule_from_inner_with_tolerance,
    submodule_maximality_experiment, submodule_poisson_test, submodule_with_tolerance, weight_gate_residual,
    InnerFunction, Polynomial, SubmoduleBasis,
};
use crate::error::{Error, Result};
use crate::fock::{
    coinvariant_complement, compress_to_coinvariant, creation_tuple, particle_space, poisson_adjoint_apply,
    poisson_kernel, theorem39_battery, CoinvariantCompression, FockTruncation,
};
use crate::maximality::{is_maximal, Mode};
use crate::numeric::{TolerancePolicy, C64, ONE};
use crate::random::{random_zoo, RandomCase, RandomKind};
use crate::tuple::{
    containment_residual, defect_sequence, defect_space, defect_space_by_join, defect_space_split,
    sum_formula_residual, OperatorTuple,
};
use crate::words::{enumerate_words, max_count, MultiIndex};
use crate::zoo::{jordan_pair, nilpotent_shift, zero_tuple};

pub const MANIFEST_VERSION: u32 = 1;

/// Seed used by the random scenarios when the config does not give one.
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Size of the random zoo used by the random scenarios.
pub const DEFAULT_RANDOM_COUNT: usize = 50;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub version: u32,
    pub summary: &'static str,
}

const SCENARIOS: &[ScenarioInfo] = &[
    ScenarioInfo { name: "shift-c3", version: 1, summary: "nilpotent shift on C^3: profile [1,2,3,3], maximal" },
    ScenarioInfo { name: "shift-c5", version: 1, summary: "nilpotent shift on C^5: profile [1,..,5,5], maximal" },
    ScenarioInfo { name: "shift-c8", version: 1, summary: "nilpotent shift on C^8: profile [1,..,8,8], maximal" },
    ScenarioInfo { name: "shift", version: 1, summary: "nilpotent shift on C^m (needs m)" },
    ScenarioInfo { name: "creation-d2-depth3", version: 1, summary: "creation pair at depth 3: [1,3,7,15,15], maximal" },
    ScenarioInfo { name: "creation-d2-depth4", version: 1, summary: "creation pair at depth 4: [1,3,7,15,31,31], D_n = Γ_{n-1}" },
    ScenarioInfo { name: "creation", version: 1, summary: "creation tuple (needs d and n = depth)" },
    ScenarioInfo { name: "dshift-d2-n4", version: 1, summary: "d-shift d=2, N=4: [1,3,6,10,15,15], maximal" },
    ScenarioInfo { name: "dshift-d3-n3", version: 1, summary: "d-shift d=3, N=3: [1,4,10,20,20], maximal" },
    ScenarioInfo { name: "dshift", version: 1, summary: "truncated d-shift (needs d and n = degree)" },
    ScenarioInfo { name: "da-ideal-z1z2-d2", version: 1, summary: "submodule generated by z1, z2 at N=8: [2,5,9,14,20], not maximal" },
    ScenarioInfo { name: "hardy-submodules", version: 1, summary: "θH² for θ in {z², z³, Blaschke(0.3,-0.4)} at N=20: maximal" },
    ScenarioInfo { name: "homogeneous-ideals", version: 1, summary: "homogeneous generator sets in d=2,3: not maximal with witnesses" },
    ScenarioInfo { name: "da-conjecture-sweep", version: 1, summary: "evidence table for proper submodules with d >= 2 (no assertions on verdicts)" },
    ScenarioInfo { name: "model-theta-monomials", version: 1, summary: "H_θ for θ = z^m, m <= 6: minimal polynomial degree m" },
    ScenarioInfo { name: "model-theta-blaschke", version: 1, summary: "H_θ for finite Blaschke θ: dimensions, v_i agreement, defect spans" },
    ScenarioInfo { name: "poisson-random", version: 1, summary: "Poisson kernel Gram, adjoint and intertwining identities on random tuples" },
    ScenarioInfo { name: "identity-suite", version: 1, summary: "sum formula, join, split and containment identities on random tuples" },
    ScenarioInfo { name: "theorem39-zoo", version: 1, summary: "maximality / annihilator / kernel equivalence on a zoo of pure Δ=1 tuples" },
    ScenarioInfo { name: "da-weights", version: 1, summary: "monomial weights against the kernel expansion, interior identity" },
];

pub fn scenario_manifest() -> &'static [ScenarioInfo] {
    SCENARIOS
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub rank_rtol: Option<f64>,
    pub identity_atol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    /// Truncation degree or Fock depth.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub tolerance: ToleranceOverrides,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Number of random tuples for the random scenarios.
    #[serde(default)]
    pub count: Option<usize>,
    /// Directory for the JSON and CSV reports.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(scenario: impl Into<String>) -> Self {
        Self {
            scenario: scenario.into(),
            mode: None,
            d: None,
            m: None,
            n: None,
            horizon: None,
            tolerance: ToleranceOverrides::default(),
            seed: None,
            count: None,
            out: None,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn tolerance_policy(&self) -> Result<TolerancePolicy> {
        let base = TolerancePolicy::default();
        let tol = TolerancePolicy::new(
            self.tolerance.rank_rtol.unwrap_or(base.rank_rtol),
            self.tolerance.identity_atol.unwrap_or(base.identity_atol),
        )?;
        Ok(tol)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// One CSV row: a tuple with its defect profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub label: String,
    pub mode: Mode,
    pub certified_depth: Option<usize>,
    pub verdict: String,
    pub deltas: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub version: u32,
    pub manifest_version: u32,
    pub seed: u64,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
    pub rows: Vec<ProfileRow>,
    pub details: Value,
}

impl ScenarioReport {
    pub fn failed_assertions(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn to_csv(&self) -> Result<String> {
        profile_csv(&self.rows)
    }
}

/// CSV with columns `label, n1..nH, mode, certified_depth, verdict`.
pub fn profile_csv(rows: &[ProfileRow]) -> Result<String> {
    let width = rows.iter().map(|r| r.deltas.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["label".to_string()];
    header.extend((1..=width).map(|n| format!("n{n}")));
    header.extend(["mode", "certified_depth", "verdict"].map(String::from));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.label.clone()];
        rec.extend((0..width).map(|i| r.deltas.get(i).map(|v| v.to_string()).unwrap_or_default()));
        rec.push(r.mode.to_string());
        rec.push(r.certified_depth.map(|v| v.to_string()).unwrap_or_default());
        rec.push(r.verdict.clone());
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[derive(Default)]
struct Builder {
    assertions: Vec<Assertion>,
    rows: Vec<ProfileRow>,
    details: serde_json::Map<String, Value>,
}

impl Builder {
    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn row(&mut self, label: impl Into<String>, mode: Mode, certified: Option<usize>, verdict: &str, deltas: Vec<usize>) {
        self.rows.push(ProfileRow {
            label: label.into(),
            mode,
            certified_depth: certified,
            verdict: verdict.into(),
            deltas,
        });
    }

    fn detail(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.details.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }
}

fn verdict_word(maximal: bool) -> &'static str {
    if maximal {
        "maximal"
    } else {
        "not-maximal"
    }
}

enum Scenario {
    Shift { m: usize },
    Creation { d: usize, depth: usize },
    DShift { d: usize, n: usize },
    DaIdeal,
    Hardy,
    Homogeneous,
    ConjectureSweep,
    ModelMonomials,
    ModelBlaschke,
    PoissonRandom,
    IdentitySuite,
    Theorem39Zoo,
    DaWeights,
}

fn required(value: Option<usize>, field: &str, scenario: &str) -> Result<usize> {
    value.ok_or_else(|| Error::InvalidArgument(format!("scenario {scenario} needs `{field}`")))
}

fn resolve(config: &ExperimentConfig) -> Result<Scenario> {
    let name = config.scenario.as_str();
    Ok(match name {
        "shift-c3" => Scenario::Shift { m: 3 },
        "shift-c5" => Scenario::Shift { m: 5 },
        "shift-c8" => Scenario::Shift { m: 8 },
        "shift" => Scenario::Shift {
            m: required(config.m, "m", name)?,
        },
        "creation-d2-depth3" => Scenario::Creation { d: 2, depth: 3 },
        "creation-d2-depth4" => Scenario::Creation { d: 2, depth: 4 },
        "creation" => Scenario::Creation {
            d: required(config.d, "d", name)?,
            depth: required(config.n, "n", name)?,
        },
        "dshift-d2-n4" => Scenario::DShift { d: 2, n: 4 },
        "dshift-d3-n3" => Scenario::DShift { d: 3, n: 3 },
        "dshift" => Scenario::DShift {
            d: required(config.d, "d", name)?,
            n: required(config.n, "n", name)?,
        },
        "da-ideal-z1z2-d2" => Scenario::DaIdeal,
        "hardy-submodules" => Scenario::Hardy,
        "homogeneous-ideals" => Scenario::Homogeneous,
        "da-conjecture-sweep" => Scenario::ConjectureSweep,
        "model-theta-monomials" => Scenario::ModelMonomials,
        "model-theta-blaschke" => Scenario::ModelBlaschke,
        "poisson-random" => Scenario::PoissonRandom,
        "identity-suite" => Scenario::IdentitySuite,
        "theorem39-zoo" => Scenario::Theorem39Zoo,
        "da-weights" => Scenario::DaWeights,
        _ => return Err(Error::InvalidArgument(format!("unknown scenario `{name}`"))),
    })
}

/// Report files written by [`run`].
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: ScenarioReport,
    pub json_path: Option<PathBuf>,
    pub csv_path: Option<PathBuf>,
}

/// Runs the configured scenario and writes `<scenario>.json` and
/// `<scenario>.csv` into `config.out` when set. Configuration problems are
/// errors; failed checks are recorded in the report.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    let report = run_report(config)?;
    let (json_path, csv_path) = match &config.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let json_path = dir.join(format!("{}.json", report.scenario));
            let csv_path = dir.join(format!("{}.csv", report.scenario));
            fs::write(&json_path, report.to_json()?)?;
            fs::write(&csv_path, report.to_csv()?)?;
            (Some(json_path), Some(csv_path))
        }
        None => (None, None),
    };
    Ok(RunOutcome {
        report,
        json_path,
        csv_path,
    })
}

/// Same as [`run`] without touching the filesystem.
pub fn run_report(config: &ExperimentConfig) -> Result<ScenarioReport> {
    let tol = config.tolerance_policy()?;
    let scenario = resolve(config)?;
    let mut b = Builder::default();
    let outcome = match scenario {
        Scenario::Shift { m } => shift_scenario(&mut b, config, m, tol),
        Scenario::Creation { d, depth } => creation_scenario(&mut b, config, d, depth, tol),
        Scenario::DShift { d, n } => dshift_scenario(&mut b, config, d, n, tol),
        Scenario::DaIdeal => da_ideal_scenario(&mut b, tol),
        Scenario::Hardy => hardy_scenario(&mut b, tol),
        Scenario::Homogeneous => homogeneous_scenario(&mut b, tol),
        Scenario::ConjectureSweep => conjecture_sweep(&mut b, tol),
        Scenario::ModelMonomials => model_monomials_scenario(&mut b),
        Scenario::ModelBlaschke => model_blaschke_scenario(&mut b),
        Scenario::PoissonRandom => poisson_random_scenario(&mut b, config, tol),
        Scenario::IdentitySuite => identity_suite_scenario(&mut b, config, tol),
        Scenario::Theorem39Zoo => theorem39_zoo_scenario(&mut b, tol),
        Scenario::DaWeights => da_weights_scenario(&mut b),
    };
    if let Err(e) = outcome {
        b.check("computation", false, e.to_string());
    }
    let version = SCENARIOS
        .iter()
        .find(|s| s.name == config.scenario)
        .map_or(0, |s| s.version);
    Ok(ScenarioReport {
        scenario: config.scenario.clone(),
        version,
        manifest_version: MANIFEST_VERSION,
        seed: config.seed(),
        passed: b.assertions.iter().all(|a| a.passed),
        assertions: b.assertions,
        rows: b.rows,
        details: Value::Object(b.details),
    })
}

fn shift_scenario(b: &mut Builder, config: &ExperimentConfig, m: usize, tol: TolerancePolicy) -> Result<()> {
    let t = nilpotent_shift(m).with_tolerance(tol)?;
    let horizon = config.horizon.unwrap_or(m + 1);
    let verdict = is_maximal(&t, horizon)?;
    let expected: Vec<usize> = (1..=horizon).map(|n| n.min(m)).collect();
    b.check("profile", verdict.deltas == expected, format!("{:?} vs {:?}", verdict.deltas, expected));
    b.check("maximal", verdict.is_maximal, format!("departure {:?}", verdict.departure_index));
    b.row(format!("shift-c{m}"), Mode::Commuting, None, verdict_word(verdict.is_maximal), verdict.deltas.clone());
    b.detail("verdict", &verdict)
}

fn creation_scenario(
    b: &mut Builder,
    config: &ExperimentConfig,
    d: usize,
    depth: usize,
    tol: TolerancePolicy,
) -> Result<()> {
    let t = creation_tuple(d, depth).as_noncommuting().with_tolerance(tol)?;
    let horizon = config.horizon.unwrap_or(depth + 2);
    let fock = FockTruncation::new(d, depth);
    let verdict = is_maximal(&t, horizon)?;
    let expected: Vec<usize> = (1..=horizon).map(|n| max_count(d, n, 1, false).min(fock.dim())).collect();
    b.check("profile", verdict.deltas == expected, format!("{:?} vs {:?}", verdict.deltas, expected));
    b.check("maximal", verdict.is_maximal, format!("departure {:?}", verdict.departure_index));
    let mut distances = Vec::new();
    for n in 1..=depth.min(horizon) {
        let dist = defect_space(&t, n).distance(&particle_space(&fock, n - 1)?);
        distances.push(dist);
    }
    let worst = distances.iter().cloned().fold(0.0, f64::max);
    b.check("defect spaces are particle spaces", worst < 1e-10, format!("max distance {worst:.3e}"));
    b.row(
        format!("creation-d{d}-depth{depth}"),
        Mode::NonCommuting,
        None,
        verdict_word(verdict.is_maximal),
        verdict.deltas.clone(),
    );
    b.detail("verdict", &verdict)?;
    b.detail("particle_space_distances", distances)
}

fn dshift_scenario(b: &mut Builder, config: &ExperimentConfig, d: usize, n: usize, tol: TolerancePolicy) -> Result<()> {
    check_weights(d)?;
    let t = crate::drury_arveson::dshift(d, n).with_tolerance(tol)?;
    let horizon = config.horizon.unwrap_or(n + 2);
    let verdict = is_maximal(&t, horizon)?;
    let expected: Vec<usize> = (1..=horizon).map(|k| max_count(d, k, 1, true).min(t.dim())).collect();
    b.check("profile", verdict.deltas == expected, format!("{:?} vs {:?}", verdict.deltas, expected));
    b.check("maximal", verdict.is_maximal, format!("departure {:?}", verdict.departure_index));
    let interior = interior_identity_residual(d, n);
    b.check("interior identity", interior < 1e-10, format!("{interior:.3e}"));
    b.row(format!("dshift-d{d}-n{n}"), Mode::Commuting, None, verdict_word(verdict.is_maximal), verdict.deltas.clone());
    b.detail("verdict", &verdict)
}

fn submodule_summary(s: &SubmoduleBasis) -> Value {
    json!({
        "d": s.d,
        "truncation": s.truncation,
        "generators": s.generators.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "graded": s.graded,
        "dim": s.dim,
        "certified_defect_depth": s.certified_defect_depth,
    })
}

fn da_ideal_scenario(b: &mut Builder, tol: TolerancePolicy) -> Result<()> {
    let gens = [Polynomial::variable(2, 1), Polynomial::variable(2, 2)];
    let s = submodule_with_tolerance(&gens, 2, 8, tol)?;
    let horizon = 5;
    let verdict = submodule_maximality_experiment(&s, horizon)?;
    let expected: Vec<usize> = (1..=horizon).map(|m| crate::words::binomial(m + 2, 2) - 1).collect();
    b.check("profile", verdict.deltas == expected, format!("{:?} vs {:?}", verdict.deltas, expected));
    b.check(
        "below commuting-maximal profile from m = 2",
        verdict.deltas.iter().zip(&verdict.expected).skip(1).all(|(a, e)| a < e),
        format!("{:?} vs {:?}", verdict.deltas, verdict.expected),
    );
    b.check("not maximal", !verdict.is_maximal, format!("departure {:?}", verdict.departure_index));
    let residual = verdict.witness_residual.unwrap_or(f64::INFINITY);
    b.check("witness residual", residual < 1e-8, format!("{residual:.3e}"));
    let rank_one = rank_one_decomposition_check(&s, &gens)?;
    b.check(
        "rank-one decomposition",
        rank_one.projection_residual < 1e-10 && rank_one.defect_residual < 1e-10,
        format!("{:.3e}, {:.3e}", rank_one.projection_residual, rank_one.defect_residual),
    );
    let poisson = submodule_poisson_test(&s, 1)?;
    b.check("poisson kernel has a kernel at degree 1", poisson > 0, format!("dim {poisson}"));
    b.row("ideal(z1,z2)", Mode::Commuting, Some(s.certified_defect_depth), "not-maximal", verdict.deltas.clone());
    let d1: Vec<String> = first_defect_polynomials(&s).iter().map(|p| p.to_string()).collect();
    b.detail("submodule", submodule_summary(&s))?;
    b.detail("first_defect_space", d1)?;
    b.detail("verdict", &verdict)?;
    b.detail("rank_one", rank_one)?;
    b.detail("poisson_kernel_dim_degree_1", poisson)
}

/// Poisson counts vanish exactly up to degree `horizon - 1` when maximal.
fn poisson_agrees(s: &SubmoduleBasis, horizon: usize, maximal: bool) -> Result<bool> {
    let zero = submodule_poisson_test(s, horizon - 1)? == 0;
    Ok(zero == maximal)
}

fn hardy_scenario(b: &mut Builder, tol: TolerancePolicy) -> Result<()> {
    let thetas = [
        ("z^2", InnerFunction::Monomial { m: 2 }),
        ("z^3", InnerFunction::Monomial { m: 3 }),
        ("blaschke(0.3,-0.4)", InnerFunction::blaschke(&[C64::new(0.3, 0.0), C64::new(-0.4, 0.0)])?),
    ];
    let mut verdicts = Vec::new();
    for (label, theta) in thetas {
        let s = submodule_from_inner_with_tolerance(&theta, 20, tol)?;
        let horizon = s.certified_defect_depth;
        let v = submodule_maximality_experiment(&s, horizon)?;
        b.check(format!("{label} maximal"), v.is_maximal, format!("{:?}", v.deltas));
        b.check(format!("{label} poisson cross-check"), poisson_agrees(&s, horizon, v.is_maximal)?, "");
        b.row(format!("theta={label}"), Mode::Commuting, Some(horizon), verdict_word(v.is_maximal), v.deltas.clone());
        verdicts.push(json!({ "theta": theta, "certified_defect_depth": horizon, "verdict": v }));
    }
    b.detail("submodules", verdicts)
}

fn homogeneous_sets() -> Vec<(&'static str, usize, Vec<Polynomial>, usize)> {
    let mono = |e: &[u32]| Polynomial::monomial(MultiIndex::new(e.to_vec()));
    vec![
        ("(z1,z2)", 2, vec![Polynomial::variable(2, 1), Polynomial::variable(2, 2)], 8),
        ("(z1,z2,z3)", 3, (1..=3).map(|i| Polynomial::variable(3, i)).collect(), 5),
        ("(z1^2,z1z2,z2^2)", 2, vec![mono(&[2, 0]), mono(&[1, 1]), mono(&[0, 2])], 8),
    ]
}

fn homogeneous_scenario(b: &mut Builder, tol: TolerancePolicy) -> Result<()> {
    let mut out = Vec::new();
    for (label, d, gens, n) in homogeneous_sets() {
        let s = submodule_with_tolerance(&gens, d, n, tol)?;
        let horizon = s.certified_defect_depth.min(4);
        let v = submodule_maximality_experiment(&s, horizon)?;
        let residual = v.witness_residual.unwrap_or(f64::INFINITY);
        b.check(
            format!("{label} not maximal with witness"),
            !v.is_maximal && !v.witness.is_empty() && residual < 1e-8,
            format!("departure {:?}, witness residual {residual:.3e}", v.departure_index),
        );
        b.check(format!("{label} poisson cross-check"), poisson_agrees(&s, horizon, v.is_maximal)?, "");
        b.row(label, Mode::Commuting, Some(s.certified_defect_depth), verdict_word(v.is_maximal), v.deltas.clone());
        out.push(json!({ "submodule": submodule_summary(&s), "verdict": v }));
    }
    b.detail("submodules", out)
}

fn conjecture_sweep(b: &mut Builder, tol: TolerancePolicy) -> Result<()> {
    let mono = |e: &[u32]| Polynomial::monomial(MultiIndex::new(e.to_vec()));
    let sets: Vec<(&str, usize, Vec<Polynomial>)> = vec![
        ("(z1,z2)", 2, vec![mono(&[1, 0]), mono(&[0, 1])]),
        ("(z1,z2^2)", 2, vec![mono(&[1, 0]), mono(&[0, 2])]),
        ("(z1^2,z2^2)", 2, vec![mono(&[2, 0]), mono(&[0, 2])]),
        ("(z1^2,z1z2,z2^2)", 2, vec![mono(&[2, 0]), mono(&[1, 1]), mono(&[0, 2])]),
        ("(z1z2)", 2, vec![mono(&[1, 1])]),
        ("(z1,z2,z3)", 3, vec![mono(&[1, 0, 0]), mono(&[0, 1, 0]), mono(&[0, 0, 1])]),
    ];
    let mut table = Vec::new();
    for (label, d, gens) in sets {
        let n = if d == 2 { 8 } else { 5 };
        let s = submodule_with_tolerance(&gens, d, n, tol)?;
        let stability = first_defect_stability(&s)?;
        let horizon = s.certified_defect_depth.min(4);
        let deltas = submodule_defect(&s, horizon).profile.deltas;
        let verdict = if stability.stable {
            verdict_word(submodule_maximality_experiment(&s, horizon)?.is_maximal)
        } else {
            "no-verdict"
        };
        b.row(label, Mode::Commuting, Some(s.certified_defect_depth), verdict, deltas.clone());
        table.push(json!({
            "submodule": submodule_summary(&s),
            "first_defect_stability": stability,
            "deltas": deltas,
            "verdict": verdict,
        }));
    }
    b.check("sweep completed", true, "evidence only; no verdict is asserted");
    b.detail("evidence", table)
}

fn model_monomials_scenario(b: &mut Builder) -> Result<()> {
    let mut out = Vec::new();
    for m in 1..=6 {
        let theta = InnerFunction::Monomial { m };
        let r = quotient_theta_maximality(&theta, 2 * m, m + 1)?;
        b.check(
            format!("z^{m}: minimal polynomial degree = dim"),
            r.minimal_polynomial.degree() == m && r.dim == m,
            format!("degree {}, dim {}", r.minimal_polynomial.degree(), r.dim),
        );
        b.check(format!("z^{m}: maximal"), r.maximal, format!("{:?}", r.deltas));
        b.row(format!("theta=z^{m}"), Mode::Commuting, None, verdict_word(r.maximal), r.deltas.clone());
        out.push(r);
    }
    b.detail("models", out)
}

fn model_blaschke_scenario(b: &mut Builder) -> Result<()> {
    let re = |x: f64| C64::new(x, 0.0);
    let thetas = [
        ("blaschke(0.5)", vec![re(0.5)]),
        ("blaschke(0.7)", vec![re(0.7)]),
        ("blaschke(0.3,-0.4)", vec![re(0.3), re(-0.4)]),
        ("blaschke(0,0.5)", vec![re(0.0), re(0.5)]),
        ("blaschke(0.2+0.5i,-0.6,0.1-0.3i)", vec![C64::new(0.2, 0.5), re(-0.6), C64::new(0.1, -0.3)]),
    ];
    let mut out = Vec::new();
    for (label, zeros) in thetas {
        let theta = InnerFunction::blaschke(&zeros)?;
        let deg = theta.degree();
        let model = blaschke_model(&theta, 12)?;
        let v_res = model.v_residual(6)?;
        let span = (1..=deg)
            .map(|n| model.defect_span_residual(n))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let q = quotient_theta_maximality(&theta, 12, deg + 1)?;
        b.check(format!("{label}: dim = degree"), model.dim == deg, format!("{}", model.dim));
        b.check(format!("{label}: v_i agree"), v_res < 1e-8, format!("{v_res:.3e}"));
        b.check(format!("{label}: D_n = span v_i"), span < 1e-7, format!("{span:.3e}"));
        let align = q.alignment_residual.unwrap_or(f64::INFINITY);
        b.check(format!("{label}: minimal polynomial = numerator"), align < 1e-8, format!("{align:.3e}"));
        b.row(label, Mode::Commuting, None, verdict_word(q.maximal), q.deltas.clone());
        out.push(json!({ "model": model, "v_residual": v_res, "defect_span_residual": span, "quotient": q }));
    }
    b.detail("models", out)
}

/// Poisson-kernel identities for one tuple.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PoissonResiduals {
    pub gram: f64,
    pub adjoint: f64,
    pub intertwining: f64,
}

pub fn poisson_residuals(t: &OperatorTuple, depth: usize) -> Result<PoissonResiduals> {
    let k = poisson_kernel(t, depth)?;
    let fock = FockTruncation::new(t.arity(), depth);
    let xi = k.defect_basis().basis();
    let mut adjoint: f64 = 0.0;
    for f in enumerate_words(t.arity(), depth) {
        for j in 0..k.defect_dim() {
            let col = k.adjoint_column(&fock, &f, j).expect("word within depth");
            let v: DVector<C64> = xi.column(j).into_owned();
            let direct = poisson_adjoint_apply(t, &f, &v)?;
            adjoint = adjoint.max((col - direct).camax());
        }
    }
    Ok(PoissonResiduals {
        gram: k.gram_residual(t),
        adjoint,
        intertwining: k.intertwining_residual(t),
    })
}

/// Identity residuals and subspace distances for one tuple, `n <= 4`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IdentityResiduals {
    pub sum_formula: f64,
    pub join_distance: f64,
    pub split_distance: f64,
    pub containment: f64,
}

pub fn identity_residuals(t: &OperatorTuple) -> Result<IdentityResiduals> {
    let mut r = IdentityResiduals {
        sum_formula: 0.0,
        join_distance: 0.0,
        split_distance: 0.0,
        containment: 0.0,
    };
    for n in 1..=4 {
        r.sum_formula = r.sum_formula.max(sum_formula_residual(t, n));
        r.join_distance = r.join_distance.max(defect_space_by_join(t, n).distance(&defect_space(t, n)));
        for m in n + 1..=4 {
            let split = defect_space_split(t, n, m)?;
            r.split_distance = r.split_distance.max(split.distance(&defect_space(t, m)));
        }
        if n < 4 {
            r.containment = r.containment.max(containment_residual(t, n));
        }
    }
    Ok(r)
}

/// Random zoo revalidated under `tol`; rejected cases become one failed check.
fn random_cases(b: &mut Builder, config: &ExperimentConfig, tol: TolerancePolicy) -> Vec<(RandomCase, OperatorTuple)> {
    let mut rejected = Vec::new();
    let mut out = Vec::new();
    for case in random_zoo(config.seed(), config.count.unwrap_or(DEFAULT_RANDOM_COUNT)) {
        match case.tuple.with_tolerance(tol) {
            Ok(t) => out.push((case, t)),
            Err(e) => rejected.push(format!("case {} (seed {}): {e}", case.index, case.seed)),
        }
    }
    b.check("validation", rejected.is_empty(), rejected.join("; "));
    out
}

fn poisson_random_scenario(b: &mut Builder, config: &ExperimentConfig, tol: TolerancePolicy) -> Result<()> {
    let mut worst = PoissonResiduals {
        gram: 0.0,
        adjoint: 0.0,
        intertwining: 0.0,
    };
    let mut per_case = Vec::new();
    for (case, t) in random_cases(b, config, tol) {
        let r = poisson_residuals(&t, case.depth)?;
        worst.gram = worst.gram.max(r.gram);
        worst.adjoint = worst.adjoint.max(r.adjoint);
        worst.intertwining = worst.intertwining.max(r.intertwining);
        per_case.push(json!({ "index": case.index, "seed": case.seed, "kind": case.kind, "depth": case.depth, "residuals": r }));
    }
    let atol = tol.identity_atol;
    b.check("gram identity", worst.gram <= atol, format!("{:.3e}", worst.gram));
    b.check("adjoint columns", worst.adjoint <= atol, format!("{:.3e}", worst.adjoint));
    b.check("intertwining", worst.intertwining <= atol, format!("{:.3e}", worst.intertwining));
    b.detail("worst", worst)?;
    b.detail("cases", per_case)
}

fn identity_suite_scenario(b: &mut Builder, config: &ExperimentConfig, tol: TolerancePolicy) -> Result<()> {
    let mut worst = IdentityResiduals {
        sum_formula: 0.0,
        join_distance: 0.0,
        split_distance: 0.0,
        containment: 0.0,
    };
    let mut per_case = Vec::new();
    for (case, t) in random_cases(b, config, tol) {
        let r = identity_residuals(&t)?;
        worst.sum_formula = worst.sum_formula.max(r.sum_formula);
        worst.join_distance = worst.join_distance.max(r.join_distance);
        worst.split_distance = worst.split_distance.max(r.split_distance);
        worst.containment = worst.containment.max(r.containment);
        let profile = defect_sequence(&t, 6);
        let mode = Mode::of(&t);
        b.row(
            format!("random-{}", case.index),
            mode,
            None,
            "n/a",
            profile.deltas.clone(),
        );
        per_case.push(json!({ "index": case.index, "seed": case.seed, "kind": case.kind, "residuals": r }));
    }
    b.check("sum formula", worst.sum_formula <= tol.identity_atol, format!("{:.3e}", worst.sum_formula));
    b.check("join identity", worst.join_distance < 1e-7, format!("{:.3e}", worst.join_distance));
    b.check("semigroup split", worst.split_distance < 1e-7, format!("{:.3e}", worst.split_distance));
    b.check("containment", worst.containment < 1e-8, format!("{:.3e}", worst.containment));
    b.detail("worst", worst)?;
    b.detail("cases", per_case)
}

/// A member of the equivalence-battery zoo; `expect_maximal` is the intended outcome.
pub struct BatteryCase {
    pub label: String,
    pub tuple: OperatorTuple,
    pub horizon: usize,
    pub compression: Option<CoinvariantCompression>,
    pub expect_maximal: bool,
}

/// Pure `Δ = 1` tuples: maximal ones and engineered non-maximal ones.
pub fn battery_zoo() -> Result<Vec<BatteryCase>> {
    let case = |label: &str, tuple: OperatorTuple, horizon: usize, expect_maximal: bool| BatteryCase {
        label: label.into(),
        tuple,
        horizon,
        compression: None,
        expect_maximal,
    };
    let full = compress_to_coinvariant(2, 3, &crate::numeric::Subspace::full(15))?;
    let mut e = DVector::zeros(15);
    e[1] = ONE;
    e[2] = -ONE;
    let q = coinvariant_complement(2, 3, &[e])?;
    let deficient = compress_to_coinvariant(2, 3, &q)?;
    let two_zero = blaschke_model(&InnerFunction::blaschke(&[C64::new(0.3, 0.0), C64::new(-0.4, 0.0)])?, 8)?;
    let z4 = blaschke_model(&InnerFunction::Monomial { m: 4 }, 8)?;
    let mut zoo = vec![
        case("shift-c3", nilpotent_shift(3), 2, true),
        case("shift-c5", nilpotent_shift(5), 4, true),
        case("shift-c8", nilpotent_shift(8), 7, true),
        case("creation-d2-depth2", creation_tuple(2, 2), 2, true),
        case("creation-d2-depth3", creation_tuple(2, 3), 3, true),
        case("creation-d3-depth2", creation_tuple(3, 2), 2, true),
        case("model-blaschke(0.3,-0.4)", two_zero.tuple()?, 1, true),
        case("model-z^4", z4.tuple()?, 3, true),
        case("jordan-pair", jordan_pair(), 2, false),
        case("dshift-d2-n3", crate::drury_arveson::dshift(2, 3), 2, false),
        case("zero-pair-c1", zero_tuple(2, 1), 1, false),
        case("shift-c3-beyond-dim", nilpotent_shift(3), 3, false),
    ];
    zoo.push(BatteryCase {
        label: "compression-full-d2-depth3".into(),
        tuple: full.tuple.clone(),
        horizon: 3,
        compression: Some(full),
        expect_maximal: true,
    });
    zoo.push(BatteryCase {
        label: "compression-rank-deficient-d2-depth3".into(),
        tuple: deficient.tuple.clone(),
        horizon: 2,
        compression: Some(deficient),
        expect_maximal: false,
    });
    Ok(zoo)
}

/// Purity steps used for the battery zoo.
pub const BATTERY_PURITY_STEPS: usize = 200;

fn theorem39_zoo_scenario(b: &mut Builder, tol: TolerancePolicy) -> Result<()> {
    let mut out = Vec::new();
    let (mut positive, mut negative) = (0, 0);
    for c in battery_zoo()? {
        let t = c.tuple.with_tolerance(tol)?;
        let r = theorem39_battery(&t, c.horizon, BATTERY_PURITY_STEPS, c.compression.as_ref())?;
        if let Some(reason) = &r.skipped {
            b.check(format!("{}: hypotheses", c.label), false, reason.clone());
        } else {
            b.check(format!("{}: conditions agree", c.label), r.agree, format!("{r:?}"));
            b.check(
                format!("{}: expected outcome", c.label),
                r.maximal == c.expect_maximal,
                format!("maximal = {}", r.maximal),
            );
            if r.agree && r.maximal {
                positive += 1;
            } else if r.agree {
                negative += 1;
            }
        }
        b.row(&c.label, Mode::NonCommuting, None, verdict_word(r.maximal), r.deltas.clone());
        out.push(json!({ "label": c.label, "report": r }));
    }
    b.check("at least 6 positive cases", positive >= 6, format!("{positive}"));
    b.check("at least 2 negative cases", negative >= 2, format!("{negative}"));
    b.detail("battery", out)
}

fn da_weights_scenario(b: &mut Builder) -> Result<()> {
    let mut out = Vec::new();
    for d in [2, 3] {
        let residual = weight_gate_residual(d, 4);
        b.check(format!("d={d} weights"), residual < 1e-12, format!("{residual:.3e}"));
        let interior = interior_identity_residual(d, 4);
        b.check(format!("d={d} interior identity"), interior < 1e-10, format!("{interior:.3e}"));
        out.push(json!({ "d": d, "gram_residual": residual, "interior_identity_residual": interior }));
    }
    b.detail("weights", out)
}

/// One named check across the random zoo.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub threshold: f64,
    pub evaluated: usize,
    pub skipped: usize,
    pub worst: f64,
    pub failures: Vec<Failure>,
}

/// A failing case, reproducible with `random_case(seed_base, index)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Failure {
    pub index: usize,
    pub seed: u64,
    pub kind: RandomKind,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PropertySummary {
    pub seed: u64,
    pub count: usize,
    pub tolerance: TolerancePolicy,
    pub checks: Vec<CheckSummary>,
    pub all_passed: bool,
}

struct Tally {
    checks: Vec<CheckSummary>,
}

impl Tally {
    fn new(checks: &[(&str, f64)]) -> Self {
        Self {
            checks: checks
                .iter()
                .map(|&(name, threshold)| CheckSummary {
                    name: name.into(),
                    threshold,
                    evaluated: 0,
                    skipped: 0,
                    worst: 0.0,
                    failures: Vec::new(),
                })
                .collect(),
        }
    }

    /// `value = None` marks the check as not applicable to this case.
    fn record(&mut self, name: &str, case: &RandomCase, value: Option<f64>) {
        let c = self.checks.iter_mut().find(|c| c.name == name).expect("declared check");
        match value {
            None => c.skipped += 1,
            Some(v) => {
                c.evaluated += 1;
                if v.is_nan() || v > c.worst {
                    c.worst = v;
                }
                if v.is_nan() || v > c.threshold {
                    c.failures.push(Failure {
                        index: case.index,
                        seed: case.seed,
                        kind: case.kind,
                        value: v,
                    });
                }
            }
        }
    }
}

/// Runs every randomized invariant on `count` zoo tuples. Identity checks use
/// `tol.identity_atol` as threshold; subspace equalities use `1e-7`.
/// Boolean properties are recorded as `0` (holds) or `1` (violated).
pub fn property_suite(seed: u64, count: usize, tol: TolerancePolicy) -> Result<PropertySummary> {
    tol.validate()?;
    let atol = tol.identity_atol;
    let check_table = [
        ("validation", 0.0),
        ("sum-formula", atol),
        ("join-identity", 1e-7),
        ("semigroup-split", 1e-7),
        ("containment", 1e-8),
        ("monotone", 0.0),
        ("max-count-bound", 0.0),
        ("stabilization", 0.0),
        ("poisson-gram", atol),
        ("poisson-adjoint", atol),
        ("intertwining", atol),
        ("battery-coherence", 0.0),
    ];
    let mut tally = Tally::new(if count == 0 { &[] } else { &check_table });
    let flag = |ok: bool| Some(if ok { 0.0 } else { 1.0 });
    for case in random_zoo(seed, count) {
        let t = match case.tuple.with_tolerance(tol) {
            Ok(t) => {
                tally.record("validation", &case, Some(0.0));
                t
            }
            Err(_) => {
                tally.record("validation", &case, Some(1.0));
                continue;
            }
        };
        let ids = identity_residuals(&t)?;
        tally.record("sum-formula", &case, Some(ids.sum_formula));
        tally.record("join-identity", &case, Some(ids.join_distance));
        tally.record("semigroup-split", &case, Some(ids.split_distance));
        tally.record("containment", &case, Some(ids.containment));

        let profile = defect_sequence(&t, 6);
        let delta = profile.first();
        tally.record("monotone", &case, flag(profile.is_monotone()));
        let bounded = profile
            .deltas
            .iter()
            .enumerate()
            .all(|(i, &v)| v <= max_count(t.arity(), i + 1, delta, t.is_commuting()));
        tally.record("max-count-bound", &case, flag(bounded));
        tally.record("stabilization", &case, flag(profile.stabilization_is_permanent()));

        if delta == 0 {
            for name in ["poisson-gram", "poisson-adjoint", "intertwining", "battery-coherence"] {
                tally.record(name, &case, None);
            }
            continue;
        }
        let p = poisson_residuals(&t, case.depth)?;
        tally.record("poisson-gram", &case, Some(p.gram));
        tally.record("poisson-adjoint", &case, Some(p.adjoint));
        tally.record("intertwining", &case, Some(p.intertwining));

        let battery = theorem39_battery(&t, case.depth.min(3), 100, None)?;
        let coherent = battery.skipped.is_none().then_some(battery.agree);
        tally.record("battery-coherence", &case, coherent.and_then(flag));
    }
    let all_passed = tally.checks.iter().all(|c| c.failures.is_empty());
    Ok(PropertySummary {
        seed,
        count,
        tolerance: tol,
        checks: tally.checks,
        all_passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_named(name: &str) -> ScenarioReport {
        run_report(&ExperimentConfig::new(name)).unwrap()
    }

    #[test]
    fn preset_csv_rows() {
        let r = run_named("shift-c5");
        assert!(r.passed, "{:?}", r.assertions);
        assert!(r.to_csv().unwrap().contains("shift-c5,1,2,3,4,5,5,commuting,,maximal"));
        let r = run_named("creation-d2-depth3");
        assert!(r.passed);
        assert!(r.to_csv().unwrap().contains(",1,3,7,15,15,"));
        let r = run_named("da-ideal-z1z2-d2");
        assert!(r.passed, "{:?}", r.assertions);
        assert!(r.to_csv().unwrap().contains(",2,5,9,14,20,commuting,6,not-maximal"));
    }

    #[test]
    fn every_preset_passes() {
        for s in scenario_manifest() {
            if matches!(s.name, "shift" | "creation" | "dshift") {
                continue;
            }
            let mut config = ExperimentConfig::new(s.name);
            config.count = Some(6);
            let r = run_report(&config).unwrap();
            assert!(r.passed, "{}: {:?}", s.name, r.failed_assertions().collect::<Vec<_>>());
        }
    }

    #[test]
    fn parametric_scenarios_need_parameters() {
        assert!(run_report(&ExperimentConfig::new("shift")).is_err());
        let mut c = ExperimentConfig::new("creation");
        c.d = Some(3);
        c.n = Some(2);
        assert!(run_report(&c).unwrap().passed);
        assert!(run_report(&ExperimentConfig::new("no-such-scenario")).is_err());
    }

    #[test]
    fn config_json_and_tolerance() {
        let c: ExperimentConfig =
            serde_json::from_str(r#"{"scenario":"shift","m":4,"tolerance":{"rank_rtol":1e-9}}"#).unwrap();
        assert_eq!(c.m, Some(4));
        assert_eq!(c.tolerance_policy().unwrap().rank_rtol, 1e-9);
        let bad: ExperimentConfig = serde_json::from_str(r#"{"scenario":"shift","tolerance":{"identity_atol":2.0}}"#).unwrap();
        assert!(bad.tolerance_policy().is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"scenario":"x","bogus":1}"#).is_err());
    }

    #[test]
    fn reports_are_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig::new("identity-suite");
        c.count = Some(4);
        c.seed = Some(9);
        c.out = Some(dir.path().join("a"));
        let a = run(&c).unwrap();
        c.out = Some(dir.path().join("b"));
        let b = run(&c).unwrap();
        let read = |p: &Option<PathBuf>| fs::read(p.as_ref().unwrap()).unwrap();
        assert_eq!(read(&a.json_path), read(&b.json_path));
        assert_eq!(read(&a.csv_path), read(&b.csv_path));
    }

    #[test]
    fn property_suite_passes_and_detects_tampering() {
        let ok = property_suite(3, 12, TolerancePolicy::default()).unwrap();
        assert!(ok.all_passed, "{:?}", ok.checks.iter().filter(|c| !c.failures.is_empty()).collect::<Vec<_>>());
        let tampered = property_suite(3, 12, TolerancePolicy::new(1e-8, 1e-16).unwrap()).unwrap();
        assert!(!tampered.all_passed);
        assert!(tampered.checks.iter().flat_map(|c| &c.failures).all(|f| f.seed >= 3));
        let empty = property_suite(3, 0, TolerancePolicy::default()).unwrap();
        assert!(empty.checks.is_empty() && empty.all_passed);
    }
}
