//! TOML scenarios: one lattice, one ball family, a symbol and inputs, and a
//! list of quantities to evaluate. The schema is documented in the README
//! and by the files under `scenarios/`.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, ensure, Context, Result};
use fracmax::exponents::{sobolev_pair, ExponentPreset, VariableExponent};
use fracmax::grid::build_ball_family;
use fracmax::lipschitz::{
    characterize, refinement_sweep, CharacterizationReport, Probes, Quantity, SweepReport, SweepSpec, SweepVerdict,
    SymbolFixture,
};
use fracmax::maximal::{
    maximal_field, operator_norm_ratio, MaximalConfig, MeasureMode, NormRatioReport, OperatorHandle, PreparedFamily,
    ProbeFixture,
};
use fracmax::{GroupModel, LatticeDomain, RadiusLadder};
use serde::{Deserialize, Serialize};

use crate::battery::{find_check, run_check, Ctx};
use crate::fixtures::{input_function, is_input, is_symbol, symbol_kind};
use crate::io::{characterization_csv, ratio_csv, write_atomic, write_json};
use crate::report::{Assertion, CheckReport, Timings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub group: String,
    #[serde(default)]
    pub seed: u64,
    /// Battery checks to run as part of the scenario.
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default)]
    pub symbol: Option<String>,
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default)]
    pub quantities: Vec<QuantityName>,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub exponents: ExponentSpecs,
    #[serde(default)]
    pub sweep: SweepPlan,
    #[serde(default)]
    pub expect: Vec<Expectation>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantityName {
    Mean,
    Maximal,
    Nonneg,
    /// `L^p -> L^q` ratio of the fractional maximal operator.
    MaximalRatio,
    /// `L^p -> L^q` ratio of the maximal commutator with the symbol.
    CommutatorRatio,
}

impl QuantityName {
    fn is_functional(self) -> bool {
        matches!(self, QuantityName::Mean | QuantityName::Maximal | QuantityName::Nonneg)
    }

    fn file_stem(self) -> &'static str {
        match self {
            QuantityName::Mean => "mean",
            QuantityName::Maximal => "maximal",
            QuantityName::Nonneg => "nonneg",
            QuantityName::MaximalRatio => "maximal-ratio",
            QuantityName::CommutatorRatio => "commutator-ratio",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    /// `[lo, hi]` applied to every axis.
    pub bounds: [f64; 2],
    pub spacing: f64,
    #[serde(default)]
    pub padding: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub stride: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub gamma: f64,
    #[serde(default)]
    pub probes: Probes,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSpecs {
    /// Exponent of the oscillation functionals.
    pub s: Option<ExponentPreset>,
    /// Source exponent of the ratio probes.
    pub p: Option<ExponentPreset>,
    /// Order of the Sobolev pairing; defaults to `alpha` for the maximal
    /// ratio and `alpha + beta` for the commutator ratio.
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    #[serde(default)]
    pub halve_h: bool,
    #[serde(default)]
    pub double_rmax: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub quantity: QuantityName,
    pub verdict: SweepVerdict,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
}

const BUILTINS: &[(&str, &str)] = &[
    ("positive-gauge", include_str!("../scenarios/positive-gauge.toml")),
    ("ball-identities", include_str!("../scenarios/ball-identities.toml")),
    ("geometry", include_str!("../scenarios/geometry.toml")),
    ("indicator-identities", include_str!("../scenarios/indicator-identities.toml")),
    ("pointwise-commutator", include_str!("../scenarios/pointwise-commutator.toml")),
    ("luxemburg", include_str!("../scenarios/luxemburg.toml")),
    ("holder", include_str!("../scenarios/holder.toml")),
    ("characteristic-norms", include_str!("../scenarios/characteristic-norms.toml")),
    ("dichotomy", include_str!("../scenarios/dichotomy.toml")),
    ("hls-scaling", include_str!("../scenarios/hls-scaling.toml")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}

pub fn builtin(name: &str) -> Result<Scenario> {
    let (_, text) = BUILTINS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| anyhow!("no built-in scenario {name:?}"))?;
    parse(text)
}

pub fn parse(text: &str) -> Result<Scenario> {
    Ok(toml::from_str(text)?)
}

/// A path to a TOML file, or the name of a built-in scenario.
pub fn load(arg: &str) -> Result<Scenario> {
    let path = Path::new(arg);
    if path.exists() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
        return parse(&text).with_context(|| format!("parsing {arg}"));
    }
    builtin(arg).with_context(|| format!("{arg} is neither a file nor a built-in scenario"))
}

/// Everything a run needs, checked once up front.
struct Validated {
    model: GroupModel,
    alpha: Option<f64>,
    beta: Option<f64>,
}

pub fn validate(s: &Scenario) -> Result<()> {
    validated(s).map(|_| ())
}

fn validated(s: &Scenario) -> Result<Validated> {
    let model = GroupModel::from_id(&s.group)?;
    let q = model.q_f64();
    for c in &s.checks {
        ensure!(find_check(c).is_some(), "unknown check {c:?}");
    }
    if let Some(sym) = &s.symbol {
        ensure!(is_symbol(sym), "unknown symbol fixture {sym:?}; see `fracmax fixtures list`");
    }
    for i in &s.inputs {
        ensure!(is_input(i), "unknown input fixture {i:?}; see `fracmax fixtures list`");
    }
    let Params { alpha, beta } = s.params;
    if let Some(b) = beta {
        ensure!(b > 0.0 && b < 1.0, "hypothesis 0<β<1 violated: beta = {b}");
    }
    if let Some(a) = alpha {
        ensure!(a > 0.0, "hypothesis 0<α violated: alpha = {a}");
        ensure!(a < q, "hypothesis α<Q violated: alpha = {a}, Q = {q}");
    }
    if let (Some(a), Some(b)) = (alpha, beta) {
        ensure!(a + b < q, "hypothesis α+β<Q violated: alpha + beta = {}, Q = {q}", a + b);
        for (which, e) in [("s", &s.exponents.s), ("p", &s.exponents.p)] {
            if let Some(e) = e {
                let pp = VariableExponent::preset(&model, e.clone())?.p_plus();
                ensure!(pp < q / (a + b), "hypothesis p₊<Q/(α+β) violated by {which}: p_plus = {pp}, Q/(α+β) = {}", q / (a + b));
            }
        }
    }
    if s.quantities.is_empty() {
        ensure!(!s.checks.is_empty(), "scenario {:?} requests neither checks nor quantities", s.name);
        return Ok(Validated { model, alpha, beta });
    }
    ensure!(s.domain.is_some(), "quantities need a [domain] section");
    ensure!(s.family.is_some(), "quantities need a [family] section");
    for qn in &s.quantities {
        match qn {
            QuantityName::Mean | QuantityName::Nonneg => {
                ensure!(beta.is_some(), "{} needs params.beta", qn.file_stem());
                ensure!(s.symbol.is_some(), "{} needs a symbol", qn.file_stem());
            }
            QuantityName::Maximal => {
                ensure!(alpha.is_some() && beta.is_some(), "maximal needs params.alpha and params.beta");
                ensure!(s.symbol.is_some(), "maximal needs a symbol");
            }
            QuantityName::MaximalRatio => {
                ensure!(alpha.is_some(), "maximal-ratio needs params.alpha");
                ensure!(s.exponents.p.is_some() && !s.inputs.is_empty(), "maximal-ratio needs exponents.p and inputs");
            }
            QuantityName::CommutatorRatio => {
                ensure!(alpha.is_some() && beta.is_some(), "commutator-ratio needs params.alpha and params.beta");
                ensure!(s.symbol.is_some(), "commutator-ratio needs a symbol");
                ensure!(s.exponents.p.is_some() && !s.inputs.is_empty(), "commutator-ratio needs exponents.p and inputs");
            }
        }
    }
    for e in &s.expect {
        ensure!(s.quantities.contains(&e.quantity), "expectation on {:?}, which is not requested", e.quantity);
        ensure!(e.quantity.is_functional(), "verdicts exist only for mean, maximal and nonneg");
        ensure!(s.sweep.halve_h, "verdicts need sweep.halve_h = true");
    }
    Ok(Validated { model, alpha, beta })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum QuantityOutcome {
    Single(CharacterizationReport),
    Sweep(SweepReport),
    Ratio(NormRatioReport),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantityResult {
    pub quantity: QuantityName,
    pub outcome: QuantityOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub checks: Vec<CheckReport>,
    pub quantities: Vec<QuantityResult>,
    pub assertions: Vec<Assertion>,
    pub warnings: Vec<String>,
    pub passed: bool,
}

impl RunReport {
    pub fn all_assertions(&self) -> impl Iterator<Item = &Assertion> {
        self.checks.iter().flat_map(|c| c.assertions.iter()).chain(&self.assertions)
    }
}

/// Fraction of the lattice above which numerical flags become failures.
const FLAG_LIMIT: f64 = 0.01;

pub fn run_scenario(s: &Scenario) -> Result<(RunReport, Timings)> {
    let v = validated(s)?;
    let mut timings = Timings::default();
    let ctx = Ctx { seed: s.seed };
    let mut checks = Vec::new();
    for id in &s.checks {
        let t = Instant::now();
        let check = find_check(id).expect("validated");
        checks.push(run_check(check, &ctx)?);
        timings.record(format!("check:{id}"), t.elapsed().as_secs_f64());
    }

    let mut quantities = Vec::new();
    let mut assertions = Vec::new();
    let mut warnings = Vec::new();
    if !s.quantities.is_empty() {
        let t = Instant::now();
        let ds = s.domain.as_ref().expect("validated");
        let fs = s.family.as_ref().expect("validated");
        let n = v.model.dim();
        let domain = LatticeDomain::new(v.model.clone(), vec![ds.bounds[0]; n], vec![ds.bounds[1]; n], ds.spacing, ds.padding)?;
        let ladder = RadiusLadder::new(fs.r_min, fs.r_max, fs.gamma)?;
        let shared = Arc::new(domain.clone());
        let prep = Arc::new(PreparedFamily::new(shared.clone(), build_ball_family(&shared, fs.stride, ladder)?)?);
        let sub = prep.sub_resolution_count();
        if sub > 0 {
            let msg = format!("{sub} of {} family balls contain no lattice node", prep.len());
            ensure!((sub as f64) <= FLAG_LIMIT * prep.len() as f64, "{msg}");
            warnings.push(msg);
        }
        timings.record("prepare", t.elapsed().as_secs_f64());

        let s_exp = match &s.exponents.s {
            Some(p) => VariableExponent::preset(&v.model, p.clone())?,
            None => VariableExponent::constant(&v.model, 1.0)?,
        };
        for &qn in &s.quantities {
            let t = Instant::now();
            let outcome = match qn {
                QuantityName::Mean | QuantityName::Maximal | QuantityName::Nonneg => {
                    let beta = v.beta.expect("validated");
                    let quantity = match qn {
                        QuantityName::Mean => Quantity::Mean,
                        QuantityName::Nonneg => Quantity::Nonneg,
                        _ => Quantity::Maximal { alpha: v.alpha.expect("validated") },
                    };
                    let kind = symbol_kind(s.symbol.as_deref().expect("validated"), beta, &v.model)?;
                    if s.sweep.halve_h {
                        let spec = SweepSpec {
                            domain: domain.clone(),
                            stride: fs.stride,
                            ladder,
                            symbol: kind,
                            beta,
                            quantity,
                            exponent: s_exp.clone(),
                            probes: fs.probes,
                            rmax_doubling: s.sweep.double_rmax,
                        };
                        let r = refinement_sweep(&spec)?;
                        if let Some(e) = s.expect.iter().find(|e| e.quantity == qn) {
                            assertions.push(verdict_assertion(qn, &r, e.verdict));
                        }
                        QuantityOutcome::Sweep(r)
                    } else {
                        let b = SymbolFixture::new(&shared, kind)?.b;
                        QuantityOutcome::Single(characterize(&b, beta, &quantity, &s_exp, &prep, &fs.probes)?)
                    }
                }
                QuantityName::MaximalRatio | QuantityName::CommutatorRatio => {
                    let alpha = v.alpha.expect("validated");
                    let p = VariableExponent::preset(&v.model, s.exponents.p.clone().expect("validated"))?;
                    let mut fixtures = Vec::new();
                    for id in &s.inputs {
                        let f = input_function(id, &shared)?;
                        let uncovered = maximal_field(&f, &prep, &MaximalConfig::new(alpha))?.uncovered_count();
                        if uncovered > 0 {
                            let msg = format!("{id}: {uncovered} of {} nodes lie in no family ball", shared.node_count());
                            ensure!((uncovered as f64) <= FLAG_LIMIT * shared.node_count() as f64, "{msg}");
                            warnings.push(msg);
                        }
                        fixtures.push(ProbeFixture { id: id.clone(), f, family: prep.clone() });
                    }
                    let (op, order) = if qn == QuantityName::MaximalRatio {
                        (OperatorHandle::Maximal { alpha, measure: MeasureMode::Lattice }, alpha)
                    } else {
                        let beta = v.beta.expect("validated");
                        let kind = symbol_kind(s.symbol.as_deref().expect("validated"), beta, &v.model)?;
                        let m = v.model.clone();
                        let symbol: fracmax::grid::Analytic = Arc::new(move |x: &[f64]| kind.eval(&m, x));
                        (OperatorHandle::MaximalCommutator { alpha, measure: MeasureMode::Lattice, symbol }, alpha + beta)
                    };
                    let pair = sobolev_pair(&p, s.exponents.gamma.unwrap_or(order), v.model.q())?;
                    QuantityOutcome::Ratio(operator_norm_ratio(&op, &pair.p, &pair.q, &fixtures)?)
                }
            };
            quantities.push(QuantityResult { quantity: qn, outcome });
            timings.record(qn.file_stem(), t.elapsed().as_secs_f64());
        }
    }
    let passed = checks.iter().all(CheckReport::passed) && assertions.iter().all(|a| a.passed);
    let report = RunReport { scenario: s.clone(), checks, quantities, assertions, warnings, passed };
    if let Some(dir) = &s.output.dir {
        let t = Instant::now();
        write_outputs(dir, &report)?;
        timings.record("write", t.elapsed().as_secs_f64());
        write_json(&dir.join("timings.json"), &timings)?;
    }
    Ok((report, timings))
}

fn verdict_assertion(qn: QuantityName, r: &SweepReport, expect: SweepVerdict) -> Assertion {
    let name = format!("{}: refinement trend (expected {expect:?})", qn.file_stem());
    match expect {
        SweepVerdict::Bounded => Assertion::within(name, r.trend, 0.5, 2.0),
        SweepVerdict::Divergent => Assertion::at_least(name, r.trend, fracmax::lipschitz::DIVERGENCE_TREND),
        SweepVerdict::Inconclusive => Assertion::holds(name, r.verdict == SweepVerdict::Inconclusive),
    }
}

/// `report.json` plus one CSV per quantity (two for sweeps).
pub fn write_outputs(dir: &Path, report: &RunReport) -> Result<()> {
    for q in &report.quantities {
        let stem = q.quantity.file_stem();
        match &q.outcome {
            QuantityOutcome::Single(c) => write_atomic(&dir.join(format!("{stem}.csv")), &characterization_csv(c)?)?,
            QuantityOutcome::Sweep(s) => {
                write_atomic(&dir.join(format!("{stem}.csv")), &characterization_csv(&s.coarse)?)?;
                write_atomic(&dir.join(format!("{stem}-fine.csv")), &characterization_csv(&s.fine)?)?;
            }
            QuantityOutcome::Ratio(r) => write_atomic(&dir.join(format!("{stem}.csv")), &ratio_csv(&r.rows)?)?,
        }
    }
    write_json(&dir.join("report.json"), report)
}
