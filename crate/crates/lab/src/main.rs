use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fracmax::exponents::{ExponentPreset, VariableExponent};
use fracmax::grid::build_ball_family;
use fracmax::lipschitz::{characterize, refinement_sweep, Probes, Quantity, SweepSpec, SymbolFixture};
use fracmax::maximal::{maximal_commutator_field, maximal_field, MaximalConfig, PreparedFamily};
use fracmax::norms::{luxemburg_norm, weak_norm};
use fracmax::{GroupModel, LatticeDomain, RadiusLadder};
use fracmax_lab::battery::{run_battery, CHECKS};
use fracmax_lab::fixtures::{input_function, list_fixtures, symbol_kind};
use fracmax_lab::io::{characterization_csv, node_csv, to_json, write_atomic, write_json};
use fracmax_lab::report::CheckReport;
use fracmax_lab::scenario;

/// Worker count for the global thread pool.
const WORKERS_ENV: &str = "FRACMAX_WORKERS";

#[derive(Parser)]
#[command(name = "fracmax", version, about = "Fractional maximal operators and their commutators on lattices")]
struct Cli {
    /// Seed for every sampled fixture and seminorm.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the acceptance battery.
    Verify {
        /// Run only these checks (repeatable).
        #[arg(long = "check")]
        checks: Vec<String>,
        /// Directory for report.json and timings.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate an oscillation functional of a symbol over a ball family.
    Characterize {
        #[arg(long, value_enum)]
        quantity: QuantityArg,
        #[arg(long)]
        beta: f64,
        /// Required for `--quantity maximal`.
        #[arg(long)]
        alpha: Option<f64>,
        /// Exponent s: `const:V`, `radial-log:BASE:AMP`, `bump:BASE:AMP:RADIUS` or a JSON preset.
        #[arg(long, default_value = "const:1")]
        exponent: String,
        #[arg(long)]
        symbol: String,
        /// Also evaluate at h/2 and report the refinement trend.
        #[arg(long)]
        sweep: bool,
        #[command(flatten)]
        family: FamilyArgs,
        /// Directory for the CSV table(s) and summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-node fractional maximal function, or maximal commutator with `--symbol`.
    Maximal {
        #[arg(long)]
        alpha: f64,
        /// Input fixture id.
        #[arg(long)]
        function: String,
        #[arg(long)]
        symbol: Option<String>,
        /// Used with `--symbol` for exponent-dependent symbols.
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        #[command(flatten)]
        family: FamilyArgs,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Luxemburg (or weak) norm of an input fixture.
    Norm {
        #[arg(long)]
        function: String,
        #[arg(long, default_value = "const:2")]
        exponent: String,
        /// Weak-type norm; needs a constant exponent.
        #[arg(long)]
        weak: bool,
        #[command(flatten)]
        lattice: LatticeArgs,
    },
    Scenario {
        #[command(subcommand)]
        cmd: ScenarioCmd,
    },
    Fixtures {
        #[command(subcommand)]
        cmd: FixturesCmd,
    },
}

#[derive(Subcommand)]
enum ScenarioCmd {
    /// Run a scenario file or a built-in scenario by name.
    Run {
        scenario: String,
        /// Overrides the scenario's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Names of the built-in scenarios.
    List,
}

#[derive(Subcommand)]
enum FixturesCmd {
    /// Symbol and input fixtures with their tags, as JSON.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantityArg {
    Mean,
    Maximal,
    Nonneg,
}

#[derive(Args)]
struct LatticeArgs {
    /// `euclidean:N` or `heisenberg1`.
    #[arg(long, default_value = "heisenberg1")]
    group: String,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    lo: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    hi: f64,
    #[arg(long, default_value_t = 0.0625)]
    spacing: f64,
    #[arg(long, default_value_t = 0.0)]
    padding: f64,
}

impl LatticeArgs {
    fn domain(&self) -> Result<LatticeDomain> {
        let m = GroupModel::from_id(&self.group)?;
        let n = m.dim();
        Ok(LatticeDomain::new(m, vec![self.lo; n], vec![self.hi; n], self.spacing, self.padding)?)
    }
}

#[derive(Args)]
struct FamilyArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Centre stride in nodes.
    #[arg(long, default_value_t = 2)]
    stride: usize,
    /// Defaults to three lattice spacings.
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long, default_value_t = 0.75)]
    r_max: f64,
    #[arg(long, default_value_t = 1.2)]
    gamma: f64,
    /// Keep only balls inside the lattice.
    #[arg(long)]
    inside: bool,
    #[arg(long)]
    min_radius: Option<f64>,
}

impl FamilyArgs {
    fn ladder(&self) -> Result<RadiusLadder> {
        let r_min = self.r_min.unwrap_or(3.0 * self.lattice.spacing);
        Ok(RadiusLadder::new(r_min, self.r_max, self.gamma)?)
    }

    fn prepare(&self) -> Result<(Arc<LatticeDomain>, PreparedFamily)> {
        let d = Arc::new(self.lattice.domain()?);
        let fam = build_ball_family(&d, self.stride, self.ladder()?)?;
        let prep = PreparedFamily::new(d.clone(), fam)?;
        Ok((d, prep))
    }

    fn probes(&self) -> Probes {
        Probes { inside: self.inside, min_radius: self.min_radius }
    }
}

fn parse_exponent(model: &GroupModel, s: &str) -> Result<VariableExponent> {
    let preset = if s.trim_start().starts_with('{') {
        serde_json::from_str(s).context("exponent JSON")?
    } else {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts.get(i).with_context(|| format!("exponent {s:?}: missing field {i}"))?.parse().context("exponent field")
        };
        match parts[0] {
            "const" if parts.len() == 2 => ExponentPreset::Constant { value: num(1)? },
            "radial-log" if parts.len() == 3 => ExponentPreset::RadialLog { base: num(1)?, amp: num(2)? },
            "bump" if parts.len() == 4 => ExponentPreset::Bump {
                base: num(1)?,
                amp: num(2)?,
                center: vec![0.0; model.dim()],
                radius: num(3)?,
            },
            _ => bail!("cannot parse exponent {s:?}; expected const:V, radial-log:BASE:AMP, bump:BASE:AMP:RADIUS or JSON"),
        }
    };
    Ok(VariableExponent::preset(model, preset)?)
}

fn print_check(c: &CheckReport, out: &mut impl Write) -> Result<()> {
    writeln!(out, "{} {} ({})", if c.passed() { "PASS" } else { "FAIL" }, c.id, c.title)?;
    for a in &c.assertions {
        let mark = if a.passed { "ok  " } else { "FAIL" };
        writeln!(out, "    {mark} {}: {:.6e} (tolerance {})", a.name, a.observed, a.tolerance)?;
    }
    for n in &c.notes {
        writeln!(out, "    note {n}")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.cmd {
        Cmd::Verify { checks, out: dir } => {
            let (report, timings) = run_battery(&checks, cli.seed)?;
            for c in &report.checks {
                print_check(c, &mut out)?;
            }
            for s in &timings.stages {
                writeln!(out, "time {} {:.2}s", s.name, s.seconds)?;
            }
            if let Some(dir) = dir {
                write_json(&dir.join("report.json"), &report)?;
                write_json(&dir.join("timings.json"), &timings)?;
            }
            let ids: Vec<&str> = if checks.is_empty() {
                CHECKS.iter().map(|c| c.id).collect()
            } else {
                checks.iter().map(String::as_str).collect()
            };
            writeln!(out, "{} of {} checks passed", report.checks.iter().filter(|c| c.passed()).count(), ids.len())?;
            Ok(report.passed())
        }
        Cmd::Characterize { quantity, beta, alpha, exponent, symbol, sweep, family, out: dir } => {
            let model = GroupModel::from_id(&family.lattice.group)?;
            let s = parse_exponent(&model, &exponent)?;
            let q = match quantity {
                QuantityArg::Mean => Quantity::Mean,
                QuantityArg::Nonneg => Quantity::Nonneg,
                QuantityArg::Maximal => Quantity::Maximal { alpha: alpha.context("--quantity maximal needs --alpha")? },
            };
            let kind = symbol_kind(&symbol, beta, &model)?;
            let (tables, summary) = if sweep {
                let spec = SweepSpec {
                    domain: family.lattice.domain()?,
                    stride: family.stride,
                    ladder: family.ladder()?,
                    symbol: kind,
                    beta,
                    quantity: q,
                    exponent: s,
                    probes: family.probes(),
                    rmax_doubling: false,
                };
                let r = refinement_sweep(&spec)?;
                let tables = vec![("coarse", characterization_csv(&r.coarse)?), ("fine", characterization_csv(&r.fine)?)];
                let summary = serde_json::json!({
                    "coarse_supremum": r.coarse.supremum,
                    "fine_supremum": r.fine.supremum,
                    "trend": r.trend,
                    "verdict": r.verdict,
                    "family": r.fine.family,
                });
                (tables, summary)
            } else {
                let (d, prep) = family.prepare()?;
                let b = SymbolFixture::new(&d, kind)?.b;
                let r = characterize(&b, beta, &q, &s, &prep, &family.probes())?;
                let summary = serde_json::json!({
                    "quantity": r.quantity,
                    "supremum": r.supremum,
                    "argmax": r.argmax,
                    "skipped": r.skipped,
                    "family": r.family,
                });
                (vec![("characterization", characterization_csv(&r)?)], summary)
            };
            match dir {
                Some(dir) => {
                    for (name, bytes) in &tables {
                        write_atomic(&dir.join(format!("{name}.csv")), bytes)?;
                    }
                    write_json(&dir.join("summary.json"), &summary)?;
                }
                None => {
                    for (_, bytes) in &tables {
                        out.write_all(bytes)?;
                    }
                }
            }
            writeln!(out, "{}", serde_json::to_string(&summary)?)?;
            Ok(true)
        }
        Cmd::Maximal { alpha, function, symbol, beta, family, out: dest } => {
            let (d, prep) = family.prepare()?;
            let f = input_function(&function, &d)?;
            let cfg = MaximalConfig::new(alpha);
            let field = match symbol {
                Some(sym) => {
                    let b = SymbolFixture::new(&d, symbol_kind(&sym, beta, d.model())?)?.b;
                    maximal_commutator_field(&b, &f, &prep, &cfg)?
                }
                None => maximal_field(&f, &prep, &cfg)?,
            };
            if field.uncovered_count() > 0 {
                eprintln!("warning: {} of {} nodes lie in no family ball", field.uncovered_count(), d.node_count());
            }
            let coords: Vec<Vec<f64>> = (0..d.node_count()).map(|i| d.node_point(i).into_coords()).collect();
            let bytes = node_csv(&coords, &field.values, &field.argmax)?;
            match dest {
                Some(p) => write_atomic(&p, &bytes)?,
                None => out.write_all(&bytes)?,
            }
            Ok(true)
        }
        Cmd::Norm { function, exponent, weak, lattice } => {
            let d = Arc::new(lattice.domain()?);
            let f = input_function(&function, &d)?;
            let p = parse_exponent(d.model(), &exponent)?;
            let v = if weak {
                if !p.is_constant() {
                    bail!("--weak needs a constant exponent");
                }
                weak_norm(&f, p.p_minus())?
            } else {
                luxemburg_norm(&f, &p)?
            };
            writeln!(out, "{v}")?;
            Ok(true)
        }
        Cmd::Scenario { cmd: ScenarioCmd::List } => {
            for n in scenario::builtin_names() {
                writeln!(out, "{n}")?;
            }
            Ok(true)
        }
        Cmd::Scenario { cmd: ScenarioCmd::Run { scenario: arg, out: dir } } => {
            let mut s = scenario::load(&arg)?;
            if dir.is_some() {
                s.output.dir = dir;
            }
            let (report, timings) = scenario::run_scenario(&s)?;
            for c in &report.checks {
                print_check(c, &mut out)?;
            }
            for a in &report.assertions {
                writeln!(out, "{} {}: {:.6e} (tolerance {})", if a.passed { "PASS" } else { "FAIL" }, a.name, a.observed, a.tolerance)?;
            }
            for w in &report.warnings {
                writeln!(out, "warning {w}")?;
            }
            for s in &timings.stages {
                writeln!(out, "time {} {:.2}s", s.name, s.seconds)?;
            }
            writeln!(out, "scenario {}: {}", report.scenario.name, if report.passed { "PASS" } else { "FAIL" })?;
            Ok(report.passed)
        }
        Cmd::Fixtures { cmd: FixturesCmd::List } => {
            out.write_all(to_json(&list_fixtures())?.as_bytes())?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    if let Ok(w) = std::env::var(WORKERS_ENV) {
        let n = match w.parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => {
                eprintln!("error: {WORKERS_ENV} must be a positive integer, got {w:?}");
                return ExitCode::from(2);
            }
        };
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
