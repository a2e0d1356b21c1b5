//! The verification battery: each check rebuilds its own lattices from
//! scratch and reports every assertion together with its tolerance.

use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use fracmax::exponents::{sobolev_pair, ExponentPreset, VariableExponent};
use fracmax::grid::{build_ball_family, indicator, integrate, sample};
use fracmax::lipschitz::{
    ef_oscillation_residual, lambda_seminorm_seeded, refinement_sweep, Probes, Quantity, SweepSpec, SweepVerdict,
    SymbolFixture,
};
use fracmax::maximal::{
    maximal_field, maximal_restricted_field, nonlinear_commutator_field, operator_norm_ratio, MaximalConfig,
    MeasureMode, OperatorHandle, PreparedFamily, ProbeFixture,
};
use fracmax::norms::{
    char_duality_product, holder_ratio, lp_norm, luxemburg_norm, modular, power_identity_residual, weak_norm,
};
use fracmax::{Ball, GridFunction, GroupModel, GroupPoint, LatticeDomain, RadiusLadder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::fixtures::{bump_profile, symbol_kind};
use crate::report::{Assertion, CheckReport, Timings};

pub struct Ctx {
    pub seed: u64,
}

impl Ctx {
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }

    fn subseed(&self, k: u64) -> u64 {
        self.seed ^ k.wrapping_mul(0x9e37_79b9_7f4a_7c15)
    }
}

pub struct Check {
    pub id: &'static str,
    /// Acceptance criterion number, if this check is one.
    pub criterion: Option<u32>,
    pub title: &'static str,
    pub budget_secs: Option<f64>,
    run: fn(&Ctx) -> Result<CheckReport>,
}

pub const CHECKS: &[Check] = &[
    Check {
        id: "geometry",
        criterion: Some(1),
        title: "ball measure against indicator quadrature",
        budget_secs: Some(30.0),
        run: geometry,
    },
    Check {
        id: "indicator-identities",
        criterion: Some(2),
        title: "maximal function of an indicator and the restricted identity",
        budget_secs: Some(300.0),
        run: indicator_identities,
    },
    Check {
        id: "pointwise-commutator",
        criterion: Some(3),
        title: "pointwise bound of the nonlinear commutator",
        budget_secs: Some(300.0),
        run: pointwise_commutator,
    },
    Check {
        id: "luxemburg",
        criterion: Some(4),
        title: "Luxemburg norm oracles",
        budget_secs: Some(60.0),
        run: luxemburg,
    },
    Check { id: "holder", criterion: Some(5), title: "Hölder ratio", budget_secs: Some(60.0), run: holder },
    Check {
        id: "characteristic-norms",
        criterion: Some(6),
        title: "norms of characteristic functions",
        budget_secs: None,
        run: characteristic_norms,
    },
    Check {
        id: "dichotomy",
        criterion: Some(7),
        title: "boundedness dichotomy of the oscillation functionals",
        budget_secs: Some(900.0),
        run: dichotomy,
    },
    Check {
        id: "hls-scaling",
        criterion: Some(8),
        title: "scale invariance of L^p -> L^q ratios",
        budget_secs: None,
        run: hls_scaling,
    },
    Check {
        id: "ball-identities",
        criterion: None,
        title: "E/F identity, mean bound and indicator identities on the plane",
        budget_secs: None,
        run: ball_identities,
    },
];

pub fn find_check(id: &str) -> Option<&'static Check> {
    CHECKS.iter().find(|c| c.id == id)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport {
    pub seed: u64,
    pub checks: Vec<CheckReport>,
}

impl BatteryReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckReport::passed)
    }
}

pub fn run_check(check: &Check, ctx: &Ctx) -> Result<CheckReport> {
    (check.run)(ctx).with_context(|| format!("check {}", check.id))
}

/// Runs the named checks (all when `ids` is empty) in declaration order.
pub fn run_battery(ids: &[String], seed: u64) -> Result<(BatteryReport, Timings)> {
    for id in ids {
        if find_check(id).is_none() {
            bail!("unknown check {id:?}");
        }
    }
    let ctx = Ctx { seed };
    let mut checks = Vec::new();
    let mut timings = Timings::default();
    for c in CHECKS.iter().filter(|c| ids.is_empty() || ids.iter().any(|i| i == c.id)) {
        let t = Instant::now();
        checks.push(run_check(c, &ctx)?);
        timings.record(c.id, t.elapsed().as_secs_f64());
    }
    Ok((BatteryReport { seed, checks }, timings))
}

pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    Ok(pool.install(f))
}

/// Runs the battery once per worker count and compares the serialised
/// reports byte for byte.
pub fn determinism(ids: &[String], seed: u64, workers: &[usize]) -> Result<(CheckReport, Vec<(BatteryReport, Timings)>)> {
    let mut runs = Vec::new();
    for &w in workers {
        runs.push(with_workers(w, || run_battery(ids, seed))??);
    }
    let mut rep = CheckReport::new("determinism", "bit-identical reports across runs and worker counts");
    let first = crate::io::to_json(&runs[0].0)?;
    for (w, (r, _)) in workers.iter().zip(&runs).skip(1) {
        let same = crate::io::to_json(r)? == first;
        rep.push(Assertion::holds(format!("report with {w} workers equals report with {} workers", workers[0]), same));
    }
    rep.note(format!("report size {} bytes, seed {seed}", first.len()));
    Ok((rep, runs))
}

fn cube(model: GroupModel, lo: f64, hi: f64, nodes: usize) -> Result<Arc<LatticeDomain>> {
    let h = (hi - lo) / nodes as f64;
    Ok(Arc::new(LatticeDomain::cube(model, lo, hi, h)?))
}

fn prepare(domain: &Arc<LatticeDomain>, stride: usize, ladder: RadiusLadder) -> Result<PreparedFamily> {
    let fam = build_ball_family(domain, stride, ladder)?;
    Ok(PreparedFamily::new(domain.clone(), fam)?)
}

/// Up to `k` entries spread evenly over `ids`.
fn evenly(ids: &[usize], k: usize) -> Vec<usize> {
    if ids.len() <= k {
        return ids.to_vec();
    }
    (0..k).map(|j| ids[j * ids.len() / k]).collect()
}

fn inside(prep: &PreparedFamily) -> Vec<usize> {
    (0..prep.len()).filter(|&i| prep.domain().contains_ball(prep.ball(i))).collect()
}

fn groups() -> Result<Vec<GroupModel>> {
    Ok(vec![GroupModel::euclidean(1)?, GroupModel::euclidean(2)?, GroupModel::heisenberg()])
}

fn gauge_bump(domain: &Arc<LatticeDomain>, center: &[f64], radius: f64) -> Result<GridFunction> {
    let m = domain.model().clone();
    let c = center.to_vec();
    Ok(sample(domain, |x| bump_profile(m.distance_raw(&c, x) / radius))?)
}

/// Worst `rel_err / (3 n h / r)` over a family and the radius where it
/// occurs.
fn measure_error(prep: &PreparedFamily, n: usize, h: f64) -> (f64, f64, f64) {
    let mut worst = (0.0, 0.0, 0.0);
    for i in 0..prep.len() {
        let r = prep.ball(i).radius();
        let exact = prep.measure(i, MeasureMode::Analytic);
        let rel = (prep.measure(i, MeasureMode::Lattice) - exact).abs() / exact;
        let q = rel / (3.0 * n as f64 * h / r);
        if q > worst.0 {
            worst = (q, rel, r);
        }
    }
    worst
}

/// Smallest radius whose ball spans three cells along every layer: a layer
/// of degree k has extent of order `r^k`.
pub fn resolved_radius(model: &GroupModel, h: f64) -> f64 {
    let step = (0..model.dim()).map(|a| model.layer(a)).max().unwrap_or(1);
    (3.0 * h).powf(1.0 / step as f64).max(3.0 * h)
}

fn geometry(_: &Ctx) -> Result<CheckReport> {
    let mut rep = CheckReport::new("geometry", "ball measure against indicator quadrature");
    for model in groups()? {
        let n = model.dim();
        for h in [0.1, 0.05] {
            let d = Arc::new(LatticeDomain::new(model.clone(), vec![-1.0; n], vec![1.0; n], h, 1.0)?);
            let stride = (0.2 / h).round() as usize;
            let r_min = resolved_radius(&model, h);
            let prep = prepare(&d, stride, RadiusLadder::new(r_min, 0.8, 1.2)?)?;
            let (worst, rel, at) = measure_error(&prep, n, h);
            let clipped = (0..prep.len()).filter(|&i| !d.contains_ball(prep.ball(i))).count();
            let mut quad = 0.0f64;
            for i in evenly(&(0..prep.len()).collect::<Vec<_>>(), 8) {
                let chi = indicator(&d, prep.ball(i)).function;
                let v = prep.measure(i, MeasureMode::Lattice);
                quad = quad.max((integrate(&chi) - v).abs() / v);
            }
            let tag = format!("{} h={h}", model.name());
            rep.push(Assertion::at_most(format!("{tag}: max relative error / (3 n h / r)"), worst, 1.0));
            rep.push(Assertion::none(format!("{tag}: family balls leaving the lattice"), clipped));
            rep.push(Assertion::at_most(format!("{tag}: indicator integral vs support count"), quad, 1e-12));
            rep.note(format!("{tag}: {} balls from r = {r_min:.4}, worst relative error {rel:.4} at r = {at:.4}", prep.len()));
            if r_min > 3.0 * h {
                let thin = prepare(&d, stride, RadiusLadder::new(3.0 * h, 0.8, 1.2)?)?;
                let (w, rel, at) = measure_error(&thin, n, h);
                rep.note(format!(
                    "{tag}: ladder from 3h (vertically unresolved balls): worst ratio {w:.3}, relative error {rel:.4} at r = {at:.4}"
                ));
            }
        }
    }
    Ok(rep)
}

fn indicator_identities(_: &Ctx) -> Result<CheckReport> {
    let mut rep = CheckReport::new("indicator-identities", "maximal function of an indicator and the restricted identity");
    let line = cube(GroupModel::euclidean(1)?, -1.0, 1.0, 4096)?;
    let hl = line.h();
    let heis = cube(GroupModel::heisenberg(), -1.0, 1.0, 32)?;
    let cases = [
        (line.clone(), 32usize, RadiusLadder::new(16.0 * hl, 0.9, 1.1)?),
        (heis.clone(), 2, RadiusLadder::new(0.65, 1.0, 1.1)?),
    ];
    for (d, stride, ladder) in cases {
        let prep = prepare(&d, stride, ladder)?;
        let model = d.model().clone();
        let q = model.q_f64();
        let b = sample(&d, |x| 2.0 + x[0] + x.iter().map(|v| v * v).sum::<f64>())?;
        let tested = evenly(&inside(&prep), 12);
        let (mut chi_err, mut gap) = (0.0f64, 0.0f64);
        for alpha in [0.5, 1.0] {
            if alpha >= q {
                rep.note(format!("{}: alpha = {alpha} skipped, needs alpha < Q", model.name()));
                continue;
            }
            let cfg = MaximalConfig::new(alpha);
            for &i in &tested {
                let ball = prep.ball(i).clone();
                let chi = indicator(&d, &ball).function;
                let exact = model.ball_measure(ball.radius())?.powf(alpha / q);
                let mchi = maximal_field(&chi, &prep, &cfg)?;
                let bchi = b.zip_with(&chi, |u, v| u * v)?;
                let lhs = maximal_field(&bchi, &prep, &cfg)?;
                let rhs = maximal_restricted_field(&b, &prep, alpha, MeasureMode::Lattice, &ball)?;
                for n in prep.support(i).nodes() {
                    chi_err = chi_err.max((mchi.values[n] - exact).abs() / exact);
                    gap = gap.max((lhs.values[n] - rhs.values[n]).abs() / rhs.values[n]);
                }
            }
        }
        let tag = format!("{} ({} nodes)", model.name(), d.node_count());
        rep.push(Assertion::at_most(format!("{tag}: |M(chi_B) - |B|^(alpha/Q)| / |B|^(alpha/Q)"), chi_err, 0.02));
        rep.push(Assertion::at_most(format!("{tag}: M(b chi_B) vs restricted M(b), relative"), gap, 0.02));
        rep.note(format!("{tag}: {} balls tested, family of {}", tested.len(), prep.len()));
    }
    Ok(rep)
}

/// `2^beta c1^(-beta/Q)`: what the two-point argument actually yields.
fn geometric_constant(model: &GroupModel, beta: f64) -> f64 {
    2f64.powf(beta) * model.c1().powf(-beta / model.q_f64())
}

fn pointwise_commutator(ctx: &Ctx) -> Result<CheckReport> {
    let mut rep = CheckReport::new("pointwise-commutator", "pointwise bound of the nonlinear commutator");
    let alpha = 0.5;
    // Odd node counts put the origin on the lattice.
    let setups = [
        (cube(GroupModel::euclidean(2)?, -1.0, 1.0, 65)?, 1.0, 0.5),
        (cube(GroupModel::heisenberg(), -1.0, 1.0, 25)?, 1.2, 0.7),
    ];
    let mut stream = 0;
    for (d, r_max, chi_r) in setups {
        let model = d.model().clone();
        let prep = prepare(&d, 2, RadiusLadder::new(3.0 * d.h(), r_max, 1.1)?)?;
        let origin = model.origin();
        let inputs = [
            ("chi_B", indicator(&d, &Ball::new(origin.clone(), chi_r)?).function),
            ("bump", gauge_bump(&d, origin.coords(), 0.5)?),
        ];
        for beta in [0.3, 0.7] {
            let mut violations = 0;
            let mut worst = 0.0f64;
            for sym in ["gauge-beta", "gauge-beta-shifted"] {
                let b = SymbolFixture::new(&d, symbol_kind(sym, beta, &model)?)?.b;
                stream += 1;
                let lam = lambda_seminorm_seeded(&b, beta, ctx.subseed(stream))?;
                for (fname, f) in &inputs {
                    let com = nonlinear_commutator_field(&b, f, &prep, &MaximalConfig::new(alpha))?;
                    let m = maximal_field(f, &prep, &MaximalConfig::new(alpha + beta))?;
                    let mut v = 0;
                    let mut w = 0.0f64;
                    for i in 0..m.values.len() {
                        if !m.covered(i) {
                            continue;
                        }
                        let lhs = com.values[i].abs();
                        if lhs > (lam + 0.05) * m.values[i] + 1e-9 {
                            v += 1;
                        }
                        if m.values[i] > 0.0 {
                            w = w.max(lhs / m.values[i]);
                        }
                    }
                    violations += v;
                    worst = worst.max(w);
                    rep.note(format!(
                        "{} beta={beta} {sym} {fname}: lambda = {lam:.4}, worst |[b,M]f| / M_(alpha+beta) f = {w:.4}, {v} violations",
                        model.name()
                    ));
                }
            }
            rep.push(Assertion::none(
                format!("{} beta={beta}: nodes with |[b,M_a]f| > (lambda+0.05) M_(a+b) f + 1e-9", model.name()),
                violations,
            ));
            rep.note(format!(
                "{} beta={beta}: worst ratio {worst:.4}; two-point constant 2^beta c1^(-beta/Q) = {:.4}",
                model.name(),
                geometric_constant(&model, beta)
            ));
        }
    }
    Ok(rep)
}

fn random_function(rng: &mut ChaCha8Rng, d: &Arc<LatticeDomain>) -> Result<GridFunction> {
    let dim = d.dim();
    let m = d.model().clone();
    let f = match rng.gen_range(0..4) {
        0 => {
            let v: Vec<f64> = (0..d.node_count())
                .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(-3.0..3.0) })
                .collect();
            GridFunction::new(d.clone(), v)?
        }
        1 => {
            let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let amp = rng.gen_range(0.2..3.0);
            gauge_bump(d, &c, rng.gen_range(0.3..1.0))?.scale(amp)?
        }
        2 => {
            let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.4..0.4)).collect();
            indicator(d, &Ball::new(GroupPoint::new(c)?, rng.gen_range(0.4..1.0))?).function
        }
        _ => {
            let (a, b) = (rng.gen_range(0.5..3.0), rng.gen_range(-1.0..1.0));
            sample(d, |x| (a * x[0]).sin() + b * m.norm_raw(x))?
        }
    };
    if f.is_zero() {
        return Ok(GridFunction::constant(d, 1.0)?);
    }
    Ok(f)
}

fn random_exponent(rng: &mut ChaCha8Rng, model: &GroupModel, floor: f64) -> Result<VariableExponent> {
    let base = rng.gen_range(floor..3.0);
    let amp = rng.gen_range(0.0..1.5);
    let preset = if rng.gen_bool(0.5) {
        ExponentPreset::RadialLog { base, amp }
    } else {
        let center = (0..model.dim()).map(|_| rng.gen_range(-0.5..0.5)).collect();
        ExponentPreset::Bump { base, amp, center, radius: rng.gen_range(0.3..1.2) }
    };
    Ok(VariableExponent::preset(model, preset)?)
}

fn small_domains() -> Result<Vec<Arc<LatticeDomain>>> {
    Ok(vec![cube(GroupModel::euclidean(2)?, -1.0, 1.0, 20)?, cube(GroupModel::heisenberg(), -1.0, 1.0, 10)?])
}

fn luxemburg(ctx: &Ctx) -> Result<CheckReport> {
    let mut rep = CheckReport::new("luxemburg", "Luxemburg norm oracles");
    let doms = small_domains()?;
    let mut rng = ctx.rng(4);
    let (mut closed, mut unit) = (0.0f64, 0.0f64);
    for k in 0..40 {
        let d = &doms[k % doms.len()];
        let f = random_function(&mut rng, d)?;
        let c = rng.gen_range(1.0..6.0);
        let pc = VariableExponent::constant(d.model(), c)?;
        let direct = lp_norm(&f, c)?;
        closed = closed.max((luxemburg_norm(&f, &pc)? - direct).abs() / direct);
        let p = random_exponent(&mut rng, d.model(), 1.0)?;
        let eta = luxemburg_norm(&f, &p)?;
        unit = unit.max((modular(&f, &p, eta)? - 1.0).abs());
    }
    rep.push(Assertion::at_most("constant exponent vs (int |f|^p)^(1/p), relative, 40 fixtures", closed, 1e-6));
    rep.push(Assertion::at_most("|modular(f, p, ||f||) - 1|, 40 fixtures", unit, 1e-6));
    let mut power = 0.0f64;
    for k in 0..20 {
        let d = &doms[k % doms.len()];
        let f = random_function(&mut rng, d)?;
        let p = random_exponent(&mut rng, d.model(), 1.0)?;
        let s = rng.gen_range(0.5..3.0f64).max(1.0 / p.p_minus());
        power = power.max(power_identity_residual(&f, &p, s)?);
    }
    rep.push(Assertion::at_most("power identity residual, 20 (f, p, s) triples", power, 1e-6));
    Ok(rep)
}

fn holder(ctx: &Ctx) -> Result<CheckReport> {
    let mut rep = CheckReport::new("holder", "Hölder ratio");
    let doms = small_domains()?;
    let mut rng = ctx.rng(5);
    let mut worst = 0.0f64;
    let mut k = 0;
    let mut tried = 0;
    while k < 100 {
        tried += 1;
        let d = &doms[k % doms.len()];
        let f = random_function(&mut rng, d)?;
        let g = random_function(&mut rng, d)?;
        let p = random_exponent(&mut rng, d.model(), 1.1)?;
        match holder_ratio(&f, &g, &p) {
            Ok(r) => {
                worst = worst.max(r);
                k += 1;
            }
            Err(fracmax::Error::ZeroDenominator(_)) if tried < 1000 => continue,
            Err(e) => return Err(e.into()),
        }
    }
    rep.push(Assertion::at_most("int |fg| / (||f||_p ||g||_p'), 100 triples", worst, 4.0));
    let mut witness = f64::INFINITY;
    for d in &doms {
        let chi = indicator(d, &Ball::new(d.model().origin(), 0.7)?).function;
        let p2 = VariableExponent::constant(d.model(), 2.0)?;
        witness = witness.min(holder_ratio(&chi, &chi, &p2)?);
    }
    rep.push(Assertion::at_least("equality witness f = g = chi_B, p = 2", witness, 0.98));
    Ok(rep)
}

fn characteristic_norms(_: &Ctx) -> Result<CheckReport> {
    let mut rep = CheckReport::new("characteristic-norms", "norms of characteristic functions");
    let plane = GroupModel::euclidean(2)?;
    let heis = GroupModel::heisenberg();

    // Constant exponents: strong and weak norms equal |B|^(1/p) exactly on
    // the lattice measure.
    let mut strong = 0.0f64;
    let mut weak = 0.0f64;
    for (d, stride, ladder) in [
        (cube(plane.clone(), -1.0, 1.0, 40)?, 4, RadiusLadder::new(0.15, 0.9, 1.2)?),
        (cube(heis.clone(), -1.0, 1.0, 20)?, 2, RadiusLadder::new(0.3, 1.0, 1.2)?),
    ] {
        let prep = prepare(&d, stride, ladder)?;
        for i in evenly(&inside(&prep), 30) {
            let chi = indicator(&d, prep.ball(i)).function;
            let v = prep.measure(i, MeasureMode::Lattice);
            for p in [1.0, 1.5, 2.0, 3.0] {
                let exact = v.powf(1.0 / p);
                let pc = VariableExponent::constant(d.model(), p)?;
                strong = strong.max((luxemburg_norm(&chi, &pc)? - exact).abs() / exact);
                weak = weak.max((weak_norm(&chi, p)? - exact).abs() / exact);
            }
        }
    }
    rep.push(Assertion::at_most("||chi_B||_p vs |B|^(1/p), relative", strong, 1e-8));
    rep.push(Assertion::at_most("weak ||chi_B||_p vs |B|^(1/p), relative", weak, 1e-12));

    // Small balls with log-Hölder exponents.
    let presets = [
        ExponentPreset::RadialLog { base: 1.5, amp: 1.0 },
        ExponentPreset::Bump { base: 2.0, amp: 0.8, center: vec![], radius: 0.8 },
    ];
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (d, stride, ladder) in [
        (cube(plane.clone(), -1.0, 1.0, 40)?, 4, RadiusLadder::new(0.15, 0.56, 1.2)?),
        (cube(heis.clone(), -1.0, 1.0, 24)?, 2, RadiusLadder::new(0.4, 1.0, 1.2)?),
    ] {
        let prep = prepare(&d, stride, ladder)?;
        let small: Vec<usize> = inside(&prep).into_iter().filter(|&i| prep.measure(i, MeasureMode::Lattice) <= 1.0).collect();
        for preset in &presets {
            let preset = match preset {
                ExponentPreset::Bump { base, amp, radius, .. } => {
                    ExponentPreset::Bump { base: *base, amp: *amp, center: vec![0.0; d.dim()], radius: *radius }
                }
                other => other.clone(),
            };
            let p = VariableExponent::preset(d.model(), preset)?;
            for &i in &evenly(&small, 60) {
                let ball = prep.ball(i);
                let chi = indicator(&d, ball).function;
                let v = prep.measure(i, MeasureMode::Lattice);
                let r = luxemburg_norm(&chi, &p)? / v.powf(1.0 / p.eval(ball.center().coords()));
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
    }
    rep.push(Assertion::at_least("small balls: min ||chi_B||_p(.) / |B|^(1/p(x_B))", lo, 0.25));
    rep.push(Assertion::at_most("small balls: max ||chi_B||_p(.) / |B|^(1/p(x_B))", hi, 4.0));

    // Fractional comparison constant under refinement, gamma = beta = 0.5.
    let gamma = 0.5;
    let p = VariableExponent::preset(&plane, ExponentPreset::RadialLog { base: 1.4, amp: 0.5 })?;
    let pair = sobolev_pair(&p, gamma, plane.q())?;
    let mut cs = Vec::new();
    for (nodes, stride) in [(20, 2), (40, 4)] {
        let d = cube(plane.clone(), -1.0, 1.0, nodes)?;
        let prep = prepare(&d, stride, RadiusLadder::new(0.3, 0.9, 1.2)?)?;
        let mut c = 0.0f64;
        for i in inside(&prep) {
            let chi = indicator(&d, prep.ball(i)).function;
            let v = prep.measure(i, MeasureMode::Lattice);
            c = c.max(luxemburg_norm(&chi, &pair.p)? / (v.powf(gamma / 2.0) * luxemburg_norm(&chi, &pair.q)?));
        }
        cs.push(c);
    }
    rep.push(Assertion::within("fractional comparison: C(h/2) / C(h)", cs[1] / cs[0], 0.5, 2.0));
    rep.note(format!("fractional comparison constants: C(0.1) = {:.6}, C(0.05) = {:.6}", cs[0], cs[1]));

    // Duality product.
    let recorded = 2.0;
    let pv = VariableExponent::preset(&plane, ExponentPreset::RadialLog { base: 1.5, amp: 1.0 })?;
    let pvh = VariableExponent::preset(&heis, ExponentPreset::RadialLog { base: 1.5, amp: 1.0 })?;
    let (mut pmax, mut pmin, mut cdev) = (0.0f64, f64::INFINITY, 0.0f64);
    let mut cdev_h = 0.0;
    for (d, stride, ladder, p) in [
        (cube(plane.clone(), -1.0, 1.0, 40)?, 4, RadiusLadder::new(0.15, 0.9, 1.2)?, &pv),
        (cube(heis.clone(), -1.0, 1.0, 20)?, 2, RadiusLadder::new(0.3, 1.0, 1.2)?, &pvh),
    ] {
        let prep = prepare(&d, stride, ladder)?;
        let p3 = VariableExponent::constant(d.model(), 3.0)?;
        for i in evenly(&inside(&prep), 40) {
            let ball = prep.ball(i);
            let prod = char_duality_product(&d, ball, p)?;
            pmax = pmax.max(prod);
            pmin = pmin.min(prod);
            let dev = (char_duality_product(&d, ball, &p3)? - 1.0).abs();
            if dev / d.h() > cdev_h {
                cdev_h = dev / d.h();
                cdev = dev;
            }
        }
    }
    rep.push(Assertion::at_most("duality product, variable p: max over balls vs recorded C = 2", pmax, recorded));
    rep.push(Assertion::at_least("duality product, variable p: min over balls", pmin, 1.0 / recorded));
    rep.push(Assertion::at_most("duality product, p = 3: |product - 1| / h", cdev_h, 1.0));
    rep.note(format!("duality product range [{pmin:.6}, {pmax:.6}], constant-p deviation {cdev:e}"));
    Ok(rep)
}

struct Cell {
    name: &'static str,
    symbol: &'static str,
    quantity: Quantity,
    s: VariableExponent,
    expect: SweepVerdict,
}

/// Parameters of the dichotomy battery, shared with the built-in scenarios.
pub const DICHOTOMY_NODES: usize = 32;
pub const DICHOTOMY_ALPHA: f64 = 0.5;
pub const DICHOTOMY_BETA: f64 = 0.7;
pub const DICHOTOMY_RMAX: f64 = 0.75;
pub const DICHOTOMY_GAMMA: f64 = 1.2;

pub fn dichotomy_probes(h: f64) -> Probes {
    Probes { inside: true, min_radius: Some(6.0 * h) }
}

fn dichotomy(_: &Ctx) -> Result<CheckReport> {
    let mut rep = CheckReport::new("dichotomy", "boundedness dichotomy of the oscillation functionals");
    let m = GroupModel::heisenberg();
    let h = 2.0 / DICHOTOMY_NODES as f64;
    let domain = LatticeDomain::cube(m.clone(), -1.0, 1.0, h)?;
    let ladder = RadiusLadder::new(3.0 * h, DICHOTOMY_RMAX, DICHOTOMY_GAMMA)?;
    let c = |v: f64| VariableExponent::constant(&m, v);
    let var = VariableExponent::preset(&m, ExponentPreset::RadialLog { base: 1.5, amp: 1.0 })?;
    let alpha = DICHOTOMY_ALPHA;
    let mx = Quantity::Maximal { alpha };
    let (b, d) = (SweepVerdict::Bounded, SweepVerdict::Divergent);
    let cells = vec![
        Cell { name: "gauge mean s=1", symbol: "gauge-beta", quantity: Quantity::Mean, s: c(1.0)?, expect: b },
        Cell { name: "gauge mean s=2", symbol: "gauge-beta", quantity: Quantity::Mean, s: c(2.0)?, expect: b },
        Cell { name: "gauge maximal s=1", symbol: "gauge-beta", quantity: mx.clone(), s: c(1.0)?, expect: b },
        Cell { name: "gauge maximal s=2", symbol: "gauge-beta", quantity: mx.clone(), s: c(2.0)?, expect: b },
        Cell { name: "gauge maximal s=radial-log", symbol: "gauge-beta", quantity: mx.clone(), s: var, expect: b },
        Cell { name: "gauge nonneg s=1", symbol: "gauge-beta", quantity: Quantity::Nonneg, s: c(1.0)?, expect: b },
        Cell { name: "gauge nonneg s=2", symbol: "gauge-beta", quantity: Quantity::Nonneg, s: c(2.0)?, expect: b },
        Cell { name: "jump mean", symbol: "jump", quantity: Quantity::Mean, s: c(2.0)?, expect: d },
        Cell { name: "jump maximal", symbol: "jump", quantity: mx.clone(), s: c(2.0)?, expect: d },
        Cell { name: "jump nonneg", symbol: "jump", quantity: Quantity::Nonneg, s: c(2.0)?, expect: d },
        Cell { name: "signed maximal", symbol: "signed", quantity: mx, s: c(2.0)?, expect: d },
        Cell { name: "signed nonneg", symbol: "signed", quantity: Quantity::Nonneg, s: c(2.0)?, expect: d },
    ];
    for cell in cells {
        let spec = SweepSpec {
            domain: domain.clone(),
            stride: 2,
            ladder,
            symbol: symbol_kind(cell.symbol, DICHOTOMY_BETA, &m)?,
            beta: DICHOTOMY_BETA,
            quantity: cell.quantity,
            exponent: cell.s,
            probes: dichotomy_probes(h),
            rmax_doubling: false,
        };
        let r = refinement_sweep(&spec)?;
        let a = match cell.expect {
            SweepVerdict::Bounded => Assertion::within(format!("{}: trend", cell.name), r.trend, 0.5, 2.0),
            _ => Assertion::at_least(format!("{}: trend", cell.name), r.trend, 1.5),
        };
        rep.push(a);
        rep.note(format!(
            "{}: sup {:.6} -> {:.6}, verdict {:?} (expected {:?}), {} probes at h/2",
            cell.name,
            r.coarse.supremum,
            r.fine.supremum,
            r.verdict,
            cell.expect,
            r.fine.per_ball.len()
        ));
    }
    Ok(rep)
}

fn hls_scaling(_: &Ctx) -> Result<CheckReport> {
    let mut rep = CheckReport::new("hls-scaling", "scale invariance of L^p -> L^q ratios");
    // Powers of two keep the dilated lattices exact images of the base one.
    let scales = [0.5, 1.0, 2.0, 4.0];
    for (model, nodes, alpha, p) in
        [(GroupModel::euclidean(1)?, 1024, 0.3, 1.5), (GroupModel::euclidean(2)?, 40, 0.5, 2.0)]
    {
        let q = 1.0 / (1.0 / p - alpha / model.q_f64());
        let base = cube(model.clone(), -1.0, 1.0, nodes)?;
        let h = base.h();
        let mut fixtures = Vec::new();
        for &r in &scales {
            let d = Arc::new(base.dilated(r)?);
            let prep = prepare(&d, 2, RadiusLadder::new(3.0 * h * r, r, 1.1)?)?;
            let f = gauge_bump(&d, &vec![0.0; model.dim()], 0.5 * r)?;
            fixtures.push(ProbeFixture { id: format!("bump@{r}"), f, family: Arc::new(prep) });
        }
        let pe = VariableExponent::constant(&model, p)?;
        let qe = VariableExponent::constant(&model, q)?;
        let op = OperatorHandle::Maximal { alpha, measure: MeasureMode::Lattice };
        let rr = operator_norm_ratio(&op, &pe, &qe, &fixtures)?;
        rep.push(Assertion::at_most(
            format!("{}: dilated-bump ratio spread, p = {p}, q = {q:.4}", model.name()),
            rr.relative_spread(),
            1e-3,
        ));
        rep.note(format!("{}: ratios in [{:.8}, {:.8}]", model.name(), rr.min_ratio, rr.max_ratio));
    }

    // Variable exponents on one lattice: bumps of several sizes and centres.
    let plane = GroupModel::euclidean(2)?;
    let alpha = 0.5;
    let d = cube(plane.clone(), -2.0, 2.0, 64)?;
    let prep = Arc::new(prepare(&d, 2, RadiusLadder::new(3.0 * d.h(), 2.0, 1.1)?)?);
    for preset in [
        ExponentPreset::RadialLog { base: 1.6, amp: 0.3 },
        ExponentPreset::Bump { base: 1.8, amp: -0.4, center: vec![0.3, 0.0], radius: 1.0 },
    ] {
        let p = VariableExponent::preset(&plane, preset)?;
        let pair = sobolev_pair(&p, alpha, plane.q())?;
        let mut fixtures = Vec::new();
        for (k, (c, r)) in [([0.0, 0.0], 0.3), ([0.0, 0.0], 0.6), ([0.0, 0.0], 1.0), ([0.5, 0.3], 0.4), ([-0.6, 0.4], 0.8)]
            .iter()
            .enumerate()
        {
            let f = gauge_bump(&d, c, *r)?;
            fixtures.push(ProbeFixture { id: format!("bump-{k}"), f, family: prep.clone() });
        }
        let op = OperatorHandle::Maximal { alpha, measure: MeasureMode::Lattice };
        let rr = operator_norm_ratio(&op, &pair.p, &pair.q, &fixtures)?;
        rep.push(Assertion::at_most(
            format!("variable pair p in [{:.2}, {:.2}]: max/min ratio over bumps", p.p_minus(), p.p_plus()),
            rr.max_ratio / rr.min_ratio,
            3.0,
        ));
    }
    Ok(rep)
}

fn ball_identities(_: &Ctx) -> Result<CheckReport> {
    let mut rep = CheckReport::new("ball-identities", "E/F identity, mean bound and indicator identities on the plane");
    let d = cube(GroupModel::euclidean(2)?, -1.0, 1.0, 40)?;
    let prep = prepare(&d, 2, RadiusLadder::new(3.0 * d.h(), 1.0, 1.1)?)?;
    // The restricted identity needs |b| free of interior zeros at small
    // alpha; a sign-changing b already breaks it by 16% at alpha = 0.5.
    let b = sample(&d, |x| 2.0 + x[0] - 0.5 * x[1] * x[1] + 0.25 * x[0] * x[1])?;
    let tested = evenly(&inside(&prep), 16);
    let (mut ef, mut mean_gap, mut chi_err, mut gap) = (0.0f64, f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for &i in &tested {
        let ball = prep.ball(i).clone();
        ef = ef.max(ef_oscillation_residual(&b, &ball)?);
        let s = prep.support(i);
        let mean = s.sum_by(b.values(), |x| x) / s.count() as f64;
        let v = prep.measure(i, MeasureMode::Lattice);
        let chi = indicator(&d, &ball).function;
        let bchi = b.zip_with(&chi, |u, w| u * w)?;
        for alpha in [0.5, 1.0] {
            let r = maximal_restricted_field(&b, &prep, alpha, MeasureMode::Lattice, &ball)?;
            let m = maximal_field(&chi, &prep, &MaximalConfig::new(alpha))?;
            let mb = maximal_field(&bchi, &prep, &MaximalConfig::new(alpha))?;
            let target = v.powf(alpha / 2.0);
            for n in s.nodes() {
                mean_gap = mean_gap.max(mean.abs() - v.powf(-alpha / 2.0) * r.values[n]);
                chi_err = chi_err.max((m.values[n] - target).abs() / target);
                gap = gap.max((mb.values[n] - r.values[n]).abs() / r.values[n]);
            }
        }
    }
    rep.push(Assertion::at_most("|int_E |b - b_B| - int_F |b - b_B||", ef, 1e-9));
    rep.push(Assertion::at_most("|b_B| - |B|^(-alpha/Q) M_(alpha,B) b", mean_gap, 1e-10));
    rep.push(Assertion::at_most("M(chi_B) vs |B|^(alpha/Q) on the lattice measure, relative", chi_err, 0.02));
    rep.push(Assertion::at_most("M(b chi_B) vs M_(alpha,B) b, relative", gap, 2e-9));
    rep.note(format!("{} balls of {}", tested.len(), prep.len()));
    Ok(rep)
}
