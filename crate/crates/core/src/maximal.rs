//! Fractional maximal operators over a finite ball family, the maximal and
//! nonlinear commutators, and operator-norm ratio probes.
//!
//! Ball integrals are computed once per (ball, function) pair and then
//! scattered onto the nodes of each ball with a running maximum, visiting
//! balls in canonical family order so the first maximiser wins ties.

use std::cmp::Ordering;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::VariableExponent;
use crate::grid::{Analytic, Ball, BallFamily, BallSupport, GridFunction, LatticeDomain};
use crate::group::GroupPoint;
use crate::norms::luxemburg_norm;

/// Which measure `|B|` enters the weight `|B|^{alpha/Q - 1}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureMode {
    /// Node count times `h^n`: the quadrature of the ball's own indicator.
    #[default]
    Lattice,
    /// The closed form `c1 r^Q`.
    Analytic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximalConfig {
    pub alpha: f64,
    pub measure: MeasureMode,
    /// Restricts the supremum to balls inside this one.
    pub restriction: Option<Ball>,
}

impl MaximalConfig {
    pub fn new(alpha: f64) -> Self {
        MaximalConfig { alpha, measure: MeasureMode::Lattice, restriction: None }
    }

    pub fn with_measure(mut self, measure: MeasureMode) -> Self {
        self.measure = measure;
        self
    }

    pub fn restricted_to(mut self, ball: Ball) -> Self {
        self.restriction = Some(ball);
        self
    }

    fn check(&self, q: f64) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha < q) {
            return Err(Error::Hypothesis(format!("need 0 <= alpha < Q, got alpha = {}, Q = {q}", self.alpha)));
        }
        Ok(())
    }
}

fn ball_order(a: &Ball, b: &Ball) -> Ordering {
    a.center()
        .iter()
        .zip(b.center().iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
        .then(a.radius().total_cmp(&b.radius()))
}

/// A ball family together with its lattice supports and measures.
#[derive(Debug, Clone)]
pub struct PreparedFamily {
    domain: Arc<LatticeDomain>,
    family: BallFamily,
    supports: Vec<BallSupport>,
    lattice_measure: Vec<f64>,
    analytic_measure: Vec<f64>,
    /// Index ranges of balls sharing a centre.
    groups: Vec<(usize, usize)>,
}

impl PreparedFamily {
    pub fn new(domain: Arc<LatticeDomain>, family: BallFamily) -> Result<Self> {
        let dim = domain.dim();
        if let Some(b) = family.balls().iter().find(|b| b.center().len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: b.center().len() });
        }
        let supports: Vec<BallSupport> = family.balls().par_iter().map(|b| domain.ball_support(b)).collect();
        if supports.iter().all(|s| s.is_empty()) {
            return Err(Error::EmptyFamily);
        }
        let cell = domain.cell_volume();
        let lattice_measure = supports.iter().map(|s| s.count() as f64 * cell).collect();
        let model = domain.model();
        let analytic_measure = family.balls().iter().map(|b| model.ball_measure(b.radius())).collect::<Result<_>>()?;
        let mut groups = Vec::new();
        let balls = family.balls();
        let mut start = 0;
        for i in 1..=balls.len() {
            if i == balls.len() || balls[i].center() != balls[start].center() {
                groups.push((start, i));
                start = i;
            }
        }
        Ok(PreparedFamily { domain, family, supports, lattice_measure, analytic_measure, groups })
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn family(&self) -> &BallFamily {
        &self.family
    }

    pub fn len(&self) -> usize {
        self.supports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty()
    }

    pub fn ball(&self, i: usize) -> &Ball {
        &self.family.balls()[i]
    }

    pub fn support(&self, i: usize) -> &BallSupport {
        &self.supports[i]
    }

    pub fn measure(&self, i: usize, mode: MeasureMode) -> f64 {
        match mode {
            MeasureMode::Lattice => self.lattice_measure[i],
            MeasureMode::Analytic => self.analytic_measure[i],
        }
    }

    /// Balls whose lattice support is empty.
    pub fn sub_resolution_count(&self) -> usize {
        self.supports.iter().filter(|s| s.is_empty()).count()
    }

    /// Position of `ball` in the family, if present.
    pub fn index_of(&self, ball: &Ball) -> Option<usize> {
        self.family.balls().binary_search_by(|b| ball_order(b, ball)).ok()
    }

    fn check_domain(&self, f: &GridFunction) -> Result<()> {
        if Arc::ptr_eq(f.domain(), &self.domain) || **f.domain() == *self.domain {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    /// `|B|^{alpha/Q - 1}` per ball (0 for sub-resolution balls).
    pub fn weights(&self, alpha: f64, mode: MeasureMode) -> Vec<f64> {
        let e = alpha / self.domain.model().q_f64() - 1.0;
        (0..self.len())
            .map(|i| if self.supports[i].is_empty() { 0.0 } else { self.measure(i, mode).powf(e) })
            .collect()
    }

    /// `h^n sum_B |f|` (or `f`) per ball.
    pub fn ball_sums(&self, values: &[f64], use_abs: bool) -> Vec<f64> {
        let cell = self.domain.cell_volume();
        self.supports
            .par_iter()
            .map(|s| cell * if use_abs { s.sum_by(values, f64::abs) } else { s.sum_by(values, |v| v) })
            .collect()
    }

    /// Balls `B` with `B ⊆ star`: accepted outright when the quasi-triangle
    /// bound guarantees containment, otherwise (within `c0 r*`) only if the
    /// lattice support is a subset of the star's support. Canonical order.
    pub fn admissible_within(&self, star: &Ball, star_support: &BallSupport) -> Vec<usize> {
        let model = self.domain.model();
        let c0 = model.c0();
        let rs = star.radius();
        let mut out = Vec::new();
        for &(a, b) in &self.groups {
            let c = self.family.balls()[a].center();
            let d = model.distance_raw(c.coords(), star.center().coords());
            if d >= c0 * rs {
                continue;
            }
            for i in a..b {
                let r = self.family.balls()[i].radius();
                if d + r > c0 * rs {
                    break;
                }
                let s = &self.supports[i];
                if s.is_empty() {
                    continue;
                }
                let sure = c0 == 1.0 && d + r <= rs;
                if sure || s.nodes().all(|n| star_support.contains_node(n)) {
                    out.push(i);
                }
            }
        }
        out
    }
}

/// Per-node maximal values. Uncovered nodes hold 0 and no argmax.
#[derive(Debug, Clone, PartialEq)]
pub struct MaximalField {
    pub values: Vec<f64>,
    /// Family index of the first maximising ball; `usize::MAX` marks a
    /// restriction ball that is not a family member.
    pub argmax: Vec<Option<usize>>,
}

impl MaximalField {
    pub fn covered(&self, i: usize) -> bool {
        self.argmax[i].is_some()
    }

    pub fn uncovered_count(&self) -> usize {
        self.argmax.iter().filter(|a| a.is_none()).count()
    }
}

/// Index marking the restriction ball when it is not a family member.
pub const STAR: usize = usize::MAX;

/// Balls taking part in one supremum, in canonical order.
struct Selection<'a> {
    entries: Vec<(usize, &'a BallSupport)>,
}

struct Star {
    ball: Ball,
    support: BallSupport,
    family_index: Option<usize>,
}

impl Star {
    fn new(prep: &PreparedFamily, ball: &Ball) -> Result<Self> {
        if ball.center().len() != prep.domain.dim() {
            return Err(Error::DimensionMismatch { expected: prep.domain.dim(), found: ball.center().len() });
        }
        let family_index = prep.index_of(ball);
        let support = match family_index {
            Some(i) => prep.supports[i].clone(),
            None => prep.domain.ball_support(ball),
        };
        Ok(Star { ball: ball.clone(), support, family_index })
    }

    fn lattice_measure(&self, prep: &PreparedFamily) -> f64 {
        self.support.count() as f64 * prep.domain.cell_volume()
    }

    fn weight(&self, prep: &PreparedFamily, alpha: f64, mode: MeasureMode) -> Result<f64> {
        let m = match mode {
            MeasureMode::Lattice => self.lattice_measure(prep),
            MeasureMode::Analytic => prep.domain.model().ball_measure(self.ball.radius())?,
        };
        Ok(if self.support.is_empty() { 0.0 } else { m.powf(alpha / prep.domain.model().q_f64() - 1.0) })
    }
}

fn selection<'a>(prep: &'a PreparedFamily, star: Option<&'a Star>) -> Selection<'a> {
    match star {
        None => Selection { entries: (0..prep.len()).map(|i| (i, &prep.supports[i])).collect() },
        Some(s) => {
            let mut idx = prep.admissible_within(&s.ball, &s.support);
            let mut entries: Vec<(usize, &BallSupport)> = Vec::with_capacity(idx.len() + 1);
            match s.family_index {
                Some(i) => {
                    if let Err(pos) = idx.binary_search(&i) {
                        idx.insert(pos, i);
                    }
                    entries.extend(idx.iter().map(|&i| (i, &prep.supports[i])));
                }
                None => {
                    let pos = idx.partition_point(|&i| ball_order(prep.ball(i), &s.ball).is_lt());
                    entries.extend(idx[..pos].iter().map(|&i| (i, &prep.supports[i])));
                    entries.push((STAR, &s.support));
                    entries.extend(idx[pos..].iter().map(|&i| (i, &prep.supports[i])));
                }
            }
            Selection { entries }
        }
    }
}

const CHUNKS: usize = 64;

/// Running maximum of one value per ball over its support.
fn scatter_uniform(n: usize, sel: &Selection<'_>, value: impl Fn(usize) -> f64 + Sync) -> MaximalField {
    let mut values = vec![f64::NEG_INFINITY; n];
    let mut argmax: Vec<Option<usize>> = vec![None; n];
    let chunk = n.div_ceil(CHUNKS).max(1);
    let vals: Vec<f64> = sel.entries.iter().map(|&(i, _)| value(i)).collect();
    values.par_chunks_mut(chunk).zip(argmax.par_chunks_mut(chunk)).enumerate().for_each(|(c, (out, arg))| {
        let lo = c * chunk;
        let hi = lo + out.len();
        for (k, &(idx, s)) in sel.entries.iter().enumerate() {
            let v = vals[k];
            let runs = s.runs();
            let first = runs.partition_point(|r| (r.start + r.len) as usize <= lo);
            for r in &runs[first..] {
                let a = r.start as usize;
                if a >= hi {
                    break;
                }
                let b = (a + r.len as usize).min(hi);
                for node in a.max(lo)..b {
                    let j = node - lo;
                    if v > out[j] {
                        out[j] = v;
                        arg[j] = Some(idx);
                    }
                }
            }
        }
    });
    finish(values, argmax)
}

fn finish(mut values: Vec<f64>, argmax: Vec<Option<usize>>) -> MaximalField {
    for (v, a) in values.iter_mut().zip(&argmax) {
        if a.is_none() {
            *v = 0.0;
        }
    }
    MaximalField { values, argmax }
}

fn prepare_star(prep: &PreparedFamily, cfg: &MaximalConfig) -> Result<Option<Star>> {
    cfg.restriction.as_ref().map(|b| Star::new(prep, b)).transpose()
}

fn weight_of(weights: &[f64], star_w: f64, i: usize) -> f64 {
    if i == STAR {
        star_w
    } else {
        weights[i]
    }
}

/// `M_alpha f` at every node.
pub fn maximal_field(f: &GridFunction, prep: &PreparedFamily, cfg: &MaximalConfig) -> Result<MaximalField> {
    prep.check_domain(f)?;
    cfg.check(prep.domain.model().q_f64())?;
    let star = prepare_star(prep, cfg)?;
    let weights = prep.weights(cfg.alpha, cfg.measure);
    let sums = prep.ball_sums(f.values(), true);
    let (star_w, star_sum) = match &star {
        Some(s) => (
            s.weight(prep, cfg.alpha, cfg.measure)?,
            prep.domain.cell_volume() * s.support.sum_by(f.values(), f64::abs),
        ),
        None => (0.0, 0.0),
    };
    let sel = selection(prep, star.as_ref());
    Ok(scatter_uniform(prep.domain.node_count(), &sel, |i| {
        if i == STAR {
            star_w * star_sum
        } else {
            weights[i] * sums[i]
        }
    }))
}

/// One pointwise value and the first ball attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValue {
    pub value: f64,
    pub argmax: usize,
}

/// `M_alpha f(x)` for an arbitrary point `x`, scanning balls containing it.
pub fn maximal(f: &GridFunction, prep: &PreparedFamily, cfg: &MaximalConfig, x: &GroupPoint) -> Result<PointValue> {
    prep.check_domain(f)?;
    cfg.check(prep.domain.model().q_f64())?;
    if x.len() != prep.domain.dim() {
        return Err(Error::DimensionMismatch { expected: prep.domain.dim(), found: x.len() });
    }
    let star = prepare_star(prep, cfg)?;
    let model = prep.domain.model();
    let sel = selection(prep, star.as_ref());
    let weights = prep.weights(cfg.alpha, cfg.measure);
    let star_w = match &star {
        Some(s) => s.weight(prep, cfg.alpha, cfg.measure)?,
        None => 0.0,
    };
    let cell = prep.domain.cell_volume();
    let mut best: Option<PointValue> = None;
    for &(i, s) in &sel.entries {
        let ball = if i == STAR { &star.as_ref().unwrap().ball } else { prep.ball(i) };
        if s.is_empty() || !ball.contains(model, x.coords()) {
            continue;
        }
        let v = weight_of(&weights, star_w, i) * (cell * s.sum_by(f.values(), f64::abs));
        if best.map_or(true, |b| v > b.value) {
            best = Some(PointValue { value: v, argmax: i });
        }
    }
    best.ok_or_else(|| Error::Uncovered(x.coords().to_vec()))
}

/// `M_{alpha, B*} b(x)`: supremum over family balls inside `B*`, with `B*`
/// itself always admitted.
pub fn maximal_restricted(
    b: &GridFunction,
    prep: &PreparedFamily,
    alpha: f64,
    measure: MeasureMode,
    bstar: &Ball,
    x: &GroupPoint,
) -> Result<PointValue> {
    if !bstar.contains(prep.domain.model(), x.coords()) {
        return Err(Error::Uncovered(x.coords().to_vec()));
    }
    let cfg = MaximalConfig { alpha, measure, restriction: Some(bstar.clone()) };
    maximal(b, prep, &cfg, x)
}

/// `M_{alpha, B*} b` at every node (covered exactly on the nodes of `B*`).
pub fn maximal_restricted_field(
    b: &GridFunction,
    prep: &PreparedFamily,
    alpha: f64,
    measure: MeasureMode,
    bstar: &Ball,
) -> Result<MaximalField> {
    let cfg = MaximalConfig { alpha, measure, restriction: Some(bstar.clone()) };
    maximal_field(b, prep, &cfg)
}

/// Ball values of a uniform table, scattered with a running maximum onto
/// the nodes of a restriction ball; returns values aligned with the star's
/// support. `buf` must be at least the node count and is left all
/// `-inf` on return.
pub fn restricted_on_support(
    prep: &PreparedFamily,
    table: &[f64],
    star_index: usize,
    buf: &mut [f64],
) -> Vec<f64> {
    let star = prep.ball(star_index);
    let ss = &prep.supports[star_index];
    let mut idx = prep.admissible_within(star, ss);
    if idx.binary_search(&star_index).is_err() {
        idx.push(star_index);
    }
    for &i in &idx {
        let v = table[i];
        for n in prep.supports[i].nodes() {
            if v > buf[n] {
                buf[n] = v;
            }
        }
    }
    ss.nodes()
        .map(|n| {
            let v = buf[n];
            buf[n] = f64::NEG_INFINITY;
            v
        })
        .collect()
}

/// Dense ranks of `b`: equal values share a rank.
fn dense_ranks(b: &[f64]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..b.len() as u32).collect();
    order.sort_by(|&i, &j| b[i as usize].total_cmp(&b[j as usize]));
    let mut ranks = vec![0u32; b.len()];
    let mut r = 0u32;
    for k in 0..order.len() {
        if k > 0 && b[order[k] as usize] != b[order[k - 1] as usize] {
            r += 1;
        }
        ranks[order[k] as usize] = r;
    }
    ranks
}

/// `int_B |b(x) - b(y)| |f(y)| dy / h^n` for every `x` in the support, in
/// support order. Nodes are grouped by value of `b`, so equal values
/// contribute exactly zero.
fn commutator_ball(s: &BallSupport, b: &[f64], absf: &[f64], ranks: &[u32]) -> Vec<f64> {
    let mut items: Vec<(u32, u32)> = s.nodes().enumerate().map(|(pos, n)| (ranks[n], pos as u32)).collect();
    items.sort_unstable();
    let nodes: Vec<usize> = s.nodes().collect();
    // groups of equal b
    let mut groups: Vec<(usize, usize, f64, f64, f64)> = Vec::new();
    let mut k = 0;
    while k < items.len() {
        let start = k;
        let (mut fs, mut gs) = (0.0, 0.0);
        while k < items.len() && items[k].0 == items[start].0 {
            let n = nodes[items[k].1 as usize];
            fs += absf[n];
            gs += b[n] * absf[n];
            k += 1;
        }
        groups.push((start, k, b[nodes[items[start].1 as usize]], fs, gs));
    }
    let mut out = vec![0.0; items.len()];
    let m = groups.len();
    let mut below = vec![(0.0, 0.0); m];
    let mut above = vec![(0.0, 0.0); m];
    let (mut f, mut g) = (0.0, 0.0);
    for i in 0..m {
        below[i] = (f, g);
        f += groups[i].3;
        g += groups[i].4;
    }
    let (mut f, mut g) = (0.0, 0.0);
    for i in (0..m).rev() {
        above[i] = (f, g);
        f += groups[i].3;
        g += groups[i].4;
    }
    for i in 0..m {
        let (start, end, v, _, _) = groups[i];
        let (fl, gl) = below[i];
        let (fh, gh) = above[i];
        let val = (v * (fl - fh) - (gl - gh)).max(0.0);
        for it in &items[start..end] {
            out[it.1 as usize] = val;
        }
    }
    out
}

const BATCH: usize = 256;

/// `M_{alpha, b} f(x) = sup_B |B|^{alpha/Q - 1} int_B |b(x) - b(y)| |f(y)| dy`.
pub fn maximal_commutator_field(
    b: &GridFunction,
    f: &GridFunction,
    prep: &PreparedFamily,
    cfg: &MaximalConfig,
) -> Result<MaximalField> {
    prep.check_domain(f)?;
    prep.check_domain(b)?;
    cfg.check(prep.domain.model().q_f64())?;
    let star = prepare_star(prep, cfg)?;
    let sel = selection(prep, star.as_ref());
    let weights = prep.weights(cfg.alpha, cfg.measure);
    let star_w = match &star {
        Some(s) => s.weight(prep, cfg.alpha, cfg.measure)?,
        None => 0.0,
    };
    let n = prep.domain.node_count();
    let cell = prep.domain.cell_volume();
    let absf: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    let ranks = dense_ranks(b.values());
    let mut values = vec![f64::NEG_INFINITY; n];
    let mut argmax: Vec<Option<usize>> = vec![None; n];
    for batch in sel.entries.chunks(BATCH) {
        let per: Vec<Vec<f64>> = batch
            .par_iter()
            .map(|&(i, s)| {
                let w = weight_of(&weights, star_w, i) * cell;
                let mut v = commutator_ball(s, b.values(), &absf, &ranks);
                v.iter_mut().for_each(|x| *x *= w);
                v
            })
            .collect();
        for (&(i, s), v) in batch.iter().zip(&per) {
            for (node, &val) in s.nodes().zip(v) {
                if val > values[node] {
                    values[node] = val;
                    argmax[node] = Some(i);
                }
            }
        }
    }
    Ok(finish(values, argmax))
}

/// `[b, M_alpha] f = b M_alpha f - M_alpha (b f)`, both terms over the same
/// family. Uncovered nodes hold 0.
pub fn nonlinear_commutator_field(
    b: &GridFunction,
    f: &GridFunction,
    prep: &PreparedFamily,
    cfg: &MaximalConfig,
) -> Result<MaximalField> {
    let mf = maximal_field(f, prep, cfg)?;
    let bf = b.zip_with(f, |x, y| x * y)?;
    let mbf = maximal_field(&bf, prep, cfg)?;
    let values = (0..mf.values.len())
        .map(|i| if mf.covered(i) { b.values()[i] * mf.values[i] - mbf.values[i] } else { 0.0 })
        .collect();
    Ok(MaximalField { values, argmax: mf.argmax })
}

/// Operators that can be probed for `L^p -> L^q` ratios.
#[derive(Clone)]
pub enum OperatorHandle {
    Identity,
    Maximal { alpha: f64, measure: MeasureMode },
    /// Symbol given analytically so it can be sampled on every fixture's
    /// lattice.
    MaximalCommutator { alpha: f64, measure: MeasureMode, symbol: Analytic },
    /// Absolute value of the nonlinear commutator.
    NonlinearCommutator { alpha: f64, measure: MeasureMode, symbol: Analytic },
}

impl std::fmt::Debug for OperatorHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OperatorHandle::Identity => write!(f, "Identity"),
            OperatorHandle::Maximal { alpha, .. } => write!(f, "Maximal(alpha = {alpha})"),
            OperatorHandle::MaximalCommutator { alpha, .. } => write!(f, "MaximalCommutator(alpha = {alpha})"),
            OperatorHandle::NonlinearCommutator { alpha, .. } => write!(f, "NonlinearCommutator(alpha = {alpha})"),
        }
    }
}

impl OperatorHandle {
    pub fn apply(&self, f: &GridFunction, prep: &PreparedFamily) -> Result<GridFunction> {
        let domain = f.domain();
        let values = match self {
            OperatorHandle::Identity => return Ok(f.clone()),
            OperatorHandle::Maximal { alpha, measure } => {
                maximal_field(f, prep, &MaximalConfig::new(*alpha).with_measure(*measure))?.values
            }
            OperatorHandle::MaximalCommutator { alpha, measure, symbol } => {
                let b = crate::grid::sample(domain, |x| symbol(x))?;
                maximal_commutator_field(&b, f, prep, &MaximalConfig::new(*alpha).with_measure(*measure))?.values
            }
            OperatorHandle::NonlinearCommutator { alpha, measure, symbol } => {
                let b = crate::grid::sample(domain, |x| symbol(x))?;
                nonlinear_commutator_field(&b, f, prep, &MaximalConfig::new(*alpha).with_measure(*measure))?
                    .values
                    .into_iter()
                    .map(f64::abs)
                    .collect()
            }
        };
        GridFunction::new(domain.clone(), values)
    }
}

/// An input function with the family its operator is evaluated over.
#[derive(Debug, Clone)]
pub struct ProbeFixture {
    pub id: String,
    pub f: GridFunction,
    pub family: Arc<PreparedFamily>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub fixture_id: String,
    pub p_norm: f64,
    pub q_norm: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRatioReport {
    pub rows: Vec<RatioRow>,
    pub max_ratio: f64,
    pub min_ratio: f64,
}

impl NormRatioReport {
    /// `(max - min) / max` over the fixtures.
    pub fn relative_spread(&self) -> f64 {
        (self.max_ratio - self.min_ratio) / self.max_ratio
    }
}

/// `max_f ||op f||_{q(.)} / ||f||_{p(.)}` with every per-fixture row.
pub fn operator_norm_ratio(
    op: &OperatorHandle,
    p: &VariableExponent,
    q: &VariableExponent,
    fixtures: &[ProbeFixture],
) -> Result<NormRatioReport> {
    if fixtures.is_empty() {
        return Err(Error::invalid("operator-norm probe needs at least one fixture"));
    }
    let mut rows = Vec::with_capacity(fixtures.len());
    for fx in fixtures {
        let pn = luxemburg_norm(&fx.f, p)?;
        if pn == 0.0 {
            return Err(Error::ZeroDenominator("fixture has zero p-norm"));
        }
        let out = op.apply(&fx.f, &fx.family)?;
        let qn = luxemburg_norm(&out, q)?;
        rows.push(RatioRow { fixture_id: fx.id.clone(), p_norm: pn, q_norm: qn, ratio: qn / pn });
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(NormRatioReport { rows, max_ratio, min_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_ball_family, indicator, sample, RadiusLadder};
    use crate::group::GroupModel;

    fn r1_setup(h: f64) -> (Arc<LatticeDomain>, PreparedFamily) {
        let d = Arc::new(LatticeDomain::new(GroupModel::euclidean(1).unwrap(), vec![-3.0], vec![3.0], h, 0.0).unwrap());
        let fam = build_ball_family(&d, 1, RadiusLadder::new(3.0 * h, 4.0, 1.05).unwrap()).unwrap();
        let p = PreparedFamily::new(d.clone(), fam).unwrap();
        (d, p)
    }

    #[test]
    fn constant_reproduced_exactly() {
        let (d, p) = r1_setup(0.05);
        let c = GridFunction::constant(&d, 2.5).unwrap();
        let m = maximal_field(&c, &p, &MaximalConfig::new(0.0)).unwrap();
        assert_eq!(m.uncovered_count(), 0);
        assert!(m.values.iter().all(|&v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn interval_average_at_two() {
        // best interval containing 2 is [0, 2]: average 1/2
        let (d, p) = r1_setup(0.01);
        let f = sample(&d, |x| if x[0] > 0.0 && x[0] < 1.0 { 1.0 } else { 0.0 }).unwrap();
        let x = GroupPoint::new(vec![2.0]).unwrap();
        let v = maximal(&f, &p, &MaximalConfig::new(0.0), &x).unwrap().value;
        assert!((v - 0.5).abs() < 0.01, "{v}");
    }

    #[test]
    fn pointwise_matches_field() {
        let (d, p) = r1_setup(0.05);
        let f = sample(&d, |x| (-x[0] * x[0]).exp() * (1.0 + x[0].sin())).unwrap();
        let cfg = MaximalConfig::new(0.3);
        let field = maximal_field(&f, &p, &cfg).unwrap();
        for i in (0..d.node_count()).step_by(7) {
            let pv = maximal(&f, &p, &cfg, &d.node_point(i)).unwrap();
            assert_eq!(pv.value, field.values[i]);
            assert_eq!(Some(pv.argmax), field.argmax[i]);
        }
    }

    #[test]
    fn characteristic_identity() {
        let (d, p) = r1_setup(0.02);
        let bi = p.len() / 2 + 5;
        let ball = p.ball(bi).clone();
        let chi = indicator(&d, &ball).function;
        for alpha in [0.25, 0.5] {
            let m = maximal_field(&chi, &p, &MaximalConfig::new(alpha)).unwrap();
            let expect = p.measure(bi, MeasureMode::Lattice).powf(alpha);
            for n in p.support(bi).nodes() {
                assert!((m.values[n] - expect).abs() <= 1e-12 * expect);
            }
            let r = maximal_restricted_field(&chi, &p, alpha, MeasureMode::Lattice, &ball).unwrap();
            for n in p.support(bi).nodes() {
                assert!((r.values[n] - expect).abs() <= 1e-12 * expect);
            }
        }
    }

    #[test]
    fn restricted_constant_and_star_outside_family() {
        let (d, p) = r1_setup(0.05);
        let star = Ball::new(GroupPoint::new(vec![0.013]).unwrap(), 1.234).unwrap();
        let c = GridFunction::constant(&d, 3.0).unwrap();
        let r = maximal_restricted_field(&c, &p, 0.5, MeasureMode::Lattice, &star).unwrap();
        let s = d.ball_support(&star);
        let meas = s.count() as f64 * d.cell_volume();
        for n in s.nodes() {
            assert!((r.values[n] - 3.0 * meas.sqrt()).abs() < 1e-12);
            assert_eq!(r.argmax[n], Some(STAR));
        }
        assert_eq!(r.uncovered_count(), d.node_count() - s.count());
        let one = GridFunction::constant(&d, 1.0).unwrap();
        let x = GroupPoint::new(vec![0.2]).unwrap();
        assert!((maximal_restricted(&one, &p, 0.0, MeasureMode::Lattice, &star, &x).unwrap().value - 1.0).abs() < 1e-12);
        let far = GroupPoint::new(vec![2.5]).unwrap();
        assert!(matches!(
            maximal_restricted(&one, &p, 0.0, MeasureMode::Lattice, &star, &far),
            Err(Error::Uncovered(_))
        ));
    }

    #[test]
    fn restricted_on_support_matches_field() {
        let (d, p) = r1_setup(0.05);
        let b = sample(&d, |x| 1.0 + x[0] * x[0]).unwrap();
        let w = p.weights(0.5, MeasureMode::Lattice);
        let sums = p.ball_sums(b.values(), true);
        let table: Vec<f64> = w.iter().zip(&sums).map(|(a, b)| a * b).collect();
        let mut buf = vec![f64::NEG_INFINITY; d.node_count()];
        for si in [3usize, p.len() / 2, p.len() - 1] {
            let fast = restricted_on_support(&p, &table, si, &mut buf);
            let field = maximal_restricted_field(&b, &p, 0.5, MeasureMode::Lattice, p.ball(si)).unwrap();
            let slow: Vec<f64> = p.support(si).nodes().map(|n| field.values[n]).collect();
            assert_eq!(fast, slow);
            assert!(buf.iter().all(|v| *v == f64::NEG_INFINITY));
        }
    }

    #[test]
    fn commutators() {
        let (d, p) = r1_setup(0.05);
        let f = sample(&d, |x| (-x[0] * x[0]).exp()).unwrap();
        let c = GridFunction::constant(&d, 1.7).unwrap();
        let cfg = MaximalConfig::new(0.5);
        let mc = maximal_commutator_field(&c, &f, &p, &cfg).unwrap();
        assert!(mc.values.iter().all(|&v| v == 0.0));
        let zero = GridFunction::constant(&d, 0.0).unwrap();
        let b = sample(&d, |x| x[0].abs().sqrt()).unwrap();
        assert!(maximal_commutator_field(&b, &zero, &p, &cfg).unwrap().values.iter().all(|&v| v == 0.0));
        let one = GridFunction::constant(&d, 1.0).unwrap();
        let nl = nonlinear_commutator_field(&one, &f, &p, &cfg).unwrap();
        assert!(nl.values.iter().all(|&v| v == 0.0));
        // brute force check of the sorted-prefix evaluation
        let mc = maximal_commutator_field(&b, &f, &p, &cfg).unwrap();
        let w = p.weights(0.5, MeasureMode::Lattice);
        for x in (0..d.node_count()).step_by(13) {
            let mut best: f64 = f64::NEG_INFINITY;
            for i in 0..p.len() {
                let s = p.support(i);
                if !s.contains_node(x) {
                    continue;
                }
                let v: f64 = s.nodes().map(|y| (b.values()[x] - b.values()[y]).abs() * f.values()[y]).sum();
                best = best.max(w[i] * d.cell_volume() * v);
            }
            assert!((mc.values[x] - best).abs() <= 1e-12 * best.max(1.0));
        }
    }

    #[test]
    fn alpha_out_of_range() {
        let (d, p) = r1_setup(0.1);
        let f = GridFunction::constant(&d, 1.0).unwrap();
        assert!(matches!(maximal_field(&f, &p, &MaximalConfig::new(1.0)), Err(Error::Hypothesis(_))));
        assert!(matches!(maximal_field(&f, &p, &MaximalConfig::new(-0.1)), Err(Error::Hypothesis(_))));
    }
}
