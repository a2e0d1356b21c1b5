//! Lipschitz seminorms of sampled symbols, oscillation functionals over a
//! ball family, and resolution sweeps that separate bounded functionals
//! from divergent ones.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::VariableExponent;
use crate::grid::{build_ball_family, pairwise_sum, sample, Ball, FamilyDescriptor, GridFunction, LatticeDomain, RadiusLadder};
use crate::group::GroupModel;
use crate::maximal::{restricted_on_support, MeasureMode, PreparedFamily};
use crate::norms::luxemburg_on_nodes;

/// Analytic symbols with known Lipschitz membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolKind {
    /// `rho(shift^-1 x)^beta`.
    GaugePower {
        beta: f64,
        #[serde(default)]
        shift: Option<Vec<f64>>,
    },
    /// `-rho(x)^beta`.
    NegGaugePower { beta: f64 },
    Constant { value: f64 },
    /// `offset + sum coeffs[k] x_k` over the horizontal coordinates.
    Affine { coeffs: Vec<f64>, offset: f64 },
    /// `x_axis`: Lipschitz but changes sign.
    Signed { axis: usize },
    /// `scale log(1 + 1/rho(x))`.
    LogSpike { scale: f64 },
    /// Indicator of `{x_axis > at}`.
    Jump { axis: usize, at: f64 },
}

impl SymbolKind {
    pub fn validate(&self, model: &GroupModel) -> Result<()> {
        let dim = model.dim();
        match self {
            SymbolKind::GaugePower { beta, shift } => {
                check_beta(*beta)?;
                if let Some(s) = shift {
                    if s.len() != dim {
                        return Err(Error::DimensionMismatch { expected: dim, found: s.len() });
                    }
                }
            }
            SymbolKind::NegGaugePower { beta } => check_beta(*beta)?,
            SymbolKind::Affine { coeffs, .. } => {
                if coeffs.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: coeffs.len() });
                }
                if coeffs.iter().enumerate().any(|(k, c)| *c != 0.0 && model.layer(k) > 1) {
                    return Err(Error::invalid("affine symbols may only involve horizontal coordinates"));
                }
            }
            SymbolKind::Signed { axis } | SymbolKind::Jump { axis, .. } => {
                if *axis >= dim || model.layer(*axis) > 1 {
                    return Err(Error::invalid(format!("axis {axis} is not a horizontal coordinate")));
                }
            }
            SymbolKind::Constant { .. } | SymbolKind::LogSpike { .. } => {}
        }
        Ok(())
    }

    pub fn eval(&self, model: &GroupModel, x: &[f64]) -> f64 {
        match self {
            SymbolKind::GaugePower { beta, shift } => match shift {
                Some(s) => model.distance_raw(s, x).powf(*beta),
                None => model.norm_raw(x).powf(*beta),
            },
            SymbolKind::NegGaugePower { beta } => -model.norm_raw(x).powf(*beta),
            SymbolKind::Constant { value } => *value,
            SymbolKind::Affine { coeffs, offset } => offset + coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>(),
            SymbolKind::Signed { axis } => x[*axis],
            SymbolKind::LogSpike { scale } => scale * (1.0 + 1.0 / model.norm_raw(x)).ln(),
            SymbolKind::Jump { axis, at } => {
                if x[*axis] > *at {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Belongs to every `Lambda_beta`, `0 < beta < 1`, on bounded sets.
    pub fn is_lipschitz(&self) -> bool {
        !matches!(self, SymbolKind::LogSpike { .. } | SymbolKind::Jump { .. })
    }

    pub fn is_nonnegative(&self) -> bool {
        match self {
            SymbolKind::GaugePower { .. } | SymbolKind::LogSpike { .. } | SymbolKind::Jump { .. } => true,
            SymbolKind::Constant { value } => *value >= 0.0,
            _ => false,
        }
    }

    /// Exponent the symbol was built for, if any.
    pub fn declared_beta(&self) -> Option<f64> {
        match self {
            SymbolKind::GaugePower { beta, .. } | SymbolKind::NegGaugePower { beta } => Some(*beta),
            _ => None,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            SymbolKind::GaugePower { shift: None, .. } => "lipschitz-gauge",
            SymbolKind::GaugePower { .. } => "lipschitz-gauge-shifted",
            SymbolKind::NegGaugePower { .. } => "negative-gauge",
            SymbolKind::Constant { .. } => "constant",
            SymbolKind::Affine { .. } => "affine",
            SymbolKind::Signed { .. } => "signed",
            SymbolKind::LogSpike { .. } => "log-spike",
            SymbolKind::Jump { .. } => "jump",
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::Hypothesis(format!("need 0 < beta < 1, got {beta}")))
    }
}

/// A sampled symbol together with its analytic description.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFixture {
    pub kind: SymbolKind,
    pub b: GridFunction,
}

impl SymbolFixture {
    pub fn new(domain: &Arc<LatticeDomain>, kind: SymbolKind) -> Result<Self> {
        kind.validate(domain.model())?;
        let model = domain.model().clone();
        let b = sample(domain, |x| kind.eval(&model, x))?;
        Ok(SymbolFixture { kind, b })
    }

    pub fn declared_beta(&self) -> Option<f64> {
        self.kind.declared_beta()
    }
}

const ALL_PAIRS_LIMIT: usize = 4096;
const SAMPLED_PAIRS: usize = 1_000_000;
const DEFAULT_SEED: u64 = 0x11b5_c417;

pub fn lambda_seminorm(b: &GridFunction, beta: f64) -> Result<f64> {
    lambda_seminorm_seeded(b, beta, DEFAULT_SEED)
}

/// `max |b(x) - b(y)| / rho(y^-1 x)^beta` over all node pairs on small
/// lattices, otherwise over a seeded sample of which half are near-diagonal.
pub fn lambda_seminorm_seeded(b: &GridFunction, beta: f64, seed: u64) -> Result<f64> {
    check_beta(beta)?;
    let d = b.domain();
    let model = d.model();
    let n = d.node_count();
    let dim = d.dim();
    let mut coords = vec![0.0; n * dim];
    for (i, c) in coords.chunks_mut(dim).enumerate() {
        d.node_coords(i, c);
    }
    let v = b.values();
    let at = |i: usize| &coords[i * dim..(i + 1) * dim];
    let ratio = |i: usize, j: usize| {
        let dv = (v[i] - v[j]).abs();
        if dv == 0.0 {
            return 0.0;
        }
        let r = model.distance_raw(at(j), at(i));
        if r == 0.0 {
            0.0
        } else {
            dv / r.powf(beta)
        }
    };
    if n <= ALL_PAIRS_LIMIT {
        return Ok((0..n).into_par_iter().map(|i| (i + 1..n).map(|j| ratio(i, j)).fold(0.0, f64::max)).reduce(|| 0.0, f64::max));
    }
    let counts = d.counts().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut multi = vec![0usize; dim];
    let mut pairs = Vec::with_capacity(SAMPLED_PAIRS);
    for s in 0..SAMPLED_PAIRS {
        let i = rng.gen_range(0..n);
        let j = if s % 2 == 0 {
            rng.gen_range(0..n)
        } else {
            d.node_multi_index(i, &mut multi);
            for k in 0..dim {
                let off: i64 = rng.gen_range(-4..=4);
                multi[k] = (multi[k] as i64 + off).clamp(0, counts[k] as i64 - 1) as usize;
            }
            d.index_of(&multi)
        };
        pairs.push((i, j));
    }
    Ok(pairs.par_iter().map(|&(i, j)| ratio(i, j)).reduce(|| 0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipReport {
    pub value: f64,
    pub skipped: usize,
}

fn lattice_mean(s: &crate::grid::BallSupport, v: &[f64]) -> f64 {
    s.sum_by(v, |x| x) / s.count() as f64
}

/// `sup_B |B|^{-beta/Q} (|B|^{-1} int_B |b - b_B|^p)^{1/p}`.
pub fn lip_seminorm(b: &GridFunction, beta: f64, p: f64, prep: &PreparedFamily) -> Result<LipReport> {
    check_beta(beta)?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("oscillation exponent must be at least 1, got {p}")));
    }
    let q = prep.domain().model().q_f64();
    let v = b.values();
    let out: Vec<Option<f64>> = (0..prep.len())
        .into_par_iter()
        .map(|i| {
            let s = prep.support(i);
            if s.is_empty() {
                return None;
            }
            let mean = lattice_mean(s, v);
            let dev: Vec<f64> = s.nodes().map(|n| (v[n] - mean).abs().powf(p)).collect();
            let osc = (pairwise_sum(&dev) / s.count() as f64).powf(1.0 / p);
            Some(prep.measure(i, MeasureMode::Analytic).powf(-beta / q) * osc)
        })
        .collect();
    Ok(LipReport {
        value: out.iter().flatten().copied().fold(0.0, f64::max),
        skipped: out.iter().filter(|o| o.is_none()).count(),
    })
}

/// `(b+, b-)` with `b- = max(-b, 0)` and `b+ = |b| - b-`.
pub fn split_pos_neg(b: &GridFunction) -> (GridFunction, GridFunction) {
    let neg = b.map(|v| (-v).max(0.0)).expect("finite input stays finite");
    let pos = b.zip_with(&neg, |v, m| v.abs() - m).expect("same lattice");
    (pos, neg)
}

/// `|int_E |b - b_B| - int_F |b - b_B||` with `E = {b <= b_B}` and
/// `F = B \ E`.
pub fn ef_oscillation_residual(b: &GridFunction, ball: &Ball) -> Result<f64> {
    let d = b.domain();
    let s = d.ball_support(ball);
    if s.is_empty() {
        return Err(Error::SubResolution { radius: ball.radius() });
    }
    let v = b.values();
    let mean = lattice_mean(&s, v);
    let (mut e, mut f) = (Vec::new(), Vec::new());
    for n in s.nodes() {
        if v[n] <= mean {
            e.push(mean - v[n]);
        } else {
            f.push(v[n] - mean);
        }
    }
    Ok(d.cell_volume() * (pairwise_sum(&e) - pairwise_sum(&f)).abs())
}

/// The three oscillation functionals characterising Lipschitz symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "quantity", rename_all = "snake_case", deny_unknown_fields)]
pub enum Quantity {
    /// Oscillation about the mean in the `s(.)` norm.
    Mean,
    /// Oscillation about `|B|^{-alpha/Q} M_{alpha,B} b`.
    Maximal { alpha: f64 },
    /// Oscillation about `M_B b` in the constant-exponent mean.
    Nonneg,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::Mean => "mean",
            Quantity::Maximal { .. } => "maximal",
            Quantity::Nonneg => "nonneg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallValue {
    pub ball_id: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationReport {
    pub quantity: String,
    pub per_ball: Vec<BallValue>,
    pub supremum: f64,
    pub argmax: Option<usize>,
    pub skipped: usize,
    pub family: FamilyDescriptor,
    /// Supremum at `h/2` over supremum at `h`, when a sweep was run.
    pub trend: Option<f64>,
}

/// Balls over which a functional's supremum is taken.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probes {
    /// Keep only balls lying inside the stored lattice, so no support is
    /// clipped.
    #[serde(default)]
    pub inside: bool,
    /// Keep only balls at least this large. Refinement sweeps halve it.
    #[serde(default)]
    pub min_radius: Option<f64>,
}

impl Probes {
    pub const ALL: Probes = Probes { inside: false, min_radius: None };

    fn select(&self, prep: &PreparedFamily) -> Vec<usize> {
        (0..prep.len())
            .filter(|&i| {
                let b = prep.ball(i);
                (!self.inside || prep.domain().contains_ball(b))
                    && self.min_radius.map_or(true, |r| b.radius() >= r * (1.0 - 1e-12))
            })
            .collect()
    }

    fn refined(&self) -> Probes {
        Probes { inside: self.inside, min_radius: self.min_radius.map(|r| r / 2.0) }
    }
}

/// `||g chi_B||_{s(.)} / ||chi_B||_{s(.)}` over the nodes of one ball.
fn norm_quotient(g: &[f64], exps: &[f64], s: &VariableExponent, cell: f64) -> Result<f64> {
    if s.is_constant() {
        let c = s.p_minus();
        let t: Vec<f64> = g.iter().map(|v| v.abs().powf(c)).collect();
        return Ok((pairwise_sum(&t) / g.len() as f64).powf(1.0 / c));
    }
    let one = vec![1.0; g.len()];
    let num = luxemburg_on_nodes(g, exps, cell, s.p_minus())?;
    let den = luxemburg_on_nodes(&one, exps, cell, s.p_minus())?;
    Ok(num / den)
}

/// Evaluates one of the oscillation functionals on every probe ball. `s`
/// must be constant for [`Quantity::Nonneg`].
pub fn characterize(
    b: &GridFunction,
    beta: f64,
    quantity: &Quantity,
    s: &VariableExponent,
    prep: &PreparedFamily,
    probes: &Probes,
) -> Result<CharacterizationReport> {
    check_beta(beta)?;
    let domain = prep.domain().clone();
    if **b.domain() != *domain {
        return Err(Error::DomainMismatch);
    }
    let q = domain.model().q_f64();
    if let Quantity::Maximal { alpha } = quantity {
        if !(*alpha > 0.0 && alpha + beta < q) {
            return Err(Error::Hypothesis(format!("need 0 < alpha and alpha + beta < Q, got alpha = {alpha}, beta = {beta}")));
        }
    }
    if matches!(quantity, Quantity::Nonneg) && !s.is_constant() {
        return Err(Error::invalid("the nonnegativity functional takes a constant exponent"));
    }
    let v = b.values();
    let cell = domain.cell_volume();
    let sv = if s.is_constant() { Vec::new() } else { s.values_on(&domain) };
    let table: Vec<f64> = match quantity {
        Quantity::Mean => Vec::new(),
        Quantity::Maximal { alpha } => {
            let w = prep.weights(*alpha, MeasureMode::Lattice);
            let sums = prep.ball_sums(v, true);
            w.iter().zip(&sums).map(|(a, b)| a * b).collect()
        }
        Quantity::Nonneg => {
            let w = prep.weights(0.0, MeasureMode::Lattice);
            let sums = prep.ball_sums(v, true);
            w.iter().zip(&sums).map(|(a, b)| a * b).collect()
        }
    };
    let ids = probes.select(prep);
    let n = domain.node_count();
    let results: Vec<Result<Option<f64>>> = ids
        .par_iter()
        .map_init(
            || vec![f64::NEG_INFINITY; n],
            |buf, &i| {
                let sup = prep.support(i);
                if sup.is_empty() {
                    return Ok(None);
                }
                let nodes: Vec<usize> = sup.nodes().collect();
                let g: Vec<f64> = match quantity {
                    Quantity::Mean => {
                        let mean = lattice_mean(sup, v);
                        nodes.iter().map(|&k| v[k] - mean).collect()
                    }
                    Quantity::Maximal { alpha } => {
                        let m = restricted_on_support(prep, &table, i, buf);
                        let scale = prep.measure(i, MeasureMode::Lattice).powf(-alpha / q);
                        nodes.iter().zip(&m).map(|(&k, mv)| v[k] - scale * mv).collect()
                    }
                    Quantity::Nonneg => {
                        let m = restricted_on_support(prep, &table, i, buf);
                        nodes.iter().zip(&m).map(|(&k, mv)| v[k] - mv).collect()
                    }
                };
                let exps: Vec<f64> = if sv.is_empty() { Vec::new() } else { nodes.iter().map(|&k| sv[k]).collect() };
                let quot = norm_quotient(&g, &exps, s, cell)?;
                Ok(Some(prep.measure(i, MeasureMode::Analytic).powf(-beta / q) * quot))
            },
        )
        .collect();
    let mut per_ball = Vec::with_capacity(ids.len());
    let mut skipped = 0;
    let mut supremum: f64 = 0.0;
    let mut argmax = None;
    for (&i, r) in ids.iter().zip(results) {
        match r? {
            None => skipped += 1,
            Some(value) => {
                if argmax.is_none() || value > supremum {
                    supremum = value;
                    argmax = Some(i);
                }
                let ball = prep.ball(i);
                per_ball.push(BallValue { ball_id: i, center: ball.center().to_vec(), radius: ball.radius(), value });
            }
        }
    }
    Ok(CharacterizationReport {
        quantity: quantity.name().to_string(),
        per_ball,
        supremum,
        argmax,
        skipped,
        family: prep.family().descriptor().clone(),
        trend: None,
    })
}

pub fn mean_oscillation_char(
    b: &GridFunction,
    beta: f64,
    s: &VariableExponent,
    prep: &PreparedFamily,
) -> Result<CharacterizationReport> {
    characterize(b, beta, &Quantity::Mean, s, prep, &Probes::ALL)
}

pub fn maximal_oscillation_char(
    b: &GridFunction,
    alpha: f64,
    beta: f64,
    s: &VariableExponent,
    prep: &PreparedFamily,
) -> Result<CharacterizationReport> {
    characterize(b, beta, &Quantity::Maximal { alpha }, s, prep, &Probes::ALL)
}

pub fn nonneg_char(b: &GridFunction, beta: f64, s: f64, prep: &PreparedFamily) -> Result<CharacterizationReport> {
    let sexp = VariableExponent::constant(prep.domain().model(), s)?;
    characterize(b, beta, &Quantity::Nonneg, &sexp, prep, &Probes::ALL)
}

/// Lattice, family and symbol description that can be rebuilt at any
/// spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub domain: LatticeDomain,
    pub stride: usize,
    pub ladder: RadiusLadder,
    pub symbol: SymbolKind,
    pub beta: f64,
    pub quantity: Quantity,
    pub exponent: VariableExponent,
    pub probes: Probes,
    /// Also evaluate with `r_max` doubled (when it still fits the domain).
    pub rmax_doubling: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVerdict {
    Bounded,
    Divergent,
    Inconclusive,
}

/// Threshold on the refinement trend above which a functional is flagged
/// unbounded.
pub const DIVERGENCE_TREND: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub coarse: CharacterizationReport,
    pub fine: CharacterizationReport,
    pub trend: f64,
    pub rmax_trend: Option<f64>,
    pub verdict: SweepVerdict,
}

fn run_level(
    spec: &SweepSpec,
    domain: LatticeDomain,
    stride: usize,
    ladder: RadiusLadder,
    probes: &Probes,
) -> Result<CharacterizationReport> {
    let domain = Arc::new(domain);
    let family = build_ball_family(&domain, stride, ladder)?;
    let prep = PreparedFamily::new(domain.clone(), family)?;
    let fx = SymbolFixture::new(&domain, spec.symbol.clone())?;
    characterize(&fx.b, spec.beta, &spec.quantity, &spec.exponent, &prep, probes)
}

/// Functional at `h` and at `h/2`. Refinement halves `r_min` with the
/// spacing, doubles the centre stride in nodes (so centres keep their
/// physical spacing), halves the probe radius floor and keeps `r_max`.
pub fn refinement_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    let coarse = run_level(spec, spec.domain.clone(), spec.stride, spec.ladder, &spec.probes)?;
    let fine_ladder = RadiusLadder::new(spec.ladder.r_min / 2.0, spec.ladder.r_max, spec.ladder.gamma)?;
    let mut fine = run_level(spec, spec.domain.refined()?, spec.stride * 2, fine_ladder, &spec.probes.refined())?;
    let trend = if coarse.supremum == 0.0 {
        if fine.supremum == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        fine.supremum / coarse.supremum
    };
    fine.trend = Some(trend);
    let rmax_trend = if spec.rmax_doubling {
        let r2 = spec.ladder.r_max * 2.0;
        if r2 <= spec.domain.diameter() {
            let lad = RadiusLadder::new(spec.ladder.r_min, r2, spec.ladder.gamma)?;
            let wide = run_level(spec, spec.domain.clone(), spec.stride, lad, &spec.probes)?;
            Some(if coarse.supremum == 0.0 { 1.0 } else { wide.supremum / coarse.supremum })
        } else {
            None
        }
    } else {
        None
    };
    let verdict = if trend >= DIVERGENCE_TREND {
        SweepVerdict::Divergent
    } else if trend >= 0.5 {
        SweepVerdict::Bounded
    } else {
        SweepVerdict::Inconclusive
    };
    Ok(SweepReport { coarse, fine, trend, rmax_trend, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BallFamily;
    use crate::group::GroupPoint;

    fn r1(lo: f64, hi: f64, h: f64) -> Arc<LatticeDomain> {
        Arc::new(LatticeDomain::cube(GroupModel::euclidean(1).unwrap(), lo, hi, h).unwrap())
    }

    #[test]
    fn lambda_examples() {
        let d = r1(-1.0, 1.0, 0.01);
        assert_eq!(lambda_seminorm(&GridFunction::constant(&d, 4.0).unwrap(), 0.5).unwrap(), 0.0);
        // a node at 0: cells of width 2/4094 on [-1 - h/2, 1 + h/2]
        let h = 2.0 / 4094.0;
        let d = r1(-1.0 - h / 2.0, 1.0 + h / 2.0, h);
        assert_eq!(d.node_count(), 4095);
        for beta in [0.3, 0.7] {
            let b = sample(&d, |x| x[0].abs().powf(beta)).unwrap();
            let l = lambda_seminorm(&b, beta).unwrap();
            assert!((l - 1.0).abs() < 1e-3, "{l}");
        }
        let d = r1(0.0, 1.0, 1.0 / 4096.0);
        let b = sample(&d, |x| x[0]).unwrap();
        assert!((lambda_seminorm(&b, 0.5).unwrap() - 1.0).abs() < 1e-3);
        assert!(lambda_seminorm(&b, 1.0).is_err());
    }

    #[test]
    fn lambda_shift_invariant() {
        let d = r1(-1.0, 1.0, 0.01);
        // dyadic values keep the shifted differences exact
        let b = sample(&d, |x| ((3.0 * x[0]).sin() * 1048576.0).round() / 1048576.0).unwrap();
        let c = b.map(|v| v + 10.0).unwrap();
        assert_eq!(lambda_seminorm(&b, 0.4).unwrap(), lambda_seminorm(&c, 0.4).unwrap());
    }

    #[test]
    fn lip_examples() {
        let d = r1(-2.0, 2.0, 0.001);
        let fam = BallFamily::from_balls(vec![Ball::new(GroupPoint::origin(1), 1.0).unwrap()]).unwrap();
        let prep = PreparedFamily::new(d.clone(), fam).unwrap();
        let x = sample(&d, |x| x[0]).unwrap();
        let v = lip_seminorm(&x, 0.5, 1.0, &prep).unwrap().value;
        assert!((v - 0.5 / 2f64.sqrt()).abs() < 2e-3, "{v}");
        let c = GridFunction::constant(&d, 3.0).unwrap();
        assert_eq!(lip_seminorm(&c, 0.5, 1.0, &prep).unwrap().value, 0.0);
    }

    #[test]
    fn split_examples() {
        let d = r1(-1.0, 1.0, 0.1);
        let x = sample(&d, |x| x[0]).unwrap();
        let (p, n) = split_pos_neg(&x);
        for i in 0..d.node_count() {
            let v = x.values()[i];
            assert_eq!(p.values()[i], v.max(0.0));
            assert_eq!(n.values()[i], (-v).max(0.0));
            assert_eq!(p.values()[i] - n.values()[i], v);
        }
        let m = GridFunction::constant(&d, -3.0).unwrap();
        let (p, n) = split_pos_neg(&m);
        assert!(p.is_zero());
        assert!(n.values().iter().all(|&v| v == 3.0));
    }

    #[test]
    fn ef_examples() {
        let d = r1(-2.0, 2.0, 0.01);
        let ball = Ball::new(GroupPoint::origin(1), 1.0).unwrap();
        let x = sample(&d, |x| x[0]).unwrap();
        assert!(ef_oscillation_residual(&x, &ball).unwrap() <= 1e-9);
        let c = GridFunction::constant(&d, 2.0).unwrap();
        assert_eq!(ef_oscillation_residual(&c, &ball).unwrap(), 0.0);
        let p = sample(&d, |x| 1.0 - 2.0 * x[0] + 3.0 * x[0].powi(3)).unwrap();
        assert!(ef_oscillation_residual(&p, &ball).unwrap() <= 1e-9);
    }

    fn small_h1() -> (Arc<LatticeDomain>, PreparedFamily) {
        let d = Arc::new(LatticeDomain::cube(GroupModel::heisenberg(), -1.0, 1.0, 0.125).unwrap());
        let fam = build_ball_family(&d, 4, RadiusLadder::new(0.375, 1.0, 1.2).unwrap()).unwrap();
        let prep = PreparedFamily::new(d.clone(), fam).unwrap();
        (d, prep)
    }

    #[test]
    fn constants_give_zero() {
        let (d, prep) = small_h1();
        let c = GridFunction::constant(&d, 1.5).unwrap();
        let two = VariableExponent::constant(d.model(), 2.0).unwrap();
        assert_eq!(mean_oscillation_char(&c, 0.5, &two, &prep).unwrap().supremum, 0.0);
        assert!(maximal_oscillation_char(&c, 0.5, 0.5, &two, &prep).unwrap().supremum < 1e-12);
        assert!(nonneg_char(&c, 0.5, 1.0, &prep).unwrap().supremum < 1e-12);
        assert!(matches!(maximal_oscillation_char(&c, 3.6, 0.5, &two, &prep), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn report_supremum_is_per_ball_max() {
        let (d, prep) = small_h1();
        let fx = SymbolFixture::new(&d, SymbolKind::GaugePower { beta: 0.5, shift: None }).unwrap();
        let two = VariableExponent::constant(d.model(), 2.0).unwrap();
        let r = maximal_oscillation_char(&fx.b, 0.5, 0.5, &two, &prep).unwrap();
        let m = r.per_ball.iter().map(|b| b.value).fold(0.0, f64::max);
        assert_eq!(m, r.supremum);
        assert!(r.supremum > 0.0 && r.supremum.is_finite());
    }
}
