//! Variable exponents `p(.)`, their conjugates and Sobolev partners, and
//! sampled log-Hölder diagnostics.

use std::f64::consts::E;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::LatticeDomain;
use crate::group::GroupModel;

/// Analytic exponent shapes that can be evaluated at any point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExponentPreset {
    Constant { value: f64 },
    /// `base + amp / log(e + rho(x))`; tends to `base` at infinity.
    RadialLog { base: f64, amp: f64 },
    /// `base + amp * phi(rho(center^-1 x) / radius)` with the standard
    /// compactly supported smooth bump `phi`, `phi(0) = 1`.
    Bump { base: f64, amp: f64, center: Vec<f64>, radius: f64 },
    /// `high` where `x[axis] > at`, `low` elsewhere.
    Jump { low: f64, high: f64, axis: usize, at: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentKind {
    Constant,
    Analytic,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Preset(ExponentPreset),
    Tabulated { domain: Arc<LatticeDomain>, values: Arc<Vec<f64>> },
    Conjugate(Box<VariableExponent>),
    Sobolev { inner: Box<VariableExponent>, shift: f64 },
    Scaled { inner: Box<VariableExponent>, s: f64 },
}

/// An exponent function with known bounds `1 <= p_minus <= p(x) <= p_plus`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableExponent {
    model: GroupModel,
    shape: Shape,
    p_minus: f64,
    p_plus: f64,
    p_inf: Option<f64>,
}

fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

fn conj(p: f64) -> f64 {
    p / (p - 1.0)
}

impl VariableExponent {
    pub fn constant(model: &GroupModel, value: f64) -> Result<Self> {
        Self::preset(model, ExponentPreset::Constant { value })
    }

    pub fn preset(model: &GroupModel, preset: ExponentPreset) -> Result<Self> {
        let (lo, hi, inf) = match &preset {
            ExponentPreset::Constant { value } => (*value, *value, Some(*value)),
            ExponentPreset::RadialLog { base, amp } => {
                if *amp < 0.0 {
                    return Err(Error::invalid("radial log amplitude must be non-negative"));
                }
                (*base, base + amp, Some(*base))
            }
            ExponentPreset::Bump { base, amp, center, radius } => {
                if center.len() != model.dim() {
                    return Err(Error::DimensionMismatch { expected: model.dim(), found: center.len() });
                }
                if !(*radius > 0.0) {
                    return Err(Error::invalid("bump radius must be positive"));
                }
                (base.min(base + amp), base.max(base + amp), Some(*base))
            }
            ExponentPreset::Jump { low, high, axis, at } => {
                if *axis >= model.dim() || !at.is_finite() {
                    return Err(Error::invalid(format!("jump axis {axis} out of range")));
                }
                (low.min(*high), low.max(*high), None)
            }
        };
        Self::with_bounds(model.clone(), Shape::Preset(preset), lo, hi, inf)
    }

    /// Exponent given by its values on the nodes of `domain`.
    pub fn tabulated(domain: &Arc<LatticeDomain>, values: Vec<f64>, p_inf: Option<f64>) -> Result<Self> {
        if values.len() != domain.node_count() {
            return Err(Error::invalid("tabulated exponent needs one value per node"));
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::with_bounds(
            domain.model().clone(),
            Shape::Tabulated { domain: domain.clone(), values: Arc::new(values) },
            lo,
            hi,
            p_inf,
        )
    }

    fn with_bounds(model: GroupModel, shape: Shape, lo: f64, hi: f64, p_inf: Option<f64>) -> Result<Self> {
        if !(lo >= 1.0) {
            return Err(Error::invalid(format!("exponent infimum {lo} is below 1")));
        }
        if !hi.is_finite() {
            return Err(Error::invalid("exponent must be bounded above"));
        }
        Ok(VariableExponent { model, shape, p_minus: lo, p_plus: hi, p_inf })
    }

    pub fn model(&self) -> &GroupModel {
        &self.model
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn p_inf(&self) -> Option<f64> {
        self.p_inf
    }

    pub fn is_constant(&self) -> bool {
        self.p_minus == self.p_plus
    }

    pub fn kind(&self) -> ExponentKind {
        match &self.shape {
            _ if self.is_constant() => ExponentKind::Constant,
            Shape::Tabulated { .. } => ExponentKind::Tabulated,
            Shape::Conjugate(i) | Shape::Sobolev { inner: i, .. } | Shape::Scaled { inner: i, .. } => i.kind(),
            Shape::Preset(_) => ExponentKind::Analytic,
        }
    }

    /// Same exponent with a declared limit at infinity.
    pub fn with_p_inf(mut self, p_inf: Option<f64>) -> Self {
        self.p_inf = p_inf;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Preset(p) => match p {
                ExponentPreset::Constant { value } => *value,
                ExponentPreset::RadialLog { base, amp } => base + amp / (E + self.model.norm_raw(x)).ln(),
                ExponentPreset::Bump { base, amp, center, radius } => {
                    base + amp * bump(self.model.distance_raw(center, x) / radius)
                }
                ExponentPreset::Jump { low, high, axis, at } => {
                    if x[*axis] > *at {
                        *high
                    } else {
                        *low
                    }
                }
            },
            Shape::Tabulated { domain, values } => {
                // nearest stored node
                let h = domain.h();
                let idx: Vec<usize> = (0..domain.dim())
                    .map(|k| {
                        let c = domain.axis_coords(k);
                        let i = ((x[k] - c[0]) / h).round();
                        i.clamp(0.0, (c.len() - 1) as f64) as usize
                    })
                    .collect();
                values[domain.index_of(&idx)]
            }
            Shape::Conjugate(p) => conj(p.eval(x)),
            Shape::Sobolev { inner, shift } => 1.0 / (1.0 / inner.eval(x) - shift),
            Shape::Scaled { inner, s } => s * inner.eval(x),
        }
    }

    /// Values on every node of `domain`.
    pub fn values_on(&self, domain: &LatticeDomain) -> Vec<f64> {
        match &self.shape {
            Shape::Tabulated { domain: d, values } if **d == *domain => values.as_ref().clone(),
            Shape::Conjugate(p) => p.values_on(domain).into_iter().map(conj).collect(),
            Shape::Sobolev { inner, shift } => {
                inner.values_on(domain).into_iter().map(|p| 1.0 / (1.0 / p - shift)).collect()
            }
            Shape::Scaled { inner, s } => inner.values_on(domain).into_iter().map(|p| s * p).collect(),
            _ => {
                let mut c = vec![0.0; domain.dim()];
                (0..domain.node_count())
                    .map(|i| {
                        domain.node_coords(i, &mut c);
                        self.eval(&c)
                    })
                    .collect()
            }
        }
    }

    fn is_tabulated(&self) -> bool {
        match &self.shape {
            Shape::Tabulated { .. } => true,
            Shape::Preset(_) => false,
            Shape::Conjugate(i) | Shape::Sobolev { inner: i, .. } | Shape::Scaled { inner: i, .. } => {
                i.is_tabulated()
            }
        }
    }

    /// `s * p(.)`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid(format!("exponent scale must be positive, got {s}")));
        }
        Self::with_bounds(
            self.model.clone(),
            Shape::Scaled { inner: Box::new(self.clone()), s },
            s * self.p_minus,
            s * self.p_plus,
            self.p_inf.map(|p| s * p),
        )
    }
}

/// `p'(x) = p(x) / (p(x) - 1)`.
pub fn conjugate(p: &VariableExponent) -> Result<VariableExponent> {
    if !(p.p_minus > 1.0) {
        return Err(Error::Hypothesis(format!(
            "conjugate exponent is unbounded: p_minus = {} must exceed 1",
            p.p_minus
        )));
    }
    let shape = match &p.shape {
        Shape::Preset(ExponentPreset::Constant { value }) => {
            Shape::Preset(ExponentPreset::Constant { value: conj(*value) })
        }
        _ => Shape::Conjugate(Box::new(p.clone())),
    };
    VariableExponent::with_bounds(p.model.clone(), shape, conj(p.p_plus), conj(p.p_minus), p.p_inf.map(conj))
}

/// Exponents `(p, q)` with `1/q = 1/p - gamma/Q` nodewise.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentPair {
    pub p: VariableExponent,
    pub q: VariableExponent,
    pub gamma: f64,
    pub hom_dim: u32,
}

pub fn sobolev_pair(p: &VariableExponent, gamma: f64, hom_dim: u32) -> Result<ExponentPair> {
    let qd = hom_dim as f64;
    if !(gamma > 0.0 && gamma < qd) {
        return Err(Error::Hypothesis(format!("need 0 < gamma < Q, got gamma = {gamma}, Q = {hom_dim}")));
    }
    let limit = qd / gamma;
    if !(p.p_plus < limit) {
        return Err(Error::Hypothesis(format!(
            "p_plus = {} must stay below Q/gamma = {limit} (margin {})",
            p.p_plus,
            limit - p.p_plus
        )));
    }
    let shift = gamma / qd;
    let q_of = |x: f64| 1.0 / (1.0 / x - shift);
    let q = VariableExponent::with_bounds(
        p.model.clone(),
        Shape::Sobolev { inner: Box::new(p.clone()), shift },
        q_of(p.p_minus),
        q_of(p.p_plus),
        p.p_inf.map(q_of),
    )?;
    Ok(ExponentPair { p: p.clone(), q, gamma, hom_dim })
}

/// Sampled log-Hölder constants of an exponent on one lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHolderConstants {
    pub c_local: f64,
    /// Quasi-distance of the pair attaining `c_local` (0 when constant).
    pub local_argmax_distance: f64,
    pub c_decay: Option<f64>,
    pub pairs: usize,
    pub h: f64,
}

const ALL_PAIRS_LIMIT: usize = 2048;
const RANDOM_PAIRS: usize = 200_000;
const DEFAULT_SEED: u64 = 0x5eed_1065;

pub fn log_holder_constants(p: &VariableExponent, domain: &LatticeDomain) -> LogHolderConstants {
    log_holder_constants_seeded(p, domain, DEFAULT_SEED)
}

/// `C_local` is the maximum of `|p(x)-p(y)| log(e + 1/rho(x,y))` over all
/// axis-neighbour pairs plus a seeded sample of random and near-diagonal
/// pairs (every pair on small lattices); `C_decay` is the maximum of
/// `|p(x) - p_inf| log(e + rho(x))` over all nodes.
pub fn log_holder_constants_seeded(p: &VariableExponent, domain: &LatticeDomain, seed: u64) -> LogHolderConstants {
    let model = domain.model();
    let vals = p.values_on(domain);
    let n = domain.node_count();
    let dim = domain.dim();
    let mut coords: Vec<f64> = vec![0.0; n * dim];
    for (i, c) in coords.chunks_mut(dim).enumerate() {
        domain.node_coords(i, c);
    }
    let at = |i: usize| &coords[i * dim..(i + 1) * dim];
    let mut best = (0.0f64, 0.0f64);
    let mut pairs = 0usize;
    let mut visit = |i: usize, j: usize| {
        if i == j {
            return;
        }
        pairs += 1;
        let dp = (vals[i] - vals[j]).abs();
        if dp == 0.0 {
            return;
        }
        let d = model.distance_raw(at(i), at(j));
        let v = dp * (E + 1.0 / d).ln();
        if v > best.0 {
            best = (v, d);
        }
    };
    if n <= ALL_PAIRS_LIMIT {
        for i in 0..n {
            for j in i + 1..n {
                visit(i, j);
            }
        }
    } else {
        let counts = domain.counts();
        let mut multi = vec![0usize; dim];
        for i in 0..n {
            domain.node_multi_index(i, &mut multi);
            for k in 0..dim {
                if multi[k] + 1 < counts[k] {
                    multi[k] += 1;
                    visit(i, domain.index_of(&multi));
                    multi[k] -= 1;
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in 0..RANDOM_PAIRS {
            let i = rng.gen_range(0..n);
            let j = if s % 2 == 0 {
                rng.gen_range(0..n)
            } else {
                domain.node_multi_index(i, &mut multi);
                for k in 0..dim {
                    let off: i64 = rng.gen_range(-3..=3);
                    multi[k] = (multi[k] as i64 + off).clamp(0, counts[k] as i64 - 1) as usize;
                }
                domain.index_of(&multi)
            };
            visit(i, j);
        }
    }
    let c_decay = p.p_inf.map(|pi| {
        (0..n)
            .map(|i| (vals[i] - pi).abs() * (E + model.norm_raw(at(i))).ln())
            .fold(0.0, f64::max)
    });
    LogHolderConstants { c_local: best.0, local_argmax_distance: best.1, c_decay, pairs, h: domain.h() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassBVerdict {
    SufficientConditionMet,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBReport {
    pub verdict: ClassBVerdict,
    pub p_minus: f64,
    pub coarse: Option<LogHolderConstants>,
    pub fine: Option<LogHolderConstants>,
    pub diagnostics: Vec<String>,
}

fn stable(a: f64, b: f64) -> bool {
    if a == 0.0 && b == 0.0 {
        return true;
    }
    let r = b / a;
    (0.5..=2.0).contains(&r)
}

/// Checks the log-Hölder sufficient condition for boundedness of the
/// maximal operator at spacings `h` and `h/2`. A local constant whose
/// maximising pair sits at lattice scale and which keeps growing under
/// refinement is treated as divergent, since a true log-Hölder bound cannot
/// be attained by ever closer pairs. Never claims non-membership.
pub fn in_class_b_heuristic(p: &VariableExponent, domain: &LatticeDomain) -> ClassBReport {
    let mut diagnostics = Vec::new();
    let mut report = ClassBReport {
        verdict: ClassBVerdict::Inconclusive,
        p_minus: p.p_minus,
        coarse: None,
        fine: None,
        diagnostics: Vec::new(),
    };
    if !(p.p_minus > 1.0) {
        diagnostics.push(format!("p_minus = {} is not above 1", p.p_minus));
    }
    if p.is_tabulated() {
        diagnostics.push("tabulated exponent cannot be resampled at a finer spacing".into());
    }
    if p.p_inf.is_none() && !p.is_constant() {
        diagnostics.push("no limit at infinity declared; decay condition not checked".into());
    }
    if !diagnostics.is_empty() {
        report.diagnostics = diagnostics;
        return report;
    }
    let fine_domain = match domain.refined() {
        Ok(d) => d,
        Err(e) => {
            report.diagnostics = vec![format!("cannot refine lattice: {e}")];
            return report;
        }
    };
    let coarse = log_holder_constants(p, domain);
    let fine = log_holder_constants(p, &fine_domain);
    let mut ok = true;
    if !stable(coarse.c_local, fine.c_local) {
        ok = false;
        diagnostics.push(format!("local constant unstable: {} -> {}", coarse.c_local, fine.c_local));
    }
    if fine.c_local > coarse.c_local * (1.0 + 1e-9) && fine.local_argmax_distance <= 2.0 * fine.h {
        ok = false;
        diagnostics.push(format!(
            "local constant grows under refinement ({} -> {}) and is attained at lattice scale ({})",
            coarse.c_local, fine.c_local, fine.local_argmax_distance
        ));
    }
    if let (Some(a), Some(b)) = (coarse.c_decay, fine.c_decay) {
        if !stable(a, b) {
            ok = false;
            diagnostics.push(format!("decay constant unstable: {a} -> {b}"));
        }
    }
    report.verdict = if ok { ClassBVerdict::SufficientConditionMet } else { ClassBVerdict::Inconclusive };
    report.coarse = Some(coarse);
    report.fine = Some(fine);
    report.diagnostics = diagnostics;
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h1() -> GroupModel {
        GroupModel::heisenberg()
    }

    fn cube(m: GroupModel, lo: f64, hi: f64, h: f64) -> LatticeDomain {
        LatticeDomain::cube(m, lo, hi, h).unwrap()
    }

    #[test]
    fn conjugate_examples() {
        let m = h1();
        let two = VariableExponent::constant(&m, 2.0).unwrap();
        let c = conjugate(&two).unwrap();
        assert_eq!((c.p_minus(), c.p_plus(), c.eval(&[0.3, 0.1, 0.0])), (2.0, 2.0, 2.0));
        let three = conjugate(&VariableExponent::constant(&m, 3.0).unwrap()).unwrap();
        assert_eq!(three.eval(&[0.0; 3]), 1.5);
        let j = VariableExponent::preset(&m, ExponentPreset::Jump { low: 1.5, high: 4.0, axis: 0, at: 0.0 }).unwrap();
        let jc = conjugate(&j).unwrap();
        assert!((jc.p_minus() - 4.0 / 3.0).abs() < 1e-15);
        assert!((jc.p_plus() - 3.0).abs() < 1e-15);
        let one = VariableExponent::constant(&m, 1.0).unwrap();
        assert!(matches!(conjugate(&one), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn sobolev_examples() {
        let m = h1();
        let two = VariableExponent::constant(&m, 2.0).unwrap();
        let pair = sobolev_pair(&two, 1.0, 4).unwrap();
        assert!((pair.q.eval(&[0.0; 3]) - 4.0).abs() < 1e-12);
        assert!(sobolev_pair(&two, 2.0, 4).is_err());
        // 2 + 0.5 s(x) with s a smooth bump in [0,1]
        let p = VariableExponent::preset(
            &m,
            ExponentPreset::Bump { base: 2.0, amp: 0.5, center: vec![0.0; 3], radius: 1.0 },
        )
        .unwrap();
        let pair = sobolev_pair(&p, 0.5, 4).unwrap();
        let dom = cube(m, -1.0, 1.0, 0.25);
        let pv = p.values_on(&dom);
        let qv = pair.q.values_on(&dom);
        for (a, b) in pv.iter().zip(&qv) {
            assert!((1.0 / b - 1.0 / a + 0.125).abs() <= 1e-12);
        }
        assert!(pair.q.p_minus() <= qv.iter().cloned().fold(f64::INFINITY, f64::min) + 1e-12);
    }

    #[test]
    fn log_holder_examples() {
        let m = h1();
        let dom = cube(m.clone(), -1.0, 1.0, 0.25);
        let c = log_holder_constants(&VariableExponent::constant(&m, 2.5).unwrap(), &dom);
        assert_eq!((c.c_local, c.c_decay), (0.0, Some(0.0)));
        let radial = VariableExponent::preset(&m, ExponentPreset::RadialLog { base: 2.0, amp: 1.0 }).unwrap();
        let c = log_holder_constants(&radial, &dom);
        assert!((c.c_decay.unwrap() - 1.0).abs() < 1e-6);
        let r2 = GroupModel::euclidean(2).unwrap();
        let jump = VariableExponent::preset(&r2, ExponentPreset::Jump { low: 1.5, high: 3.0, axis: 0, at: 0.0 }).unwrap();
        let d = cube(r2, -1.0, 1.0, 1.0 / 32.0);
        let a = log_holder_constants(&jump, &d);
        let b = log_holder_constants(&jump, &d.refined().unwrap());
        assert!(b.c_local > a.c_local);
        assert!(b.local_argmax_distance <= 2.0 * b.h);
    }

    #[test]
    fn class_b_examples() {
        let m = h1();
        let dom = cube(m.clone(), -1.0, 1.0, 0.125);
        let two = VariableExponent::constant(&m, 2.0).unwrap();
        assert_eq!(in_class_b_heuristic(&two, &dom).verdict, ClassBVerdict::SufficientConditionMet);
        let radial = VariableExponent::preset(&m, ExponentPreset::RadialLog { base: 2.0, amp: 1.0 }).unwrap();
        let rep = in_class_b_heuristic(&radial, &dom);
        assert_eq!(rep.verdict, ClassBVerdict::SufficientConditionMet, "{:?}", rep.diagnostics);
        let jump = VariableExponent::preset(&m, ExponentPreset::Jump { low: 1.5, high: 3.0, axis: 0, at: 0.0 })
            .unwrap()
            .with_p_inf(Some(2.0));
        assert_eq!(in_class_b_heuristic(&jump, &dom).verdict, ClassBVerdict::Inconclusive);
        let one = VariableExponent::constant(&m, 1.0).unwrap();
        assert_eq!(in_class_b_heuristic(&one, &dom).verdict, ClassBVerdict::Inconclusive);
    }

    #[test]
    fn tabulated_lookup() {
        let m = GroupModel::euclidean(1).unwrap();
        let d = Arc::new(cube(m, 0.0, 1.0, 0.25));
        let t = VariableExponent::tabulated(&d, vec![1.5, 2.0, 2.5, 3.0], None).unwrap();
        assert_eq!(t.kind(), ExponentKind::Tabulated);
        assert_eq!(t.eval(&[0.6]), 2.5);
        assert_eq!(t.values_on(&d), vec![1.5, 2.0, 2.5, 3.0]);
        assert!(VariableExponent::tabulated(&d, vec![0.5, 2.0, 2.5, 3.0], None).is_err());
        assert_eq!(in_class_b_heuristic(&t, &d).verdict, ClassBVerdict::Inconclusive);
    }
}
