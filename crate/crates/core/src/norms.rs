//! Modulars, Luxemburg and weak-type norms.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{conjugate, VariableExponent};
use crate::grid::{indicator, integrate, pairwise_sum, Ball, GridFunction, LatticeDomain};

/// Relative bracket width at which bisection stops.
pub const BISECTION_RTOL: f64 = 1e-10;
/// Cap on halvings or doublings while bracketing the norm.
pub const MAX_DOUBLINGS: usize = 200;

/// One modular evaluation on the bisection trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModularEvaluation {
    pub eta: f64,
    pub value: f64,
}

/// Nonzero `|f|` values paired with the exponent at the same node.
struct Kernel {
    absf: Vec<f64>,
    exps: Vec<f64>,
    cell: f64,
}

impl Kernel {
    fn new(f: &GridFunction, p: &VariableExponent) -> Self {
        let pv = p.values_on(f.domain());
        let (absf, exps) = f
            .values()
            .iter()
            .zip(&pv)
            .filter(|(v, _)| **v != 0.0)
            .map(|(v, e)| (v.abs(), *e))
            .unzip();
        Kernel { absf, exps, cell: f.domain().cell_volume() }
    }

    fn modular(&self, eta: f64) -> f64 {
        let terms: Vec<f64> = self.absf.iter().zip(&self.exps).map(|(v, e)| (v / eta).powf(*e)).collect();
        self.cell * pairwise_sum(&terms)
    }
}

/// `int (|f|/eta)^{p(x)} dx`.
pub fn modular(f: &GridFunction, p: &VariableExponent, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("normaliser must be positive, got {eta}")));
    }
    Ok(Kernel::new(f, p).modular(eta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LuxemburgResult {
    pub norm: f64,
    pub trace: Vec<ModularEvaluation>,
}

pub fn luxemburg_norm(f: &GridFunction, p: &VariableExponent) -> Result<f64> {
    luxemburg_traced(f, p).map(|r| r.norm)
}

/// Smallest `eta` with `modular(f, p, eta) <= 1`: bracket by halving or
/// doubling from `max|f| |supp f|^{1/p_minus}`, then bisect. The returned
/// value is the upper end of the final bracket, so its modular is at most 1.
pub fn luxemburg_traced(f: &GridFunction, p: &VariableExponent) -> Result<LuxemburgResult> {
    bisect(&Kernel::new(f, p), p.p_minus())
}

/// Luxemburg norm of a function given by its values and exponents on a set
/// of nodes, each carrying measure `cell`; the exponents must not fall
/// below `p_minus`.
pub fn luxemburg_on_nodes(values: &[f64], exps: &[f64], cell: f64, p_minus: f64) -> Result<f64> {
    let (absf, exps) = values.iter().zip(exps).filter(|(v, _)| **v != 0.0).map(|(v, e)| (v.abs(), *e)).unzip();
    bisect(&Kernel { absf, exps, cell }, p_minus).map(|r| r.norm)
}

fn bisect(k: &Kernel, p_minus: f64) -> Result<LuxemburgResult> {
    let mut trace = Vec::new();
    if k.absf.is_empty() {
        return Ok(LuxemburgResult { norm: 0.0, trace });
    }
    let mut eval = |eta: f64| {
        let value = k.modular(eta);
        trace.push(ModularEvaluation { eta, value });
        value
    };
    let max = k.absf.iter().copied().fold(0.0, f64::max);
    let support = k.absf.len() as f64 * k.cell;
    let eta0 = max * support.powf(1.0 / p_minus);
    let (mut lo, mut hi);
    if eval(eta0) <= 1.0 {
        hi = eta0;
        lo = eta0 / 2.0;
        let mut n = 0;
        while eval(lo) <= 1.0 {
            hi = lo;
            lo /= 2.0;
            n += 1;
            if n > MAX_DOUBLINGS {
                return Err(Error::Bracket(MAX_DOUBLINGS));
            }
        }
    } else {
        lo = eta0;
        hi = eta0 * 2.0;
        let mut n = 0;
        while eval(hi) > 1.0 {
            lo = hi;
            hi *= 2.0;
            n += 1;
            if n > MAX_DOUBLINGS {
                return Err(Error::Bracket(MAX_DOUBLINGS));
            }
        }
    }
    while hi - lo > BISECTION_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if eval(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(LuxemburgResult { norm: hi, trace })
}

/// `(int |f|^c)^{1/c}` evaluated directly.
pub fn lp_norm(f: &GridFunction, c: f64) -> Result<f64> {
    if !(c >= 1.0 && c.is_finite()) {
        return Err(Error::invalid(format!("Lebesgue exponent must be at least 1, got {c}")));
    }
    let g = f.map(|v| v.abs().powf(c))?;
    Ok(integrate(&g).powf(1.0 / c))
}

/// `sup_l l |{|f| > l}|^{1/p}` over the sampled levels. Because `f` takes
/// finitely many values, the supremum is approached as `l` rises to each
/// distinct value `v`, giving `v |{|f| >= v}|^{1/p}`.
pub fn weak_norm(f: &GridFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("weak exponent must be at least 1, got {p}")));
    }
    let mut v: Vec<f64> = f.values().iter().map(|x| x.abs()).filter(|x| *x > 0.0).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    let cell = f.domain().cell_volume();
    let mut best: f64 = 0.0;
    let mut i = 0;
    while i < v.len() {
        let level = v[i];
        while i < v.len() && v[i] == level {
            i += 1;
        }
        best = best.max(level * (i as f64 * cell).powf(1.0 / p));
    }
    Ok(best)
}

/// `int |fg| / (||f||_{p(.)} ||g||_{p'(.)})`.
pub fn holder_ratio(f: &GridFunction, g: &GridFunction, p: &VariableExponent) -> Result<f64> {
    let pc = conjugate(p)?;
    let fg = f.zip_with(g, |a, b| (a * b).abs())?;
    let nf = luxemburg_norm(f, p)?;
    let ng = luxemburg_norm(g, &pc)?;
    if nf == 0.0 || ng == 0.0 {
        return Err(Error::ZeroDenominator("Hölder ratio needs nonzero f and g"));
    }
    Ok(integrate(&fg) / (nf * ng))
}

/// `| || |f|^s ||_{p(.)} - ||f||_{s p(.)}^s |`.
pub fn power_identity_residual(f: &GridFunction, p: &VariableExponent, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::invalid(format!("power must be positive, got {s}")));
    }
    if s * p.p_minus() < 1.0 {
        return Err(Error::Hypothesis(format!("s * p_minus = {} is below 1", s * p.p_minus())));
    }
    let fs = f.map(|v| v.abs().powf(s))?;
    let lhs = luxemburg_norm(&fs, p)?;
    let rhs = luxemburg_norm(f, &p.scaled(s)?)?.powf(s);
    Ok((lhs - rhs).abs())
}

/// `|B|^{-1} ||chi_B||_{p(.)} ||chi_B||_{p'(.)}` with `|B|` the lattice
/// measure of the ball.
pub fn char_duality_product(domain: &Arc<LatticeDomain>, ball: &Ball, p: &VariableExponent) -> Result<f64> {
    let pc = conjugate(p)?;
    let chi = indicator(domain, ball);
    if chi.sub_resolution {
        return Err(Error::SubResolution { radius: ball.radius() });
    }
    let measure = integrate(&chi.function);
    Ok(luxemburg_norm(&chi.function, p)? * luxemburg_norm(&chi.function, &pc)? / measure)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::ExponentPreset;
    use crate::grid::sample;
    use crate::group::{GroupModel, GroupPoint};

    fn r1(lo: f64, hi: f64, h: f64) -> Arc<LatticeDomain> {
        Arc::new(LatticeDomain::cube(GroupModel::euclidean(1).unwrap(), lo, hi, h).unwrap())
    }

    fn cst(c: f64) -> VariableExponent {
        VariableExponent::constant(&GroupModel::euclidean(1).unwrap(), c).unwrap()
    }

    fn chi(d: &Arc<LatticeDomain>, a: f64, b: f64, height: f64) -> GridFunction {
        sample(d, |x| if x[0] > a && x[0] < b { height } else { 0.0 }).unwrap()
    }

    #[test]
    fn modular_examples() {
        let d = r1(-1.0, 4.0, 0.01);
        assert!((modular(&chi(&d, 0.0, 1.0, 1.0), &cst(3.0), 1.0).unwrap() - 1.0).abs() < 0.02);
        assert!((modular(&chi(&d, 0.0, 1.0, 2.0), &cst(2.0), 2.0).unwrap() - 1.0).abs() < 0.02);
        assert!((modular(&chi(&d, 0.0, 0.5, 1.0), &cst(2.0), 1.0).unwrap() - 0.5).abs() < 0.02);
        assert!(modular(&chi(&d, 0.0, 0.5, 1.0), &cst(2.0), 0.0).is_err());
    }

    #[test]
    fn luxemburg_examples() {
        let d = r1(-1.0, 9.0, 0.01);
        let f = chi(&d, 0.0, 1.0, 1.0);
        assert!((luxemburg_norm(&f, &cst(2.0)).unwrap() - 1.0).abs() < 1e-8);
        let g = chi(&d, 0.0, 8.0, 1.0);
        assert!((luxemburg_norm(&g, &cst(3.0)).unwrap() - 2.0).abs() < 0.01);
        let p = VariableExponent::preset(
            &GroupModel::euclidean(1).unwrap(),
            ExponentPreset::RadialLog { base: 1.5, amp: 1.0 },
        )
        .unwrap();
        let e = sample(&d, |x| (-x[0] * x[0]).exp()).unwrap();
        let n = luxemburg_norm(&e, &p).unwrap();
        let n2 = luxemburg_norm(&e.scale(-2.5).unwrap(), &p).unwrap();
        assert!((n2 - 2.5 * n).abs() <= 4e-10 * n2);
        assert_eq!(luxemburg_norm(&GridFunction::constant(&d, 0.0).unwrap(), &p).unwrap(), 0.0);
    }

    #[test]
    fn bisection_trace_is_monotone() {
        let d = r1(-2.0, 2.0, 0.01);
        let f = sample(&d, |x| 1.0 + x[0].sin()).unwrap();
        let p = VariableExponent::preset(
            &GroupModel::euclidean(1).unwrap(),
            ExponentPreset::Jump { low: 1.2, high: 3.5, axis: 0, at: 0.3 },
        )
        .unwrap();
        let mut tr = luxemburg_traced(&f, &p).unwrap().trace;
        tr.sort_by(|a, b| a.eta.total_cmp(&b.eta));
        for w in tr.windows(2) {
            if w[1].eta > w[0].eta {
                assert!(w[1].value < w[0].value);
            }
        }
    }

    #[test]
    fn weak_examples() {
        let d = r1(-1.0, 5.0, 0.01);
        assert!((weak_norm(&chi(&d, 0.0, 4.0, 1.0), 2.0).unwrap() - 2.0).abs() < 0.01);
        assert_eq!(weak_norm(&GridFunction::constant(&d, 0.0).unwrap(), 2.0).unwrap(), 0.0);
        let x = sample(&d, |x| if x[0] > 0.0 && x[0] < 1.0 { x[0] } else { 0.0 }).unwrap();
        assert!((weak_norm(&x, 1.0).unwrap() - 0.25).abs() < 0.01);
    }

    #[test]
    fn holder_examples() {
        let d = r1(-1.0, 4.0, 0.01);
        let f = chi(&d, 0.0, 1.0, 1.0);
        assert!((holder_ratio(&f, &f, &cst(2.0)).unwrap() - 1.0).abs() < 0.02);
        assert_eq!(holder_ratio(&f, &chi(&d, 2.0, 3.0, 1.0), &cst(2.0)).unwrap(), 0.0);
        let x = sample(&d, |x| if x[0] > 0.0 && x[0] < 1.0 { x[0] } else { 0.0 }).unwrap();
        let r = holder_ratio(&x, &f, &cst(2.0)).unwrap();
        assert!((r - 3f64.sqrt() / 2.0).abs() < 0.01);
        let z = GridFunction::constant(&d, 0.0).unwrap();
        assert!(matches!(holder_ratio(&z, &f, &cst(2.0)), Err(Error::ZeroDenominator(_))));
    }

    #[test]
    fn power_identity_examples() {
        let d = r1(-1.0, 5.0, 0.01);
        let p = VariableExponent::preset(
            &GroupModel::euclidean(1).unwrap(),
            ExponentPreset::RadialLog { base: 1.5, amp: 1.0 },
        )
        .unwrap();
        assert!(power_identity_residual(&chi(&d, 0.0, 1.0, 1.0), &p, 2.0).unwrap() <= 1e-8);
        assert!(power_identity_residual(&chi(&d, 0.0, 4.0, 1.0), &cst(1.0), 2.0).unwrap() <= 1e-6);
        let e = sample(&d, |x| (-x[0] * x[0]).exp()).unwrap();
        assert!(power_identity_residual(&e, &p, 1.7).unwrap() <= 1e-6);
        assert!(power_identity_residual(&e, &cst(1.0), 0.5).is_err());
    }

    #[test]
    fn duality_examples() {
        let m = GroupModel::heisenberg();
        let d = Arc::new(LatticeDomain::cube(m.clone(), -1.0, 1.0, 0.1).unwrap());
        let b = Ball::new(GroupPoint::origin(3), 0.8).unwrap();
        let two = VariableExponent::constant(&m, 2.5).unwrap();
        assert!((char_duality_product(&d, &b, &two).unwrap() - 1.0).abs() < 1e-8);
        let radial = VariableExponent::preset(&m, ExponentPreset::RadialLog { base: 1.5, amp: 1.0 }).unwrap();
        let v = char_duality_product(&d, &b, &radial).unwrap();
        assert!((0.5..=2.0).contains(&v));
        let tiny = Ball::new(GroupPoint::new(vec![0.01, 0.01, 0.0]).unwrap(), 0.02).unwrap();
        assert!(matches!(char_duality_product(&d, &tiny, &two), Err(Error::SubResolution { .. })));
    }
}
