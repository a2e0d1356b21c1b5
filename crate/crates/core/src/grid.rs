//! Lattice discretisation of a bounded domain in exponential coordinates.
//!
//! Nodes are cell centred: node `i` on axis `k` sits at
//! `lo_k - pad * h + (i + 1/2) h`. A ball's support on the lattice is
//! stored as runs of consecutive nodes along the last (fastest) axis; every
//! run end is decided by the strict test `rho(center^-1 y) < radius`, so the
//! supports agree node for node with [`indicator`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupModel, GroupPoint};

/// Pointwise real function of exponential coordinates.
pub type Analytic = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

const INTEGRAL_TOL: f64 = 1e-9;

/// Sum with a fixed pairwise tree, so results do not depend on how callers
/// schedule work.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    pairwise_sum_by(xs, |v| v)
}

pub fn pairwise_sum_by(xs: &[f64], f: impl Fn(f64) -> f64 + Copy) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        let mut s = 0.0;
        for &x in xs {
            s += f(x);
        }
        s
    } else {
        let mid = xs.len() / 2;
        pairwise_sum_by(&xs[..mid], f) + pairwise_sum_by(&xs[mid..], f)
    }
}

fn cells(span: f64, h: f64, what: &str) -> Result<usize> {
    let x = span / h;
    let n = x.round();
    if (x - n).abs() > INTEGRAL_TOL * n.max(1.0) {
        return Err(Error::invalid(format!("{what} {span} is not a whole number of cells of size {h}")));
    }
    Ok(n as usize)
}

/// Uniform cell-centred lattice over a box, with an optional margin of
/// padding cells around the core box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDomain {
    model: GroupModel,
    lo: Vec<f64>,
    hi: Vec<f64>,
    h: f64,
    padding: f64,
    pad_cells: usize,
    core_counts: Vec<usize>,
    counts: Vec<usize>,
    strides: Vec<usize>,
    axis_coords: Vec<Vec<f64>>,
}

impl LatticeDomain {
    pub fn new(model: GroupModel, lo: Vec<f64>, hi: Vec<f64>, h: f64, padding: f64) -> Result<Self> {
        let n = model.dim();
        if lo.len() != n || hi.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: lo.len().min(hi.len()) });
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!("lattice spacing must be positive, got {h}")));
        }
        if !(padding >= 0.0 && padding.is_finite()) {
            return Err(Error::invalid(format!("padding must be non-negative, got {padding}")));
        }
        let pad_cells = {
            let x = padding / h;
            if (x - x.round()).abs() <= INTEGRAL_TOL * x.round().max(1.0) {
                x.round() as usize
            } else {
                x.ceil() as usize
            }
        };
        let mut core_counts = Vec::with_capacity(n);
        for k in 0..n {
            if !(lo[k].is_finite() && hi[k].is_finite() && hi[k] > lo[k]) {
                return Err(Error::invalid(format!("axis {k}: need lo < hi, got [{}, {}]", lo[k], hi[k])));
            }
            let c = cells(hi[k] - lo[k], h, &format!("axis {k} extent"))?;
            if c < 2 {
                return Err(Error::invalid(format!("axis {k} has fewer than 2 nodes")));
            }
            core_counts.push(c);
        }
        let counts: Vec<usize> = core_counts.iter().map(|c| c + 2 * pad_cells).collect();
        let mut strides = vec![1usize; n];
        for k in (0..n.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * counts[k + 1];
        }
        if strides[0].checked_mul(counts[0]).map_or(true, |t| t > u32::MAX as usize) {
            return Err(Error::invalid("lattice too large"));
        }
        let axis_coords = (0..n)
            .map(|k| {
                let origin = lo[k] - pad_cells as f64 * h;
                (0..counts[k]).map(|i| origin + (i as f64 + 0.5) * h).collect()
            })
            .collect();
        Ok(LatticeDomain { model, lo, hi, h, padding, pad_cells, core_counts, counts, strides, axis_coords })
    }

    /// Cube `[lo, hi]^dim` without padding.
    pub fn cube(model: GroupModel, lo: f64, hi: f64, h: f64) -> Result<Self> {
        let n = model.dim();
        Self::new(model, vec![lo; n], vec![hi; n], h, 0.0)
    }

    pub fn model(&self) -> &GroupModel {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn padding(&self) -> f64 {
        self.padding
    }

    pub fn pad_cells(&self) -> usize {
        self.pad_cells
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn core_counts(&self) -> &[usize] {
        &self.core_counts
    }

    pub fn node_count(&self) -> usize {
        self.counts.iter().product()
    }

    /// Haar measure of one lattice cell.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }

    pub fn axis_coords(&self, axis: usize) -> &[f64] {
        &self.axis_coords[axis]
    }

    pub fn node_multi_index(&self, idx: usize, out: &mut [usize]) {
        let mut rem = idx;
        for k in 0..self.dim() {
            out[k] = rem / self.strides[k];
            rem %= self.strides[k];
        }
    }

    pub fn node_coords(&self, idx: usize, out: &mut [f64]) {
        let mut rem = idx;
        for k in 0..self.dim() {
            let i = rem / self.strides[k];
            rem %= self.strides[k];
            out[k] = self.axis_coords[k][i];
        }
    }

    pub fn node_point(&self, idx: usize) -> GroupPoint {
        let mut c = vec![0.0; self.dim()];
        self.node_coords(idx, &mut c);
        GroupPoint::from(&c[..])
    }

    pub fn index_of(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// True when the node lies in the un-padded core box.
    pub fn is_core_node(&self, idx: usize) -> bool {
        let mut rem = idx;
        for k in 0..self.dim() {
            let i = rem / self.strides[k];
            rem %= self.strides[k];
            if i < self.pad_cells || i >= self.pad_cells + self.core_counts[k] {
                return false;
            }
        }
        true
    }

    /// Same box and padding at half the spacing.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.model.clone(), self.lo.clone(), self.hi.clone(), self.h / 2.0, self.padding)
    }

    /// Image of the lattice under the group dilation by `r`. Only abelian
    /// groups are supported: a single spacing cannot follow the graded
    /// scaling of the Heisenberg centre.
    pub fn dilated(&self, r: f64) -> Result<Self> {
        if !matches!(self.model.kind(), crate::group::GroupKind::Euclidean(_)) {
            return Err(Error::invalid("matched-grid dilation needs an isotropic (abelian) group"));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid(format!("dilation factor must be positive, got {r}")));
        }
        let lo = self.lo.iter().map(|x| x * r).collect();
        let hi = self.hi.iter().map(|x| x * r).collect();
        Self::new(self.model.clone(), lo, hi, self.h * r, self.padding * r)
    }

    /// Largest quasi-distance between two corners of the core box.
    pub fn diameter(&self) -> f64 {
        let n = self.dim();
        let corners: Vec<Vec<f64>> = (0..1usize << n)
            .map(|mask| (0..n).map(|k| if mask >> k & 1 == 1 { self.hi[k] } else { self.lo[k] }).collect())
            .collect();
        let mut d: f64 = 0.0;
        for a in &corners {
            for b in &corners {
                d = d.max(self.model.distance_raw(a, b));
            }
        }
        d
    }

    /// True when the ball lies inside the stored lattice box, so its
    /// support is not clipped.
    pub fn contains_ball(&self, ball: &Ball) -> bool {
        let bb = self.model.bounding_box(ball.center().coords(), ball.radius());
        bb.iter().enumerate().all(|(k, (a, b))| {
            let c = &self.axis_coords[k];
            *a >= c[0] - 0.5 * self.h && *b <= c[c.len() - 1] + 0.5 * self.h
        })
    }

    fn index_window(&self, axis: usize, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let origin = self.axis_coords[axis][0] - 0.5 * self.h;
        let a = ((lo - origin) / self.h - 0.5).floor() - 1.0;
        let b = ((hi - origin) / self.h - 0.5).ceil() + 1.0;
        let max = (self.counts[axis] - 1) as f64;
        if b < 0.0 || a > max {
            return None;
        }
        Some((a.max(0.0) as usize, b.min(max) as usize))
    }

    /// Lattice nodes of `ball`, as runs along the last axis in increasing
    /// node order.
    pub fn ball_support(&self, ball: &Ball) -> BallSupport {
        let n = self.dim();
        let last = n - 1;
        let c = ball.center.coords();
        let r = ball.radius;
        let mut windows = Vec::with_capacity(last);
        for k in 0..last {
            let w = self.model.axis_half_width(k, r);
            match self.index_window(k, c[k] - w, c[k] + w) {
                Some(win) => windows.push(win),
                None => return BallSupport::default(),
            }
        }
        let mut runs = Vec::new();
        let mut count = 0usize;
        let mut multi: Vec<usize> = windows.iter().map(|w| w.0).collect();
        let mut coords = vec![0.0; n];
        let nlast = self.counts[last];
        let last_coords = &self.axis_coords[last];
        loop {
            for k in 0..last {
                coords[k] = self.axis_coords[k][multi[k]];
            }
            if let Some((tlo, thi)) = self.model.last_axis_interval(c, &coords[..last], r) {
                if let Some((mut a, mut b)) = self.index_window(last, tlo, thi) {
                    let mut member = |i: usize| {
                        coords[last] = last_coords[i];
                        self.model.distance_raw(c, &coords) < r
                    };
                    while a <= b && !member(a) {
                        a += 1;
                    }
                    while b >= a && !member(b) {
                        if b == 0 {
                            break;
                        }
                        b -= 1;
                    }
                    if a <= b && member(a) {
                        while a > 0 && member(a - 1) {
                            a -= 1;
                        }
                        while b + 1 < nlast && member(b + 1) {
                            b += 1;
                        }
                        let base: usize = (0..last).map(|k| multi[k] * self.strides[k]).sum();
                        runs.push(Run { start: (base + a) as u32, len: (b - a + 1) as u32 });
                        count += b - a + 1;
                    }
                }
            }
            // odometer over the prefix axes
            let mut k = last;
            loop {
                if k == 0 {
                    return BallSupport { runs, count };
                }
                k -= 1;
                if multi[k] < windows[k].1 {
                    multi[k] += 1;
                    break;
                }
                multi[k] = windows[k].0;
            }
        }
    }
}

/// Consecutive nodes `start .. start + len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub start: u32,
    pub len: u32,
}

/// Lattice nodes inside one ball.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BallSupport {
    runs: Vec<Run>,
    count: usize,
}

impl BallSupport {
    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.runs.iter().flat_map(|r| r.start as usize..(r.start + r.len) as usize)
    }

    /// Pairwise sum of `f(values[i])` over the support.
    pub fn sum_by(&self, values: &[f64], f: impl Fn(f64) -> f64 + Copy) -> f64 {
        let partial: Vec<f64> = self
            .runs
            .iter()
            .map(|r| pairwise_sum_by(&values[r.start as usize..(r.start + r.len) as usize], f))
            .collect();
        pairwise_sum(&partial)
    }

    pub fn contains_node(&self, idx: usize) -> bool {
        let i = self.runs.partition_point(|r| (r.start + r.len) as usize <= idx);
        i < self.runs.len() && self.runs[i].start as usize <= idx
    }
}

/// Real-valued samples on every lattice node.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    domain: Arc<LatticeDomain>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: Arc<LatticeDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.node_count() {
            return Err(Error::invalid(format!(
                "expected {} values, got {}",
                domain.node_count(),
                values.len()
            )));
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            let mut coords = vec![0.0; domain.dim()];
            domain.node_coords(node, &mut coords);
            return Err(Error::NonFinite { node, coords, value: values[node] });
        }
        Ok(GridFunction { domain, values })
    }

    pub fn constant(domain: &Arc<LatticeDomain>, c: f64) -> Result<Self> {
        Self::new(domain.clone(), vec![c; domain.node_count()])
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.domain.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same(other)?;
        Self::new(
            self.domain.clone(),
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn abs(&self) -> Self {
        GridFunction { domain: self.domain.clone(), values: self.values.iter().map(|v| v.abs()).collect() }
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub(crate) fn check_same(&self, other: &GridFunction) -> Result<()> {
        if Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }
}

/// Samples `expr` at every node.
pub fn sample(domain: &Arc<LatticeDomain>, expr: impl Fn(&[f64]) -> f64) -> Result<GridFunction> {
    let mut coords = vec![0.0; domain.dim()];
    let mut values = Vec::with_capacity(domain.node_count());
    for node in 0..domain.node_count() {
        domain.node_coords(node, &mut coords);
        let v = expr(&coords);
        if !v.is_finite() {
            return Err(Error::NonFinite { node, coords, value: v });
        }
        values.push(v);
    }
    Ok(GridFunction { domain: domain.clone(), values })
}

/// Riemann sum against Haar measure.
pub fn integrate(f: &GridFunction) -> f64 {
    f.domain.cell_volume() * pairwise_sum(&f.values)
}

/// An open ball `{y : rho(center^-1 y) < radius}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    center: GroupPoint,
    radius: f64,
}

impl Ball {
    pub fn new(center: GroupPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Ball { center, radius })
    }

    pub fn center(&self) -> &GroupPoint {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn contains(&self, model: &GroupModel, y: &[f64]) -> bool {
        model.distance_raw(self.center.coords(), y) < self.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallIntegral {
    pub value: f64,
    pub nodes: usize,
    pub sub_resolution: bool,
}

/// `h^n` times the sum of `|f|` (or `f`) over the nodes of `ball`. Nodes
/// outside the stored lattice contribute nothing.
pub fn ball_integral(f: &GridFunction, ball: &Ball, use_abs: bool) -> Result<BallIntegral> {
    let domain = f.domain();
    if ball.center.len() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), found: ball.center.len() });
    }
    let support = domain.ball_support(ball);
    let s = if use_abs { support.sum_by(&f.values, f64::abs) } else { support.sum_by(&f.values, |v| v) };
    Ok(BallIntegral { value: domain.cell_volume() * s, nodes: support.count(), sub_resolution: support.is_empty() })
}

/// Geometric radius ladder `r_k = r_min gamma^k`, keeping every rung that
/// does not exceed `r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusLadder {
    pub r_min: f64,
    pub r_max: f64,
    pub gamma: f64,
}

impl RadiusLadder {
    pub fn new(r_min: f64, r_max: f64, gamma: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_max >= r_min && r_max.is_finite()) {
            return Err(Error::invalid(format!("need 0 < r_min <= r_max, got {r_min}, {r_max}")));
        }
        if !(1.01..=1.2).contains(&gamma) {
            return Err(Error::invalid(format!("ladder ratio must lie in [1.01, 1.2], got {gamma}")));
        }
        Ok(RadiusLadder { r_min, r_max, gamma })
    }

    pub fn len(&self) -> usize {
        ((self.r_max / self.r_min).ln() / self.gamma.ln() + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.r_min * self.gamma.powi(k as i32)).collect()
    }
}

/// How a family was generated; carried into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyDescriptor {
    Lattice { stride: usize, r_min: f64, r_max: f64, gamma: f64, centers: usize, radii: usize },
    Explicit { balls: usize },
}

/// A finite, canonically ordered set of balls (centre lexicographic, then
/// radius).
#[derive(Debug, Clone, PartialEq)]
pub struct BallFamily {
    balls: Vec<Ball>,
    descriptor: FamilyDescriptor,
}

impl BallFamily {
    pub fn from_balls(mut balls: Vec<Ball>) -> Result<Self> {
        if balls.is_empty() {
            return Err(Error::EmptyFamily);
        }
        balls.sort_by(|a, b| {
            a.center
                .iter()
                .zip(b.center.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.radius.total_cmp(&b.radius))
        });
        let n = balls.len();
        Ok(BallFamily { balls, descriptor: FamilyDescriptor::Explicit { balls: n } })
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn descriptor(&self) -> &FamilyDescriptor {
        &self.descriptor
    }
}

/// Centres on every `stride`-th core node per axis (aligned so the middle
/// node is always a centre), radii on `ladder`.
pub fn build_ball_family(domain: &LatticeDomain, stride: usize, ladder: RadiusLadder) -> Result<BallFamily> {
    if stride == 0 {
        return Err(Error::invalid("center stride must be positive"));
    }
    let h = domain.h();
    if ladder.r_min < 3.0 * h * (1.0 - 1e-12) {
        return Err(Error::invalid(format!(
            "r_min {} is below three lattice spacings ({})",
            ladder.r_min,
            3.0 * h
        )));
    }
    let diam = domain.diameter();
    if ladder.r_max > diam * (1.0 + 1e-12) {
        return Err(Error::invalid(format!("r_max {} exceeds the domain diameter {diam}", ladder.r_max)));
    }
    let n = domain.dim();
    let pad = domain.pad_cells();
    let per_axis: Vec<Vec<usize>> = domain
        .core_counts()
        .iter()
        .map(|&c| {
            let mid = c / 2;
            (0..c).filter(|j| (*j as isize - mid as isize).rem_euclid(stride as isize) == 0).map(|j| j + pad).collect()
        })
        .collect();
    let radii = ladder.radii();
    let mut balls = Vec::new();
    let mut multi = vec![0usize; n];
    let mut centers = 0usize;
    'outer: loop {
        let idx: Vec<usize> = (0..n).map(|k| per_axis[k][multi[k]]).collect();
        let node = domain.index_of(&idx);
        let center = domain.node_point(node);
        centers += 1;
        for &r in &radii {
            balls.push(Ball { center: center.clone(), radius: r });
        }
        let mut k = n;
        loop {
            if k == 0 {
                break 'outer;
            }
            k -= 1;
            multi[k] += 1;
            if multi[k] < per_axis[k].len() {
                break;
            }
            multi[k] = 0;
        }
    }
    if balls.is_empty() {
        return Err(Error::EmptyFamily);
    }
    Ok(BallFamily {
        balls,
        descriptor: FamilyDescriptor::Lattice {
            stride,
            r_min: ladder.r_min,
            r_max: ladder.r_max,
            gamma: ladder.gamma,
            centers,
            radii: radii.len(),
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Indicator {
    pub function: GridFunction,
    pub sub_resolution: bool,
}

/// `chi_B` on the lattice.
pub fn indicator(domain: &Arc<LatticeDomain>, ball: &Ball) -> Indicator {
    let support = domain.ball_support(ball);
    let mut values = vec![0.0; domain.node_count()];
    for i in support.nodes() {
        values[i] = 1.0;
    }
    Indicator {
        function: GridFunction { domain: domain.clone(), values },
        sub_resolution: support.is_empty(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn r1(lo: f64, hi: f64, h: f64) -> Arc<LatticeDomain> {
        Arc::new(LatticeDomain::cube(GroupModel::euclidean(1).unwrap(), lo, hi, h).unwrap())
    }

    fn pt(c: &[f64]) -> GroupPoint {
        GroupPoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn domain_validation() {
        let m = GroupModel::euclidean(2).unwrap();
        assert!(LatticeDomain::new(m.clone(), vec![0.0, 0.0], vec![1.0, 1.0], 0.3, 0.0).is_err());
        assert!(LatticeDomain::new(m.clone(), vec![1.0, 0.0], vec![0.0, 1.0], 0.5, 0.0).is_err());
        assert!(LatticeDomain::new(m.clone(), vec![0.0, 0.0], vec![1.0, 1.0], 1.0, 0.0).is_err());
        assert!(LatticeDomain::new(m.clone(), vec![0.0], vec![1.0], 0.5, 0.0).is_err());
        let d = LatticeDomain::new(m, vec![0.0, 0.0], vec![1.0, 2.0], 0.25, 0.5).unwrap();
        assert_eq!(d.counts(), &[8, 12]);
        assert_eq!(d.core_counts(), &[4, 8]);
        assert!(!d.is_core_node(0));
        let mut c = [0.0; 2];
        d.node_coords(0, &mut c);
        assert_eq!(c, [-0.375, -0.375]);
    }

    #[test]
    fn sample_examples() {
        let d = r1(-2.0, 2.0, 0.5);
        let one = sample(&d, |_| 1.0).unwrap();
        assert!(one.values().iter().all(|&v| v == 1.0));
        let ball = Ball::new(pt(&[0.0]), 1.0).unwrap();
        let chi = sample(&d, |x| if ball.contains(d.model(), x) { 1.0 } else { 0.0 }).unwrap();
        // nodes -1.75, -1.25, ..., 1.75
        assert_eq!(chi.values(), &[0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(indicator(&d, &ball).function, chi);

        let h = Arc::new(LatticeDomain::cube(GroupModel::heisenberg(), -1.5, 1.5, 0.5).unwrap());
        let beta = 0.5;
        let f = sample(&h, |x| h.model().norm_raw(x).powf(beta)).unwrap();
        // node (1.25, ...) is not (1,0,0); evaluate the expression directly
        assert_eq!(h.model().norm_raw(&[1.0, 0.0, 0.0]).powf(beta), 1.0);
        assert_eq!(f.values().len(), 216);

        let err = sample(&d, |x| if x[0] > 1.0 { f64::NAN } else { 0.0 }).unwrap_err();
        match err {
            Error::NonFinite { node, coords, .. } => {
                assert_eq!(node, 6);
                assert_eq!(coords, vec![1.25]);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn integrate_examples() {
        let d = r1(0.0, 1.0, 0.01);
        let one = GridFunction::constant(&d, 1.0).unwrap();
        assert!((integrate(&one) - 1.0).abs() < 1e-12);

        let m = GroupModel::euclidean(2).unwrap();
        let d2 = Arc::new(LatticeDomain::cube(m, -1.5, 1.5, 0.02).unwrap());
        let unit = Ball::new(pt(&[0.0, 0.0]), 1.0).unwrap();
        let area = integrate(&indicator(&d2, &unit).function);
        assert!((area - PI).abs() < 3.0 * 2.0 * 0.02 * PI);

        let hd = Arc::new(LatticeDomain::cube(GroupModel::heisenberg(), -1.2, 1.2, 0.04).unwrap());
        let hb = Ball::new(pt(&[0.0, 0.0, 0.0]), 1.0).unwrap();
        let vol = integrate(&indicator(&hd, &hb).function);
        let exact = PI * PI / 8.0;
        assert!((vol - exact).abs() / exact < 3.0 * 3.0 * 0.04, "vol {vol}");
    }

    #[test]
    fn ball_integral_examples() {
        let d = r1(-2.0, 2.0, 0.01);
        let one = GridFunction::constant(&d, 1.0).unwrap();
        let b = Ball::new(pt(&[0.0]), 1.0).unwrap();
        let v = ball_integral(&one, &b, true).unwrap();
        assert!((v.value - 2.0).abs() < 0.02 + 1e-12);

        let chi01 = sample(&d, |x| if (0.0..=1.0).contains(&x[0]) { 1.0 } else { 0.0 }).unwrap();
        let b2 = Ball::new(pt(&[2.0]), 1.0).unwrap();
        assert!(ball_integral(&chi01, &b2, true).unwrap().value <= 0.01 + 1e-12);

        let id = sample(&d, |x| x[0]).unwrap();
        assert!(ball_integral(&id, &b, false).unwrap().value.abs() < 1e-10);
        assert!(ball_integral(&id, &b, true).unwrap().value > 0.9);

        let tiny = Ball::new(pt(&[0.0]), 0.004).unwrap();
        let v = ball_integral(&one, &tiny, true).unwrap();
        assert!(v.sub_resolution);
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn support_matches_bruteforce() {
        let hd = Arc::new(LatticeDomain::new(GroupModel::heisenberg(), vec![-1.0, -1.0, -0.5], vec![1.0, 1.0, 0.5], 0.1, 0.2).unwrap());
        let m = hd.model().clone();
        for (c, r) in [([0.3, -0.2, 0.1], 0.7), ([-1.1, 0.9, 0.4], 0.5), ([0.0, 0.0, 0.0], 1.6), ([0.05, 0.05, 0.05], 0.3)] {
            let ball = Ball::new(pt(&c), r).unwrap();
            let s = hd.ball_support(&ball);
            let mut coords = [0.0; 3];
            let brute: Vec<usize> = (0..hd.node_count())
                .filter(|&i| {
                    hd.node_coords(i, &mut coords);
                    m.distance_raw(&c, &coords) < r
                })
                .collect();
            assert_eq!(s.nodes().collect::<Vec<_>>(), brute);
            assert!(brute.iter().all(|&i| s.contains_node(i)));
        }
    }

    #[test]
    fn ladder_count_and_family() {
        let lad = RadiusLadder::new(0.3, 4.0, 1.1).unwrap();
        assert_eq!(lad.len(), 28);
        let radii = lad.radii();
        assert!(*radii.last().unwrap() <= 4.0);
        assert!(radii.last().unwrap() * 1.1 > 4.0);
        let d = r1(-2.0, 2.0, 0.1);
        let fam = build_ball_family(&d, 1, lad).unwrap();
        assert_eq!(fam.len(), 40 * 28);
        let single = build_ball_family(&d, d.node_count(), lad).unwrap();
        assert_eq!(single.len(), 28);
        assert!((single.balls()[0].center()[0] - 0.05).abs() < 1e-12);
        assert!(RadiusLadder::new(0.3, 4.0, 1.005).is_err());
        assert!(RadiusLadder::new(0.3, 4.0, 1.3).is_err());
        assert!(build_ball_family(&d, 1, RadiusLadder::new(0.2, 4.0, 1.1).unwrap()).is_err());
        assert!(build_ball_family(&d, 1, RadiusLadder::new(0.3, 4.5, 1.1).unwrap()).is_err());
        // canonical order: centre-major, radius ascending
        let b = fam.balls();
        for w in b.windows(2) {
            let (c0, c1) = (w[0].center()[0], w[1].center()[0]);
            assert!(c0 < c1 || (c0 == c1 && w[0].radius() < w[1].radius()));
        }
    }

    #[test]
    fn indicator_edge_cases() {
        let d = r1(-2.0, 2.0, 0.5);
        let huge = Ball::new(pt(&[0.0]), 10.0).unwrap();
        assert!(indicator(&d, &huge).function.values().iter().all(|&v| v == 1.0));
        let tiny = Ball::new(pt(&[0.0]), 0.2).unwrap();
        let ind = indicator(&d, &tiny);
        assert!(ind.sub_resolution);
        assert!(ind.function.is_zero());
    }

    #[test]
    fn pairwise_is_order_fixed() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin() * 1e-3 + 1.0).collect();
        let a = pairwise_sum(&xs);
        assert_eq!(a, pairwise_sum(&xs));
        assert!((a - xs.iter().sum::<f64>()).abs() < 1e-10);
    }
}
