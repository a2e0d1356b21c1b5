//! Stratified groups in exponential coordinates.
//!
//! Two instances are built in: the abelian group `R^n` and the first
//! Heisenberg group `H^1` with coordinates `(x, y, t)` and group law
//!
//! ```text
//! (x, y, t) (x', y', t') = (x + x', y + y', t + t' + (x y' - y x') / 2)
//! ```
//!
//! The homogeneous norm on `H^1` is the Korányi gauge
//! `((x^2 + y^2)^2 + 16 t^2)^(1/4)`. Haar measure is Lebesgue measure in
//! these coordinates, so quadrature over lattices needs no Jacobian.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which built-in group a model describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupKind {
    /// Abelian `R^n`, `n >= 1`.
    Euclidean(usize),
    /// First Heisenberg group, lattice dimension 3, homogeneous dimension 4.
    Heisenberg,
}

/// A stratified group instance together with its metric constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupModel {
    kind: GroupKind,
    name: String,
    dim: usize,
    q: u32,
    c1: f64,
    c0: f64,
}

/// A point in exponential coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint(Vec<f64>);

impl GroupPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("point coordinate {i} is not finite")));
        }
        Ok(GroupPoint(coords))
    }

    pub fn origin(dim: usize) -> Self {
        GroupPoint(vec![0.0; dim])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for GroupPoint {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<&[f64]> for GroupPoint {
    fn from(c: &[f64]) -> Self {
        GroupPoint(c.to_vec())
    }
}

/// Volume of the Euclidean unit ball in `R^n`.
fn unit_ball_volume(n: usize) -> f64 {
    // V_n = 2 pi / n * V_{n-2}, V_0 = 1, V_1 = 2
    let mut v = if n % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if n % 2 == 0 { 2 } else { 3 };
    while k <= n {
        v *= 2.0 * PI / k as f64;
        k += 2;
    }
    v
}

impl GroupModel {
    pub fn euclidean(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("euclidean dimension must be at least 1"));
        }
        Ok(GroupModel {
            kind: GroupKind::Euclidean(n),
            name: format!("euclidean:{n}"),
            dim: n,
            q: n as u32,
            c1: unit_ball_volume(n),
            c0: 1.0,
        })
    }

    pub fn heisenberg() -> Self {
        GroupModel {
            kind: GroupKind::Heisenberg,
            name: "heisenberg1".to_string(),
            dim: 3,
            q: 4,
            // pi * int_0^1 s sqrt(1 - s^4) ds
            c1: PI * PI / 8.0,
            // The Korányi gauge is a genuine metric for this group law, so
            // the sampled estimate never exceeds 1.
            c0: 1.0,
        }
    }

    /// Parses `"euclidean:n"` or `"heisenberg1"`.
    pub fn from_id(id: &str) -> Result<Self> {
        id.parse()
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Homogeneous dimension.
    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn q_f64(&self) -> f64 {
        self.q as f64
    }

    /// Ball-volume constant: `|B(x, r)| = c1 r^Q`.
    pub fn c1(&self) -> f64 {
        self.c1
    }

    /// Quasi-triangle constant used by restricted-mode containment tests.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Replaces the stored quasi-triangle constant, e.g. with
    /// [`estimate_c0`]. Values below 1 are rejected.
    pub fn with_c0(mut self, c0: f64) -> Result<Self> {
        if !(c0 >= 1.0 && c0.is_finite()) {
            return Err(Error::invalid(format!("c0 must be finite and >= 1, got {c0}")));
        }
        self.c0 = c0;
        Ok(self)
    }

    pub fn origin(&self) -> GroupPoint {
        GroupPoint::origin(self.dim)
    }

    /// Layer index (1-based) of each coordinate.
    pub fn layer(&self, axis: usize) -> u32 {
        match self.kind {
            GroupKind::Euclidean(_) => 1,
            GroupKind::Heisenberg => {
                if axis == 2 {
                    2
                } else {
                    1
                }
            }
        }
    }

    fn check(&self, g: &[f64]) -> Result<()> {
        if g.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: g.len() });
        }
        Ok(())
    }

    pub fn compose(&self, g: &GroupPoint, h: &GroupPoint) -> Result<GroupPoint> {
        self.check(g)?;
        self.check(h)?;
        let mut out = vec![0.0; self.dim];
        self.compose_into(g, h, &mut out);
        Ok(GroupPoint(out))
    }

    /// Unchecked group law on raw coordinate slices.
    #[inline]
    pub fn compose_into(&self, g: &[f64], h: &[f64], out: &mut [f64]) {
        match self.kind {
            GroupKind::Euclidean(_) => {
                for ((o, a), b) in out.iter_mut().zip(g).zip(h) {
                    *o = a + b;
                }
            }
            GroupKind::Heisenberg => {
                out[0] = g[0] + h[0];
                out[1] = g[1] + h[1];
                out[2] = (g[2] + h[2]) + 0.5 * (g[0] * h[1] - g[1] * h[0]);
            }
        }
    }

    pub fn inverse(&self, g: &GroupPoint) -> Result<GroupPoint> {
        self.check(g)?;
        Ok(GroupPoint(g.iter().map(|c| -c).collect()))
    }

    pub fn dilate(&self, r: f64, g: &GroupPoint) -> Result<GroupPoint> {
        self.check(g)?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid(format!("dilation factor must be positive, got {r}")));
        }
        Ok(GroupPoint(
            g.iter()
                .enumerate()
                .map(|(k, c)| c * r.powi(self.layer(k) as i32))
                .collect(),
        ))
    }

    pub fn hom_norm(&self, g: &GroupPoint) -> Result<f64> {
        self.check(g)?;
        Ok(self.norm_raw(g))
    }

    /// Unchecked homogeneous norm.
    #[inline]
    pub fn norm_raw(&self, g: &[f64]) -> f64 {
        match self.kind {
            GroupKind::Euclidean(_) => g.iter().map(|c| c * c).sum::<f64>().sqrt(),
            GroupKind::Heisenberg => {
                let s = g[0] * g[0] + g[1] * g[1];
                (s * s + 16.0 * g[2] * g[2]).sqrt().sqrt()
            }
        }
    }

    /// `rho(g^-1 h)`.
    pub fn quasi_distance(&self, g: &GroupPoint, h: &GroupPoint) -> Result<f64> {
        self.check(g)?;
        self.check(h)?;
        Ok(self.distance_raw(g, h))
    }

    /// Unchecked `rho(g^-1 h)`; bit-identical to composing the inverse
    /// explicitly and taking the norm.
    #[inline]
    pub fn distance_raw(&self, g: &[f64], h: &[f64]) -> f64 {
        match self.kind {
            GroupKind::Euclidean(_) => g
                .iter()
                .zip(h)
                .map(|(a, b)| {
                    let d = b - a;
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
            GroupKind::Heisenberg => {
                let u = h[0] - g[0];
                let v = h[1] - g[1];
                let tau = (h[2] - g[2]) + 0.5 * (g[1] * h[0] - g[0] * h[1]);
                let s = u * u + v * v;
                (s * s + 16.0 * tau * tau).sqrt().sqrt()
            }
        }
    }

    pub fn ball_measure(&self, r: f64) -> Result<f64> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid(format!("ball radius must be positive, got {r}")));
        }
        Ok(self.c1 * r.powi(self.q as i32))
    }

    /// Half-width of the projection of `B(center, r)` onto a non-final
    /// axis. Every member `y` satisfies `|y_axis - center_axis| < r`.
    #[inline]
    pub(crate) fn axis_half_width(&self, _axis: usize, r: f64) -> f64 {
        // Layer-one coordinates of y^-1 x are plain differences and are
        // bounded by the norm for both gauges.
        r
    }

    /// Axis-aligned box containing `B(center, r)`.
    pub fn bounding_box(&self, center: &[f64], r: f64) -> Vec<(f64, f64)> {
        match self.kind {
            GroupKind::Euclidean(_) => center.iter().map(|c| (c - r, c + r)).collect(),
            GroupKind::Heisenberg => {
                // |t - t_c| <= r^2/4 + |y_c u - x_c v| / 2 with |u|, |v| < r
                let w = r * r / 4.0 + 0.5 * r * (center[0].abs() + center[1].abs());
                vec![(center[0] - r, center[0] + r), (center[1] - r, center[1] + r), (center[2] - w, center[2] + w)]
            }
        }
    }

    /// Interval of the final coordinate for which `(prefix, t)` lies in
    /// `B(center, r)`, or `None` when the column misses the ball.
    #[inline]
    pub(crate) fn last_axis_interval(&self, center: &[f64], prefix: &[f64], r: f64) -> Option<(f64, f64)> {
        match self.kind {
            GroupKind::Euclidean(n) => {
                let mut s = 0.0;
                for k in 0..n - 1 {
                    let d = prefix[k] - center[k];
                    s += d * d;
                }
                let rem = r * r - s;
                if rem <= 0.0 {
                    return None;
                }
                let w = rem.sqrt();
                Some((center[n - 1] - w, center[n - 1] + w))
            }
            GroupKind::Heisenberg => {
                let u = prefix[0] - center[0];
                let v = prefix[1] - center[1];
                let s = u * u + v * v;
                let rem = r.powi(4) - s * s;
                if rem <= 0.0 {
                    return None;
                }
                let w = rem.sqrt() / 4.0;
                // tau = t - t_c + (y_c x - x_c y) / 2
                let mid = center[2] - 0.5 * (center[1] * prefix[0] - center[0] * prefix[1]);
                Some((mid - w, mid + w))
            }
        }
    }
}

impl FromStr for GroupModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "heisenberg1" {
            return Ok(GroupModel::heisenberg());
        }
        if let Some(n) = s.strip_prefix("euclidean:") {
            let n: usize = n
                .parse()
                .map_err(|_| Error::invalid(format!("bad euclidean dimension in group id {s:?}")))?;
            return GroupModel::euclidean(n);
        }
        Err(Error::invalid(format!(
            "unknown group id {s:?} (expected \"euclidean:n\" or \"heisenberg1\")"
        )))
    }
}

impl fmt::Display for GroupModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Empirical quasi-triangle constant: the largest sampled value of
/// `rho(x, y) / (rho(x, z) + rho(z, y))`, never below 1.
///
/// Triples are drawn uniformly from `[-2, 2]^dim`; every tenth triple is
/// degenerate (`z = x`) and contributes a ratio of exactly 1.
pub fn estimate_c0(model: &GroupModel, sample_count: usize, seed: u64) -> Result<f64> {
    if sample_count < 1000 {
        return Err(Error::invalid(format!(
            "estimate_c0 needs at least 1000 samples, got {sample_count}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.dim();
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut worst: f64 = 1.0;
    for i in 0..sample_count {
        for k in 0..n {
            x[k] = rng.gen_range(-2.0..2.0);
            y[k] = rng.gen_range(-2.0..2.0);
            z[k] = rng.gen_range(-2.0..2.0);
        }
        if i % 10 == 0 {
            z.copy_from_slice(&x);
        }
        let denom = model.distance_raw(&x, &z) + model.distance_raw(&z, &y);
        if denom > 0.0 {
            worst = worst.max(model.distance_raw(&x, &y) / denom);
        }
    }
    Ok(worst)
}
