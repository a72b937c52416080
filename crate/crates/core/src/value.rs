//! Set-valued point values: closed intervals and convex polytopes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A closed interval `[lo, hi]`, the value of a scalar class at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct IntervalValue<S> {
    lo: S,
    hi: S,
}

impl<S: Scalar> IntervalValue<S> {
    /// Endpoints in either order.
    pub fn new(p: S, q: S) -> Self {
        Self { lo: p.min(q), hi: p.max(q) }
    }

    pub fn point(v: S) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn lo(&self) -> S {
        self.lo
    }

    pub fn hi(&self) -> S {
        self.hi
    }

    pub fn width(&self) -> S {
        self.hi - self.lo
    }

    pub fn is_singleton(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, v: S, tol: S) -> bool {
        v >= self.lo - tol && v <= self.hi + tol
    }

    /// `self ⊆ other` up to `tol`.
    pub fn subset_of(&self, other: &Self, tol: S) -> bool {
        self.lo >= other.lo - tol && self.hi <= other.hi + tol
    }

    /// Hausdorff distance between two intervals.
    pub fn hausdorff(&self, other: &Self) -> S {
        (self.lo - other.lo).abs().max((self.hi - other.hi).abs())
    }

    /// Minkowski sum `{a + b}`: the pointwise addition of convex sets.
    pub fn minkowski_add(&self, other: &Self) -> Self {
        Self { lo: self.lo + other.lo, hi: self.hi + other.hi }
    }

    pub fn scale(&self, lambda: S) -> Self {
        Self::new(self.lo * lambda, self.hi * lambda)
    }
}

/// A nonempty compact convex set in `ℝ^m`, `m ∈ {1, 2}`, stored by the
/// minimal vertex list of its hull (counter-clockwise for `m = 2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ConvexValue<S> {
    dim: usize,
    vertices: Vec<Vec<S>>,
}

impl<S: Scalar> ConvexValue<S> {
    /// Convex hull of a point cloud.
    pub fn hull(points: &[Vec<S>]) -> Result<Self> {
        let dim = points
            .first()
            .map(|p| p.len())
            .ok_or_else(|| Error::InvalidFunction("convex hull of an empty set".into()))?;
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch { left: dim, right: p.len() });
        }
        let vertices = match dim {
            1 => {
                let lo = points.iter().map(|p| p[0]).fold(S::infinity(), S::min);
                let hi = points.iter().map(|p| p[0]).fold(S::neg_infinity(), S::max);
                if lo == hi {
                    vec![vec![lo]]
                } else {
                    vec![vec![lo], vec![hi]]
                }
            }
            2 => planar_hull(points.iter().map(|p| (p[0], p[1])).collect())
                .into_iter()
                .map(|(x, y)| vec![x, y])
                .collect(),
            m => return Err(Error::DimensionMismatch { left: m, right: 2 }),
        };
        Ok(Self { dim, vertices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<S>] {
        &self.vertices
    }

    pub fn is_singleton(&self) -> bool {
        self.vertices.len() == 1
    }

    /// Support function `max_{v ∈ C} ⟨v, ξ⟩`.
    pub fn support(&self, xi: &[S]) -> S {
        self.vertices
            .iter()
            .map(|v| v.iter().zip(xi).fold(S::zero(), |acc, (a, b)| acc + *a * *b))
            .fold(S::neg_infinity(), S::max)
    }

    /// Membership up to `tol`, tested through the support function on the
    /// hull's edge normals (exact for polytopes).
    pub fn contains(&self, p: &[S], tol: S) -> bool {
        if p.len() != self.dim {
            return false;
        }
        let dot = |v: &[S], w: &[S]| v.iter().zip(w).fold(S::zero(), |acc, (a, b)| acc + *a * *b);
        let mut normals: Vec<Vec<S>> = Vec::new();
        match self.dim {
            1 => normals.extend([vec![S::one()], vec![-S::one()]]),
            _ => {
                normals.extend([
                    vec![S::one(), S::zero()],
                    vec![-S::one(), S::zero()],
                    vec![S::zero(), S::one()],
                    vec![S::zero(), -S::one()],
                ]);
                let k = self.vertices.len();
                if k >= 2 {
                    for i in 0..k {
                        let a = &self.vertices[i];
                        let b = &self.vertices[(i + 1) % k];
                        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                        let len = (dx * dx + dy * dy).sqrt();
                        if len > S::zero() {
                            normals.push(vec![dy / len, -dx / len]);
                            normals.push(vec![-dy / len, dx / len]);
                            normals.push(vec![dx / len, dy / len]);
                            normals.push(vec![-dx / len, -dy / len]);
                        }
                    }
                }
            }
        }
        normals.iter().all(|xi| dot(p, xi) <= self.support(xi) + tol)
    }

    pub fn as_interval(&self) -> Option<IntervalValue<S>> {
        (self.dim == 1).then(|| {
            let lo = self.vertices.first().map(|v| v[0]).unwrap_or_else(S::zero);
            let hi = self.vertices.last().map(|v| v[0]).unwrap_or(lo);
            IntervalValue::new(lo, hi)
        })
    }
}

/// Andrew's monotone chain; collinear points are dropped.
fn planar_hull<S: Scalar>(mut pts: Vec<(S, S)>) -> Vec<(S, S)> {
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: (S, S), a: (S, S), b: (S, S)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(S, S)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= S::zero() {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(S, S)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= S::zero() {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}
