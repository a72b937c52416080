use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniform grid `a = x_0 < x_1 < ... < x_{n-1} = b` on a closed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Grid1D<S> {
    a: S,
    b: S,
    n: usize,
}

impl<S: Scalar> Grid1D<S> {
    pub fn new(a: S, b: S, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidGrid(format!("need finite a < b, got [{a}, {b}]")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 nodes, got {n}")));
        }
        Ok(Self { a, b, n })
    }

    pub fn a(&self) -> S {
        self.a
    }

    pub fn b(&self) -> S {
        self.b
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> S {
        (self.b - self.a) / S::from_usize_exact(self.n - 1)
    }

    /// Node coordinate. Computed as `a + (b-a)·i/(n-1)` so that symmetric
    /// grids hit `0` exactly at the middle node.
    pub fn node(&self, i: usize) -> S {
        if i + 1 == self.n {
            return self.b;
        }
        self.a + (self.b - self.a) * S::from_usize_exact(i) / S::from_usize_exact(self.n - 1)
    }

    pub fn nodes(&self) -> Vec<S> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn contains(&self, x: S) -> bool {
        x >= self.a && x <= self.b
    }

    pub fn check_contains(&self, x: S) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { x: x.as_f64(), a: self.a.as_f64(), b: self.b.as_f64() })
        }
    }

    /// Index of the node nearest to `x` (clamped to the grid).
    pub fn nearest(&self, x: S) -> usize {
        let t = ((x - self.a) / self.spacing()).round();
        t.max(S::zero()).min(S::from_usize_exact(self.n - 1)).to_usize().unwrap_or(0)
    }

    /// Cell containing `x`: returns `(i, t)` with `x = x_i + t·h`, `t ∈ [0, 1]`,
    /// and `i ≤ n-2`. Exact node hits return `t = 0` (or `i = n-2, t = 1` at `b`).
    pub fn locate(&self, x: S) -> (usize, S) {
        let h = self.spacing();
        let raw = ((x - self.a) / h).floor();
        let max_i = S::from_usize_exact(self.n - 2);
        let i = raw.max(S::zero()).min(max_i).to_usize().unwrap_or(0);
        let t = ((x - self.node(i)) / h).max(S::zero()).min(S::one());
        (i, t)
    }

    /// Exact node index if `x` coincides with a node up to `1e-9·h`.
    pub fn node_index(&self, x: S) -> Option<usize> {
        let i = self.nearest(x);
        let eps = self.spacing() * S::lit(1e-9);
        ((self.node(i) - x).abs() <= eps).then_some(i)
    }

    /// Same interval and node count (the condition for node-wise algebra).
    pub fn same_as(&self, other: &Self) -> bool {
        self == other
    }

    pub fn require_same(&self, other: &Self) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn cast<T: Scalar>(&self) -> Grid1D<T> {
        Grid1D { a: T::lit(self.a.as_f64()), b: T::lit(self.b.as_f64()), n: self.n }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid1D::new(1.0, 1.0, 10).is_err());
        assert!(Grid1D::new(0.0, 1.0, 1).is_err());
        assert!(Grid1D::new(f64::NAN, 1.0, 5).is_err());
    }

    #[test]
    fn symmetric_grid_hits_zero() {
        let g = Grid1D::new(-1.0, 1.0, 4001).unwrap();
        assert_eq!(g.node(2000), 0.0);
        assert_eq!(g.node(4000), 1.0);
        assert_eq!(g.node_index(0.0), Some(2000));
        let nodes = g.nodes();
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn locate_cells() {
        let g = Grid1D::<f64>::new(0.0, 1.0, 11).unwrap();
        let (i, t) = g.locate(0.25);
        assert_eq!(i, 2);
        assert!((t - 0.5_f64).abs() < 1e-12);
        let (i, t) = g.locate(1.0);
        assert_eq!(i, 9);
        assert!((t - 1.0).abs() < 1e-12);
        assert_eq!(g.locate(0.0), (0, 0.0));
    }
}
