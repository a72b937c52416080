//! Sampled bounded functions with an explicit finite jump set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::scalar::{max_abs, Scalar};
use crate::tolerance::tol_rep;

/// A bounded function sampled on a uniform grid.
///
/// `jumps` lists interior node indices where a discontinuity is permitted.
/// The value stored at a jump node is an arbitrary representative value;
/// one-sided limits are read from the neighbouring jump-free nodes. `lip`
/// bounds the slope between adjacent jump-free nodes and `bound` bounds
/// `|values|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SampledFn<S> {
    grid: Grid1D<S>,
    values: Vec<S>,
    jumps: Vec<usize>,
    lip: S,
    bound: S,
}

impl<S: Scalar> SampledFn<S> {
    /// Validates shape, finiteness, the value bound and the jump set.
    /// The Lipschitz metadata is checked separately by [`Self::lip_defect`].
    pub fn new(grid: Grid1D<S>, values: Vec<S>, mut jumps: Vec<usize>, lip: S, bound: S) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidFunction(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction(format!("non-finite value at node {i}")));
        }
        if !(lip >= S::zero()) || !lip.is_finite() {
            return Err(Error::InvalidFunction(format!("lip must be finite and nonnegative, got {lip}")));
        }
        if let Some(i) = values.iter().position(|v| v.abs() > bound) {
            return Err(Error::InvalidFunction(format!(
                "|value| {} at node {i} exceeds bound {bound}",
                values[i].abs()
            )));
        }
        jumps.sort_unstable();
        jumps.dedup();
        if let Some(&j) = jumps.iter().find(|&&j| j == 0 || j + 1 >= grid.len()) {
            return Err(Error::InvalidFunction(format!("jump node {j} must be interior")));
        }
        Ok(Self { grid, values, jumps, lip, bound })
    }

    /// Builds a function whose `lip` and `bound` are measured from the data.
    pub fn measured(grid: Grid1D<S>, values: Vec<S>, jumps: Vec<usize>) -> Result<Self> {
        let bound = max_abs(&values);
        let mut f = Self::new(grid, values, jumps, S::zero(), bound)?;
        f.lip = f.measured_lip();
        Ok(f)
    }

    /// Continuous function sampled from data (empty jump set).
    pub fn continuous(grid: Grid1D<S>, values: Vec<S>) -> Result<Self> {
        Self::measured(grid, values, Vec::new())
    }

    /// Samples `f` on the grid; `jumps_at` are snapped to their nearest nodes.
    pub fn sample(grid: Grid1D<S>, f: impl Fn(S) -> S, jumps_at: &[S]) -> Result<Self> {
        let values = grid.nodes().into_iter().map(f).collect();
        let jumps = jumps_at.iter().map(|&x| grid.nearest(x)).collect();
        Self::measured(grid, values, jumps)
    }

    pub fn grid(&self) -> &Grid1D<S> {
        &self.grid
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn jumps(&self) -> &[usize] {
        &self.jumps
    }

    pub fn lip(&self) -> S {
        self.lip
    }

    pub fn bound(&self) -> S {
        self.bound
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_continuous(&self) -> bool {
        self.jumps.is_empty()
    }

    pub fn is_jump(&self, i: usize) -> bool {
        self.jumps.binary_search(&i).is_ok()
    }

    pub fn jump_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        for &j in &self.jumps {
            mask[j] = true;
        }
        mask
    }

    pub fn tol_rep(&self) -> S {
        tol_rep(self.lip, self.grid.spacing())
    }

    /// Largest slope between adjacent jump-free nodes.
    pub fn measured_lip(&self) -> S {
        let mask = self.jump_mask();
        let h = self.grid.spacing();
        (0..self.len().saturating_sub(1))
            .filter(|&i| !mask[i] && !mask[i + 1])
            .fold(S::zero(), |m, i| m.max((self.values[i + 1] - self.values[i]).abs() / h))
    }

    /// First node pair violating `|Δv| ≤ lip·h + tol_rep`, with its excess.
    pub fn lip_defect(&self) -> Option<(usize, S)> {
        let mask = self.jump_mask();
        let allowed = self.lip * self.grid.spacing() + self.tol_rep();
        (0..self.len().saturating_sub(1))
            .filter(|&i| !mask[i] && !mask[i + 1])
            .map(|i| (i, (self.values[i + 1] - self.values[i]).abs() - allowed))
            .find(|&(_, excess)| excess > S::zero())
    }

    /// Same data with replaced values and metadata re-measured; the jump set is kept.
    pub fn with_values(&self, values: Vec<S>) -> Result<Self> {
        Self::measured(self.grid, values, self.jumps.clone())
    }

    pub fn with_jumps(&self, jumps: Vec<usize>) -> Result<Self> {
        Self::measured(self.grid, self.values.clone(), jumps)
    }

    /// Overrides the Lipschitz metadata (used when a bound is known a priori).
    pub fn with_lip(mut self, lip: S) -> Self {
        self.lip = lip;
        self
    }

    pub(crate) fn from_parts_unchecked(grid: Grid1D<S>, values: Vec<S>, jumps: Vec<usize>, lip: S, bound: S) -> Self {
        Self { grid, values, jumps, lip, bound }
    }

    /// Nearest jump-free node strictly left of `i`.
    pub(crate) fn left_free(&self, i: usize, mask: &[bool]) -> Option<usize> {
        (0..i).rev().find(|&p| !mask[p])
    }

    pub(crate) fn right_free(&self, i: usize, mask: &[bool]) -> Option<usize> {
        (i + 1..self.len()).find(|&p| !mask[p])
    }

    /// One-sided limit from the left at node `i`, read from the nearest
    /// jump-free nodes. When two jump-free nodes directly precede `i` the
    /// limit is linearly extrapolated, otherwise the nearest value is used.
    pub fn left_limit(&self, i: usize) -> S {
        let mask = self.jump_mask();
        self.left_limit_masked(i, &mask)
    }

    pub fn right_limit(&self, i: usize) -> S {
        let mask = self.jump_mask();
        self.right_limit_masked(i, &mask)
    }

    pub(crate) fn left_limit_masked(&self, i: usize, mask: &[bool]) -> S {
        let v = &self.values;
        match self.left_free(i, mask) {
            Some(p) if p + 1 == i && p >= 1 && !mask[p - 1] => v[p] + (v[p] - v[p - 1]),
            Some(p) => v[p],
            None => v[i],
        }
    }

    pub(crate) fn right_limit_masked(&self, i: usize, mask: &[bool]) -> S {
        let v = &self.values;
        let n = self.len();
        match self.right_free(i, mask) {
            Some(p) if p == i + 1 && p + 1 < n && !mask[p + 1] => v[p] + (v[p] - v[p + 1]),
            Some(p) => v[p],
            None => v[i],
        }
    }

    /// Piecewise-linear interpolation of the node values (jumps ignored).
    pub fn eval(&self, x: S) -> Result<S> {
        self.grid.check_contains(x)?;
        let (i, t) = self.grid.locate(x);
        Ok(self.values[i] + (self.values[i + 1] - self.values[i]) * t)
    }

    /// Trapezoid rule over `[a, b]`.
    pub fn integral(&self) -> S {
        trapezoid(&self.values, self.grid.spacing())
    }

    /// Node-wise map, keeping the jump set; metadata re-measured.
    pub fn map(&self, f: impl Fn(S) -> S) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn neg(&self) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| -v).collect(),
            jumps: self.jumps.clone(),
            lip: self.lip,
            bound: self.bound,
        }
    }

    pub fn cast<T: Scalar>(&self) -> SampledFn<T> {
        SampledFn {
            grid: self.grid.cast(),
            values: self.values.iter().map(|v| T::lit(v.as_f64())).collect(),
            jumps: self.jumps.clone(),
            lip: T::lit(self.lip.as_f64()),
            bound: T::lit(self.bound.as_f64()),
        }
    }
}

pub(crate) fn trapezoid<S: Scalar>(values: &[S], h: S) -> S {
    if values.len() < 2 {
        return S::zero();
    }
    let inner: S = values[1..values.len() - 1].iter().fold(S::zero(), |acc, &v| acc + v);
    h * (inner + (values[0] + values[values.len() - 1]) * S::lit(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid1D<f64> {
        Grid1D::new(-1.0, 1.0, 21).unwrap()
    }

    #[test]
    fn rejects_bad_jumps_and_bounds() {
        let g = grid();
        assert!(SampledFn::new(g, vec![0.0; 21], vec![0], 0.0, 1.0).is_err());
        assert!(SampledFn::new(g, vec![0.0; 21], vec![20], 0.0, 1.0).is_err());
        assert!(SampledFn::new(g, vec![2.0; 21], vec![], 0.0, 1.0).is_err());
        assert!(SampledFn::new(g, vec![0.0; 20], vec![], 0.0, 1.0).is_err());
        let mut v = vec![0.0; 21];
        v[3] = f64::INFINITY;
        assert!(SampledFn::new(g, v, vec![], 0.0, 1e300).is_err());
    }

    #[test]
    fn lip_defect_flags_wrong_metadata() {
        let g = grid();
        let f = SampledFn::sample(g, |x| if x > 0.0 { 1.0 } else { -1.0 }, &[]).unwrap();
        // measured lip absorbs the step
        assert!(f.lip_defect().is_none());
        let lying = f.clone().with_lip(0.0);
        assert!(lying.lip_defect().is_some());
        let declared = f.with_jumps(vec![10]).unwrap().with_lip(0.0);
        assert!(declared.lip_defect().is_none());
    }

    #[test]
    fn one_sided_limits_extrapolate_linear_pieces() {
        let g = grid();
        let f = SampledFn::sample(g, |x| if x > 0.0 { x } else { -x }, &[0.0]).unwrap();
        assert!(f.left_limit(10).abs() < 1e-15);
        assert!(f.right_limit(10).abs() < 1e-15);
        let s = SampledFn::sample(g, |x| if x >= 0.0 { 1.0 } else { -1.0 }, &[0.0]).unwrap();
        assert_eq!(s.left_limit(10), -1.0);
        assert_eq!(s.right_limit(10), 1.0);
    }

    #[test]
    fn trapezoid_is_exact_on_linear() {
        let g = Grid1D::<f64>::new(0.0, 2.0, 5).unwrap();
        let f = SampledFn::sample(g, |x| 3.0 * x + 1.0, &[]).unwrap();
        assert!((f.integral() - 8.0_f64).abs() < 1e-14);
    }
}
