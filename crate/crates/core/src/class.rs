//! Equivalence classes of a.e.-continuous functions.
//!
//! A class is stored through its two quasicontinuous representatives: the
//! lower semicontinuous `lower` and the upper semicontinuous `upper`. They
//! agree off the jump set, and at a jump node they hold the smaller and the
//! larger one-sided limit. All algebra goes through a representative and is
//! then re-canonicalized, so results never depend on the values a caller
//! stored at jump nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::sampled::SampledFn;
use crate::scalar::{max_abs, sup_diff, Scalar};
use crate::value::{ConvexValue, IntervalValue};

/// Lower semicontinuous hull: at a jump node, the minimum of the node value
/// and the values at the nearest jump-free nodes on each side.
pub fn lsc_hull<S: Scalar>(f: &SampledFn<S>) -> SampledFn<S> {
    hull_with(f, S::min)
}

/// Upper semicontinuous hull (dual of [`lsc_hull`]).
pub fn usc_hull<S: Scalar>(f: &SampledFn<S>) -> SampledFn<S> {
    hull_with(f, S::max)
}

fn hull_with<S: Scalar>(f: &SampledFn<S>, pick: fn(S, S) -> S) -> SampledFn<S> {
    let mask = f.jump_mask();
    let v = f.values();
    let mut out = v.to_vec();
    for &i in f.jumps() {
        let mut m = v[i];
        if let Some(p) = f.left_free(i, &mask) {
            m = pick(m, v[p]);
        }
        if let Some(p) = f.right_free(i, &mask) {
            m = pick(m, v[p]);
        }
        out[i] = m;
    }
    let bound = f.bound();
    SampledFn::from_parts_unchecked(*f.grid(), out, f.jumps().to_vec(), f.lip(), bound)
}

/// Discrete quasicontinuity: every jump node value is approached by the
/// one-sided limit of at least one adjacent jump-free segment.
pub fn is_quasicontinuous<S: Scalar>(f: &SampledFn<S>, tol: S) -> bool {
    let mask = f.jump_mask();
    f.jumps().iter().all(|&i| {
        let v = f.values()[i];
        (v - f.left_limit_masked(i, &mask)).abs() <= tol || (v - f.right_limit_masked(i, &mask)).abs() <= tol
    })
}

/// A class in `C_ae` (equivalently `C_cm` on this representable fragment).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ClassPair<S> {
    lower: SampledFn<S>,
    upper: SampledFn<S>,
}

/// Canonical lower/upper pair of the class of `f`.
///
/// Fails with [`Error::RepresentativeInconsistent`] when the declared
/// Lipschitz bound is violated on a jump-free segment, or when the hull
/// relations `usc(lower) = upper`, `lsc(upper) = lower` fail.
pub fn canonical_pair<S: Scalar>(f: &SampledFn<S>) -> Result<ClassPair<S>> {
    if let Some((node, defect)) = f.lip_defect() {
        return Err(Error::RepresentativeInconsistent { node, defect: defect.as_f64() });
    }
    let mask = f.jump_mask();
    let mut lo = f.values().to_vec();
    let mut hi = lo.clone();
    for &i in f.jumps() {
        let l = f.left_limit_masked(i, &mask);
        let r = f.right_limit_masked(i, &mask);
        lo[i] = l.min(r);
        hi[i] = l.max(r);
    }
    let bound = max_abs(&lo).max(max_abs(&hi));
    let grid = *f.grid();
    let lower = SampledFn::from_parts_unchecked(grid, lo, f.jumps().to_vec(), f.lip(), bound);
    let upper = SampledFn::from_parts_unchecked(grid, hi, f.jumps().to_vec(), f.lip(), bound);
    let pair = ClassPair { lower, upper };
    pair.check_hull_relation()?;
    Ok(pair)
}

impl<S: Scalar> ClassPair<S> {
    /// Pair from explicit representatives; validates every class invariant.
    pub fn from_parts(lower: SampledFn<S>, upper: SampledFn<S>) -> Result<Self> {
        lower.grid().require_same(upper.grid())?;
        if lower.jumps() != upper.jumps() {
            return Err(Error::InvalidFunction("lower and upper jump sets differ".into()));
        }
        let mask = lower.jump_mask();
        for (i, (&l, &u)) in lower.values().iter().zip(upper.values()).enumerate() {
            if l > u || (!mask[i] && l != u) {
                return Err(Error::RepresentativeInconsistent { node: i, defect: (l - u).as_f64() });
            }
        }
        let pair = ClassPair { lower, upper };
        pair.check_hull_relation()?;
        Ok(pair)
    }

    /// Class of a continuous function.
    pub fn continuous(f: SampledFn<S>) -> Result<Self> {
        if !f.is_continuous() {
            return Err(Error::InvalidFunction("continuous class requested for a function with jumps".into()));
        }
        Ok(ClassPair { lower: f.clone(), upper: f })
    }

    pub fn constant(grid: Grid1D<S>, c: S) -> Self {
        let f = SampledFn::from_parts_unchecked(grid, vec![c; grid.len()], Vec::new(), S::zero(), c.abs());
        ClassPair { lower: f.clone(), upper: f }
    }

    pub fn zero(grid: Grid1D<S>) -> Self {
        Self::constant(grid, S::zero())
    }

    fn check_hull_relation(&self) -> Result<()> {
        let tol = self.lower.tol_rep().max(self.upper.tol_rep());
        let up = usc_hull(&self.lower);
        let down = lsc_hull(&self.upper);
        for &i in self.lower.jumps() {
            let d = (up.values()[i] - self.upper.values()[i])
                .abs()
                .max((down.values()[i] - self.lower.values()[i]).abs());
            if d > tol {
                return Err(Error::RepresentativeInconsistent { node: i, defect: d.as_f64() });
            }
        }
        Ok(())
    }

    pub fn lower(&self) -> &SampledFn<S> {
        &self.lower
    }

    pub fn upper(&self) -> &SampledFn<S> {
        &self.upper
    }

    pub fn grid(&self) -> &Grid1D<S> {
        self.lower.grid()
    }

    pub fn jumps(&self) -> &[usize] {
        self.lower.jumps()
    }

    pub fn lip(&self) -> S {
        self.lower.lip().max(self.upper.lip())
    }

    pub fn bound(&self) -> S {
        self.lower.bound().max(self.upper.bound())
    }

    pub fn tol_rep(&self) -> S {
        self.lower.tol_rep().max(self.upper.tol_rep())
    }

    /// `|∫f⁺ − ∫f⁻|`, which vanishes as the grid is refined.
    pub fn integral_gap(&self) -> S {
        (self.upper.integral() - self.lower.integral()).abs()
    }

    /// Value `[f⁻(x), f⁺(x)]`: node values at nodes, interpolation inside
    /// cells, with one-sided limits substituted next to jump nodes.
    pub fn value_at(&self, x: S) -> Result<IntervalValue<S>> {
        let grid = self.grid();
        grid.check_contains(x)?;
        if let Some(i) = grid.node_index(x) {
            return Ok(IntervalValue::new(self.lower.values()[i], self.upper.values()[i]));
        }
        let (i, t) = grid.locate(x);
        let (left, right) = self.cell_ends(i);
        Ok(IntervalValue::point(left + (right - left) * t))
    }

    /// Values used at the two ends of cell `[x_i, x_{i+1}]` when interpolating.
    pub(crate) fn cell_ends(&self, i: usize) -> (S, S) {
        let mask = self.lower.jump_mask();
        let v = self.lower.values();
        let left = if mask[i] { self.lower.right_limit_masked(i, &mask) } else { v[i] };
        let right = if mask[i + 1] { self.lower.left_limit_masked(i + 1, &mask) } else { v[i + 1] };
        (left, right)
    }

    /// One-sided limits `(left, right)` at node `i`; equal off the jump set.
    pub fn limits_at(&self, i: usize) -> (S, S) {
        if self.lower.is_jump(i) {
            let mask = self.lower.jump_mask();
            (self.lower.left_limit_masked(i, &mask), self.lower.right_limit_masked(i, &mask))
        } else {
            let v = self.lower.values()[i];
            (v, v)
        }
    }

    /// Node-wise sup distance between lower and between upper representatives.
    pub fn sup_distance(&self, other: &Self) -> S {
        sup_diff(self.lower.values(), other.lower.values()).max(sup_diff(self.upper.values(), other.upper.values()))
    }

    /// Largest node-wise interval Hausdorff distance to another class.
    pub fn max_interval_distance(&self, other: &Self) -> Result<S> {
        self.grid().require_same(other.grid())?;
        Ok((0..self.lower.len()).fold(S::zero(), |m, i| {
            let a = IntervalValue::new(self.lower.values()[i], self.upper.values()[i]);
            let b = IntervalValue::new(other.lower.values()[i], other.upper.values()[i]);
            m.max(a.hausdorff(&b))
        }))
    }

    pub fn cast<T: Scalar>(&self) -> ClassPair<T> {
        ClassPair { lower: self.lower.cast(), upper: self.upper.cast() }
    }
}

impl<S: Scalar> TryFrom<&SampledFn<S>> for ClassPair<S> {
    type Error = Error;

    fn try_from(f: &SampledFn<S>) -> Result<Self> {
        canonical_pair(f)
    }
}

fn union_jumps(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut j: Vec<usize> = a.iter().chain(b).copied().collect();
    j.sort_unstable();
    j.dedup();
    j
}

/// Applies a node-wise binary operation to the lower representatives and
/// canonicalizes over the union of the jump sets.
pub fn class_zip<S: Scalar>(f: &ClassPair<S>, g: &ClassPair<S>, op: impl Fn(S, S) -> S) -> Result<ClassPair<S>> {
    f.grid().require_same(g.grid())?;
    let values: Vec<S> = f.lower.values().iter().zip(g.lower.values()).map(|(&a, &b)| op(a, b)).collect();
    let rep = SampledFn::measured(*f.grid(), values, union_jumps(f.jumps(), g.jumps()))?;
    canonical_pair(&rep)
}

/// Node-wise unary operation, canonicalized on the same jump set.
pub fn class_map<S: Scalar>(f: &ClassPair<S>, op: impl Fn(S) -> S) -> Result<ClassPair<S>> {
    canonical_pair(&f.lower.map(op)?)
}

pub fn class_add<S: Scalar>(f: &ClassPair<S>, g: &ClassPair<S>) -> Result<ClassPair<S>> {
    class_zip(f, g, |a, b| a + b)
}

pub fn class_sub<S: Scalar>(f: &ClassPair<S>, g: &ClassPair<S>) -> Result<ClassPair<S>> {
    class_zip(f, g, |a, b| a - b)
}

pub fn class_scale<S: Scalar>(lambda: S, f: &ClassPair<S>) -> Result<ClassPair<S>> {
    class_map(f, |a| lambda * a)
}

pub fn class_mul<S: Scalar>(f: &ClassPair<S>, g: &ClassPair<S>) -> Result<ClassPair<S>> {
    class_zip(f, g, |a, b| a * b)
}

pub fn class_min<S: Scalar>(f: &ClassPair<S>, g: &ClassPair<S>) -> Result<ClassPair<S>> {
    class_zip(f, g, S::min)
}

pub fn class_max<S: Scalar>(f: &ClassPair<S>, g: &ClassPair<S>) -> Result<ClassPair<S>> {
    class_zip(f, g, S::max)
}

/// Value of a scalar class at `x`.
pub fn value_at<S: Scalar>(f: &ClassPair<S>, x: S) -> Result<IntervalValue<S>> {
    f.value_at(x)
}

/// A vector-valued class: `m` scalar classes on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct VectorClass<S> {
    components: Vec<ClassPair<S>>,
}

impl<S: Scalar> VectorClass<S> {
    pub fn new(components: Vec<ClassPair<S>>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidFunction("vector class needs at least one component".into()))?;
        for c in &components[1..] {
            first.grid().require_same(c.grid())?;
        }
        Ok(Self { components })
    }

    pub fn scalar(c: ClassPair<S>) -> Self {
        Self { components: vec![c] }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[ClassPair<S>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &ClassPair<S> {
        &self.components[i]
    }

    pub fn grid(&self) -> &Grid1D<S> {
        self.components[0].grid()
    }

    pub fn jumps(&self) -> Vec<usize> {
        self.components.iter().fold(Vec::new(), |acc, c| union_jumps(&acc, c.jumps()))
    }

    pub fn require_compatible(&self, other: &Self) -> Result<()> {
        self.grid().require_same(other.grid())?;
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(())
    }

    /// `⟨F, ξ⟩` as a scalar class, built with class algebra.
    pub fn project(&self, xi: &[S]) -> Result<ClassPair<S>> {
        if xi.len() != self.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: xi.len() });
        }
        let mut acc = class_scale(xi[0], &self.components[0])?;
        for (c, &w) in self.components.iter().zip(xi).skip(1) {
            acc = class_add(&acc, &class_scale(w, c)?)?;
        }
        Ok(acc)
    }

    pub fn map_components(&self, f: impl Fn(&ClassPair<S>) -> Result<ClassPair<S>>) -> Result<Self> {
        Self::new(self.components.iter().map(f).collect::<Result<Vec<_>>>()?)
    }

    pub fn cast<T: Scalar>(&self) -> VectorClass<T> {
        VectorClass { components: self.components.iter().map(ClassPair::cast).collect() }
    }
}

/// Value of a vector class at `x`: the convex hull of the cluster values
/// seen from the jump-free nodes on either side.
pub fn value_at_vec<S: Scalar>(f: &VectorClass<S>, x: S) -> Result<ConvexValue<S>> {
    let grid = f.grid();
    grid.check_contains(x)?;
    match grid.node_index(x) {
        Some(i) => {
            let (left, right): (Vec<S>, Vec<S>) = f.components().iter().map(|c| c.limits_at(i)).unzip();
            ConvexValue::hull(&[left, right])
        }
        None => {
            let p = f.components().iter().map(|c| c.value_at(x).map(|v| v.lo())).collect::<Result<Vec<_>>>()?;
            ConvexValue::hull(&[p])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid1D<f64> {
        Grid1D::new(-1.0, 1.0, 41).unwrap()
    }

    fn sign_with(at_zero: f64) -> SampledFn<f64> {
        let g = grid();
        let mut f = SampledFn::sample(g, |x| if x > 0.0 { 1.0 } else { -1.0 }, &[0.0]).unwrap();
        let mut v = f.values().to_vec();
        v[20] = at_zero;
        f = f.with_values(v).unwrap();
        f
    }

    fn brute_liminf(v: &[f64], mask: &[bool], i: usize) -> f64 {
        // windows of radius 1..3 restricted to jump-free nodes, plus the node itself
        let mut m = v[i];
        for r in 1..=1 {
            for j in i.saturating_sub(r)..=(i + r).min(v.len() - 1) {
                if j != i && !mask[j] {
                    m = m.min(v[j]);
                }
            }
        }
        m
    }

    #[test]
    fn hulls_of_sign() {
        let f = sign_with(1.0);
        assert_eq!(lsc_hull(&f).values()[20], -1.0);
        let mask = f.jump_mask();
        assert_eq!(brute_liminf(f.values(), &mask, 20), -1.0);
        let f = sign_with(-1.0);
        assert_eq!(usc_hull(&f).values()[20], 1.0);
        let u = usc_hull(&f);
        assert_eq!(usc_hull(&lsc_hull(&u)), u);
    }

    #[test]
    fn spike_is_removed() {
        let g = grid();
        let base = SampledFn::sample(g, |x| x, &[0.3]).unwrap();
        let mut v = base.values().to_vec();
        let j = base.jumps()[0];
        v[j] += 1.0;
        let spiked = base.with_values(v).unwrap().with_lip(1.0);
        let lo = lsc_hull(&spiked);
        let want = base.values()[j - 1].min(base.values()[j + 1]);
        assert_eq!(lo.values()[j], want);
    }

    #[test]
    fn canonical_pair_of_sign_is_representative_independent() {
        let a = canonical_pair(&sign_with(0.0)).unwrap();
        let b = canonical_pair(&sign_with(17.0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.lower().values()[20], -1.0);
        assert_eq!(a.upper().values()[20], 1.0);
        assert_eq!(value_at(&a, 0.0).unwrap(), IntervalValue::new(-1.0, 1.0));
    }

    #[test]
    fn wrong_lip_metadata_is_reported() {
        let f = sign_with(0.0).with_jumps(vec![]).unwrap().with_lip(0.5);
        assert!(matches!(canonical_pair(&f), Err(Error::RepresentativeInconsistent { .. })));
    }

    #[test]
    fn sign_plus_negated_sign_is_zero_class() {
        let f1 = canonical_pair(&sign_with(0.3)).unwrap();
        let z = class_add(&f1, &class_scale(-1.0, &f1).unwrap()).unwrap();
        assert_eq!(value_at(&z, 0.0).unwrap(), IntervalValue::point(0.0));
        assert!(z.lower().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn min_of_abs_and_negabs() {
        let g = grid();
        let a = ClassPair::continuous(SampledFn::sample(g, f64::abs, &[]).unwrap()).unwrap();
        let na = class_scale(-1.0, &a).unwrap();
        assert_eq!(class_min(&a, &na).unwrap(), na);
        let ones = ClassPair::constant(g, 1.0);
        assert_eq!(class_mul(&a, &ones).unwrap(), a);
    }

    #[test]
    fn quasicontinuity() {
        let lower = canonical_pair(&sign_with(0.0)).unwrap().lower().clone();
        assert!(is_quasicontinuous(&lower, 1e-12));
        assert!(!is_quasicontinuous(&sign_with(0.0), 1e-12));
        let smooth = SampledFn::sample(grid(), f64::sin, &[]).unwrap();
        assert!(is_quasicontinuous(&smooth, 0.0));
    }

    #[test]
    fn vector_value_is_segment_at_jump() {
        let g = grid();
        let f1 = canonical_pair(&sign_with(0.0)).unwrap();
        let one = ClassPair::constant(g, 1.0);
        let v = VectorClass::new(vec![f1.clone(), one]).unwrap();
        let val = value_at_vec(&v, 0.0).unwrap();
        assert_eq!(val.vertices(), &[vec![-1.0, 1.0], vec![1.0, 1.0]]);
        let scalar = value_at_vec(&VectorClass::scalar(f1.clone()), 0.0).unwrap();
        assert_eq!(scalar.as_interval().unwrap(), value_at(&f1, 0.0).unwrap());
        assert!(value_at_vec(&v, 0.5).unwrap().is_singleton());
        assert!(value_at_vec(&v, 1.5).is_err());
    }

    #[test]
    fn value_between_nodes_uses_one_sided_limits() {
        let f1 = canonical_pair(&sign_with(0.0)).unwrap();
        let h = grid().spacing();
        assert_eq!(value_at(&f1, -0.5 * h).unwrap(), IntervalValue::point(-1.0));
        assert_eq!(value_at(&f1, 0.5 * h).unwrap(), IntervalValue::point(1.0));
    }
}
