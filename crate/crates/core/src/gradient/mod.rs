//! Set-valued gradients: classical, Clarke, and the closure of the classical
//! gradient in the metric `r`, together with the calculus rules they obey.

mod calculus;
mod closure;

use serde::{Deserialize, Serialize};

pub use calculus::{
    differentiability_at_continuity, grad_add, grad_chain, grad_chain_with, grad_minmax, grad_product, grad_scale, limit_exchange,
    stationarity_check, Extremum, Which,
};
pub use closure::{closure_gradient, mollify, ClosureDiagnostic, SmoothingKind, SmoothingSchedule};

use crate::class::{canonical_pair, ClassPair, VectorClass};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::sampled::SampledFn;
use crate::scalar::Scalar;
use crate::tolerance::{noise_floor, tol_grad};
use crate::value::ConvexValue;

/// A continuous sample with an optional declared derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SmoothFn<S> {
    f: SampledFn<S>,
    deriv: Option<Vec<S>>,
}

impl<S: Scalar> SmoothFn<S> {
    /// `third_bound`, when given, is a bound on `|f'''|` used to check the
    /// declared derivative against central differences (`10·h²·M`).
    pub fn new(f: SampledFn<S>, deriv: Option<Vec<S>>, third_bound: Option<S>) -> Result<Self> {
        if !f.is_continuous() {
            return Err(Error::HasJumps);
        }
        if let Some(d) = &deriv {
            if d.len() != f.len() {
                return Err(Error::InvalidFunction(format!("{} derivative samples for {} nodes", d.len(), f.len())));
            }
            if let Some(m) = third_bound {
                let h = f.grid().spacing();
                let tol = S::lit(10.0) * h * h * m + noise_floor::<S>();
                let central = quotient_gradient(&f);
                if let Some(i) = (1..f.len() - 1).find(|&i| (central[i] - d[i]).abs() > tol) {
                    return Err(Error::InvalidFunction(format!(
                        "declared derivative disagrees with central differences at node {i}"
                    )));
                }
            }
        }
        Ok(Self { f, deriv })
    }

    /// Samples `f` and its derivative `df`.
    pub fn from_fns(grid: Grid1D<S>, f: impl Fn(S) -> S, df: impl Fn(S) -> S) -> Result<Self> {
        let deriv = grid.nodes().into_iter().map(df).collect();
        Self::new(SampledFn::sample(grid, f, &[])?, Some(deriv), None)
    }

    pub fn sampled(f: SampledFn<S>) -> Result<Self> {
        Self::new(f, None, None)
    }

    pub fn function(&self) -> &SampledFn<S> {
        &self.f
    }

    pub fn derivative(&self) -> Option<&[S]> {
        self.deriv.as_deref()
    }
}

/// A gradient field: a vector class over the domain grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar", transparent)]
pub struct GradientField<S> {
    field: VectorClass<S>,
}

impl<S: Scalar> GradientField<S> {
    pub fn new(field: VectorClass<S>) -> Self {
        Self { field }
    }

    pub fn scalar(c: ClassPair<S>) -> Self {
        Self { field: VectorClass::scalar(c) }
    }

    pub fn field(&self) -> &VectorClass<S> {
        &self.field
    }

    /// First component; the whole field for functions of one variable.
    pub fn class(&self) -> &ClassPair<S> {
        self.field.component(0)
    }

    pub fn grid(&self) -> &Grid1D<S> {
        self.field.grid()
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn value_at(&self, x: S) -> Result<ConvexValue<S>> {
        crate::class::value_at_vec(&self.field, x)
    }

    /// Largest Lipschitz metadata over components.
    pub fn lip(&self) -> S {
        self.field.components().iter().fold(S::zero(), |m, c| m.max(c.lip()))
    }

    pub(crate) fn zip(&self, other: &Self, op: impl Fn(&ClassPair<S>, &ClassPair<S>) -> Result<ClassPair<S>>) -> Result<Self> {
        self.field.require_compatible(&other.field)?;
        let comps = self
            .field
            .components()
            .iter()
            .zip(other.field.components())
            .map(|(a, b)| op(a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { field: VectorClass::new(comps)? })
    }

    pub(crate) fn map(&self, op: impl Fn(&ClassPair<S>) -> Result<ClassPair<S>>) -> Result<Self> {
        Ok(Self { field: self.field.map_components(op)? })
    }
}

/// Gradient tolerance for a function and its gradient field:
/// `tol_grad(max(lip f, lip ∂f), h)`.
pub fn gradient_tolerance<S: Scalar>(f_lip: S, field: &GradientField<S>) -> S {
    tol_grad(f_lip.max(field.lip()), field.grid().spacing())
}

/// Difference quotients `(v_{i+1} − v_i)/(x_{i+1} − x_i)`. Dividing by the
/// node difference rather than `h` keeps piecewise-linear data exact.
pub(crate) fn quotients<S: Scalar>(f: &SampledFn<S>) -> Vec<S> {
    let xs = f.grid().nodes();
    let v = f.values();
    (0..v.len() - 1).map(|i| (v[i + 1] - v[i]) / (xs[i + 1] - xs[i])).collect()
}

/// Central differences inside, second-order one-sided at the ends.
fn quotient_gradient<S: Scalar>(f: &SampledFn<S>) -> Vec<S> {
    let q = quotients(f);
    let n = f.len();
    let half = S::lit(0.5);
    let mut d = vec![S::zero(); n];
    for i in 1..n - 1 {
        d[i] = (q[i - 1] + q[i]) * half;
    }
    if n == 2 {
        d[0] = q[0];
        d[1] = q[0];
    } else {
        d[0] = S::lit(1.5) * q[0] - half * q[1];
        d[n - 1] = S::lit(1.5) * q[n - 2] - half * q[n - 3];
    }
    d
}

/// Classical gradient of a smooth sample (declared derivative if present).
pub fn classical_gradient<S: Scalar>(f: &SmoothFn<S>) -> Result<GradientField<S>> {
    let d = match &f.deriv {
        Some(d) => d.clone(),
        None => quotient_gradient(&f.f),
    };
    Ok(GradientField::scalar(ClassPair::continuous(SampledFn::continuous(*f.f.grid(), d)?)?))
}

/// A maximal run `first..=last` of adjacent kink nodes, collapsed to `center`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KinkRun {
    pub first: usize,
    pub last: usize,
    pub center: usize,
}

/// Kink threshold: one-sided quotients must differ by more than
/// `min(5·tol_grad(lip f), lip f)`. Quotients change by at most `2·lip`, so
/// on coarse grids the cap keeps corners detectable.
pub fn kink_threshold<S: Scalar>(f: &SampledFn<S>) -> S {
    (S::lit(5.0) * tol_grad(f.lip(), f.grid().spacing())).min(f.lip())
}

/// Interior nodes whose one-sided quotients differ by more than `threshold`,
/// grouped into runs; each run is represented by its node of largest change.
pub fn detect_kinks<S: Scalar>(f: &SampledFn<S>, threshold: S) -> Vec<KinkRun> {
    let q = quotients(f);
    let change: Vec<S> = (0..f.len()).map(|i| if i == 0 || i + 1 == f.len() { S::zero() } else { (q[i] - q[i - 1]).abs() }).collect();
    let mut runs = Vec::new();
    let mut i = 1;
    while i + 1 < f.len() {
        if change[i] > threshold {
            let first = i;
            while i + 2 < f.len() && change[i + 1] > threshold {
                i += 1;
            }
            let center = (first..=i).fold(first, |c, j| if change[j] > change[c] { j } else { c });
            runs.push(KinkRun { first, last: i, center });
        }
        i += 1;
    }
    runs
}

/// Clarke gradient: central differences inside smooth pieces and, at each
/// kink, the hull of the two one-sided limits of the gradient.
///
/// A run of adjacent kink nodes is collapsed: nodes left of the center take
/// the quotient entering the run, nodes right of it the quotient leaving it.
pub fn clarke_gradient<S: Scalar>(f: &SampledFn<S>) -> Result<GradientField<S>> {
    let runs = detect_kinks(f, kink_threshold(f));
    clarke_with_runs(f, &runs)
}

fn clarke_with_runs<S: Scalar>(f: &SampledFn<S>, runs: &[KinkRun]) -> Result<GradientField<S>> {
    let q = quotients(f);
    let n = f.len();
    let mut d = quotient_gradient(f);
    let mut kink = vec![false; n];
    for r in runs {
        kink[r.first..=r.last].iter_mut().for_each(|k| *k = true);
    }
    // endpoint formulas reach one node inward; fall back to one-sided quotients next to a kink
    if n > 2 && kink[1] {
        d[0] = q[0];
    }
    if n > 2 && kink[n - 2] {
        d[n - 1] = q[n - 2];
    }
    for r in runs {
        let (into, out) = (q[r.first - 1], q[r.last]);
        d[r.first..r.center].iter_mut().for_each(|v| *v = into);
        d[r.center + 1..=r.last].iter_mut().for_each(|v| *v = out);
        d[r.center] = (into + out) * S::lit(0.5);
    }
    let rep = SampledFn::measured(*f.grid(), d, runs.iter().map(|r| r.center).collect())?;
    Ok(GradientField::scalar(canonical_pair(&rep)?))
}

/// Node-wise interval Hausdorff distance between two scalar gradient fields.
pub fn field_node_distance<S: Scalar>(a: &GradientField<S>, b: &GradientField<S>) -> Result<S> {
    a.class().max_interval_distance(b.class())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::class::value_at;
    use crate::value::IntervalValue;

    fn grid() -> Grid1D<f64> {
        Grid1D::new(-1.0, 1.0, 201).unwrap()
    }

    #[test]
    fn quadratic_is_exact() {
        let f = SmoothFn::sampled(SampledFn::sample(grid(), |x| x * x, &[]).unwrap()).unwrap();
        let g = classical_gradient(&f).unwrap();
        for (x, v) in grid().nodes().iter().zip(g.class().lower().values()) {
            assert!((v - 2.0 * x).abs() < 1e-12);
        }
    }

    #[test]
    fn sine_within_h_squared() {
        let g0 = grid();
        let f = SmoothFn::sampled(SampledFn::sample(g0, f64::sin, &[]).unwrap()).unwrap();
        let g = classical_gradient(&f).unwrap();
        let h = g0.spacing();
        for (i, (x, v)) in g0.nodes().iter().zip(g.class().lower().values()).enumerate() {
            // endpoints use a one-sided stencil with a larger constant
            let c = if i == 0 || i == 200 { 0.5 } else { 1.0 / 6.0 };
            assert!((v - x.cos()).abs() <= c * h * h + 1e-12, "node {i}");
        }
    }

    #[test]
    fn declared_derivative_is_checked() {
        let f = SampledFn::sample(grid(), f64::sin, &[]).unwrap();
        let good: Vec<f64> = grid().nodes().iter().map(|x| x.cos()).collect();
        assert!(SmoothFn::new(f.clone(), Some(good), Some(1.0)).is_ok());
        let bad: Vec<f64> = grid().nodes().iter().map(|x| x.cos() + 0.01).collect();
        assert!(SmoothFn::new(f, Some(bad), Some(1.0)).is_err());
    }

    #[test]
    fn clarke_of_abs_is_sign_class() {
        let g = grid();
        let f = SampledFn::sample(g, f64::abs, &[]).unwrap();
        let c = clarke_gradient(&f).unwrap();
        let sign = canonical_pair(&SampledFn::sample(g, |x| if x < 0.0 { -1.0 } else { 1.0 }, &[0.0]).unwrap()).unwrap();
        assert_eq!(c.class(), &sign);
        assert_eq!(value_at(c.class(), 0.0).unwrap(), IntervalValue::new(-1.0, 1.0));
        let neg = clarke_gradient(&f.neg()).unwrap();
        assert_eq!(value_at(neg.class(), 0.0).unwrap(), IntervalValue::new(-1.0, 1.0));
        assert_eq!(neg.class().lower().values()[0], 1.0);
    }

    #[test]
    fn smooth_clarke_equals_classical() {
        let f = SampledFn::sample(grid(), |x| x.sin() + 0.3 * x * x, &[]).unwrap();
        let c = clarke_gradient(&f).unwrap();
        let k = classical_gradient(&SmoothFn::sampled(f).unwrap()).unwrap();
        assert!(c.class().jumps().is_empty());
        assert_eq!(c.class().lower().values(), k.class().lower().values());
    }

    #[test]
    fn kink_runs_collapse() {
        let g = grid();
        // kink at a cell midpoint: both neighbours see a mixed quotient
        let f = SampledFn::sample(g, |x: f64| (x - 0.005).abs(), &[]).unwrap();
        let runs = detect_kinks(&f, kink_threshold(&f));
        assert_eq!(runs.len(), 1);
        assert_eq!(runs[0].last - runs[0].first, 1);
        let c = clarke_gradient(&f).unwrap();
        let v = c.value_at(g.node(runs[0].center)).unwrap().as_interval().unwrap();
        assert!((v.lo() + 1.0).abs() < 1e-9 && (v.hi() - 1.0).abs() < 1e-9);
    }
}
