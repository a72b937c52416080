//! Calculus rules for the closure gradient: linearity, Leibniz, lattice
//! operations, chain rule, stationarity, limit exchange.

use serde::{Deserialize, Serialize};

use super::{classical_gradient, clarke_gradient, field_node_distance, gradient_tolerance, GradientField, SmoothFn};
use crate::class::{canonical_pair, class_add, class_mul, class_scale, value_at, ClassPair};
use crate::envelope::default_ks;
use crate::error::{Error, Result};
use crate::metric::{polyline_hausdorff, r_metric, tail_converges, Polyline};
use crate::sampled::SampledFn;
use crate::scalar::Scalar;
use crate::tolerance::{noise_floor, tol_grad};

/// Class-level sum (representative-wise, then canonicalized); not the
/// Minkowski sum of values.
pub fn grad_add<S: Scalar>(a: &GradientField<S>, b: &GradientField<S>) -> Result<GradientField<S>> {
    a.zip(b, class_add)
}

pub fn grad_scale<S: Scalar>(lambda: S, a: &GradientField<S>) -> Result<GradientField<S>> {
    a.map(|c| class_scale(lambda, c))
}

/// Leibniz rule `f·𝝏g + g·𝝏f`.
pub fn grad_product<S: Scalar>(
    f: &ClassPair<S>,
    g: &ClassPair<S>,
    df: &GradientField<S>,
    dg: &GradientField<S>,
) -> Result<GradientField<S>> {
    let left = dg.map(|c| class_mul(f, c))?;
    let right = df.map(|c| class_mul(g, c))?;
    grad_add(&left, &right)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Min,
    Max,
}

/// Gradient of `min(f, g)` or `max(f, g)`: `𝝏f` where `f` is selected, `𝝏g`
/// elsewhere (ties select `f`). A jump is placed wherever the selection
/// switches, at whichever of the two nodes has the smaller `|f − g|`.
pub fn grad_minmax<S: Scalar>(
    f: &ClassPair<S>,
    g: &ClassPair<S>,
    df: &GradientField<S>,
    dg: &GradientField<S>,
    which: Which,
) -> Result<GradientField<S>> {
    f.grid().require_same(g.grid())?;
    df.field().require_compatible(dg.field())?;
    f.grid().require_same(df.grid())?;
    let (fv, gv) = (f.lower().values(), g.lower().values());
    let pick_f: Vec<bool> = fv
        .iter()
        .zip(gv)
        .map(|(a, b)| match which {
            Which::Min => a <= b,
            Which::Max => a >= b,
        })
        .collect();
    let mut switches = Vec::new();
    for i in 0..pick_f.len() - 1 {
        if pick_f[i] != pick_f[i + 1] {
            let d = |j: usize| (fv[j] - gv[j]).abs();
            let node = if d(i) <= d(i + 1) { i } else { i + 1 };
            switches.push(node.clamp(1, pick_f.len() - 2));
        }
    }
    let comps = df
        .field()
        .components()
        .iter()
        .zip(dg.field().components())
        .map(|(a, b)| {
            let values = pick_f
                .iter()
                .enumerate()
                .map(|(i, &p)| if p { a.lower().values()[i] } else { b.lower().values()[i] })
                .collect();
            let mut jumps: Vec<usize> = a.jumps().iter().chain(b.jumps()).chain(&switches).copied().collect();
            jumps.sort_unstable();
            jumps.dedup();
            canonical_pair(&SampledFn::measured(*a.grid(), values, jumps)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GradientField::new(crate::class::VectorClass::new(comps)?))
}

/// Chain rule `φ'(f)·𝝏f` for `φ` sampled on an interval containing the range of `f`.
pub fn grad_chain<S: Scalar>(phi: &SmoothFn<S>, f: &ClassPair<S>, df: &GradientField<S>) -> Result<GradientField<S>> {
    let pg = phi.function().grid();
    let lo = f.lower().values().iter().fold(S::infinity(), |m, &v| m.min(v));
    let hi = f.upper().values().iter().fold(S::neg_infinity(), |m, &v| m.max(v));
    if lo < pg.a() || hi > pg.b() {
        return Err(Error::RangeMismatch { lo: lo.as_f64(), hi: hi.as_f64(), a: pg.a().as_f64(), b: pg.b().as_f64() });
    }
    let dphi = classical_gradient(phi)?;
    let dphi = dphi.class().lower();
    grad_chain_with(|t| dphi.eval(t), f, df)
}

/// Chain rule with `φ'` given pointwise, so no interpolation error enters
/// the outer factor.
pub fn grad_chain_with<S: Scalar>(dphi: impl Fn(S) -> Result<S>, f: &ClassPair<S>, df: &GradientField<S>) -> Result<GradientField<S>> {
    let outer = f.lower().values().iter().map(|&t| dphi(t)).collect::<Result<Vec<_>>>()?;
    let outer = canonical_pair(&SampledFn::measured(*f.grid(), outer, f.jumps().to_vec())?)?;
    df.map(|c| class_mul(&outer, c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extremum {
    Min,
    Max,
}

/// Checks `0 ∈ 𝝏f(x0)` at a local extremum `x0` (verified over three nodes on
/// each side). Returns the kind of extremum found alongside the verdict.
pub fn stationarity_check<S: Scalar>(f: &ClassPair<S>, df: &GradientField<S>, x0: S) -> Result<(Extremum, bool)> {
    let grid = f.grid();
    grid.check_contains(x0)?;
    let i0 = grid.nearest(x0);
    let v = f.lower().values();
    let tol = noise_floor::<S>();
    let hood: Vec<usize> = (i0.saturating_sub(3)..=(i0 + 3).min(v.len() - 1)).filter(|&j| j != i0).collect();
    let kind = if hood.iter().all(|&j| v[i0] <= v[j] + tol) {
        Extremum::Min
    } else if hood.iter().all(|&j| v[i0] >= v[j] - tol) {
        Extremum::Max
    } else {
        return Err(Error::NotAnExtremum { x: x0.as_f64() });
    };
    let tol = gradient_tolerance(f.lip(), df);
    let val = df.value_at(grid.node(i0))?;
    let zero = vec![S::zero(); df.dim()];
    Ok((kind, val.contains(&zero, tol)))
}

/// At a continuity point of `𝝏f`, symmetric difference quotients of `f` over
/// stencils `4h, 2h, h` must all match the singleton value within `tol_grad`.
/// One-sided quotients are used where the stencil leaves the domain.
pub fn differentiability_at_continuity<S: Scalar>(f: &ClassPair<S>, df: &GradientField<S>, x: S) -> Result<bool> {
    let grid = f.grid();
    let val = df.class().value_at(x)?;
    if val.width() > noise_floor::<S>() {
        return Err(Error::NotAContinuityPoint { x: x.as_f64() });
    }
    let target = val.lo();
    let tol = gradient_tolerance(f.lip(), df);
    let eval = |t: S| f.value_at(t).map(|v| v.lo());
    for mult in [4.0, 2.0, 1.0] {
        let s = grid.spacing() * S::lit(mult);
        let (l, r) = ((x - s).max(grid.a()), (x + s).min(grid.b()));
        let q = (eval(r)? - eval(l)?) / (r - l);
        if (q - target).abs() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Limit of `(f_n, 𝝏f_n)`: requires `f_n(x0)` to settle and the gradient
/// graphs to be Cauchy in the graph-Hausdorff distance. The gradient limit is
/// read off the last two fields (nodes still moving collapse onto a jump),
/// and `f` is rebuilt as `lim f_n(x0) + ∫_{x0} 𝝏f`. The returned pair is
/// checked against the Clarke gradient of the rebuilt `f`.
pub fn limit_exchange<S: Scalar>(seq: &[(ClassPair<S>, GradientField<S>)], x0: S) -> Result<(ClassPair<S>, GradientField<S>)> {
    if seq.len() < 2 {
        return Err(Error::HypothesisViolated("need at least two terms".into()));
    }
    let grid = *seq[0].0.grid();
    for (f, df) in seq {
        f.grid().require_same(&grid)?;
        df.grid().require_same(&grid)?;
        if df.dim() != 1 {
            return Err(Error::DimensionMismatch { left: 1, right: df.dim() });
        }
    }
    let h = grid.spacing();
    let lip = seq.iter().fold(S::one(), |m, (f, _)| m.max(f.lip()));
    let tol = tol_grad(lip, h);

    let at_x0 = seq.iter().map(|(f, _)| value_at(f, x0).map(|v| v.lo())).collect::<Result<Vec<_>>>()?;
    let steps: Vec<S> = at_x0.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    if !(steps.len() < 2 || tail_converges(&steps, tol)) || steps.last().is_some_and(|&s| s > tol) {
        return Err(Error::HypothesisViolated(format!("f_n(x0) does not settle: {at_x0:?}")));
    }
    let graphs: Vec<Polyline<S>> = seq.iter().map(|(_, d)| Polyline::class_graph(d.class())).collect();
    let moves: Vec<S> = graphs.windows(2).map(|w| polyline_hausdorff(&w[0], &w[1])).collect();
    if !(moves.len() < 2 || tail_converges(&moves, tol)) {
        return Err(Error::HypothesisViolated(format!("gradient graphs are not Cauchy: {moves:?}")));
    }

    let last = seq[seq.len() - 1].1.class();
    let prev = seq[seq.len() - 2].1.class();
    let field = settle(last, prev, tol)?;
    let f0 = aitken(&at_x0);
    let f = integrate(&field, x0, f0)?;

    let clarke = clarke_gradient(f.lower())?;
    let gap = field_node_distance(&GradientField::scalar(field.clone()), &clarke)?;
    let tol_pair = gradient_tolerance(f.lip(), &clarke);
    if gap > tol_pair {
        return Err(Error::HypothesisViolated(format!("recovered gradient is {gap} from Clarke (tol {tol_pair})")));
    }
    let ks = default_ks::<S>();
    let approach = seq.iter().map(|(fi, _)| r_metric(fi, &f, &ks).map(|r| r.value)).collect::<Result<Vec<_>>>()?;
    if !tail_converges(&approach, tol) {
        return Err(Error::HypothesisViolated(format!("f_n do not approach the rebuilt f in r: {approach:?}")));
    }
    Ok((f, GradientField::scalar(field)))
}

/// Nodes where `last` still moves by more than `tol` against `prev` form
/// clusters; each collapses to a jump at the node closest to the midpoint of
/// the settled values around it, other cluster nodes are extrapolated from
/// their side.
fn settle<S: Scalar>(last: &ClassPair<S>, prev: &ClassPair<S>, tol: S) -> Result<ClassPair<S>> {
    let v = last.lower().values();
    let p = prev.lower().values();
    let n = v.len();
    let moving: Vec<bool> = (0..n).map(|i| (v[i] - p[i]).abs() > tol).collect();
    if !moving.contains(&true) {
        return Ok(last.clone());
    }
    let mut out = v.to_vec();
    let mut jumps = last.jumps().to_vec();
    let mut i = 0;
    while i < n {
        if !moving[i] {
            i += 1;
            continue;
        }
        let first = i;
        // up to three settled nodes inside a cluster (a symmetric centre) do not split it
        while let Some(next) = (i + 1..(i + 5).min(n)).find(|&q| moving[q]) {
            i = next;
        }
        let lastm = i;
        let left = first.checked_sub(1);
        let right = Some(lastm + 1).filter(|&r| r < n);
        let side = |o: usize, toward_left: bool| -> (S, S) {
            let nb = if toward_left { o.checked_sub(1) } else { Some(o + 1).filter(|&q| q < n) };
            let slope = nb.filter(|&q| !moving[q]).map_or(S::zero(), |q| v[o] - v[q]);
            (v[o], slope)
        };
        let (lv, rv) = (left.map(|o| v[o]), right.map(|o| v[o]));
        let center = match (lv, rv) {
            (Some(a), Some(b)) => {
                let mid = (a + b) * S::lit(0.5);
                let u = last.upper().values();
                let miss = |j: usize| (v[j] - mid).max(mid - u[j]).max(S::zero());
                (first..=lastm).fold(first, |c, j| if miss(j) < miss(c) { j } else { c })
            }
            _ => (first + lastm) / 2,
        };
        for (z, slot) in out.iter_mut().enumerate().take(lastm + 1).skip(first) {
            let anchor = if z < center { left.map(|o| (o, side(o, true))) } else if z > center { right.map(|o| (o, side(o, false))) } else { None };
            if let Some((o, (val, slope))) = anchor {
                *slot = val + slope * S::from_usize_exact(o.abs_diff(z));
            }
        }
        jumps.retain(|&j| j < first || j > lastm);
        if center > 0 && center + 1 < n {
            jumps.push(center);
        }
        i += 1;
    }
    jumps.sort_unstable();
    jumps.dedup();
    canonical_pair(&SampledFn::measured(*last.grid(), out, jumps)?)
}

/// Aitken Δ² extrapolation of the last three terms when they contract
/// geometrically; otherwise the last term.
fn aitken<S: Scalar>(xs: &[S]) -> S {
    let n = xs.len();
    let last = xs[n - 1];
    if n < 3 {
        return last;
    }
    let (a, b, c) = (xs[n - 3], xs[n - 2], last);
    let (d1, d2) = (b - a, c - b);
    let denom = d2 - d1;
    if denom == S::zero() || d1 == S::zero() || !((d2 / d1).abs() < S::one()) {
        return last;
    }
    c - d2 * d2 / denom
}

/// `f(x) = f0 + ∫_{x0}^{x} F`, integrating the interpolant of `F` cell by cell
/// with one-sided limits at jump nodes.
fn integrate<S: Scalar>(field: &ClassPair<S>, x0: S, f0: S) -> Result<ClassPair<S>> {
    let grid = *field.grid();
    let n = grid.len();
    let h = grid.spacing();
    let half = S::lit(0.5);
    let mut acc = vec![S::zero(); n];
    for i in 0..n - 1 {
        let (l, r) = field.cell_ends(i);
        acc[i + 1] = acc[i] + (l + r) * half * h;
    }
    let (i, t) = grid.locate(x0);
    let (l, r) = field.cell_ends(i);
    // exact integral of the linear interpolant from x_i to x0
    let base = acc[i] + h * t * (l + (r - l) * t * half);
    let values = acc.iter().map(|&a| f0 + a - base).collect();
    ClassPair::continuous(SampledFn::continuous(grid, values)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::class::class_min;
    use crate::grid::Grid1D;
    use crate::value::IntervalValue;

    fn grid() -> Grid1D<f64> {
        Grid1D::new(-1.0, 1.0, 401).unwrap()
    }

    fn class(f: impl Fn(f64) -> f64) -> ClassPair<f64> {
        ClassPair::continuous(SampledFn::sample(grid(), f, &[]).unwrap()).unwrap()
    }

    fn clarke(f: &ClassPair<f64>) -> GradientField<f64> {
        clarke_gradient(f.lower()).unwrap()
    }

    #[test]
    fn sum_of_opposite_kinks_is_zero() {
        let a = class(f64::abs);
        let da = clarke(&a);
        let z = grad_add(&da, &grad_scale(-1.0, &da).unwrap()).unwrap();
        assert_eq!(value_at(z.class(), 0.0).unwrap(), IntervalValue::point(0.0));
        let mink = value_at(da.class(), 0.0).unwrap().minkowski_add(&value_at(da.class(), 0.0).unwrap());
        assert_eq!(mink, IntervalValue::new(-2.0, 2.0));
    }

    #[test]
    fn leibniz_for_abs_squared() {
        let a = class(f64::abs);
        let da = clarke(&a);
        let p = grad_product(&a, &a, &da, &da).unwrap();
        let tol = gradient_tolerance(2.0, &p);
        for (x, v) in grid().nodes().iter().zip(p.class().lower().values()) {
            assert!((v - 2.0 * x).abs() <= tol);
        }
        let at0 = value_at(p.class(), 0.0).unwrap();
        assert!(at0.lo().abs() < 1e-12 && at0.hi().abs() < 1e-12);
    }

    #[test]
    fn min_of_lines_is_negative_sign() {
        let (f, g) = (class(|x| x), class(|x| -x));
        let m = grad_minmax(&f, &g, &clarke(&f), &clarke(&g), Which::Min).unwrap();
        let want = clarke(&class_min(&f, &g).unwrap());
        assert_eq!(field_node_distance(&m, &want).unwrap(), 0.0);
        assert_eq!(value_at(m.class(), 0.0).unwrap(), IntervalValue::new(-1.0, 1.0));
    }

    #[test]
    fn chain_rule_for_log() {
        let f = class(|x| x.abs() + 1.0);
        let phi = SmoothFn::from_fns(Grid1D::new(1.0, 2.0, 2001).unwrap(), f64::ln, |t| 1.0 / t).unwrap();
        let d = grad_chain(&phi, &f, &clarke(&f)).unwrap();
        let tol = gradient_tolerance(1.0, &d);
        for (x, v) in grid().nodes().iter().zip(d.class().lower().values()) {
            if *x != 0.0 {
                assert!((v - x.signum() / (x.abs() + 1.0)).abs() <= tol);
            }
        }
        let at0 = value_at(d.class(), 0.0).unwrap();
        assert!((at0.lo() + 1.0).abs() < tol && (at0.hi() - 1.0).abs() < tol);
        let bad = SmoothFn::from_fns(Grid1D::new(1.5, 2.0, 11).unwrap(), f64::ln, |t| 1.0 / t).unwrap();
        assert!(matches!(grad_chain(&bad, &f, &clarke(&f)), Err(Error::RangeMismatch { .. })));
    }

    #[test]
    fn stationarity() {
        let a = class(f64::abs);
        assert_eq!(stationarity_check(&a, &clarke(&a), 0.0).unwrap(), (Extremum::Min, true));
        let na = class(|x| -x.abs());
        assert_eq!(stationarity_check(&na, &clarke(&na), 0.0).unwrap(), (Extremum::Max, true));
        assert!(matches!(stationarity_check(&a, &clarke(&a), 0.5), Err(Error::NotAnExtremum { .. })));
    }

    #[test]
    fn differentiability() {
        let a = class(f64::abs);
        assert!(differentiability_at_continuity(&a, &clarke(&a), 0.5).unwrap());
        assert!(matches!(differentiability_at_continuity(&a, &clarke(&a), 0.0), Err(Error::NotAContinuityPoint { .. })));
        let xa = class(|x| x * x.abs());
        assert!(differentiability_at_continuity(&xa, &clarke(&xa), 0.0).unwrap());
    }

    #[test]
    fn aitken_on_geometric() {
        let xs: [f64; 3] = [1.0 + 1.0 / 4.0, 1.0 + 1.0 / 8.0, 1.0 + 1.0 / 16.0];
        assert!((aitken(&xs) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shifted_abs_sequence() {
        let seq: Vec<_> = [4.0, 8.0, 16.0, 32.0, 64.0]
            .iter()
            .map(|n| {
                let f = class(|x| x.abs() + 1.0 / n);
                let d = clarke(&f);
                (f, d)
            })
            .collect();
        let (f, d) = limit_exchange(&seq, 1.0).unwrap();
        assert!(f.lower().values().iter().zip(grid().nodes()).all(|(v, x)| (v - x.abs()).abs() < 1e-9));
        assert_eq!(value_at(d.class(), 0.0).unwrap(), IntervalValue::new(-1.0, 1.0));
    }
}
