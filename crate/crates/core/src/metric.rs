//! Graph-Hausdorff distance, the integral-augmented distance and the class
//! metrics `s` and `r`, plus checkers for graph limits.
//!
//! `s(f, g) = sup_k max(h(f_k⁻, g_k⁻), h(f_k⁺, g_k⁺))` and `r` is the same with
//! `δ = h + ∫|·|` in place of `h`. The supremum runs over a finite schedule;
//! every report carries a certified bound on what the untested `k` could add.

use serde::{Deserialize, Serialize};

use crate::class::{ClassPair, VectorClass};
use crate::envelope::{check_schedule, lip_lower_envelope, lip_upper_envelope};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::sampled::{trapezoid, SampledFn};
use crate::scalar::Scalar;
use crate::tolerance::tol_rep;

/// A planar polyline whose vertices have nondecreasing `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline<S> {
    pts: Vec<(S, S)>,
}

impl<S: Scalar> Polyline<S> {
    pub fn new(pts: Vec<(S, S)>) -> Result<Self> {
        if pts.is_empty() {
            return Err(Error::InvalidFunction("empty polyline".into()));
        }
        if pts.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::InvalidFunction("polyline x must be nondecreasing".into()));
        }
        Ok(Self { pts })
    }

    /// Graph of the piecewise-linear interpolant of the node values.
    pub fn graph(f: &SampledFn<S>) -> Self {
        Self { pts: f.grid().nodes().into_iter().zip(f.values().iter().copied()).collect() }
    }

    /// Closed graph of a class: the continuous pieces joined by the vertical
    /// segment between the one-sided limits at each jump.
    pub fn class_graph(f: &ClassPair<S>) -> Self {
        let grid = f.grid();
        let mut pts = Vec::with_capacity(grid.len() + f.jumps().len());
        for i in 0..grid.len() {
            let x = grid.node(i);
            let (l, r) = f.limits_at(i);
            pts.push((x, l));
            if l != r {
                pts.push((x, r));
            }
        }
        Self { pts }
    }

    pub fn points(&self) -> &[(S, S)] {
        &self.pts
    }

    fn x_span(&self) -> S {
        self.pts[self.pts.len() - 1].0 - self.pts[0].0
    }

    /// Euclidean distance from `p` to the polyline. Segments are scanned
    /// outward from `p.x` and the scan stops once the horizontal offset alone
    /// exceeds the best distance found.
    pub fn distance_to(&self, p: (S, S)) -> S {
        let pts = &self.pts;
        if pts.len() == 1 {
            return dist(p, pts[0]);
        }
        let j = pts.partition_point(|q| q.0 < p.0);
        let c = j.clamp(1, pts.len() - 1) - 1;
        // squared distances throughout; one root at the end
        let mut best = S::infinity();
        for s in (0..=c).rev() {
            let dx = p.0 - pts[s + 1].0;
            if dx > S::zero() && dx * dx > best {
                break;
            }
            best = best.min(segment_distance2(p, pts[s], pts[s + 1]));
        }
        for s in c + 1..pts.len() - 1 {
            let dx = pts[s].0 - p.0;
            if dx > S::zero() && dx * dx > best {
                break;
            }
            best = best.min(segment_distance2(p, pts[s], pts[s + 1]));
        }
        best.sqrt()
    }

    /// `sup_{p ∈ self} dist(p, other)`, to within `res / 2`.
    ///
    /// Two upper bounds on a piece decide whether it can hold a new maximum:
    /// the distance is 1-Lipschitz along the path, so a piece of length `L`
    /// with end distances `d0, d1` stays below `(d0 + d1 + L) / 2`; and where
    /// `other` is linear over the piece's `x`-range, the vertical gap at the
    /// piece ends bounds every point. Pieces that cannot beat the running
    /// maximum are dropped; the rest are bisected down to length `res`.
    pub fn directed_distance(&self, other: &Self, res: S) -> S {
        let half = S::lit(0.5);
        let ds: Vec<S> = self.pts.iter().map(|&p| other.distance_to(p)).collect();
        let mut best = ds.iter().fold(S::zero(), |m, &d| m.max(d));
        let mut stack = Vec::new();
        for (w, d) in self.pts.windows(2).zip(ds.windows(2)) {
            stack.push((w[0], w[1], d[0], d[1]));
            while let Some((a, b, da, db)) = stack.pop() {
                let len = dist(a, b);
                if (da + db + len) * half <= best || len <= res {
                    continue;
                }
                if other.vertical_gap(a, b).is_some_and(|g| g <= best) {
                    continue;
                }
                let mid = ((a.0 + b.0) * half, (a.1 + b.1) * half);
                let dm = other.distance_to(mid);
                best = best.max(dm);
                stack.push((a, mid, da, dm));
                stack.push((mid, b, dm, db));
            }
        }
        best
    }

    /// Largest vertical offset of the segment `a b` from `self`, if `self` is
    /// a single non-vertical segment over `[a.x, b.x]`.
    fn vertical_gap(&self, a: (S, S), b: (S, S)) -> Option<S> {
        let pts = &self.pts;
        let s = pts.partition_point(|q| q.0 <= a.0).checked_sub(1)?;
        let (p, q) = (pts[s], *pts.get(s + 1)?);
        if !(q.0 > p.0) || b.0 > q.0 {
            return None;
        }
        let at = |x: S| p.1 + (q.1 - p.1) * ((x - p.0) / (q.0 - p.0));
        Some((a.1 - at(a.0)).abs().max((b.1 - at(b.0)).abs()))
    }
}

fn dist<S: Scalar>(p: (S, S), q: (S, S)) -> S {
    dist2(p, q).sqrt()
}

fn dist2<S: Scalar>(p: (S, S), q: (S, S)) -> S {
    let (dx, dy) = (p.0 - q.0, p.1 - q.1);
    dx * dx + dy * dy
}

fn segment_distance2<S: Scalar>(p: (S, S), a: (S, S), b: (S, S)) -> S {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    if len2 == S::zero() {
        return dist2(p, a);
    }
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).max(S::zero()).min(S::one());
    dist2(p, (a.0 + dx * t, a.1 + dy * t))
}

/// Hausdorff distance between two polylines.
pub fn polyline_hausdorff<S: Scalar>(a: &Polyline<S>, b: &Polyline<S>) -> S {
    if a == b {
        return S::zero();
    }
    let count = a.pts.len().max(b.pts.len()).max(2) - 1;
    let span = a.x_span().max(b.x_span());
    let res = if span > S::zero() { span / S::from_usize_exact(count) / S::lit(8.0) } else { S::one() };
    a.directed_distance(b, res).max(b.directed_distance(a, res))
}

fn same_interval<S: Scalar>(a: &Grid1D<S>, b: &Grid1D<S>) -> Result<()> {
    if a.a() == b.a() && a.b() == b.b() {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Hausdorff distance between the graphs of two continuous functions.
pub fn graph_hausdorff<S: Scalar>(phi: &SampledFn<S>, psi: &SampledFn<S>) -> Result<S> {
    if !phi.is_continuous() || !psi.is_continuous() {
        return Err(Error::HasJumps);
    }
    same_interval(phi.grid(), psi.grid())?;
    Ok(polyline_hausdorff(&Polyline::graph(phi), &Polyline::graph(psi)))
}

/// Trapezoid integral of `|φ − ψ|` over a shared grid.
pub fn l1_distance<S: Scalar>(phi: &SampledFn<S>, psi: &SampledFn<S>) -> Result<S> {
    phi.grid().require_same(psi.grid())?;
    let d: Vec<S> = phi.values().iter().zip(psi.values()).map(|(a, b)| (*a - *b).abs()).collect();
    Ok(trapezoid(&d, phi.grid().spacing()))
}

/// `δ(φ, ψ) = h(φ, ψ) + ∫|φ − ψ|`.
pub fn delta_metric<S: Scalar>(phi: &SampledFn<S>, psi: &SampledFn<S>) -> Result<S> {
    Ok(graph_hausdorff(phi, psi)? + l1_distance(phi, psi)?)
}

/// Which class metric to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    S,
    R,
}

impl MetricKind {
    fn distance<S: Scalar>(self, phi: &SampledFn<S>, psi: &SampledFn<S>) -> Result<S> {
        match self {
            MetricKind::S => graph_hausdorff(phi, psi),
            MetricKind::R => delta_metric(phi, psi),
        }
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s" => Ok(MetricKind::S),
            "r" => Ok(MetricKind::R),
            other => Err(Error::Parse(format!("unknown metric '{other}', expected s or r"))),
        }
    }
}

/// Per-`k` terms of a class metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct KTerm<S> {
    pub k: S,
    pub lower: S,
    pub upper: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct MetricReport<S> {
    pub value: S,
    pub per_k: Vec<KTerm<S>>,
    /// Bound on how much `k` beyond the schedule could raise `value`.
    pub truncation_bound: S,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub directions: Option<Vec<Vec<S>>>,
}

impl<S: Scalar> MetricReport<S> {
    /// Truncation is negligible: below 10% of the value or below `1e-6`.
    pub fn truncation_ok(&self) -> bool {
        self.truncation_bound < S::lit(0.1) * self.value || self.truncation_bound < S::lit(1e-6)
    }
}

/// Class metric along `ks`.
///
/// Tail certificate: for `k ≥ K` the envelope `f_k⁻` lies between `f_K⁻` and
/// the node polyline `f_∞⁻` of `f⁻` (the envelope reached once `k·h` exceeds
/// every node step), so `d(f_k⁻, f_K⁻) ≤ d(f_∞⁻, f_K⁻)` for both `h` and `δ`.
/// The triangle inequality then bounds every untested term by
/// `term_K + d(f_∞, f_K) + d(g_∞, g_K)`.
pub fn class_metric<S: Scalar>(f: &ClassPair<S>, g: &ClassPair<S>, ks: &[S], kind: MetricKind) -> Result<MetricReport<S>> {
    f.grid().require_same(g.grid())?;
    check_schedule(ks)?;
    let mut per_k = Vec::with_capacity(ks.len());
    let mut last = None;
    for &k in ks {
        let (fl, gl) = (lip_lower_envelope(f.lower(), k)?, lip_lower_envelope(g.lower(), k)?);
        let (fu, gu) = (lip_upper_envelope(f.upper(), k)?, lip_upper_envelope(g.upper(), k)?);
        per_k.push(KTerm { k, lower: kind.distance(&fl, &gl)?, upper: kind.distance(&fu, &gu)? });
        last = Some((fl, gl, fu, gu));
    }
    let value = per_k.iter().fold(S::zero(), |m, t| m.max(t.lower).max(t.upper));
    let (fl, gl, fu, gu) = last.expect("schedule is nonempty");
    let top = per_k[per_k.len() - 1];
    let limit = |v: &SampledFn<S>| SampledFn::continuous(*v.grid(), v.values().to_vec());
    let tail_lo = top.lower + kind.distance(&limit(f.lower())?, &fl)? + kind.distance(&limit(g.lower())?, &gl)?;
    let tail_up = top.upper + kind.distance(&limit(f.upper())?, &fu)? + kind.distance(&limit(g.upper())?, &gu)?;
    let truncation_bound = (tail_lo.max(tail_up) - value).max(S::zero());
    Ok(MetricReport { value, per_k, truncation_bound, directions: None })
}

pub fn s_metric<S: Scalar>(f: &ClassPair<S>, g: &ClassPair<S>, ks: &[S]) -> Result<MetricReport<S>> {
    class_metric(f, g, ks, MetricKind::S)
}

pub fn r_metric<S: Scalar>(f: &ClassPair<S>, g: &ClassPair<S>, ks: &[S]) -> Result<MetricReport<S>> {
    class_metric(f, g, ks, MetricKind::R)
}

/// Default direction sample: `{±1}` for `m = 1`, `count` uniform angles for `m = 2`.
pub fn default_directions<S: Scalar>(m: usize, count: usize) -> Result<Vec<Vec<S>>> {
    match m {
        1 => Ok(vec![vec![S::one()], vec![-S::one()]]),
        2 => Ok((0..count.max(1))
            .map(|j| {
                let t = std::f64::consts::TAU * j as f64 / count.max(1) as f64;
                vec![S::lit(t.cos()), S::lit(t.sin())]
            })
            .collect()),
        _ => Err(Error::DimensionMismatch { left: m, right: 2 }),
    }
}

/// Vector metric: maximum over `dirs` of the scalar metric between projections.
pub fn class_metric_vec<S: Scalar>(
    f: &VectorClass<S>,
    g: &VectorClass<S>,
    ks: &[S],
    dirs: &[Vec<S>],
    kind: MetricKind,
) -> Result<MetricReport<S>> {
    f.require_compatible(g)?;
    if dirs.is_empty() {
        return Err(Error::InvalidFunction("direction sample is empty".into()));
    }
    let mut out: Option<MetricReport<S>> = None;
    for xi in dirs {
        if xi.len() != f.dim() {
            return Err(Error::DimensionMismatch { left: f.dim(), right: xi.len() });
        }
        let rep = class_metric(&f.project(xi)?, &g.project(xi)?, ks, kind)?;
        out = Some(match out {
            None => rep,
            Some(mut acc) => {
                acc.value = acc.value.max(rep.value);
                acc.truncation_bound = acc.truncation_bound.max(rep.truncation_bound);
                for (a, b) in acc.per_k.iter_mut().zip(&rep.per_k) {
                    a.lower = a.lower.max(b.lower);
                    a.upper = a.upper.max(b.upper);
                }
                acc
            }
        });
    }
    let mut rep = out.expect("dirs is nonempty");
    rep.directions = Some(dirs.to_vec());
    Ok(rep)
}

pub fn s_metric_vec<S: Scalar>(f: &VectorClass<S>, g: &VectorClass<S>, ks: &[S], dirs: &[Vec<S>]) -> Result<MetricReport<S>> {
    class_metric_vec(f, g, ks, dirs, MetricKind::S)
}

pub fn r_metric_vec<S: Scalar>(f: &VectorClass<S>, g: &VectorClass<S>, ks: &[S], dirs: &[Vec<S>]) -> Result<MetricReport<S>> {
    class_metric_vec(f, g, ks, dirs, MetricKind::R)
}

/// Numerical test for `seq → 0`: the second half is nonincreasing up to
/// `tol`, and the last term is below `tol` or below a quarter of the largest.
pub fn tail_converges<S: Scalar>(seq: &[S], tol: S) -> bool {
    let Some(&last) = seq.last() else { return false };
    let tail = &seq[seq.len() / 2..];
    let peak = seq.iter().fold(S::zero(), |m, &v| m.max(v));
    tail.windows(2).all(|w| w[1] <= w[0] + tol) && (last <= tol || last <= S::lit(0.25) * peak)
}

/// Checks the closed-graph property of a convergent sequence of classes:
/// `F_n → F`, `x_n → x`, `η_n ∈ F_n(x_n)`, `η_n → η` imply `η ∈ F(x)`.
///
/// Returns the conclusion; a failed premise is reported as
/// [`Error::HypothesisViolated`] so vacuous passes are distinguishable.
#[allow(clippy::too_many_arguments)]
pub fn check_graph_limit<S: Scalar>(
    f_seq: &[VectorClass<S>],
    f: &VectorClass<S>,
    x_seq: &[S],
    x: S,
    eta_seq: &[Vec<S>],
    eta: &[S],
    ks: &[S],
    kind: MetricKind,
) -> Result<bool> {
    let n = f_seq.len();
    if n < 2 || x_seq.len() != n || eta_seq.len() != n {
        return Err(Error::HypothesisViolated("sequences must share a length of at least 2".into()));
    }
    let lip = f.components().iter().fold(S::one(), |m, c| m.max(c.lip()));
    let tol = tol_rep(lip, f.grid().spacing());
    let dirs = default_directions(f.dim(), 64)?;
    let dists = f_seq
        .iter()
        .map(|fi| class_metric_vec(fi, f, ks, &dirs, kind).map(|r| r.value))
        .collect::<Result<Vec<_>>>()?;
    if !tail_converges(&dists, tol) {
        return Err(Error::HypothesisViolated(format!("F_n does not converge to F: distances {dists:?}")));
    }
    let dx: Vec<S> = x_seq.iter().map(|&xi| (xi - x).abs()).collect();
    if !tail_converges(&dx, tol) {
        return Err(Error::HypothesisViolated("x_n does not converge to x".into()));
    }
    let de: Vec<S> = eta_seq
        .iter()
        .map(|e| e.iter().zip(eta).fold(S::zero(), |m, (a, b)| m.max((*a - *b).abs())))
        .collect();
    if !tail_converges(&de, tol) {
        return Err(Error::HypothesisViolated("eta_n does not converge to eta".into()));
    }
    for (i, ((fi, &xi), ei)) in f_seq.iter().zip(x_seq).zip(eta_seq).enumerate() {
        if !crate::class::value_at_vec(fi, xi)?.contains(ei, tol) {
            return Err(Error::HypothesisViolated(format!("eta_{i} is not in F_{i}(x_{i})")));
        }
    }
    Ok(crate::class::value_at_vec(f, x)?.contains(eta, tol))
}

/// Checks that continuous functions whose graphs converge to the closed
/// graph of `f` also converge to `f` in `s`.
pub fn check_graph_to_metric<S: Scalar>(f: &ClassPair<S>, fn_seq: &[SampledFn<S>], ks: &[S]) -> Result<bool> {
    if fn_seq.len() < 2 {
        return Err(Error::HypothesisViolated("need at least two terms".into()));
    }
    let tol = tol_rep(f.lip().max(S::one()), f.grid().spacing());
    let target = Polyline::class_graph(f);
    let mut graph_d = Vec::with_capacity(fn_seq.len());
    let mut s_d = Vec::with_capacity(fn_seq.len());
    for fi in fn_seq {
        if !fi.is_continuous() {
            return Err(Error::HypothesisViolated("terms must be continuous".into()));
        }
        graph_d.push(polyline_hausdorff(&Polyline::graph(fi), &target));
        s_d.push(s_metric(&ClassPair::continuous(fi.clone())?, f, ks)?.value);
    }
    if !tail_converges(&graph_d, tol) {
        return Err(Error::HypothesisViolated(format!("graphs do not converge: {graph_d:?}")));
    }
    Ok(tail_converges(&s_d, tol))
}
