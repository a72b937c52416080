//! The closure `𝝏` of the classical gradient.
//!
//! `f` is smoothed at decreasing widths, each stage is differentiated
//! classically, and the stage gradients are tested for the Cauchy property
//! in `r`. When they settle, the limit class is read off the finest stage:
//! nodes the smoothing could still reach from a kink are replaced by linear
//! extrapolation from the settled nodes beyond, and each kink becomes a jump.

use serde::{Deserialize, Serialize};

use super::{detect_kinks, kink_threshold, quotient_gradient, GradientField, KinkRun};
use crate::class::{canonical_pair, ClassPair};
use crate::envelope::default_ks;
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::metric::{r_metric, tail_converges};
use crate::sampled::SampledFn;
use crate::scalar::Scalar;
use crate::tolerance::{tol_grad, tol_rep};

/// Smoothing kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothingKind {
    /// Triangular kernel.
    Mollifier,
    /// Uniform moving average.
    EnvelopeAverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SmoothingSchedule<S> {
    pub kind: SmoothingKind,
    pub widths: Vec<S>,
    pub max_stages: usize,
}

impl<S: Scalar> SmoothingSchedule<S> {
    pub fn new(kind: SmoothingKind, widths: Vec<S>, max_stages: usize) -> Result<Self> {
        if max_stages < 3 || widths.len() < 3 {
            return Err(Error::ScheduleTooCoarse("a schedule needs at least 3 stages".into()));
        }
        if widths.iter().any(|&w| !(w > S::zero())) || widths.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidFunction("widths must be positive and strictly decreasing".into()));
        }
        Ok(Self { kind, widths, max_stages })
    }

    /// Widths `w_0·2^{-j}` from `w_0 = (b − a)/8` down to the last one at or above `h/20`.
    ///
    /// Stages finer than the grid still differ at the nodes next to a kink,
    /// by an amount proportional to `w/h`, so the successive gaps keep
    /// contracting below the grid scale instead of stalling at it.
    pub fn for_grid(grid: &Grid1D<S>, kind: SmoothingKind) -> Result<Self> {
        let floor = grid.spacing() * S::lit(0.05);
        let mut w = (grid.b() - grid.a()) / S::lit(8.0);
        let mut widths = Vec::new();
        while w >= floor && widths.len() < 24 {
            widths.push(w);
            w = w * S::lit(0.5);
        }
        Self::new(kind, widths, 24)
    }

    fn stages(&self) -> &[S] {
        &self.widths[..self.widths.len().min(self.max_stages)]
    }
}

/// Outcome of the Cauchy test on the stage gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ClosureDiagnostic<S> {
    #[serde(rename = "gaps")]
    pub cauchy_gaps: Vec<S>,
    pub converged: bool,
    /// Heuristic verdict on membership of the closure domain at this resolution.
    pub in_domain_hint: bool,
}

/// Convolves the piecewise-linear interpolant of `f` with a kernel of
/// half-width `w` and samples the result at the nodes. Beyond the ends the
/// interpolant is continued by odd reflection about the end points, which
/// keeps linear data unchanged. On each cell the integrand is a product of
/// two linear pieces, so Simpson's rule is exact.
pub fn mollify<S: Scalar>(f: &SampledFn<S>, w: S, kind: SmoothingKind) -> Result<SampledFn<S>> {
    if !(w > S::zero()) {
        return Err(Error::InvalidFunction("smoothing width must be positive".into()));
    }
    let v = f.values();
    let n = v.len();
    let h = f.grid().spacing();
    let w = w.min(h * S::from_usize_exact(n - 1));
    let last = (n - 1) as isize;
    let two = S::lit(2.0);
    let at = |j: isize| -> S {
        if j < 0 {
            two * v[0] - v[(-j).min(last) as usize]
        } else if j > last {
            two * v[n - 1] - v[(2 * last - j).max(0) as usize]
        } else {
            v[j as usize]
        }
    };
    let kernel = |u: S| match kind {
        SmoothingKind::Mollifier => (w - u.abs()).max(S::zero()) / (w * w),
        SmoothingKind::EnvelopeAverage => S::one() / (two * w),
    };
    let reach = (w / h).ceil().to_isize().unwrap_or(1).max(1);
    let (six, four, half) = (S::lit(6.0), S::lit(4.0), S::lit(0.5));
    let out = (0..n as isize)
        .map(|i| {
            let mut acc = S::zero();
            for j in -reach..reach {
                let (c0, c1) = (h * S::lit(j as f64), h * S::lit((j + 1) as f64));
                let (y0, y1) = (at(i + j), at(i + j + 1));
                let line = |u: S| y0 + (y1 - y0) * ((u - c0) / h);
                for (lo, hi) in [(-w, S::zero()), (S::zero(), w)] {
                    let (u0, u1) = (c0.max(lo), c1.min(hi));
                    if u1 > u0 {
                        let g = |u: S| line(u) * kernel(u);
                        let m = (u0 + u1) * half;
                        acc = acc + (u1 - u0) / six * (g(u0) + four * g(m) + g(u1));
                    }
                }
            }
            acc
        })
        .collect();
    SampledFn::continuous(*f.grid(), out)
}

/// Closure gradient of `f` along `sched`.
///
/// Converged means the last three successive `r`-gaps are below `tol_grad`.
/// Otherwise the result is
/// [`Error::ScheduleTooCoarse`] if the gaps already grow between the first
/// stages, and [`Error::NotConverged`] (carrying the gaps) if they do not.
pub fn closure_gradient<S: Scalar>(
    f: &SampledFn<S>,
    sched: &SmoothingSchedule<S>,
) -> Result<(GradientField<S>, ClosureDiagnostic<S>)> {
    if !f.is_continuous() {
        return Err(Error::HasJumps);
    }
    let grid = *f.grid();
    let h = grid.spacing();
    let ws = sched.stages();
    let ks = default_ks::<S>();
    let source = ClassPair::continuous(f.clone())?;
    let mut grads = Vec::with_capacity(ws.len());
    let mut approach = Vec::with_capacity(ws.len());
    for &w in ws {
        let stage = mollify(f, w, sched.kind)?;
        approach.push(r_metric(&ClassPair::continuous(stage.clone())?, &source, &ks)?.value);
        grads.push(ClassPair::continuous(SampledFn::continuous(grid, quotient_gradient(&stage))?)?);
    }
    if !tail_converges(&approach, tol_rep(f.lip(), h)) {
        return Err(Error::HypothesisViolated(format!("smoothed stages do not approach f in r: {approach:?}")));
    }
    let gaps = grads
        .windows(2)
        .map(|w| r_metric(&w[0], &w[1], &ks).map(|r| r.value))
        .collect::<Result<Vec<_>>>()?;

    let tol = tol_grad(f.lip(), h);
    let tail = &gaps[gaps.len() - 3..];
    // Below tol_grad the gaps sit at the discretization floor: once the width
    // drops under h, stages differ only at kink neighbours, by an amount that
    // shrinks with w but reaches the envelopes unevenly. Their order there is
    // noise, so only their size is tested.
    let converged = tail.iter().all(|&g| g < tol);
    let slack = tol_rep(f.lip(), h);
    if !converged {
        let coarse = gaps[1] > gaps[0] + slack;
        let gaps: Vec<f64> = gaps.iter().map(|g| g.as_f64()).collect();
        return Err(if coarse {
            Error::ScheduleTooCoarse(format!("gaps grow from the first stage on: {gaps:?}"))
        } else {
            Error::NotConverged { gaps }
        });
    }
    let runs = detect_kinks(f, kink_threshold(f));
    let finest = grads.last().expect("at least three stages");
    let reach = (ws[ws.len() - 1] / h).ceil().to_usize().unwrap_or(1);
    let field = extract_limit(finest.lower(), &runs, reach)?;
    let diag = ClosureDiagnostic { cauchy_gaps: gaps, converged, in_domain_hint: converged };
    Ok((GradientField::scalar(field), diag))
}

/// Limit class from the finest stage gradient `g` (smoothing half-width `m`).
fn extract_limit<S: Scalar>(g: &SampledFn<S>, runs: &[KinkRun], m: usize) -> Result<ClassPair<S>> {
    let v = g.values();
    let n = v.len();
    let mut zone = vec![false; n];
    let reach = |r: &KinkRun| (r.first.saturating_sub(m + 1), (r.last + m + 1).min(n - 1));
    for r in runs {
        let (lo, hi) = reach(r);
        zone[lo..=hi].iter_mut().for_each(|z| *z = true);
    }
    let mut out = v.to_vec();
    for r in runs {
        let (lo, hi) = reach(r);
        // settled anchors just outside the zone, with a second node for the slope
        let left = lo.checked_sub(1).filter(|&o| !zone[o]);
        let right = Some(hi + 1).filter(|&o| o < n && !zone[o]);
        for (z, slot) in out.iter_mut().enumerate().take(hi + 1).skip(lo) {
            let from = if z < r.center { left } else if z > r.center { right } else { None };
            if let Some(o) = from {
                let next = if o < z { o.checked_sub(1) } else { Some(o + 1).filter(|&p| p < n) };
                let slope = match next {
                    Some(p) if !zone[p] => v[o] - v[p],
                    _ => S::zero(),
                };
                let dist = S::from_usize_exact(o.abs_diff(z));
                *slot = v[o] + slope * dist;
            }
        }
    }
    let rep = SampledFn::measured(*g.grid(), out, runs.iter().map(|r| r.center).collect())?;
    canonical_pair(&rep)
}
