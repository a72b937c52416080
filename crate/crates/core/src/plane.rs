//! Two-dimensional demonstration: tensor grids, cone envelopes by sweeps and
//! gradient values as hulls of quadrant difference quotients.
//!
//! Envelopes use the path metric of a 7×7 chamfer stencil with exact
//! Euclidean step lengths. That metric is the polygonal norm `N` through the
//! primitive vectors `(a, b)`, `|a|, |b| ≤ 3`, and satisfies
//! `‖v‖ ≤ N(v) ≤ (1 + CHAMFER_EXCESS)·‖v‖`.

use serde::{Deserialize, Serialize};

use crate::envelope::Side;
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::scalar::Scalar;
use crate::tolerance::tol_grad;
use crate::value::ConvexValue;

/// `1/cos(θ/2) − 1` for the widest angle `θ = atan(1/3)` between
/// neighbouring stencil directions.
pub const CHAMFER_EXCESS: f64 = 0.013_081_457_233_190_097;

const MAX_SWEEPS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Grid2D<S> {
    pub x: Grid1D<S>,
    pub y: Grid1D<S>,
}

impl<S: Scalar> Grid2D<S> {
    pub fn new(x: Grid1D<S>, y: Grid1D<S>) -> Self {
        Self { x, y }
    }

    pub fn square(a: S, b: S, n: usize) -> Result<Self> {
        let g = Grid1D::new(a, b, n)?;
        Ok(Self { x: g, y: g })
    }

    pub fn len(&self) -> usize {
        self.x.len() * self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major index of node `(i, j)`: `i` along x, `j` along y.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.x.len() + i
    }

    pub fn node(&self, i: usize, j: usize) -> (S, S) {
        (self.x.node(i), self.y.node(j))
    }
}

/// Continuous function sampled on a tensor grid, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Sampled2D<S> {
    grid: Grid2D<S>,
    values: Vec<S>,
}

impl<S: Scalar> Sampled2D<S> {
    pub fn new(grid: Grid2D<S>, values: Vec<S>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidFunction(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction(format!("value at node {i} is not finite")));
        }
        Ok(Self { grid, values })
    }

    pub fn sample(grid: Grid2D<S>, f: impl Fn(S, S) -> S) -> Result<Self> {
        let values = (0..grid.y.len())
            .flat_map(|j| (0..grid.x.len()).map(move |i| (i, j)))
            .map(|(i, j)| {
                let (x, y) = grid.node(i, j);
                f(x, y)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid2D<S> {
        &self.grid
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> S {
        self.values[self.grid.index(i, j)]
    }

    /// Oscillation `max f − min f`.
    pub fn oscillation(&self) -> S {
        let lo = self.values.iter().copied().fold(S::infinity(), S::min);
        let hi = self.values.iter().copied().fold(S::neg_infinity(), S::max);
        hi - lo
    }
}

fn stencil() -> Vec<(isize, isize)> {
    let gcd = |mut a: isize, mut b: isize| {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a.abs()
    };
    let mut s = Vec::new();
    for a in -3isize..=3 {
        for b in -3isize..=3 {
            if (a, b) != (0, 0) && gcd(a, b) == 1 {
                s.push((a, b));
            }
        }
    }
    s
}

/// Cone envelope `inf_y f(y) + k·N(x − y)` (lower) or the matching sup
/// (upper), by Gauss–Seidel sweeps in the four raster orders until a sweep
/// changes nothing.
pub fn cone_envelope_2d<S: Scalar>(f: &Sampled2D<S>, k: S, side: Side) -> Result<Sampled2D<S>> {
    if !(k > S::zero()) {
        return Err(Error::NonpositiveK(k.as_f64()));
    }
    let g = f.grid;
    let (nx, ny) = (g.x.len() as isize, g.y.len() as isize);
    let (hx, hy) = (g.x.spacing(), g.y.spacing());
    let steps: Vec<(isize, isize, S)> = stencil()
        .into_iter()
        .map(|(a, b)| {
            let (dx, dy) = (S::lit(a as f64) * hx, S::lit(b as f64) * hy);
            (a, b, k * (dx * dx + dy * dy).sqrt())
        })
        .collect();
    // upper envelopes are negated lower envelopes of −f
    let sgn = if side == Side::Lower { S::one() } else { -S::one() };
    let mut v: Vec<S> = f.values.iter().map(|&x| sgn * x).collect();
    let orders = [(false, false), (true, false), (false, true), (true, true)];
    for sweep in 0..MAX_SWEEPS {
        let (rev_i, rev_j) = orders[sweep % 4];
        let mut changed = false;
        for jj in 0..ny {
            let j = if rev_j { ny - 1 - jj } else { jj };
            for ii in 0..nx {
                let i = if rev_i { nx - 1 - ii } else { ii };
                let p = (j * nx + i) as usize;
                let mut best = v[p];
                for &(a, b, c) in &steps {
                    let (qi, qj) = (i - a, j - b);
                    if qi >= 0 && qi < nx && qj >= 0 && qj < ny {
                        best = best.min(v[(qj * nx + qi) as usize] + c);
                    }
                }
                if best < v[p] {
                    v[p] = best;
                    changed = true;
                }
            }
        }
        if !changed {
            return Sampled2D::new(g, v.into_iter().map(|x| sgn * x).collect());
        }
    }
    Err(Error::HypothesisViolated(format!("cone envelope still moving after {MAX_SWEEPS} sweeps")))
}

/// Brute-force Euclidean cone envelope, `O(N²)` in the node count.
pub fn envelope_oracle_2d<S: Scalar>(f: &Sampled2D<S>, k: S, side: Side) -> Result<Sampled2D<S>> {
    if !(k > S::zero()) {
        return Err(Error::NonpositiveK(k.as_f64()));
    }
    let g = f.grid;
    let nodes: Vec<(S, S)> = (0..g.y.len()).flat_map(|j| (0..g.x.len()).map(move |i| g.node(i, j))).collect();
    let values = nodes
        .iter()
        .map(|&(x, y)| {
            let cone = |(&(px, py), &fv): (&(S, S), &S)| {
                let d = k * ((x - px) * (x - px) + (y - py) * (y - py)).sqrt();
                if side == Side::Lower { fv + d } else { fv - d }
            };
            let it = nodes.iter().zip(&f.values).map(cone);
            if side == Side::Lower { it.fold(S::infinity(), S::min) } else { it.fold(S::neg_infinity(), S::max) }
        })
        .collect();
    Sampled2D::new(g, values)
}

/// Gradient values as convex hulls of quadrant difference quotients.
///
/// Along each axis the two one-sided quotients are kept when they differ by
/// more than `5·tol_grad` (a kink line crosses the node) and averaged
/// otherwise. The value is the hull of the resulting at most four vectors.
pub fn quadrant_gradient<S: Scalar>(f: &Sampled2D<S>) -> Result<Vec<ConvexValue<S>>> {
    let g = f.grid;
    let (nx, ny) = (g.x.len(), g.y.len());
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidGrid("quadrant gradients need two nodes per axis".into()));
    }
    let (hx, hy) = (g.x.spacing(), g.y.spacing());
    let mut lip = S::zero();
    for j in 0..ny {
        for i in 0..nx {
            if i + 1 < nx {
                lip = lip.max(((f.at(i + 1, j) - f.at(i, j)) / hx).abs());
            }
            if j + 1 < ny {
                lip = lip.max(((f.at(i, j + 1) - f.at(i, j)) / hy).abs());
            }
        }
    }
    let kink = S::lit(5.0) * tol_grad(lip, hx.max(hy));
    let sides = |back: Option<S>, fwd: Option<S>| -> Vec<S> {
        match (back, fwd) {
            (Some(a), Some(b)) if (a - b).abs() > kink => vec![a, b],
            (Some(a), Some(b)) => vec![(a + b) * S::lit(0.5)],
            (Some(a), None) | (None, Some(a)) => vec![a],
            (None, None) => unreachable!("two nodes per axis"),
        }
    };
    let mut out = Vec::with_capacity(g.len());
    for j in 0..ny {
        for i in 0..nx {
            let c = f.at(i, j);
            let qx = sides((i > 0).then(|| (c - f.at(i - 1, j)) / hx), (i + 1 < nx).then(|| (f.at(i + 1, j) - c) / hx));
            let qy = sides((j > 0).then(|| (c - f.at(i, j - 1)) / hy), (j + 1 < ny).then(|| (f.at(i, j + 1) - c) / hy));
            let pts: Vec<Vec<S>> = qx.iter().flat_map(|&a| qy.iter().map(move |&b| vec![a, b])).collect();
            out.push(ConvexValue::hull(&pts)?);
        }
    }
    Ok(out)
}

/// Hausdorff distance between two planar convex values.
pub fn convex_hausdorff<S: Scalar>(a: &ConvexValue<S>, b: &ConvexValue<S>) -> S {
    let directed = |p: &ConvexValue<S>, q: &ConvexValue<S>| {
        p.vertices().iter().map(|v| point_to_convex(v, q)).fold(S::zero(), S::max)
    };
    directed(a, b).max(directed(b, a))
}

fn point_to_convex<S: Scalar>(p: &[S], c: &ConvexValue<S>) -> S {
    let vs = c.vertices();
    if c.contains(p, S::zero()) {
        return S::zero();
    }
    let seg = |a: &[S], b: &[S]| {
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len2 = dx * dx + dy * dy;
        let t = if len2 > S::zero() { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).max(S::zero()).min(S::one()) } else { S::zero() };
        let (ex, ey) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
        (ex * ex + ey * ey).sqrt()
    };
    (0..vs.len()).map(|i| seg(&vs[i], &vs[(i + 1) % vs.len()])).fold(S::infinity(), S::min)
}

/// Outcome of the planar demonstration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneDemoReport {
    pub nodes: usize,
    /// Sweep envelope against the exact cone of a point mass, and the bound.
    pub cone_error: f64,
    pub cone_bound: f64,
    /// Sweep envelope against the brute-force oracle on the small grid.
    pub oracle_error: f64,
    pub oracle_bound: f64,
    /// Largest node distance between quadrant hulls and the exact gradient hulls.
    pub gradient_error: f64,
    pub gradient_tol: f64,
    /// Quadrant hull at the crossing of the kink lines.
    pub origin_value: Vec<Vec<f64>>,
}

impl PlaneDemoReport {
    pub fn passed(&self) -> bool {
        self.cone_error <= self.cone_bound && self.oracle_error <= self.oracle_bound && self.gradient_error <= self.gradient_tol
    }
}

/// Runs the planar demonstration on `[−1, 1]²` with `n` nodes per axis
/// (`n` odd, so the kink lines `x = 0` and `y = 0` run through nodes).
///
/// `f(x, y) = |x| + 2|y| + sin(x + y)/2`, whose gradient at a node is the
/// rectangle `[±1] × [±2]` shifted by the smooth part, collapsed along each
/// axis off the kink lines.
pub fn plane_demo(n: usize) -> Result<PlaneDemoReport> {
    if n.is_multiple_of(2) || n < 5 {
        return Err(Error::InvalidGrid(format!("plane demo needs an odd node count >= 5, got {n}")));
    }
    let g = Grid2D::square(-1.0f64, 1.0, n)?;
    let c = n / 2;

    // a unit point mass at the centre: the exact envelope is min(1, k·r)
    let k = 3.0;
    let spike = Sampled2D::sample(g, |x, y| if x == 0.0 && y == 0.0 { 0.0 } else { 1.0 })?;
    let swept = cone_envelope_2d(&spike, k, Side::Lower)?;
    let cone_error = (0..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .map(|(i, j)| {
            let (x, y) = g.node(i, j);
            (swept.at(i, j) - (k * x.hypot(y)).min(1.0)).abs()
        })
        .fold(0.0, f64::max);
    let cone_bound = CHAMFER_EXCESS * spike.oscillation() + 1e-12;

    // brute force on a coarse copy of a rough function
    let small = Grid2D::square(-1.0f64, 1.0, 21)?;
    let rough = Sampled2D::sample(small, |x, y| (7.0 * x).sin() * (5.0 * y).cos() + if x > 0.3 { 1.0 } else { 0.0 })?;
    let mut oracle_error = 0.0f64;
    for side in [Side::Lower, Side::Upper] {
        let fast = cone_envelope_2d(&rough, 2.0, side)?;
        let slow = envelope_oracle_2d(&rough, 2.0, side)?;
        oracle_error = fast.values().iter().zip(slow.values()).fold(oracle_error, |m, (a, b)| m.max((a - b).abs()));
    }
    let oracle_bound = CHAMFER_EXCESS * rough.oscillation() + 1e-12;

    let f = Sampled2D::sample(g, |x, y| x.abs() + 2.0 * y.abs() + 0.5 * (x + y).sin())?;
    let grads = quadrant_gradient(&f)?;
    let exact = |x: f64, y: f64| {
        let s = 0.5 * (x + y).cos();
        let xs = if x == 0.0 { vec![-1.0, 1.0] } else { vec![x.signum()] };
        let ys = if y == 0.0 { vec![-2.0, 2.0] } else { vec![2.0 * y.signum()] };
        let pts: Vec<Vec<f64>> = xs.iter().flat_map(|&a| ys.iter().map(move |&b| vec![a + s, b + s])).collect();
        ConvexValue::hull(&pts)
    };
    let mut gradient_error = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let (x, y) = g.node(i, j);
            gradient_error = gradient_error.max(convex_hausdorff(&grads[g.index(i, j)], &exact(x, y)?));
        }
    }
    let gradient_tol = tol_grad(3.0 + 0.5 * 2f64.sqrt(), g.x.spacing());
    Ok(PlaneDemoReport {
        nodes: g.len(),
        cone_error,
        cone_bound,
        oracle_error,
        oracle_bound,
        gradient_error,
        gradient_tol,
        origin_value: grads[g.index(c, c)].vertices().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencil_excess_constant() {
        let theta = (1.0f64 / 3.0).atan();
        assert!((1.0 / (theta / 2.0).cos() - 1.0 - CHAMFER_EXCESS).abs() < 1e-15);
        assert_eq!(stencil().len(), 32);
    }

    #[test]
    fn sweeps_within_the_chamfer_bound() {
        let g = Grid2D::square(0.0f64, 1.0, 17).unwrap();
        let f = Sampled2D::sample(g, |x, y| (9.0 * x * y).sin() + x).unwrap();
        for side in [Side::Lower, Side::Upper] {
            let fast = cone_envelope_2d(&f, 1.5, side).unwrap();
            let slow = envelope_oracle_2d(&f, 1.5, side).unwrap();
            for (a, b) in fast.values().iter().zip(slow.values()) {
                // the polygonal norm dominates the Euclidean one
                let gap = if side == Side::Lower { a - b } else { b - a };
                assert!(gap >= -1e-12 && gap <= CHAMFER_EXCESS * f.oscillation() + 1e-12);
            }
            let again = cone_envelope_2d(&fast, 1.5, side).unwrap();
            assert_eq!(again, fast);
        }
    }

    #[test]
    fn demo_passes_on_a_small_grid() {
        let r = plane_demo(257).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.origin_value.len(), 4);
        assert!(plane_demo(40).is_err());
    }
}
