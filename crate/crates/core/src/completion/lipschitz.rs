use rand::Rng;

use super::{LatticeTower, TowerElement, TowerSamples};
use crate::class::{canonical_pair, ClassPair};
use crate::envelope::{lip_lower_envelope, lip_upper_envelope};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::metric::graph_hausdorff;
use crate::random::rng;
use crate::sampled::SampledFn;
use crate::scalar::Scalar;
use crate::tolerance::{noise_floor, tol_rep};

pub const DEFAULT_LEVELS: usize = 12;

/// Continuous grid functions ordered pointwise, with the graph Hausdorff
/// metric and levels `Lip_k`, `k = 2ⁿ`. Projections are the Lipschitz
/// envelopes.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzTower<S> {
    grid: Grid1D<S>,
    ks: Vec<S>,
}

impl<S: Scalar> LipschitzTower<S> {
    pub fn new(grid: Grid1D<S>, levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::DepthMismatch { left: 0, right: 1 });
        }
        let ks = (0..levels).map(|n| S::lit((1u64 << n) as f64)).collect();
        Ok(Self { grid, ks })
    }

    pub fn grid(&self) -> &Grid1D<S> {
        &self.grid
    }

    pub fn ks(&self) -> &[S] {
        &self.ks
    }

    /// The element of a class: envelopes of `f⁻` from below and of `f⁺`
    /// from above at every level.
    pub fn class_element(&self, f: &ClassPair<S>) -> Result<TowerElement<SampledFn<S>, S>> {
        f.grid().require_same(&self.grid)?;
        let pairs = self
            .ks
            .iter()
            .map(|&k| Ok((lip_lower_envelope(f.lower(), k)?, lip_upper_envelope(f.upper(), k)?)))
            .collect::<Result<Vec<_>>>()?;
        TowerElement::from_pairs(self, pairs)
    }

    /// Seeded sample set: a random walk with shifted, bumped and enveloped
    /// variants, envelopes of the sign class, and three monotone chains.
    pub fn samples(&self, seed: u64) -> Result<TowerSamples<SampledFn<S>>> {
        let g = self.grid;
        let mut r = rng(seed);
        let h = g.spacing().as_f64();
        let mut y: f64 = r.gen_range(-0.5..0.5);
        let mut slope: f64 = r.gen_range(-3.0..3.0);
        let mut walk = Vec::with_capacity(g.len());
        for i in 0..g.len() {
            if i > 0 {
                if r.gen_bool(0.03) {
                    slope = r.gen_range(-3.0..3.0);
                }
                y += slope * h;
            }
            walk.push(y);
        }
        let c: f64 = r.gen_range(g.a().as_f64()..g.b().as_f64());
        let xs: Vec<f64> = g.nodes().into_iter().map(|x| x.as_f64()).collect();
        let make = |v: Vec<f64>| SampledFn::continuous(g, v.into_iter().map(S::lit).collect());
        let base = make(walk.clone())?;
        // sign jumps at the interior node nearest 0, or nearest the middle
        let (a, b) = (g.a(), g.b());
        let target = if a < S::zero() && S::zero() < b { S::zero() } else { (a + b) * S::lit(0.5) };
        let x0 = g.node(g.nearest(target).clamp(1, g.len() - 2));
        let sign = canonical_pair(&SampledFn::sample(g, |x: S| if x == x0 { S::zero() } else { (x - x0).signum() }, &[x0])?)?;
        let elements = vec![
            base.clone(),
            make(walk.iter().map(|v| v + 0.25).collect())?,
            make(walk.iter().zip(&xs).map(|(v, x)| v + (0.5 - 2.0 * (x - c).abs()).max(0.0)).collect())?,
            make(walk.iter().zip(&xs).map(|(v, x)| v - 0.3 * (1.0 + (3.0 * x).sin())).collect())?,
            lip_lower_envelope(&base, S::one())?,
            lip_upper_envelope(&base, S::one())?,
            lip_lower_envelope(sign.lower(), S::lit(4.0))?,
            lip_upper_envelope(sign.upper(), S::lit(16.0))?,
        ];
        let ks: Vec<S> = (0..DEFAULT_LEVELS).map(|n| S::lit((1u64 << n) as f64)).collect();
        let chains = vec![
            ks.iter().map(|&k| lip_lower_envelope(sign.lower(), k)).collect::<Result<Vec<_>>>()?,
            ks.iter().map(|&k| lip_upper_envelope(sign.upper(), k)).collect::<Result<Vec<_>>>()?,
            (0..11).map(|j| make(walk.iter().map(|v| v + 0.5f64.powi(j)).collect())).collect::<Result<Vec<_>>>()?,
        ];
        Ok(TowerSamples { elements, chains })
    }
}

impl<S: Scalar> LatticeTower for LipschitzTower<S> {
    type Elem = SampledFn<S>;
    type Scalar = S;

    fn depth(&self) -> usize {
        self.ks.len()
    }

    fn le(&self, a: &SampledFn<S>, b: &SampledFn<S>) -> bool {
        a.grid().same_as(b.grid()) && a.values().iter().zip(b.values()).all(|(x, y)| x <= y)
    }

    fn rho(&self, a: &SampledFn<S>, b: &SampledFn<S>) -> Result<S> {
        graph_hausdorff(a, b)
    }

    fn in_level(&self, f: &SampledFn<S>, n: usize) -> bool {
        let Some(&k) = self.ks.get(n) else { return false };
        if !f.is_continuous() || !f.grid().same_as(&self.grid) {
            return false;
        }
        // envelope steps are exactly k·h up to rounding of the values
        let step = k * self.grid.spacing();
        let slack = step * S::lit(1e-9) + noise_floor::<S>() * (S::one() + f.bound());
        f.values().windows(2).all(|w| (w[1] - w[0]).abs() <= step + slack)
    }

    fn project_down(&self, f: &SampledFn<S>, n: usize) -> Result<SampledFn<S>> {
        lip_lower_envelope(f, self.ks[n])
    }

    fn project_up(&self, f: &SampledFn<S>, n: usize) -> Result<SampledFn<S>> {
        lip_upper_envelope(f, self.ks[n])
    }

    fn between(&self, a: &SampledFn<S>, b: &SampledFn<S>) -> Result<SampledFn<S>> {
        a.grid().require_same(b.grid())?;
        let mid = a.values().iter().zip(b.values()).map(|(x, y)| (*x + *y) * S::lit(0.5)).collect();
        SampledFn::continuous(*a.grid(), mid)
    }

    fn tolerance(&self) -> S {
        tol_rep(S::one(), self.grid.spacing())
    }

    /// Envelopes move by at most `(1 + k)·d` in sup norm when the graphs move by `d`.
    fn modulus(&self, n: usize) -> S {
        S::one() + self.ks[n]
    }
}

/// The Lipschitz tower with the discrete metric in place of the graph
/// metric. Monotone chains never become Cauchy, so it must fail verification.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMetricTower<S>(pub LipschitzTower<S>);

impl<S: Scalar> LatticeTower for DiscreteMetricTower<S> {
    type Elem = SampledFn<S>;
    type Scalar = S;

    fn depth(&self) -> usize {
        self.0.depth()
    }

    fn le(&self, a: &SampledFn<S>, b: &SampledFn<S>) -> bool {
        self.0.le(a, b)
    }

    fn rho(&self, a: &SampledFn<S>, b: &SampledFn<S>) -> Result<S> {
        Ok(if a.values() == b.values() { S::zero() } else { S::one() })
    }

    fn in_level(&self, f: &SampledFn<S>, n: usize) -> bool {
        self.0.in_level(f, n)
    }

    fn project_down(&self, f: &SampledFn<S>, n: usize) -> Result<SampledFn<S>> {
        self.0.project_down(f, n)
    }

    fn project_up(&self, f: &SampledFn<S>, n: usize) -> Result<SampledFn<S>> {
        self.0.project_up(f, n)
    }

    fn between(&self, a: &SampledFn<S>, b: &SampledFn<S>) -> Result<SampledFn<S>> {
        self.0.between(a, b)
    }

    fn tolerance(&self) -> S {
        self.0.tolerance()
    }

    fn modulus(&self, n: usize) -> S {
        self.0.modulus(n)
    }
}
