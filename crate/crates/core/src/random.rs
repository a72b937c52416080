//! Seeded generators for randomized checks. All draws go through
//! `ChaCha8Rng`, so a seed fixes the output on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::Grid1D;
use crate::sampled::SampledFn;
use crate::scalar::Scalar;

/// Generator behind every seeded draw.
pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random walk with slopes in `[-4, 4]`, up to four interior jumps of
/// height up to 2, and an occasional isolated spike.
pub fn piecewise_lipschitz<S: Scalar>(grid: Grid1D<S>, rng: &mut impl Rng) -> Result<SampledFn<S>> {
    let n = grid.len();
    let h = grid.spacing().as_f64();
    let mut jumps: Vec<usize> = (0..rng.gen_range(0..=4)).map(|_| rng.gen_range(1..n - 1)).collect();
    jumps.sort_unstable();
    jumps.dedup();
    let mut v = Vec::with_capacity(n);
    let mut y: f64 = rng.gen_range(-1.0..1.0);
    let mut slope: f64 = rng.gen_range(-4.0..4.0);
    for i in 0..n {
        if i > 0 {
            if rng.gen_bool(0.02) {
                slope = rng.gen_range(-4.0..4.0);
            }
            y += slope * h;
        }
        v.push(y);
        if jumps.binary_search(&i).is_ok() {
            y += rng.gen_range(-2.0..2.0);
        }
    }
    // a jump node carries the value of one side or anything between
    for &j in &jumps {
        let t: f64 = rng.gen_range(0.0..1.0);
        v[j] = v[j - 1] + slope * h + t * (v[j + 1] - v[j - 1] - 2.0 * slope * h);
    }
    SampledFn::measured(grid, v.into_iter().map(S::lit).collect(), jumps)
}

/// Parameters of `Σ a_i |x − c_i| + b x² + c sin(2x)` with kinks on grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSmooth {
    pub kinks: Vec<(f64, f64)>,
    pub quad: f64,
    pub wave: f64,
}

impl PiecewiseSmooth {
    /// Draws one to three kinks on nodes inside the middle 80% of the grid,
    /// at least `n/25` nodes from each other and from every node in `avoid`.
    pub fn draw<S: Scalar>(grid: &Grid1D<S>, avoid: &[usize], rng: &mut impl Rng) -> Self {
        let n = grid.len();
        let (lo, hi) = (n / 10, n - n / 10);
        let sep = (n / 25).max(2);
        let want = rng.gen_range(1..=3);
        let mut taken = avoid.to_vec();
        let mut kinks = Vec::new();
        for _ in 0..200 {
            if kinks.len() == want {
                break;
            }
            let i = rng.gen_range(lo..hi);
            if taken.iter().all(|&t: &usize| t.abs_diff(i) >= sep) {
                taken.push(i);
                kinks.push((rng.gen_range(-1.5..1.5), grid.node(i).as_f64()));
            }
        }
        Self { kinks, quad: rng.gen_range(-1.0..1.0), wave: rng.gen_range(-1.0..1.0) }
    }

    /// Two functions whose kinks are pairwise separated, none shared.
    pub fn draw_pair<S: Scalar>(grid: &Grid1D<S>, rng: &mut impl Rng) -> (Self, Self) {
        let f = Self::draw(grid, &[], rng);
        let used: Vec<usize> = f.kinks.iter().map(|&(_, c)| grid.nearest(S::lit(c))).collect();
        let g = Self::draw(grid, &used, rng);
        (f, g)
    }

    /// A pair for min/max checks: like [`Self::draw_pair`], redrawn until
    /// `f − g` keeps its sign on the `n/25` nodes next to either end. A
    /// crossing inside an end cell is invisible to one-sided quotients.
    pub fn draw_lattice_pair<S: Scalar>(grid: &Grid1D<S>, rng: &mut impl Rng) -> (Self, Self) {
        let n = grid.len();
        let edge = (n / 25).max(2);
        let ends: Vec<f64> = (0..=edge).chain(n - 1 - edge..n).map(|i| grid.node(i).as_f64()).collect();
        loop {
            let (f, g) = Self::draw_pair(grid, rng);
            let d: Vec<f64> = ends.iter().map(|&x| f.eval(x) - g.eval(x)).collect();
            let (head, tail) = d.split_at(edge + 1);
            let steady = |s: &[f64]| s.iter().all(|&v| v > 0.0) || s.iter().all(|&v| v < 0.0);
            if steady(head) && steady(tail) {
                return (f, g);
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.kinks.iter().map(|&(a, c)| a * (x - c).abs()).sum::<f64>() + self.quad * x * x + self.wave * (2.0 * x).sin()
    }

    pub fn sample<S: Scalar>(&self, grid: Grid1D<S>) -> Result<SampledFn<S>> {
        SampledFn::sample(grid, |x| S::lit(self.eval(x.as_f64())), &[])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_function() {
        let g = Grid1D::new(-1.0f64, 1.0, 500).unwrap();
        let a = piecewise_lipschitz(g, &mut rng(3)).unwrap();
        let b = piecewise_lipschitz(g, &mut rng(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.lip_defect().is_none());
    }

    #[test]
    fn pair_kinks_are_separated() {
        let g = Grid1D::new(-1.0f64, 1.0, 401).unwrap();
        let mut r = rng(9);
        for _ in 0..20 {
            let (f, h) = PiecewiseSmooth::draw_pair(&g, &mut r);
            let all: Vec<f64> = f.kinks.iter().chain(&h.kinks).map(|k| k.1).collect();
            for (i, a) in all.iter().enumerate() {
                assert!(all[i + 1..].iter().all(|b| (a - b).abs() >= 16.0 * g.spacing() - 1e-12));
            }
        }
    }
}
