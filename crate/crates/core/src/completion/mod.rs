//! Completion of a metric lattice given as an increasing tower of levels.
//!
//! An element of the completion is a pair of projection sequences
//! `(f_n⁻, f_n⁺)` whose gaps `ρ(f_n⁻, f_n⁺)` tend to zero. Sequences are
//! truncated at a finite depth; every distance carries a certified bound for
//! the levels that were cut off.

mod bundle;
mod lipschitz;

pub use bundle::{Bundle, PairRef, TowerElementDoc};
pub use lipschitz::{DiscreteMetricTower, LipschitzTower, DEFAULT_LEVELS};

use num_traits::{Float, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::tail_converges;
use crate::scalar::Scalar;

/// A lattice with a metric and an increasing sequence of levels, each a
/// conditionally complete lattice, with projections onto every level.
pub trait LatticeTower {
    type Elem: Clone;
    type Scalar: Scalar;

    /// Number of supplied levels.
    fn depth(&self) -> usize;
    fn le(&self, a: &Self::Elem, b: &Self::Elem) -> bool;
    fn rho(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Scalar>;
    fn in_level(&self, f: &Self::Elem, n: usize) -> bool;
    /// Largest element of level `n` below `f`.
    fn project_down(&self, f: &Self::Elem, n: usize) -> Result<Self::Elem>;
    /// Least element of level `n` above `f`.
    fn project_up(&self, f: &Self::Elem, n: usize) -> Result<Self::Elem>;
    /// An element strictly between `a < b`.
    fn between(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem>;
    /// Resolution of the instantiation: distances below it are noise.
    fn tolerance(&self) -> Self::Scalar;
    /// Claimed Lipschitz modulus of both projections onto level `n`.
    fn modulus(&self, n: usize) -> Self::Scalar;

    fn lt(&self, a: &Self::Elem, b: &Self::Elem) -> bool {
        self.le(a, b) && !self.le(b, a)
    }
}

type Scal<T> = <T as LatticeTower>::Scalar;
type El<T> = <T as LatticeTower>::Elem;

/// Truncated element of the completion.
#[derive(Debug, Clone, PartialEq)]
pub struct TowerElement<E, S> {
    pairs: Vec<(E, E)>,
    gap: S,
    /// `ρ(f_n⁻, f_n⁺)` at every level.
    tail: Vec<S>,
}

impl<E: Clone, S: Scalar> TowerElement<E, S> {
    /// Builds an element from level pairs, computing the gaps.
    pub fn from_pairs<T: LatticeTower<Elem = E, Scalar = S>>(tower: &T, pairs: Vec<(E, E)>) -> Result<Self> {
        if pairs.is_empty() || pairs.len() > tower.depth() {
            return Err(Error::DepthMismatch { left: pairs.len(), right: tower.depth() });
        }
        let tail = pairs.iter().map(|(l, u)| tower.rho(l, u)).collect::<Result<Vec<_>>>()?;
        let gap = tail[tail.len() - 1];
        Ok(Self { pairs, gap, tail })
    }

    pub fn depth(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(E, E)] {
        &self.pairs
    }

    pub fn lower(&self, n: usize) -> &E {
        &self.pairs[n].0
    }

    pub fn upper(&self, n: usize) -> &E {
        &self.pairs[n].1
    }

    /// Gap at the deepest level.
    pub fn gap(&self) -> S {
        self.gap
    }

    pub fn tail(&self) -> &[S] {
        &self.tail
    }

    /// Drops levels beyond `depth`.
    pub fn truncate(&self, depth: usize) -> Self {
        let d = depth.clamp(1, self.depth());
        Self { pairs: self.pairs[..d].to_vec(), gap: self.tail[d - 1], tail: self.tail[..d].to_vec() }
    }

    /// Checks level membership, compatibility `(f_j^±)_n^± = f_n^±` for
    /// `n ≤ j` and a nonincreasing gap sequence, all within the tower tolerance.
    pub fn check<T: LatticeTower<Elem = E, Scalar = S>>(&self, tower: &T) -> Result<()> {
        let tol = tower.tolerance();
        let bad = |msg: String| Err(Error::HypothesisViolated(msg));
        for (n, (l, u)) in self.pairs.iter().enumerate() {
            if !tower.in_level(l, n) || !tower.in_level(u, n) {
                return bad(format!("pair {n} is not in level {n}"));
            }
            if !tower.le(l, u) {
                return bad(format!("pair {n} is not ordered"));
            }
        }
        for j in 1..self.depth() {
            let (lj, uj) = &self.pairs[j];
            for n in 0..j {
                let dl = tower.rho(&tower.project_down(lj, n)?, &self.pairs[n].0)?;
                let du = tower.rho(&tower.project_up(uj, n)?, &self.pairs[n].1)?;
                if dl > tol || du > tol {
                    return bad(format!("levels {n} and {j} are incompatible ({dl}, {du})"));
                }
            }
        }
        if let Some(w) = self.tail.windows(2).position(|w| w[1] > w[0] + tol) {
            return bad(format!("gap grows at level {}", w + 1));
        }
        Ok(())
    }
}

/// The completion metric with its truncation certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct RhoTilde<S> {
    /// Sup over the represented levels.
    pub value: S,
    /// Bound on how much the levels beyond the depth could add.
    pub tail_bound: S,
}

impl<S: Scalar> RhoTilde<S> {
    pub fn upper(&self) -> S {
        self.value + self.tail_bound
    }
}

/// Embeds `f` as the pair of its projection sequences.
pub fn embed<T: LatticeTower>(tower: &T, f: &El<T>, depth: usize) -> Result<TowerElement<El<T>, Scal<T>>> {
    if depth == 0 || depth > tower.depth() {
        return Err(Error::DepthMismatch { left: depth, right: tower.depth() });
    }
    if !(0..tower.depth()).any(|n| tower.in_level(f, n)) {
        return Err(Error::NotInTower);
    }
    let pairs = (0..depth)
        .map(|n| {
            if tower.in_level(f, n) {
                Ok((f.clone(), f.clone()))
            } else {
                Ok((tower.project_down(f, n)?, tower.project_up(f, n)?))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    TowerElement::from_pairs(tower, pairs)
}

/// `ρ̃(x, y) = sup_n max(ρ(x_n⁻, y_n⁻), ρ(x_n⁺, y_n⁺))`.
///
/// The deeper operand is truncated to the common depth `N`. Beyond `N` each
/// term is at most the level-`N` term plus both gaps at `N`: `x_N⁻ ≤ x_n⁻ ≤
/// x_N⁺`, so metric monotonicity gives `ρ(x_N⁻, x_n⁻) ≤ ρ(x_N⁻, x_N⁺)`.
pub fn rho_tilde<T: LatticeTower>(
    tower: &T,
    x: &TowerElement<El<T>, Scal<T>>,
    y: &TowerElement<El<T>, Scal<T>>,
) -> Result<RhoTilde<Scal<T>>> {
    let depth = x.depth().min(y.depth());
    if depth == 0 || x.depth().max(y.depth()) > tower.depth() {
        return Err(Error::DepthMismatch { left: x.depth(), right: y.depth() });
    }
    let mut value = Scal::<T>::zero();
    let mut top = value;
    for n in 0..depth {
        let term = tower.rho(x.lower(n), y.lower(n))?.max(tower.rho(x.upper(n), y.upper(n))?);
        value = value.max(term);
        top = term;
    }
    let tail = top + x.tail[depth - 1] + y.tail[depth - 1];
    Ok(RhoTilde { value, tail_bound: (tail - value).max(Scal::<T>::zero()) })
}

/// Limit of a `ρ̃`-Cauchy sequence.
///
/// Each level sequence converges in its (complete) level; with finitely many
/// terms the limit is estimated by the last term, whose distance to the true
/// limit is bounded by the Cauchy tail. The result is checked against the
/// element conditions before it is returned.
pub fn cauchy_limit<T: LatticeTower>(
    tower: &T,
    seq: &[TowerElement<El<T>, Scal<T>>],
    tol: Scal<T>,
) -> Result<TowerElement<El<T>, Scal<T>>> {
    let Some(last) = seq.last() else {
        return Err(Error::HypothesisViolated("empty sequence".into()));
    };
    if let Some(bad) = seq.iter().find(|e| e.depth() != last.depth()) {
        return Err(Error::DepthMismatch { left: bad.depth(), right: last.depth() });
    }
    let steps = seq.windows(2).map(|w| rho_tilde(tower, &w[0], &w[1]).map(|r| r.value)).collect::<Result<Vec<_>>>()?;
    if let Some(&final_step) = steps.last() {
        if final_step > tol || !tail_converges(&steps, tol) {
            return Err(Error::NotCauchy { diameter: final_step.as_f64(), tol: tol.as_f64() });
        }
    }
    let limit = last.clone();
    limit.check(tower)?;
    Ok(limit)
}

/// A base element approximating a completion element.
#[derive(Debug, Clone, PartialEq)]
pub struct Approximation<E, S> {
    pub element: E,
    /// Level `k` of the lower projection that was returned.
    pub level: usize,
    pub distance: RhoTilde<S>,
}

/// Finds the first level `k` whose lower projection `x_k⁻`, embedded again,
/// is certified within `eps` of `x` (value plus tail bound).
pub fn density_approx<T: LatticeTower>(
    tower: &T,
    x: &TowerElement<El<T>, Scal<T>>,
    eps: Scal<T>,
) -> Result<Approximation<El<T>, Scal<T>>> {
    if !(eps > Scal::<T>::zero()) {
        return Err(Error::HypothesisViolated(format!("eps must be positive, got {eps}")));
    }
    let mut best = Scal::<T>::infinity();
    for k in 0..x.depth() {
        let candidate = x.lower(k);
        let distance = rho_tilde(tower, &embed(tower, candidate, x.depth())?, x)?;
        if distance.upper() < eps {
            return Ok(Approximation { element: candidate.clone(), level: k, distance });
        }
        best = best.min(distance.upper());
    }
    Err(Error::PrecisionUnreachable { eps: eps.as_f64(), best: best.as_f64() })
}

/// Which tower condition a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    Betweenness,
    MetricMonotonicity,
    MonotoneCauchy,
    UniformContinuity,
    /// A supplied chain is not monotone.
    Sample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct TowerReport<S> {
    /// Number of individual checks per condition, in declaration order.
    pub checked: [usize; 4],
    /// Largest observed `ρ(P a, P b) / ρ(a, b)` per level.
    pub moduli: Vec<S>,
    pub violations: Vec<Violation>,
}

impl<S> TowerReport<S> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn fails(&self, c: Condition) -> bool {
        self.violations.iter().any(|v| v.condition == c)
    }
}

/// Sample data for [`verify_tower`]: loose elements (all pairs and ordered
/// triples among them are used) and chains meant to be bounded and monotone.
#[derive(Debug, Clone, Default)]
pub struct TowerSamples<E> {
    pub elements: Vec<E>,
    pub chains: Vec<Vec<E>>,
}

/// Checks the tower conditions on samples. Never fails; problems are listed
/// in the report.
pub fn verify_tower<T: LatticeTower>(tower: &T, samples: &TowerSamples<El<T>>) -> Result<TowerReport<Scal<T>>> {
    let tol = tower.tolerance();
    let els = &samples.elements;
    let mut checked = [0usize; 4];
    let mut violations = Vec::new();
    let mut flag = |condition, detail: String| violations.push(Violation { condition, detail });

    let ordered: Vec<(usize, usize)> = (0..els.len())
        .flat_map(|i| (0..els.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && tower.lt(&els[i], &els[j]))
        .collect();

    // (i) and (ii) with the constructed middle element
    for &(i, j) in &ordered {
        let (a, b) = (&els[i], &els[j]);
        let c = tower.between(a, b)?;
        checked[0] += 1;
        if !(tower.lt(a, &c) && tower.lt(&c, b)) {
            flag(Condition::Betweenness, format!("no strict middle for samples {i} < {j}"));
        }
        let ab = tower.rho(a, b)?;
        checked[1] += 1;
        if tower.rho(a, &c)? > ab + tol || tower.rho(&c, b)? > ab + tol {
            flag(Condition::MetricMonotonicity, format!("middle of {i} < {j} is farther than {ab}"));
        }
    }
    // (ii) on sampled triples
    for &(i, j) in &ordered {
        for &(j2, k) in ordered.iter().filter(|p| p.0 == j) {
            debug_assert_eq!(j, j2);
            let ik = tower.rho(&els[i], &els[k])?;
            checked[1] += 1;
            if tower.rho(&els[i], &els[j])? > ik + tol || tower.rho(&els[j], &els[k])? > ik + tol {
                flag(Condition::MetricMonotonicity, format!("samples {i} < {j} < {k}"));
            }
        }
    }
    // (iii)
    for (ci, chain) in samples.chains.iter().enumerate() {
        let up = chain.windows(2).all(|w| tower.le(&w[0], &w[1]));
        let down = chain.windows(2).all(|w| tower.le(&w[1], &w[0]));
        if !(up || down) || chain.len() < 3 {
            flag(Condition::Sample, format!("chain {ci} is not a monotone chain of length >= 3"));
            continue;
        }
        let steps = chain.windows(2).map(|w| tower.rho(&w[0], &w[1])).collect::<Result<Vec<_>>>()?;
        checked[2] += 1;
        if !tail_converges(&steps, tol) {
            flag(Condition::MonotoneCauchy, format!("chain {ci} steps do not tend to zero: {steps:?}"));
        }
    }
    // uniform continuity of the projections
    let mut moduli = vec![Scal::<T>::zero(); tower.depth()];
    for (n, modulus) in moduli.iter_mut().enumerate() {
        let claim = tower.modulus(n);
        let proj = els
            .iter()
            .map(|e| Ok((tower.project_down(e, n)?, tower.project_up(e, n)?)))
            .collect::<Result<Vec<_>>>()?;
        for i in 0..els.len() {
            for j in i + 1..els.len() {
                let d = tower.rho(&els[i], &els[j])?;
                let dp = tower.rho(&proj[i].0, &proj[j].0)?.max(tower.rho(&proj[i].1, &proj[j].1)?);
                checked[3] += 1;
                if d > Scal::<T>::zero() {
                    *modulus = modulus.max(dp / d);
                }
                if dp > claim * d + tol {
                    flag(Condition::UniformContinuity, format!("level {n}: samples {i}, {j} move {dp} for {d}"));
                }
            }
        }
    }
    Ok(TowerReport { checked, moduli, violations })
}
