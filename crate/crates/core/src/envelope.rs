//! `k`-Lipschitz lower and upper envelopes.
//!
//! `f_k^-(x) = inf_y f(y) + k|x − y|` is the greatest `k`-Lipschitz minorant
//! of `f`, and `f_k^+` is its dual. On a uniform grid both are computed by a
//! forward and a backward slope clamp in `O(n)`.

use serde::{Deserialize, Serialize};

use crate::class::ClassPair;
use crate::error::{Error, Result};
use crate::metric::graph_hausdorff;
use crate::sampled::SampledFn;
use crate::scalar::Scalar;

/// Which envelope to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

fn check_k<S: Scalar>(k: S) -> Result<()> {
    if k > S::zero() && k.is_finite() {
        Ok(())
    } else {
        Err(Error::NonpositiveK(k.as_f64()))
    }
}

/// Greatest `k`-Lipschitz function below `f` on the grid.
pub fn lip_lower_envelope<S: Scalar>(f: &SampledFn<S>, k: S) -> Result<SampledFn<S>> {
    check_k(k)?;
    let step = k * f.grid().spacing();
    let mut v = f.values().to_vec();
    for i in 1..v.len() {
        v[i] = v[i].min(v[i - 1] + step);
    }
    for i in (0..v.len() - 1).rev() {
        v[i] = v[i].min(v[i + 1] + step);
    }
    SampledFn::continuous(*f.grid(), v)
}

/// Least `k`-Lipschitz function above `f` on the grid.
pub fn lip_upper_envelope<S: Scalar>(f: &SampledFn<S>, k: S) -> Result<SampledFn<S>> {
    check_k(k)?;
    let step = k * f.grid().spacing();
    let mut v = f.values().to_vec();
    for i in 1..v.len() {
        v[i] = v[i].max(v[i - 1] - step);
    }
    for i in (0..v.len() - 1).rev() {
        v[i] = v[i].max(v[i + 1] - step);
    }
    SampledFn::continuous(*f.grid(), v)
}

pub fn lip_envelope<S: Scalar>(f: &SampledFn<S>, k: S, side: Side) -> Result<SampledFn<S>> {
    match side {
        Side::Lower => lip_lower_envelope(f, k),
        Side::Upper => lip_upper_envelope(f, k),
    }
}

/// Direct `O(n²)` evaluation of the inf- (sup-) convolution. Test oracle.
pub fn envelope_oracle<S: Scalar>(f: &SampledFn<S>, k: S, side: Side) -> Result<SampledFn<S>> {
    check_k(k)?;
    let xs = f.grid().nodes();
    let v = f.values();
    let out = xs
        .iter()
        .map(|&x| {
            let costs = xs.iter().zip(v).map(|(&y, &fy)| match side {
                Side::Lower => fy + k * (x - y).abs(),
                Side::Upper => fy - k * (x - y).abs(),
            });
            match side {
                Side::Lower => costs.fold(S::infinity(), S::min),
                Side::Upper => costs.fold(S::neg_infinity(), S::max),
            }
        })
        .collect();
    SampledFn::continuous(*f.grid(), out)
}

/// Default geometric schedule `{1, 2, 4, ..., 1024}`.
pub fn default_ks<S: Scalar>() -> Vec<S> {
    (0..=10).map(|p| S::lit(f64::from(1u32 << p))).collect()
}

/// Validates a `k`-schedule: nonempty, positive, strictly increasing.
pub fn check_schedule<S: Scalar>(ks: &[S]) -> Result<()> {
    let Some(&first) = ks.first() else {
        return Err(Error::InvalidFunction("empty k-schedule".into()));
    };
    check_k(first)?;
    if ks.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidFunction("k-schedule must be strictly increasing".into()));
    }
    Ok(())
}

/// Envelopes of a class along a `k`-schedule, with graph gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct EnvelopeFamily<S> {
    pub source: ClassPair<S>,
    pub ks: Vec<S>,
    pub lowers: Vec<SampledFn<S>>,
    pub uppers: Vec<SampledFn<S>>,
    pub gaps: Vec<S>,
}

impl<S: Scalar> EnvelopeFamily<S> {
    pub fn len(&self) -> usize {
        self.ks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ks.is_empty()
    }

    /// Checks the family invariants: Lipschitz bounds, sandwich, monotonicity in `k`.
    pub fn check_invariants(&self) -> Result<()> {
        let h = self.source.grid().spacing();
        let lo = self.source.lower().values();
        let hi = self.source.upper().values();
        for (j, (&k, (l, u))) in self.ks.iter().zip(self.lowers.iter().zip(&self.uppers)).enumerate() {
            let tol = crate::tolerance::tol_rep(k, h);
            let slope_ok = |f: &SampledFn<S>| f.values().windows(2).all(|w| (w[1] - w[0]).abs() <= k * h + tol);
            let bad = |msg: &str| Err(Error::InvalidFunction(format!("envelope family at k = {k}: {msg}")));
            if !slope_ok(l) || !slope_ok(u) {
                return bad("slope exceeds k");
            }
            if l.values().iter().zip(lo).any(|(a, b)| a > b) || u.values().iter().zip(hi).any(|(a, b)| a < b) {
                return bad("sandwich violated");
            }
            if j > 0 {
                let (pl, pu) = (&self.lowers[j - 1], &self.uppers[j - 1]);
                if l.values().iter().zip(pl.values()).any(|(a, b)| a < b)
                    || u.values().iter().zip(pu.values()).any(|(a, b)| a > b)
                {
                    return bad("not monotone in k");
                }
            }
        }
        Ok(())
    }
}

/// Lower envelopes of `f⁻` and upper envelopes of `f⁺` for every `k` in `ks`.
pub fn envelope_family<S: Scalar>(f: &ClassPair<S>, ks: &[S]) -> Result<EnvelopeFamily<S>> {
    check_schedule(ks)?;
    let mut lowers = Vec::with_capacity(ks.len());
    let mut uppers = Vec::with_capacity(ks.len());
    let mut gaps = Vec::with_capacity(ks.len());
    for &k in ks {
        let l = lip_lower_envelope(f.lower(), k)?;
        let u = lip_upper_envelope(f.upper(), k)?;
        gaps.push(graph_hausdorff(&l, &u)?);
        lowers.push(l);
        uppers.push(u);
    }
    Ok(EnvelopeFamily { source: f.clone(), ks: ks.to_vec(), lowers, uppers, gaps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::class::canonical_pair;
    use crate::grid::Grid1D;

    fn grid(n: usize) -> Grid1D<f64> {
        Grid1D::new(-1.0, 1.0, n).unwrap()
    }

    fn sign(n: usize) -> SampledFn<f64> {
        SampledFn::sample(grid(n), |x| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 }, &[0.0]).unwrap()
    }

    #[test]
    fn abs_is_fixed_for_k_at_least_one() {
        let f = SampledFn::sample(grid(101), f64::abs, &[]).unwrap();
        // sampled |x| is 1-Lipschitz only up to rounding
        for e in [lip_lower_envelope(&f, 2.0).unwrap(), lip_upper_envelope(&f, 1.0).unwrap()] {
            assert!(e.values().iter().zip(f.values()).all(|(a, b)| (a - b).abs() < 1e-15));
        }
    }

    #[test]
    fn sign_ramps_match_closed_forms() {
        let pair = canonical_pair(&sign(201)).unwrap();
        let lo = lip_lower_envelope(pair.lower(), 1.0).unwrap();
        let up = lip_upper_envelope(pair.upper(), 1.0).unwrap();
        for (i, x) in grid(201).nodes().into_iter().enumerate() {
            let want_lo = if x <= 0.0 { -1.0 } else { (x - 1.0).min(1.0) };
            let want_up = if x >= 0.0 { 1.0 } else { (1.0 + x).max(-1.0) };
            assert!((lo.values()[i] - want_lo).abs() < 1e-12, "lower at {x}");
            assert!((up.values()[i] - want_up).abs() < 1e-12, "upper at {x}");
        }
    }

    #[test]
    fn spike_becomes_truncated_cone() {
        let g = grid(21);
        let mut v = vec![0.0; 21];
        v[10] = 1.0;
        let f = SampledFn::continuous(g, v).unwrap();
        let k = 40.0; // k·h = 4
        let up = envelope_oracle(&f, k, Side::Upper).unwrap();
        for (i, &u) in up.values().iter().enumerate() {
            let want = (1.0 - k * (g.node(i) - g.node(10)).abs()).max(0.0);
            assert!((u - want).abs() < 1e-12);
        }
        // the minorant can climb the spike when k·h ≥ 1, and only halfway when k·h = 1/2
        assert_eq!(lip_lower_envelope(&f, k).unwrap().values(), f.values());
        assert_eq!(lip_lower_envelope(&f, 5.0).unwrap().values()[10], 0.5);
    }

    #[test]
    fn odd_symmetry_and_projection_laws() {
        let f = sign(101).with_values((0..101).map(|i| ((i * 37 % 11) as f64) - 5.0).collect()).unwrap();
        let a = lip_upper_envelope(&f.neg(), 3.0).unwrap();
        let b = lip_lower_envelope(&f, 3.0).unwrap();
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| *x == -*y));
        let twice = lip_lower_envelope(&b, 3.0).unwrap();
        assert_eq!(twice.values(), b.values());
        let via_larger = lip_lower_envelope(&lip_lower_envelope(&f, 7.0).unwrap(), 3.0).unwrap();
        assert!(via_larger.values().iter().zip(b.values()).all(|(x, y)| (x - y).abs() < 1e-12));
    }

    #[test]
    fn nonpositive_k_rejected() {
        assert!(matches!(lip_lower_envelope(&sign(11), 0.0), Err(Error::NonpositiveK(_))));
        assert!(envelope_oracle(&sign(11), -1.0, Side::Lower).is_err());
        assert!(check_schedule(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn constant_family_has_zero_gaps() {
        let c = ClassPair::constant(grid(51), 0.7);
        let fam = envelope_family(&c, &default_ks::<f64>()).unwrap();
        assert!(fam.gaps.iter().all(|&g| g == 0.0));
        fam.check_invariants().unwrap();
    }

    #[test]
    fn sign_family_gaps_decrease() {
        let pair = canonical_pair(&sign(801)).unwrap();
        let fam = envelope_family(&pair, &[1.0, 2.0, 4.0, 8.0]).unwrap();
        fam.check_invariants().unwrap();
        assert!(fam.gaps.windows(2).all(|w| w[1] < w[0]));
        for (&k, &gap) in fam.ks.iter().zip(&fam.gaps) {
            let want = 2.0 / (k * k + 1.0f64).sqrt();
            assert!((gap - want).abs() < 3.0 * pair.grid().spacing(), "k = {k}: {gap} vs {want}");
        }
    }
}
