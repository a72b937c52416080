//! Gradient, completion and graph-limit checks.

use setcalc::completion::Condition;
use setcalc::gradient::{kink_threshold, Extremum};
use setcalc::plane::plane_demo;
use setcalc::random::PiecewiseSmooth;
use setcalc::{
    canonical_pair, cauchy_limit, check_graph_limit, check_graph_to_metric, class_add, class_max, class_min, class_scale,
    clarke_gradient, closure_gradient, density_approx, embed, field_node_distance, grad_add, grad_minmax, grad_scale,
    gradient_tolerance, limit_exchange, mollify, r_metric, rho_tilde, s_metric, stationarity_check, tol_grad,
    verify_tower, ClassPair, DiscreteMetricTower, Error, GradientField, LatticeTower, LipschitzTower, MetricKind,
    SampledFn, SmoothingKind, SmoothingSchedule, VectorClass, Which,
};

use super::{catalog_classes, random_classes, Runner};
use crate::catalog::Entry;
use crate::error::{CliError, Result};
use crate::expr::Expr;

const LAMBDAS: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 3.0];

/// Pairs used for linearity in the suite; the acceptance run uses more.
const LINEARITY_PAIRS: usize = 3;
const MINMAX_PAIRS: usize = 10;

fn closure(r: &Runner, f: &SampledFn<f64>) -> Result<GradientField<f64>> {
    Ok(closure_gradient(f, &r.cfg.schedule()?)?.0)
}

/// r-distance between two gradient fields and the matching tolerance.
fn field_r(r: &Runner, f_lip: f64, a: &GradientField<f64>, b: &GradientField<f64>) -> Result<(f64, f64)> {
    let d = r_metric(a.class(), b.class(), &r.cfg.ks)?.value;
    Ok((d, r.tol(gradient_tolerance(f_lip, b))))
}

pub(crate) fn gradient_suite(r: &mut Runner) {
    r.run("clarke coincidence", |r| {
        for (name, c) in catalog_classes(r.grid) {
            if !c.jumps().is_empty() {
                continue;
            }
            let f = c.lower();
            match closure_gradient(f, &r.cfg.schedule()?) {
                Ok((d, _)) => {
                    let clarke = clarke_gradient(f)?;
                    let t = r.tol(gradient_tolerance(f.lip(), &clarke));
                    r.le(format!("closure = clarke/{name}"), field_node_distance(&d, &clarke)?, t);
                }
                Err(Error::NotConverged { gaps }) => {
                    let last = gaps.last().copied().unwrap_or(f64::NAN);
                    let note = "closure did not converge at this resolution; excluded";
                    r.flag(format!("closure = clarke/{name}"), true, last, r.tol(tol_grad(f.lip(), r.h())), note);
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(())
    });

    r.run("linearity", |r| {
        let mut g = r.rng(30);
        let mut per_lambda = vec![Vec::new(); LAMBDAS.len()];
        let mut inclusion = 0usize;
        for _ in 0..LINEARITY_PAIRS {
            let (pf, pg) = PiecewiseSmooth::draw_pair(&r.grid, &mut g);
            let (f, h) = (pf.sample(r.grid)?, pg.sample(r.grid)?);
            let (df, dh) = (closure(r, &f)?, closure(r, &h)?);
            let (cf, ch) = (clarke_gradient(&f)?, clarke_gradient(&h)?);
            for (i, &l) in LAMBDAS.iter().enumerate() {
                let combo = class_add(&class_scale(l, &ClassPair::continuous(f.clone())?)?, &ClassPair::continuous(h.clone())?)?;
                let lhs = closure(r, combo.lower())?;
                let rhs = grad_add(&grad_scale(l, &df)?, &dh)?;
                per_lambda[i].push(field_r(r, combo.lip(), &lhs, &rhs)?);
                if l == 1.0 {
                    // a kink split between f and g can sit below both detection
                    // thresholds and still be detected in f + g
                    let t = r.tol(gradient_tolerance(combo.lip(), &lhs)) + kink_threshold(&f) + kink_threshold(&h);
                    for j in 0..r.grid.len() {
                        let x = r.grid.node(j);
                        let sum = interval(&lhs, x)?;
                        let bound = interval(&cf, x)?.minkowski_add(&interval(&ch, x)?);
                        inclusion += usize::from(!sum.subset_of(&bound, t));
                    }
                }
            }
        }
        for (l, items) in LAMBDAS.iter().zip(&per_lambda) {
            r.worst(format!("r(closure(l f + g), l df + dg)/l={l}"), items);
        }
        r.le("closure(f+g) within clarke f + clarke g (violating nodes)", inclusion as f64, 0.0);

        // strict inclusion at a kink: 0 for |x| - |x| against [-1,1] + [-1,1]
        let zero = closure(r, Expr::Leaf(Entry::Zero).class(r.grid)?.lower())?;
        let abs = clarke_gradient(&r.anchored(f64::abs, false)?)?;
        let neg = clarke_gradient(&r.anchored(|x| -x.abs(), false)?)?;
        let x0 = r.x0;
        let lhs = interval(&zero, x0)?;
        let rhs = interval(&abs, x0)?.minkowski_add(&interval(&neg, x0)?);
        let strict = lhs.subset_of(&rhs, 0.0) && rhs.width() > lhs.width();
        r.flag("{0} strictly inside [-2, 2] at the kink", strict, rhs.width() - lhs.width(), 0.0, format!("[{}, {}]", rhs.lo(), rhs.hi()));
        Ok(())
    });

    r.run("product and chain rules", |r| {
        for src in ["mul(abs, abs)", "mul(quadratic, ramp)", "compose(log, add(abs, const:1))", "compose(exp, neg-abs)"] {
            let e: Expr = src.parse()?;
            let (f, rule) = e.eval(r.grid)?;
            let direct = closure(r, f.lower())?;
            let (d, t) = field_r(r, f.lip(), &direct, &rule)?;
            r.le(format!("rule = closure/{src}"), d, t);
        }
        Ok(())
    });

    r.run("min and max", |r| {
        let named = [("abs", "const:0.5"), ("linear", "neg-abs"), ("quadratic", "linear:0.5"), ("softabs:8", "linear:0.5")];
        let mut pairs: Vec<(String, SampledFn<f64>, SampledFn<f64>)> = Vec::new();
        for (a, b) in named {
            let (f, h) = (a.parse::<Entry>()?.sample(r.grid)?, b.parse::<Entry>()?.sample(r.grid)?);
            if switches_at_an_end(&f, &h) {
                r.flag(format!("min/max rule/{a},{b}"), true, 0.0, 0.0, "pair switches within an end cell on this grid; skipped");
            } else {
                pairs.push((format!("{a},{b}"), f, h));
            }
        }
        let mut g = r.rng(31);
        for i in 0..MINMAX_PAIRS {
            let (pf, pg) = PiecewiseSmooth::draw_lattice_pair(&r.grid, &mut g);
            pairs.push((format!("random{i}"), pf.sample(r.grid)?, pg.sample(r.grid)?));
        }
        for which in [Which::Min, Which::Max] {
            let mut items = Vec::new();
            for (name, f, h) in &pairs {
                let (cf, ch) = (ClassPair::continuous(f.clone())?, ClassPair::continuous(h.clone())?);
                let m = if which == Which::Min { class_min(&cf, &ch)? } else { class_max(&cf, &ch)? };
                let rule = grad_minmax(&cf, &ch, &clarke_gradient(f)?, &clarke_gradient(h)?, which)?;
                let direct = clarke_gradient(m.lower())?;
                let (d, t) = field_r(r, m.lip(), &rule, &direct)?;
                if name.starts_with("random") {
                    items.push((d, t));
                } else {
                    r.le(format!("{which:?} rule = clarke/{name}").to_lowercase(), d, t);
                }
            }
            r.worst(format!("{which:?} rule = clarke/random").to_lowercase(), &items);
        }
        Ok(())
    });

    r.run("preclosedness", |r| {
        let mut g = r.rng(32);
        let mut fs = vec![("abs".to_string(), Entry::Abs.sample(r.grid)?), ("ramp".to_string(), Entry::Ramp.sample(r.grid)?)];
        fs.push(("random".into(), PiecewiseSmooth::draw(&r.grid, &[], &mut g).sample(r.grid)?));
        let a = r.cfg.schedule()?;
        let other = match a.kind {
            SmoothingKind::Mollifier => SmoothingKind::EnvelopeAverage,
            SmoothingKind::EnvelopeAverage => SmoothingKind::Mollifier,
        };
        let b = SmoothingSchedule::new(other, a.widths.clone(), a.max_stages)?;
        for (name, f) in &fs {
            let (da, db) = (closure_gradient(f, &a)?.0, closure_gradient(f, &b)?.0);
            let (d, t) = field_r(r, f.lip(), &da, &db)?;
            r.le(format!("two schedules agree/{name}"), d, 2.0 * t);
        }
        Ok(())
    });

    r.run("stationarity", |r| {
        let x0 = r.x0;
        type Shape = fn(f64) -> f64;
        let fixtures: [(&str, Shape, Extremum); 2] = [("abs", f64::abs, Extremum::Min), ("neg-abs", |x| -x.abs(), Extremum::Max)];
        for (entry, shape, want) in fixtures {
            let f = r.anchored(shape, false)?;
            let (kind, ok) = stationarity_check(&ClassPair::continuous(f.clone())?, &clarke_gradient(&f)?, x0)?;
            r.flag(format!("0 in gradient at the extremum/{entry}"), ok && kind == want, f64::from(u8::from(!ok)), 0.0, format!("{kind:?}"));
        }
        Ok(())
    });

    r.run("limit exchange", |r| {
        let sign = r.sign()?;
        let mut seq = Vec::new();
        let mut dist = Vec::new();
        for p in 2..=10 {
            let n = f64::from(1u32 << p);
            let f = r.anchored(move |x| (x * x + 1.0 / (n * n)).sqrt(), false)?;
            let d = clarke_gradient(&f)?;
            dist.push(r_metric(d.class(), &sign, &r.cfg.ks)?.value);
            seq.push((ClassPair::continuous(f)?, d));
        }
        let t = r.tol(tol_grad(1.0, r.h()));
        let monotone = dist.windows(2).all(|w| w[1] <= w[0]);
        let last = *dist.last().expect("nonempty");
        r.flag("r(d softabs_n, sign) decreases to within 5 tol", monotone && last <= 5.0 * t, last, 5.0 * t, format!("{dist:?}"));
        let (f, d) = limit_exchange(&seq, r.grid.node(r.grid.len() - 1))?;
        let clarke = clarke_gradient(f.lower())?;
        let tt = r.tol(gradient_tolerance(f.lip(), &clarke));
        r.le("recovered gradient = clarke of the limit", field_node_distance(&d, &clarke)?, tt);
        Ok(())
    });

    r.run("plane demo", |r| {
        let p = plane_demo(257)?;
        r.le("2-D sweep envelope against the exact cone", p.cone_error, r.tol(p.cone_bound));
        r.le("2-D sweep envelope against the brute-force oracle", p.oracle_error, r.tol(p.oracle_bound));
        r.le("2-D quadrant gradient against the exact hulls", p.gradient_error, r.tol(p.gradient_tol));
        Ok(())
    });
}

/// Whether `f − g` changes sign near either end, or touches zero at an end
/// node from one side. One-sided quotients there cannot see the switch.
fn switches_at_an_end(f: &SampledFn<f64>, g: &SampledFn<f64>) -> bool {
    let d: Vec<f64> = f.values().iter().zip(g.values()).map(|(a, b)| a - b).collect();
    let edge = (d.len() / 25).max(2) + 1;
    let bad = |w: &[f64]| w.windows(2).any(|p| p[0] * p[1] < 0.0) || (w[0] == 0.0 && w.iter().any(|&v| v != 0.0));
    let tail: Vec<f64> = d.iter().rev().take(edge).copied().collect();
    bad(&d[..edge]) || bad(&tail)
}

fn interval(d: &GradientField<f64>, x: f64) -> Result<setcalc::IntervalValue<f64>> {
    d.value_at(x)?.as_interval().ok_or_else(|| CliError::Failed("scalar field expected".into()))
}

pub(crate) fn completion_suite(r: &mut Runner) {
    r.run("tower", |r| {
        let tower = LipschitzTower::new(r.grid, setcalc::completion::DEFAULT_LEVELS)?;
        let samples = tower.samples(r.cfg.seed)?;
        let rep = verify_tower(&tower, &samples)?;
        let conditions = [
            (Condition::Betweenness, "dense betweenness"),
            (Condition::MetricMonotonicity, "metric monotonicity"),
            (Condition::MonotoneCauchy, "monotone sequences are Cauchy"),
            (Condition::UniformContinuity, "projections uniformly continuous"),
            (Condition::Sample, "sample chains monotone"),
        ];
        for (i, (c, name)) in conditions.iter().enumerate() {
            let n = rep.violations.iter().filter(|v| v.condition == *c).count();
            let note = rep.checked.get(i).map(|k| format!("{k} checked")).unwrap_or_default();
            r.flag(format!("lipschitz tower/{name} (violations)"), n == 0, n as f64, 0.0, note);
        }
        let bad = verify_tower(&DiscreteMetricTower(tower.clone()), &samples)?;
        let n = bad.violations.iter().filter(|v| v.condition == Condition::MonotoneCauchy).count();
        r.flag("discrete-metric fixture fails the Cauchy condition", n > 0, n as f64, 0.0, "violations expected");
        Ok(())
    });

    r.run("density and limits", |r| {
        let tower = LipschitzTower::new(r.grid, setcalc::completion::DEFAULT_LEVELS)?;
        let tol = r.tol(tower.tolerance());
        let sign = tower.class_element(&r.sign()?)?;
        // continuous node data meet a jump only up to about two cells
        let floor = 2.0 * r.h();
        for eps in [0.2, 0.1, 0.05] {
            if eps <= floor {
                r.flag(format!("density round trip for sign/eps={eps}"), true, floor, eps, "below the grid resolution 2h; skipped");
                continue;
            }
            let a = density_approx(&tower, &sign, eps)?;
            r.flag(format!("density round trip for sign/eps={eps}"), a.distance.upper() < eps, a.distance.upper(), eps, format!("level {}", a.level));
        }
        let depth = sign.depth();
        let lowers: Vec<_> = (0..depth).map(|k| embed(&tower, sign.lower(k), depth)).collect::<setcalc::Result<_>>()?;
        let lim = cauchy_limit(&tower, &lowers, tol)?;
        r.le("cauchy_limit reproduces the embedded limit", rho_tilde(&tower, &lim, &sign)?.upper(), tol);
        let uppers: Vec<_> = (0..depth).map(|k| embed(&tower, sign.upper(k), depth)).collect::<setcalc::Result<_>>()?;
        let a: Vec<_> = lowers.iter().zip(&uppers).flat_map(|(l, u)| [l.clone(), u.clone()]).collect();
        let b: Vec<_> = lowers.iter().zip(&uppers).flat_map(|(l, u)| [u.clone(), l.clone()]).collect();
        let (la, lb) = (cauchy_limit(&tower, &a, tol)?, cauchy_limit(&tower, &b, tol)?);
        r.le("limits of two interleavings coincide", rho_tilde(&tower, &la, &lb)?.upper(), tol);
        Ok(())
    });

    r.run("completion metric against s", |r| {
        let tower = LipschitzTower::new(r.grid, setcalc::completion::DEFAULT_LEVELS)?;
        let cs = random_classes(r, 40, 6)?;
        let mut items = Vec::new();
        for p in cs.chunks(2) {
            let (x, y) = (tower.class_element(&p[0])?, tower.class_element(&p[1])?);
            let rt = rho_tilde(&tower, &x, &y)?;
            let s = s_metric(&p[0], &p[1], &r.cfg.ks)?;
            items.push(((rt.value - s.value).abs(), r.tol(rt.tail_bound + s.truncation_bound + tower.tolerance())));
        }
        r.worst("|rho~ - s| on random classes", &items);
        Ok(())
    });
}

/// Closed-graph and graph-to-metric checkers on their example families,
/// plus one fixture each whose premises fail.
pub(crate) fn graph_limit_checks(r: &mut Runner) -> Result<()> {
    let grid = r.grid;
    let ks = r.cfg.ks.clone();
    let x0 = r.x0;
    let j0 = grid.nearest(x0);
    let span = r.span;
    let sign = r.sign()?;
    let vsign = VectorClass::scalar(sign.clone());
    let terms = 8;
    let steps: Vec<f64> = (1..=terms).map(|n| x0 + 0.5 * span / n as f64).collect();

    let outcome = |r: &mut Runner, name: &str, res: setcalc::Result<bool>, want_violation: bool| {
        let (ok, note) = match (&res, want_violation) {
            (Ok(v), false) => (*v, format!("returned {v}")),
            (Err(Error::HypothesisViolated(m)), true) => (true, format!("hypothesis violated: {m}")),
            (other, _) => (false, format!("{other:?}")),
        };
        let note: String = note.chars().take(160).collect();
        r.flag(name, ok, f64::from(u8::from(!ok)), 0.0, note);
    };

    let same = vec![vsign.clone(); terms];
    let res = check_graph_limit(&same, &vsign, &steps, x0, &vec![vec![1.0]; terms], &[1.0], &ks, MetricKind::S);
    outcome(r, "graph limit/sign with x_n -> 0, eta = 1", res, false);

    let c = VectorClass::scalar(ClassPair::constant(grid, 0.5));
    let res = check_graph_limit(&vec![c.clone(); terms], &c, &steps, x0, &vec![vec![0.5]; terms], &[0.5], &ks, MetricKind::S);
    outcome(r, "graph limit/constant", res, false);

    let raw = r.anchored(|x| if x == 0.0 { 0.0 } else { x.signum() }, true)?;
    let mut moll = Vec::new();
    let mut etas = Vec::new();
    for n in 1..=terms {
        let m = ClassPair::continuous(mollify(&raw, span / (4.0 * n as f64), SmoothingKind::Mollifier)?)?;
        etas.push(vec![m.lower().values()[j0]]);
        moll.push(VectorClass::scalar(m));
    }
    let eta = [0.0];
    let res = check_graph_limit(&moll, &vsign, &vec![x0; terms], x0, &etas, &eta, &ks, MetricKind::S);
    outcome(r, "graph limit/mollified sign", res, false);

    let res = check_graph_limit(&same, &vsign, &steps, x0, &vec![vec![2.0]; terms], &[2.0], &ks, MetricKind::S);
    outcome(r, "graph limit/eta outside the values (adversarial)", res, true);

    let clamp = |m: f64| SampledFn::sample(grid, move |x| (m * (x - x0)).clamp(-1.0, 1.0), &[]);
    let ramps: Vec<_> = (1..=10).map(|p| clamp(f64::from(1u32 << p))).collect::<setcalc::Result<_>>()?;
    outcome(r, "graph-to-s/clamp(n x) -> sign", check_graph_to_metric(&sign, &ramps, &ks), false);

    let one = ClassPair::constant(grid, 1.0);
    let ones = vec![one.lower().clone(); 4];
    outcome(r, "graph-to-s/constant", check_graph_to_metric(&one, &ones, &ks), false);

    let ramp = canonical_pair(&r.anchored(|x| x.max(0.0), false)?)?;
    let shifted: Vec<_> = (1..=8)
        .map(|p| SampledFn::sample(grid, move |x| (x - x0 - span / f64::from(1u32 << p)).max(0.0), &[]))
        .collect::<setcalc::Result<_>>()?;
    outcome(r, "graph-to-s/shifted ramp", check_graph_to_metric(&ramp, &shifted, &ks), false);

    let zero = ClassPair::zero(grid);
    outcome(r, "graph-to-s/steep ramps against zero (adversarial)", check_graph_to_metric(&zero, &ramps, &ks), true);
    Ok(())
}
