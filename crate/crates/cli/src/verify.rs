//! Property-suite runner. Every check reports a measured value against a
//! tolerance; automatic tolerances scale with `h` and the Lipschitz data of
//! the inputs and are multiplied by the configured `tol` factor.

use std::fmt::Write as _;

use serde::Serialize;
use setcalc::random::{piecewise_lipschitz, rng};
use setcalc::{
    canonical_pair, class_add, class_max, class_min, class_mul, clarke_gradient, graph_hausdorff,
    delta_metric, lip_lower_envelope, lip_upper_envelope, envelope_family, envelope_oracle, lsc_hull, noise_floor,
    r_metric, s_metric, tail_converges, tol_rep, usc_hull, value_at, ClassPair, Grid1D, IntervalValue, MetricKind,
    SampledFn, Side,
};

use crate::catalog::{catalog, Entry};
use crate::config::{Format, GridSpec, RunConfig};
use crate::error::{CliError, Result};

mod calculus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Core,
    Envelope,
    Metric,
    Gradient,
    Completion,
    All,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Core => "core",
            Suite::Envelope => "envelope",
            Suite::Metric => "metric",
            Suite::Gradient => "gradient",
            Suite::Completion => "completion",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    /// `None` when the computation itself failed.
    pub measured: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub grid: GridSpec,
    pub seed: u64,
    pub tol_scale: f64,
    pub checks: Vec<Check>,
    pub passed: usize,
    pub failed: usize,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut s = format!(
                    "# suite={} grid={},{},{} seed={} tol_scale={} passed={} failed={}\nsuite,name,measured,tolerance,passed,note\n",
                    self.suite.name(),
                    self.grid.a,
                    self.grid.b,
                    self.grid.n,
                    self.seed,
                    self.tol_scale,
                    self.passed,
                    self.failed
                );
                for c in &self.checks {
                    let m = c.measured.map(crate::commands::num).unwrap_or_default();
                    let note = c.note.as_deref().unwrap_or("").replace('"', "'");
                    let _ = writeln!(s, "{},{},{},{},{},\"{}\"", c.suite, c.name, m, crate::commands::num(c.tolerance), c.passed, note);
                }
                s
            }
        }
    }
}

/// Collects checks for one suite.
pub(crate) struct Runner<'a> {
    pub cfg: &'a RunConfig,
    pub grid: Grid1D<f64>,
    /// Node where the fixed examples put their kink or jump: the interior
    /// node nearest 0, or nearest the midpoint when 0 is outside the domain.
    pub x0: f64,
    /// Distance from `x0` to the nearer end.
    pub span: f64,
    suite: &'static str,
    pub checks: Vec<Check>,
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a RunConfig, suite: &'static str) -> Result<Self> {
        let grid = cfg.grid()?;
        let (a, b) = (grid.a(), grid.b());
        let target = if a < 0.0 && 0.0 < b { 0.0 } else { 0.5 * (a + b) };
        let x0 = grid.node(grid.nearest(target).clamp(1, grid.len() - 2));
        Ok(Self { cfg, grid, x0, span: (x0 - a).min(b - x0), suite, checks: Vec::new() })
    }

    /// Samples `f(x - x0)`, with a jump at `x0` when `jump` is set.
    pub fn anchored(&self, f: impl Fn(f64) -> f64, jump: bool) -> Result<SampledFn<f64>> {
        let x0 = self.x0;
        let at: &[f64] = if jump { &[x0] } else { &[] };
        Ok(SampledFn::sample(self.grid, |x| f(x - x0), at)?)
    }

    /// The sign class with its jump at `x0`.
    pub fn sign(&self) -> Result<ClassPair<f64>> {
        Ok(canonical_pair(&self.anchored(f64::signum, true)?)?)
    }

    /// Applies the configured tolerance factor.
    pub fn tol(&self, t: f64) -> f64 {
        t * self.cfg.tol
    }

    pub fn h(&self) -> f64 {
        self.grid.spacing()
    }

    /// Seeded generator, distinct per `salt` so checks do not share draws.
    pub fn rng(&self, salt: u64) -> setcalc::random::SeededRng {
        rng(self.cfg.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt)
    }

    /// Passes when `measured ≤ tolerance`; `tolerance` is taken as given.
    pub fn le(&mut self, name: impl Into<String>, measured: f64, tolerance: f64) {
        let passed = measured <= tolerance;
        self.push(name, Some(measured), tolerance, passed, None);
    }

    pub fn flag(&mut self, name: impl Into<String>, passed: bool, measured: f64, tolerance: f64, note: impl Into<String>) {
        let note = note.into();
        self.push(name, Some(measured), tolerance, passed, (!note.is_empty()).then_some(note));
    }

    /// Worst item of a batch of `(measured, tolerance)` pairs by excess.
    pub fn worst(&mut self, name: impl Into<String>, items: &[(f64, f64)]) {
        match items.iter().copied().max_by(|a, b| (a.0 - a.1).total_cmp(&(b.0 - b.1))) {
            Some((m, t)) => {
                let note = format!("worst of {}", items.len());
                self.flag(name, m <= t, m, t, note)
            }
            None => self.flag(name, false, f64::NAN, 0.0, "no cases"),
        }
    }

    fn push(&mut self, name: impl Into<String>, measured: Option<f64>, tolerance: f64, passed: bool, note: Option<String>) {
        let measured = measured.filter(|m| m.is_finite());
        self.checks.push(Check { suite: self.suite, name: name.into(), measured, tolerance, passed, note });
    }

    /// Runs a group of checks; an error becomes a failing check named `name`.
    pub fn run(&mut self, name: &str, body: impl FnOnce(&mut Self) -> Result<()>) {
        if let Err(e) = body(self) {
            self.push(name, None, 0.0, false, Some(e.to_string()));
        }
    }
}

pub fn verify(cfg: &RunConfig, suite: Suite) -> Result<VerifyReport> {
    let suites: &[Suite] = match suite {
        Suite::All => &[Suite::Core, Suite::Envelope, Suite::Metric, Suite::Gradient, Suite::Completion],
        s => std::slice::from_ref(match s {
            Suite::Core => &Suite::Core,
            Suite::Envelope => &Suite::Envelope,
            Suite::Metric => &Suite::Metric,
            Suite::Gradient => &Suite::Gradient,
            _ => &Suite::Completion,
        }),
    };
    let mut checks = Vec::new();
    for &s in suites {
        let mut r = Runner::new(cfg, s.name())?;
        match s {
            Suite::Core => core_suite(&mut r),
            Suite::Envelope => envelope_suite(&mut r),
            Suite::Metric => metric_suite(&mut r),
            Suite::Gradient => calculus::gradient_suite(&mut r),
            _ => calculus::completion_suite(&mut r),
        }
        checks.append(&mut r.checks);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    Ok(VerifyReport { suite, grid: cfg.grid, seed: cfg.seed, tol_scale: cfg.tol, passed: checks.len() - failed, failed, checks })
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Catalog classes that exist on the configured grid.
pub(crate) fn catalog_classes(grid: Grid1D<f64>) -> Vec<(String, ClassPair<f64>)> {
    catalog()
        .iter()
        .map(|e| match e.name {
            "const" => "const:0.5".to_string(),
            "mollified" => "mollified:0.1:abs".to_string(),
            n => n.to_string(),
        })
        .filter_map(|name| {
            let entry: Entry = name.parse().ok()?;
            entry.class(grid).ok().map(|c| (name, c))
        })
        .collect()
}

fn random_classes(r: &Runner, salt: u64, count: usize) -> Result<Vec<ClassPair<f64>>> {
    let mut g = r.rng(salt);
    (0..count).map(|_| Ok(canonical_pair(&piecewise_lipschitz(r.grid, &mut g)?)?)).collect()
}

/// Replaces the values at jump nodes by far-off ones.
fn perturb_jumps(f: &SampledFn<f64>) -> Result<SampledFn<f64>> {
    let mut v = f.values().to_vec();
    for &j in f.jumps() {
        v[j] += 3.0 * (j as f64 * 0.37).sin() + 1.5;
    }
    Ok(SampledFn::measured(*f.grid(), v, f.jumps().to_vec())?)
}

/// Node-wise sup distance off both jump sets: classes agree almost
/// everywhere, while merged jump sets move representatives at jump nodes.
fn off_jumps(a: &ClassPair<f64>, b: &ClassPair<f64>) -> f64 {
    let (ma, mb) = (a.lower().jump_mask(), b.lower().jump_mask());
    (0..ma.len())
        .filter(|&i| !ma[i] && !mb[i])
        .map(|i| (a.lower().values()[i] - b.lower().values()[i]).abs().max((a.upper().values()[i] - b.upper().values()[i]).abs()))
        .fold(0.0, f64::max)
}

fn class_tol(r: &Runner, lip: f64) -> f64 {
    r.tol(tol_rep(lip, r.h()))
}

fn core_suite(r: &mut Runner) {
    r.run("exact_values", |r| {
        let (g, x0) = (r.grid, r.x0);
        // exact at x0 = 0; elsewhere x - x0 rounds, so allow the noise floor
        let exact = if x0 == 0.0 { 0.0 } else { noise_floor::<f64>() };
        let sign = r.sign()?;
        let v = value_at(&sign, x0)?;
        r.le("value_at(sign, x0) = [-1, 1]", v.hausdorff(&IntervalValue::new(-1.0, 1.0)), 0.0);
        let z = value_at(&Entry::Zero.class(g)?, x0)?;
        r.le("value_at(zero, x0) = {0}", z.hausdorff(&IntervalValue::point(0.0)), 0.0);
        let d = clarke_gradient(&r.anchored(f64::abs, false)?)?;
        r.le("clarke(abs) = sign class", d.class().sup_distance(&sign), exact);
        let f1 = setcalc::GradientField::scalar(sign.clone());
        let sum = setcalc::grad_add(&f1, &setcalc::grad_scale(-1.0, &f1)?)?;
        let zero = ClassPair::zero(g);
        let at0 = sum.value_at(x0)?.as_interval().map_or(f64::INFINITY, |v| v.hausdorff(&IntervalValue::point(0.0)));
        r.le("f_1 + (-f_1) = zero class", sum.class().sup_distance(&zero).max(at0), 0.0);
        Ok(())
    });

    r.run("hulls", |r| {
        let fs = random_classes(r, 1, 12)?;
        let mut g = r.rng(1);
        let raw: Vec<SampledFn<f64>> = (0..12).map(|_| piecewise_lipschitz(r.grid, &mut g)).collect::<setcalc::Result<_>>()?;
        let (mut idem, mut order) = (0.0f64, 0usize);
        for f in &raw {
            let (lo, hi) = (lsc_hull(f), usc_hull(f));
            idem = idem.max(sup_diff(lsc_hull(&lo).values(), lo.values())).max(sup_diff(usc_hull(&hi).values(), hi.values()));
            order += (0..f.len()).filter(|&i| !(lo.values()[i] <= f.values()[i] && f.values()[i] <= hi.values()[i])).count();
        }
        r.le("hull idempotence", idem, 0.0);
        r.le("lsc_hull <= f <= usc_hull (violating nodes)", order as f64, 0.0);

        let relation = |c: &ClassPair<f64>| {
            sup_diff(usc_hull(c.lower()).values(), c.upper().values()).max(sup_diff(lsc_hull(c.upper()).values(), c.lower().values()))
        };
        for (name, c) in catalog_classes(r.grid) {
            let t = class_tol(r, c.lip());
            r.le(format!("hull relation/{name}"), relation(&c), t);
        }
        let items: Vec<_> = fs.iter().map(|c| (relation(c), class_tol(r, c.lip()))).collect();
        r.worst("hull relation/random", &items);
        Ok(())
    });

    r.run("representative independence", |r| {
        let mut g = r.rng(2);
        let other = canonical_pair(&piecewise_lipschitz(r.grid, &mut g)?)?;
        let mut worst = 0.0f64;
        let mut cases = 0;
        for _ in 0..16 {
            let f = piecewise_lipschitz(r.grid, &mut g)?;
            if f.jumps().is_empty() {
                continue;
            }
            cases += 1;
            let (a, b) = (canonical_pair(&f)?, canonical_pair(&perturb_jumps(&f)?)?);
            worst = worst.max(a.sup_distance(&b));
            for &j in f.jumps() {
                let x = r.grid.node(j);
                worst = worst.max(a.value_at(x)?.hausdorff(&b.value_at(x)?));
            }
            for op in [class_add, class_mul, class_min, class_max] {
                worst = worst.max(op(&a, &other)?.sup_distance(&op(&b, &other)?));
            }
        }
        let note = format!("{cases} functions with jumps");
        r.flag("perturbing jump values leaves the class unchanged", worst <= noise_floor::<f64>() && cases > 0, worst, noise_floor(), note);
        Ok(())
    });

    r.run("ring and lattice laws", |r| {
        let fs = random_classes(r, 3, 12)?;
        type Law = fn(&ClassPair<f64>, &ClassPair<f64>, &ClassPair<f64>) -> setcalc::Result<(ClassPair<f64>, ClassPair<f64>)>;
        let laws: [(&str, Law); 7] = [
            ("add associative", |f, g, k| Ok((class_add(&class_add(f, g)?, k)?, class_add(f, &class_add(g, k)?)?))),
            ("mul associative", |f, g, k| Ok((class_mul(&class_mul(f, g)?, k)?, class_mul(f, &class_mul(g, k)?)?))),
            ("add commutative", |f, g, _| Ok((class_add(f, g)?, class_add(g, f)?))),
            ("mul commutative", |f, g, _| Ok((class_mul(f, g)?, class_mul(g, f)?))),
            ("distributive", |f, g, k| Ok((class_mul(f, &class_add(g, k)?)?, class_add(&class_mul(f, g)?, &class_mul(f, k)?)?))),
            ("absorption min/max", |f, g, _| Ok((class_min(f, &class_max(f, g)?)?, f.clone()))),
            ("absorption max/min", |f, g, _| Ok((class_max(f, &class_min(f, g)?)?, f.clone()))),
        ];
        for (name, law) in laws {
            let mut items = Vec::new();
            for t in fs.chunks(3) {
                let (a, b) = law(&t[0], &t[1], &t[2])?;
                items.push((off_jumps(&a, &b), class_tol(r, a.lip().max(b.lip()))));
            }
            r.worst(name, &items);
        }
        Ok(())
    });

    r.run("integral equality", |r| {
        let fs = random_classes(r, 4, 12)?;
        let h = r.h();
        let items: Vec<_> = fs
            .iter()
            .map(|c| {
                let m = (c.upper().integral() - c.lower().integral()).abs();
                (m, r.tol(2.0 * c.bound() * h * c.jumps().len() as f64 + noise_floor::<f64>()))
            })
            .collect();
        r.worst("integrals of lower and upper agree", &items);
        Ok(())
    });
}

fn envelope_suite(r: &mut Runner) {
    r.run("oracle", |r| {
        let grid = if r.grid.len() <= 2000 { r.grid } else { Grid1D::new(r.grid.a(), r.grid.b(), 2000)? };
        let mut g = r.rng(10);
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let f = piecewise_lipschitz(grid, &mut g)?;
            for k in [0.5, 1.0, 4.0, 32.0] {
                worst = worst.max(sup_diff(lip_lower_envelope(&f, k)?.values(), envelope_oracle(&f, k, Side::Lower)?.values()));
                worst = worst.max(sup_diff(lip_upper_envelope(&f, k)?.values(), envelope_oracle(&f, k, Side::Upper)?.values()));
            }
        }
        let t = r.tol(1e-9);
        r.le("fast envelopes match the quadratic oracle", worst, t);
        Ok(())
    });

    r.run("projection laws", |r| {
        let mut g = r.rng(11);
        let (mut idem, mut nest) = (0.0f64, 0.0f64);
        for _ in 0..8 {
            let f = piecewise_lipschitz(r.grid, &mut g)?;
            for k in [1.0, 3.0, 16.0] {
                let e = lip_lower_envelope(&f, k)?;
                idem = idem.max(sup_diff(lip_lower_envelope(&e, k)?.values(), e.values()));
                let coarse = lip_lower_envelope(&lip_lower_envelope(&f, 4.0 * k)?, k)?;
                nest = nest.max(sup_diff(coarse.values(), e.values()));
                let u = lip_upper_envelope(&f, k)?;
                idem = idem.max(sup_diff(lip_upper_envelope(&u, k)?.values(), u.values()));
            }
        }
        let t = r.tol(1e-9);
        r.le("envelope is idempotent", idem, t);
        r.le("envelope_k of envelope_k' is envelope_k (k' >= k)", nest, t);
        Ok(())
    });

    r.run("sandwich and monotonicity", |r| {
        let mut classes: Vec<ClassPair<f64>> = random_classes(r, 12, 8)?;
        classes.extend(catalog_classes(r.grid).into_iter().map(|(_, c)| c));
        let mut bad = 0usize;
        for c in &classes {
            let fam = envelope_family(c, &r.cfg.ks)?;
            for j in 0..fam.len() {
                let (l, u) = (fam.lowers[j].values(), fam.uppers[j].values());
                bad += l.iter().zip(c.lower().values()).filter(|(a, b)| a > b).count();
                bad += u.iter().zip(c.upper().values()).filter(|(a, b)| a < b).count();
                if j > 0 {
                    bad += l.iter().zip(fam.lowers[j - 1].values()).filter(|(a, b)| a < b).count();
                    bad += u.iter().zip(fam.uppers[j - 1].values()).filter(|(a, b)| a > b).count();
                }
            }
        }
        r.le("f_k^- <= f <= f_k^+, monotone in k (violating nodes)", bad as f64, 0.0);
        Ok(())
    });

    r.run("contraction", |r| {
        let mut g = r.rng(13);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..8 {
            let (f, h) = (piecewise_lipschitz(r.grid, &mut g)?, piecewise_lipschitz(r.grid, &mut g)?);
            let d = sup_diff(f.values(), h.values());
            for k in [1.0, 4.0, 64.0] {
                let dl = sup_diff(lip_lower_envelope(&f, k)?.values(), lip_lower_envelope(&h, k)?.values());
                let du = sup_diff(lip_upper_envelope(&f, k)?.values(), lip_upper_envelope(&h, k)?.values());
                worst = worst.max(dl.max(du) - d);
            }
        }
        let t = r.tol(noise_floor::<f64>());
        r.le("sup |f_k - g_k| - sup |f - g|", worst, t);
        Ok(())
    });

    r.run("gap decay", |r| {
        for (name, c) in catalog_classes(r.grid) {
            let fam = envelope_family(&c, &r.cfg.ks)?;
            gap_check(r, &format!("gap decay/{name}"), &fam.gaps, c.lip(), 0.0);
        }
        Ok(())
    });

    r.run("sign gap law", |r| {
        // the nearest point sits 2k/(k^2+1) from the jump; k where that
        // falls outside the domain see a truncated ramp
        let ks: Vec<f64> = [1.0, 2.0, 4.0, 8.0, 16.0].into_iter().filter(|&k| 2.0 * k / (k * k + 1.0) <= r.span).collect();
        if ks.is_empty() {
            r.flag("sign gaps against 2/sqrt(k^2+1)", true, 0.0, 0.0, "no k fits the domain; skipped");
            return Ok(());
        }
        let fam = envelope_family(&r.sign()?, &ks)?;
        let err = fam.gaps.iter().zip(&ks).fold(0.0f64, |m, (g, k)| m.max((g - 2.0 / (k * k + 1.0f64).sqrt()).abs()));
        let t = r.tol(3.0 * r.h());
        r.flag("sign gaps against 2/sqrt(k^2+1)", err <= t, err, t, format!("k in {ks:?}"));
        Ok(())
    });
}

/// A sequence tending to zero: the tail test with `tol_rep(max(lip, 1), h)`
/// plus `floor`.
pub(crate) fn gap_check(r: &mut Runner, name: &str, seq: &[f64], lip: f64, floor: f64) {
    let t = class_tol(r, lip.max(1.0)) + r.tol(floor);
    let peak = seq.iter().copied().fold(0.0, f64::max);
    let last = seq.last().copied().unwrap_or(f64::NAN);
    let ok = tail_converges(seq, t);
    r.flag(name, ok, last, t.max(0.25 * peak), "tail test: nonincreasing second half, last below tol or peak/4");
}

/// Like [`gap_check`] for sequences that converge without being monotone:
/// the second half stays below its first term, and the last term is small.
fn settle_check(r: &mut Runner, name: &str, seq: &[f64], lip: f64, floor: f64) {
    let t = class_tol(r, lip.max(1.0)) + r.tol(floor);
    let peak = seq.iter().copied().fold(0.0, f64::max);
    let tail = &seq[seq.len() / 2..];
    let last = seq.last().copied().unwrap_or(f64::NAN);
    let ok = tail.iter().all(|&v| v <= tail[0] + t) && (last <= t || last <= 0.25 * peak);
    r.flag(name, ok, last, t.max(0.25 * peak), "settling test: second half below its start, last below tol or peak/4");
}

/// Resolution floor between a class with jumps and continuous functions:
/// they can only meet it up to the jump cells, `2h·Σ(1 + |J|)`.
fn jump_floor(c: &ClassPair<f64>) -> f64 {
    let h = c.grid().spacing();
    c.jumps()
        .iter()
        .map(|&j| {
            let (l, r) = c.limits_at(j);
            2.0 * h * (1.0 + (r - l).abs())
        })
        .sum()
}

fn metric_suite(r: &mut Runner) {
    r.run("axioms", |r| {
        let classes = random_classes(r, 20, 6)?;
        let conts: Vec<SampledFn<f64>> = classes
            .iter()
            .map(|c| SampledFn::continuous(r.grid, c.lower().values().to_vec()))
            .collect::<setcalc::Result<_>>()?;
        let ks = r.cfg.ks.clone();
        type Cont = fn(&SampledFn<f64>, &SampledFn<f64>) -> setcalc::Result<f64>;
        let pointwise: [(&str, Cont); 2] = [("h", graph_hausdorff), ("delta", delta_metric)];
        for (name, d) in pointwise {
            let (mut sym, mut tri, mut id) = (0.0f64, f64::NEG_INFINITY, 0.0f64);
            for t in conts.chunks(3) {
                let (a, b, c) = (&t[0], &t[1], &t[2]);
                sym = sym.max((d(a, b)? - d(b, a)?).abs());
                tri = tri.max(d(a, c)? - d(a, b)? - d(b, c)?);
                id = id.max(d(a, a)?);
            }
            r.le(format!("{name} symmetric"), sym, 0.0);
            r.le(format!("{name} triangle excess"), tri, r.tol(1e-9));
            r.le(format!("{name}(f, f)"), id, class_tol(r, 1.0));
        }
        for kind in [MetricKind::S, MetricKind::R] {
            let name = if kind == MetricKind::S { "s" } else { "r" };
            let d = |a: &ClassPair<f64>, b: &ClassPair<f64>| setcalc::class_metric(a, b, &ks, kind).map(|m| m.value);
            let (mut sym, mut tri, mut id) = (0.0f64, f64::NEG_INFINITY, Vec::new());
            for t in classes.chunks(3) {
                let (a, b, c) = (&t[0], &t[1], &t[2]);
                sym = sym.max((d(a, b)? - d(b, a)?).abs());
                tri = tri.max(d(a, c)? - d(a, b)? - d(b, c)?);
                let twin = canonical_pair(&perturb_jumps(a.lower())?)?;
                id.push((d(a, &twin)?, class_tol(r, a.lip().max(1.0))));
            }
            r.le(format!("{name} symmetric"), sym, 0.0);
            r.le(format!("{name} triangle excess"), tri, r.tol(1e-9));
            r.worst(format!("{name} between representatives of one class"), &id);
        }
        Ok(())
    });

    r.run("completeness and inclusion", |r| {
        let mut targets = vec![("sign".to_string(), r.sign()?)];
        targets.extend(random_classes(r, 21, 2)?.into_iter().enumerate().map(|(i, c)| (format!("random{i}"), c)));
        let ks = r.cfg.ks.clone();
        let mut incl = f64::NEG_INFINITY;
        for (name, f) in &targets {
            let seq: Vec<ClassPair<f64>> = ks
                .iter()
                .map(|&k| ClassPair::continuous(lip_lower_envelope(f.lower(), k)?))
                .collect::<setcalc::Result<_>>()?;
            let ds: Vec<f64> = seq.iter().map(|c| s_metric(c, f, &ks).map(|m| m.value)).collect::<setcalc::Result<_>>()?;
            let dr: Vec<f64> = seq.iter().map(|c| r_metric(c, f, &ks).map(|m| m.value)).collect::<setcalc::Result<_>>()?;
            gap_check(r, &format!("s-Cauchy sequence converges/{name}"), &ds, f.lip(), jump_floor(f));
            gap_check(r, &format!("r-Cauchy sequence converges/{name}"), &dr, f.lip(), jump_floor(f));
            incl = ds.iter().zip(&dr).fold(incl, |m, (s, rr)| m.max(s - rr));
            // the termwise limit of the envelope families is the family of f
            let last = seq.last().expect("nonempty schedule");
            let mut fam = 0.0f64;
            for &k in &ks {
                fam = fam.max(sup_diff(lip_lower_envelope(last.lower(), k)?.values(), lip_lower_envelope(f.lower(), k)?.values()));
            }
            r.le(format!("limit family is the termwise limit/{name}"), fam, r.tol(1e-9));
        }
        r.le("s <= r on every tested term", incl, 0.0);
        Ok(())
    });

    r.run("density", |r| {
        let ks = r.cfg.ks.clone();
        for (name, f) in catalog_classes(r.grid) {
            let ds: Vec<f64> = ks
                .iter()
                .map(|&k| s_metric(&ClassPair::continuous(lip_lower_envelope(f.lower(), k)?)?, &f, &ks).map(|m| m.value))
                .collect::<setcalc::Result<_>>()?;
            gap_check(r, &format!("continuous envelopes approach/{name}"), &ds, f.lip(), jump_floor(&f));
        }
        Ok(())
    });

    r.run("sums of envelopes", |r| {
        let cs = random_classes(r, 22, 6)?;
        let ks = r.cfg.ks.clone();
        for (i, p) in cs.chunks(2).enumerate() {
            let (f, g) = (&p[0], &p[1]);
            let target = class_add(f, g)?;
            let ds: Vec<f64> = ks
                .iter()
                .map(|&k| {
                    let lo = lip_lower_envelope(f.lower(), k)?;
                    let up = lip_upper_envelope(g.upper(), k)?;
                    let sum = SampledFn::continuous(r.grid, lo.values().iter().zip(up.values()).map(|(a, b)| a + b).collect())?;
                    s_metric(&ClassPair::continuous(sum)?, &target, &ks).map(|m| m.value)
                })
                .collect::<setcalc::Result<_>>()?;
            settle_check(r, &format!("f_k^- + g_k^+ approaches f + g/pair{i}"), &ds, target.lip(), jump_floor(&target));
        }
        Ok(())
    });

    r.run("graph limits", calculus::graph_limit_checks);
}

pub fn run_verify(cfg: &RunConfig, suite: Suite) -> Result<crate::commands::Run> {
    let report = verify(cfg, suite)?;
    let body = report.render(cfg.format);
    let name = format!("verify.{}", cfg.format);
    let mut run = crate::commands::Run {
        files: vec![crate::commands::Artifact { name, body: body.clone() }],
        stdout: body,
        error: None,
    };
    if !report.ok() {
        run.error = Some(CliError::Failed(format!("{} of {} checks failed", report.failed, report.checks.len())));
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worst_reports_the_largest_excess() {
        let cfg = RunConfig::default();
        let mut r = Runner::new(&cfg, "core").unwrap();
        r.worst("x", &[(1.0, 2.0), (0.5, 0.1), (3.0, 5.0)]);
        let c = &r.checks[0];
        assert_eq!((c.measured, c.tolerance, c.passed), (Some(0.5), 0.1, false));
        r.run("boom", |_| Err(CliError::Failed("nope".into())));
        assert!(!r.checks[1].passed && r.checks[1].measured.is_none());
    }
}
