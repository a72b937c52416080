//! Named functions with closed forms, used by every subcommand.

use std::fmt;
use std::str::FromStr;

use setcalc::{canonical_pair, mollify, ClassPair, Grid1D, SampledFn, SmoothFn, SmoothingKind};

use crate::error::CliError;

const DEFAULT_MOLLIFY_WIDTH: f64 = 0.05;
const DEFAULT_SOFTABS_N: f64 = 16.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Entry {
    Abs,
    NegAbs,
    Sign,
    Zero,
    Const(f64),
    Linear(f64),
    Quadratic,
    Sinlog,
    Ramp,
    StepSum,
    /// `√(x² + n⁻²)`.
    SoftAbs(f64),
    Log,
    Exp,
    /// Triangular-kernel smoothing of a continuous entry at half-width `w`.
    Mollified(Box<Entry>, f64),
}

/// One line of `catalog` output.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EntryInfo {
    pub name: &'static str,
    pub params: &'static str,
    pub description: &'static str,
    pub closed_form_gradient: bool,
}

pub fn catalog() -> Vec<EntryInfo> {
    let e = |name, params, description, closed_form_gradient| EntryInfo { name, params, description, closed_form_gradient };
    vec![
        e("abs", "", "|x|", true),
        e("neg-abs", "", "-|x|", true),
        e("sign", "", "sign class f_1: -1, 1 with value [-1, 1] at 0", false),
        e("zero", "", "zero class f_2", true),
        e("const", ":c", "constant c", true),
        e("linear", "[:m]", "m·x, m = 1 by default", true),
        e("quadratic", "", "x²", true),
        e("sinlog", "", "x·sin(log|x|), oscillating slope at 0", true),
        e("ramp", "", "max(0, x)", true),
        e("step-sum", "", "H(x + 1/2) + H(x - 1/4)", false),
        e("softabs", "[:n]", "√(x² + n⁻²), n = 16 by default", true),
        e("log", "", "log x (positive domains)", true),
        e("exp", "", "exp x", true),
        e("mollified", "[:w]:<entry>", "triangular smoothing of a continuous entry, w = 0.05 by default", false),
    ]
}

impl FromStr for Entry {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let unknown = || CliError::UnknownFunction(s.to_string());
        let num = |t: &str| t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(unknown);
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        Ok(match (head, rest) {
            ("abs", None) => Entry::Abs,
            ("neg-abs", None) => Entry::NegAbs,
            ("sign", None) => Entry::Sign,
            ("zero", None) => Entry::Zero,
            ("const", Some(c)) => Entry::Const(num(c)?),
            ("linear", None) => Entry::Linear(1.0),
            ("linear", Some(m)) => Entry::Linear(num(m)?),
            ("quadratic", None) => Entry::Quadratic,
            ("sinlog", None) => Entry::Sinlog,
            ("ramp", None) => Entry::Ramp,
            ("step-sum", None) => Entry::StepSum,
            ("softabs", None) => Entry::SoftAbs(DEFAULT_SOFTABS_N),
            ("softabs", Some(n)) => Entry::SoftAbs(num(n).and_then(|n| if n > 0.0 { Ok(n) } else { Err(unknown()) })?),
            ("log", None) => Entry::Log,
            ("exp", None) => Entry::Exp,
            ("mollified", Some(r)) => {
                let (w, inner) = match r.split_once(':') {
                    Some((w, inner)) if w.parse::<f64>().is_ok() => (num(w)?, inner),
                    _ => (DEFAULT_MOLLIFY_WIDTH, r),
                };
                if w <= 0.0 {
                    return Err(unknown());
                }
                Entry::Mollified(Box::new(inner.parse()?), w)
            }
            _ => return Err(unknown()),
        })
    }
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entry::Abs => write!(f, "abs"),
            Entry::NegAbs => write!(f, "neg-abs"),
            Entry::Sign => write!(f, "sign"),
            Entry::Zero => write!(f, "zero"),
            Entry::Const(c) => write!(f, "const:{c}"),
            Entry::Linear(m) => write!(f, "linear:{m}"),
            Entry::Quadratic => write!(f, "quadratic"),
            Entry::Sinlog => write!(f, "sinlog"),
            Entry::Ramp => write!(f, "ramp"),
            Entry::StepSum => write!(f, "step-sum"),
            Entry::SoftAbs(n) => write!(f, "softabs:{n}"),
            Entry::Log => write!(f, "log"),
            Entry::Exp => write!(f, "exp"),
            Entry::Mollified(inner, w) => write!(f, "mollified:{w}:{inner}"),
        }
    }
}

fn heaviside(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

impl Entry {
    /// A representative value; at jumps any value between the limits.
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Entry::Abs => x.abs(),
            Entry::NegAbs => -x.abs(),
            Entry::Sign => {
                if x == 0.0 {
                    0.0
                } else {
                    x.signum()
                }
            }
            Entry::Zero => 0.0,
            Entry::Const(c) => *c,
            Entry::Linear(m) => m * x,
            Entry::Quadratic => x * x,
            Entry::Sinlog => {
                if x == 0.0 {
                    0.0
                } else {
                    x * x.abs().ln().sin()
                }
            }
            Entry::Ramp => x.max(0.0),
            Entry::StepSum => heaviside(x + 0.5) + heaviside(x - 0.25),
            Entry::SoftAbs(n) => (x * x + 1.0 / (n * n)).sqrt(),
            Entry::Log => x.ln(),
            Entry::Exp => x.exp(),
            Entry::Mollified(inner, _) => inner.value(x),
        }
    }

    pub fn jumps(&self) -> Vec<f64> {
        match self {
            Entry::Sign => vec![0.0],
            Entry::StepSum => vec![-0.5, 0.25],
            _ => Vec::new(),
        }
    }

    /// Points where the closed-form gradient is a proper interval.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            Entry::Abs | Entry::NegAbs | Entry::Ramp | Entry::Sinlog => vec![0.0],
            _ => Vec::new(),
        }
    }

    pub fn is_continuous(&self) -> bool {
        self.jumps().is_empty()
    }

    /// Closed-form Clarke gradient as an interval, where known.
    pub fn gradient(&self, x: f64) -> Option<(f64, f64)> {
        let point = |v: f64| Some((v, v));
        match self {
            Entry::Abs if x == 0.0 => Some((-1.0, 1.0)),
            Entry::Abs => point(x.signum()),
            Entry::NegAbs if x == 0.0 => Some((-1.0, 1.0)),
            Entry::NegAbs => point(-x.signum()),
            Entry::Zero | Entry::Const(_) => point(0.0),
            Entry::Linear(m) => point(*m),
            Entry::Quadratic => point(2.0 * x),
            Entry::Sinlog if x == 0.0 => Some((-std::f64::consts::SQRT_2, std::f64::consts::SQRT_2)),
            Entry::Sinlog => {
                let l = x.abs().ln();
                point(l.sin() + l.cos())
            }
            Entry::Ramp if x == 0.0 => Some((0.0, 1.0)),
            Entry::Ramp => point(heaviside(x)),
            Entry::SoftAbs(n) => point(x / (x * x + 1.0 / (n * n)).sqrt()),
            Entry::Log => point(1.0 / x),
            Entry::Exp => point(x.exp()),
            Entry::Sign | Entry::StepSum | Entry::Mollified(..) => None,
        }
    }

    /// Smooth entries usable as the outer function of a composition.
    pub fn smooth(&self, grid: Grid1D<f64>) -> Option<Result<SmoothFn<f64>, CliError>> {
        if !matches!(self, Entry::Zero | Entry::Const(_) | Entry::Linear(_) | Entry::Quadratic | Entry::SoftAbs(_) | Entry::Log | Entry::Exp) {
            return None;
        }
        let d = |x: f64| self.gradient(x).map_or(f64::NAN, |g| g.0);
        Some(SmoothFn::from_fns(grid, |x| self.value(x), d).map_err(CliError::from))
    }

    pub fn sample(&self, grid: Grid1D<f64>) -> Result<SampledFn<f64>, CliError> {
        if let Entry::Mollified(inner, w) = self {
            let base = inner.sample(grid)?;
            if !base.is_continuous() {
                return Err(CliError::BadConfig(format!("mollified entries need a continuous inner entry, got {inner}")));
            }
            return Ok(mollify(&base, *w, SmoothingKind::Mollifier)?);
        }
        if matches!(self, Entry::Log) && grid.a() <= 0.0 {
            return Err(CliError::BadConfig(format!("log needs a positive domain, grid starts at {}", grid.a())));
        }
        // a jump outside the open domain is no jump; one within half a cell
        // of an end moves to the nearest interior node
        let n = grid.len();
        let jumps: Vec<f64> = self
            .jumps()
            .into_iter()
            .filter(|&x| grid.a() < x && x < grid.b())
            .map(|x| grid.node(grid.nearest(x).clamp(1, n - 2)))
            .collect();
        Ok(SampledFn::sample(grid, |x| self.value(x), &jumps)?)
    }

    pub fn class(&self, grid: Grid1D<f64>) -> Result<ClassPair<f64>, CliError> {
        Ok(canonical_pair(&self.sample(grid)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use setcalc::value_at;

    #[test]
    fn names_round_trip() {
        for name in ["abs", "const:1.5", "linear:-2", "softabs:64", "mollified:0.1:ramp", "mollified:const:2"] {
            let e: Entry = name.parse().unwrap();
            assert_eq!(e.to_string().parse::<Entry>().unwrap(), e);
        }
        for bad in ["nope", "const", "const:x", "softabs:-1", "mollified:0:abs", "abs:3"] {
            assert!(matches!(bad.parse::<Entry>(), Err(CliError::UnknownFunction(_))), "{bad}");
        }
    }

    #[test]
    fn every_entry_builds() {
        let g = Grid1D::new(-1.0, 1.0, 101).unwrap();
        for info in catalog() {
            let name = match info.name {
                "const" => "const:2".to_string(),
                "mollified" => "mollified:abs".to_string(),
                n => n.to_string(),
            };
            let e: Entry = name.parse().unwrap();
            match e {
                Entry::Log => assert!(matches!(e.class(g), Err(CliError::BadConfig(_)))),
                _ => {
                    e.class(g).unwrap();
                }
            }
            assert_eq!(info.closed_form_gradient, e.gradient(0.5).is_some(), "{name}");
        }
        let s = Entry::Sign.class(g).unwrap();
        let v = value_at(&s, 0.0).unwrap();
        assert_eq!((v.lo(), v.hi()), (-1.0, 1.0));
        assert!(Entry::Mollified(Box::new(Entry::Sign), 0.1).class(g).is_err());
    }
}
