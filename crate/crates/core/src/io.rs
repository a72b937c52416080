//! Text formats. Floats are written with their shortest round-trip
//! representation, so finite values survive a write/read cycle bit for bit.
//!
//! CSV: a header `# grid a=<a> b=<b> n=<n> lip=<L> bound=<M>` followed by
//! rows `index,x,value,is_jump`. A class is written as its lower
//! representative; the upper one is recovered by canonicalization.
//!
//! JSON for classes: `{grid: {a, b, n}, lower: [...], upper: [...], jumps: [...]}`
//! plus the optional metadata `lip` and `bound`.

use serde::{Deserialize, Serialize};

use crate::class::{canonical_pair, ClassPair};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::sampled::SampledFn;
use crate::scalar::Scalar;

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

pub fn write_csv<S: Scalar>(f: &SampledFn<S>) -> String {
    let g = f.grid();
    let mut out = format!("# grid a={} b={} n={} lip={} bound={}\n", g.a(), g.b(), g.len(), f.lip(), f.bound());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mask = f.jump_mask();
    for (i, v) in f.values().iter().enumerate() {
        let row = [i.to_string(), g.node(i).to_string(), v.to_string(), u8::from(mask[i]).to_string()];
        w.write_record(&row).expect("writing to memory");
    }
    out.push_str(std::str::from_utf8(&w.into_inner().expect("flush to memory")).expect("csv output is utf-8"));
    out
}

pub fn read_csv<S: Scalar>(text: &str) -> Result<SampledFn<S>> {
    let header = text.lines().next().ok_or_else(|| parse_err("empty csv input"))?;
    let fields = header
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|h| h.strip_prefix("grid"))
        .ok_or_else(|| parse_err(format!("expected a '# grid' header, got {header:?}")))?;
    let (mut a, mut b, mut n, mut lip, mut bound) = (None, None, None, None, None);
    for kv in fields.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| parse_err(format!("bad header field {kv:?}")))?;
        let num = || v.parse::<S>().map_err(|_| parse_err(format!("bad number {v:?} for {k}")));
        match k {
            "a" => a = Some(num()?),
            "b" => b = Some(num()?),
            "n" => n = Some(v.parse::<usize>().map_err(|_| parse_err(format!("bad node count {v:?}")))?),
            "lip" => lip = Some(num()?),
            "bound" => bound = Some(num()?),
            _ => return Err(parse_err(format!("unknown header field {k:?}"))),
        }
    }
    let missing = |name: &str| parse_err(format!("header lacks {name}"));
    let grid = Grid1D::new(a.ok_or_else(|| missing("a"))?, b.ok_or_else(|| missing("b"))?, n.ok_or_else(|| missing("n"))?)?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::with_capacity(grid.len());
    let mut jumps = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        if rec.len() != 4 {
            return Err(parse_err(format!("row {row}: expected 4 fields, got {}", rec.len())));
        }
        let index: usize = rec[0].parse().map_err(|_| parse_err(format!("row {row}: bad index")))?;
        if index != row {
            return Err(parse_err(format!("row {row}: index {index} out of order")));
        }
        values.push(rec[2].parse::<S>().map_err(|_| parse_err(format!("row {row}: bad value {:?}", &rec[2])))?);
        match &rec[3] {
            "0" => {}
            "1" => jumps.push(index),
            other => return Err(parse_err(format!("row {row}: is_jump must be 0 or 1, got {other:?}"))),
        }
    }
    if values.len() != grid.len() {
        return Err(parse_err(format!("{} rows for a grid of {} nodes", values.len(), grid.len())));
    }
    match (lip, bound) {
        (Some(l), Some(m)) => SampledFn::new(grid, values, jumps, l, m),
        (None, None) => SampledFn::measured(grid, values, jumps),
        _ => Err(parse_err("lip and bound must be given together")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct GridDoc<S> {
    pub a: S,
    pub b: S,
    pub n: usize,
}

/// JSON document of a class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ClassDoc<S> {
    pub grid: GridDoc<S>,
    pub lower: Vec<S>,
    pub upper: Vec<S>,
    pub jumps: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lip: Option<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<S>,
}

impl<S: Scalar> From<&ClassPair<S>> for ClassDoc<S> {
    fn from(f: &ClassPair<S>) -> Self {
        let g = f.grid();
        Self {
            grid: GridDoc { a: g.a(), b: g.b(), n: g.len() },
            lower: f.lower().values().to_vec(),
            upper: f.upper().values().to_vec(),
            jumps: f.jumps().to_vec(),
            lip: Some(f.lip()),
            bound: Some(f.bound()),
        }
    }
}

impl<S: Scalar> TryFrom<ClassDoc<S>> for ClassPair<S> {
    type Error = Error;

    fn try_from(d: ClassDoc<S>) -> Result<Self> {
        let grid = Grid1D::new(d.grid.a, d.grid.b, d.grid.n)?;
        let side = |values: Vec<S>| match (d.lip, d.bound) {
            (Some(l), Some(m)) => SampledFn::new(grid, values, d.jumps.clone(), l, m),
            _ => SampledFn::measured(grid, values, d.jumps.clone()),
        };
        ClassPair::from_parts(side(d.lower.clone())?, side(d.upper.clone())?)
    }
}

pub fn class_to_json<S: Scalar>(f: &ClassPair<S>) -> String {
    serde_json::to_string(&ClassDoc::from(f)).expect("class documents serialize")
}

pub fn class_from_json<S: Scalar>(text: &str) -> Result<ClassPair<S>> {
    let doc: ClassDoc<S> = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    doc.try_into()
}

/// Class stored in the CSV function format (lower representative).
pub fn class_to_csv<S: Scalar>(f: &ClassPair<S>) -> String {
    write_csv(f.lower())
}

pub fn class_from_csv<S: Scalar>(text: &str) -> Result<ClassPair<S>> {
    canonical_pair(&read_csv(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sign_like(shift: f64) -> ClassPair<f64> {
        let g = Grid1D::new(-1.0, 1.0, 101).unwrap();
        let f = SampledFn::sample(g, |x: f64| if x > 0.0 { 1.0 + x / 3.0 } else { -1.0 + shift * x }, &[0.0]).unwrap();
        canonical_pair(&f).unwrap()
    }

    #[test]
    fn csv_layout() {
        let text = class_to_csv(&sign_like(0.1));
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# grid a=-1 b=1 n=101 lip="));
        assert_eq!(lines.next().unwrap(), "0,-1,-1.1,0");
        assert_eq!(text.lines().nth(51).unwrap(), "50,0,-1,1");
        assert!(matches!(read_csv::<f64>("0,1,2,0\n"), Err(Error::Parse(_))));
        assert!(matches!(read_csv::<f64>("# grid a=0 b=1 n=2\n0,0,1,0\n"), Err(Error::Parse(_))));
        assert!(matches!(read_csv::<f64>("# grid a=0 b=1 n=2\n0,0,1,0\n1,1,1,2\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn json_layout() {
        let v: serde_json::Value = serde_json::from_str(&class_to_json(&sign_like(0.0))).unwrap();
        assert_eq!(v["grid"]["n"], 101);
        assert_eq!(v["jumps"], serde_json::json!([50]));
        assert_eq!(v["lower"][50], -1.0);
        assert!((v["upper"][50].as_f64().unwrap() - 1.0).abs() < 1e-12);
        let bare = r#"{"grid":{"a":0,"b":1,"n":3},"lower":[0,1,2],"upper":[0,1,2],"jumps":[]}"#;
        assert_eq!(class_from_json::<f64>(bare).unwrap().lip(), 2.0);
    }

    proptest! {
        #[test]
        fn round_trips_are_exact(vals in prop::collection::vec(-1e6f64..1e6, 3..60), cut in 0.0f64..1.0, tiny in -1e-300f64..1e-300) {
            let n = vals.len();
            let g = Grid1D::new(-0.3, 1.7, n).unwrap();
            let mut vals = vals;
            vals[0] = tiny;
            let j = 1 + ((n - 2) as f64 * cut) as usize;
            let f = SampledFn::measured(g, vals, vec![j.min(n - 2)]).unwrap();
            prop_assert_eq!(&read_csv::<f64>(&write_csv(&f)).unwrap(), &f);
            if let Ok(c) = canonical_pair(&f) {
                prop_assert_eq!(&class_from_json::<f64>(&class_to_json(&c)).unwrap(), &c);
                prop_assert_eq!(&class_from_csv::<f64>(&class_to_csv(&c)).unwrap(), &c);
            }
        }
    }
}
