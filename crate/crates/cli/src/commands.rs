//! Subcommand bodies. Each returns a [`Run`]: the files it would write under
//! `--out`, the text it prints otherwise, and an optional error that decides
//! the exit status after the output has been emitted.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use setcalc::{
    class_metric, closure_gradient, clarke_gradient, gradient_tolerance, lip_lower_envelope, lip_upper_envelope,
    graph_hausdorff, tol_rep, ClassPair, ClosureDiagnostic, Error, GradientField, LipschitzTower, MetricKind,
};

use crate::catalog::catalog;
use crate::config::{Format, RunConfig};
use crate::error::{CliError, Result};
use crate::expr::Expr;

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub body: String,
}

#[derive(Debug, Default)]
pub struct Run {
    pub files: Vec<Artifact>,
    pub stdout: String,
    pub error: Option<CliError>,
}

impl Run {
    fn single(name: &str, body: String) -> Self {
        Self { files: vec![Artifact { name: name.into(), body: body.clone() }], stdout: body, error: None }
    }

    /// Writes the files into `out` (listing their paths on `w`), or prints
    /// the text to `w` when no directory is given.
    pub fn emit(&self, out: Option<&Path>, w: &mut impl Write) -> Result<()> {
        fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
            move |source| CliError::Io { path: path.display().to_string(), source }
        }
        match out {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(io(dir))?;
                for a in &self.files {
                    let p = dir.join(&a.name);
                    std::fs::write(&p, &a.body).map_err(io(&p))?;
                    writeln!(w, "{}", p.display()).map_err(io(&p))?;
                }
            }
            None => w.write_all(self.stdout.as_bytes()).map_err(io(Path::new("<stdout>")))?,
        }
        Ok(())
    }
}

/// Shortest round-trip text, with `-0` printed as `0`.
pub fn num(v: f64) -> String {
    format!("{}", v + 0.0)
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Copy, Serialize)]
struct Tolerances {
    rep: f64,
    grad: f64,
    scale: f64,
}

impl Tolerances {
    fn new(cfg: &RunConfig, lip: f64, h: f64) -> Self {
        let t = setcalc::Tolerances::new(lip, h);
        Self { rep: cfg.tol * t.rep, grad: cfg.tol * t.grad, scale: cfg.tol }
    }
}

fn tol_comment(t: &Tolerances) -> String {
    format!("tol_rep={} tol_grad={} tol_scale={}", num(t.rep), num(t.grad), num(t.scale))
}

fn parse_fn(name: &str) -> Result<Expr> {
    name.parse()
}

pub fn envelope(cfg: &RunConfig, name: &str, k: f64) -> Result<Run> {
    if !(k.is_finite() && k > 0.0) {
        return Err(CliError::BadConfig(format!("k must be positive, got {k}")));
    }
    let e = parse_fn(name)?;
    let grid = cfg.grid()?;
    let f = e.class(grid)?;
    let lo = lip_lower_envelope(f.lower(), k)?;
    let hi = lip_upper_envelope(f.upper(), k)?;
    let gap = graph_hausdorff(&lo, &hi)?;
    let tol = Tolerances::new(cfg, k.max(f.lip()), grid.spacing());
    let body = match cfg.format {
        Format::Csv => {
            let mut s = format!("# fn={e} k={} gap={} {}\nx,f_lower,f_upper,env_lower,env_upper\n", num(k), num(gap), tol_comment(&tol));
            for i in 0..grid.len() {
                let row = [grid.node(i), f.lower().values()[i], f.upper().values()[i], lo.values()[i], hi.values()[i]];
                s.push_str(&row.map(num).join(","));
                s.push('\n');
            }
            s
        }
        Format::Json => pretty(&json!({
            "fn": e.to_string(),
            "k": k,
            "gap": gap,
            "tolerances": tol,
            "x": grid.nodes(),
            "f_lower": f.lower().values(),
            "f_upper": f.upper().values(),
            "env_lower": lo.values(),
            "env_upper": hi.values(),
        })),
    };
    Ok(Run::single(&format!("envelope.{}", cfg.format), body))
}

pub fn metric(cfg: &RunConfig, which: MetricKind, a: &str, b: &str) -> Result<Run> {
    let (ea, eb) = (parse_fn(a)?, parse_fn(b)?);
    let grid = cfg.grid()?;
    let (f, g) = (ea.class(grid)?, eb.class(grid)?);
    let r = class_metric(&f, &g, &cfg.ks, which)?;
    let tol = Tolerances::new(cfg, f.lip().max(g.lip()), grid.spacing());
    let which_name = match which {
        MetricKind::S => "s",
        MetricKind::R => "r",
    };
    let body = match cfg.format {
        Format::Csv => {
            let mut s = format!(
                "# metric={which_name} f={ea} g={eb} value={} truncation_bound={} {}\nk,lower,upper\n",
                num(r.value),
                num(r.truncation_bound),
                tol_comment(&tol)
            );
            for t in &r.per_k {
                s.push_str(&format!("{},{},{}\n", num(t.k), num(t.lower), num(t.upper)));
            }
            s
        }
        Format::Json => pretty(&json!({
            "metric": which_name,
            "f": ea.to_string(),
            "g": eb.to_string(),
            "value": r.value,
            "per_k": r.per_k,
            "truncation_bound": r.truncation_bound,
            "truncation_ok": r.truncation_ok(),
            "tolerances": tol,
        })),
    };
    Ok(Run::single(&format!("metric.{}", cfg.format), body))
}

pub fn value(cfg: &RunConfig, name: &str, at: &[f64]) -> Result<Run> {
    let e = parse_fn(name)?;
    let grid = cfg.grid()?;
    let f = e.class(grid)?;
    let values = at.iter().map(|&x| f.value_at(x).map(|v| (x, v))).collect::<setcalc::Result<Vec<_>>>()?;
    let body = match cfg.format {
        Format::Csv => {
            let mut s = format!("# fn={e}\nx,lo,hi\n");
            for (x, v) in &values {
                s.push_str(&format!("{},{},{}\n", num(*x), num(v.lo()), num(v.hi())));
            }
            s
        }
        Format::Json => {
            let rows: Vec<_> = values.iter().map(|(x, v)| json!({"x": x, "lo": v.lo(), "hi": v.hi()})).collect();
            pretty(&json!({ "fn": e.to_string(), "values": rows }))
        }
    };
    Ok(Run::single(&format!("value.{}", cfg.format), body))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GradMode {
    Clarke,
    Closure,
    Algebra,
}

/// `x,lower,upper` per node; at a kink the row spans the whole vertical segment.
pub fn plot_csv(df: &GradientField<f64>) -> String {
    let c = df.class();
    let g = c.grid();
    let mut s = String::from("x,lower,upper\n");
    for i in 0..g.len() {
        let (l, r) = c.limits_at(i);
        let (lo, hi) = (l.min(r).min(c.lower().values()[i]), l.max(r).max(c.upper().values()[i]));
        s.push_str(&format!("{},{},{}\n", num(g.node(i)), num(lo), num(hi)));
    }
    s
}

type GradRun = (ClassPair<f64>, GradientField<f64>, Option<ClosureDiagnostic<f64>>);

fn grad_field(cfg: &RunConfig, mode: GradMode, e: &Expr) -> Result<GradRun> {
    let grid = cfg.grid()?;
    Ok(match mode {
        GradMode::Algebra => {
            let (f, df) = e.eval(grid)?;
            (f, df, None)
        }
        GradMode::Clarke => {
            let f = e.class(grid)?;
            let df = clarke_gradient(f.lower())?;
            (f, df, None)
        }
        GradMode::Closure => {
            let f = e.class(grid)?;
            let (df, diag) = closure_gradient(f.lower(), &cfg.schedule()?)?;
            (f, df, Some(diag))
        }
    })
}

pub fn grad(cfg: &RunConfig, mode: GradMode, name: &str) -> Result<Run> {
    let e = parse_fn(name)?;
    let (f, df, diag) = match grad_field(cfg, mode, &e) {
        Ok(v) => v,
        Err(CliError::Core(Error::NotConverged { gaps })) => {
            let d = ClosureDiagnostic { cauchy_gaps: gaps.clone(), converged: false, in_domain_hint: false };
            let body = pretty(&json!({ "mode": "closure", "fn": e.to_string(), "diagnostic": d }));
            let mut run = Run::single("diagnostic.json", body);
            run.error = Some(CliError::Core(Error::NotConverged { gaps }));
            return Ok(run);
        }
        Err(err) => return Err(err),
    };
    let h = f.grid().spacing();
    let t = gradient_tolerance(f.lip(), &df);
    let tol = Tolerances {
        rep: cfg.tol * tol_rep(f.lip().max(df.lip()), h),
        grad: cfg.tol * t,
        scale: cfg.tol,
    };
    let mode_name = match mode {
        GradMode::Clarke => "clarke",
        GradMode::Closure => "closure",
        GradMode::Algebra => "algebra",
    };
    let doc = pretty(&json!({
        "mode": mode_name,
        "fn": e.to_string(),
        "tolerances": tol,
        "field": df,
        "diagnostic": diag,
    }));
    let plot = plot_csv(&df);
    let mut files = vec![Artifact { name: "gradient.json".into(), body: doc.clone() }, Artifact { name: "plot.csv".into(), body: plot.clone() }];
    if let Some(d) = &diag {
        files.push(Artifact { name: "diagnostic.json".into(), body: pretty(d) });
    }
    let stdout = match cfg.format {
        Format::Csv => plot,
        Format::Json => doc,
    };
    Ok(Run { files, stdout, error: None })
}

pub fn complete(cfg: &RunConfig, name: &str, levels: usize) -> Result<Run> {
    let e = parse_fn(name)?;
    let grid = cfg.grid()?;
    let tower = LipschitzTower::new(grid, levels).map_err(|err| CliError::BadConfig(err.to_string()))?;
    let el = tower.class_element(&e.class(grid)?)?;
    let mut bundle = setcalc::completion::Bundle::default();
    let doc = el.to_doc(&mut bundle);
    let files = vec![Artifact { name: "element.json".into(), body: pretty(&doc) }, Artifact { name: "bundle.json".into(), body: pretty(&bundle) }];
    let stdout = pretty(&json!({ "fn": e.to_string(), "element": doc, "bundle": bundle }));
    Ok(Run { files, stdout, error: None })
}

pub fn list_catalog(format: Format) -> Run {
    let entries = catalog();
    let body = match format {
        Format::Json => pretty(&entries),
        Format::Csv => {
            let mut s = String::from("name,params,closed_form_gradient,description\n");
            for e in &entries {
                s.push_str(&format!("{},{},{},\"{}\"\n", e.name, e.params, e.closed_form_gradient, e.description));
            }
            s
        }
    };
    Run::single(&format!("catalog.{format}"), body)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, format: Format) -> RunConfig {
        let mut c = RunConfig::default();
        c.grid.n = n;
        c.format = format;
        c
    }

    #[test]
    fn sign_envelope_gap() {
        let r = envelope(&cfg(1001, Format::Json), "sign", 4.0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
        let gap = v["gap"].as_f64().unwrap();
        assert!((gap - 2.0 / 17f64.sqrt()).abs() < 3.0 * 0.002, "{gap}");
        let c = envelope(&cfg(101, Format::Csv), "const:1", 1.0).unwrap();
        assert!(c.stdout.starts_with("# fn=const:1 k=1 gap=0 "));
        assert!(c.stdout.lines().skip(2).all(|l| l.ends_with(",1,1,1,1")));
        assert!(matches!(envelope(&cfg(101, Format::Csv), "sign", 0.0), Err(CliError::BadConfig(_))));
    }

    #[test]
    fn plot_rows_at_the_kink() {
        let r = grad(&cfg(1001, Format::Csv), GradMode::Clarke, "abs").unwrap();
        assert!(r.stdout.lines().any(|l| l == "0,-1,1"), "{}", &r.stdout[..200]);
        let z = grad(&cfg(1001, Format::Csv), GradMode::Algebra, "add(abs, scale(-1,abs))").unwrap();
        assert!(z.stdout.lines().any(|l| l == "0,0,0"));
    }

    #[test]
    fn emit_writes_every_file() {
        let dir = std::env::temp_dir().join(format!("setcalc-emit-{}", std::process::id()));
        let r = complete(&cfg(65, Format::Json), "sign", 4).unwrap();
        let mut listing = Vec::new();
        r.emit(Some(&dir), &mut listing).unwrap();
        assert_eq!(String::from_utf8(listing).unwrap().lines().count(), 2);
        assert!(dir.join("bundle.json").exists());
        std::fs::remove_dir_all(dir).unwrap();
    }
}
