//! Command line front end: reads JSON inputs, runs one experiment, writes a JSON report
//! and plot-ready CSV. Exit codes: 0 ok, 2 bad input, 3 math-domain failure,
//! 4 broken internal identity.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::archimedean::{FunctionalReport, ToricPotential};
use crate::error::{Error, Result};
use crate::gitweights::{
    bounded_below_torus, bounded_by_fan, conjugated_probe, f_na, fan_candidates, slope_vs_fna, sym_function,
    sym_terms_from_json, LogNormFunction,
};
use crate::nonarchimedean::{make_config, stability_threshold, Family, NaFunctionalReport, PlConvexFunction};
use crate::polytope::MomentPolytope;
use crate::quadrature::Tolerance;
use crate::rational::{self, to_f64, Q};
use crate::rays::{geometric_grid, slope, Functional, RayKind, RaySpec};
use crate::snclocal::{exponent_fit, tau_grid, Rule, SncModel};

const CSV_HELP: &str = "CSV columns:
  functionals  functional,value,error
  na           functional,num,den,value
  ray          s,F,F_over_s
  weights      lambda,f_na_num,f_na_den,f_na   (lambda entries joined by ';')
  snc          tau,volume
  scan         y,f                              (nodes of the witness)";

#[derive(Parser, Debug)]
#[command(name = "kstab", version, about = "Energy functionals, non-Archimedean limits and slope experiments on toric models", after_help = CSV_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the JSON report to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write plot-ready CSV to this file.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct TolArgs {
    /// Relative quadrature tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub rel: f64,
    /// Absolute quadrature tolerance.
    #[arg(long, default_value_t = 1e-12)]
    pub abs: f64,
}

impl TolArgs {
    fn tolerance(self) -> Tolerance {
        Tolerance {
            rel: self.rel,
            abs: self.abs,
            ..Tolerance::default()
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Archimedean functionals of a potential against a reference (default: Fubini-Study).
    Functionals {
        #[arg(long)]
        polytope: PathBuf,
        #[arg(long)]
        potential: PathBuf,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Exact non-Archimedean functionals of a PL convex function, with DF - delta J^NA.
    Na {
        #[arg(long)]
        polytope: PathBuf,
        #[arg(long)]
        pl: PathBuf,
        #[arg(long, default_value = "0", value_parser = parse_q)]
        delta: Q,
    },
    /// Slope of a functional along the ray of a PL direction.
    Ray {
        #[arg(long)]
        polytope: PathBuf,
        #[arg(long)]
        pl: PathBuf,
        /// Start of the ray (default: canonical symplectic potential).
        #[arg(long)]
        base: Option<PathBuf>,
        /// Reference metric (default: Fubini-Study).
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, default_value = "M")]
        functional: Functional,
        #[arg(long, default_value = "legendre")]
        kind: RayKind,
        /// Smoothing width (default 0 on intervals, 0.05 otherwise).
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 100.0)]
        s_min: f64,
        #[arg(long, default_value_t = 200.0)]
        s_max: f64,
        #[arg(long, default_value_t = 8)]
        points: usize,
        /// Bergman level (default: smallest integral level).
        #[arg(long)]
        level: Option<u64>,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Slopes at infinity and boundedness of a log-norm function on a torus.
    Weights {
        /// Representation JSON, or explicit SL(n) polynomials `{"n", "polys", "coeffs"}`.
        #[arg(long)]
        input: PathBuf,
        /// One-parameter subgroup, comma separated rationals (default: all ones).
        #[arg(long, value_delimiter = ',', value_parser = parse_q, allow_negative_numbers = true)]
        lambda: Option<Vec<Q>>,
        /// Conjugated samples for explicit polynomials.
        #[arg(long, default_value_t = 64)]
        trials: usize,
    },
    /// Fiber volume growth in an snc local model.
    Snc {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        tau_max: f64,
        #[arg(long, default_value_t = 1e-9)]
        tau_min: f64,
        #[arg(long, default_value_t = 13)]
        points: usize,
        /// Gauss points per dimension (default: 32 up to n = 2, Monte-Carlo beyond).
        #[arg(long)]
        gauss: Option<usize>,
    },
    /// Uniform stability threshold over convex functions with given breakpoints.
    Scan {
        #[arg(long)]
        polytope: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1/2", value_parser = parse_q)]
        breakpoints: Vec<Q>,
    },
}

fn parse_q(s: &str) -> std::result::Result<Q, String> {
    s.trim().parse::<Q>().map_err(|_| format!("bad rational {s:?}"))
}

/// A finished experiment: JSON report and CSV body.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub json: Value,
    pub csv: String,
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn read_polytope(path: &Path) -> Result<MomentPolytope> {
    MomentPolytope::from_json(&read_json(path)?)
}

fn read_potential(p: &MomentPolytope, path: Option<&PathBuf>) -> Result<Option<ToricPotential>> {
    path.map(|x| ToricPotential::from_json(p, &read_json(x)?)).transpose()
}

fn tol_json(t: Tolerance) -> Value {
    json!({"rel": t.rel, "abs": t.abs, "max_depth": t.max_depth})
}

fn path_json(p: &Option<PathBuf>) -> Value {
    p.as_ref().map_or(Value::Null, |x| json!(x.display().to_string()))
}

fn q_row(name: &str, x: &Q) -> String {
    format!("{name},{},{},{}\n", x.numer(), x.denom(), to_f64(x))
}

/// Runs the parsed command.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let (config, report, csv) = match &cli.command {
        Command::Functionals {
            polytope,
            potential,
            reference,
            tol,
        } => {
            let p = read_polytope(polytope)?;
            let u = ToricPotential::from_json(&p, &read_json(potential)?)?;
            let r = match read_potential(&p, reference.as_ref())? {
                Some(r) => r,
                None => ToricPotential::fs(&p)?,
            };
            let t = tol.tolerance();
            let rep = FunctionalReport::compute(&u, &r, t)?;
            let mut csv = String::from("functional,value,error\n");
            for (k, e) in rep.entries() {
                csv.push_str(&format!("{k},{},{}\n", e.value, e.error));
            }
            let config = json!({
                "command": "functionals",
                "inputs": {"polytope": path_json(&Some(polytope.clone())), "potential": path_json(&Some(potential.clone())), "reference": path_json(reference)},
                "reference_default": "fs",
                "tolerance": tol_json(t),
            });
            (config, rep.to_json(), csv)
        }
        Command::Na { polytope, pl, delta } => {
            let p = read_polytope(polytope)?;
            let f = PlConvexFunction::from_json(p.clone(), &read_json(pl)?)?;
            let rep = NaFunctionalReport::compute(&make_config(&p, &f)?)?;
            let slack = &rep.df - delta * &rep.j;
            let mut out = rep.to_json();
            out["delta"] = rational::encode(delta);
            out["slack"] = rational::encode(&slack);
            let mut csv = String::from("functional,num,den,value\n");
            for (k, v) in rep.entries() {
                csv.push_str(&q_row(k, &v));
            }
            csv.push_str(&q_row("slack", &slack));
            let config = json!({
                "command": "na",
                "inputs": {"polytope": path_json(&Some(polytope.clone())), "pl": path_json(&Some(pl.clone()))},
                "delta": rational::encode(delta),
            });
            (config, out, csv)
        }
        Command::Ray {
            polytope,
            pl,
            base,
            reference,
            functional,
            kind,
            eps,
            s_min,
            s_max,
            points,
            level,
            tol,
        } => {
            let p = read_polytope(polytope)?;
            let f = PlConvexFunction::from_json(p.clone(), &read_json(pl)?)?;
            let b = match read_potential(&p, base.as_ref())? {
                Some(b) => b,
                None => ToricPotential::guillemin(&p)?,
            };
            let r = match read_potential(&p, reference.as_ref())? {
                Some(r) => r,
                None => ToricPotential::fs(&p)?,
            };
            if !(*s_min > 0.0 && s_max > s_min) || *points < 3 {
                return Err(Error::InvalidInput(
                    "need 0 < s_min < s_max and at least 3 points".into(),
                ));
            }
            let eps = eps.unwrap_or(if p.dim() == 1 { 0.0 } else { 0.05 });
            let mut spec = RaySpec::new(b, f)
                .kind(*kind)
                .eps(eps)
                .grid(geometric_grid(*s_min, *s_max, *points));
            if let Some(m) = level {
                spec = spec.level(*m);
            }
            let t = tol.tolerance();
            let rep = slope(&spec, *functional, &r, t)?;
            let config = json!({
                "command": "ray",
                "inputs": {"polytope": path_json(&Some(polytope.clone())), "pl": path_json(&Some(pl.clone())), "base": path_json(base), "reference": path_json(reference)},
                "base_default": "guillemin",
                "reference_default": "fs",
                "functional": functional.name(),
                "kind": kind.name(),
                "eps": eps,
                "s_grid": geometric_grid(*s_min, *s_max, *points),
                "level": level,
                "tolerance": tol_json(t),
            });
            (config, rep.to_json(), rep.to_csv())
        }
        Command::Weights { input, lambda, trials } => {
            let v = read_json(input)?;
            let (f, terms) = if v.get("polys").is_some() {
                let terms = sym_terms_from_json(&v)?;
                (sym_function(&terms)?, Some(terms))
            } else {
                (LogNormFunction::from_json(&v)?, None)
            };
            let lambda = lambda
                .clone()
                .unwrap_or_else(|| vec![Q::from_integer(1.into()); f.rank()]);
            let check = slope_vs_fna(&f, &lambda)?;
            let inclusion = bounded_below_torus(&f)?;
            let fan = match bounded_by_fan(&f) {
                Ok(b) => Some(b),
                Err(Error::Unsupported(_)) => None,
                Err(e) => return Err(e),
            };
            if let Some(b) = &fan {
                if b.bounded != inclusion.bounded {
                    return Err(Error::Inconsistent("boundedness procedures disagree".into()));
                }
            }
            let probe = terms.map(|t| conjugated_probe(&t, *trials, cli.seed)).transpose()?;
            let dirs = match fan_candidates(&f) {
                Ok(c) => c,
                Err(_) => vec![lambda.clone()],
            };
            let mut csv = String::from("lambda,f_na_num,f_na_den,f_na\n");
            for l in &dirs {
                let key = l.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
                csv.push_str(&q_row(&key, &f_na(&f, l)?));
            }
            let report = json!({
                "rank": f.rank(),
                "f_na": check.to_json(),
                "bounded": inclusion.to_json(),
                "fan": fan.map(|b| b.to_json()),
                "probe": probe.map(|p| p.to_json()),
            });
            let config = json!({
                "command": "weights",
                "inputs": {"input": path_json(&Some(input.clone()))},
                "lambda": rational::encode_vec(&lambda),
                "trials": trials,
            });
            (config, report, csv)
        }
        Command::Snc {
            model,
            tau_max,
            tau_min,
            points,
            gauss,
        } => {
            let m = SncModel::from_json(&read_json(model)?)?;
            if !(*tau_min > 0.0 && tau_max > tau_min && *tau_max < 1.0) {
                return Err(Error::InvalidInput("need 0 < tau_min < tau_max < 1".into()));
            }
            let taus = tau_grid(-tau_max.log10(), -tau_min.log10(), *points);
            let rule = gauss.map_or(m.default_rule(cli.seed), Rule::Gauss);
            let fit = exponent_fit(&m, &taus, rule)?;
            let mut report = fit.to_json();
            report["p"] = json!(m.p);
            report["pass"] = json!((fit.exponent - m.p as f64).abs() < 0.1 && fit.sandwich_ratio <= 10.0);
            let config = json!({
                "command": "snc",
                "inputs": {"model": path_json(&Some(model.clone()))},
                "model": m.to_json(),
                "tau_grid": taus,
                "rule": format!("{rule:?}"),
            });
            (config, report, fit.to_csv())
        }
        Command::Scan { polytope, breakpoints } => {
            let p = read_polytope(polytope)?;
            let th = stability_threshold(&p, &Family::Breakpoints(breakpoints.clone()))?;
            let mut report = th.to_json();
            report["witness_j"] = rational::encode(&th.witness_j);
            report["semistable_certified"] = json!(th.mabuchi_min >= Q::from_integer(0.into()));
            let mut csv = String::from("y,f\n");
            for y in th.witness.nodes() {
                let v = th.witness.eval(&y);
                csv.push_str(&format!("{},{}\n", y[0], v));
            }
            let config = json!({
                "command": "scan",
                "inputs": {"polytope": path_json(&Some(polytope.clone()))},
                "breakpoints": rational::encode_vec(breakpoints),
            });
            (config, report, csv)
        }
    };
    let mut config = config;
    config["seed"] = json!(cli.seed);
    config["out"] = path_json(&cli.out);
    config["csv"] = path_json(&cli.csv);
    Ok(Outcome {
        json: json!({"config": config, "report": report}),
        csv,
    })
}

fn write(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

/// Parses arguments, runs, writes outputs and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = run(&cli).and_then(|o| {
        let text = serde_json::to_string_pretty(&o.json).map_err(|e| Error::Inconsistent(e.to_string()))?;
        match &cli.out {
            Some(p) => write(p, &(text + "\n"))?,
            None => {
                let _ = writeln!(std::io::stdout().lock(), "{text}");
            }
        }
        if let Some(p) = &cli.csv {
            write(p, &o.csv)?;
        }
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
