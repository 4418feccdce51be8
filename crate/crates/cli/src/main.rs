//! `mms`: command-line driver for the metric-measure-space toolkit.
//!
//! Exit codes: 0 on success, 2 when a requested verification finds an
//! invariant violation, 3 on input errors.

use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};

use mms_core::am::{self, DensitySequence};
use mms_core::bv;
use mms_core::curve::{self, CurveFamily};
use mms_core::field::{self, ScalarField};
use mms_core::gen;
use mms_core::modulus::{self, Tolerances};
use mms_core::pencil;
use mms_core::poincare;
use mms_core::space::{self, Space};
use mms_core::suite;

const USAGE: &str = "\
mms — curve moduli, Semmes pencils, and Poincaré/BV diagnostics on finite spaces

USAGE:
  mms gen --name <generator> --n <size> [--out FILE]
  mms modulus --space FILE (--family FILE | --x ID --y ID [--C REAL]) [--p REAL|inf]
              [--weight FILE] [--tol-admis T] [--tol-sep T] [--tol-gap T] [--out FILE]
  mms am ex31 --n N [--deltas LIST] [--horizon K] [--out FILE]
  mms pencil build --space FILE --x ID --y ID [--C REAL] [--out FILE]
  mms pencil verify --space FILE --pencil FILE [--sets random:K] [--seed S]
  mms pi measure --space FILE [--lambda L] [--functions random:K] [--seed S] [--out FILE]
  mms pi derive --space FILE [--pairs random:K] [--lambda L] [--seed S] [--out FILE]
  mms bv tv --space FILE --u FILE
  mms bv audit --space FILE --u FILE [--sequence constant|zero|FILE] [--horizon K]
  mms bv smooth --space FILE --u FILE --eps REAL
  mms bv counterexample --n N
  mms suite equivalence --spec FILE [--out BASE]

Generators: path, grid, parallel_edges, theta, bowtie, slit_grid,
circle_weighted_grid. MMS_THREADS caps the suite worker pool.
Exit codes: 0 ok, 2 invariant violation, 3 input error.";

struct Args {
    positional: Vec<String>,
    flags: std::collections::BTreeMap<String, String>,
}

impl Args {
    fn parse(argv: &[String]) -> Result<Args> {
        let mut positional = Vec::new();
        let mut flags = std::collections::BTreeMap::new();
        let mut i = 0;
        while i < argv.len() {
            let a = &argv[i];
            if let Some(name) = a.strip_prefix("--") {
                let value = argv
                    .get(i + 1)
                    .ok_or_else(|| anyhow!("flag --{name} needs a value"))?;
                flags.insert(name.to_string(), value.clone());
                i += 2;
            } else {
                positional.push(a.clone());
                i += 1;
            }
        }
        Ok(Args { positional, flags })
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.flags.get(name).map(|s| s.as_str())
    }

    fn require(&self, name: &str) -> Result<&str> {
        self.get(name)
            .ok_or_else(|| anyhow!("missing required flag --{name}"))
    }

    fn get_f64(&self, name: &str, default: f64) -> Result<f64> {
        match self.get(name) {
            None => Ok(default),
            Some(s) => parse_real(s).ok_or_else(|| anyhow!("--{name}: bad number `{s}`")),
        }
    }

    fn get_usize(&self, name: &str, default: usize) -> Result<usize> {
        match self.get(name) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| anyhow!("--{name}: bad integer `{s}`")),
        }
    }

    fn get_u64(&self, name: &str, default: u64) -> Result<u64> {
        match self.get(name) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| anyhow!("--{name}: bad integer `{s}`")),
        }
    }
}

/// Accepts plain decimals and simple fractions like `1/8`.
fn parse_real(s: &str) -> Option<f64> {
    if let Ok(x) = s.parse::<f64>() {
        return Some(x);
    }
    let (a, b) = s.split_once('/')?;
    let a: f64 = a.trim().parse().ok()?;
    let b: f64 = b.trim().parse().ok()?;
    if b != 0.0 {
        Some(a / b)
    } else {
        None
    }
}

fn load_space(args: &Args) -> Result<Space> {
    let path = args.require("space")?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    Ok(space::space_from_json(&text)?)
}

fn load_field(space: &Space, args: &Args, flag: &str) -> Result<ScalarField> {
    let path = args.require(flag)?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    Ok(field::field_from_json(space, &text)?)
}

fn emit(args: &Args, text: &str) -> Result<()> {
    match args.get("out") {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {path}"))?;
            eprintln!("wrote {path}");
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn parse_count_spec(spec: &str, kind: &str) -> Result<usize> {
    match spec.split_once(':') {
        Some((head, k)) if head == kind => {
            k.parse().map_err(|_| anyhow!("bad count in `{spec}`"))
        }
        _ => bail!("expected `{kind}:K`, got `{spec}`"),
    }
}

/// 0 ok, 2 invariant violation, 3 input error.
fn run() -> Result<u8> {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    if argv.is_empty() || argv[0] == "--help" || argv[0] == "-h" || argv[0] == "help" {
        println!("{USAGE}");
        return Ok(0);
    }
    let args = Args::parse(&argv)?;
    let mut tols = Tolerances::default();
    tols.admissibility = args.get_f64("tol-admis", tols.admissibility)?;
    tols.separation = args.get_f64("tol-sep", tols.separation)?;
    tols.relative_gap = args.get_f64("tol-gap", tols.relative_gap)?;
    match args
        .positional
        .iter()
        .map(|s| s.as_str())
        .collect::<Vec<_>>()
        .as_slice()
    {
        ["gen"] => {
            let name = args.require("name")?;
            let n = args.get_usize("n", 4)?;
            let s = gen::generate(name, n)?;
            emit(&args, &space::space_to_json(&s))?;
            Ok(0)
        }
        ["modulus"] => {
            let s = load_space(&args)?;
            let family = if let Some(path) = args.get("family") {
                let text = std::fs::read_to_string(path)?;
                curve::family_from_json(&s, &text)?
            } else {
                let x = s.vertex_index(args.require("x")?)?;
                let y = s.vertex_index(args.require("y")?)?;
                let c = args.get_f64("C", 1.0)?;
                CurveFamily::Pairs {
                    x,
                    y,
                    length_cap: c * s.distance(x, y),
                }
            };
            let weight = match args.get("weight") {
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    Some(field::density_from_json(&s, &text)?.0)
                }
                None => None,
            };
            let result = match args.get("p") {
                Some("inf") => modulus::mod_inf(&s, &family)?,
                p => {
                    let p = p.map_or(Ok(1.0), |s| {
                        parse_real(s).ok_or_else(|| anyhow!("bad exponent `{s}`"))
                    })?;
                    modulus::mod_p(&s, &family, p, weight.as_deref(), &tols)?
                }
            };
            emit(&args, &modulus::modulus_result_to_json(&s, &result))?;
            Ok(0)
        }
        ["am", "ex31"] => {
            let n = args.get_usize("n", 256)?;
            let deltas: Vec<f64> = match args.get("deltas") {
                None => vec![0.5, 0.25, 0.125],
                Some(list) => list
                    .split(',')
                    .map(|s| parse_real(s.trim()).ok_or_else(|| anyhow!("bad delta `{s}`")))
                    .collect::<Result<Vec<_>>>()?,
            };
            let horizon = args.get_usize("horizon", 12)?;
            let report = am::ex31_suite(n, &deltas, horizon, &tols)?;
            emit(&args, &serde_json::to_string_pretty(&report)?)?;
            Ok(0)
        }
        ["pencil", "build"] => {
            let s = load_space(&args)?;
            let x = s.vertex_index(args.require("x")?)?;
            let y = s.vertex_index(args.require("y")?)?;
            let c = match args.get("C") {
                Some(v) => Some(parse_real(v).ok_or_else(|| anyhow!("bad C `{v}`"))?),
                None => None,
            };
            let p = pencil::build_pencil(&s, x, y, c, &tols)?;
            emit(&args, &pencil::pencil_to_json(&s, &p))?;
            Ok(0)
        }
        ["pencil", "verify"] => {
            let s = load_space(&args)?;
            let path = args.require("pencil")?;
            let text = std::fs::read_to_string(path)?;
            let p = pencil::pencil_from_json(&s, &text)?;
            let count = parse_count_spec(args.get("sets").unwrap_or("random:1000"), "random")?;
            let seed = args.get_u64("seed", 1)?;
            let sets = gen::random_edge_sets(&s, seed, count);
            let report = pencil::verify_pencil(&s, &p, &sets)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.passes { 0 } else { 2 })
        }
        ["pi", "measure"] => {
            let s = load_space(&args)?;
            let lambda = args.get_f64("lambda", 2.0)?;
            let seed = args.get_u64("seed", 1)?;
            let functions = match args.get("functions") {
                None => gen::default_functions(&s, seed, 8),
                Some(spec) => {
                    let k = parse_count_spec(spec, "random")?;
                    gen::default_functions(&s, seed, k)
                }
            };
            let balls = poincare::default_balls(&s, 48, 10);
            let report = poincare::pi_constant(&s, &functions, &balls, lambda, &tols)?;
            emit(&args, &serde_json::to_string_pretty(&report)?)?;
            Ok(if report.failures > 0 { 2 } else { 0 })
        }
        ["pi", "derive"] => {
            let s = load_space(&args)?;
            let lambda = args.get_f64("lambda", 2.0)?;
            let seed = args.get_u64("seed", 1)?;
            let k = parse_count_spec(args.get("pairs").unwrap_or("random:12"), "random")?;
            let mut rng = mms_core::rng::Rng::new(seed);
            let n = s.vertex_count();
            let mut pairs = Vec::new();
            let mut guard = 0;
            while pairs.len() < k && guard < 40 * k {
                guard += 1;
                let a = rng.below(n);
                let b = rng.below(n);
                if a != b && !pairs.contains(&(a, b)) {
                    pairs.push((a, b));
                }
            }
            let functions = gen::default_functions(&s, seed, 6);
            let balls = poincare::default_balls(&s, 48, 10);
            let pencils = poincare::build_pencils(&s, &pairs, &tols)?;
            let mut worst: Option<poincare::PencilToPiReport> = None;
            for u in &functions {
                let g = poincare::minimal_upper_gradient(&s, u);
                if g.sup_norm() == 0.0 {
                    continue;
                }
                let rep = poincare::pencil_to_pi_with(
                    &s,
                    u,
                    &DensitySequence::constant(g),
                    &pencils,
                    &balls,
                    lambda,
                    8,
                )?;
                if worst
                    .as_ref()
                    .is_none_or(|w| rep.derived_constant > w.derived_constant)
                {
                    worst = Some(rep);
                }
            }
            let report = worst.ok_or_else(|| anyhow!("all sampled functions were constant"))?;
            emit(&args, &serde_json::to_string_pretty(&report)?)?;
            Ok(if report.failures > 0 { 2 } else { 0 })
        }
        ["bv", "tv"] => {
            let s = load_space(&args)?;
            let u = load_field(&s, &args, "u")?;
            let tv = bv::total_variation(&s, &u);
            println!("{}", serde_json::to_string_pretty(&tv)?);
            Ok(0)
        }
        ["bv", "audit"] => {
            let s = load_space(&args)?;
            let u = load_field(&s, &args, "u")?;
            let horizon = args.get_usize("horizon", 8)?;
            let seq = match args.get("sequence").unwrap_or("constant") {
                "constant" => {
                    DensitySequence::constant(poincare::minimal_upper_gradient(&s, &u))
                }
                "zero" => DensitySequence::constant(mms_core::field::Density::zeros(&s)),
                path => {
                    let text = std::fs::read_to_string(path)
                        .with_context(|| format!("reading {path}"))?;
                    DensitySequence::constant(field::density_from_json(&s, &text)?)
                }
            };
            let fam = bv::default_audit_family(&s, 64);
            let cert = bv::audit_bvam(&s, &u, &seq, &fam, horizon)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "liminf_mass": cert.liminf_mass,
                    "audited": cert.audited,
                    "exceptional": cert.exceptional.len(),
                    "passed_by_divergence": cert.passed_by_divergence,
                    "horizon_limited": cert.horizon_limited,
                    "valid": cert.is_valid(),
                }))?
            );
            Ok(if cert.is_valid() { 0 } else { 2 })
        }
        ["bv", "smooth"] => {
            let s = load_space(&args)?;
            let u = load_field(&s, &args, "u")?;
            let eps = args.get_f64("eps", 4.0 * s.max_edge_length())?;
            let (_, _, report) = bv::discrete_convolution(&s, &u, eps)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(0)
        }
        ["bv", "counterexample"] => {
            let n = args.get_usize("n", 128)?;
            let (_, _, report) = bv::counterexample_space(n)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(0)
        }
        ["suite", "equivalence"] => {
            let path = args.require("spec")?;
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            let spec: suite::ExperimentSpec = serde_json::from_str(&text)?;
            let report = suite::equivalence_suite(&spec)?;
            match args.get("out") {
                Some(base) => {
                    std::fs::write(format!("{base}.json"), suite::report_to_json(&report))?;
                    std::fs::write(format!("{base}.csv"), suite::report_to_csv(&report))?;
                    eprintln!("wrote {base}.json and {base}.csv");
                }
                None => println!("{}", suite::report_to_json(&report)),
            }
            Ok(if report.coherence_ok { 0 } else { 2 })
        }
        _ => {
            eprintln!("{USAGE}");
            bail!("unrecognized command: {:?}", args.positional)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(3)
        }
    }
}
