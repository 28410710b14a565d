//! Command-line front end for `hermval`. [`run`] parses arguments, executes
//! one command and returns the exit code together with the JSON document
//! (or error text) to emit.

pub mod constants;
pub mod suites;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use hermval::bodies::Body;
use hermval::geomlin::{sample_subspace, Subspace};
use hermval::intrinsic::{intrinsic_volume, kubota_oracle, steiner_oracle, SteinerConfig};
use hermval::valuations::{
    complex_cosine_transform, cosine_transform, duality, klain_function, KlainFunction, ValuationEvaluator,
};
use hermval::{Error, Estimate, RandomStream, CONVENTION};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use constants::{run_constants, ConstantsRequest, Which};
use suites::{run_suite, SuiteParams};

pub const BUILD_ID: &str = concat!("hermval-", env!("CARGO_PKG_VERSION"));

pub const EXIT_OK: i32 = 0;
pub const EXIT_ARGUMENT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "hermval", version, about = "Unitarily invariant valuations on convex bodies in C^n")]
struct Cli {
    /// Master seed; every random draw derives from it.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Monte-Carlo sample count (each command has its own default).
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Agreement tolerance in standard errors.
    #[arg(long, global = true, default_value_t = 3.0)]
    sigma: f64,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "HERMVAL_THREADS")]
    threads: Option<usize>,
    /// Write the JSON result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a valuation or its Klain function.
    Valuation {
        #[command(subcommand)]
        which: ValuationCmd,
    },
    /// Intrinsic volume V_j of a body.
    Intrinsic {
        j: usize,
        body: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Face)]
        method: Method,
    },
    /// Run a verification suite.
    Verify {
        suite: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        l: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
    },
    /// Fit kinematic or Crofton constants on the built-in body families.
    Constants {
        #[arg(value_enum)]
        which: WhichArg,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 2)]
        q: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        p: usize,
    },
}

#[derive(Subcommand, Debug)]
enum ValuationCmd {
    /// C_{k,l}(K)
    #[command(name = "C")]
    C { k: usize, l: usize, body: PathBuf },
    /// U_{k,p}(K)
    #[command(name = "U")]
    U { k: usize, p: usize, body: PathBuf },
    /// Kazarnovskii pseudovolume of a polytope.
    Kaz { body: PathBuf },
    /// (Λφ)(K) for φ given by --of.
    Lambda {
        #[arg(long)]
        of: String,
        body: PathBuf,
    },
    /// Klain function of --of at planes.
    Klain(PlaneArgs),
    /// Dual Klain function E ↦ f(E^⟂) of --of.
    Dual(PlaneArgs),
    /// Cosine transform of the Klain function of --of onto j-planes.
    Cosine {
        #[command(flatten)]
        planes: PlaneArgs,
        #[arg(long)]
        j: usize,
    },
}

#[derive(clap::Args, Debug)]
struct PlaneArgs {
    /// Valuation: C,k,l | U,k,p | V,j | chi | vol | kaz (cosine also takes cgr,l).
    #[arg(long)]
    of: String,
    /// Complex dimension n of the ambient ℂⁿ.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// JSON file {"frame": rows} giving the plane; otherwise planes are drawn at random.
    #[arg(long)]
    plane: Option<PathBuf>,
    /// Number of random planes.
    #[arg(long, default_value_t = 1)]
    planes: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Method {
    Face,
    Steiner,
    Kubota,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum WhichArg {
    Kappa,
    Beta,
    Gamma,
}

/// Exit code and the text to print (JSON on success).
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub output: String,
    /// Set when the output should go to a file instead of standard output.
    pub out_path: Option<PathBuf>,
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::Argument(_) => EXIT_ARGUMENT,
        Error::Numerical(_) => EXIT_NUMERICAL,
    }
}

fn error_json(e: &Error) -> String {
    let kind = match e {
        Error::Argument(_) => "argument",
        Error::Numerical(_) => "numerical",
    };
    let msg = match e {
        Error::Argument(m) | Error::Numerical(m) => m,
    };
    pretty(&json!({"error": {"kind": kind, "message": msg}, "build": BUILD_ID, "convention": CONVENTION}))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_ARGUMENT,
            };
            return Outcome { code, output: e.render().to_string(), out_path: None };
        }
    };
    let out_path = cli.out.clone();
    let result = check_config(&cli).and_then(|()| {
        let threads = cli.threads.unwrap_or(1);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
        pool.install(|| execute(&cli))
    });
    match result {
        Ok((code, mut v)) => {
            v["build"] = json!(BUILD_ID);
            v["convention"] = json!(CONVENTION);
            Outcome { code, output: pretty(&v), out_path }
        }
        Err(e) => Outcome { code: error_code(&e), output: error_json(&e), out_path: None },
    }
}

fn check_config(cli: &Cli) -> hermval::Result<()> {
    if cli.samples == Some(0) {
        return Err(Error::Argument("--samples must be at least 1".into()));
    }
    if !(cli.sigma > 0.0 && cli.sigma.is_finite()) {
        return Err(Error::Argument("--sigma must be positive".into()));
    }
    if cli.threads == Some(0) {
        return Err(Error::Argument("--threads must be at least 1".into()));
    }
    Ok(())
}

fn read_body(path: &Path) -> hermval::Result<Body> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Argument(format!("cannot read body file {}: {e}", path.display())))?;
    Body::from_json(&text).map_err(|e| match e {
        Error::Argument(m) => Error::Argument(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn complex_dim(body: &Body) -> hermval::Result<usize> {
    let d = body.ambient_dim();
    if d % 2 != 0 {
        return Err(Error::Argument(format!("body lives in ℝ^{d}, which is not a realified ℂⁿ")));
    }
    Ok(d / 2)
}

fn parse_index(s: &str, what: &str, spec: &str) -> hermval::Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Argument(format!("--of {spec}: {what} `{s}` is not a nonnegative integer")))
}

/// Valuation named by a `--of` string, in ℂⁿ.
fn valuation_from_spec(spec: &str, n: usize, samples: usize) -> hermval::Result<ValuationEvaluator> {
    let parts: Vec<&str> = spec.split(',').collect();
    match parts.as_slice() {
        ["C", k, l] => ValuationEvaluator::c(parse_index(k, "k", spec)?, parse_index(l, "l", spec)?, n, samples),
        ["U", k, p] => ValuationEvaluator::u(parse_index(k, "k", spec)?, parse_index(p, "p", spec)?, n, samples),
        ["V", j] => ValuationEvaluator::intrinsic(parse_index(j, "j", spec)?, 2 * n),
        ["chi"] => Ok(ValuationEvaluator::euler(2 * n)),
        ["vol"] => Ok(ValuationEvaluator::volume(2 * n)),
        ["kaz"] => ValuationEvaluator::kazarnovskii(n),
        _ => Err(Error::Argument(format!(
            "--of `{spec}`: expected C,k,l | U,k,p | V,j | chi | vol | kaz"
        ))),
    }
}

fn read_plane(path: &Path, dim: usize, ambient: usize) -> hermval::Result<Subspace> {
    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    struct PlaneFile {
        frame: Vec<Vec<f64>>,
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Argument(format!("cannot read plane file {}: {e}", path.display())))?;
    let pf: PlaneFile = serde_json::from_str(&text)
        .map_err(|e| Error::Argument(format!("{}: plane JSON: {e}", path.display())))?;
    if pf.frame.len() != ambient || pf.frame.iter().any(|r| r.len() != dim) {
        return Err(Error::Argument(format!(
            "{}: field `frame` must have {ambient} rows of {dim} entries",
            path.display()
        )));
    }
    let m = DMatrix::from_fn(ambient, dim, |r, c| pf.frame[r][c]);
    let cols: Vec<DVector<f64>> = m.column_iter().map(|c| c.into_owned()).collect();
    Subspace::span(ambient, &cols)
        .map_err(|e| Error::Argument(format!("{}: field `frame`: {e}", path.display())))
        .and_then(|e| {
            if e.dim() == dim {
                Ok(e)
            } else {
                Err(Error::Argument(format!("{}: field `frame` has dependent columns", path.display())))
            }
        })
}

fn frame_rows(e: &Subspace) -> Vec<Vec<f64>> {
    let f = e.frame();
    (0..f.nrows()).map(|r| f.row(r).iter().copied().collect()).collect()
}

fn estimate_json(e: &Estimate) -> Value {
    let mut v = e.to_json();
    if let Some(o) = v.as_object_mut() {
        o.remove("convention");
    }
    v
}

fn eval_at_planes(
    name: &str,
    f: &KlainFunction,
    args: &PlaneArgs,
    rng: &mut RandomStream,
) -> hermval::Result<Value> {
    let (k, d) = (f.degree(), f.ambient_dim());
    let planes: Vec<Subspace> = match &args.plane {
        Some(path) => vec![read_plane(path, k, d)?],
        None => {
            if args.planes == 0 {
                return Err(Error::Argument("--planes must be at least 1".into()));
            }
            (0..args.planes).map(|_| sample_subspace(k, d, rng)).collect::<hermval::Result<_>>()?
        }
    };
    let values = planes
        .iter()
        .map(|e| {
            let v = f.eval(e, &mut rng.fork())?;
            Ok(json!({"frame": frame_rows(e), "estimate": estimate_json(&v)}))
        })
        .collect::<hermval::Result<Vec<_>>>()?;
    Ok(json!({"function": name, "degree": k, "ambient_dim": d, "values": values}))
}

fn execute(cli: &Cli) -> hermval::Result<(i32, Value)> {
    let mut rng = RandomStream::new(cli.seed, 0);
    let samples = cli.samples.unwrap_or(10_000);
    match &cli.command {
        Command::Valuation { which } => {
            let v = valuation(which, samples, &mut rng)?;
            Ok((EXIT_OK, json!({"command": "valuation", "result": v})))
        }
        Command::Intrinsic { j, body, method } => {
            let b = read_body(body)?;
            let e = match method {
                Method::Face => intrinsic_volume(&b, *j, &mut rng)?,
                Method::Kubota => kubota_oracle(&b, *j, &mut rng, samples)?,
                Method::Steiner => {
                    let Body::Polytope(p) = &b else {
                        return Err(Error::Argument("the Steiner method needs a polytope body".into()));
                    };
                    let d = p.ambient_dim();
                    if *j > d {
                        return Err(Error::Argument(format!("V_{j} requested in ℝ^{d}")));
                    }
                    steiner_oracle(p, &mut rng, samples, &SteinerConfig::for_dim(d))?.volumes[*j]
                }
            };
            Ok((
                EXIT_OK,
                json!({"command": "intrinsic", "result": {"j": j, "method": format!("{method:?}").to_lowercase(), "estimate": estimate_json(&e)}}),
            ))
        }
        Command::Verify { suite, n, k, l, p } => {
            let params = SuiteParams { n: *n, k: *k, l: *l, p: *p, samples: cli.samples, sigma: cli.sigma };
            let report = run_suite(suite, &params, &mut rng)?;
            let code = if report.pass() { EXIT_OK } else { EXIT_NUMERICAL };
            Ok((code, json!({"command": "verify", "result": report.to_json()})))
        }
        Command::Constants { which, n, q, k, p } => {
            let which = match which {
                WhichArg::Kappa => Which::Kappa,
                WhichArg::Beta => Which::Beta,
                WhichArg::Gamma => Which::Gamma,
            };
            let mut req = ConstantsRequest::new(which);
            if let Some(n) = n {
                req.n = *n;
            }
            req.q = *q;
            req.k = *k;
            req.p = *p;
            req.samples = cli.samples;
            let report = run_constants(&req, &mut rng)?;
            Ok((EXIT_OK, json!({"command": "constants", "which": format!("{which:?}").to_lowercase(), "result": report.to_json()})))
        }
    }
}

fn valuation(which: &ValuationCmd, samples: usize, rng: &mut RandomStream) -> hermval::Result<Value> {
    let on_body = |phi: ValuationEvaluator, b: &Body, rng: &mut RandomStream| -> hermval::Result<Value> {
        let e = phi.evaluate(b, rng)?;
        Ok(json!({"valuation": phi.name(), "degree": phi.degree(), "estimate": estimate_json(&e)}))
    };
    match which {
        ValuationCmd::C { k, l, body } => {
            let b = read_body(body)?;
            on_body(ValuationEvaluator::c(*k, *l, complex_dim(&b)?, samples)?, &b, rng)
        }
        ValuationCmd::U { k, p, body } => {
            let b = read_body(body)?;
            on_body(ValuationEvaluator::u(*k, *p, complex_dim(&b)?, samples)?, &b, rng)
        }
        ValuationCmd::Kaz { body } => {
            let b = read_body(body)?;
            on_body(ValuationEvaluator::kazarnovskii(complex_dim(&b)?)?, &b, rng)
        }
        ValuationCmd::Lambda { of, body } => {
            let b = read_body(body)?;
            let phi = valuation_from_spec(of, complex_dim(&b)?, samples)?;
            on_body(phi.lambda()?, &b, rng)
        }
        ValuationCmd::Klain(args) => {
            let phi = valuation_from_spec(&args.of, args.n, samples)?;
            eval_at_planes(&format!("klain({})", phi.name()), &klain_function(&phi), args, rng)
        }
        ValuationCmd::Dual(args) => {
            let phi = valuation_from_spec(&args.of, args.n, samples)?;
            eval_at_planes(&format!("dual(klain({}))", phi.name()), &duality(&klain_function(&phi)), args, rng)
        }
        ValuationCmd::Cosine { planes, j } => {
            if let Some(l) = planes.of.strip_prefix("cgr,") {
                let l = parse_index(l, "l", &planes.of)?;
                let f = complex_cosine_transform(l, planes.n, *j, samples)?;
                return eval_at_planes(&format!("cosine(cgr_{l})"), &f, planes, rng);
            }
            // each outer draw evaluates the inner Klain function once
            let phi = valuation_from_spec(&planes.of, planes.n, (samples / 100).max(1))?;
            let f = cosine_transform(&klain_function(&phi), *j, samples)?;
            eval_at_planes(&format!("cosine(klain({}))", phi.name()), &f, planes, rng)
        }
    }
}
