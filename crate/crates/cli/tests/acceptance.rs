//! Runs every acceptance criterion at its stated tolerance with seed 1 and
//! prints one PASS/FAIL line per criterion. Exits nonzero if any fails.

use std::time::Instant;

use hermval::RandomStream;
use hermval_cli::constants::{run_constants, ConstantsRequest, Which};
use hermval_cli::suites::{run_suite, SuiteParams};

const SEED: u64 = 1;

fn suite(name: &str) -> Result<String, String> {
    let report = run_suite(name, &SuiteParams::default(), &mut RandomStream::new(SEED, 0)).map_err(|e| e.to_string())?;
    let worst = report
        .checks
        .iter()
        .filter_map(|c| c.deviation_sigma)
        .fold(0.0_f64, f64::max);
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let summary = format!("{} checks, max deviation {worst:.2} sigma", report.checks.len());
    if failed.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; failed: {}", failed.join("; ")))
    }
}

fn constants(which: Which, samples: Option<usize>) -> Result<hermval_cli::constants::ConstantsReport, String> {
    let mut req = ConstantsRequest::new(which);
    req.samples = samples;
    run_constants(&req, &mut RandomStream::new(SEED, 0)).map_err(|e| e.to_string())
}

fn verdict(ok: bool, summary: String) -> Result<String, String> {
    if ok {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn beta() -> Result<String, String> {
    let r = constants(Which::Beta, None)?;
    let joint = r.fit.joint_sigma_distance(&[0.5, -0.5]).map_err(|e| e.to_string())?;
    let held = r.heldout_sigma();
    verdict(
        joint <= 3.0 && r.fit.residual <= 0.02 && held <= 3.0,
        format!(
            "beta = ({:.4}, {:.4}), joint {joint:.2} sigma, residual {:.4}, held-out {held:.2} sigma",
            r.fit.values[0], r.fit.values[1], r.fit.residual
        ),
    )
}

fn kappa() -> Result<String, String> {
    let start = Instant::now();
    let r = constants(Which::Kappa, None)?;
    let i = r.fit.names.iter().position(|n| n == &[0, 4, 0, 0]).ok_or("kappa(0,4,0,0) missing from fit")?;
    let dev = (r.fit.values[i] - 1.0).abs() / r.fit.sigma(i);
    let rel = r.heldout_relative_error();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        r.fit.residual <= 0.02 && dev <= 3.0 && rel <= 0.05 && secs <= 900.0,
        format!(
            "kappa(0,4,0,0) = {:.4} ({dev:.2} sigma), residual {:.4}, held-out error {rel:.4}, {secs:.0} s",
            r.fit.values[i], r.fit.residual
        ),
    )
}

fn gamma() -> Result<String, String> {
    let single = constants(Which::Gamma, Some(20_000))?;
    let double = constants(Which::Gamma, Some(40_000))?;
    let drift = single
        .fit
        .values
        .iter()
        .zip(&double.fit.values)
        .map(|(a, b)| (a - b).abs() / b.abs())
        .fold(0.0_f64, f64::max);
    verdict(
        single.fit.residual <= 0.1 && double.fit.residual <= 0.1 && drift <= 0.1,
        format!(
            "gamma = {:?} -> {:?}, residuals {:.4} / {:.4}, drift {drift:.4}",
            single.fit.values, double.fit.values, single.fit.residual, double.fit.residual
        ),
    )
}

fn determinism() -> Result<String, String> {
    let commands: [&[&str]; 3] = [
        &["verify", "klain", "--samples", "2000"],
        &["constants", "beta", "--samples", "2000"],
        &["valuation", "klain", "--of", "C,2,1", "--planes", "3", "--samples", "5000"],
    ];
    for cmd in commands {
        let with = |threads: &str| {
            let mut args = vec!["hermval", "--seed", "7", "--threads", threads];
            args.extend_from_slice(cmd);
            hermval_cli::run(args)
        };
        let a = with("1");
        let b = with("1");
        let c = with("2");
        if a.code != 0 {
            return Err(format!("`{}` exited {}", cmd.join(" "), a.code));
        }
        if a.output != b.output {
            return Err(format!("`{}` differs between identical runs", cmd.join(" ")));
        }
        if a.output != c.output {
            return Err(format!("`{}` differs between 1 and 2 threads", cmd.join(" ")));
        }
    }
    Ok(format!("{} commands byte-identical across repeats and thread counts", commands.len()))
}

fn main() {
    let criteria: Vec<(&str, Box<dyn Fn() -> Result<String, String>>)> = vec![
        ("intrinsic volume oracles agree", Box::new(|| suite("oracles"))),
        ("gr24 cosine closed form", Box::new(|| suite("gr24"))),
        ("highest-weight function", Box::new(|| suite("hwv"))),
        ("degeneracy anchors", Box::new(|| suite("anchors"))),
        ("hard Lefschetz ratios", Box::new(|| suite("lefschetz"))),
        ("U equals dual C", Box::new(|| suite("duality"))),
        ("Gram ranks of U basis", Box::new(|| suite("gram"))),
        ("phi + 2 psi = V_2 and Klain formula", Box::new(|| suite("c2"))),
        ("Lagrangian Crofton constants", Box::new(beta)),
        ("kinematic constants", Box::new(kappa)),
        ("complex Crofton constants", Box::new(gamma)),
        ("pseudovolume properties and span", Box::new(|| suite("kaz-span"))),
        ("determinism", Box::new(determinism)),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(msg) => println!("criterion {:>2} PASS  {name} ({secs:.1} s): {msg}", i + 1),
            Err(msg) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.1} s): {msg}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
