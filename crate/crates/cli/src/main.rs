//! `bvkit`: variation, decomposition, approximation, discrepancy and
//! Koksma–Hlawka certificates from the command line.
//!
//! Results are JSON. With `--out` the artifact goes to a file and a one-line
//! summary to stdout; without it the JSON itself is printed. Failures print
//! `{"error": kind, "message": ...}` on stderr and exit with 2 (invalid
//! input), 3 (resource limit) or 4 (a certified inequality failed).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bvkit_core::discrepancy::{points_from_spec, star_discrepancy, star_discrepancy_grid_bound};
use bvkit_core::kh::{certify, reference_integral, zoo_variation};
use bvkit_core::simple_fn::{max_sampled_error, monotone_approximate, SetFamily};
use bvkit_core::suite::write_suite;
use bvkit_core::variation::{hk_on_ladder, hk_refined, is_completely_monotone, leonov_decompose};
use bvkit_core::{zoo, Error, Ladder, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "bvkit",
    version,
    about = "Multivariate variation and QMC error certificates"
)]
struct Cli {
    /// Dimension for dimension-generic functions and point sets.
    #[arg(long, global = true, default_value_t = 2)]
    d: usize,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (a directory for `suite`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Hardy–Krause variation on a uniform ladder, optionally refined.
    Variation {
        #[arg(long = "fn")]
        func: String,
        #[arg(long)]
        cells: usize,
        /// Number of dyadic refinements.
        #[arg(long)]
        refine: Option<usize>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Split into two completely monotone parts on a uniform ladder.
    Decompose {
        #[arg(long = "fn")]
        func: String,
        #[arg(long)]
        cells: usize,
    },
    /// Anchored-box step approximation of a completely monotone function.
    Approx {
        #[arg(long = "fn")]
        func: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        check_samples: usize,
    },
    /// Star discrepancy of a generated or CSV point set.
    Discrepancy {
        #[arg(long)]
        points: String,
        /// Also report the bracket from an `m`-grid sweep.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Koksma–Hlawka certificate for a function and point set.
    Kh {
        #[arg(long = "fn")]
        func: String,
        #[arg(long)]
        points: String,
        #[arg(long, default_value = "rstar")]
        family: SetFamily,
    },
    /// Full certificate table and structural checks.
    Suite,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ResourceLimit { .. } => 3,
        Error::InequalityViolation(_) => 4,
        _ => 2,
    }
}

fn report(e: &Error) -> ExitCode {
    eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
    ExitCode::from(exit_code(e))
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T, summary: String) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => {
            fs::write(p, text)?;
            println!("{summary} -> {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn positive(name: &str, v: usize) -> Result<usize> {
    if v == 0 {
        Err(Error::InvalidArgument(format!(
            "--{name} must be at least 1"
        )))
    } else {
        Ok(v)
    }
}

fn run(cli: Cli) -> Result<()> {
    let d = cli.d;
    let out = cli.out.as_deref();
    match cli.cmd {
        Cmd::Variation {
            func,
            cells,
            refine,
            tol,
        } => {
            let f = zoo::get(&func, d)?;
            let ladder = Ladder::uniform(f.dim(), positive("cells", cells)?)?;
            let r = match refine {
                Some(k) => hk_refined(&f, &ladder, tol, k)?,
                None => hk_on_ladder(&f, &ladder)?,
            };
            let s = format!(
                "{func}: hk_total={} vitali={} cells={:?} converged={}",
                r.hk_total, r.vitali, r.ladder_cells_per_axis, r.converged
            );
            emit(out, &r, s)
        }
        Cmd::Decompose { func, cells } => {
            let f = zoo::get(&func, d)?;
            let ladder = Ladder::uniform(f.dim(), positive("cells", cells)?)?;
            let dec = leonov_decompose(&f, &ladder)?;
            let plus = is_completely_monotone(&dec.f_plus, &ladder)?;
            let minus = is_completely_monotone(&dec.f_minus, &ladder)?;
            let s = format!(
                "{func}: reconstruction error={} f_plus monotone={} f_minus monotone={}",
                dec.max_reconstruction_error, plus.monotone, minus.monotone
            );
            let v = json!({"decomposition": dec, "f_plus_check": plus, "f_minus_check": minus});
            emit(out, &v, s)
        }
        Cmd::Approx {
            func,
            n,
            check_samples,
        } => {
            let f = zoo::get(&func, d)?;
            let a = monotone_approximate(&f, positive("n", n)?)?;
            let err = max_sampled_error(
                &f,
                &a.simple,
                positive("check-samples", check_samples)?,
                cli.seed,
            )?;
            let bound = f.dim() as f64 / n as f64;
            let s = format!(
                "{func}: n={n} terms={} max sampled error={err} (bound {bound})",
                a.simple.len()
            );
            let v = json!({
                "approximation": a,
                "max_sampled_error": err,
                "error_bound": bound,
                "samples": check_samples,
                "seed": cli.seed,
            });
            emit(out, &v, s)
        }
        Cmd::Discrepancy { points, grid } => {
            let p = points_from_spec(&points, d, cli.seed)?;
            let fallback = grid.unwrap_or(256);
            let est = star_discrepancy(&p, positive("grid", fallback)?)?;
            let mut v = json!({
                "dstar": est.dstar,
                "method": est.method,
                "lower": est.lower,
                "pointset": p.label(),
                "n": p.len(),
                "d": p.dim(),
            });
            if let Some(m) = grid {
                let (lo, hi) = star_discrepancy_grid_bound(&p, m)?;
                v["grid_bracket"] = json!({"m": m, "lower": lo, "upper": hi});
            }
            let s = format!("{points}: dstar={} ({})", est.dstar, est.method);
            emit(out, &v, s)
        }
        Cmd::Kh {
            func,
            points,
            family,
        } => {
            let f = zoo::get(&func, d)?;
            let p = points_from_spec(&points, f.dim(), cli.seed)?;
            let est = star_discrepancy(&p, 256)?;
            let var = zoo_variation(&f, family)?;
            let cert = certify(&func, &f, &p, &est, var, reference_integral(&f)?)?;
            let s = format!(
                "{func} on {} (N={}): error={} bound={} sound={} vacuous={}",
                cert.pointset, cert.n, cert.empirical_error, cert.bound, cert.sound, cert.vacuous
            );
            emit(out, &cert, s)
        }
        Cmd::Suite => {
            let dir = out.unwrap_or(Path::new("suite-out"));
            let r = write_suite(dir, cli.seed)?;
            let failed = r.checks.iter().filter(|c| !c.pass).count();
            println!(
                "suite: {} certificates, {} checks ({} not passing), 0 violations -> {}",
                r.certificates.len(),
                r.checks.len(),
                failed,
                dir.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return report(&Error::InvalidArgument(
                e.render().to_string().trim().to_string(),
            ));
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            return report(&Error::InvalidArgument(
                "--threads must be at least 1".into(),
            ));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            return report(&Error::InvalidArgument(e.to_string()));
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
