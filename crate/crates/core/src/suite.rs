//! The batch run behind `bvkit suite`: Koksma–Hlawka certificates over a
//! fixed (function × point set × N) grid plus a table of structural checks.
//! Output is byte-identical for a given seed at any thread count.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrepancy::{generate, star_discrepancy, DiscrepancyEstimate, Generator, PointSet};
use crate::error::{Error, Result};
use crate::function::Tabulated;
use crate::grid::Ladder;
use crate::kh::{certify, reference_integral, write_csv_summary, zoo_variation, KHCertificate};
use crate::simple_fn::{
    banach_norm, dvar_upper, max_sampled_error, monotone_approximate, DvarInput, SetFamily,
};
use crate::variation::{hk_on_ladder, hk_refined};
use crate::zoo::{self, ZooEntry};

pub const FUNCTIONS: [&str; 4] = ["prod", "linear", "box:a=0.3,0.7", "expsum"];
pub const SIZES: [usize; 3] = [16, 64, 256];

/// One row of `checks.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub check: String,
    pub subject: String,
    pub value: f64,
    pub reference: f64,
    pub pass: bool,
}

impl Check {
    fn new(
        check: &str,
        subject: impl Into<String>,
        value: f64,
        reference: f64,
        pass: bool,
    ) -> Self {
        Check {
            check: check.into(),
            subject: subject.into(),
            value,
            reference,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub certificates: Vec<KHCertificate>,
    pub checks: Vec<Check>,
    /// Sound certificates whose error exceeded the bound, plus failed
    /// submultiplicativity trials.
    pub violations: usize,
}

/// `(‖fg‖, ‖f‖‖g‖)` for `count` seeded random step-function pairs on a
/// `4×4` ladder, with `‖h‖ = sup|h| + σ·HK(h)` (ladder-exact).
pub fn submultiplicativity_trials(count: usize, sigma: f64, seed: u64) -> Result<Vec<(f64, f64)>> {
    let ladder = Ladder::uniform(2, 4)?;
    (0..count as u64)
        .into_par_iter()
        .map(|k| {
            let f = Tabulated::random(&ladder, seed.wrapping_add(2 * k));
            let g = Tabulated::random(&ladder, seed.wrapping_add(2 * k + 1));
            let fg = f.mul(&g)?;
            let norm = |t: &Tabulated| -> Result<f64> {
                banach_norm(t.sup_norm(), sigma, hk_on_ladder(t, &ladder)?.hk_total)
            };
            Ok((norm(&fg)?, norm(&f)? * norm(&g)?))
        })
        .collect()
}

fn point_sets(seed: u64) -> Result<Vec<PointSet>> {
    let mut out = Vec::new();
    for &n in &SIZES {
        out.push(generate(&Generator::Halton, n, 2)?);
        out.push(generate(&Generator::Rank1Lattice { g: None }, n, 2)?);
        out.push(generate(&Generator::CenteredRegular, n, 2)?);
    }
    for (k, &n) in SIZES.iter().enumerate() {
        let s = seed.wrapping_add(k as u64);
        out.push(
            generate(&Generator::UniformRandom { seed: s }, n, 2)?
                .with_label(format!("random:seed={s}")),
        );
    }
    Ok(out)
}

fn structural_checks(
    entries: &[ZooEntry],
    certs: &[KHCertificate],
    seed: u64,
) -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    for d in 1..=3 {
        let prod = zoo::get("prod", d)?;
        let hk = hk_on_ladder(&prod, &Ladder::uniform(d, 7)?)?.hk_total;
        let exact = ((1u64 << d) - 1) as f64;
        checks.push(Check::new(
            "hk-closed-form",
            format!("prod d={d}"),
            hk,
            exact,
            (hk - exact).abs() <= 1e-9,
        ));
    }

    for spec in ["prod", "expsum"] {
        let e = zoo::get(spec, 2)?;
        for n in [1usize, 2, 4, 8, 16] {
            let a = monotone_approximate(&e, n)?;
            let err = max_sampled_error(&e, &a.simple, 4096, seed)?;
            let bound = 2.0 / n as f64;
            checks.push(Check::new(
                "approx-error",
                format!("{spec} n={n}"),
                err,
                bound,
                err <= bound + 1e-12,
            ));
        }
    }

    let hp = zoo::get("halfplane", 2)?;
    let trace = hk_refined(&hp, &Ladder::uniform(2, 2)?, 1e-9, 5)?.trace;
    let increasing = trace.windows(2).all(|w| w[1].hk_total > w[0].hk_total);
    let last = trace.last().map(|t| t.hk_total).unwrap_or(0.0);
    checks.push(Check::new(
        "hk-divergence",
        "halfplane m=64",
        last,
        10.0,
        increasing && last > 10.0,
    ));
    let k = dvar_upper(
        DvarInput::Simple(
            hp.simple_repr(SetFamily::ConvexSets)
                .expect("halfplane is convex"),
        ),
        SetFamily::ConvexSets,
        1,
    )?;
    checks.push(Check::new(
        "k-variation",
        "halfplane",
        k.value,
        1.0,
        k.value == 1.0,
    ));

    for n in [1usize, 2, 4, 8, 16] {
        let p = generate(&Generator::CenteredRegular, n, 1)?;
        let ds = star_discrepancy(&p, 64)?.dstar;
        let exact = 1.0 / (2 * n) as f64;
        checks.push(Check::new(
            "centered-dstar",
            format!("d=1 N={n}"),
            ds,
            exact,
            ds == exact,
        ));
    }

    for e in entries {
        if let Some(hk) = e.analytic_hk {
            checks.push(Check::new(
                "zoo-flags",
                e.spec.clone(),
                e.check.ladder_hk,
                hk,
                e.check.witness.is_some() != e.flags.completely_monotone,
            ));
        }
    }

    // Bound monotone in N for Halton: recorded, not asserted.
    for spec in FUNCTIONS {
        let bounds: Vec<f64> = certs
            .iter()
            .filter(|c| c.function == spec && c.pointset == "halton")
            .map(|c| c.bound)
            .collect();
        let mono = bounds.windows(2).all(|w| w[1] <= w[0]);
        let last = bounds.last().copied().unwrap_or(f64::NAN);
        let first = bounds.first().copied().unwrap_or(f64::NAN);
        checks.push(Check::new(
            "halton-bound-nonincreasing",
            spec,
            last,
            first,
            mono,
        ));
    }

    let trials = submultiplicativity_trials(200, 3.0, seed)?;
    let worst = trials
        .iter()
        .map(|(l, r)| l - r)
        .fold(f64::NEG_INFINITY, f64::max);
    let bad = trials.iter().filter(|(l, r)| *l > r + 1e-9).count();
    checks.push(Check::new(
        "submultiplicativity",
        "200 pairs sigma=3",
        worst,
        0.0,
        bad == 0,
    ));

    Ok(checks)
}

/// Certificates for the suite grid, seeded random sets and the (vacuous)
/// halfplane, plus the structural checks.
pub fn run_suite(seed: u64) -> Result<SuiteReport> {
    let mut specs: Vec<&str> = FUNCTIONS.to_vec();
    specs.push("halfplane");
    let entries: Vec<ZooEntry> = specs
        .par_iter()
        .map(|s| zoo::get(s, 2))
        .collect::<Result<_>>()?;
    let inputs = entries
        .par_iter()
        .map(|e| {
            Ok((
                zoo_variation(e, SetFamily::AnchoredBoxes)?,
                reference_integral(e)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let sets = point_sets(seed)?;
    let dstars: Vec<DiscrepancyEstimate> = sets
        .par_iter()
        .map(|p| star_discrepancy(p, 256))
        .collect::<Result<_>>()?;

    let pairs: Vec<(usize, usize)> = (0..entries.len())
        .flat_map(|i| (0..sets.len()).map(move |j| (i, j)))
        .collect();
    let mut violations = 0;
    let certificates: Vec<KHCertificate> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (v, r) = &inputs[i];
            certify(
                &entries[i].spec,
                &entries[i],
                &sets[j],
                &dstars[j],
                v.clone(),
                r.clone(),
            )
        })
        .collect::<Vec<_>>()
        .into_iter()
        .filter_map(|r| match r {
            Ok(c) => Some(Ok(c)),
            Err(Error::InequalityViolation(_)) => {
                violations += 1;
                None
            }
            Err(e) => Some(Err(e)),
        })
        .collect::<Result<_>>()?;

    let checks = structural_checks(&entries, &certificates, seed)?;
    violations += checks
        .iter()
        .filter(|c| c.check == "submultiplicativity" && !c.pass)
        .count();
    Ok(SuiteReport {
        certificates,
        checks,
        violations,
    })
}

/// Writes `kh.csv`, `checks.csv` and `certificates.json` to `dir`. Returns
/// the report, or an inequality violation once the files are written.
pub fn write_suite(dir: &Path, seed: u64) -> Result<SuiteReport> {
    let report = run_suite(seed)?;
    fs::create_dir_all(dir)?;
    write_csv_summary(&report.certificates, fs::File::create(dir.join("kh.csv"))?)?;
    let mut w = csv::Writer::from_path(dir.join("checks.csv"))?;
    w.write_record(["check", "subject", "value", "reference", "pass"])?;
    for c in &report.checks {
        w.write_record([
            c.check.clone(),
            c.subject.clone(),
            crate::jsonf::fmt(c.value),
            crate::jsonf::fmt(c.reference),
            c.pass.to_string(),
        ])?;
    }
    w.flush()?;
    fs::write(
        dir.join("certificates.json"),
        serde_json::to_string_pretty(&report.certificates)? + "\n",
    )?;
    if report.violations > 0 {
        return Err(Error::InequalityViolation(format!(
            "{} certified inequalities failed; see {}",
            report.violations,
            dir.display()
        )));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn submultiplicativity_holds() {
        let t = submultiplicativity_trials(50, 3.0, 11).unwrap();
        assert!(t.iter().all(|(l, r)| *l <= r + 1e-9));
    }

    #[test]
    fn point_set_grid() {
        let sets = point_sets(0).unwrap();
        assert_eq!(sets.len(), 12);
        assert!(sets.iter().all(|p| p.dim() == 2));
    }
}
