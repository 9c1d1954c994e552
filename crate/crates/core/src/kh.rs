//! Koksma–Hlawka certificates: `|mean f(x_j) - ∫f| <= D*_N · V(f)`, with the
//! provenance of every ingredient carried along so that a lower-bound
//! variation can never pass for a certified one.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrepancy::{DiscrepancyEstimate, PointSet};
use crate::error::{Error, Result};
use crate::function::GridFunction;
use crate::quadrature::{default_cells, integrate};
use crate::simple_fn::{dvar_upper, probe_ladder_for, DvarInput, SetFamily};
use crate::sum::pairwise_sum;
use crate::variation::{hk_on_ladder, hk_refined, ladder_exact_hk};
use crate::zoo::ZooEntry;

/// Slack for round-off when testing the certified inequality.
pub const KH_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariationProvenance {
    /// Hardy–Krause variation attained on a ladder (step functions
    /// subordinate to it, or constant-sign increments).
    LadderExact,
    /// Refinement trace maximum: a lower bound only.
    RefinedLowerBound,
    /// Complexity-weighted bound from an explicit simple-function sequence.
    DvarUpper,
}

impl VariationProvenance {
    pub fn is_upper_bound(self) -> bool {
        !matches!(self, VariationProvenance::RefinedLowerBound)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VariationProvenance::LadderExact => "ladder-exact",
            VariationProvenance::RefinedLowerBound => "refined-lower-bound",
            VariationProvenance::DvarUpper => "dvar-upper",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variation {
    #[serde(with = "crate::jsonf")]
    pub value: f64,
    pub provenance: VariationProvenance,
    pub family: SetFamily,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub value: f64,
    /// `analytic`, `exact-table` or `quadrature`.
    pub provenance: String,
    pub error_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KHCertificate {
    pub function: String,
    pub pointset: String,
    pub n: usize,
    pub d: usize,
    pub discrepancy: f64,
    pub discrepancy_method: String,
    pub variation: Variation,
    #[serde(with = "crate::jsonf")]
    pub bound: f64,
    pub empirical_error: f64,
    pub reference: Reference,
    pub sound: bool,
    pub vacuous: bool,
}

/// `|(1/N) Σ f(x_j) - reference|`.
pub fn empirical_error(f: &dyn GridFunction, p: &PointSet, reference: f64) -> Result<f64> {
    if f.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: p.dim(),
        });
    }
    let vals: Vec<f64> = p.points().par_iter().map(|x| f.eval(x)).collect();
    Ok((pairwise_sum(&vals) / p.len() as f64 - reference).abs())
}

/// Analytic value when the entry has one (exact for tables), otherwise
/// breakpoint-aware Gauss–Legendre quadrature.
pub fn reference_integral(entry: &ZooEntry) -> Result<Reference> {
    if let Some(v) = entry.analytic_integral {
        let provenance = if entry.tabulated().is_some() {
            "exact-table"
        } else {
            "analytic"
        };
        return Ok(Reference {
            value: v,
            provenance: provenance.into(),
            error_estimate: None,
        });
    }
    let q = integrate(entry, default_cells(entry.dim()))?;
    Ok(Reference {
        value: q.value,
        provenance: "quadrature".into(),
        error_estimate: Some(q.error_estimate),
    })
}

/// Variation of a zoo entry relative to `family`, with its provenance.
///
/// Anchored boxes: tables give their ladder value; entries with constant
/// sign increments on the probing ladder and a matching closed form are
/// ladder-exact; entries known to have unbounded variation go through
/// `dvar_upper` (typically `+∞`); anything else is a refinement lower bound.
/// Convex sets: the entry's explicit representation through `dvar_upper`.
pub fn zoo_variation(entry: &ZooEntry, family: SetFamily) -> Result<Variation> {
    if family == SetFamily::ConvexSets {
        let repr = entry.simple_repr(family).ok_or_else(|| {
            Error::UnsupportedInput(format!("`{}` has no convex-set representation", entry.spec))
        })?;
        let r = dvar_upper(DvarInput::Simple(repr), family, 1)?;
        return Ok(Variation {
            value: r.value,
            provenance: VariationProvenance::DvarUpper,
            family,
        });
    }
    if let Some(t) = entry.tabulated() {
        return Ok(Variation {
            value: hk_on_ladder(t, t.ladder())?.hk_total,
            provenance: VariationProvenance::LadderExact,
            family,
        });
    }
    let probe = probe_ladder_for(entry)?;
    if let (Some(exact), Some(hk)) = (ladder_exact_hk(entry, &probe)?, entry.analytic_hk) {
        if (exact.hk_total - hk).abs() <= 1e-9 * (1.0 + hk.abs()) {
            return Ok(Variation {
                value: exact.hk_total.max(hk),
                provenance: VariationProvenance::LadderExact,
                family,
            });
        }
    }
    if !entry.flags.bounded_hk {
        let r = dvar_upper(DvarInput::Function(entry), family, 64)?;
        if r.certified {
            return Ok(Variation {
                value: r.value,
                provenance: VariationProvenance::DvarUpper,
                family,
            });
        }
    }
    let r = hk_refined(entry, &probe, 1e-6, 4)?;
    Ok(Variation {
        value: r.hk_total,
        provenance: VariationProvenance::RefinedLowerBound,
        family,
    })
}

/// Binds discrepancy, variation and empirical error.
///
/// Refuses convex-set variation (it pairs with a convex-set discrepancy,
/// not the star discrepancy). A certificate is sound when the variation is
/// an upper bound; a sound certificate whose error exceeds its bound is a
/// hard failure.
pub fn certify(
    function: &str,
    f: &dyn GridFunction,
    p: &PointSet,
    dstar: &DiscrepancyEstimate,
    variation: Variation,
    reference: Reference,
) -> Result<KHCertificate> {
    if variation.family == SetFamily::ConvexSets {
        return Err(Error::FamilyMismatch(
            "convex-set variation needs a convex-set discrepancy; the star discrepancy \
             only pairs with anchored-box (Hardy–Krause) variation"
                .into(),
        ));
    }
    let err = empirical_error(f, p, reference.value)?;
    let bound = if variation.value.is_infinite() {
        f64::INFINITY
    } else {
        dstar.dstar * variation.value
    };
    let sound = variation.provenance.is_upper_bound();
    let cert = KHCertificate {
        function: function.to_string(),
        pointset: p.label().to_string(),
        n: p.len(),
        d: p.dim(),
        discrepancy: dstar.dstar,
        discrepancy_method: dstar.method.clone(),
        variation,
        bound,
        empirical_error: err,
        reference,
        sound,
        vacuous: bound.is_infinite(),
    };
    if sound && err > bound + KH_SLACK {
        return Err(Error::InequalityViolation(format!(
            "{} on {} (N={}): error {} exceeds bound {}",
            cert.function, cert.pointset, cert.n, err, bound
        )));
    }
    Ok(cert)
}

pub const CSV_COLUMNS: [&str; 10] = [
    "function",
    "pointset",
    "N",
    "d",
    "dstar",
    "variation",
    "provenance",
    "bound",
    "error",
    "sound",
];

/// One certificate per row.
pub fn write_csv_summary<W: Write>(certs: &[KHCertificate], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_COLUMNS)?;
    for c in certs {
        out.write_record([
            c.function.clone(),
            c.pointset.clone(),
            c.n.to_string(),
            c.d.to_string(),
            crate::jsonf::fmt(c.discrepancy),
            crate::jsonf::fmt(c.variation.value),
            c.variation.provenance.as_str().to_string(),
            crate::jsonf::fmt(c.bound),
            crate::jsonf::fmt(c.empirical_error),
            c.sound.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
