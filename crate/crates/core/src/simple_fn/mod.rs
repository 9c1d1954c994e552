//! Simple functions `Σ α_i 1_{A_i}` over a set family, complexity-weighted
//! variation bounds, the `‖f‖∞ + σV` norm, and constructive approximation of
//! completely monotone functions by anchored-box step functions.

mod approx;
mod sets;

pub use approx::{
    dvar_upper, from_tabulated, max_sampled_error, monotone_approximate, probe_ladder_for,
    DvarInput, DvarResult, DvarRoute, DvarTracePoint, MonotoneApproximation,
};
pub use sets::{Ball, ConvexBody, Halfspace, Set, MAX_HALFSPACES};

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::GridFunction;
use crate::grid::{check_dim, product};
use crate::sum::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SetFamily {
    /// Anchored boxes `[0,b]^v` (ℛ*).
    #[serde(rename = "rstar")]
    AnchoredBoxes,
    /// Convex sets (𝒦), represented by half-space / ball intersections;
    /// `d <= 3`.
    #[serde(rename = "convex")]
    ConvexSets,
}

impl SetFamily {
    /// Both supported families are closed under pairwise intersection.
    pub fn is_intersection_closed(self) -> bool {
        true
    }

    /// Whether `set` is a direct member of the family in dimension `d`.
    pub fn admits(self, set: &Set, d: usize) -> bool {
        match (self, set) {
            (_, Set::Empty | Set::Cube) => true,
            (_, Set::Complement { .. }) => false,
            (SetFamily::AnchoredBoxes, Set::Box(b)) => b.is_anchored() && b.dim() == d,
            (SetFamily::AnchoredBoxes, _) => false,
            (SetFamily::ConvexSets, s) => d <= 3 && s.dim().map_or(true, |k| k == d),
        }
    }

    /// A direct member or the complement of one.
    pub fn admits_up_to_complement(self, set: &Set, d: usize) -> bool {
        match set {
            Set::Complement { of } => self.admits(of, d),
            s => self.admits(s, d),
        }
    }
}

impl std::fmt::Display for SetFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SetFamily::AnchoredBoxes => "rstar",
            SetFamily::ConvexSets => "convex",
        })
    }
}

impl std::str::FromStr for SetFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rstar" | "r*" | "anchored" => Ok(SetFamily::AnchoredBoxes),
            "k" | "K" | "convex" => Ok(SetFamily::ConvexSets),
            _ => Err(Error::invalid(format!(
                "unknown set family `{s}` (rstar | k)"
            ))),
        }
    }
}

/// Upper bound on the Harman complexity `h(A)` relative to `family`.
///
/// Exact for the values 0 (`∅`, the cube) and 1 (any other member or
/// complement of a member). A general axis-parallel box relative to the
/// anchored family is counted through its inclusion–exclusion expansion.
/// `None` when no representation is known.
pub fn harman_complexity_upper(set: &Set, family: SetFamily, d: usize) -> Option<u64> {
    if set.triviality(d).is_some() {
        return Some(0);
    }
    if family.admits_up_to_complement(set, d) {
        return Some(1);
    }
    let inner = match set {
        Set::Complement { of } => of.as_ref(),
        s => s,
    };
    match (family, inner) {
        (SetFamily::AnchoredBoxes, Set::Box(b)) if b.dim() == d => {
            // [a,b) = Σ_s (-1)^{|s|} [0, b^{-s}:a^{s}) over axes with a_i > 0
            let lifted = (0..d).filter(|&i| b.a()[i] > 0.0).count();
            Some(1u64 << lifted)
        }
        _ => None,
    }
}

/// Upper bound on `h(A)` for a set given as the algebraic sum of the stored
/// terms of `repr` (each term counted by its own complexity).
pub fn harman_complexity_of_sum(repr: &SimpleFunction) -> Option<u64> {
    repr.terms
        .iter()
        .map(|t| harman_complexity_upper(&t.set, repr.family, repr.dim))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub alpha: f64,
    pub set: Set,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SimpleRepr", into = "SimpleRepr")]
pub struct SimpleFunction {
    dim: usize,
    family: SetFamily,
    terms: Vec<Term>,
}

#[derive(Serialize, Deserialize)]
struct SimpleRepr {
    family: SetFamily,
    dim: usize,
    terms: Vec<Term>,
}

impl TryFrom<SimpleRepr> for SimpleFunction {
    type Error = Error;
    fn try_from(r: SimpleRepr) -> Result<Self> {
        SimpleFunction::new(r.dim, r.family, r.terms)
    }
}

impl From<SimpleFunction> for SimpleRepr {
    fn from(s: SimpleFunction) -> Self {
        SimpleRepr {
            family: s.family,
            dim: s.dim,
            terms: s.terms,
        }
    }
}

/// `‖·‖∞` value with a flag telling whether it is exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norm {
    pub value: f64,
    pub exact: bool,
}

/// Per-term complexities of a representation and the resulting bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityAccount {
    pub per_term: Vec<u64>,
    pub vs_upper: f64,
}

impl SimpleFunction {
    /// Every set must be a member of `family` or the complement of one.
    pub fn new(dim: usize, family: SetFamily, terms: Vec<Term>) -> Result<Self> {
        check_dim(dim)?;
        if family == SetFamily::ConvexSets && dim > 3 {
            return Err(Error::invalid("the convex family is supported for d <= 3"));
        }
        for t in &terms {
            if !t.alpha.is_finite() {
                return Err(Error::invalid("coefficients must be finite"));
            }
            if let Some(k) = t.set.dim() {
                if k != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: k,
                    });
                }
            }
            if !family.admits_up_to_complement(&t.set, dim) {
                return Err(Error::FamilyMismatch(format!(
                    "set {} is not a member of the {family} family",
                    t.set.key()
                )));
            }
        }
        Ok(SimpleFunction { dim, family, terms })
    }

    pub fn zero(dim: usize, family: SetFamily) -> Self {
        SimpleFunction {
            dim,
            family,
            terms: Vec::new(),
        }
    }

    pub fn indicator(dim: usize, family: SetFamily, set: Set) -> Result<Self> {
        SimpleFunction::new(dim, family, vec![Term { alpha: 1.0, set }])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> SetFamily {
        self.family
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Exact sum of the coefficients of the sets containing `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let hits: Vec<f64> = self
            .terms
            .iter()
            .filter(|t| t.set.contains(x))
            .map(|t| t.alpha)
            .collect();
        pairwise_sum(&hits)
    }

    fn check_compatible(&self, other: &SimpleFunction) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        if self.family != other.family {
            return Err(Error::FamilyMismatch(format!(
                "cannot combine {} and {} simple functions",
                self.family, other.family
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &SimpleFunction) -> Result<SimpleFunction> {
        self.check_compatible(other)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(SimpleFunction {
            dim: self.dim,
            family: self.family,
            terms,
        })
    }

    pub fn scale(&self, c: f64) -> SimpleFunction {
        SimpleFunction {
            dim: self.dim,
            family: self.family,
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    alpha: c * t.alpha,
                    set: t.set.clone(),
                })
                .collect(),
        }
    }

    /// `c 1_{A^c}` becomes `c 1_{[0,1]^d} - c 1_A`.
    fn expand_complements(&self) -> Vec<Term> {
        let mut out = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            match &t.set {
                Set::Complement { of } => {
                    out.push(Term {
                        alpha: t.alpha,
                        set: Set::Cube,
                    });
                    out.push(Term {
                        alpha: -t.alpha,
                        set: (**of).clone(),
                    });
                }
                _ => out.push(t.clone()),
            }
        }
        out
    }

    /// Pointwise product via `1_A 1_B = 1_{A∩B}`: the cross-product term
    /// list, with complements expanded first.
    pub fn multiply(&self, other: &SimpleFunction) -> Result<SimpleFunction> {
        self.check_compatible(other)?;
        if !self.family.is_intersection_closed() {
            return Err(Error::UnsupportedOperation(format!(
                "the {} family is not closed under intersection",
                self.family
            )));
        }
        let lhs = self.expand_complements();
        let rhs = other.expand_complements();
        let mut terms = Vec::with_capacity(lhs.len() * rhs.len());
        for s in &lhs {
            for t in &rhs {
                terms.push(Term {
                    alpha: s.alpha * t.alpha,
                    set: s.set.intersect(&t.set, self.dim)?,
                });
            }
        }
        SimpleFunction::new(self.dim, self.family, terms)
    }

    /// Sums the coefficients of identical sets and drops empty sets and zero
    /// coefficients. First-occurrence order is kept.
    pub fn merged(&self) -> SimpleFunction {
        let mut acc: IndexMap<String, (Vec<f64>, Set)> = IndexMap::new();
        for t in &self.terms {
            if t.set.triviality(self.dim) == Some(false) {
                continue;
            }
            acc.entry(t.set.key())
                .or_insert_with(|| (Vec::new(), t.set.clone()))
                .0
                .push(t.alpha);
        }
        let terms = acc
            .into_values()
            .map(|(alphas, set)| Term {
                alpha: pairwise_sum(&alphas),
                set,
            })
            .filter(|t| t.alpha != 0.0)
            .collect();
        SimpleFunction {
            dim: self.dim,
            family: self.family,
            terms,
        }
    }

    /// Complexity of every stored term and `Σ |α_i| h_i` over them.
    pub fn complexity_account(&self) -> ComplexityAccount {
        let per_term: Vec<u64> = self
            .terms
            .iter()
            .map(|t| {
                harman_complexity_upper(&t.set, self.family, self.dim)
                    .expect("terms are members or complements of members")
            })
            .collect();
        let weighted: Vec<f64> = self
            .terms
            .iter()
            .zip(&per_term)
            .map(|(t, &h)| t.alpha.abs() * h as f64)
            .collect();
        ComplexityAccount {
            per_term,
            vs_upper: pairwise_sum(&weighted),
        }
    }

    /// Coordinates at which the function can change, per axis; `None` when
    /// a non-box set is present.
    fn arrangement(&self) -> Option<Vec<Vec<f64>>> {
        let mut axes: Vec<Vec<f64>> = vec![vec![0.0, 1.0]; self.dim];
        for t in &self.terms {
            if !t.set.is_box_like() {
                return None;
            }
            let inner = match &t.set {
                Set::Complement { of } => of.as_ref(),
                s => s,
            };
            if let Set::Box(b) = inner {
                for (i, ax) in axes.iter_mut().enumerate() {
                    ax.push(b.a()[i]);
                    ax.push(b.b()[i]);
                }
            }
        }
        for ax in axes.iter_mut() {
            ax.sort_by(f64::total_cmp);
            ax.dedup();
            // every breakpoint plus the midpoint of every gap
            let mids: Vec<f64> = ax.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
            ax.extend(mids);
            ax.sort_by(f64::total_cmp);
        }
        Some(axes)
    }

    /// `(min |s|, max |s|)` over the cube; exact for box-only
    /// representations of moderate size, otherwise sampled.
    pub fn abs_range(&self) -> (f64, f64, bool) {
        const MAX_EVALS: f64 = (1u64 << 20) as f64;
        let (points, exact) = match self.arrangement() {
            Some(axes) if axes.iter().map(|a| a.len() as f64).product::<f64>() <= MAX_EVALS => {
                (product(&axes), true)
            }
            _ => {
                let mut pts = crate::discrepancy::halton_points(1 << 14, self.dim)
                    .expect("dimension already validated");
                let k = ((1u64 << 14) as f64)
                    .powf(1.0 / self.dim as f64)
                    .floor()
                    .max(2.0) as usize;
                let axis: Vec<f64> = (0..=k).map(|i| i as f64 / k as f64).collect();
                pts.extend(product(&vec![axis; self.dim]));
                (pts, false)
            }
        };
        let vals: Vec<f64> = points.par_iter().map(|x| self.eval(x).abs()).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(0.0, f64::max);
        (lo, hi, exact)
    }

    pub fn sup_norm(&self) -> Norm {
        let (_, hi, exact) = self.abs_range();
        Norm { value: hi, exact }
    }
}

impl GridFunction for SimpleFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        SimpleFunction::eval(self, x)
    }

    fn axis_breaks(&self, axis: usize) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .terms
            .iter()
            .filter_map(|t| match &t.set {
                Set::Box(b) => Some(b.b()[axis]),
                _ => None,
            })
            .filter(|&y| y < 1.0)
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// `Σ |α_i| h(A_i)` after merging duplicate sets: an upper bound on the
/// family variation of the represented function. No search over other
/// representations is made.
pub fn vs_upper(s: &SimpleFunction) -> f64 {
    s.merged().complexity_account().vs_upper
}

/// `‖f‖∞ + σ·var`.
pub fn banach_norm(sup_norm: f64, sigma: f64, var: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    if var < 0.0 || sup_norm < 0.0 {
        return Err(Error::invalid("norm components must be nonnegative"));
    }
    Ok(sup_norm + sigma * var)
}

/// The three increments of the chain inequality for completely monotone
/// functions, moving the `j`-th coordinate from `a_j` to `x_j` with the
/// remaining coordinates at `a`, then with axis `i` lifted to 1, then with
/// all other axes at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub holds: bool,
}

/// `|f(x^j:a^{-j}) - f(a)| <= |f(1^i:x^j:a^{-{i,j}}) - f(1^i:a^{-i})|
///   <= |f(x^j:1^{-j}) - f(a^j:1^{-j})|`, up to `1e-12 (1 + max|f|)`.
pub fn chain_inequality_check(
    f: &dyn GridFunction,
    x: &[f64],
    a: &[f64],
    i: usize,
    j: usize,
) -> Result<ChainCheck> {
    let d = f.dim();
    if x.len() != d || a.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if x.len() != d { x.len() } else { a.len() },
        });
    }
    if i == j || i >= d || j >= d {
        return Err(Error::invalid(
            "axes must be distinct and within the dimension",
        ));
    }
    let with = |base: &[f64], edits: &[(usize, f64)]| {
        let mut p = base.to_vec();
        for &(k, v) in edits {
            p[k] = v;
        }
        f.eval(&p)
    };
    let ones = vec![1.0; d];
    let vals = [
        with(a, &[(j, x[j])]),
        f.eval(a),
        with(a, &[(i, 1.0), (j, x[j])]),
        with(a, &[(i, 1.0)]),
        with(&ones, &[(j, x[j])]),
        with(&ones, &[(j, a[j])]),
    ];
    let q1 = (vals[0] - vals[1]).abs();
    let q2 = (vals[2] - vals[3]).abs();
    let q3 = (vals[4] - vals[5]).abs();
    let tol = 1e-12 * (1.0 + vals.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    Ok(ChainCheck {
        q1,
        q2,
        q3,
        holds: q1 <= q2 + tol && q2 <= q3 + tol,
    })
}
