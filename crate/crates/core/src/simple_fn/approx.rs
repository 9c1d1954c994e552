//! Step-function representations over anchored boxes: exact expansion of
//! tabulated functions, the range-partition approximation of completely
//! monotone functions, and family-variation upper bounds built from them.

use serde::{Deserialize, Serialize};

use super::{vs_upper, Set, SetFamily, SimpleFunction, Term};
use crate::discrepancy::halton_points;
use crate::error::{Error, Result};
use crate::function::{GridFunction, Tabulated};
use crate::grid::{AxisSubset, BoxV, Ladder, Point};
use crate::variation::{cm_check_table, default_cm_tolerance, CmCheck, NodeTable};

/// Cap on the number of terms a construction may produce.
const MAX_TERMS: f64 = (1u64 << 24) as f64;

/// One per-axis factor of a product term.
#[derive(Clone, Copy)]
struct AxisChoice {
    /// Node indices on the working axis; equal when the factor is an
    /// evaluation at 1 rather than a difference.
    lo: usize,
    hi: usize,
    diff: bool,
    /// Upper corner of the box factor and whether it is closed there.
    b: f64,
    closed: bool,
}

/// Expands per-axis factor lists into `Σ α 1_{[0,b]^v}` with
/// `α = (-1)^{|w|} Δ_w(f; a, b)` read off the node table (`w` = axes whose
/// factor is a difference, the remaining axes evaluated at 1).
fn expand_products(table: &NodeTable, choices: &[Vec<AxisChoice>]) -> Result<Vec<Term>> {
    let d = choices.len();
    let total: f64 = choices.iter().map(|c| c.len() as f64).product();
    if total > MAX_TERMS {
        return Err(Error::ResourceLimit {
            message: format!("construction would produce {total:.0} terms"),
            suggestion: "lower n or the dimension".into(),
        });
    }
    let grid = &table.grid;
    let mut terms = Vec::new();
    let mut odo = vec![0usize; d];
    'outer: loop {
        let picked: Vec<AxisChoice> = (0..d).map(|i| choices[i][odo[i]]).collect();
        let w_axes: Vec<usize> = (0..d).filter(|&i| picked[i].diff).collect();
        let w = AxisSubset::from_axes(&w_axes, d)?;
        let mut corner_terms = Vec::with_capacity(1 << w_axes.len());
        for s in w.subsets() {
            let idx: Vec<usize> = (0..d)
                .map(|i| {
                    if s.contains(i) {
                        picked[i].lo
                    } else {
                        picked[i].hi
                    }
                })
                .collect();
            corner_terms.push(s.sign() * table.values[grid.flat(&idx)]);
        }
        let alpha = w.sign() * crate::sum::pairwise_sum(&corner_terms);
        if alpha != 0.0 {
            let set = if picked.iter().all(|c| c.b == 1.0 && c.closed) {
                Set::Cube
            } else {
                let b: Vec<f64> = picked.iter().map(|c| c.b).collect();
                let closed: Vec<usize> = (0..d).filter(|&i| picked[i].closed).collect();
                Set::Box(BoxV::anchored(
                    Point::new(b)?,
                    AxisSubset::from_axes(&closed, d)?,
                )?)
            };
            terms.push(Term { alpha, set });
        }
        for i in (0..d).rev() {
            odo[i] += 1;
            if odo[i] < choices[i].len() {
                continue 'outer;
            }
            odo[i] = 0;
        }
        break;
    }
    Ok(terms)
}

/// Exact anchored-box representation of a tabulated step function.
///
/// Per axis, with nodes `0 = p_0 < … < p_K < p_{K+1} = 1`,
/// `T(x) = T(1) 1_{[0,1]} + Σ_k (T(p_{k-1}) - T(p_k)) 1_{[0,p_k)}`; the
/// tensor product of these expansions gives one term per face cell through
/// `1`, so `vs_upper` of the result equals the Hardy–Krause variation on the
/// table's ladder.
pub fn from_tabulated(t: &Tabulated) -> Result<SimpleFunction> {
    let table = NodeTable::from_tabulated(t);
    let d = t.dim();
    let choices: Vec<Vec<AxisChoice>> = (0..d)
        .map(|j| {
            let nodes = t.ladder().nodes(j);
            let last = nodes.len() - 1;
            let mut c = vec![AxisChoice {
                lo: last,
                hi: last,
                diff: false,
                b: 1.0,
                closed: true,
            }];
            c.extend((1..=last).map(|k| AxisChoice {
                lo: k - 1,
                hi: k,
                diff: true,
                b: nodes[k],
                closed: false,
            }));
            c
        })
        .collect();
    let terms = expand_products(&table, &choices)?;
    SimpleFunction::new(d, SetFamily::AnchoredBoxes, terms)
}

/// Smallest float `t` in `[0,1]` with `g(t) >= level`, for nondecreasing
/// `g`; bisection over the bit patterns of nonnegative floats.
fn first_reaching(g: &dyn Fn(f64) -> f64, level: f64) -> f64 {
    if g(0.0) >= level {
        return 0.0;
    }
    let mut lo = 0u64; // g(lo) < level
    let mut hi = 1.0f64.to_bits();
    if g(1.0) < level {
        return 1.0;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if g(f64::from_bits(mid)) >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    f64::from_bits(hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneApproximation {
    pub n: usize,
    pub simple: SimpleFunction,
    /// Per axis: the partition points `0 = y_1 < … < y_{P+1} = 1`.
    pub breakpoints: Vec<Vec<f64>>,
    /// Per axis: the interior points `z_l = (y_l + y_{l+1}) / 2`.
    pub midpoints: Vec<Vec<f64>>,
    /// Ladder spanned by all `y_l` and `z_l`; complete monotonicity was
    /// checked on it.
    pub working_ladder: Ladder,
}

/// Anchored-box step function `f_n = f ∘ φ` with `‖f - f_n‖∞ <= d/n` for a
/// completely monotone `f`.
///
/// On each axis the restriction `g(t) = f(1^{-i}: t^i)` has its range split
/// into `N = max(1, ⌈n (g(1) - g(0))⌉)` equal parts `t_1 < … < t_{N+1}`;
/// `y_l` (`l >= 2`) is the first point where `g` reaches `t_l` (a jump location when
/// `g` jumps over the level), duplicates are dropped and `z_l` is the
/// midpoint of `[y_l, y_{l+1})`. `φ` fixes every `y_l` and 1 and maps
/// `(y_l, y_{l+1})` to `z_l`. Written out per axis,
/// `g(φ(x)) = g(1) 1_{[0,1]} + Σ_l (g(y_l) - g(z_l)) 1_{[0,y_l]} + Σ_l (g(z_{l-1}) - g(y_l)) 1_{[0,y_l)}`,
/// and the tensor product of these expansions gives the terms.
pub fn monotone_approximate(f: &dyn GridFunction, n: usize) -> Result<MonotoneApproximation> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let d = f.dim();
    crate::grid::check_dim(d)?;
    let mut ys = Vec::with_capacity(d);
    let mut zs = Vec::with_capacity(d);
    for i in 0..d {
        let g = |t: f64| {
            let mut p = vec![1.0; d];
            p[i] = t;
            f.eval(&p)
        };
        let (lo, hi) = (g(0.0), g(1.0));
        let range = (hi - lo).max(0.0);
        let parts = (n as f64 * range).ceil().max(1.0);
        if parts > (1u64 << 20) as f64 {
            return Err(Error::ResourceLimit {
                message: format!("range partition on axis {} needs {parts:.0} parts", i + 1),
                suggestion: "lower n".into(),
            });
        }
        let parts = parts as usize;
        let mut y = vec![0.0];
        for l in 1..=parts {
            // the top level is included so a final jump is located too
            let level = if l == parts {
                hi
            } else {
                lo + l as f64 * range / parts as f64
            };
            y.push(first_reaching(&g, level));
        }
        y.push(1.0);
        y.dedup();
        let z: Vec<f64> = y.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        ys.push(y);
        zs.push(z);
    }

    let axes: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut a: Vec<f64> = ys[i][..ys[i].len() - 1].to_vec();
            a.extend(zs[i].iter().copied());
            // a midpoint rounds to 1 only when its piece holds no float
            a.retain(|&v| v < 1.0);
            a.sort_by(f64::total_cmp);
            a.dedup();
            a
        })
        .collect();
    let working = Ladder::new(axes)?;
    let table = NodeTable::sample(f, &working)?;
    let check: CmCheck = cm_check_table(&table, default_cm_tolerance(table.max_abs()));
    if !check.monotone {
        return Err(Error::PreconditionViolation {
            message: "function is not completely monotone on the working ladder".into(),
            witness: check.witness.map(Box::new),
        });
    }

    let choices: Vec<Vec<AxisChoice>> = (0..d)
        .map(|i| {
            let nodes = working.nodes(i);
            let at = |v: f64| {
                nodes
                    .binary_search_by(|p| p.total_cmp(&v))
                    .expect("value is a working node")
            };
            let y = &ys[i];
            let z = &zs[i];
            let pieces = z.len();
            let mut c = Vec::with_capacity(2 * pieces + 1);
            // axis in v: closed factors [0, y_l], and [0,1] for l = P+1
            for l in 0..pieces {
                c.push(AxisChoice {
                    lo: at(y[l]),
                    hi: at(z[l]),
                    diff: true,
                    b: y[l],
                    closed: true,
                });
            }
            let one = at(1.0);
            c.push(AxisChoice {
                lo: one,
                hi: one,
                diff: false,
                b: 1.0,
                closed: true,
            });
            // axis not in v: open factors [0, y_l) for l >= 2
            for l in 1..=pieces {
                c.push(AxisChoice {
                    lo: at(z[l - 1]),
                    hi: at(y[l]),
                    diff: true,
                    b: y[l],
                    closed: false,
                });
            }
            c
        })
        .collect();
    let terms = expand_products(&table, &choices)?;
    Ok(MonotoneApproximation {
        n,
        simple: SimpleFunction::new(d, SetFamily::AnchoredBoxes, terms)?,
        breakpoints: ys,
        midpoints: zs,
        working_ladder: working,
    })
}

pub enum DvarInput<'a> {
    Simple(&'a SimpleFunction),
    Function(&'a dyn GridFunction),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DvarRoute {
    /// The input is already a simple function (constant sequence).
    Simple,
    /// Exact anchored-box expansion of a tabulated step function.
    TabulatedExact,
    /// Range-partition approximations of a completely monotone function.
    MonotoneApprox,
    /// Step functions sampled on uniform grids of a non-monotone function.
    StepApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DvarTracePoint {
    pub n: usize,
    pub terms: usize,
    pub vs_upper: f64,
    /// Sampled `sup |f - f_n|`, when affordable.
    pub sup_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DvarResult {
    #[serde(with = "crate::jsonf")]
    pub value: f64,
    /// `true` when `value` is an upper bound on the family variation by
    /// construction (or `+∞`).
    pub certified: bool,
    pub route: DvarRoute,
    pub trace: Vec<DvarTracePoint>,
}

const ERROR_SAMPLES: usize = 4096;

fn sampled_error(f: &dyn GridFunction, s: &SimpleFunction, pts: &[Vec<f64>]) -> Option<f64> {
    use rayon::prelude::*;
    if (s.len() as f64) * (pts.len() as f64) > 2e8 {
        return None;
    }
    let errs: Vec<f64> = pts
        .par_iter()
        .map(|x| (f.eval(x) - s.eval(x)).abs())
        .collect();
    Some(errs.into_iter().fold(0.0, f64::max))
}

/// `max |f - s|` over `samples` seeded uniform points.
pub fn max_sampled_error(
    f: &dyn GridFunction,
    s: &SimpleFunction,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    use rayon::prelude::*;
    if f.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: f.dim(),
        });
    }
    let pts = crate::discrepancy::generate(
        &crate::discrepancy::Generator::UniformRandom { seed },
        samples,
        f.dim(),
    )?;
    let errs: Vec<f64> = pts
        .points()
        .par_iter()
        .map(|x| (f.eval(x) - s.eval(x)).abs())
        .collect();
    Ok(errs.into_iter().fold(0.0, f64::max))
}

/// Probing ladder: `m` cells per axis (16, shrunk so the node count stays
/// below 2^20) merged with the function's own axis breaks.
pub fn probe_ladder_for(f: &dyn GridFunction) -> Result<Ladder> {
    let d = f.dim();
    let mut m = 16usize;
    while m > 1 && ((m + 1) as f64).powi(d as i32) > (1u64 << 20) as f64 {
        m /= 2;
    }
    let extra: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            f.axis_breaks(j)
                .into_iter()
                .filter(|&y| (0.0..1.0).contains(&y))
                .collect()
        })
        .collect();
    Ladder::uniform(d, m)?.with_breakpoints(&extra)
}

/// Upper bound on the family variation `V^𝒟(f)` together with the sequence
/// of simple functions' `Σ|α|h` values that produced it.
///
/// * simple input: its own `vs_upper` (re-tagged from anchored boxes to
///   convex sets if asked; the reverse is refused);
/// * tabulated input: its exact anchored-box expansion;
/// * completely monotone input (checked on a probing ladder), anchored
///   family: `monotone_approximate` for `n = 1, 2, 4, …, n_max`, minimum of
///   the trace;
/// * other closed-form input, anchored family: step functions on uniform
///   `m`-grids, `m = 2, 4, …, n_max`. When the sampled sup error does not
///   shrink (it stays above half its first value) the sequence does not
///   converge uniformly and the bound is `+∞`; otherwise the last value is
///   reported uncertified.
pub fn dvar_upper(input: DvarInput<'_>, family: SetFamily, n_max: usize) -> Result<DvarResult> {
    if n_max == 0 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    let retag = |s: &SimpleFunction| -> Result<SimpleFunction> {
        match (s.family(), family) {
            (a, b) if a == b => Ok(s.clone()),
            (SetFamily::AnchoredBoxes, SetFamily::ConvexSets) => {
                SimpleFunction::new(s.dim(), family, s.terms().to_vec())
            }
            _ => Err(Error::UnsupportedInput(format!(
                "a {} simple function has no representation over {family}",
                s.family()
            ))),
        }
    };
    let single = |s: SimpleFunction, route| {
        let v = vs_upper(&s);
        DvarResult {
            value: v,
            certified: true,
            route,
            trace: vec![DvarTracePoint {
                n: 1,
                terms: s.len(),
                vs_upper: v,
                sup_error: Some(0.0),
            }],
        }
    };
    let f = match input {
        DvarInput::Simple(s) => return Ok(single(retag(s)?, DvarRoute::Simple)),
        DvarInput::Function(f) => f,
    };
    if let Some(t) = f.as_tabulated() {
        return Ok(single(
            retag(&from_tabulated(t)?)?,
            DvarRoute::TabulatedExact,
        ));
    }
    if family != SetFamily::AnchoredBoxes {
        return Err(Error::UnsupportedInput(
            "closed-form functions need an explicit simple-function representation \
             for the convex family"
                .into(),
        ));
    }
    let d = f.dim();
    let pts = halton_points(ERROR_SAMPLES, d)?;
    let probe = probe_ladder_for(f)?;
    let table = NodeTable::sample(f, &probe)?;
    let monotone = cm_check_table(&table, default_cm_tolerance(table.max_abs())).monotone;

    let mut trace = Vec::new();
    if monotone {
        let mut n = 1;
        while n <= n_max {
            let approx = monotone_approximate(f, n)?;
            trace.push(DvarTracePoint {
                n,
                terms: approx.simple.len(),
                vs_upper: vs_upper(&approx.simple),
                sup_error: sampled_error(f, &approx.simple, &pts),
            });
            n *= 2;
        }
        let value = trace
            .iter()
            .map(|p| p.vs_upper)
            .fold(f64::INFINITY, f64::min);
        return Ok(DvarResult {
            value,
            certified: true,
            route: DvarRoute::MonotoneApprox,
            trace,
        });
    }

    let mut m = if n_max >= 2 { 2 } else { 1 };
    while m <= n_max && ((m + 1) as f64).powi(d as i32) <= (1u64 << 22) as f64 {
        let t = Tabulated::sample(f, &Ladder::uniform(d, m)?)?;
        let s = from_tabulated(&t)?;
        let errs: Vec<f64> = {
            use rayon::prelude::*;
            pts.par_iter()
                .map(|x| (f.eval(x) - t.eval(x)).abs())
                .collect()
        };
        trace.push(DvarTracePoint {
            n: m,
            terms: s.len(),
            vs_upper: vs_upper(&s),
            sup_error: Some(errs.into_iter().fold(0.0, f64::max)),
        });
        m *= 2;
    }
    let first = trace
        .first()
        .and_then(|p| p.sup_error)
        .unwrap_or(f64::INFINITY);
    let last = trace
        .last()
        .and_then(|p| p.sup_error)
        .unwrap_or(f64::INFINITY);
    let converging = last == 0.0 || last <= 0.5 * first;
    Ok(if converging {
        DvarResult {
            value: trace.last().map(|p| p.vs_upper).unwrap_or(f64::INFINITY),
            certified: false,
            route: DvarRoute::StepApprox,
            trace,
        }
    } else {
        DvarResult {
            value: f64::INFINITY,
            certified: true,
            route: DvarRoute::StepApprox,
            trace,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::from_fn;
    use crate::variation::hk_on_ladder;

    fn max_err(f: &dyn GridFunction, s: &SimpleFunction, pts: &[Vec<f64>]) -> f64 {
        pts.iter()
            .map(|x| (f.eval(x) - s.eval(x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_n4() {
        let f = from_fn(1, |x| x[0]);
        let a = monotone_approximate(&f, 4).unwrap();
        assert_eq!(a.breakpoints[0], vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let pts = halton_points(1000, 1).unwrap();
        assert!(max_err(&f, &a.simple, &pts) <= 0.25);
        assert_eq!(a.simple.eval(&[1.0]), 1.0);
        assert_eq!(a.simple.eval(&[0.5]), 0.5);
        assert_eq!(a.simple.eval(&[0.6]), 0.625);
    }

    #[test]
    fn product_error_bound() {
        let f = from_fn(2, |x| x[0] * x[1]);
        let a = monotone_approximate(&f, 8).unwrap();
        let pts = halton_points(4000, 2).unwrap();
        assert!(max_err(&f, &a.simple, &pts) <= 0.25 + 1e-12);
        // f_n = f ∘ φ: exact at partition points
        assert_eq!(a.simple.eval(&[0.5, 0.25]), 0.125);
    }

    #[test]
    fn step_jump_is_reproduced() {
        let f = from_fn(1, |x| if x[0] >= 0.5 { 1.0 } else { 0.0 });
        for n in [1, 2, 4] {
            let a = monotone_approximate(&f, n).unwrap();
            assert!(a.breakpoints[0].contains(&0.5), "{:?}", a.breakpoints);
            assert_eq!(a.simple.eval(&[0.5]), 1.0);
            assert_eq!(a.simple.eval(&[0.4999999]), 0.0);
            let pts = halton_points(1000, 1).unwrap();
            assert_eq!(max_err(&f, &a.simple, &pts), 0.0);
        }
    }

    #[test]
    fn non_monotone_is_refused() {
        let f = from_fn(2, |x| x[0] * (1.0 - x[1]) + x[1]);
        match monotone_approximate(&f, 4) {
            Err(Error::PreconditionViolation { witness, .. }) => assert!(witness.is_some()),
            other => panic!("expected precondition violation, got {other:?}"),
        }
    }

    #[test]
    fn tabulated_expansion_is_exact() {
        let l = Ladder::new(vec![vec![0.0, 0.3, 0.6], vec![0.0, 0.5]]).unwrap();
        let t = Tabulated::random(&l, 11);
        let s = from_tabulated(&t).unwrap();
        let pts = halton_points(3000, 2).unwrap();
        for x in &pts {
            assert!((s.eval(x) - t.eval(x)).abs() < 1e-12);
        }
        for x in [[1.0, 1.0], [0.3, 1.0], [1.0, 0.5], [0.0, 0.0], [0.6, 0.49]] {
            assert!((s.eval(&x) - t.eval(&x)).abs() < 1e-12, "{x:?}");
        }
        let hk = hk_on_ladder(&t, &l).unwrap().hk_total;
        assert!((vs_upper(&s) - hk).abs() < 1e-12);
    }

    #[test]
    fn dvar_examples() {
        let s = SimpleFunction::indicator(
            2,
            SetFamily::AnchoredBoxes,
            Set::Box(
                BoxV::anchored(Point::new(vec![0.3, 0.7]).unwrap(), AxisSubset::full(2)).unwrap(),
            ),
        )
        .unwrap();
        let r = dvar_upper(DvarInput::Simple(&s), SetFamily::AnchoredBoxes, 8).unwrap();
        assert_eq!(r.value, 1.0);
        assert!(r.certified);

        let id = from_fn(1, |x| x[0]);
        let r = dvar_upper(DvarInput::Function(&id), SetFamily::AnchoredBoxes, 64).unwrap();
        assert_eq!(r.route, DvarRoute::MonotoneApprox);
        assert_eq!(r.trace.len(), 7);
        assert!(r.trace.iter().all(|p| p.vs_upper <= 2.0));
        assert!((r.value - 1.0).abs() < 1e-12);

        let hp = from_fn(2, |x| if x[0] > x[1] { 1.0 } else { 0.0 });
        let r = dvar_upper(DvarInput::Function(&hp), SetFamily::AnchoredBoxes, 16).unwrap();
        assert_eq!(r.value, f64::INFINITY);
        assert!(r.trace.windows(2).all(|w| w[1].vs_upper > w[0].vs_upper));
        assert!(matches!(
            dvar_upper(DvarInput::Function(&hp), SetFamily::ConvexSets, 16),
            Err(Error::UnsupportedInput(_))
        ));

        let wave = from_fn(1, |x| (6.0 * x[0]).sin());
        let r = dvar_upper(DvarInput::Function(&wave), SetFamily::AnchoredBoxes, 64).unwrap();
        assert_eq!(r.route, DvarRoute::StepApprox);
        assert!(!r.certified);
        assert!(r.value.is_finite());
    }
}
