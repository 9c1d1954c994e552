//! Vitali and Hardy–Krause variation over ladders, complete-monotonicity
//! checks and the grid-level Jordan decomposition into completely monotone
//! parts.
//!
//! Every routine samples the function once on the ladder nodes (breakpoints
//! plus 1 on each axis) and works on that table. A cell of the face spanned by
//! `u` is identified by its lower-left node; its quasi-volume is the
//! alternating sum over the `2^{|u|}` corners that differ only on the axes in
//! `u`.

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{sample_nodes, GridFunction, Tabulated};
use crate::grid::{AxisSubset, Ladder, NodeGrid};
use crate::sum::{pairwise_abs_sum, pairwise_sum};

/// How the axes outside a face are pinned when enumerating its cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Pin {
    /// At the node 1: the faces adjacent to `1` used by Hardy–Krause.
    One,
    /// At the node 0: the anchoring of the Jordan decomposition.
    Zero,
    /// At every node: all axis-parallel restrictions.
    Any,
}

pub(crate) struct NodeTable {
    pub grid: NodeGrid,
    pub values: Vec<f64>,
}

impl NodeTable {
    pub fn sample(f: &dyn GridFunction, ladder: &Ladder) -> Result<Self> {
        if f.dim() != ladder.dim() {
            return Err(Error::DimensionMismatch {
                expected: ladder.dim(),
                got: f.dim(),
            });
        }
        ladder.check_node_budget()?;
        let grid = ladder.node_grid();
        let values = sample_nodes(f, &grid);
        Ok(NodeTable { grid, values })
    }

    pub fn from_tabulated(t: &Tabulated) -> Self {
        NodeTable {
            grid: t.grid().clone(),
            values: t.values().to_vec(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Lower-left node indices of the cells of face `u`, in flat order.
    pub fn face_cells(&self, u: AxisSubset, pin: Pin) -> Vec<usize> {
        let counts = self.grid.counts();
        let ranges: Vec<Vec<usize>> = counts
            .iter()
            .enumerate()
            .map(|(j, &n)| {
                if u.contains(j) {
                    (0..n - 1).collect()
                } else {
                    match pin {
                        Pin::One => vec![n - 1],
                        Pin::Zero => vec![0],
                        Pin::Any => (0..n).collect(),
                    }
                }
            })
            .collect();
        let mut out = vec![0usize];
        for (j, r) in ranges.iter().enumerate() {
            let stride = self.grid.stride(j);
            out = out
                .into_iter()
                .flat_map(|base| r.iter().map(move |&i| base + i * stride))
                .collect();
        }
        out
    }

    /// `(sign, offset)` for every corner of a face-`u` cell relative to its
    /// lower-left node.
    pub fn corner_offsets(&self, u: AxisSubset) -> Vec<(f64, usize)> {
        u.subsets()
            .map(|s| {
                // s: axes at the lower corner; u \ s at the upper corner
                let upper = u.intersection(s.complement());
                let off: usize = upper.axes().map(|j| self.grid.stride(j)).sum();
                (s.sign(), off)
            })
            .collect()
    }

    pub fn cell_delta(&self, base: usize, offsets: &[(f64, usize)]) -> f64 {
        let terms: Vec<f64> = offsets
            .iter()
            .map(|&(s, off)| s * self.values[base + off])
            .collect();
        pairwise_sum(&terms)
    }

    /// Quasi-volumes of all cells of face `u`, in flat order.
    pub fn face_deltas(&self, u: AxisSubset, pin: Pin) -> (Vec<usize>, Vec<f64>) {
        let cells = self.face_cells(u, pin);
        let offsets = self.corner_offsets(u);
        let deltas = cells
            .par_iter()
            .map(|&c| self.cell_delta(c, &offsets))
            .collect();
        (cells, deltas)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub cells_per_axis: Vec<usize>,
    pub hk_total: f64,
}

/// Variation of a function over one ladder (or the last ladder of a
/// refinement run).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    pub dimension: usize,
    pub ladder_cells_per_axis: Vec<usize>,
    /// Vitali variation over the ladder (the full face).
    pub vitali: f64,
    /// Contribution of every nonempty face through `1`, keyed like `{1,3}`.
    pub faces: IndexMap<String, f64>,
    pub hk_total: f64,
    /// Set by [`hk_refined`] when successive totals differed by less than the
    /// tolerance. Always `false` for a single-ladder evaluation.
    pub converged: bool,
    pub trace: Vec<TracePoint>,
}

fn face_variation(table: &NodeTable, u: AxisSubset) -> f64 {
    let (_, deltas) = table.face_deltas(u, Pin::One);
    pairwise_abs_sum(&deltas)
}

/// `V_Y(f) = Σ_y |Δ(f; [y, y_+])|` over all cells of the ladder.
pub fn vitali_on_ladder(f: &dyn GridFunction, ladder: &Ladder) -> Result<f64> {
    let table = NodeTable::sample(f, ladder)?;
    Ok(face_variation(&table, AxisSubset::full(ladder.dim())))
}

pub(crate) fn report_from_table(table: &NodeTable, ladder: &Ladder) -> VariationReport {
    let d = ladder.dim();
    let faces: Vec<(AxisSubset, f64)> = AxisSubset::all(d)
        .skip(1)
        .map(|u| (u, face_variation(table, u)))
        .collect();
    let contributions: Vec<f64> = faces.iter().map(|(_, v)| *v).collect();
    let hk_total = pairwise_sum(&contributions);
    let vitali = faces.last().map(|(_, v)| *v).unwrap_or(0.0);
    let cells = ladder.cells_per_axis();
    VariationReport {
        dimension: d,
        ladder_cells_per_axis: cells.clone(),
        vitali,
        faces: faces.into_iter().map(|(u, v)| (u.to_string(), v)).collect(),
        hk_total,
        converged: false,
        trace: vec![TracePoint {
            cells_per_axis: cells,
            hk_total,
        }],
    }
}

/// Hardy–Krause variation over one ladder: the Vitali variations of the
/// restrictions of `f` to every nonempty face through `1`, summed.
pub fn hk_on_ladder(f: &dyn GridFunction, ladder: &Ladder) -> Result<VariationReport> {
    let table = NodeTable::sample(f, ladder)?;
    Ok(report_from_table(&table, ladder))
}

/// Refines the ladder by a factor of two until successive totals differ by
/// less than `tol` or `max_refine` refinements were made. The result is a
/// lower bound on the Hardy–Krause variation.
pub fn hk_refined(
    f: &dyn GridFunction,
    initial: &Ladder,
    tol: f64,
    max_refine: usize,
) -> Result<VariationReport> {
    if !(tol > 0.0) {
        return Err(Error::invalid("refinement tolerance must be positive"));
    }
    let mut ladder = initial.clone();
    let mut report = hk_on_ladder(f, &ladder)?;
    let mut trace = report.trace.clone();
    let mut converged = false;
    for _ in 0..max_refine {
        ladder = ladder.refine(2)?;
        let next = hk_on_ladder(f, &ladder)?;
        trace.extend(next.trace.iter().cloned());
        let diff = (next.hk_total - report.hk_total).abs();
        report = next;
        if diff < tol {
            converged = true;
            break;
        }
    }
    report.trace = trace;
    report.converged = converged;
    Ok(report)
}

/// Hardy–Krause variation when the ladder value is known to be the true
/// value: `f` is tabulated on a ladder that `ladder` refines, or every face
/// through `1` has sign-coherent cell quasi-volumes on `ladder` (then the
/// face sums telescope and no refinement can increase them). The sign test
/// is a necessary condition only; callers use it for functions whose closed
/// form guarantees it.
pub fn ladder_exact_hk(f: &dyn GridFunction, ladder: &Ladder) -> Result<Option<VariationReport>> {
    if let Some(t) = f.as_tabulated() {
        if ladder.refines(t.ladder()) {
            return hk_on_ladder(f, ladder).map(Some);
        }
    }
    let table = NodeTable::sample(f, ladder)?;
    let tol = default_cm_tolerance(table.max_abs());
    for u in AxisSubset::all(ladder.dim()).skip(1) {
        let (_, deltas) = table.face_deltas(u, Pin::One);
        let nonneg = deltas.iter().all(|&x| x >= -tol);
        let nonpos = deltas.iter().all(|&x| x <= tol);
        if !(nonneg || nonpos) {
            return Ok(None);
        }
    }
    Ok(Some(report_from_table(&table, ladder)))
}

/// `1e-12 · (1 + max|f|)`.
pub fn default_cm_tolerance(max_abs: f64) -> f64 {
    1e-12 * (1.0 + max_abs)
}

/// A cell with negative quasi-volume on some axis-parallel restriction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmWitness {
    /// Axes spanned by the violating restriction, e.g. `{1,2}`.
    pub face: String,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmCheck {
    pub monotone: bool,
    pub tolerance: f64,
    pub cells_checked: usize,
    pub witness: Option<CmWitness>,
}

pub(crate) fn cm_check_table(table: &NodeTable, tol: f64) -> CmCheck {
    let d = table.grid.dim();
    let mut checked = 0;
    for u in AxisSubset::all(d).skip(1) {
        let (cells, deltas) = table.face_deltas(u, Pin::Any);
        checked += cells.len();
        if let Some(k) = deltas.iter().position(|&x| x < -tol) {
            let lower = table.grid.point(cells[k]);
            let upper_idx = cells[k] + u.axes().map(|j| table.grid.stride(j)).sum::<usize>();
            return CmCheck {
                monotone: false,
                tolerance: tol,
                cells_checked: checked,
                witness: Some(CmWitness {
                    face: u.to_string(),
                    lower,
                    upper: table.grid.point(upper_idx),
                    delta: deltas[k],
                }),
            };
        }
    }
    CmCheck {
        monotone: true,
        tolerance: tol,
        cells_checked: checked,
        witness: None,
    }
}

/// Checks `Δ^{(s)} >= -tol` on every cell of every axis-parallel restriction
/// of the ladder grid (every nonempty face, off-face axes pinned at every
/// node value). Cells suffice: the quasi-volume of a grid-aligned box is the
/// sum of those of its cells. Passing is a necessary condition for complete
/// monotonicity of `f`; for a step function tabulated on this ladder it is
/// also sufficient.
pub fn is_completely_monotone(f: &dyn GridFunction, ladder: &Ladder) -> Result<CmCheck> {
    let table = NodeTable::sample(f, ladder)?;
    let tol = default_cm_tolerance(table.max_abs());
    Ok(cm_check_table(&table, tol))
}

pub fn is_completely_monotone_with_tol(
    f: &dyn GridFunction,
    ladder: &Ladder,
    tol: f64,
) -> Result<CmCheck> {
    let table = NodeTable::sample(f, ladder)?;
    Ok(cm_check_table(&table, tol))
}

/// `f = f_plus - f_minus` on the ladder nodes, both parts completely
/// monotone on the ladder, `f_plus(0) = f(0)`, `f_minus(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneDecomposition {
    pub ladder: Ladder,
    pub f_plus: Tabulated,
    pub f_minus: Tabulated,
    /// `max |f_plus - f_minus - f|` over the nodes.
    pub max_reconstruction_error: f64,
}

/// Multivariate Jordan decomposition on the ladder grid, anchored at `0`.
///
/// For every nonempty `u`, the cell quasi-volumes of the face through `0`
/// spanned by `u` are split into positive and negative parts; their
/// cumulative sums from `0` are completely monotone functions of `x^u`.
/// `f_plus` collects `f(0)` and the positive parts, `f_minus` the negative
/// parts; inclusion–exclusion gives `f = f_plus - f_minus` at every node.
pub fn leonov_decompose(f: &dyn GridFunction, ladder: &Ladder) -> Result<MonotoneDecomposition> {
    let table = NodeTable::sample(f, ladder)?;
    let tol = default_cm_tolerance(table.max_abs());
    let grid = &table.grid;
    let n = grid.len();

    let (plus, minus) = if cm_check_table(&table, tol).monotone {
        (table.values.clone(), vec![0.0; n])
    } else {
        let d = grid.dim();
        let mut faces: Vec<AxisSubset> = AxisSubset::all(d).skip(1).collect();
        faces.sort_by_key(|u| (u.len(), u.bits()));

        let f0 = table.values[0];
        let mut plus = vec![f0; n];
        let mut minus = vec![0.0; n];
        for u in faces {
            let (cells, deltas) = table.face_deltas(u, Pin::Zero);
            let shift: usize = u.axes().map(|j| grid.stride(j)).sum();
            let mut pos = vec![0.0; n];
            let mut neg = vec![0.0; n];
            for (&c, &dv) in cells.iter().zip(&deltas) {
                pos[c + shift] = dv.max(0.0);
                neg[c + shift] = (-dv).max(0.0);
            }
            for j in u.axes() {
                prefix_sum_along(grid, &mut pos, j, u);
                prefix_sum_along(grid, &mut neg, j, u);
            }
            for k in 0..n {
                let proj = project_to_face(grid, k, u);
                plus[k] += pos[proj];
                minus[k] += neg[proj];
            }
        }
        (plus, minus)
    };

    let max_err = (0..n)
        .map(|k| (plus[k] - minus[k] - table.values[k]).abs())
        .fold(0.0, f64::max);
    let f_plus = Tabulated::new(ladder.clone(), plus)?;
    let f_minus = Tabulated::new(ladder.clone(), minus)?;

    for (name, part) in [("f_plus", &f_plus), ("f_minus", &f_minus)] {
        let t = NodeTable::from_tabulated(part);
        let check = cm_check_table(&t, default_cm_tolerance(t.max_abs()));
        if !check.monotone {
            return Err(Error::InequalityViolation(format!(
                "{name} of the decomposition is not completely monotone: {:?}",
                check.witness
            )));
        }
    }

    Ok(MonotoneDecomposition {
        ladder: ladder.clone(),
        f_plus,
        f_minus,
        max_reconstruction_error: max_err,
    })
}

/// In-place inclusive prefix sum along axis `j`, over the nodes whose
/// off-face coordinates (axes outside `u`) are at index 0.
fn prefix_sum_along(grid: &NodeGrid, arr: &mut [f64], j: usize, u: AxisSubset) {
    let counts = grid.counts();
    let stride = grid.stride(j);
    for k in 0..grid.len() {
        let idx = grid.multi_index(k);
        if idx[j] == 0 {
            continue;
        }
        if (0..grid.dim()).any(|i| !u.contains(i) && idx[i] != 0) {
            continue;
        }
        // rows are visited in increasing idx[j] order because flat order is
        // lexicographic
        debug_assert!(idx[j] < counts[j]);
        arr[k] += arr[k - stride];
    }
}

fn project_to_face(grid: &NodeGrid, k: usize, u: AxisSubset) -> usize {
    let mut idx = grid.multi_index(k);
    for (i, v) in idx.iter_mut().enumerate() {
        if !u.contains(i) {
            *v = 0;
        }
    }
    grid.flat(&idx)
}
