//! Reference integrals by tensorised composite Gauss–Legendre quadrature
//! whose panels are split at the integrand's known discontinuities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::function::GridFunction;
use crate::grid::check_dim;
use crate::sum::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub value: f64,
    /// `|Q(cells) - Q(cells/2)|`.
    pub error_estimate: f64,
    pub cells_per_axis: usize,
}

/// 1024 cells per axis in one and two dimensions; beyond that the count is
/// shrunk so that `(2 cells)^d` stays near `2^23` evaluations.
pub fn default_cells(d: usize) -> usize {
    match d {
        1 | 2 => 1024,
        _ => (((1u64 << 23) as f64).powf(1.0 / d as f64) / 2.0)
            .floor()
            .max(2.0) as usize,
    }
}

const GL_NODE: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)

fn panels(f: &dyn GridFunction, axis: usize, prefix: &[f64], cells: usize) -> Vec<f64> {
    let mut edges: Vec<f64> = (0..=cells).map(|k| k as f64 / cells as f64).collect();
    edges.extend(
        f.breaks_along(axis, prefix)
            .into_iter()
            .filter(|&b| b > 0.0 && b < 1.0),
    );
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    edges
}

fn integrate_axis(f: &dyn GridFunction, prefix: &mut Vec<f64>, cells: usize) -> f64 {
    let d = f.dim();
    let axis = prefix.len();
    let edges = panels(f, axis, prefix, cells);
    let mut terms = Vec::with_capacity(2 * edges.len());
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for x in [mid - half * GL_NODE, mid + half * GL_NODE] {
            prefix.push(x);
            let v = if axis + 1 == d {
                f.eval(prefix)
            } else {
                integrate_axis(f, prefix, cells)
            };
            prefix.pop();
            terms.push(half * v);
        }
    }
    pairwise_sum(&terms)
}

fn rule(f: &dyn GridFunction, cells: usize) -> f64 {
    let edges = panels(f, 0, &[], cells);
    let d = f.dim();
    let terms: Vec<f64> = edges
        .par_windows(2)
        .flat_map_iter(|w| {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            [mid - half * GL_NODE, mid + half * GL_NODE].map(|x| {
                let mut prefix = vec![x];
                let v = if d == 1 {
                    f.eval(&prefix)
                } else {
                    integrate_axis(f, &mut prefix, cells)
                };
                half * v
            })
        })
        .collect();
    pairwise_sum(&terms)
}

/// Integral of `f` over `[0,1]^d`, with the difference to the rule on half
/// as many cells as an error estimate.
pub fn integrate(f: &dyn GridFunction, cells: usize) -> Result<Quadrature> {
    check_dim(f.dim())?;
    let cells = cells.max(2);
    let value = rule(f, cells);
    let coarse = rule(f, cells / 2);
    Ok(Quadrature {
        value,
        error_estimate: (value - coarse).abs(),
        cells_per_axis: cells,
    })
}
