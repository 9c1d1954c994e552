//! Real functions on the unit cube: the [`GridFunction`] trait, closure
//! wrappers and functions tabulated on ladder nodes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_dim, Ladder, NodeGrid};
use crate::sum::pairwise_sum;

/// An evaluable real function on `[0,1]^d`.
pub trait GridFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    /// Known discontinuity locations along `axis` once the coordinates of the
    /// axes before it are fixed to `prefix`. Used by the reference quadrature
    /// to align panels with jumps and kinks.
    fn breaks_along(&self, _axis: usize, _prefix: &[f64]) -> Vec<f64> {
        Vec::new()
    }

    /// Axis-aligned coordinates worth adding to a probing ladder.
    fn axis_breaks(&self, _axis: usize) -> Vec<f64> {
        Vec::new()
    }

    fn as_tabulated(&self) -> Option<&Tabulated> {
        None
    }
}

impl<T: GridFunction + ?Sized> GridFunction for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (**self).eval(x)
    }
    fn breaks_along(&self, axis: usize, prefix: &[f64]) -> Vec<f64> {
        (**self).breaks_along(axis, prefix)
    }
    fn axis_breaks(&self, axis: usize) -> Vec<f64> {
        (**self).axis_breaks(axis)
    }
    fn as_tabulated(&self) -> Option<&Tabulated> {
        (**self).as_tabulated()
    }
}

impl<T: GridFunction + ?Sized> GridFunction for std::sync::Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (**self).eval(x)
    }
    fn breaks_along(&self, axis: usize, prefix: &[f64]) -> Vec<f64> {
        (**self).breaks_along(axis, prefix)
    }
    fn axis_breaks(&self, axis: usize) -> Vec<f64> {
        (**self).axis_breaks(axis)
    }
    fn as_tabulated(&self) -> Option<&Tabulated> {
        (**self).as_tabulated()
    }
}

/// Closure-backed function.
pub struct FnWrapper<F> {
    dim: usize,
    f: F,
}

impl<F> GridFunction for FnWrapper<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

pub fn from_fn<F>(dim: usize, f: F) -> FnWrapper<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    FnWrapper { dim, f }
}

/// Evaluates `f` at every node of `grid`, in flat order.
pub(crate) fn sample_nodes(f: &dyn GridFunction, grid: &NodeGrid) -> Vec<f64> {
    (0..grid.len())
        .into_par_iter()
        .map(|k| f.eval(&grid.point(k)))
        .collect()
}

/// Values on the nodes of a ladder (breakpoints plus 1 on every axis),
/// extended to the whole cube by taking the value at the lower-left node of
/// the containing cell. Points with coordinate 1 read the node at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TabulatedRepr", into = "TabulatedRepr")]
pub struct Tabulated {
    ladder: Ladder,
    values: Vec<f64>,
    #[serde(skip)]
    grid: NodeGrid,
}

#[derive(Serialize, Deserialize)]
struct TabulatedRepr {
    ladder: Ladder,
    values: Vec<f64>,
}

impl TryFrom<TabulatedRepr> for Tabulated {
    type Error = Error;
    fn try_from(r: TabulatedRepr) -> Result<Self> {
        Tabulated::new(r.ladder, r.values)
    }
}

impl From<Tabulated> for TabulatedRepr {
    fn from(t: Tabulated) -> Self {
        TabulatedRepr {
            ladder: t.ladder,
            values: t.values,
        }
    }
}

impl Tabulated {
    pub fn new(ladder: Ladder, values: Vec<f64>) -> Result<Self> {
        if ladder.num_nodes() != Some(values.len()) {
            return Err(Error::invalid(format!(
                "table has {} values but the ladder has cells {:?}",
                values.len(),
                ladder.cells_per_axis()
            )));
        }
        let grid = ladder.node_grid();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("table values must be finite"));
        }
        Ok(Tabulated {
            ladder,
            values,
            grid,
        })
    }

    /// Samples `f` on the nodes of `ladder`.
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
        Tabulated::new(ladder.clone(), values)
    }

    /// Seeded values uniform in `[-1, 1)`.
    pub fn random(ladder: &Ladder, seed: u64) -> Self {
        let grid = ladder.node_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Tabulated::new(ladder.clone(), values).expect("node count matches")
    }

    pub fn ladder(&self) -> &Ladder {
        &self.ladder
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &NodeGrid {
        &self.grid
    }

    fn node_index(&self, axis: usize, x: f64) -> usize {
        let bp = self.ladder.breakpoints(axis);
        if x >= 1.0 {
            bp.len()
        } else {
            bp.partition_point(|&y| y <= x).saturating_sub(1)
        }
    }

    fn zip_with(&self, other: &Tabulated, op: impl Fn(f64, f64) -> f64) -> Result<Tabulated> {
        if self.ladder != other.ladder {
            return Err(Error::invalid("tables live on different ladders"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Tabulated::new(self.ladder.clone(), values)
    }

    pub fn add(&self, other: &Tabulated) -> Result<Tabulated> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tabulated) -> Result<Tabulated> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Tabulated) -> Result<Tabulated> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Tabulated {
        let values = self.values.iter().map(|v| c * v).collect();
        Tabulated::new(self.ladder.clone(), values).expect("same ladder")
    }

    /// Exact: the step extension only takes node values.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Exact integral of the step extension.
    pub fn integral(&self) -> f64 {
        let d = self.ladder.dim();
        let widths: Vec<Vec<f64>> = (0..d)
            .map(|j| {
                let n = self.ladder.nodes(j);
                n.windows(2).map(|w| w[1] - w[0]).collect()
            })
            .collect();
        let terms: Vec<f64> = (0..self.grid.len())
            .filter_map(|k| {
                let idx = self.grid.multi_index(k);
                let mut vol = 1.0;
                for (j, &i) in idx.iter().enumerate() {
                    vol *= *widths[j].get(i)?;
                }
                Some(vol * self.values[k])
            })
            .collect();
        pairwise_sum(&terms)
    }
}

impl GridFunction for Tabulated {
    fn dim(&self) -> usize {
        self.ladder.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let idx: Vec<usize> = (0..self.dim()).map(|j| self.node_index(j, x[j])).collect();
        self.values[self.grid.flat(&idx)]
    }

    fn breaks_along(&self, axis: usize, _prefix: &[f64]) -> Vec<f64> {
        self.ladder.breakpoints(axis).to_vec()
    }

    fn axis_breaks(&self, axis: usize) -> Vec<f64> {
        self.ladder.breakpoints(axis).to_vec()
    }

    fn as_tabulated(&self) -> Option<&Tabulated> {
        Some(self)
    }
}

/// Sup norm of a closed-form function estimated from the nodes of a uniform
/// grid plus low-discrepancy samples. A lower bound on the true sup norm.
pub fn sampled_sup_norm(f: &dyn GridFunction, samples: usize) -> Result<f64> {
    check_dim(f.dim())?;
    let d = f.dim();
    let per_axis = ((1usize << 16) as f64)
        .powf(1.0 / d as f64)
        .floor()
        .max(2.0) as usize;
    let grid = Ladder::uniform(d, per_axis.min(256))?.node_grid();
    let mut best = sample_nodes(f, &grid)
        .into_iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let pts = crate::discrepancy::halton_points(samples, d)?;
    for p in &pts {
        best = best.max(f.eval(p).abs());
    }
    Ok(best)
}
