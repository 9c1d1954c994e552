//! Points, axis subsets, half-open boxes, ladders and the alternating-sum
//! difference operators on `[0,1]^d`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::GridFunction;
use crate::sum::pairwise_sum;

/// Largest supported dimension.
pub const MAX_DIM: usize = 8;

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::invalid(format!(
            "dimension must be in 1..={MAX_DIM}, got {d}"
        )));
    }
    Ok(())
}

/// A point of the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_dim(coords.len())?;
        if let Some(c) = coords.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::invalid(format!("coordinate {c} outside [0,1]")));
        }
        Ok(Point(coords))
    }

    pub fn zeros(d: usize) -> Self {
        Point(vec![0.0; d])
    }

    pub fn ones(d: usize) -> Self {
        Point(vec![1.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Coordinatewise `self <= other`.
    pub fn le(&self, other: &Point) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A subset of the axes `{0, …, d-1}`, stored as a bitmask together with `d`
/// so that complements are well defined. Displayed 1-based, e.g. `{1,3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AxisSubset {
    bits: u16,
    dim: u8,
}

impl AxisSubset {
    pub fn empty(d: usize) -> Self {
        debug_assert!(d <= MAX_DIM);
        AxisSubset {
            bits: 0,
            dim: d as u8,
        }
    }

    pub fn full(d: usize) -> Self {
        debug_assert!(d <= MAX_DIM);
        AxisSubset {
            bits: ((1u32 << d) - 1) as u16,
            dim: d as u8,
        }
    }

    pub fn from_bits(bits: u16, d: usize) -> Result<Self> {
        check_dim(d)?;
        if u32::from(bits) >> d != 0 {
            return Err(Error::invalid(format!(
                "bitmask {bits:#b} has axes beyond dimension {d}"
            )));
        }
        Ok(AxisSubset { bits, dim: d as u8 })
    }

    /// Builds a subset from 0-based axis indices.
    pub fn from_axes(axes: &[usize], d: usize) -> Result<Self> {
        check_dim(d)?;
        let mut bits = 0u16;
        for &a in axes {
            if a >= d {
                return Err(Error::invalid(format!("axis {a} out of range for d={d}")));
            }
            bits |= 1 << a;
        }
        Ok(AxisSubset { bits, dim: d as u8 })
    }

    pub fn bits(self) -> u16 {
        self.bits
    }

    pub fn dim(self) -> usize {
        self.dim as usize
    }

    pub fn contains(self, axis: usize) -> bool {
        axis < self.dim() && self.bits & (1 << axis) != 0
    }

    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn complement(self) -> Self {
        AxisSubset {
            bits: !self.bits & Self::full(self.dim()).bits,
            dim: self.dim,
        }
    }

    pub fn union(self, other: Self) -> Self {
        AxisSubset {
            bits: self.bits | other.bits,
            dim: self.dim,
        }
    }

    pub fn intersection(self, other: Self) -> Self {
        AxisSubset {
            bits: self.bits & other.bits,
            dim: self.dim,
        }
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.bits & !other.bits == 0
    }

    /// 0-based axes in increasing order.
    pub fn axes(self) -> impl Iterator<Item = usize> {
        let bits = self.bits;
        (0..self.dim()).filter(move |&i| bits & (1 << i) != 0)
    }

    /// All subsets of `self`, in increasing bitmask order (`∅` first).
    pub fn subsets(self) -> impl Iterator<Item = AxisSubset> {
        let bits = self.bits;
        let dim = self.dim;
        (0..=bits)
            .filter(move |s| s & !bits == 0)
            .map(move |s| AxisSubset { bits: s, dim })
    }

    /// All subsets of `{0..d-1}` in bitmask order.
    pub fn all(d: usize) -> impl Iterator<Item = AxisSubset> {
        Self::full(d).subsets()
    }

    /// `(-1)^{|self|}`.
    pub fn sign(self) -> f64 {
        if self.len() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for AxisSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.axes().map(|a| (a + 1).to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// The point `a^u : b^{-u}`: coordinates of `a` on the axes in `u`, of `b`
/// elsewhere.
pub fn splice(a: &Point, b: &Point, u: AxisSubset) -> Result<Point> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if u.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: u.dim(),
        });
    }
    Ok(Point(splice_raw(a.coords(), b.coords(), u.bits())))
}

pub(crate) fn splice_raw(a: &[f64], b: &[f64], bits: u16) -> Vec<f64> {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (&ai, &bi))| if bits & (1 << i) != 0 { ai } else { bi })
        .collect()
}

fn check_box(f: &dyn GridFunction, a: &Point, b: &Point) -> Result<()> {
    if a.dim() != b.dim() || a.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: if a.dim() != f.dim() { a.dim() } else { b.dim() },
        });
    }
    if !a.le(b) {
        return Err(Error::invalid("difference operator needs a <= b"));
    }
    Ok(())
}

/// Quasi-volume `Δ(f; [a, b]) = Σ_u (-1)^{|u|} f(a^u : b^{-u})`.
pub fn delta(f: &dyn GridFunction, a: &Point, b: &Point) -> Result<f64> {
    check_box(f, a, b)?;
    Ok(delta_raw(
        f,
        a.coords(),
        b.coords(),
        AxisSubset::full(a.dim()),
    ))
}

/// Alternating sum over the subsets of `u` only; axes outside `u` take the
/// coordinates of `b`.
pub fn delta_u(f: &dyn GridFunction, a: &Point, b: &Point, u: AxisSubset) -> Result<f64> {
    check_box(f, a, b)?;
    if u.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: u.dim(),
        });
    }
    Ok(delta_raw(f, a.coords(), b.coords(), u))
}

pub(crate) fn delta_raw(f: &dyn GridFunction, a: &[f64], b: &[f64], u: AxisSubset) -> f64 {
    let terms: Vec<f64> = u
        .subsets()
        .map(|s| s.sign() * f.eval(&splice_raw(a, b, s.bits())))
        .collect();
    pairwise_sum(&terms)
}

/// An axis-parallel box `[a, b]^v`: closed at `b` on the axes in `v`,
/// half-open on the others. Always closed at `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxRepr", into = "BoxRepr")]
pub struct BoxV {
    a: Point,
    b: Point,
    closed: AxisSubset,
}

impl BoxV {
    pub fn new(a: Point, b: Point, closed: AxisSubset) -> Result<Self> {
        if a.dim() != b.dim() || closed.dim() != a.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                got: if b.dim() != a.dim() {
                    b.dim()
                } else {
                    closed.dim()
                },
            });
        }
        if !a.le(&b) {
            return Err(Error::invalid("box corners must satisfy a <= b"));
        }
        Ok(BoxV { a, b, closed })
    }

    /// `[0, b]^v`, a member of the anchored family.
    pub fn anchored(b: Point, closed: AxisSubset) -> Result<Self> {
        let d = b.dim();
        BoxV::new(Point::zeros(d), b, closed)
    }

    pub fn a(&self) -> &Point {
        &self.a
    }

    pub fn b(&self) -> &Point {
        &self.b
    }

    pub fn closed(&self) -> AxisSubset {
        self.closed
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn is_anchored(&self) -> bool {
        self.a.coords().iter().all(|&x| x == 0.0)
    }

    /// Empty iff some half-open axis is degenerate.
    pub fn is_empty(&self) -> bool {
        (0..self.dim()).any(|i| !self.closed.contains(i) && self.a[i] == self.b[i])
    }

    /// The whole cube `[0,1]^d` (closed on every axis).
    pub fn is_cube(&self) -> bool {
        self.is_anchored()
            && self.b.coords().iter().all(|&x| x == 1.0)
            && self.closed == AxisSubset::full(self.dim())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|i| {
            let xi = x[i];
            if self.closed.contains(i) {
                self.a[i] <= xi && xi <= self.b[i]
            } else {
                self.a[i] <= xi && xi < self.b[i]
            }
        })
    }

    pub fn volume(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        (0..self.dim()).map(|i| self.b[i] - self.a[i]).product()
    }
}

#[derive(Serialize, Deserialize)]
struct BoxRepr {
    a: Vec<f64>,
    b: Vec<f64>,
    /// 1-based axes closed at `b`.
    closed_axes: Vec<usize>,
}

impl TryFrom<BoxRepr> for BoxV {
    type Error = Error;
    fn try_from(r: BoxRepr) -> Result<Self> {
        let d = r.a.len();
        let axes = r
            .closed_axes
            .iter()
            .map(|&k| {
                k.checked_sub(1)
                    .ok_or_else(|| Error::invalid("closed_axes are 1-based"))
            })
            .collect::<Result<Vec<_>>>()?;
        BoxV::new(
            Point::new(r.a)?,
            Point::new(r.b)?,
            AxisSubset::from_axes(&axes, d)?,
        )
    }
}

impl From<BoxV> for BoxRepr {
    fn from(b: BoxV) -> Self {
        BoxRepr {
            closed_axes: b.closed.axes().map(|a| a + 1).collect(),
            a: b.a.into_inner(),
            b: b.b.into_inner(),
        }
    }
}

/// A product of per-axis breakpoint lists `0 = y_1 < … < y_k < 1`. The
/// successor of the last breakpoint on each axis is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Ladder {
    axes: Vec<Vec<f64>>,
}

impl Ladder {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        check_dim(axes.len())?;
        for (j, ax) in axes.iter().enumerate() {
            if ax.first() != Some(&0.0) {
                return Err(Error::invalid(format!(
                    "ladder axis {} must start at 0",
                    j + 1
                )));
            }
            if ax.iter().any(|y| !y.is_finite() || *y >= 1.0) {
                return Err(Error::invalid(format!(
                    "ladder axis {} has a breakpoint outside [0,1)",
                    j + 1
                )));
            }
            if ax.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!(
                    "ladder axis {} is not strictly increasing",
                    j + 1
                )));
            }
        }
        Ok(Ladder { axes })
    }

    /// `m` equal cells per axis: breakpoints `k/m`, `k = 0..m-1`.
    pub fn uniform(d: usize, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("a ladder needs at least one cell per axis"));
        }
        let axis: Vec<f64> = (0..m).map(|k| k as f64 / m as f64).collect();
        Ladder::new(vec![axis; d])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn breakpoints(&self, axis: usize) -> &[f64] {
        &self.axes[axis]
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn cells_per_axis(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn num_cells(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    /// Breakpoints followed by 1.
    pub fn nodes(&self, axis: usize) -> Vec<f64> {
        let mut v = self.axes[axis].clone();
        v.push(1.0);
        v
    }

    /// Successor of a single breakpoint on `axis`. Breakpoints are matched by
    /// exact value.
    pub fn axis_successor(&self, axis: usize, y: f64) -> Result<f64> {
        let ax = &self.axes[axis];
        match ax.binary_search_by(|p| p.total_cmp(&y)) {
            Ok(k) if k + 1 < ax.len() => Ok(ax[k + 1]),
            Ok(_) => Ok(1.0),
            Err(_) => Err(Error::invalid(format!(
                "{y} is not a breakpoint of ladder axis {}",
                axis + 1
            ))),
        }
    }

    /// Coordinatewise successor `y_+`.
    pub fn successor(&self, y: &Point) -> Result<Point> {
        if y.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: y.dim(),
            });
        }
        let coords = (0..self.dim())
            .map(|j| self.axis_successor(j, y[j]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Point(coords))
    }

    /// All ladder points, last axis fastest.
    pub fn points(&self) -> Vec<Point> {
        product(&self.axes).into_iter().map(Point).collect()
    }

    /// The ladder `Y_u` on the face through `1` spanned by the axes in `u`.
    pub fn face(&self, u: AxisSubset) -> Result<FaceLadder> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.dim(),
            });
        }
        Ok(FaceLadder {
            ladder: self.clone(),
            face: u,
        })
    }

    /// Split every cell on every axis into `factor` equal parts.
    pub fn refine(&self, factor: usize) -> Result<Ladder> {
        if factor < 2 {
            return Err(Error::invalid("refinement factor must be at least 2"));
        }
        let axes = self
            .axes
            .iter()
            .map(|ax| {
                let mut out = Vec::with_capacity(ax.len() * factor);
                for (k, &lo) in ax.iter().enumerate() {
                    let hi = ax.get(k + 1).copied().unwrap_or(1.0);
                    out.push(lo);
                    let h = (hi - lo) / factor as f64;
                    for j in 1..factor {
                        out.push(lo + j as f64 * h);
                    }
                }
                out
            })
            .collect();
        Ladder::new(axes)
    }

    /// Per-axis union of breakpoints.
    pub fn union(&self, other: &Ladder) -> Result<Ladder> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let axes = self
            .axes
            .iter()
            .zip(&other.axes)
            .map(|(a, b)| merge_sorted(a, b))
            .collect();
        Ladder::new(axes)
    }

    /// Adds extra breakpoints per axis; values outside `[0,1)` are ignored.
    pub fn with_breakpoints(&self, extra: &[Vec<f64>]) -> Result<Ladder> {
        let axes = self
            .axes
            .iter()
            .zip(extra)
            .map(|(a, e)| {
                let mut e: Vec<f64> = e
                    .iter()
                    .copied()
                    .filter(|y| (0.0..1.0).contains(y))
                    .collect();
                e.sort_by(f64::total_cmp);
                merge_sorted(a, &e)
            })
            .collect();
        Ladder::new(axes)
    }

    /// True when every breakpoint of `coarse` is a breakpoint of `self`.
    pub fn refines(&self, coarse: &Ladder) -> bool {
        self.dim() == coarse.dim()
            && self.axes.iter().zip(&coarse.axes).all(|(f, c)| {
                c.iter()
                    .all(|y| f.binary_search_by(|p| p.total_cmp(y)).is_ok())
            })
    }

    /// Number of ladder nodes (`Π (cells_j + 1)`), `None` on overflow.
    pub fn num_nodes(&self) -> Option<usize> {
        self.axes
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.len() + 1))
    }

    /// Fails with a resource-limit error when sampling the ladder would
    /// exceed [`MAX_NODES`].
    pub fn check_node_budget(&self) -> Result<usize> {
        match self.num_nodes() {
            Some(n) if n <= MAX_NODES => Ok(n),
            _ => Err(Error::ResourceLimit {
                message: format!(
                    "ladder with cells {:?} has more than {MAX_NODES} nodes",
                    self.cells_per_axis()
                ),
                suggestion: "use fewer cells per axis or fewer refinements".into(),
            }),
        }
    }

    pub fn node_grid(&self) -> NodeGrid {
        NodeGrid::new((0..self.dim()).map(|j| self.nodes(j)).collect())
    }
}

/// Largest node grid any routine will sample (2^24 nodes, 128 MiB of values).
pub const MAX_NODES: usize = 1 << 24;

impl TryFrom<Vec<Vec<f64>>> for Ladder {
    type Error = Error;
    fn try_from(v: Vec<Vec<f64>>) -> Result<Self> {
        Ladder::new(v)
    }
}

impl From<Ladder> for Vec<Vec<f64>> {
    fn from(l: Ladder) -> Self {
        l.axes
    }
}

fn merge_sorted(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().chain(b).copied().collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|x, y| x.to_bits() == y.to_bits());
    out
}

pub(crate) fn product(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for ax in axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                ax.iter().map(move |&y| {
                    let mut q = p.clone();
                    q.push(y);
                    q
                })
            })
            .collect();
    }
    out
}

/// The face ladder `Y_u = { y^u : 1^{-u} | y ∈ Y }`.
#[derive(Debug, Clone)]
pub struct FaceLadder {
    ladder: Ladder,
    face: AxisSubset,
}

impl FaceLadder {
    pub fn face(&self) -> AxisSubset {
        self.face
    }

    pub fn points(&self) -> Vec<Point> {
        let axes: Vec<Vec<f64>> = (0..self.ladder.dim())
            .map(|j| {
                if self.face.contains(j) {
                    self.ladder.axes[j].clone()
                } else {
                    vec![1.0]
                }
            })
            .collect();
        product(&axes).into_iter().map(Point).collect()
    }

    /// Successor on the face: ladder successor on the face axes, 1 elsewhere.
    pub fn successor(&self, y: &Point) -> Result<Point> {
        let coords = (0..self.ladder.dim())
            .map(|j| {
                if self.face.contains(j) {
                    self.ladder.axis_successor(j, y[j])
                } else if y[j] == 1.0 {
                    Ok(1.0)
                } else {
                    Err(Error::invalid(format!(
                        "point is not on the face {} (axis {} is not 1)",
                        self.face,
                        j + 1
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Point(coords))
    }
}

/// A rectangular grid of node coordinates with row-major (last axis fastest)
/// flat indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeGrid {
    coords: Vec<Vec<f64>>,
    strides: Vec<usize>,
    len: usize,
}

impl NodeGrid {
    pub fn new(coords: Vec<Vec<f64>>) -> Self {
        let d = coords.len();
        let mut strides = vec![1usize; d];
        for j in (0..d.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * coords[j + 1].len();
        }
        let len = coords.iter().map(Vec::len).product();
        NodeGrid {
            coords,
            strides,
            len,
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn counts(&self) -> Vec<usize> {
        self.coords.iter().map(Vec::len).collect()
    }

    pub fn axis(&self, j: usize) -> &[f64] {
        &self.coords[j]
    }

    pub fn stride(&self, j: usize) -> usize {
        self.strides[j]
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for j in 0..self.dim() {
            idx[j] = flat / self.strides[j];
            flat %= self.strides[j];
        }
        idx
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(j, &i)| self.coords[j][i])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::from_fn;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn splice_examples() {
        let a = p(&[0.2, 0.3]);
        let b = p(&[0.7, 0.9]);
        let u1 = AxisSubset::from_axes(&[0], 2).unwrap();
        assert_eq!(splice(&a, &b, u1).unwrap(), p(&[0.2, 0.9]));
        assert_eq!(splice(&a, &b, AxisSubset::empty(2)).unwrap(), b);
        assert_eq!(splice(&a, &b, AxisSubset::full(2)).unwrap(), a);
        assert_eq!(
            splice(&a, &b, u1).unwrap(),
            splice(&b, &a, u1.complement()).unwrap()
        );
        assert!(splice(&a, &p(&[0.1]), u1).is_err());
    }

    #[test]
    fn delta_examples() {
        let f = from_fn(2, |x| x[0] * x[1]);
        let a = p(&[0.2, 0.3]);
        let b = p(&[0.7, 0.9]);
        // 0.63 - 0.18 - 0.21 + 0.06
        assert!((delta(&f, &a, &b).unwrap() - 0.30).abs() < 1e-15);
        let u1 = AxisSubset::from_axes(&[0], 2).unwrap();
        assert!((delta_u(&f, &a, &b, u1).unwrap() - 0.45).abs() < 1e-15);
        assert_eq!(delta_u(&f, &a, &b, AxisSubset::empty(2)).unwrap(), 0.63);
        assert_eq!(
            delta_u(&f, &a, &b, AxisSubset::full(2)).unwrap(),
            delta(&f, &a, &b).unwrap()
        );
        assert!(matches!(delta(&f, &b, &a), Err(Error::InvalidArgument(_))));

        let c = from_fn(3, |_| 4.2);
        assert_eq!(
            delta(&c, &Point::zeros(3), &p(&[0.5, 0.6, 0.7])).unwrap(),
            0.0
        );
        for d in 1..=5 {
            let prod = from_fn(d, |x| x.iter().product());
            assert_eq!(
                delta(&prod, &Point::zeros(d), &Point::ones(d)).unwrap(),
                1.0
            );
        }
    }

    #[test]
    fn successor_examples() {
        let l = Ladder::uniform(2, 2).unwrap();
        assert_eq!(l.successor(&p(&[0.5, 0.0])).unwrap(), p(&[1.0, 0.5]));
        assert_eq!(l.successor(&p(&[0.5, 0.5])).unwrap(), p(&[1.0, 1.0]));
        assert!(l.successor(&p(&[0.25, 0.0])).is_err());
        let m = 7;
        let u = Ladder::uniform(1, m).unwrap();
        for k in 0..m {
            let y = u.breakpoints(0)[k];
            let expect = if k + 1 < m {
                u.breakpoints(0)[k + 1]
            } else {
                1.0
            };
            assert_eq!(u.axis_successor(0, y).unwrap(), expect);
            assert!((expect - (k + 1) as f64 / m as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn face_ladder_examples() {
        let l = Ladder::uniform(2, 2).unwrap();
        let empty = l.face(AxisSubset::empty(2)).unwrap();
        assert_eq!(empty.points(), vec![Point::ones(2)]);
        let full = l.face(AxisSubset::full(2)).unwrap();
        assert_eq!(full.points(), l.points());
        let f1 = l.face(AxisSubset::from_axes(&[0], 2).unwrap()).unwrap();
        assert_eq!(f1.points(), vec![p(&[0.0, 1.0]), p(&[0.5, 1.0])]);
        assert_eq!(f1.successor(&p(&[0.5, 1.0])).unwrap(), Point::ones(2));
    }

    #[test]
    fn refine_examples() {
        let l = Ladder::new(vec![vec![0.0, 0.5]]).unwrap();
        assert_eq!(l.refine(2).unwrap().breakpoints(0), &[0.0, 0.25, 0.5, 0.75]);
        let one = Ladder::new(vec![vec![0.0]]).unwrap();
        assert_eq!(
            one.refine(4).unwrap().breakpoints(0),
            &[0.0, 0.25, 0.5, 0.75]
        );
        let odd = Ladder::new(vec![vec![0.0, 0.3, 0.9], vec![0.0]]).unwrap();
        let r = odd.refine(3).unwrap();
        assert!(r.refines(&odd));
        assert_eq!(r.cells_per_axis(), vec![9, 3]);
        assert!(l.refine(1).is_err());
    }

    #[test]
    fn ladder_validation() {
        assert!(Ladder::new(vec![vec![0.1, 0.5]]).is_err());
        assert!(Ladder::new(vec![vec![0.0, 1.0]]).is_err());
        assert!(Ladder::new(vec![vec![0.0, 0.5, 0.5]]).is_err());
        assert!(Ladder::new(vec![]).is_err());
        assert!(Ladder::new(vec![vec![0.0]; 9]).is_err());
    }

    #[test]
    fn empty_box_contains_nothing() {
        let b = BoxV::new(
            p(&[0.2, 0.3]),
            p(&[0.2, 0.8]),
            AxisSubset::from_axes(&[1], 2).unwrap(),
        )
        .unwrap();
        assert!(b.is_empty());
        for i in 0..=20 {
            for j in 0..=20 {
                assert!(!b.contains(&[i as f64 / 20.0, j as f64 / 20.0]));
            }
        }
        // closed on the degenerate axis: a segment, not empty
        let seg = BoxV::new(p(&[0.2, 0.3]), p(&[0.2, 0.8]), AxisSubset::full(2)).unwrap();
        assert!(!seg.is_empty());
        assert!(seg.contains(&[0.2, 0.5]));
    }

    #[test]
    fn box_membership_half_open() {
        let b = BoxV::anchored(p(&[0.5, 0.5]), AxisSubset::from_axes(&[0], 2).unwrap()).unwrap();
        assert!(b.contains(&[0.5, 0.49]));
        assert!(!b.contains(&[0.5, 0.5]));
        assert!(b.contains(&[0.0, 0.0]));
        let json = serde_json::to_string(&b).unwrap();
        assert_eq!(json, r#"{"a":[0.0,0.0],"b":[0.5,0.5],"closed_axes":[1]}"#);
        let back: BoxV = serde_json::from_str(&json).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn axis_subset_display_and_subsets() {
        let u = AxisSubset::from_axes(&[0, 2], 3).unwrap();
        assert_eq!(u.to_string(), "{1,3}");
        assert_eq!(u.complement().to_string(), "{2}");
        assert_eq!(u.subsets().count(), 4);
        assert_eq!(AxisSubset::empty(2).to_string(), "{}");
    }

    #[test]
    fn node_grid_indexing() {
        let g = NodeGrid::new(vec![vec![0.0, 0.5, 1.0], vec![0.0, 1.0]]);
        assert_eq!(g.len(), 6);
        assert_eq!(g.multi_index(5), vec![2, 1]);
        assert_eq!(g.flat(&[1, 1]), 3);
        assert_eq!(g.point(3), vec![0.5, 1.0]);
    }
}
