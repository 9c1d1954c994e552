//! Point sets, low-discrepancy generators and star discrepancy.
//!
//! Star discrepancy here is the supremum of the local discrepancy over
//! anchored boxes `[0,t)` *and* `[0,t]`:
//!
//! ```text
//! D*_N = sup_t max( vol[0,t) - #{x in [0,t)}/N ,  #{x in [0,t]}/N - vol[0,t] )
//! ```
//!
//! Both suprema are attained (or approached) at corners whose coordinates are
//! point coordinates or 1, so an exhaustive corner search is exact.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_dim, product};
use crate::sum::max_of;

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    points: Vec<Vec<f64>>,
    label: String,
    seed: Option<u64>,
}

impl PointSet {
    pub fn new(points: Vec<Vec<f64>>, label: impl Into<String>, seed: Option<u64>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::invalid("a point set needs at least one point"));
        };
        let d = first.len();
        check_dim(d)?;
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.len(),
                });
            }
            if p.iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(Error::invalid(format!(
                    "point {} has a coordinate outside [0,1]",
                    i + 1
                )));
            }
        }
        Ok(PointSet {
            points,
            label: label.into(),
            seed,
        })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `# label=..., seed=...` header followed by one point per line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "# label={}", self.label)?;
        if let Some(s) = self.seed {
            write!(w, ", seed={s}")?;
        }
        writeln!(w)?;
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for p in &self.points {
            out.write_record(p.iter().map(|c| c.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(mut r: R) -> Result<Self> {
        let mut label = String::from("csv");
        let mut seed = None;
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        if let Some(header) = text.lines().next().and_then(|l| l.trim().strip_prefix('#')) {
            for field in header.split(',') {
                match field.trim().split_once('=') {
                    Some(("label", v)) => label = v.trim().to_string(),
                    Some(("seed", v)) => {
                        seed = Some(v.trim().parse().map_err(|_| {
                            Error::Parse(format!("bad seed `{}` in point file header", v.trim()))
                        })?)
                    }
                    _ => {}
                }
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut points = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let p = rec
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("line {}: `{s}` is not a number", i + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            points.push(p);
        }
        PointSet::new(points, label, seed)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        PointSet::read_csv(std::io::BufReader::new(f))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    r
}

/// The first `n` points (indices `1..=n`) of the Halton sequence in bases
/// 2, 3, 5, ...
pub fn halton_points(n: usize, d: usize) -> Result<Vec<Vec<f64>>> {
    check_dim(d)?;
    Ok((1..=n as u64)
        .map(|i| PRIMES[..d].iter().map(|&b| radical_inverse(i, b)).collect())
        .collect())
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Korobov generating vector `(1, a, a^2, ...) mod n` with `a` the integer
/// coprime to `n` closest to `n / golden ratio`.
pub fn korobov_vector(n: usize, d: usize) -> Vec<u64> {
    let n = n as u64;
    if n <= 2 {
        return vec![1; d];
    }
    let target = n as f64 / 1.618_033_988_749_895;
    let a = (1..n)
        .filter(|&a| gcd(a, n) == 1)
        .min_by(|&x, &y| {
            let dx = (x as f64 - target).abs();
            let dy = (y as f64 - target).abs();
            dx.total_cmp(&dy).then(x.cmp(&y))
        })
        .unwrap_or(1);
    let mut g = Vec::with_capacity(d);
    let mut p = 1u64;
    for _ in 0..d {
        g.push(p);
        p = p * a % n;
    }
    g
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Generator {
    Halton,
    /// `{i g / N}` for `i = 0..N`; Korobov vector when `g` is `None`.
    Rank1Lattice {
        g: Option<Vec<u64>>,
    },
    /// ChaCha8 stream seeded from a 64-bit seed.
    UniformRandom {
        seed: u64,
    },
    /// Cell midpoints: `(2i-1)/(2N)` in one dimension, the centred tensor
    /// grid with `k` points per axis when `N = k^d`.
    CenteredRegular,
}

pub fn generate(kind: &Generator, n: usize, d: usize) -> Result<PointSet> {
    check_dim(d)?;
    if n == 0 {
        return Err(Error::invalid("number of points must be at least 1"));
    }
    match kind {
        Generator::Halton => PointSet::new(halton_points(n, d)?, "halton", None),
        Generator::Rank1Lattice { g } => {
            let g = match g {
                Some(g) if g.len() != d => {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: g.len(),
                    })
                }
                Some(g) => g.clone(),
                None => korobov_vector(n, d),
            };
            let nn = n as u64;
            let pts = (0..nn)
                .map(|i| {
                    g.iter()
                        .map(|&gj| ((i as u128 * gj as u128) % nn as u128) as f64 / n as f64)
                        .collect()
                })
                .collect();
            PointSet::new(pts, "rank1", None)
        }
        Generator::UniformRandom { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let pts = (0..n)
                .map(|_| (0..d).map(|_| rng.gen::<f64>()).collect())
                .collect();
            PointSet::new(pts, "random", Some(*seed))
        }
        Generator::CenteredRegular => {
            let k = (n as f64).powf(1.0 / d as f64).round() as usize;
            if k.checked_pow(d as u32) != Some(n) {
                return Err(Error::invalid(format!(
                    "centered grid in d={d} needs N = k^{d} points, got N={n}"
                )));
            }
            let axis: Vec<f64> = (1..=k)
                .map(|i| (2 * i - 1) as f64 / (2 * k) as f64)
                .collect();
            PointSet::new(product(&vec![axis; d]), "centered", None)
        }
    }
}

/// Point-set spec: `halton:n=64,d=2`, `rank1:n=64,d=2[,g=1,19]`,
/// `random:n=100,d=2[,seed=7]`, `centered:n=16,d=2`, or a CSV path.
/// `d` and `seed` fill in missing parameters.
pub fn points_from_spec(spec: &str, d: usize, seed: u64) -> Result<PointSet> {
    let spec = spec.trim();
    let path = Path::new(spec);
    if !spec.contains(':') && (spec.ends_with(".csv") || path.is_file()) {
        return PointSet::load(path);
    }
    let (name, map) = crate::zoo::parse_spec(spec)?;
    let p = crate::zoo::Params::new(spec, map);
    let n = p
        .uint("n")?
        .ok_or_else(|| Error::invalid(format!("`{spec}` needs n=")))? as usize;
    let d = p.uint("d")?.map(|v| v as usize).unwrap_or(d);
    let kind = match name.as_str() {
        "halton" => {
            p.allow(&["n", "d"])?;
            Generator::Halton
        }
        "rank1" | "lattice" => {
            p.allow(&["n", "d", "g"])?;
            Generator::Rank1Lattice { g: p.uints("g")? }
        }
        "random" => {
            p.allow(&["n", "d", "seed"])?;
            Generator::UniformRandom {
                seed: p.uint("seed")?.unwrap_or(seed),
            }
        }
        "centered" => {
            p.allow(&["n", "d"])?;
            Generator::CenteredRegular
        }
        other => {
            return Err(Error::NotFound {
                name: other.to_string(),
                suggestions: vec![
                    "halton".into(),
                    "rank1".into(),
                    "random".into(),
                    "centered".into(),
                ],
            })
        }
    };
    generate(&kind, n, d)
}

/// Largest `N` the exact routine accepts in dimension `d`.
pub fn exact_budget(d: usize) -> usize {
    match d {
        1 => 4096,
        2 => 256,
        3 => 64,
        _ => {
            // (2N)^d <= 2^21
            let mut n = 1usize;
            while (2.0 * (n + 1) as f64).powi(d as i32) <= (1u64 << 21) as f64 {
                n += 1;
            }
            n
        }
    }
}

/// Per axis: sorted distinct coordinates plus 1, and every point's rank in
/// that list.
fn critical_values(p: &PointSet) -> (Vec<Vec<f64>>, Vec<Vec<u32>>) {
    let d = p.dim();
    let mut gammas = Vec::with_capacity(d);
    let mut ranks = vec![vec![0u32; d]; p.len()];
    for j in 0..d {
        let mut g: Vec<f64> = p.points().iter().map(|x| x[j]).collect();
        g.push(1.0);
        g.sort_by(f64::total_cmp);
        g.dedup();
        for (x, r) in p.points().iter().zip(ranks.iter_mut()) {
            r[j] = g.partition_point(|&v| v < x[j]) as u32;
        }
        gammas.push(g);
    }
    (gammas, ranks)
}

/// Local discrepancy maximised over the corners of a rectangular grid
/// (per-axis ascending coordinates). Each point is encoded per axis by the
/// index of the first grid value `>= x_j` and of the first value `> x_j`, so
/// `x_j <= t` iff `idx(t) >= first_ge` and `x_j < t` iff `idx(t) >= first_gt`.
fn corner_search(grid: &[Vec<f64>], first_ge: &[Vec<u32>], first_gt: &[Vec<u32>], n: usize) -> f64 {
    let d = grid.len();
    let rest: Vec<Vec<f64>> = grid[1..].to_vec();
    let rest_idx: Vec<Vec<usize>> = product(
        &rest
            .iter()
            .map(|g| (0..g.len()).map(|i| i as f64).collect())
            .collect::<Vec<_>>(),
    )
    .into_iter()
    .map(|v| v.into_iter().map(|x| x as usize).collect())
    .collect();
    let nf = n as f64;
    let per_first: Vec<f64> = (0..grid[0].len())
        .into_par_iter()
        .map(|i0| {
            let mut best = f64::NEG_INFINITY;
            let mut idx = vec![i0; d];
            for r in &rest_idx {
                idx[1..].copy_from_slice(r);
                let vol: f64 = (0..d).map(|j| grid[j][idx[j]]).product();
                let mut open = 0usize;
                let mut closed = 0usize;
                for k in 0..n {
                    let ge = &first_ge[k];
                    let gt = &first_gt[k];
                    let mut is_open = true;
                    let mut is_closed = true;
                    for j in 0..d {
                        let t = idx[j] as u32;
                        is_open &= t >= gt[j];
                        is_closed &= t >= ge[j];
                    }
                    open += is_open as usize;
                    closed += is_closed as usize;
                }
                best = best
                    .max(vol - open as f64 / nf)
                    .max(closed as f64 / nf - vol);
            }
            best
        })
        .collect();
    max_of(per_first).max(0.0)
}

/// Exact star discrepancy by enumeration of critical corners.
pub fn star_discrepancy_exact(p: &PointSet) -> Result<f64> {
    let d = p.dim();
    let budget = exact_budget(d);
    if p.len() > budget {
        return Err(Error::ResourceLimit {
            message: format!(
                "exact star discrepancy for N={} in d={d} exceeds the budget N <= {budget}",
                p.len()
            ),
            suggestion: "use the grid bracket (star_discrepancy_grid_bound / --grid M)".into(),
        });
    }
    let (gammas, ranks) = critical_values(p);
    // x_j sits at gammas[j][rank]: first value >= x_j is rank, first > is rank+1
    let first_gt: Vec<Vec<u32>> = ranks
        .iter()
        .map(|r| r.iter().map(|&i| i + 1).collect())
        .collect();
    Ok(corner_search(&gammas, &ranks, &first_gt, p.len()))
}

/// `(max over the uniform grid {0, 1/m, ..., 1}^d, that + d/m)`; the true
/// star discrepancy lies in this interval.
pub fn star_discrepancy_grid_bound(p: &PointSet, m: usize) -> Result<(f64, f64)> {
    if m < 2 {
        return Err(Error::invalid("grid bound needs m >= 2"));
    }
    let d = p.dim();
    let cells = (m as f64 + 1.0).powi(d as i32) * p.len() as f64;
    if cells > 4e10 {
        return Err(Error::ResourceLimit {
            message: format!("grid bound with m={m}, d={d}, N={} is too large", p.len()),
            suggestion: "reduce m".into(),
        });
    }
    let axis: Vec<f64> = (0..=m).map(|k| k as f64 / m as f64).collect();
    let grid = vec![axis.clone(); d];
    let first_ge: Vec<Vec<u32>> = p
        .points()
        .iter()
        .map(|x| {
            x.iter()
                .map(|&c| axis.partition_point(|&t| t < c) as u32)
                .collect()
        })
        .collect();
    let first_gt: Vec<Vec<u32>> = p
        .points()
        .iter()
        .map(|x| {
            x.iter()
                .map(|&c| axis.partition_point(|&t| t <= c) as u32)
                .collect()
        })
        .collect();
    let lower = corner_search(&grid, &first_ge, &first_gt, p.len());
    Ok((lower, lower + d as f64 / m as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyEstimate {
    /// Exact value, or the upper end of the grid bracket.
    pub dstar: f64,
    pub method: String,
    pub lower: f64,
}

/// Exact when within budget, otherwise the upper end of the `m`-grid
/// bracket (which is still a valid upper bound for Koksma–Hlawka).
pub fn star_discrepancy(p: &PointSet, fallback_m: usize) -> Result<DiscrepancyEstimate> {
    if p.len() <= exact_budget(p.dim()) {
        let v = star_discrepancy_exact(p)?;
        Ok(DiscrepancyEstimate {
            dstar: v,
            method: "exact".into(),
            lower: v,
        })
    } else {
        let (lo, hi) = star_discrepancy_grid_bound(p, fallback_m)?;
        Ok(DiscrepancyEstimate {
            dstar: hi,
            method: format!("grid-bound:m={fallback_m}"),
            lower: lo,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(points: Vec<Vec<f64>>) -> PointSet {
        PointSet::new(points, "t", None).unwrap()
    }

    #[test]
    fn exact_examples() {
        assert_eq!(
            star_discrepancy_exact(&ps(vec![vec![0.25], vec![0.75]])).unwrap(),
            0.25
        );
        assert_eq!(star_discrepancy_exact(&ps(vec![vec![0.5]])).unwrap(), 0.5);
        assert_eq!(
            star_discrepancy_exact(&ps(vec![vec![0.5, 0.5]])).unwrap(),
            0.75
        );
    }

    #[test]
    fn halton_first_points() {
        let h = halton_points(3, 1).unwrap();
        assert_eq!(h, vec![vec![0.5], vec![0.25], vec![0.75]]);
        let h2 = halton_points(2, 2).unwrap();
        assert_eq!(h2[0][1], 1.0 / 3.0);
        assert_eq!(h2[1][1], 2.0 / 3.0);
    }

    #[test]
    fn centered_regular() {
        let p = generate(&Generator::CenteredRegular, 4, 1).unwrap();
        let xs: Vec<f64> = p.points().iter().map(|x| x[0]).collect();
        assert_eq!(xs, vec![0.125, 0.375, 0.625, 0.875]);
        assert_eq!(star_discrepancy_exact(&p).unwrap(), 0.125);
        assert_eq!(
            generate(&Generator::CenteredRegular, 16, 2).unwrap().len(),
            16
        );
        assert!(generate(&Generator::CenteredRegular, 15, 2).is_err());
    }

    #[test]
    fn random_is_seeded() {
        let a = generate(&Generator::UniformRandom { seed: 9 }, 50, 3).unwrap();
        let b = generate(&Generator::UniformRandom { seed: 9 }, 50, 3).unwrap();
        let c = generate(&Generator::UniformRandom { seed: 10 }, 50, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn lattice_and_korobov() {
        assert_eq!(korobov_vector(16, 2), vec![1, 9]);
        let p = generate(
            &Generator::Rank1Lattice {
                g: Some(vec![1, 3]),
            },
            5,
            2,
        )
        .unwrap();
        assert_eq!(p.points()[2], vec![0.4, 0.2]);
        assert!(generate(&Generator::Rank1Lattice { g: Some(vec![1]) }, 5, 2).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let p = generate(&Generator::Halton, 300, 2).unwrap();
        match star_discrepancy_exact(&p) {
            Err(Error::ResourceLimit { .. }) => {}
            other => panic!("expected resource limit, got {other:?}"),
        }
        let est = star_discrepancy(&p, 64).unwrap();
        assert!(est.method.starts_with("grid-bound"));
        assert_eq!(exact_budget(4), 19);
    }

    #[test]
    fn grid_bracket_contains_exact() {
        for seed in 0..5 {
            let p = generate(&Generator::UniformRandom { seed }, 20, 2).unwrap();
            let exact = star_discrepancy_exact(&p).unwrap();
            let (lo, hi) = star_discrepancy_grid_bound(&p, 32).unwrap();
            assert!(lo <= exact + 1e-15 && exact <= hi, "{lo} {exact} {hi}");
            assert!((hi - lo - 2.0 / 32.0).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_roundtrip() {
        let p = generate(&Generator::UniformRandom { seed: 3 }, 7, 2).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# label=random, seed=3\n"));
        let back = PointSet::read_csv(&buf[..]).unwrap();
        assert_eq!(back, p);

        let bare = PointSet::read_csv(&b"0.1, 0.2\n0.3,0.4\n"[..]).unwrap();
        assert_eq!(bare.len(), 2);
        assert!(PointSet::read_csv(&b"0.1,x\n"[..]).is_err());
        assert!(PointSet::read_csv(&b"1.5\n"[..]).is_err());
    }
}
