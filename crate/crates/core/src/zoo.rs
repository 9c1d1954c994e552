//! Named test functions with known monotonicity class, variation and
//! integral, and the small spec language used to select them.
//!
//! ```text
//! prod | linear | expsum            d from the caller (or d=K)
//! box:a=0.3,0.7                     1 on the closed box [0,a]
//! halfplane                         1 where x1 > x2 (d = 2)
//! disc:c=0.5,0.5;r=0.3              closed disc indicator (d = 2)
//! step1d:j=0.5                      1 where x >= j (d = 1)
//! table:path.json                   tabulated values (JSON)
//! random:cells=4;seed=7             seeded random table
//! ```

use std::path::Path;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{GridFunction, Tabulated};
use crate::grid::{check_dim, AxisSubset, BoxV, Ladder, Point};
use crate::simple_fn::{probe_ladder_for, Ball, Halfspace, Set, SetFamily, SimpleFunction, Term};
use crate::variation::{hk_on_ladder, is_completely_monotone, CmWitness};

pub const NAMES: [&str; 9] = [
    "prod",
    "linear",
    "expsum",
    "box",
    "halfplane",
    "disc",
    "step1d",
    "table",
    "random",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZooFlags {
    pub completely_monotone: bool,
    pub bounded_hk: bool,
    pub bounded_k: bool,
}

/// Outcome of checking the flags on the probing ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagCheck {
    pub cells_per_axis: Vec<usize>,
    pub ladder_hk: f64,
    /// Present when the function is flagged as not completely monotone.
    pub witness: Option<CmWitness>,
}

#[derive(Clone)]
pub struct ZooEntry {
    pub name: String,
    pub spec: String,
    pub flags: ZooFlags,
    pub analytic_integral: Option<f64>,
    pub analytic_hk: Option<f64>,
    pub check: FlagCheck,
    func: Arc<dyn GridFunction>,
    rstar: Option<SimpleFunction>,
    convex: Option<SimpleFunction>,
}

impl std::fmt::Debug for ZooEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ZooEntry")
            .field("spec", &self.spec)
            .field("dim", &self.func.dim())
            .field("flags", &self.flags)
            .finish()
    }
}

impl ZooEntry {
    pub fn function(&self) -> &dyn GridFunction {
        self.func.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.func.dim()
    }

    /// Exact finite representation over `family`, when one is known.
    pub fn simple_repr(&self, family: SetFamily) -> Option<&SimpleFunction> {
        match family {
            SetFamily::AnchoredBoxes => self.rstar.as_ref(),
            SetFamily::ConvexSets => self.convex.as_ref(),
        }
    }

    pub fn tabulated(&self) -> Option<&Tabulated> {
        self.func.as_tabulated()
    }
}

impl GridFunction for ZooEntry {
    fn dim(&self) -> usize {
        self.func.dim()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        self.func.eval(x)
    }
    fn breaks_along(&self, axis: usize, prefix: &[f64]) -> Vec<f64> {
        self.func.breaks_along(axis, prefix)
    }
    fn axis_breaks(&self, axis: usize) -> Vec<f64> {
        self.func.axis_breaks(axis)
    }
    fn as_tabulated(&self) -> Option<&Tabulated> {
        self.func.as_tabulated()
    }
}

struct Prod(usize);

impl GridFunction for Prod {
    fn dim(&self) -> usize {
        self.0
    }
    fn eval(&self, x: &[f64]) -> f64 {
        x.iter().product()
    }
}

struct Linear(usize);

impl GridFunction for Linear {
    fn dim(&self) -> usize {
        self.0
    }
    fn eval(&self, x: &[f64]) -> f64 {
        x.iter().sum::<f64>() / self.0 as f64
    }
}

struct ExpSum(usize);

impl GridFunction for ExpSum {
    fn dim(&self) -> usize {
        self.0
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (x.iter().sum::<f64>() - self.0 as f64).exp()
    }
}

struct BoxIndicator(Vec<f64>);

impl GridFunction for BoxIndicator {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        if x.iter().zip(&self.0).all(|(v, a)| v <= a) {
            1.0
        } else {
            0.0
        }
    }
    fn breaks_along(&self, axis: usize, _prefix: &[f64]) -> Vec<f64> {
        vec![self.0[axis]]
    }
    fn axis_breaks(&self, axis: usize) -> Vec<f64> {
        vec![self.0[axis]]
    }
}

struct HalfPlane;

impl GridFunction for HalfPlane {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, x: &[f64]) -> f64 {
        if x[0] > x[1] {
            1.0
        } else {
            0.0
        }
    }
    fn breaks_along(&self, axis: usize, prefix: &[f64]) -> Vec<f64> {
        if axis == 1 {
            vec![prefix[0]]
        } else {
            vec![]
        }
    }
}

struct Disc {
    c: [f64; 2],
    r: f64,
}

impl GridFunction for Disc {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, x: &[f64]) -> f64 {
        let (u, v) = (x[0] - self.c[0], x[1] - self.c[1]);
        if u * u + v * v <= self.r * self.r {
            1.0
        } else {
            0.0
        }
    }
    fn breaks_along(&self, axis: usize, prefix: &[f64]) -> Vec<f64> {
        if axis == 0 {
            // the chord length has square-root kinks here
            vec![self.c[0] - self.r, self.c[0] + self.r]
        } else {
            let u = prefix[0] - self.c[0];
            let h2 = self.r * self.r - u * u;
            if h2 > 0.0 {
                vec![self.c[1] - h2.sqrt(), self.c[1] + h2.sqrt()]
            } else {
                vec![]
            }
        }
    }
    fn axis_breaks(&self, axis: usize) -> Vec<f64> {
        vec![self.c[axis] - self.r, self.c[axis], self.c[axis] + self.r]
    }
}

struct Step1d(f64);

impl GridFunction for Step1d {
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, x: &[f64]) -> f64 {
        if x[0] >= self.0 {
            1.0
        } else {
            0.0
        }
    }
    fn breaks_along(&self, _axis: usize, _prefix: &[f64]) -> Vec<f64> {
        vec![self.0]
    }
    fn axis_breaks(&self, _axis: usize) -> Vec<f64> {
        vec![self.0]
    }
}

/// `name[:params]` split into the name and `key -> values`. Parameters are
/// separated by `;` or `,`; a token containing `=` starts a new key and
/// bare tokens extend the previous key's list.
pub fn parse_spec(spec: &str) -> Result<(String, IndexMap<String, Vec<String>>)> {
    let spec = spec.trim();
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), r.trim()),
        None => (spec, ""),
    };
    let mut params: IndexMap<String, Vec<String>> = IndexMap::new();
    let mut current: Option<String> = None;
    for tok in rest
        .split([';', ','])
        .map(str::trim)
        .filter(|t| !t.is_empty())
    {
        if let Some((k, v)) = tok.split_once('=') {
            let k = k.trim().to_string();
            if params.contains_key(&k) {
                return Err(Error::Parse(format!(
                    "parameter `{k}` given twice in `{spec}`"
                )));
            }
            params.insert(k.clone(), vec![v.trim().to_string()]);
            current = Some(k);
        } else {
            match &current {
                Some(k) => params[k].push(tok.to_string()),
                None => {
                    return Err(Error::Parse(format!(
                        "value `{tok}` in `{spec}` has no `key=`"
                    )))
                }
            }
        }
    }
    Ok((name.to_string(), params))
}

pub(crate) struct Params {
    spec: String,
    map: IndexMap<String, Vec<String>>,
}

impl Params {
    pub(crate) fn new(spec: &str, map: IndexMap<String, Vec<String>>) -> Self {
        Params {
            spec: spec.to_string(),
            map,
        }
    }

    pub(crate) fn allow(&self, keys: &[&str]) -> Result<()> {
        for k in self.map.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(Error::invalid(format!(
                    "unknown parameter `{k}` in `{}` (allowed: {})",
                    self.spec,
                    keys.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn floats(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(vals) = self.map.get(key) else {
            return Ok(None);
        };
        vals.iter()
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::Parse(format!("`{key}={v}` is not a finite number")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    pub(crate) fn float(&self, key: &str) -> Result<Option<f64>> {
        match self.floats(key)? {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(Some(v[0])),
            Some(_) => Err(Error::invalid(format!("`{key}` takes one value"))),
        }
    }

    pub(crate) fn uint(&self, key: &str) -> Result<Option<u64>> {
        let Some(vals) = self.map.get(key) else {
            return Ok(None);
        };
        if vals.len() != 1 {
            return Err(Error::invalid(format!("`{key}` takes one value")));
        }
        vals[0]
            .parse::<u64>()
            .map(Some)
            .map_err(|_| Error::Parse(format!("`{key}={}` is not a nonnegative integer", vals[0])))
    }

    pub(crate) fn uints(&self, key: &str) -> Result<Option<Vec<u64>>> {
        let Some(vals) = self.map.get(key) else {
            return Ok(None);
        };
        vals.iter()
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| Error::Parse(format!("`{key}={v}` is not a nonnegative integer")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

fn suggestions(name: &str) -> Vec<String> {
    let mut scored: Vec<(f64, &str)> = NAMES
        .iter()
        .chain(["anchored_box"].iter())
        .map(|n| (strsim::jaro_winkler(name, n), *n))
        .filter(|(s, _)| *s > 0.6)
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
    let mut out: Vec<String> = scored.into_iter().map(|(_, n)| n.to_string()).collect();
    if out.is_empty() {
        out = NAMES.iter().map(|s| s.to_string()).collect();
    }
    out
}

fn unit(name: &str, v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::invalid(format!(
            "`{name}` must lie in [0,1], got {v}"
        )))
    }
}

fn anchored_set(b: Vec<f64>) -> Result<Set> {
    let d = b.len();
    let bx = BoxV::anchored(Point::new(b)?, AxisSubset::full(d))?;
    Ok(if bx.is_cube() {
        Set::Cube
    } else {
        Set::Box(bx)
    })
}

struct Builder {
    name: &'static str,
    func: Arc<dyn GridFunction>,
    flags: ZooFlags,
    analytic_integral: Option<f64>,
    analytic_hk: Option<f64>,
    rstar: Option<SimpleFunction>,
    convex: Option<SimpleFunction>,
}

/// Names of all registry entries.
pub fn list() -> &'static [&'static str] {
    &NAMES
}

/// Looks up `spec` (see the module docs). `d` is used by the
/// dimension-generic entries unless the spec carries `d=`.
pub fn get(spec: &str, d: usize) -> Result<ZooEntry> {
    if spec.trim().starts_with("table:") || spec.trim() == "table" {
        let path = spec
            .trim()
            .split_once(':')
            .map(|(_, p)| p.trim())
            .unwrap_or("");
        if path.is_empty() {
            return Err(Error::invalid("table needs a path: table:FILE.json"));
        }
        let text = std::fs::read_to_string(Path::new(path))?;
        let t: Tabulated = serde_json::from_str(&text)?;
        return finish(spec, table_builder(t)?);
    }
    let (name, map) = parse_spec(spec)?;
    let p = Params::new(spec, map);
    let generic_dim = |p: &Params| -> Result<usize> {
        let d = p.uint("d")?.map(|v| v as usize).unwrap_or(d);
        check_dim(d)?;
        Ok(d)
    };
    let e = std::f64::consts::E;
    let b = match name.as_str() {
        "prod" => {
            p.allow(&["d"])?;
            let d = generic_dim(&p)?;
            Builder {
                name: "prod",
                func: Arc::new(Prod(d)),
                flags: ZooFlags {
                    completely_monotone: true,
                    bounded_hk: true,
                    bounded_k: true,
                },
                analytic_integral: Some(0.5f64.powi(d as i32)),
                analytic_hk: Some(2f64.powi(d as i32) - 1.0),
                rstar: None,
                convex: None,
            }
        }
        "linear" => {
            p.allow(&["d"])?;
            let d = generic_dim(&p)?;
            Builder {
                name: "linear",
                func: Arc::new(Linear(d)),
                flags: ZooFlags {
                    completely_monotone: true,
                    bounded_hk: true,
                    bounded_k: true,
                },
                analytic_integral: Some(0.5),
                analytic_hk: Some(1.0),
                rstar: None,
                convex: None,
            }
        }
        "expsum" => {
            p.allow(&["d"])?;
            let d = generic_dim(&p)?;
            Builder {
                name: "expsum",
                func: Arc::new(ExpSum(d)),
                flags: ZooFlags {
                    completely_monotone: true,
                    bounded_hk: true,
                    bounded_k: true,
                },
                analytic_integral: Some((1.0 - 1.0 / e).powi(d as i32)),
                analytic_hk: Some((2.0 - 1.0 / e).powi(d as i32) - 1.0),
                rstar: None,
                convex: None,
            }
        }
        "box" | "anchored_box" => {
            p.allow(&["a"])?;
            let a = p
                .floats("a")?
                .ok_or_else(|| Error::invalid("box needs a=A1,A2,..."))?;
            check_dim(a.len())?;
            for &v in &a {
                unit("a", v)?;
            }
            let set = anchored_set(a.clone())?;
            let dd = a.len();
            let nontrivial = a.iter().any(|&v| v < 1.0);
            let repr = |fam| SimpleFunction::indicator(dd, fam, set.clone());
            Builder {
                name: "box",
                func: Arc::new(BoxIndicator(a.clone())),
                flags: ZooFlags {
                    completely_monotone: !nontrivial,
                    bounded_hk: true,
                    bounded_k: true,
                },
                analytic_integral: Some(a.iter().product()),
                analytic_hk: Some(if nontrivial { 1.0 } else { 0.0 }),
                rstar: Some(repr(SetFamily::AnchoredBoxes)?),
                convex: if dd <= 3 {
                    Some(repr(SetFamily::ConvexSets)?)
                } else {
                    None
                },
            }
        }
        "halfplane" => {
            p.allow(&[])?;
            let hp = Set::Halfspace(Halfspace {
                normal: vec![-1.0, 1.0],
                offset: 0.0,
                strict: true,
            });
            Builder {
                name: "halfplane",
                func: Arc::new(HalfPlane),
                flags: ZooFlags {
                    completely_monotone: false,
                    bounded_hk: false,
                    bounded_k: true,
                },
                analytic_integral: Some(0.5),
                analytic_hk: None,
                rstar: None,
                convex: Some(SimpleFunction::indicator(2, SetFamily::ConvexSets, hp)?),
            }
        }
        "disc" => {
            p.allow(&["c", "r"])?;
            let c = p.floats("c")?.unwrap_or_else(|| vec![0.5, 0.5]);
            if c.len() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    got: c.len(),
                });
            }
            let r = p.float("r")?.unwrap_or(0.3);
            if !(r > 0.0) {
                return Err(Error::invalid("disc radius must be positive"));
            }
            let inside = c.iter().all(|&v| v - r >= 0.0 && v + r <= 1.0);
            let ball = Set::Disc(Ball {
                center: c.clone(),
                radius: r,
            });
            Builder {
                name: "disc",
                func: Arc::new(Disc { c: [c[0], c[1]], r }),
                flags: ZooFlags {
                    completely_monotone: false,
                    bounded_hk: false,
                    bounded_k: true,
                },
                analytic_integral: inside.then(|| std::f64::consts::PI * r * r),
                analytic_hk: None,
                rstar: None,
                convex: Some(SimpleFunction::indicator(2, SetFamily::ConvexSets, ball)?),
            }
        }
        "step1d" => {
            p.allow(&["j"])?;
            let j = unit("j", p.float("j")?.unwrap_or(0.5))?;
            let terms = vec![
                Term {
                    alpha: 1.0,
                    set: Set::Cube,
                },
                Term {
                    alpha: -1.0,
                    set: if j > 0.0 {
                        Set::Box(BoxV::anchored(Point::new(vec![j])?, AxisSubset::empty(1))?)
                    } else {
                        Set::Empty
                    },
                },
            ];
            let rstar = SimpleFunction::new(1, SetFamily::AnchoredBoxes, terms.clone())?;
            Builder {
                name: "step1d",
                func: Arc::new(Step1d(j)),
                flags: ZooFlags {
                    completely_monotone: true,
                    bounded_hk: true,
                    bounded_k: true,
                },
                analytic_integral: Some(1.0 - j),
                analytic_hk: Some(if j > 0.0 { 1.0 } else { 0.0 }),
                rstar: Some(rstar),
                convex: Some(SimpleFunction::new(1, SetFamily::ConvexSets, terms)?),
            }
        }
        "random" => {
            p.allow(&["cells", "seed", "d"])?;
            let d = generic_dim(&p)?;
            let cells = p.uint("cells")?.unwrap_or(4) as usize;
            if cells == 0 || ((cells + 1) as f64).powi(d as i32) > (1u64 << 22) as f64 {
                return Err(Error::invalid(format!(
                    "random table with {cells} cells per axis"
                )));
            }
            let seed = p.uint("seed")?.unwrap_or(0);
            table_builder(Tabulated::random(&Ladder::uniform(d, cells)?, seed))?
        }
        _ => {
            return Err(Error::NotFound {
                name: name.clone(),
                suggestions: suggestions(&name),
            })
        }
    };
    finish(spec, b)
}

fn table_builder(t: Tabulated) -> Result<Builder> {
    let cm = is_completely_monotone(&t, t.ladder())?.monotone;
    let rstar = crate::simple_fn::from_tabulated(&t)?;
    let convex = if t.dim() <= 3 {
        Some(SimpleFunction::new(
            t.dim(),
            SetFamily::ConvexSets,
            rstar.terms().to_vec(),
        )?)
    } else {
        None
    };
    let hk = hk_on_ladder(&t, t.ladder())?.hk_total;
    Ok(Builder {
        name: "table",
        flags: ZooFlags {
            completely_monotone: cm,
            bounded_hk: true,
            bounded_k: convex.is_some(),
        },
        analytic_integral: Some(t.integral()),
        analytic_hk: Some(hk),
        rstar: Some(rstar),
        convex,
        func: Arc::new(t),
    })
}

/// Verifies the flags on the probing ladder: a completely monotone entry
/// must pass the check, any other must produce a witness, and a known
/// Hardy–Krause value must dominate the ladder value (ladder values are
/// lower bounds).
fn finish(spec: &str, b: Builder) -> Result<ZooEntry> {
    let f = b.func.as_ref();
    let ladder = probe_ladder_for(f)?;
    let cm = is_completely_monotone(f, &ladder)?;
    if cm.monotone != b.flags.completely_monotone {
        return Err(Error::InequalityViolation(format!(
            "`{spec}` is flagged completely_monotone={} but the ladder check says {}",
            b.flags.completely_monotone, cm.monotone
        )));
    }
    let report = hk_on_ladder(f, &ladder)?;
    if let Some(hk) = b.analytic_hk {
        let tol = 1e-9 * (1.0 + hk.abs());
        if report.hk_total > hk + tol {
            return Err(Error::InequalityViolation(format!(
                "`{spec}`: ladder variation {} exceeds the analytic value {hk}",
                report.hk_total
            )));
        }
    }
    Ok(ZooEntry {
        name: b.name.to_string(),
        spec: spec.trim().to_string(),
        flags: b.flags,
        analytic_integral: b.analytic_integral,
        analytic_hk: b.analytic_hk,
        check: FlagCheck {
            cells_per_axis: ladder.cells_per_axis(),
            ladder_hk: report.hk_total,
            witness: cm.witness,
        },
        func: b.func,
        rstar: b.rstar,
        convex: b.convex,
    })
}
