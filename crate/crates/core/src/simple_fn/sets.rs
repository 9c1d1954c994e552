//! Members of the supported set families and their exact membership tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AxisSubset, BoxV, Point};

/// Most half-spaces a convex body may carry. Products of many convex terms
/// beyond this are refused rather than silently approximated.
pub const MAX_HALFSPACES: usize = 16;

/// `{x : normal · x <= offset}`, or `< offset` when `strict`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
    #[serde(default)]
    pub strict: bool,
}

impl Halfspace {
    pub fn contains(&self, x: &[f64]) -> bool {
        let s: f64 = self.normal.iter().zip(x).map(|(n, v)| n * v).sum();
        if self.strict {
            s < self.offset
        } else {
            s <= self.offset
        }
    }
}

/// Closed Euclidean ball (a disc when `d = 2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, x: &[f64]) -> bool {
        let r2: f64 = self
            .center
            .iter()
            .zip(x)
            .map(|(c, v)| (v - c) * (v - c))
            .sum();
        r2 <= self.radius * self.radius
    }
}

/// Intersection of half-spaces and balls with the cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ConvexBody {
    #[serde(default)]
    pub halfspaces: Vec<Halfspace>,
    #[serde(default)]
    pub balls: Vec<Ball>,
}

impl ConvexBody {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.halfspaces.iter().all(|h| h.contains(x)) && self.balls.iter().all(|b| b.contains(x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Set {
    Empty,
    Cube,
    Box(BoxV),
    Halfspace(Halfspace),
    /// Closed disc (d = 2) or ball (d = 3).
    Disc(Ball),
    Convex(ConvexBody),
    /// `[0,1]^d` minus the inner set.
    Complement {
        of: Box<Set>,
    },
}

impl Set {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Set::Empty => false,
            Set::Cube => true,
            Set::Box(b) => b.contains(x),
            Set::Halfspace(h) => h.contains(x),
            Set::Disc(b) => b.contains(x),
            Set::Convex(c) => c.contains(x),
            Set::Complement { of } => !of.contains(x),
        }
    }

    pub fn complement(self) -> Set {
        match self {
            Set::Empty => Set::Cube,
            Set::Cube => Set::Empty,
            Set::Complement { of } => *of,
            s => Set::Complement { of: Box::new(s) },
        }
    }

    /// Dimension implied by the parameters; `None` for `Empty`/`Cube`.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Set::Empty | Set::Cube => None,
            Set::Box(b) => Some(b.dim()),
            Set::Halfspace(h) => Some(h.normal.len()),
            Set::Disc(b) => Some(b.center.len()),
            Set::Convex(c) => c
                .halfspaces
                .first()
                .map(|h| h.normal.len())
                .or_else(|| c.balls.first().map(|b| b.center.len())),
            Set::Complement { of } => of.dim(),
        }
    }

    /// Only axis-parallel boxes (possibly complemented) or trivial sets.
    pub fn is_box_like(&self) -> bool {
        match self {
            Set::Empty | Set::Cube | Set::Box(_) => true,
            Set::Complement { of } => of.is_box_like(),
            _ => false,
        }
    }

    /// Convex pieces only (no complements): the result of `intersect` is
    /// again of this shape.
    pub fn is_convex_repr(&self) -> bool {
        !matches!(self, Set::Complement { .. })
    }

    /// Recognisably `[0,1]^d` or `∅` (sound, not complete).
    pub fn triviality(&self, d: usize) -> Option<bool> {
        match self {
            Set::Empty => Some(false),
            Set::Cube => Some(true),
            Set::Box(b) if b.is_cube() => Some(true),
            Set::Box(b) if b.is_empty() => Some(false),
            Set::Halfspace(_) | Set::Disc(_) | Set::Convex(_) => {
                // convex: contains the cube iff it contains every corner
                let all = (0..1u32 << d).all(|m| {
                    let x: Vec<f64> = (0..d).map(|i| ((m >> i) & 1) as f64).collect();
                    self.contains(&x)
                });
                if all {
                    Some(true)
                } else {
                    None
                }
            }
            Set::Complement { of } => of.triviality(d).map(|t| !t),
            _ => None,
        }
    }

    /// Stable textual identity used to merge duplicate terms.
    pub(crate) fn key(&self) -> String {
        serde_json::to_string(self).expect("sets serialise")
    }

    /// Exact intersection within the represented class. Complements are
    /// refused; callers expand them first.
    pub fn intersect(&self, other: &Set, d: usize) -> Result<Set> {
        use Set::*;
        Ok(match (self, other) {
            (Complement { .. }, _) | (_, Complement { .. }) => {
                return Err(Error::UnsupportedOperation(
                    "intersection of complemented sets; expand complements first".into(),
                ))
            }
            (Empty, _) | (_, Empty) => Empty,
            (Cube, s) | (s, Cube) => s.clone(),
            (Box(p), Box(q)) => intersect_boxes(p, q)?,
            (p, q) => {
                let mut body = p.to_convex(d);
                let qb = q.to_convex(d);
                body.halfspaces.extend(qb.halfspaces);
                body.balls.extend(qb.balls);
                if body.halfspaces.len() > MAX_HALFSPACES {
                    return Err(Error::UnsupportedOperation(format!(
                        "convex intersection needs {} half-spaces (limit {MAX_HALFSPACES})",
                        body.halfspaces.len()
                    )));
                }
                Convex(body)
            }
        })
    }

    fn to_convex(&self, d: usize) -> ConvexBody {
        match self {
            Set::Convex(c) => c.clone(),
            Set::Halfspace(h) => ConvexBody {
                halfspaces: vec![h.clone()],
                balls: vec![],
            },
            Set::Disc(b) => ConvexBody {
                halfspaces: vec![],
                balls: vec![b.clone()],
            },
            Set::Box(b) => {
                let mut hs = Vec::new();
                for i in 0..d {
                    let mut e = vec![0.0; d];
                    if b.a()[i] > 0.0 {
                        e[i] = -1.0;
                        hs.push(Halfspace {
                            normal: e.clone(),
                            offset: -b.a()[i],
                            strict: false,
                        });
                    }
                    let closed = b.closed().contains(i);
                    if b.b()[i] < 1.0 || !closed {
                        e[i] = 1.0;
                        hs.push(Halfspace {
                            normal: e,
                            offset: b.b()[i],
                            strict: !closed,
                        });
                    }
                }
                ConvexBody {
                    halfspaces: hs,
                    balls: vec![],
                }
            }
            Set::Cube => ConvexBody::default(),
            Set::Empty | Set::Complement { .. } => unreachable!("handled by intersect"),
        }
    }
}

fn intersect_boxes(p: &BoxV, q: &BoxV) -> Result<Set> {
    let d = p.dim();
    let mut a = Vec::with_capacity(d);
    let mut b = Vec::with_capacity(d);
    let mut closed = Vec::new();
    for i in 0..d {
        let lo = p.a()[i].max(q.a()[i]);
        let (hi, c) = match p.b()[i].total_cmp(&q.b()[i]) {
            std::cmp::Ordering::Less => (p.b()[i], p.closed().contains(i)),
            std::cmp::Ordering::Greater => (q.b()[i], q.closed().contains(i)),
            std::cmp::Ordering::Equal => {
                (p.b()[i], p.closed().contains(i) && q.closed().contains(i))
            }
        };
        if lo > hi || (lo == hi && !c) {
            return Ok(Set::Empty);
        }
        a.push(lo);
        b.push(hi);
        if c {
            closed.push(i);
        }
    }
    let bx = BoxV::new(
        Point::new(a)?,
        Point::new(b)?,
        AxisSubset::from_axes(&closed, d)?,
    )?;
    Ok(if bx.is_cube() {
        Set::Cube
    } else {
        Set::Box(bx)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anchored(b: &[f64], closed: &[usize]) -> Set {
        let d = b.len();
        Set::Box(
            BoxV::anchored(
                Point::new(b.to_vec()).unwrap(),
                AxisSubset::from_axes(closed, d).unwrap(),
            )
            .unwrap(),
        )
    }

    #[test]
    fn box_intersection_takes_min_corner() {
        let p = anchored(&[0.3, 0.8], &[0, 1]);
        let q = anchored(&[0.5, 0.4], &[0, 1]);
        assert_eq!(p.intersect(&q, 2).unwrap(), anchored(&[0.3, 0.4], &[0, 1]));
        // equal corners: closed only if both are
        let r = anchored(&[0.3, 0.4], &[1]);
        assert_eq!(p.intersect(&r, 2).unwrap(), anchored(&[0.3, 0.4], &[1]));
    }

    #[test]
    fn degenerate_intersection_is_empty() {
        let p = anchored(&[0.0, 0.5], &[]);
        let q = anchored(&[0.5, 0.5], &[0, 1]);
        assert_eq!(p.intersect(&q, 2).unwrap(), Set::Empty);
    }

    #[test]
    fn convex_membership_matches_pieces() {
        let hp = Set::Halfspace(Halfspace {
            normal: vec![-1.0, 1.0],
            offset: 0.0,
            strict: true,
        });
        let disc = Set::Disc(Ball {
            center: vec![0.5, 0.5],
            radius: 0.3,
        });
        let bx = anchored(&[0.6, 0.9], &[]);
        let both = hp.intersect(&disc, 2).unwrap().intersect(&bx, 2).unwrap();
        let pts = crate::discrepancy::halton_points(2000, 2).unwrap();
        for x in &pts {
            assert_eq!(
                both.contains(x),
                hp.contains(x) && disc.contains(x) && bx.contains(x),
                "{x:?}"
            );
        }
        assert!(hp.contains(&[0.7, 0.2]) && !hp.contains(&[0.5, 0.5]));
    }

    #[test]
    fn triviality_and_complements() {
        assert_eq!(Set::Cube.triviality(2), Some(true));
        let big = Set::Disc(Ball {
            center: vec![0.5, 0.5],
            radius: 0.8,
        });
        assert_eq!(big.triviality(2), Some(true));
        assert_eq!(big.clone().complement().triviality(2), Some(false));
        assert_eq!(big.clone().complement().complement(), big);
        assert_eq!(anchored(&[0.3, 0.3], &[]).triviality(2), None);
    }

    #[test]
    fn json_shape() {
        let v = serde_json::to_value(anchored(&[0.5, 0.5], &[0])).unwrap();
        assert_eq!(v["kind"], "box");
        assert_eq!(v["closed_axes"], serde_json::json!([1]));
        let d = Set::Disc(Ball {
            center: vec![0.5, 0.5],
            radius: 0.25,
        });
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"kind":"disc","center":[0.5,0.5],"radius":0.25}"#);
        let back: Set = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }
}
