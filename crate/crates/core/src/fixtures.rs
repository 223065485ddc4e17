//! Closed-form infinite trees used as test hosts.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::oracle::{ComponentSize, TreeOracle};

/// Vertex handles of the fixture families.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FixtureVertex {
    /// A word over child indices; the empty word is the root.
    Word(Vec<u8>),
    /// A vertex of the integer line.
    Line(i64),
    /// The pendant hanging off `Line(i)`.
    Pendant(i64),
    /// The ray vertex at distance `t` from the root of the regular part.
    Ray(u64),
    /// Lattice point `(i, j)` of a staircase.
    Grid(u64, u64),
    /// The `t`-th subdivision vertex on the edge from the parent of the
    /// word to the word, counted from the parent side.
    Subdivided(Vec<u8>, u16),
}

fn word(w: &[u8]) -> String {
    if w.is_empty() {
        "e".into()
    } else {
        w.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(".")
    }
}

impl fmt::Display for FixtureVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FixtureVertex::Word(w) => write!(f, "w:{}", word(w)),
            FixtureVertex::Line(i) => write!(f, "z:{i}"),
            FixtureVertex::Pendant(i) => write!(f, "p:{i}"),
            FixtureVertex::Ray(t) => write!(f, "r:{t}"),
            FixtureVertex::Grid(i, j) => write!(f, "({i},{j})"),
            FixtureVertex::Subdivided(w, t) => write!(f, "s:{}/{t}", word(w)),
        }
    }
}

impl Serialize for FixtureVertex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// The fixture families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fixture {
    /// Every vertex has degree `k`.
    Regular(usize),
    /// The integer line with one pendant vertex at 0.
    ZLinePendant,
    /// The integer line with a pendant vertex at every integer.
    Comb,
    /// The 3-regular tree with an infinite ray attached at its root.
    ThreeRegPlusRay,
    /// Spine `(i,0)`, `i >= 0`, with a column `(i,0) .. (i,n*i)` at each `i`.
    Staircase(u64),
    /// Rooted tree where every vertex has `s` children.
    Sary(usize),
    /// `regular(k)` with every edge subdivided by `m` extra vertices.
    SubdividedRegular { k: usize, m: u16 },
}

pub const FIXTURE_NAMES: &[(&str, &str)] = &[
    ("regular(k)", "every vertex has degree k (k >= 2)"),
    ("zline_pendant", "integer line with one pendant vertex at 0"),
    ("comb", "integer line with a pendant vertex at every integer"),
    ("threereg_plus_ray", "3-regular tree with an infinite ray attached at a vertex"),
    ("staircase", "spine with a column of height i at spine vertex i"),
    ("staircase_n(n)", "spine with a column of height n*i at spine vertex i"),
    ("sary(s)", "rooted tree where every vertex has s children"),
    ("subdivided_regular(k,m)", "regular(k) with every edge subdivided m times"),
];

impl fmt::Display for Fixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fixture::Regular(k) => write!(f, "regular({k})"),
            Fixture::ZLinePendant => write!(f, "zline_pendant"),
            Fixture::Comb => write!(f, "comb"),
            Fixture::ThreeRegPlusRay => write!(f, "threereg_plus_ray"),
            Fixture::Staircase(1) => write!(f, "staircase"),
            Fixture::Staircase(n) => write!(f, "staircase_n({n})"),
            Fixture::Sary(s) => write!(f, "sary({s})"),
            Fixture::SubdividedRegular { k, m } => write!(f, "subdivided_regular({k},{m})"),
        }
    }
}

impl FromStr for Fixture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        make_fixture(s)
    }
}

fn split_params(spec: &str) -> (String, Vec<String>) {
    let spec = spec.trim();
    if let Some((name, rest)) = spec.split_once('(') {
        let inner = rest.trim_end_matches(')');
        let params = inner
            .split(',')
            .map(|p| p.trim().to_string())
            .filter(|p| !p.is_empty())
            .collect();
        (name.trim().to_lowercase(), params)
    } else if let Some((name, rest)) = spec.split_once(':') {
        let params = rest.split(',').map(|p| p.trim().to_string()).collect();
        (name.trim().to_lowercase(), params)
    } else {
        (spec.to_lowercase(), Vec::new())
    }
}

/// Parse a fixture id such as `regular(3)`, `regular:3`, `staircase_n(2)`.
pub fn make_fixture(spec: &str) -> Result<Fixture> {
    let (name, params) = split_params(spec);
    let unknown = || Error::UnknownFixture(spec.to_string());
    let int = |i: usize| -> Result<u64> {
        params
            .get(i)
            .ok_or_else(unknown)?
            .parse::<u64>()
            .map_err(|_| unknown())
    };
    let fixture = match (name.as_str(), params.len()) {
        ("regular", 1) => {
            let k = int(0)? as usize;
            if k < 2 {
                return Err(Error::InvalidInput(format!(
                    "regular({k}) is finite; use k >= 2"
                )));
            }
            Fixture::Regular(k)
        }
        ("zline_pendant", 0) => Fixture::ZLinePendant,
        ("comb", 0) => Fixture::Comb,
        ("threereg_plus_ray", 0) => Fixture::ThreeRegPlusRay,
        ("staircase", 0) => Fixture::Staircase(1),
        ("staircase_n", 1) => {
            let n = int(0)?;
            if n == 0 {
                return Err(Error::InvalidInput("staircase_n needs n >= 1".into()));
            }
            Fixture::Staircase(n)
        }
        ("sary", 1) => {
            let s = int(0)? as usize;
            if s == 0 {
                return Err(Error::InvalidInput("sary(0) is a single vertex".into()));
            }
            Fixture::Sary(s)
        }
        ("subdivided_regular", 2) => {
            let k = int(0)? as usize;
            let m = int(1)?;
            if k < 2 || m > u16::MAX as u64 {
                return Err(Error::InvalidInput(format!("bad parameters in `{spec}`")));
            }
            Fixture::SubdividedRegular { k, m: m as u16 }
        }
        _ => return Err(unknown()),
    };
    Ok(fixture)
}

fn push(w: &[u8], c: usize) -> Vec<u8> {
    let mut v = w.to_vec();
    v.push(c as u8);
    v
}

impl Fixture {
    /// Number of children of word `w` in the word-labelled families.
    fn children(&self, w: &[u8]) -> usize {
        match self {
            Fixture::Regular(k) | Fixture::SubdividedRegular { k, .. } => {
                if w.is_empty() {
                    *k
                } else {
                    k - 1
                }
            }
            Fixture::ThreeRegPlusRay => {
                if w.is_empty() {
                    3
                } else {
                    2
                }
            }
            Fixture::Sary(s) => *s,
            _ => 0,
        }
    }

    fn word_neighbors(&self, w: &[u8]) -> Vec<FixtureVertex> {
        let mut out = Vec::new();
        if let Some((_, parent)) = w.split_last() {
            out.push(FixtureVertex::Word(parent.to_vec()));
        }
        for c in 0..self.children(w) {
            out.push(FixtureVertex::Word(push(w, c)));
        }
        out
    }
}

impl TreeOracle for Fixture {
    type Vertex = FixtureVertex;

    fn root(&self) -> FixtureVertex {
        match self {
            Fixture::ZLinePendant | Fixture::Comb => FixtureVertex::Line(0),
            Fixture::Staircase(_) => FixtureVertex::Grid(0, 0),
            _ => FixtureVertex::Word(Vec::new()),
        }
    }

    fn neighbors(&self, v: &FixtureVertex) -> Vec<FixtureVertex> {
        use FixtureVertex::*;
        match (self, v) {
            (Fixture::Regular(_) | Fixture::Sary(_), Word(w)) => self.word_neighbors(w),
            (Fixture::ThreeRegPlusRay, Word(w)) => {
                let mut out = self.word_neighbors(w);
                if w.is_empty() {
                    out.push(Ray(1));
                }
                out
            }
            (Fixture::ThreeRegPlusRay, Ray(t)) => {
                let back = if *t == 1 { Word(Vec::new()) } else { Ray(t - 1) };
                vec![back, Ray(t + 1)]
            }
            (Fixture::ZLinePendant, Line(i)) => {
                let mut out = vec![Line(i - 1), Line(i + 1)];
                if *i == 0 {
                    out.push(Pendant(0));
                }
                out
            }
            (Fixture::ZLinePendant, Pendant(0)) => vec![Line(0)],
            (Fixture::Comb, Line(i)) => vec![Line(i - 1), Line(i + 1), Pendant(*i)],
            (Fixture::Comb, Pendant(i)) => vec![Line(*i)],
            (Fixture::Staircase(n), Grid(i, j)) => {
                let top = n * i;
                let mut out = Vec::new();
                if *j == 0 {
                    if *i > 0 {
                        out.push(Grid(i - 1, 0));
                    }
                    out.push(Grid(i + 1, 0));
                } else {
                    out.push(Grid(*i, j - 1));
                }
                if *j < top {
                    out.push(Grid(*i, j + 1));
                }
                out
            }
            (Fixture::SubdividedRegular { m, .. }, Word(w)) => {
                let m = *m;
                let mut out = Vec::new();
                if let Some((_, parent)) = w.split_last() {
                    out.push(if m == 0 {
                        Word(parent.to_vec())
                    } else {
                        Subdivided(w.clone(), m)
                    });
                }
                for c in 0..self.children(w) {
                    let child = push(w, c);
                    out.push(if m == 0 { Word(child) } else { Subdivided(child, 1) });
                }
                out
            }
            (Fixture::SubdividedRegular { m, .. }, Subdivided(w, t)) => {
                let parent_side = if *t == 1 {
                    Word(w[..w.len() - 1].to_vec())
                } else {
                    Subdivided(w.clone(), t - 1)
                };
                let child_side = if t == m {
                    Word(w.clone())
                } else {
                    Subdivided(w.clone(), t + 1)
                };
                vec![parent_side, child_side]
            }
            _ => panic!("vertex {v} does not belong to fixture {self}"),
        }
    }

    fn hanging_component(&self, cut: &FixtureVertex, start: &FixtureVertex) -> Option<ComponentSize> {
        use FixtureVertex::*;
        if !self.neighbors(cut).contains(start) {
            return None;
        }
        let size = match (self, cut, start) {
            (Fixture::ZLinePendant | Fixture::Comb, _, Pendant(_)) => ComponentSize::Finite(1),
            (Fixture::ZLinePendant | Fixture::Comb, _, _) => ComponentSize::Infinite,
            (Fixture::Staircase(n), Grid(i, j), Grid(a, b)) => {
                if a == i && b > j {
                    // the part of the column above `cut`
                    ComponentSize::Finite((n * i - j) as usize)
                } else if *j == 0 && *a + 1 == *i {
                    // everything left of spine vertex i
                    ComponentSize::Finite((i + n * i * (i - 1) / 2) as usize)
                } else {
                    ComponentSize::Infinite
                }
            }
            (Fixture::Sary(1), Word(w), Word(p)) if p.len() < w.len() => {
                ComponentSize::Finite(w.len())
            }
            (Fixture::Regular(_), _, _)
            | (Fixture::Sary(_), _, _)
            | (Fixture::ThreeRegPlusRay, _, _)
            | (Fixture::SubdividedRegular { .. }, _, _) => ComponentSize::Infinite,
            _ => return None,
        };
        Some(size)
    }

    fn is_finite(&self) -> Option<bool> {
        Some(false)
    }
}
