//! Contraction of degree-2 chains and the isoperimetric checks built on it.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::{oracle_boundary, TreeOracle};
use crate::patch::Patch;
use crate::ratio::Ratio;
use crate::tree::{Tree, VertexId};

/// Longest chain of degree-2 vertices followed before giving up.
const MAX_CHAIN: usize = 1 << 16;

/// A patch with every maximal chain of degree-2 vertices replaced by one edge.
#[derive(Clone, Debug)]
pub struct Contraction {
    /// The contracted patch. Chains that leave the original patch become
    /// exterior edges of their kept end.
    pub patch: Patch,
    /// Original id of each contracted vertex.
    pub kept: Vec<VertexId>,
    /// Largest number of original edges behind one contracted edge.
    pub stretch: usize,
    /// `(a, b, interior)` in original ids, one per contracted edge.
    pub chains: Vec<(VertexId, VertexId, Vec<VertexId>)>,
}

pub fn contract_branchless(patch: &Patch) -> Result<Contraction> {
    let tree = patch.tree();
    let n = tree.vertex_count();
    let mut degree = Vec::with_capacity(n);
    for v in 0..n {
        degree.push(patch.host_degree(v).ok_or_else(|| {
            Error::IncompleteKnowledge(format!("the host degree of vertex {v} is unknown"))
        })?);
    }
    let kept: Vec<VertexId> = (0..n).filter(|&v| degree[v] != 2).collect();
    if kept.is_empty() {
        return Err(Error::NoBranchStructure);
    }
    let local: HashMap<VertexId, usize> = kept.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut hidden: Vec<usize> = kept.iter().map(|&v| patch.hidden(v).unwrap()).collect();
    let mut edges = Vec::new();
    let mut chains = Vec::new();
    let mut stretch = 0;
    for (i, &x) in kept.iter().enumerate() {
        for &w in tree.neighbors(x) {
            let (mut prev, mut cur) = (x, w);
            let mut interior = Vec::new();
            let end = loop {
                if degree[cur] != 2 {
                    break Some(cur);
                }
                interior.push(cur);
                match tree.neighbors(cur).iter().find(|&&z| z != prev) {
                    Some(&next) => {
                        prev = cur;
                        cur = next;
                    }
                    None => break None,
                }
            };
            match end {
                Some(y) => {
                    if x < y {
                        stretch = stretch.max(interior.len() + 1);
                        edges.push((i, local[&y]));
                        chains.push((x, y, interior));
                    }
                }
                None => hidden[i] += 1,
            }
        }
    }
    let contracted = Tree::from_edges(kept.len(), &edges)?;
    Ok(Contraction {
        patch: Patch::with_exterior(contracted, hidden.into_iter().map(Some).collect())?,
        kept,
        stretch,
        chains,
    })
}

/// Both sides of the comparison between a set and its image after chain
/// contraction.
#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub size: usize,
    pub boundary: usize,
    pub ratio: Ratio,
    pub contracted_size: usize,
    pub contracted_boundary: usize,
    pub contracted_ratio: Ratio,
    /// Longest chain incident to the contracted set.
    pub stretch: usize,
    /// `ratio(A') <= ratio(A)`.
    pub lower_holds: bool,
    /// `ratio(A) <= stretch * ratio(A')`.
    pub upper_holds: bool,
    /// `ratio(A) <= ratio(A')`.
    pub reverse_lower_holds: bool,
}

/// Compares `|∂A|/|A|` with the ratio of `A' = A ∩ T'` in the contracted
/// tree `T'`, whose vertices are those of degree other than 2.
pub fn sandwich_check<O: TreeOracle>(oracle: &O, members: &[O::Vertex]) -> Result<SandwichReport> {
    if members.is_empty() {
        return Err(Error::EmptySelection);
    }
    let set: HashSet<&O::Vertex> = members.iter().collect();
    let image: Vec<&O::Vertex> = set.iter().copied().filter(|v| oracle.degree(v) != 2).collect();
    if image.is_empty() {
        return Err(Error::DegenerateImage);
    }
    let image_set: HashSet<&O::Vertex> = image.iter().copied().collect();
    let mut stretch = 0;
    let mut contracted_boundary = 0;
    for x in &image {
        let mut escapes = false;
        for w in oracle.neighbors(x) {
            let (mut prev, mut cur) = ((*x).clone(), w);
            let mut len = 1;
            while oracle.degree(&cur) == 2 {
                if len > MAX_CHAIN {
                    return Err(Error::Precondition(format!(
                        "the chain leaving {x} has more than {MAX_CHAIN} edges"
                    )));
                }
                let next = oracle
                    .neighbors(&cur)
                    .into_iter()
                    .find(|z| *z != prev)
                    .expect("degree 2");
                prev = cur;
                cur = next;
                len += 1;
            }
            stretch = stretch.max(len);
            if !image_set.contains(&cur) {
                escapes = true;
            }
        }
        if escapes {
            contracted_boundary += 1;
        }
    }
    let distinct: Vec<O::Vertex> = set.iter().map(|v| (*v).clone()).collect();
    let boundary = oracle_boundary(oracle, &distinct).len();
    let ratio = Ratio::from_counts(boundary, distinct.len());
    let contracted_ratio = Ratio::from_counts(contracted_boundary, image.len());
    Ok(SandwichReport {
        size: distinct.len(),
        boundary,
        ratio,
        contracted_size: image.len(),
        contracted_boundary,
        contracted_ratio,
        stretch,
        lower_holds: contracted_ratio <= ratio,
        upper_holds: ratio <= contracted_ratio.scale(stretch as u64),
        reverse_lower_holds: ratio <= contracted_ratio,
    })
}

/// `|A| <= 2|∂A|` (and the variant allowing one vertex of degree 2) for a
/// connected set in a tree of minimum degree 3.
#[derive(Clone, Debug, Serialize)]
pub struct MinDegree3Report {
    pub size: usize,
    pub boundary: usize,
    /// Slack allowed by the bound: 0, or 2 when the exceptional vertex
    /// belongs to the set and has degree 2.
    pub slack: usize,
    /// `|A| <= 2|∂A| + slack`.
    pub holds: bool,
    /// `|A| <= 2|∂A|`.
    pub holds_tight: bool,
}

fn degree3_report(
    size: usize,
    boundary: usize,
    degrees: impl Iterator<Item = (String, bool, usize)>,
) -> Result<MinDegree3Report> {
    let mut slack = 0;
    for (name, exceptional, deg) in degrees {
        let needed = if exceptional { 2 } else { 3 };
        if deg < needed {
            return Err(Error::Precondition(format!(
                "vertex {name} has degree {deg}, below the required {needed}"
            )));
        }
        if exceptional && deg == 2 {
            slack = 2;
        }
    }
    Ok(MinDegree3Report {
        size,
        boundary,
        slack,
        holds: size <= 2 * boundary + slack,
        holds_tight: size <= 2 * boundary,
    })
}

/// The degree hypothesis is checked on the members of the set.
pub fn min_degree3_bound_check<O: TreeOracle>(
    oracle: &O,
    members: &[O::Vertex],
    exception: Option<&O::Vertex>,
) -> Result<MinDegree3Report> {
    if members.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut distinct = members.to_vec();
    distinct.sort();
    distinct.dedup();
    let set: HashSet<&O::Vertex> = distinct.iter().collect();
    // connectivity: a finite set of a tree is connected iff it spans |A|-1 edges
    let inner_edges: usize = distinct
        .iter()
        .map(|v| oracle.neighbors(v).iter().filter(|w| set.contains(w)).count())
        .sum::<usize>()
        / 2;
    if inner_edges + 1 != distinct.len() {
        return Err(Error::NotConnected);
    }
    let boundary = oracle_boundary(oracle, &distinct).len();
    degree3_report(
        distinct.len(),
        boundary,
        distinct
            .iter()
            .map(|v| (v.to_string(), Some(v) == exception, oracle.degree(v))),
    )
}

pub fn min_degree3_bound_check_patch(
    patch: &Patch,
    members: &[VertexId],
    exception: Option<VertexId>,
) -> Result<MinDegree3Report> {
    let sel = patch.select(members)?;
    if !sel.is_connected() {
        return Err(Error::NotConnected);
    }
    let boundary = sel.boundary()?.len();
    let mut degrees = Vec::with_capacity(sel.len());
    for &v in sel.members() {
        let deg = patch
            .host_degree(v)
            .ok_or_else(|| Error::IncompleteKnowledge(format!("the host degree of {v} is unknown")))?;
        degrees.push((v.to_string(), Some(v) == exception, deg));
    }
    degree3_report(sel.len(), boundary, degrees.into_iter())
}
