//! Inessential subtrees: finite subtrees that meet the rest of the host in a
//! single vertex, their root.

use std::collections::HashSet;

use serde::Serialize;

use crate::enumerate::for_each_connected_subset;
use crate::error::{Error, Result};
use crate::oracle::{bounded_component, oracle_boundary, ComponentSize, TreeOracle};
use crate::patch::{Patch, Selection};
use crate::tree::{InducedTree, VertexId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InessentialSubtree<V> {
    pub root: V,
    /// Sorted, includes the root.
    pub members: Vec<V>,
}

impl<V> InessentialSubtree<V> {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

fn checked_selection<'h>(host: &'h Patch, members: &[VertexId]) -> Result<Selection<'h>> {
    let sel = host.select(members)?;
    if !sel.is_connected() {
        return Err(Error::NotConnected);
    }
    if sel.len() < 2 {
        return Err(Error::NoEdge);
    }
    let exits = sel.boundary()?.len();
    if exits == 0 {
        return Err(Error::NoOutsideEdges);
    }
    Ok(sel)
}

/// Fast check: exactly one member has a host neighbor outside `members`.
pub fn is_inessential(host: &Patch, members: &[VertexId]) -> Result<bool> {
    Ok(checked_selection(host, members)?.boundary()?.len() == 1)
}

/// The unique member with a neighbor outside the subtree.
pub fn find_root(host: &Patch, members: &[VertexId]) -> Result<VertexId> {
    let sel = checked_selection(host, members)?;
    match sel.boundary()? {
        [root] => Ok(*root),
        _ => Err(Error::NotInessential),
    }
}

pub fn inessential(host: &Patch, members: &[VertexId]) -> Result<InessentialSubtree<VertexId>> {
    let root = find_root(host, members)?;
    let sel = host.select(members)?;
    Ok(InessentialSubtree {
        root,
        members: sel.members().to_vec(),
    })
}

/// Union of two inessential subtrees with a common root.
pub fn union_inessential(
    host: &Patch,
    a: &InessentialSubtree<VertexId>,
    b: &InessentialSubtree<VertexId>,
) -> Result<InessentialSubtree<VertexId>> {
    if a.root != b.root {
        return Err(Error::DistinctRoots(a.root.to_string(), b.root.to_string()));
    }
    let mut members = a.members.clone();
    members.extend_from_slice(&b.members);
    let union = inessential(host, &members)?;
    debug_assert_eq!(union.root, a.root);
    Ok(union)
}

/// Oracle form of the fast check, for subtrees of infinite hosts.
pub fn is_inessential_in<O: TreeOracle>(oracle: &O, members: &[O::Vertex]) -> Result<bool> {
    Ok(oracle_root(oracle, members)?.is_some())
}

fn oracle_root<O: TreeOracle>(oracle: &O, members: &[O::Vertex]) -> Result<Option<O::Vertex>> {
    if members.is_empty() {
        return Err(Error::EmptySelection);
    }
    let set: HashSet<&O::Vertex> = members.iter().collect();
    if set.len() < 2 {
        return Err(Error::NoEdge);
    }
    let mut seen: HashSet<&O::Vertex> = HashSet::from([&members[0]]);
    let mut stack = vec![members[0].clone()];
    while let Some(u) = stack.pop() {
        for w in oracle.neighbors(&u) {
            if let Some(&m) = set.get(&w) {
                if seen.insert(m) {
                    stack.push(w);
                }
            }
        }
    }
    if seen.len() != set.len() {
        return Err(Error::NotConnected);
    }
    let exits = oracle_boundary(oracle, members);
    match exits.len() {
        0 => Err(Error::NoOutsideEdges),
        1 => Ok(exits.into_iter().next()),
        _ => Ok(None),
    }
}

pub fn inessential_in<O: TreeOracle>(
    oracle: &O,
    members: &[O::Vertex],
) -> Result<InessentialSubtree<O::Vertex>> {
    let root = oracle_root(oracle, members)?.ok_or(Error::NotInessential)?;
    let mut members = members.to_vec();
    members.sort();
    members.dedup();
    Ok(InessentialSubtree { root, members })
}

/// Outcome of [`max_inessential_at`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaxInessential<V> {
    Found(InessentialSubtree<V>),
    /// Every component of `T - r` is infinite.
    NoneFinite,
    /// Some components could not be decided within the budget.
    Incomplete { undecided: Vec<V> },
}

/// A neighbor `w` of a cut vertex, the component of `w` when it was
/// explored, and its size when known.
pub type HangingComponent<V> = (V, Option<Vec<V>>, Option<ComponentSize>);

/// Finiteness of each component of `T - r`, keyed by the neighbor of `r`
/// it contains. Uses the oracle's closed form when available and otherwise
/// explores at most `budget` vertices per component.
pub fn hanging_components<O: TreeOracle>(
    oracle: &O,
    r: &O::Vertex,
    budget: usize,
) -> Vec<HangingComponent<O::Vertex>> {
    oracle
        .neighbors(r)
        .into_iter()
        .map(|w| match oracle.hanging_component(r, &w) {
            Some(ComponentSize::Infinite) => (w, None, Some(ComponentSize::Infinite)),
            Some(ComponentSize::Finite(n)) => {
                let members = bounded_component(oracle, r, &w, n + 1)
                    .expect("closed-form component sizes are exact");
                (w, Some(members), Some(ComponentSize::Finite(n)))
            }
            None => match bounded_component(oracle, r, &w, budget) {
                Some(members) => {
                    let n = members.len();
                    (w, Some(members), Some(ComponentSize::Finite(n)))
                }
                None => (w, None, None),
            },
        })
        .collect()
}

/// The largest inessential subtree rooted at `r`: `r` together with every
/// finite component of `T - r`.
pub fn max_inessential_at<O: TreeOracle>(
    oracle: &O,
    r: &O::Vertex,
    budget: usize,
) -> Result<MaxInessential<O::Vertex>> {
    let degree = oracle.degree(r);
    if degree < 2 {
        return Err(Error::Precondition(format!(
            "the root of an inessential subtree has degree at least 2, {r} has degree {degree}"
        )));
    }
    let comps = hanging_components(oracle, r, budget);
    if comps.iter().all(|(_, m, _)| m.is_some()) {
        return Err(Error::FiniteHost);
    }
    let undecided: Vec<O::Vertex> = comps
        .iter()
        .filter(|(_, _, s)| s.is_none())
        .map(|(w, _, _)| w.clone())
        .collect();
    if !undecided.is_empty() {
        return Ok(MaxInessential::Incomplete { undecided });
    }
    let mut members = vec![r.clone()];
    for (_, m, _) in comps {
        if let Some(m) = m {
            members.extend(m);
        }
    }
    if members.len() == 1 {
        return Ok(MaxInessential::NoneFinite);
    }
    members.sort();
    Ok(MaxInessential::Found(InessentialSubtree {
        root: r.clone(),
        members,
    }))
}

/// Lifts an inessential subtree of `Θ(T)` to one of `T` that is strictly
/// larger, by adding every leaf of `T` hanging off a non-root member.
///
/// `sub` is given in the ids of `host`; `trimmed` is `Θ(T)` with its origin
/// map into `host`.
pub fn lift_inessential(
    host: &Patch,
    trimmed: &InducedTree,
    sub: &InessentialSubtree<VertexId>,
) -> Result<InessentialSubtree<VertexId>> {
    let mut in_trimmed = vec![false; host.vertex_count()];
    for &v in &trimmed.origin {
        in_trimmed[v] = true;
    }
    let mut members = sub.members.clone();
    for &m in &sub.members {
        if !in_trimmed[m] {
            return Err(Error::Precondition(format!(
                "vertex {m} is not part of the trimmed tree"
            )));
        }
        if m == sub.root {
            continue;
        }
        for &w in host.tree().neighbors(m) {
            if !in_trimmed[w] {
                members.push(w);
            }
        }
    }
    inessential(host, &members)
}

/// Searches both directions of "the patch has an inessential subtree iff
/// it has a leaf" and reports whether they agree. The patch must have at
/// least one exterior edge.
pub fn leaf_iff_inessential_check(host: &Patch) -> Result<bool> {
    if !host.has_exterior() {
        return Err(Error::Precondition("the host needs an exterior edge".into()));
    }
    let tree = host.tree();
    let mut has_leaf = false;
    let mut leaf_edge_ok = true;
    for v in tree.vertices() {
        let deg = host
            .host_degree(v)
            .ok_or_else(|| Error::IncompleteKnowledge(format!("degree of {v} is unknown")))?;
        if deg == 1 && host.hidden(v) == Some(0) {
            has_leaf = true;
            let w = tree.neighbors(v)[0];
            if !is_inessential(host, &[v, w])? {
                leaf_edge_ok = false;
            }
        }
    }
    let mut has_inessential = false;
    let allowed = vec![true; tree.vertex_count()];
    let mut failure = None;
    for_each_connected_subset(tree, &allowed, tree.vertex_count(), |s| {
        if has_inessential || s.len() < 2 || failure.is_some() {
            return;
        }
        match is_inessential(host, s) {
            Ok(true) => has_inessential = true,
            Ok(false) => {}
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(leaf_edge_ok && has_leaf == has_inessential)
}
