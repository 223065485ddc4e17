//! Lazily generated, locally finite trees and bounded exploration.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::{Debug, Display};
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::patch::Patch;
use crate::ratio::Ratio;
use crate::tree::{Tree, VertexId};

/// Size of a component of `T - cut` as answered by a closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComponentSize {
    Finite(usize),
    Infinite,
}

/// A locally finite tree exposed through a deterministic neighbor query.
pub trait TreeOracle: Sync {
    type Vertex: Clone + Eq + Hash + Ord + Debug + Display + Send + Sync;

    fn root(&self) -> Self::Vertex;

    /// Neighbors of `v`, in a fixed order.
    fn neighbors(&self, v: &Self::Vertex) -> Vec<Self::Vertex>;

    fn degree(&self, v: &Self::Vertex) -> usize {
        self.neighbors(v).len()
    }

    /// Optional closed-form answer for the component of `T - cut` that
    /// contains the neighbor `start` of `cut`.
    fn hanging_component(&self, _cut: &Self::Vertex, _start: &Self::Vertex) -> Option<ComponentSize> {
        None
    }

    /// `Some(true)` for hosts known to be finite, `Some(false)` for hosts
    /// known to be infinite.
    fn is_finite(&self) -> Option<bool> {
        None
    }
}

impl TreeOracle for Tree {
    type Vertex = VertexId;

    fn root(&self) -> VertexId {
        Tree::root(self).unwrap_or(0)
    }

    fn neighbors(&self, v: &VertexId) -> Vec<VertexId> {
        Tree::neighbors(self, *v).to_vec()
    }

    fn degree(&self, v: &VertexId) -> usize {
        Tree::neighbors(self, *v).len()
    }

    fn hanging_component(&self, cut: &VertexId, start: &VertexId) -> Option<ComponentSize> {
        if !Tree::neighbors(self, *cut).contains(start) {
            return None;
        }
        let mut seen = HashSet::from([*cut, *start]);
        let mut stack = vec![*start];
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &w in Tree::neighbors(self, u) {
                if seen.insert(w) {
                    count += 1;
                    stack.push(w);
                }
            }
        }
        Some(ComponentSize::Finite(count))
    }

    fn is_finite(&self) -> Option<bool> {
        Some(true)
    }
}

/// The ball of a given radius around a center, materialized as a patch.
/// Local id 0 is the center and ids follow BFS order. Frontier vertices
/// (at distance exactly `radius`) carry their exact number of outside
/// neighbors, so every ball vertex has a known host degree.
#[derive(Clone, Debug)]
pub struct Ball<V> {
    pub center: V,
    pub radius: usize,
    pub patch: Patch,
    pub handles: Vec<V>,
    pub index: HashMap<V, VertexId>,
    pub dist: Vec<usize>,
}

impl Ball<VertexId> {
    /// Views a patch as the ball around `center` that reaches its farthest
    /// vertex; handles are the patch ids.
    pub fn from_patch(patch: Patch, center: VertexId) -> Ball<VertexId> {
        let dist = patch.tree().distances_from(center);
        let radius = dist.iter().copied().max().unwrap_or(0);
        let n = patch.vertex_count();
        Ball {
            center,
            radius,
            patch,
            handles: (0..n).collect(),
            index: (0..n).map(|i| (i, i)).collect(),
            dist,
        }
    }
}

impl<V: Clone + Eq + Hash> Ball<V> {
    pub fn local(&self, v: &V) -> Option<VertexId> {
        self.index.get(v).copied()
    }

    pub fn handle(&self, id: VertexId) -> &V {
        &self.handles[id]
    }

    pub fn frontier(&self) -> Vec<VertexId> {
        (0..self.handles.len())
            .filter(|&i| self.dist[i] == self.radius)
            .collect()
    }

    pub fn tree(&self) -> &Tree {
        self.patch.tree()
    }

    pub fn handles_of(&self, ids: &[VertexId]) -> Vec<V> {
        ids.iter().map(|&i| self.handles[i].clone()).collect()
    }
}

struct Layers<V> {
    handles: Vec<V>,
    parent: Vec<Option<VertexId>>,
    dist: Vec<usize>,
    index: HashMap<V, VertexId>,
}

fn grow<O: TreeOracle>(
    oracle: &O,
    center: &O::Vertex,
    max_radius: usize,
    max_vertices: usize,
    strict: bool,
) -> Result<(Layers<O::Vertex>, usize, bool)> {
    if max_vertices == 0 {
        return Err(Error::BudgetExhausted("a ball needs at least one vertex".into()));
    }
    let mut layers = Layers {
        handles: vec![center.clone()],
        parent: vec![None],
        dist: vec![0],
        index: HashMap::from([(center.clone(), 0)]),
    };
    let mut current: Vec<VertexId> = vec![0];
    let mut radius = 0;
    let mut whole_host = false;
    while radius < max_radius {
        let mut next: Vec<(O::Vertex, VertexId)> = Vec::new();
        for &u in &current {
            for w in oracle.neighbors(&layers.handles[u]) {
                if layers.parent[u].map(|p| layers.handles[p] == w) == Some(true) {
                    continue;
                }
                next.push((w, u));
            }
        }
        if next.is_empty() {
            whole_host = true;
            break;
        }
        if layers.handles.len() + next.len() > max_vertices {
            if strict {
                return Err(Error::BudgetExhausted(format!(
                    "the ball of radius {} has more than {max_vertices} vertices",
                    radius + 1
                )));
            }
            break;
        }
        radius += 1;
        current.clear();
        for (w, p) in next {
            let id = layers.handles.len();
            layers.index.insert(w.clone(), id);
            layers.handles.push(w);
            layers.parent.push(Some(p));
            layers.dist.push(radius);
            current.push(id);
        }
    }
    Ok((layers, radius, whole_host))
}

fn assemble<O: TreeOracle>(
    oracle: &O,
    center: O::Vertex,
    layers: Layers<O::Vertex>,
    reached: usize,
    whole_host: bool,
    radius: usize,
) -> Ball<O::Vertex> {
    let tree = Tree::from_parents(&layers.parent).expect("a BFS tree is a tree");
    let hidden = (0..layers.handles.len())
        .map(|i| {
            if whole_host || layers.dist[i] < reached {
                Some(0)
            } else {
                Some(oracle.degree(&layers.handles[i]) - tree.neighbors(i).len())
            }
        })
        .collect();
    Ball {
        center,
        radius,
        patch: Patch::with_exterior(tree, hidden).expect("one count per vertex"),
        handles: layers.handles,
        index: layers.index,
        dist: layers.dist,
    }
}

/// Exact ball of radius `radius`; fails when it would exceed `max_vertices`.
pub fn explore_ball<O: TreeOracle>(
    oracle: &O,
    center: &O::Vertex,
    radius: usize,
    max_vertices: usize,
) -> Result<Ball<O::Vertex>> {
    let (layers, reached, whole) = grow(oracle, center, radius, max_vertices, true)?;
    Ok(assemble(oracle, center.clone(), layers, reached, whole, radius))
}

/// The largest ball of radius at most `max_radius` that fits in
/// `max_vertices`. A host that runs out of vertices first yields the whole
/// host with radius `max_radius`.
pub fn explore_ball_capped<O: TreeOracle>(
    oracle: &O,
    center: &O::Vertex,
    max_radius: usize,
    max_vertices: usize,
) -> Result<Ball<O::Vertex>> {
    let (layers, reached, whole) = grow(oracle, center, max_radius, max_vertices, false)?;
    let radius = if whole { max_radius } else { reached };
    Ok(assemble(oracle, center.clone(), layers, reached, whole, radius))
}

/// Members of `members` with a host neighbor outside the set.
pub fn oracle_boundary<O: TreeOracle>(oracle: &O, members: &[O::Vertex]) -> Vec<O::Vertex> {
    let set: HashSet<&O::Vertex> = members.iter().collect();
    let mut out: Vec<O::Vertex> = members
        .iter()
        .filter(|m| oracle.neighbors(m).iter().any(|w| !set.contains(w)))
        .cloned()
        .collect();
    out.sort();
    out.dedup();
    out
}

pub fn oracle_ratio<O: TreeOracle>(oracle: &O, members: &[O::Vertex]) -> Result<Ratio> {
    if members.is_empty() {
        return Err(Error::EmptySelection);
    }
    let distinct: HashSet<&O::Vertex> = members.iter().collect();
    Ok(Ratio::from_counts(oracle_boundary(oracle, members).len(), distinct.len()))
}

/// BFS over the component of `T - cut` containing `start`, giving up once
/// more than `budget` vertices have been seen. `Ok(None)` means undecided.
pub fn bounded_component<O: TreeOracle>(
    oracle: &O,
    cut: &O::Vertex,
    start: &O::Vertex,
    budget: usize,
) -> Option<Vec<O::Vertex>> {
    let mut seen: HashSet<O::Vertex> = HashSet::from([cut.clone(), start.clone()]);
    let mut out = vec![start.clone()];
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(u) = queue.pop_front() {
        for w in oracle.neighbors(&u) {
            if seen.insert(w.clone()) {
                if out.len() >= budget {
                    return None;
                }
                out.push(w.clone());
                queue.push_back(w);
            }
        }
    }
    out.sort();
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_of_a_path() {
        let p = Tree::path(7);
        let b = explore_ball(&p, &3, 2, 100).unwrap();
        assert_eq!(b.handles.len(), 5);
        assert_eq!(b.frontier().len(), 2);
        for f in b.frontier() {
            assert_eq!(b.patch.hidden(f), Some(1));
        }
        assert_eq!(b.patch.hidden(0), Some(0));
        assert!(explore_ball(&p, &3, 3, 6).is_err());
    }

    #[test]
    fn capped_ball_stops_before_budget() {
        let p = Tree::path(50);
        let b = explore_ball_capped(&p, &25, 40, 9).unwrap();
        assert_eq!(b.radius, 4);
        assert_eq!(b.handles.len(), 9);
        let whole = explore_ball_capped(&Tree::path(3), &0, 10, 100).unwrap();
        assert_eq!(whole.radius, 10);
        assert!(!whole.patch.has_exterior());
    }

    #[test]
    fn components_of_finite_trees() {
        let s = Tree::star(3);
        assert_eq!(s.hanging_component(&0, &2), Some(ComponentSize::Finite(1)));
        assert_eq!(s.hanging_component(&1, &0), Some(ComponentSize::Finite(3)));
        assert_eq!(bounded_component(&s, &1, &0, 10), Some(vec![0, 2, 3]));
        assert_eq!(bounded_component(&s, &1, &0, 2), None);
    }
}
