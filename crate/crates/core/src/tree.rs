//! Finite trees over dense vertex ids.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, TreeViolation};

pub type VertexId = usize;

/// A finite tree with sorted adjacency lists and an optional root.
///
/// Construction always validates the tree shape: symmetric adjacency, no
/// self-loops or repeated edges, `n - 1` edges, connected.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tree {
    adj: Vec<Vec<VertexId>>,
    root: Option<VertexId>,
}

/// A tree obtained from a parent tree by keeping a subset of its vertices.
/// `origin[i]` is the parent-tree id of vertex `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InducedTree {
    pub tree: Tree,
    pub origin: Vec<VertexId>,
}

/// Result of an operation that may remove every vertex.
///
/// `Null` is the tree with no vertices at all. It is distinct from the
/// one-vertex tree, which is a perfectly good (edgeless) tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Trimmed {
    Null,
    Tree(InducedTree),
}

impl Trimmed {
    pub fn vertex_count(&self) -> usize {
        match self {
            Trimmed::Null => 0,
            Trimmed::Tree(t) => t.tree.vertex_count(),
        }
    }

    pub fn as_tree(&self) -> Option<&InducedTree> {
        match self {
            Trimmed::Null => None,
            Trimmed::Tree(t) => Some(t),
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Trimmed::Null)
    }
}

impl Tree {
    /// The one-vertex tree.
    pub fn single() -> Tree {
        Tree {
            adj: vec![Vec::new()],
            root: None,
        }
    }

    pub fn from_edges(n: usize, edges: &[(VertexId, VertexId)]) -> Result<Tree> {
        if n == 0 {
            return Err(Error::NotATree(TreeViolation::Empty));
        }
        let mut adj = vec![Vec::new(); n];
        let mut dsu = Dsu::new(n);
        for &(u, v) in edges {
            if u >= n {
                return Err(Error::InvalidVertex(u));
            }
            if v >= n {
                return Err(Error::InvalidVertex(v));
            }
            if u == v {
                return Err(Error::NotATree(TreeViolation::SelfLoop(u)));
            }
            if adj[u].contains(&v) {
                return Err(Error::NotATree(TreeViolation::DuplicateEdge(u, v)));
            }
            if !dsu.union(u, v) {
                return Err(Error::NotATree(TreeViolation::Cycle(u, v)));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        if edges.len() + 1 != n {
            return Err(Error::NotATree(TreeViolation::Disconnected));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Tree { adj, root: None })
    }

    /// Path with `n >= 1` vertices `0 - 1 - ... - n-1`.
    pub fn path(n: usize) -> Tree {
        assert!(n >= 1, "a path needs at least one vertex");
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Tree::from_edges(n, &edges).expect("paths are trees")
    }

    /// Star with center `0` and `leaves` outer vertices.
    pub fn star(leaves: usize) -> Tree {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Tree::from_edges(leaves + 1, &edges).expect("stars are trees")
    }

    /// Rooted tree from a parent array (`parent[root] == None`).
    pub fn from_parents(parent: &[Option<VertexId>]) -> Result<Tree> {
        let root = parent
            .iter()
            .position(Option::is_none)
            .ok_or(Error::NotATree(TreeViolation::Cycle(0, 0)))?;
        let edges: Vec<_> = parent
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|p| (p, v)))
            .collect();
        Tree::from_edges(parent.len(), &edges)?.with_root(root)
    }

    pub fn with_root(mut self, root: VertexId) -> Result<Tree> {
        self.check(root)?;
        self.root = Some(root);
        Ok(self)
    }

    pub fn unrooted(mut self) -> Tree {
        self.root = None;
        self
    }

    pub fn root(&self) -> Option<VertexId> {
        self.root
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.len() - 1
    }

    pub fn vertices(&self) -> std::ops::Range<VertexId> {
        0..self.adj.len()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v < self.adj.len()
    }

    fn check(&self, v: VertexId) -> Result<()> {
        if v < self.adj.len() {
            Ok(())
        } else {
            Err(Error::InvalidVertex(v))
        }
    }

    /// Sorted neighbors of `v`. Panics on an out-of-range id.
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adj[v]
    }

    pub fn degree(&self, v: VertexId) -> Result<usize> {
        self.check(v)?;
        Ok(self.adj[v].len())
    }

    /// Vertices of degree exactly 1.
    pub fn leaves(&self) -> Vec<VertexId> {
        self.vertices().filter(|&v| self.adj[v].len() == 1).collect()
    }

    /// Vertices of degree at least 3.
    pub fn branches(&self) -> Vec<VertexId> {
        self.vertices().filter(|&v| self.adj[v].len() >= 3).collect()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in self.vertices() {
            for &v in &self.adj[u] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// BFS distances from `source`.
    pub fn distances_from(&self, source: VertexId) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.vertex_count()];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &w in &self.adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// BFS order from `root` together with the parent of every vertex.
    pub fn bfs_parents(&self, root: VertexId) -> (Vec<VertexId>, Vec<Option<VertexId>>) {
        let mut parent = vec![None; self.vertex_count()];
        let mut seen = vec![false; self.vertex_count()];
        let mut order = Vec::with_capacity(self.vertex_count());
        seen[root] = true;
        order.push(root);
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &w in &self.adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(u);
                    order.push(w);
                }
            }
        }
        (order, parent)
    }

    pub fn eccentricity(&self, v: VertexId) -> usize {
        self.distances_from(v).into_iter().max().unwrap_or(0)
    }

    pub fn diameter(&self) -> usize {
        let d0 = self.distances_from(0);
        let far = argmax(&d0);
        self.eccentricity(far)
    }

    /// True iff the induced subgraph on `members` is connected.
    /// An empty member list is reported as not connected.
    pub fn is_connected_subset(&self, members: &[VertexId]) -> bool {
        let Some(&start) = members.first() else {
            return false;
        };
        let mut inside = vec![false; self.vertex_count()];
        for &m in members {
            if m >= self.vertex_count() {
                return false;
            }
            inside[m] = true;
        }
        let target = inside.iter().filter(|&&b| b).count();
        let mut seen = vec![false; self.vertex_count()];
        seen[start] = true;
        let mut stack = vec![start];
        let mut reached = 1;
        while let Some(u) = stack.pop() {
            for &w in &self.adj[u] {
                if inside[w] && !seen[w] {
                    seen[w] = true;
                    reached += 1;
                    stack.push(w);
                }
            }
        }
        reached == target
    }

    /// Induced subtree on `members`, relabeled densely in increasing
    /// parent-id order. The root is carried over when it survives.
    pub fn induced_subtree(&self, members: &[VertexId]) -> Result<InducedTree> {
        if members.is_empty() {
            return Err(Error::EmptySelection);
        }
        for &m in members {
            self.check(m)?;
        }
        let mut origin: Vec<VertexId> = members.to_vec();
        origin.sort_unstable();
        origin.dedup();
        if !self.is_connected_subset(&origin) {
            return Err(Error::NotATree(TreeViolation::Disconnected));
        }
        let mut new_id = vec![usize::MAX; self.vertex_count()];
        for (i, &v) in origin.iter().enumerate() {
            new_id[v] = i;
        }
        let adj = origin
            .iter()
            .map(|&v| {
                self.adj[v]
                    .iter()
                    .filter(|&&w| new_id[w] != usize::MAX)
                    .map(|&w| new_id[w])
                    .collect()
            })
            .collect();
        let root = self.root.and_then(|r| (new_id[r] != usize::MAX).then_some(new_id[r]));
        Ok(InducedTree {
            tree: Tree { adj, root },
            origin,
        })
    }

    /// Relabel by a permutation: vertex `v` becomes `perm[v]`.
    pub fn relabel(&self, perm: &[VertexId]) -> Tree {
        let n = self.vertex_count();
        assert_eq!(perm.len(), n);
        let mut adj = vec![Vec::new(); n];
        for v in 0..n {
            let mut list: Vec<_> = self.adj[v].iter().map(|&w| perm[w]).collect();
            list.sort_unstable();
            adj[perm[v]] = list;
        }
        Tree {
            adj,
            root: self.root.map(|r| perm[r]),
        }
    }
}

pub(crate) fn argmax(values: &[usize]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Parse the edge-list format: one `u v` pair per line, an optional
/// `root <id>` line, `#` comments. A line holding a single id declares a
/// vertex, which is how the one-vertex tree is written.
pub fn parse_edge_list(text: &str) -> Result<Tree> {
    let mut edges = Vec::new();
    let mut max_id: Option<usize> = None;
    let mut root = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse_id = |s: &str| -> Result<usize> {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("`{s}` is not a non-negative integer id"),
            })
        };
        match fields.as_slice() {
            ["root", id] => {
                if root.is_some() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "duplicate root line".into(),
                    });
                }
                let r = parse_id(id)?;
                root = Some(r);
                max_id = max_id.max(Some(r));
            }
            [id] => {
                let v = parse_id(id)?;
                max_id = max_id.max(Some(v));
            }
            [a, b] => {
                let (u, v) = (parse_id(a)?, parse_id(b)?);
                max_id = max_id.max(Some(u.max(v)));
                edges.push((u, v));
            }
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected `u v`, `v` or `root v`, got `{line}`"),
                })
            }
        }
    }
    let n = max_id.map_or(0, |m| m + 1);
    let tree = Tree::from_edges(n, &edges)?;
    match root {
        Some(r) => tree.with_root(r),
        None => Ok(tree),
    }
}

pub fn to_edge_list(tree: &Tree) -> String {
    let mut out = String::new();
    if let Some(r) = tree.root() {
        writeln!(out, "root {r}").unwrap();
    }
    if tree.vertex_count() == 1 {
        out.push_str("0\n");
    }
    for (u, v) in tree.edges() {
        writeln!(out, "{u} {v}").unwrap();
    }
    out
}

#[derive(Serialize, Deserialize)]
struct ChildList {
    root: VertexId,
    children: BTreeMap<VertexId, Vec<VertexId>>,
}

/// Parse `{"root": id, "children": {"id": [ids]}}`.
pub fn parse_child_list(json: &str) -> Result<Tree> {
    let doc: ChildList = serde_json::from_str(json)?;
    let mut max_id = doc.root;
    let mut edges = Vec::new();
    for (&p, kids) in &doc.children {
        max_id = max_id.max(p);
        for &c in kids {
            max_id = max_id.max(c);
            edges.push((p, c));
        }
    }
    let tree = Tree::from_edges(max_id + 1, &edges)?;
    // every child must hang below its listed parent when walked from the root
    let (_, parent) = tree.bfs_parents(doc.root);
    for (&p, kids) in &doc.children {
        for &c in kids {
            if parent[c] != Some(p) {
                return Err(Error::InvalidInput(format!(
                    "vertex {c} is listed as a child of {p} but lies above it relative to root {}",
                    doc.root
                )));
            }
        }
    }
    tree.with_root(doc.root)
}

/// Child-list JSON for a rooted tree; unrooted trees are rooted at 0.
pub fn to_child_list(tree: &Tree) -> String {
    let root = tree.root().unwrap_or(0);
    let (order, parent) = tree.bfs_parents(root);
    let mut children: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for &v in &order {
        if let Some(p) = parent[v] {
            children.entry(p).or_default().push(v);
        }
    }
    for kids in children.values_mut() {
        kids.sort_unstable();
    }
    serde_json::to_string(&ChildList { root, children }).expect("child lists serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p5() -> Tree {
        Tree::path(5)
    }

    #[test]
    fn degree_examples() {
        assert_eq!(Tree::path(3).degree(1).unwrap(), 2);
        assert_eq!(Tree::single().degree(0).unwrap(), 0);
        assert_eq!(Tree::star(3).degree(0).unwrap(), 3);
        assert_eq!(Tree::path(3).degree(3), Err(Error::InvalidVertex(3)));
    }

    #[test]
    fn leaves_and_branches() {
        assert_eq!(p5().leaves(), vec![0, 4]);
        assert!(Tree::single().leaves().is_empty());
        assert_eq!(Tree::star(3).leaves(), vec![1, 2, 3]);
        assert!(p5().branches().is_empty());
        assert_eq!(Tree::star(3).branches(), vec![0]);
    }

    #[test]
    fn connected_subsets() {
        let t = p5();
        assert!(!t.is_connected_subset(&[0, 4]));
        assert!(t.is_connected_subset(&[2]));
        assert!(t.is_connected_subset(&[0, 1, 2, 3, 4]));
    }

    #[test]
    fn induced_subtrees() {
        let inner = p5().induced_subtree(&[1, 2, 3]).unwrap();
        assert_eq!(inner.tree, Tree::path(3));
        assert_eq!(inner.origin, vec![1, 2, 3]);
        let s = Tree::star(3).induced_subtree(&[0, 1, 2]).unwrap();
        assert_eq!(s.tree.leaves().len(), 2);
        assert_eq!(s.tree.vertex_count(), 3);
        assert_eq!(
            p5().induced_subtree(&[0, 4]),
            Err(Error::NotATree(TreeViolation::Disconnected))
        );
    }

    #[test]
    fn parse_examples() {
        assert_eq!(parse_edge_list("0 1\n1 2").unwrap(), Tree::path(3));
        assert_eq!(
            parse_edge_list("0 1\n2 3"),
            Err(Error::NotATree(TreeViolation::Disconnected))
        );
        assert!(matches!(
            parse_edge_list("0 1\n1 2\n2 0"),
            Err(Error::NotATree(TreeViolation::Cycle(_, _)))
        ));
        assert!(matches!(
            parse_edge_list("0 0"),
            Err(Error::NotATree(TreeViolation::SelfLoop(0)))
        ));
        assert!(matches!(
            parse_edge_list("0 x"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert_eq!(parse_edge_list("0\n").unwrap(), Tree::single());
        assert_eq!(
            parse_edge_list("").unwrap_err(),
            Error::NotATree(TreeViolation::Empty)
        );
    }

    #[test]
    fn edge_list_round_trip_keeps_root() {
        let t = Tree::star(4).with_root(2).unwrap();
        let back = parse_edge_list(&to_edge_list(&t)).unwrap();
        assert_eq!(back, t);
        assert_eq!(parse_edge_list(&to_edge_list(&Tree::single())).unwrap(), Tree::single());
    }

    #[test]
    fn child_list_round_trip() {
        let t = Tree::from_edges(5, &[(0, 1), (0, 2), (2, 3), (2, 4)])
            .unwrap()
            .with_root(0)
            .unwrap();
        let json = to_child_list(&t);
        assert_eq!(json, r#"{"root":0,"children":{"0":[1,2],"2":[3,4]}}"#);
        assert_eq!(parse_child_list(&json).unwrap(), t);
        assert!(parse_child_list(r#"{"root":0,"children":{"1":[0]}}"#).is_err());
    }

    #[test]
    fn relabel_preserves_shape() {
        let t = p5();
        let r = t.relabel(&[4, 3, 2, 1, 0]);
        assert_eq!(r, t);
        let r = t.relabel(&[2, 0, 4, 1, 3]);
        assert_eq!(r.leaves(), vec![2, 3]);
    }

    #[test]
    fn diameter_of_star_and_path() {
        assert_eq!(Tree::star(5).diameter(), 2);
        assert_eq!(p5().diameter(), 4);
        assert_eq!(Tree::single().diameter(), 0);
    }
}
