//! Finite pieces of possibly larger host trees, and vertex selections on them.

use std::cell::OnceCell;

use crate::error::{Error, Result};
use crate::ratio::Ratio;
use crate::tree::{Tree, VertexId};

/// A finite tree together with, for each vertex, the number of host edges
/// that leave the materialized part (`None` when that number is unknown).
///
/// A finite tree taken on its own is a patch with every count `Some(0)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Patch {
    tree: Tree,
    hidden: Vec<Option<usize>>,
}

impl Patch {
    pub fn closed(tree: Tree) -> Patch {
        let hidden = vec![Some(0); tree.vertex_count()];
        Patch { tree, hidden }
    }

    pub fn with_exterior(tree: Tree, hidden: Vec<Option<usize>>) -> Result<Patch> {
        if hidden.len() != tree.vertex_count() {
            return Err(Error::InvalidInput(format!(
                "{} exterior counts for {} vertices",
                hidden.len(),
                tree.vertex_count()
            )));
        }
        Ok(Patch { tree, hidden })
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn vertex_count(&self) -> usize {
        self.tree.vertex_count()
    }

    pub fn hidden(&self, v: VertexId) -> Option<usize> {
        self.hidden[v]
    }

    pub fn hidden_counts(&self) -> &[Option<usize>] {
        &self.hidden
    }

    /// Degree of `v` in the host, when known.
    pub fn host_degree(&self, v: VertexId) -> Option<usize> {
        self.hidden[v].map(|h| h + self.tree.neighbors(v).len())
    }

    /// True when every host neighbor of `v` is materialized.
    pub fn is_complete(&self, v: VertexId) -> bool {
        self.hidden[v] == Some(0)
    }

    /// True when the host has at least one vertex outside the patch
    /// (or might have, when some count is unknown).
    pub fn has_exterior(&self) -> bool {
        self.hidden.iter().any(|h| *h != Some(0))
    }

    pub fn select(&self, members: &[VertexId]) -> Result<Selection<'_>> {
        Selection::new(self, members)
    }
}

/// A nonempty vertex set of a patch with lazily cached connectivity and
/// boundary. The boundary follows the inner convention: members with at
/// least one host neighbor outside the set.
#[derive(Debug)]
pub struct Selection<'h> {
    host: &'h Patch,
    members: Vec<VertexId>,
    inside: Vec<bool>,
    connected: OnceCell<bool>,
    boundary: OnceCell<Result<Vec<VertexId>>>,
}

impl<'h> Selection<'h> {
    pub fn new(host: &'h Patch, members: &[VertexId]) -> Result<Selection<'h>> {
        if members.is_empty() {
            return Err(Error::EmptySelection);
        }
        let mut sorted = members.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut inside = vec![false; host.vertex_count()];
        for &m in &sorted {
            if m >= host.vertex_count() {
                return Err(Error::InvalidVertex(m));
            }
            inside[m] = true;
        }
        Ok(Selection {
            host,
            members: sorted,
            inside,
            connected: OnceCell::new(),
            boundary: OnceCell::new(),
        })
    }

    pub fn host(&self) -> &'h Patch {
        self.host
    }

    pub fn members(&self) -> &[VertexId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.inside.get(v).copied().unwrap_or(false)
    }

    pub fn is_connected(&self) -> bool {
        *self
            .connected
            .get_or_init(|| self.host.tree().is_connected_subset(&self.members))
    }

    pub fn boundary(&self) -> Result<&[VertexId]> {
        self.boundary
            .get_or_init(|| {
                let mut out = Vec::new();
                for &m in &self.members {
                    let hidden = self.host.hidden(m).ok_or_else(|| {
                        Error::IncompleteKnowledge(format!(
                            "the host degree of member {m} is unknown"
                        ))
                    })?;
                    let escapes = hidden > 0
                        || self
                            .host
                            .tree()
                            .neighbors(m)
                            .iter()
                            .any(|&w| !self.inside[w]);
                    if escapes {
                        out.push(m);
                    }
                }
                Ok(out)
            })
            .as_ref()
            .map(Vec::as_slice)
            .map_err(Clone::clone)
    }

    /// `|boundary| / |members|`.
    pub fn ratio(&self) -> Result<Ratio> {
        Ok(Ratio::from_counts(self.boundary()?.len(), self.len()))
    }
}

/// Brute-force inessentiality oracle: builds the subgraph spanned by the
/// host edges that are not edges of `sub` and tests it for connectivity.
/// Every hidden edge is modelled as an edge to its own phantom vertex,
/// which is exact because in a tree the part behind a hidden edge touches
/// the patch only through that edge.
pub fn edge_complement_is_connected(host: &Patch, sub: &[VertexId]) -> Result<bool> {
    let sel = host.select(sub)?;
    if !sel.is_connected() {
        return Err(Error::NotConnected);
    }
    if sel.len() < 2 {
        return Err(Error::NoEdge);
    }
    let tree = host.tree();
    let n = tree.vertex_count();
    let mut phantoms = 0usize;
    for v in tree.vertices() {
        match host.hidden(v) {
            Some(h) => phantoms += h,
            None => {
                return Err(Error::IncompleteKnowledge(format!(
                    "the host degree of vertex {v} is unknown"
                )))
            }
        }
    }
    let mut complement: Vec<(usize, usize)> = tree
        .edges()
        .into_iter()
        .filter(|&(u, v)| !(sel.contains(u) && sel.contains(v)))
        .collect();
    let mut next = n;
    for v in tree.vertices() {
        for _ in 0..host.hidden(v).unwrap_or(0) {
            complement.push((v, next));
            next += 1;
        }
    }
    if complement.is_empty() {
        return Err(Error::NoOutsideEdges);
    }
    let total = n + phantoms;
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut touched = vec![false; total];
    for &(u, v) in &complement {
        touched[u] = true;
        touched[v] = true;
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
        }
    }
    let mut roots = (0..total)
        .filter(|&x| touched[x])
        .map(|x| find(&mut parent, x))
        .collect::<Vec<_>>();
    roots.sort_unstable();
    roots.dedup();
    Ok(roots.len() == 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_examples() {
        let p5 = Patch::closed(Tree::path(5));
        assert!(p5.select(&[0, 1, 2, 3, 4]).unwrap().boundary().unwrap().is_empty());
        assert_eq!(p5.select(&[2]).unwrap().boundary().unwrap(), &[2]);
        assert_eq!(p5.select(&[1, 2, 3]).unwrap().boundary().unwrap(), &[1, 3]);
        assert_eq!(p5.select(&[]).unwrap_err(), Error::EmptySelection);
    }

    #[test]
    fn hidden_edges_count_as_outside() {
        let p = Patch::with_exterior(Tree::path(3), vec![Some(1), Some(0), Some(0)]).unwrap();
        let all = p.select(&[0, 1, 2]).unwrap();
        assert_eq!(all.boundary().unwrap(), &[0]);
        assert_eq!(all.ratio().unwrap(), Ratio::new(1, 3));
        let q = Patch::with_exterior(Tree::path(2), vec![None, Some(0)]).unwrap();
        assert!(matches!(
            q.select(&[0]).unwrap().boundary(),
            Err(Error::IncompleteKnowledge(_))
        ));
        assert_eq!(q.select(&[1]).unwrap().boundary().unwrap(), &[1]);
    }

    #[test]
    fn complement_examples() {
        let p4 = Patch::closed(Tree::path(4));
        assert!(edge_complement_is_connected(&p4, &[0, 1]).unwrap());
        assert!(!edge_complement_is_connected(&p4, &[1, 2]).unwrap());
        assert_eq!(edge_complement_is_connected(&p4, &[1]), Err(Error::NoEdge));
        assert_eq!(
            edge_complement_is_connected(&p4, &[0, 1, 2, 3]),
            Err(Error::NoOutsideEdges)
        );
        // an interior edge of a line whose two ends continue outside
        let line = Patch::with_exterior(Tree::path(2), vec![Some(1), Some(1)]).unwrap();
        assert!(!edge_complement_is_connected(&line, &[0, 1]).unwrap());
    }
}
