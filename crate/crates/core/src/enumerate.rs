//! Exhaustive enumeration of connected vertex subsets of a patch.
//!
//! Each subset is produced exactly once from its smallest vertex id by
//! extension-set growth. On a tree the exclusive neighborhood of a newly
//! added vertex is simply its neighbors outside the current subset.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::patch::Patch;
use crate::ratio::Ratio;
use crate::tree::{Tree, VertexId};

/// Default cap on the number of subsets an exact search may visit.
pub const DEFAULT_GUARD: u128 = 10_000_000;

/// Number of connected subsets of size `1..=max_size` inside the forest
/// induced on the `allowed` vertices.
pub fn count_connected_subsets(tree: &Tree, allowed: &[bool], max_size: usize) -> u128 {
    if max_size == 0 {
        return 0;
    }
    let n = tree.vertex_count();
    let mut seen = vec![false; n];
    let mut total: u128 = 0;
    // f[v][s]: connected subsets of size s whose top vertex is v
    let mut f: Vec<Vec<u128>> = vec![Vec::new(); n];
    for start in 0..n {
        if !allowed[start] || seen[start] {
            continue;
        }
        let mut order = vec![start];
        let mut parent = vec![usize::MAX; 0];
        parent.resize(n, usize::MAX);
        seen[start] = true;
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &w in tree.neighbors(u) {
                if allowed[w] && !seen[w] {
                    seen[w] = true;
                    parent[w] = u;
                    order.push(w);
                }
            }
        }
        for &v in order.iter().rev() {
            let mut poly = vec![0u128; max_size + 1];
            poly[1] = 1;
            for &c in tree.neighbors(v) {
                if parent[c] != v || !allowed[c] {
                    continue;
                }
                let child = std::mem::take(&mut f[c]);
                let mut next = poly.clone();
                for (a, &pa) in poly.iter().enumerate().skip(1) {
                    if pa == 0 {
                        continue;
                    }
                    for (b, &cb) in child.iter().enumerate().skip(1) {
                        if a + b > max_size {
                            break;
                        }
                        next[a + b] = next[a + b].saturating_add(pa.saturating_mul(cb));
                    }
                }
                poly = next;
            }
            total = poly.iter().fold(total, |acc, &x| acc.saturating_add(x));
            f[v] = poly;
        }
    }
    total
}

/// Calls `visit` on every connected subset of size `1..=max_size` of the
/// allowed vertices, in a deterministic order.
pub fn for_each_connected_subset<F: FnMut(&[VertexId])>(
    tree: &Tree,
    allowed: &[bool],
    max_size: usize,
    mut visit: F,
) {
    if max_size == 0 {
        return;
    }
    let mut in_sub = vec![false; tree.vertex_count()];
    for anchor in tree.vertices() {
        if !allowed[anchor] {
            continue;
        }
        let mut sub = vec![anchor];
        in_sub[anchor] = true;
        let ext = exclusive(tree, allowed, &in_sub, anchor, anchor, Vec::new());
        grow(tree, allowed, max_size, anchor, &mut sub, &mut in_sub, ext, &mut visit);
        in_sub[anchor] = false;
    }
}

fn exclusive(
    tree: &Tree,
    allowed: &[bool],
    in_sub: &[bool],
    anchor: VertexId,
    w: VertexId,
    mut ext: Vec<VertexId>,
) -> Vec<VertexId> {
    for &u in tree.neighbors(w) {
        if u > anchor && allowed[u] && !in_sub[u] {
            ext.push(u);
        }
    }
    ext
}

#[allow(clippy::too_many_arguments)]
fn grow<F: FnMut(&[VertexId])>(
    tree: &Tree,
    allowed: &[bool],
    max_size: usize,
    anchor: VertexId,
    sub: &mut Vec<VertexId>,
    in_sub: &mut Vec<bool>,
    mut ext: Vec<VertexId>,
    visit: &mut F,
) {
    visit(sub);
    if sub.len() == max_size {
        return;
    }
    while let Some(w) = ext.pop() {
        let next = exclusive(tree, allowed, in_sub, anchor, w, ext.clone());
        sub.push(w);
        in_sub[w] = true;
        grow(tree, allowed, max_size, anchor, sub, in_sub, next, visit);
        in_sub[w] = false;
        sub.pop();
    }
}

/// Best subset found by [`min_ratio_connected`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetMinimum {
    pub members: Vec<VertexId>,
    pub boundary: usize,
    pub ratio: Ratio,
    pub examined: u128,
}

fn better(a: (Ratio, &[VertexId]), b: (Ratio, &[VertexId])) -> bool {
    (a.0, a.1.len(), a.1) < (b.0, b.1.len(), b.1)
}

/// Minimum of `|boundary| / |A|` over connected subsets `A` of the allowed
/// vertices with `|A| <= max_size`. Allowed vertices must have a known host
/// degree. Ties go to the smaller set, then to the lexicographically
/// smaller sorted member list, so the answer does not depend on scheduling.
pub fn min_ratio_connected(
    patch: &Patch,
    allowed: &[bool],
    max_size: usize,
    guard: u128,
) -> Result<Option<SubsetMinimum>> {
    let tree = patch.tree();
    let n = tree.vertex_count();
    if allowed.len() != n {
        return Err(Error::InvalidInput("allowed mask has the wrong length".into()));
    }
    let mut degree = vec![0usize; n];
    for v in 0..n {
        if allowed[v] {
            degree[v] = patch.host_degree(v).ok_or_else(|| {
                Error::IncompleteKnowledge(format!("vertex {v} has an unknown host degree"))
            })?;
        }
    }
    let estimate = count_connected_subsets(tree, allowed, max_size);
    if estimate > guard {
        return Err(Error::SearchTooLarge {
            estimate,
            limit: guard,
        });
    }
    let anchors: Vec<VertexId> = (0..n).filter(|&v| allowed[v]).collect();
    let best = anchors
        .par_iter()
        .map_init(
            || (vec![false; n], vec![0usize; n]),
            |(in_sub, outside), &anchor| {
                search_anchor(tree, allowed, &degree, max_size, anchor, in_sub, outside)
            },
        )
        .reduce(
            || None,
            |a: Option<(Ratio, Vec<VertexId>, usize)>, b| match (a, b) {
                (None, x) | (x, None) => x,
                (Some(a), Some(b)) => {
                    if better((b.0, &b.1), (a.0, &a.1)) {
                        Some(b)
                    } else {
                        Some(a)
                    }
                }
            },
        );
    Ok(best.map(|(ratio, members, boundary)| SubsetMinimum {
        members,
        boundary,
        ratio,
        examined: estimate,
    }))
}

type Best = Option<(Ratio, Vec<VertexId>, usize)>;

struct AnchorSearch<'a> {
    tree: &'a Tree,
    allowed: &'a [bool],
    degree: &'a [usize],
    max_size: usize,
    anchor: VertexId,
    in_sub: &'a mut Vec<bool>,
    // host neighbors of each member that are not members
    outside: &'a mut Vec<usize>,
    boundary: usize,
    sub: Vec<VertexId>,
    best: Best,
}

impl AnchorSearch<'_> {
    fn record(&mut self) {
        let ratio = Ratio::from_counts(self.boundary, self.sub.len());
        if let Some((r, m, _)) = &self.best {
            let key = (ratio, self.sub.len());
            let current = (*r, m.len());
            if key > current {
                return;
            }
            if key == current {
                let mut sorted = self.sub.clone();
                sorted.sort_unstable();
                if sorted < *m {
                    self.best = Some((ratio, sorted, self.boundary));
                }
                return;
            }
        }
        let mut sorted = self.sub.clone();
        sorted.sort_unstable();
        self.best = Some((ratio, sorted, self.boundary));
    }

    fn add(&mut self, w: VertexId) -> VertexId {
        let p = *self
            .tree
            .neighbors(w)
            .iter()
            .find(|&&x| self.in_sub[x])
            .expect("an extension vertex touches the subset");
        self.sub.push(w);
        self.in_sub[w] = true;
        self.outside[w] = self.degree[w] - 1;
        if self.outside[w] > 0 {
            self.boundary += 1;
        }
        self.outside[p] -= 1;
        if self.outside[p] == 0 {
            self.boundary -= 1;
        }
        p
    }

    fn remove(&mut self, w: VertexId, p: VertexId) {
        if self.outside[p] == 0 {
            self.boundary += 1;
        }
        self.outside[p] += 1;
        if self.outside[w] > 0 {
            self.boundary -= 1;
        }
        self.in_sub[w] = false;
        self.sub.pop();
    }

    fn extend(&mut self, mut ext: Vec<VertexId>) {
        self.record();
        if self.sub.len() == self.max_size {
            return;
        }
        while let Some(w) = ext.pop() {
            let next = exclusive(self.tree, self.allowed, self.in_sub, self.anchor, w, ext.clone());
            let p = self.add(w);
            self.extend(next);
            self.remove(w, p);
        }
    }
}

fn search_anchor(
    tree: &Tree,
    allowed: &[bool],
    degree: &[usize],
    max_size: usize,
    anchor: VertexId,
    in_sub: &mut Vec<bool>,
    outside: &mut Vec<usize>,
) -> Best {
    in_sub[anchor] = true;
    outside[anchor] = degree[anchor];
    let ext = exclusive(tree, allowed, in_sub, anchor, anchor, Vec::new());
    let mut search = AnchorSearch {
        tree,
        allowed,
        degree,
        max_size,
        anchor,
        in_sub,
        outside,
        boundary: usize::from(degree[anchor] > 0),
        sub: vec![anchor],
        best: None,
    };
    search.extend(ext);
    let best = search.best;
    in_sub[anchor] = false;
    best
}
