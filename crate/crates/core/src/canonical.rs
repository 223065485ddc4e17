//! Isomorphism-invariant byte codes for finite trees.
//!
//! Rooted codes use level-wise AHU ranks: every vertex gets the sorted tuple
//! of its children's ranks, tuples on one level are ranked in sorted order,
//! and the code lists the sorted tuples level by level from the deepest one
//! up. Two rooted trees get the same code iff they are isomorphic.

use std::collections::HashMap;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::tree::{Tree, VertexId};

const TAG_UNROOTED: u8 = 0;
const TAG_ROOTED: u8 = 1;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalCode(Vec<u8>);

impl CanonicalCode {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for CanonicalCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CanonicalCode({})", self.to_hex())
    }
}

impl fmt::Display for CanonicalCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for CanonicalCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

fn push_varint(out: &mut Vec<u8>, mut x: u64) {
    loop {
        let byte = (x & 0x7f) as u8;
        x >>= 7;
        if x == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

fn rooted_body(tree: &Tree, root: VertexId) -> Vec<u8> {
    let (order, parent) = tree.bfs_parents(root);
    let n = tree.vertex_count();
    let mut depth = vec![0usize; n];
    for &v in &order {
        if let Some(p) = parent[v] {
            depth[v] = depth[p] + 1;
        }
    }
    let height = order.iter().map(|&v| depth[v]).max().unwrap_or(0);
    let mut levels: Vec<Vec<VertexId>> = vec![Vec::new(); height + 1];
    for &v in &order {
        levels[depth[v]].push(v);
    }

    let mut rank = vec![0u64; n];
    let mut out = Vec::new();
    push_varint(&mut out, height as u64);
    for level in levels.iter().rev() {
        let mut tuples: Vec<(Vec<u64>, VertexId)> = level
            .iter()
            .map(|&v| {
                let mut t: Vec<u64> = tree
                    .neighbors(v)
                    .iter()
                    .filter(|&&w| parent[v] != Some(w))
                    .map(|&w| rank[w])
                    .collect();
                t.sort_unstable();
                (t, v)
            })
            .collect();
        tuples.sort();
        push_varint(&mut out, tuples.len() as u64);
        let mut ranks: HashMap<&[u64], u64> = HashMap::new();
        for (t, v) in &tuples {
            let next = ranks.len() as u64;
            rank[*v] = *ranks.entry(t.as_slice()).or_insert(next);
            push_varint(&mut out, t.len() as u64);
            for &r in t {
                push_varint(&mut out, r);
            }
        }
    }
    out
}

/// Code of `tree` rooted at `root`.
pub fn rooted_code(tree: &Tree, root: VertexId) -> CanonicalCode {
    let mut bytes = vec![TAG_ROOTED];
    bytes.extend(rooted_body(tree, root));
    CanonicalCode(bytes)
}

/// One or two central vertices (minimum eccentricity), ascending.
pub fn centers(tree: &Tree) -> Vec<VertexId> {
    let n = tree.vertex_count();
    if n <= 2 {
        return (0..n).collect();
    }
    let mut degree: Vec<usize> = (0..n).map(|v| tree.neighbors(v).len()).collect();
    let mut layer: Vec<VertexId> = (0..n).filter(|&v| degree[v] == 1).collect();
    let mut remaining = n;
    while remaining > 2 {
        remaining -= layer.len();
        let mut next = Vec::new();
        for &v in &layer {
            for &w in tree.neighbors(v) {
                degree[w] -= 1;
                if degree[w] == 1 {
                    next.push(w);
                }
            }
        }
        layer = next;
    }
    layer.sort_unstable();
    layer
}

/// Code of the unrooted shape of `tree`, ignoring any root it carries.
pub fn unrooted_code(tree: &Tree) -> CanonicalCode {
    let body = centers(tree)
        .into_iter()
        .map(|c| rooted_body(tree, c))
        .min()
        .expect("a tree has a center");
    let mut bytes = vec![TAG_UNROOTED];
    bytes.extend(body);
    CanonicalCode(bytes)
}

/// Root-respecting code for rooted trees, center-based code otherwise.
pub fn canonical_form(tree: &Tree) -> CanonicalCode {
    match tree.root() {
        Some(r) => rooted_code(tree, r),
        None => unrooted_code(tree),
    }
}

/// The rooted complete `s`-ary tree of depth `d`, root 0.
pub fn sary_tree(s: usize, d: usize) -> Tree {
    let mut parent = vec![None];
    let mut layer = vec![0usize];
    for _ in 0..d {
        let mut next = Vec::with_capacity(layer.len() * s);
        for &p in &layer {
            for _ in 0..s {
                next.push(parent.len());
                parent.push(Some(p));
            }
        }
        layer = next;
    }
    Tree::from_parents(&parent).expect("complete trees are trees")
}
