//! Seeded generation-by-generation sampling.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::patch::Patch;
use crate::tree::{Tree, VertexId};

use super::GwSpec;

/// Why sampling stopped before extinction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "limit", rename_all = "snake_case")]
pub enum Truncation {
    Generation(usize),
    Vertices(usize),
}

/// A sampled Galton-Watson tree up to a budget.
///
/// Vertices are stored in breadth-first order; vertex `v` carries the index
/// tuple `labels[v]` (children of `I` are `I1, ..., Ik`). Offspring counts
/// are drawn for every vertex, including those of the last generation,
/// whose children are not materialized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GwSample {
    pub labels: Vec<Vec<u32>>,
    pub parent: Vec<Option<VertexId>>,
    pub generation: Vec<usize>,
    pub offspring: Vec<usize>,
    pub tree: Tree,
    /// `W_0, W_1, ...` through the last materialized generation, followed
    /// by a final 0 when the tree died out.
    pub generation_sizes: Vec<usize>,
    /// Last materialized generation.
    pub depth: usize,
    pub truncated_at: Option<Truncation>,
    pub extinct: bool,
}

pub fn format_label(label: &[u32]) -> String {
    let parts: Vec<String> = label.iter().map(u32::to_string).collect();
    format!("({})", parts.join(","))
}

/// Parses `()`, `(1,2)` or `1.2`.
pub fn parse_label(text: &str) -> Result<Vec<u32>> {
    let t = text.trim().trim_start_matches('(').trim_end_matches(')').trim();
    if t.is_empty() {
        return Ok(Vec::new());
    }
    t.split([',', '.'])
        .map(|x| {
            x.trim()
                .parse::<u32>()
                .ok()
                .filter(|&i| i >= 1)
                .ok_or_else(|| Error::UnknownLabel(text.to_string()))
        })
        .collect()
}

/// Sample with trial index 0.
pub fn sample(spec: &GwSpec, seed: u64, max_generation: usize, max_vertices: usize) -> Result<GwSample> {
    sample_trial(spec, seed, 0, max_generation, max_vertices)
}

/// The generator draws generation `g` of trial `t` from stream
/// `(t << 32) | g` of a ChaCha8 generator seeded with `seed`, one `f64`
/// per vertex in breadth-first order, so every trial is reproducible on
/// its own.
pub fn sample_trial(
    spec: &GwSpec,
    seed: u64,
    trial: u64,
    max_generation: usize,
    max_vertices: usize,
) -> Result<GwSample> {
    if max_generation == 0 || max_vertices == 0 {
        return Err(Error::InvalidInput("sampling budgets must be at least 1".into()));
    }
    if trial >= 1 << 32 {
        return Err(Error::InvalidInput(format!("trial index {trial} is too large")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<Vec<u32>> = vec![Vec::new()];
    let mut parent: Vec<Option<VertexId>> = vec![None];
    let mut generation = vec![0];
    let mut offspring: Vec<usize> = Vec::new();
    let mut sizes = vec![1];
    let mut start = 0;
    let mut level = 0;
    let (truncated_at, extinct) = loop {
        let end = labels.len();
        rng.set_stream((trial << 32) | level as u64);
        rng.set_word_pos(0);
        let mut total = 0;
        for _ in start..end {
            let x = spec.offspring(rng.gen::<f64>());
            offspring.push(x);
            total += x;
        }
        if total == 0 {
            sizes.push(0);
            break (None, true);
        }
        if level == max_generation {
            break (Some(Truncation::Generation(max_generation)), false);
        }
        if end + total > max_vertices {
            break (Some(Truncation::Vertices(max_vertices)), false);
        }
        for v in start..end {
            for i in 1..=offspring[v] {
                let mut label = labels[v].clone();
                label.push(i as u32);
                labels.push(label);
                parent.push(Some(v));
                generation.push(level + 1);
            }
        }
        sizes.push(total);
        start = end;
        level += 1;
    };
    let tree = Tree::from_parents(&parent)?;
    Ok(GwSample {
        labels,
        parent,
        generation,
        offspring,
        tree,
        generation_sizes: sizes,
        depth: level,
        truncated_at,
        extinct,
    })
}

/// `W_0, ..., W_n` of one trial without materializing the tree; draws
/// exactly the same offspring counts as [`sample_trial`].
pub fn generation_sizes(spec: &GwSpec, seed: u64, trial: u64, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sizes = Vec::with_capacity(n + 1);
    let mut w = 1usize;
    sizes.push(w);
    for level in 0..n {
        rng.set_stream((trial << 32) | level as u64);
        rng.set_word_pos(0);
        let mut next = 0;
        for _ in 0..w {
            next += spec.offspring(rng.gen::<f64>());
        }
        w = next;
        sizes.push(w);
    }
    sizes
}

impl GwSample {
    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn find(&self, label: &[u32]) -> Option<VertexId> {
        // children of v are contiguous and ordered by index, so walk down
        let mut v = 0;
        for &i in label {
            let first = self.first_child(v)?;
            if i == 0 || i as usize > self.offspring[v] || self.generation[v] == self.depth {
                return None;
            }
            v = first + i as usize - 1;
        }
        Some(v)
    }

    fn first_child(&self, v: VertexId) -> Option<VertexId> {
        self.tree
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&w| self.parent[w] == Some(v))
            .min()
    }

    /// Children of `v` that are materialized.
    pub fn children(&self, v: VertexId) -> Vec<VertexId> {
        let mut c: Vec<VertexId> = self
            .tree
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&w| self.parent[w] == Some(v))
            .collect();
        c.sort_unstable();
        c
    }

    /// Degree of `v` in the full (unmaterialized) tree.
    pub fn host_degree(&self, v: VertexId) -> usize {
        self.offspring[v] + usize::from(self.parent[v].is_some())
    }

    /// The three inductive-set conditions, checked on the labels: the empty
    /// tuple is present, every label's prefix is present, and the children
    /// of each materialized parent are indexed `1..=k` without gaps.
    pub fn is_inductive(&self) -> bool {
        if self.labels.first().map(Vec::len) != Some(0) {
            return false;
        }
        let index: HashMap<&[u32], VertexId> =
            self.labels.iter().enumerate().map(|(i, l)| (l.as_slice(), i)).collect();
        if index.len() != self.labels.len() {
            return false;
        }
        let mut child_count = vec![0usize; self.labels.len()];
        for (v, label) in self.labels.iter().enumerate().skip(1) {
            let Some((&last, prefix)) = label.split_last() else {
                return false;
            };
            match index.get(prefix) {
                Some(&p) if Some(p) == self.parent[v] => {
                    if last == 0 || last as usize > self.offspring[p] {
                        return false;
                    }
                    child_count[p] += 1;
                }
                _ => return false,
            }
        }
        (0..self.labels.len()).all(|v| {
            let materialized = self.generation[v] < self.depth || self.extinct;
            !materialized || child_count[v] == self.offspring[v]
        })
    }

    /// The subtree of all descendants of the vertex labeled `label`,
    /// rooted there.
    pub fn subtree_at(&self, label: &[u32]) -> Result<Tree> {
        let v = self.find(label).ok_or_else(|| Error::UnknownLabel(format_label(label)))?;
        let mut members = vec![v];
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for c in self.children(u) {
                members.push(c);
                stack.push(c);
            }
        }
        let induced = self.tree.induced_subtree(&members)?;
        let root = induced.origin.binary_search(&v).expect("v is a member");
        induced.tree.with_root(root)
    }

    fn check_depth(&self, k: usize) -> Result<()> {
        if k > self.depth && !self.extinct {
            return Err(Error::InsufficientDepth {
                requested: k,
                available: self.depth,
            });
        }
        Ok(())
    }

    /// First `k + 1` generations (labels of length at most `k`), rooted at
    /// the root. A tree that died out is returned whole for any `k` beyond
    /// its depth.
    pub fn truncate(&self, k: usize) -> Result<Tree> {
        self.check_depth(k)?;
        let members: Vec<VertexId> = (0..self.vertex_count()).filter(|&v| self.generation[v] <= k).collect();
        let induced = self.tree.induced_subtree(&members)?;
        induced.tree.with_root(0)
    }

    /// The first `k + 1` generations as a patch whose last generation
    /// records its offspring counts as exterior edges.
    pub fn truncated_patch(&self, k: usize) -> Result<Patch> {
        self.check_depth(k)?;
        let k = k.min(self.depth);
        let members: Vec<VertexId> = (0..self.vertex_count()).filter(|&v| self.generation[v] <= k).collect();
        let induced = self.tree.induced_subtree(&members)?;
        let hidden = induced
            .origin
            .iter()
            .map(|&v| Some(if self.generation[v] == k { self.offspring[v] } else { 0 }))
            .collect();
        Patch::with_exterior(induced.tree.with_root(0)?, hidden)
    }

    /// All materialized vertices as a patch.
    pub fn to_patch(&self) -> Patch {
        self.truncated_patch(self.depth).expect("the sampled depth is available")
    }
}
