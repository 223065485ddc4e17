//! The trimming operator: remove every degree-1 vertex at once.

use std::collections::VecDeque;

use serde::Serialize;
use serde_json::{json, Value};

use crate::canonical::{rooted_code, CanonicalCode};
use crate::error::{Error, Result};
use crate::oracle::{explore_ball, Ball, TreeOracle};
use crate::patch::Patch;
use crate::tree::{InducedTree, Tree, Trimmed, VertexId};

fn identity(tree: &Tree) -> InducedTree {
    InducedTree {
        tree: tree.clone(),
        origin: tree.vertices().collect(),
    }
}

/// One trimming step on a finite tree. The one-vertex tree is a fixed
/// point; a single edge trims to `Trimmed::Null`.
pub fn trim(tree: &Tree) -> Trimmed {
    trim_induced(&identity(tree))
}

/// One trimming step that keeps ids relative to the original tree.
pub fn trim_induced(current: &InducedTree) -> Trimmed {
    let t = &current.tree;
    let keep: Vec<VertexId> = t.vertices().filter(|&v| t.neighbors(v).len() != 1).collect();
    if keep.is_empty() {
        return Trimmed::Null;
    }
    let inner = t
        .induced_subtree(&keep)
        .expect("non-leaf vertices of a tree span a subtree");
    Trimmed::Tree(InducedTree {
        tree: inner.tree,
        origin: inner.origin.iter().map(|&i| current.origin[i]).collect(),
    })
}

/// One trimming step on a patch whose exterior edges lead to parts of the
/// host that never lose vertices (as when the exterior is infinite).
/// Returns `None` for the null tree.
pub fn trim_patch(patch: &Patch) -> Result<Option<(Patch, InducedTree)>> {
    let mut keep = Vec::new();
    for v in patch.tree().vertices() {
        let deg = patch.host_degree(v).ok_or_else(|| {
            Error::IncompleteKnowledge(format!("the host degree of {v} is unknown"))
        })?;
        if deg != 1 {
            keep.push(v);
        }
    }
    if keep.is_empty() {
        return Ok(None);
    }
    let inner = patch.tree().induced_subtree(&keep)?;
    let hidden = inner.origin.iter().map(|&v| patch.hidden(v)).collect();
    let trimmed = Patch::with_exterior(inner.tree.clone(), hidden)?;
    Ok(Some((trimmed, inner)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitStatus {
    /// Stage `at` has no leaves, so every later stage equals it.
    Stabilized { at: usize },
    /// Stage `at` is the null tree.
    Extinct { at: usize },
    /// Ball codes repeat with this period from `preperiod` on.
    PeriodicWithinRadius {
        period: usize,
        preperiod: usize,
        radius: usize,
    },
    BudgetExhausted { steps: usize },
}

impl OrbitStatus {
    pub fn label(&self) -> &'static str {
        match self {
            OrbitStatus::Stabilized { .. } => "stabilized",
            OrbitStatus::Extinct { .. } => "extinct",
            OrbitStatus::PeriodicWithinRadius { .. } => "periodic_within_radius",
            OrbitStatus::BudgetExhausted { .. } => "budget_exhausted",
        }
    }
}

/// `T, Θ(T), Θ²(T), ...` with every stage expressed in the ids of `T`.
#[derive(Clone, Debug)]
pub struct TrimOrbit {
    pub stages: Vec<Trimmed>,
    pub status: OrbitStatus,
}

impl TrimOrbit {
    pub fn counts(&self) -> Vec<usize> {
        self.stages.iter().map(Trimmed::vertex_count).collect()
    }

    pub fn to_json(&self) -> Value {
        orbit_json(&self.counts(), &self.status)
    }
}

fn orbit_json(counts: &[usize], status: &OrbitStatus) -> Value {
    let mut doc = json!({
        "stages": counts,
        "status": status.label(),
        "period": Value::Null,
    });
    match *status {
        OrbitStatus::Stabilized { at } | OrbitStatus::Extinct { at } => {
            doc["at"] = json!(at);
            doc["period"] = json!(1);
        }
        OrbitStatus::PeriodicWithinRadius {
            period,
            preperiod,
            radius,
        } => {
            doc["period"] = json!(period);
            doc["preperiod"] = json!(preperiod);
            doc["radius"] = json!(radius);
        }
        OrbitStatus::BudgetExhausted { steps } => doc["steps"] = json!(steps),
    }
    doc
}

/// Iterates trimming until a leafless stage or the null tree, using at most
/// `max_steps` trimming steps.
pub fn trim_orbit(tree: &Tree, max_steps: usize) -> Result<TrimOrbit> {
    if max_steps == 0 {
        return Err(Error::Precondition("max_steps must be at least 1".into()));
    }
    let mut stages = vec![Trimmed::Tree(identity(tree))];
    for step in 0..=max_steps {
        let current = match stages.last().expect("nonempty") {
            Trimmed::Null => {
                return Ok(TrimOrbit {
                    status: OrbitStatus::Extinct { at: step },
                    stages,
                })
            }
            Trimmed::Tree(t) => t.clone(),
        };
        if current.tree.leaves().is_empty() {
            return Ok(TrimOrbit {
                status: OrbitStatus::Stabilized { at: step },
                stages,
            });
        }
        if step == max_steps {
            break;
        }
        stages.push(trim_induced(&current));
    }
    Ok(TrimOrbit {
        stages,
        status: OrbitStatus::BudgetExhausted { steps: max_steps },
    })
}

/// Trimming history of one patch vertex, exact only up to a horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LevelStatus {
    /// Step at which the vertex is removed under the working assumption
    /// that unseen host vertices are never removed.
    pub removed_at: Option<usize>,
    /// The vertex's membership in `Θʲ` is exact for every `j <= known_through`.
    pub known_through: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "step", rename_all = "snake_case")]
pub enum TrimDepth {
    Survives,
    RemovedAt(usize),
    Unknown,
}

impl LevelStatus {
    /// Membership in `Θᵏ`.
    pub fn at(&self, k: usize) -> TrimDepth {
        match self.removed_at {
            Some(j) if j <= k && j <= self.known_through => TrimDepth::RemovedAt(j),
            _ if k <= self.known_through => TrimDepth::Survives,
            _ => TrimDepth::Unknown,
        }
    }

    pub fn alive_at(&self, k: usize) -> Option<bool> {
        match self.at(k) {
            TrimDepth::Survives => Some(true),
            TrimDepth::RemovedAt(_) => Some(false),
            TrimDepth::Unknown => None,
        }
    }
}

/// Leaf peeling inside a patch.
///
/// Vertices outside the patch are treated as never removed and an unknown
/// exterior count as one such vertex. The horizon of each vertex is chosen
/// so that this assumption cannot influence the reported membership: a
/// vertex with unseen neighbors is exact through step 1, one whose degree
/// is unknown only through step 0, and every step of distance away from
/// such vertices adds one more exact step.
pub fn peel_levels(patch: &Patch) -> Vec<LevelStatus> {
    let tree = patch.tree();
    let n = tree.vertex_count();

    // horizon: multi-source BFS with start offsets 0 or 1, one bucket per level
    let mut horizon = vec![usize::MAX; n];
    let mut buckets: Vec<Vec<VertexId>> = vec![Vec::new(), Vec::new()];
    for (v, hz) in horizon.iter_mut().enumerate() {
        match patch.hidden(v) {
            None => {
                *hz = 0;
                buckets[0].push(v);
            }
            Some(h) if h > 0 => {
                *hz = 1;
                buckets[1].push(v);
            }
            _ => {}
        }
    }
    let mut level = 0;
    while level < buckets.len() {
        let current = std::mem::take(&mut buckets[level]);
        for u in current {
            if horizon[u] != level {
                continue;
            }
            for &w in tree.neighbors(u) {
                if horizon[w] > level + 1 {
                    horizon[w] = level + 1;
                    if buckets.len() <= level + 1 {
                        buckets.push(Vec::new());
                    }
                    buckets[level + 1].push(w);
                }
            }
        }
        level += 1;
    }

    let mut alive_deg: Vec<usize> = (0..n)
        .map(|v| tree.neighbors(v).len() + patch.hidden(v).unwrap_or(1))
        .collect();
    let mut removed_at: Vec<Option<usize>> = vec![None; n];
    let mut round: Vec<VertexId> = (0..n).filter(|&v| alive_deg[v] == 1).collect();
    let mut step = 0;
    while !round.is_empty() {
        step += 1;
        for &v in &round {
            removed_at[v] = Some(step);
        }
        let mut touched = Vec::new();
        for &v in &round {
            for &w in tree.neighbors(v) {
                if removed_at[w].is_none() {
                    alive_deg[w] -= 1;
                    touched.push(w);
                }
            }
        }
        touched.sort_unstable();
        touched.dedup();
        round = touched.into_iter().filter(|&w| alive_deg[w] == 1).collect();
    }
    (0..n)
        .map(|v| LevelStatus {
            removed_at: removed_at[v],
            known_through: horizon[v],
        })
        .collect()
}

/// Membership of `v` in `Θᵏ(T)`, decided inside the radius-`k` ball.
pub fn trim_depth<O: TreeOracle>(
    oracle: &O,
    v: &O::Vertex,
    k: usize,
    max_vertices: usize,
) -> Result<TrimDepth> {
    let ball = explore_ball(oracle, v, k, max_vertices)
        .map_err(|e| Error::IncompleteKnowledge(e.to_string()))?;
    let status = peel_levels(&ball.patch)[0].at(k);
    match status {
        TrimDepth::Unknown => Err(Error::IncompleteKnowledge(format!(
            "membership of {v} in stage {k} is not determined by its ball"
        ))),
        s => Ok(s),
    }
}

/// Levels of every ball vertex together with the ball itself.
pub struct LeveledBall<V> {
    pub ball: Ball<V>,
    pub levels: Vec<LevelStatus>,
}

impl<V: Clone + Eq + std::hash::Hash> LeveledBall<V> {
    pub fn new(ball: Ball<V>) -> Self {
        let levels = peel_levels(&ball.patch);
        LeveledBall { ball, levels }
    }

    /// Degree of `x` inside `Θᵏ`, when it is determined.
    pub fn trimmed_degree(&self, x: VertexId, k: usize) -> Option<usize> {
        if self.levels[x].alive_at(k) != Some(true) {
            return None;
        }
        let hidden = self.ball.patch.hidden(x)?;
        let mut deg = 0;
        if hidden > 0 {
            if k > 0 {
                return None;
            }
            deg += hidden;
        }
        for &w in self.ball.tree().neighbors(x) {
            match self.levels[w].alive_at(k) {
                Some(true) => deg += 1,
                Some(false) => {}
                None => return None,
            }
        }
        Some(deg)
    }
}

/// A finite view of `Θᵏ(T)` around its origin.
#[derive(Clone, Debug)]
pub struct TrimmedBall<V> {
    pub origin: V,
    /// The induced subtree of `Θᵏ(T)` on vertices within `radius` of the
    /// origin, rooted at the origin (local id 0).
    pub tree: Tree,
    pub handles: Vec<V>,
    pub radius: usize,
    pub k: usize,
}

impl<V> TrimmedBall<V> {
    pub fn code(&self) -> CanonicalCode {
        rooted_code(&self.tree, 0)
    }
}

/// The radius-`radius` ball of `Θᵏ(T)` around the vertex of `Θᵏ(T)`
/// nearest to the oracle root (ties broken by handle order).
pub fn trimmed_ball<O: TreeOracle>(
    oracle: &O,
    k: usize,
    radius: usize,
    max_vertices: usize,
) -> Result<TrimmedBall<O::Vertex>> {
    let root = oracle.root();
    let mut reach = radius + k + 1;
    loop {
        let lb = LeveledBall::new(explore_ball(oracle, &root, reach, max_vertices)?);
        let ball = &lb.ball;
        let n = ball.handles.len();
        let mut by_dist: Vec<VertexId> = (0..n).collect();
        by_dist.sort_by(|&a, &b| ball.dist[a].cmp(&ball.dist[b]).then(ball.handles[a].cmp(&ball.handles[b])));
        let mut origin = None;
        let mut undecided = false;
        for &x in &by_dist {
            match lb.levels[x].alive_at(k) {
                Some(true) => {
                    origin = Some(x);
                    break;
                }
                Some(false) => {}
                None => {
                    undecided = true;
                    break;
                }
            }
        }
        let whole = !ball.patch.has_exterior();
        let Some(origin) = origin.filter(|_| !undecided) else {
            if whole {
                return Err(Error::Precondition(format!(
                    "stage {k} of this finite tree is the null tree"
                )));
            }
            reach *= 2;
            continue;
        };
        let needed = ball.dist[origin] + radius + k;
        if needed > reach && !whole {
            reach = needed;
            continue;
        }
        // BFS inside Θᵏ from the origin
        let mut local = vec![usize::MAX; n];
        let mut handles = vec![ball.handles[origin].clone()];
        let mut parent = vec![None];
        let mut depth = vec![0usize];
        local[origin] = 0;
        let mut queue = VecDeque::from([origin]);
        while let Some(u) = queue.pop_front() {
            let du = depth[local[u]];
            if du == radius {
                continue;
            }
            for &w in ball.tree().neighbors(u) {
                if local[w] != usize::MAX {
                    continue;
                }
                match lb.levels[w].alive_at(k) {
                    Some(true) => {
                        local[w] = handles.len();
                        handles.push(ball.handles[w].clone());
                        parent.push(Some(local[u]));
                        depth.push(du + 1);
                        queue.push_back(w);
                    }
                    Some(false) => {}
                    None => {
                        return Err(Error::IncompleteKnowledge(format!(
                            "stage {k} membership of {} is undecided",
                            ball.handles[w]
                        )))
                    }
                }
            }
        }
        let tree = Tree::from_parents(&parent)?;
        return Ok(TrimmedBall {
            origin: ball.handles[origin].clone(),
            tree,
            handles,
            radius,
            k,
        });
    }
}

/// Codes of the radius-`radius` balls of `Θʲ(T)`, `j = 0..=max_steps`, and
/// the smallest period they exhibit.
#[derive(Clone, Debug)]
pub struct BallOrbit {
    pub codes: Vec<CanonicalCode>,
    pub counts: Vec<usize>,
    pub status: OrbitStatus,
}

impl BallOrbit {
    pub fn to_json(&self) -> Value {
        orbit_json(&self.counts, &self.status)
    }
}

/// Smallest `(period, preperiod)` such that `codes[j] == codes[j - period]`
/// for every `j >= preperiod + period`, observed over at least two periods.
pub fn detect_period<T: PartialEq>(codes: &[T]) -> Option<(usize, usize)> {
    let len = codes.len();
    for p in 1..=len / 2 {
        for q in 0..len {
            if q + 2 * p > len {
                break;
            }
            if (q + p..len).all(|j| codes[j] == codes[j - p]) {
                return Some((p, q));
            }
        }
    }
    None
}

pub fn ball_orbit<O: TreeOracle>(
    oracle: &O,
    radius: usize,
    max_steps: usize,
    max_vertices: usize,
) -> Result<BallOrbit> {
    if max_steps == 0 {
        return Err(Error::Precondition("max_steps must be at least 1".into()));
    }
    let mut codes = Vec::new();
    let mut counts = Vec::new();
    for j in 0..=max_steps {
        let tb = trimmed_ball(oracle, j, radius, max_vertices)?;
        counts.push(tb.tree.vertex_count());
        codes.push(tb.code());
    }
    let status = match detect_period(&codes) {
        Some((period, preperiod)) => OrbitStatus::PeriodicWithinRadius {
            period,
            preperiod,
            radius,
        },
        None => OrbitStatus::BudgetExhausted { steps: max_steps },
    };
    Ok(BallOrbit {
        codes,
        counts,
        status,
    })
}
