//! Amenability verdicts from witnesses found in a finite exploration.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::enumerate::DEFAULT_GUARD;
use crate::error::{Error, Result};
use crate::oracle::{bounded_component, explore_ball_capped, Ball, ComponentSize, TreeOracle};
use crate::patch::Patch;
use crate::ratio::Ratio;
use crate::trimming::{LeveledBall, TrimDepth};
use crate::tree::{Tree, VertexId};

use super::paths::LevelRuns;
use super::{cheeger_on_patch, FolnerCandidate, Provenance};

/// Bounds asserted by the caller: `Θᵏ(T)` is a fixed point, its chains of
/// degree-2 vertices have at most `d` edges, and inessential subtrees have
/// at most `r` vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclaredBounds {
    pub k: usize,
    pub d: usize,
    pub r: usize,
}

impl DeclaredBounds {
    /// `1 / (2 d R)`.
    pub fn cheeger_bound(&self) -> Ratio {
        Ratio::from_counts(1, 2 * self.d.max(1) * self.r.max(1))
    }
}

#[derive(Clone, Debug)]
pub struct ClassifyParams {
    pub radius: usize,
    pub max_vertices: usize,
    /// Path lengths searched for branchless-path witnesses.
    pub path_targets: Vec<usize>,
    /// The verdict is "amenable" once a witness of ratio at most `1/d`
    /// exists for every listed `d`.
    pub thresholds: Vec<usize>,
    /// Largest trim level searched; defaults to the radius minus the path
    /// length.
    pub k_max: Option<usize>,
    /// Inessential witnesses are listed up to this size (the largest one
    /// found is always listed).
    pub witness_cap: usize,
    /// Budget for components not decided inside the ball.
    pub component_budget: usize,
    pub declared: Option<DeclaredBounds>,
    /// Radius and set size of the exhaustive search behind a certificate.
    pub cert_radius: usize,
    pub cert_max_size: usize,
    pub guard: u128,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        ClassifyParams {
            radius: 64,
            max_vertices: 20_000,
            path_targets: (1..=50).collect(),
            thresholds: vec![2, 5, 10, 20],
            k_max: None,
            witness_cap: 100,
            component_budget: 10_000,
            declared: None,
            cert_radius: 4,
            cert_max_size: 8,
            guard: DEFAULT_GUARD,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    AmenableWitnessed,
    NonamenableCertified,
    Inconclusive,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::AmenableWitnessed => "amenable-witnessed",
            Verdict::NonamenableCertified => "nonamenable-certified",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdRow {
    pub d: usize,
    pub met: bool,
    /// Index into the witness list of the smallest witness meeting `1/d`.
    pub witness: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PathRow {
    pub d: usize,
    pub ratio: Ratio,
    pub size: usize,
    pub trim_level: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub declared: DeclaredBounds,
    pub bound: Ratio,
    /// Exhaustive minimum over connected sets near the center.
    pub empirical_cheeger: Ratio,
    pub empirical_region_vertices: usize,
    pub empirical_max_size: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Scope {
    pub center: String,
    pub radius: usize,
    pub vertices: usize,
    pub max_vertices: usize,
    pub frontier: usize,
    pub whole_host: bool,
    pub max_trim_level: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct AmenabilityReport {
    pub schema_version: u32,
    pub verdict: Verdict,
    /// One witness per ratio, in decreasing order of ratio.
    pub witnesses: Vec<FolnerCandidate<String>>,
    pub thresholds: Vec<ThresholdRow>,
    pub paths: Vec<PathRow>,
    pub certificate: Option<Certificate>,
    pub scope: Scope,
}

/// Finite components of `T - r` found around the ball, each giving the
/// witness `C` with boundary the single neighbor of `r` in `C`.
struct BranchScan {
    per_size: BTreeMap<usize, FolnerCandidate<VertexId>>,
    largest: Option<FolnerCandidate<VertexId>>,
    /// Extra components known only through the oracle, in handles.
    external: Vec<FolnerCandidate<String>>,
    /// Largest `1 + sum of finite components` over roots.
    max_union: Option<(usize, usize)>,
}

fn scan_branches<O: TreeOracle>(
    oracle: Option<&O>,
    lb: &LeveledBall<O::Vertex>,
    params: &ClassifyParams,
) -> BranchScan {
    let ball = &lb.ball;
    let tree = ball.tree();
    let n = tree.vertex_count();
    let (order, parent) = tree.bfs_parents(0);
    let open = |v: VertexId| ball.patch.hidden(v) != Some(0);

    // subtree sizes and open-vertex counts below each vertex
    let mut size = vec![1usize; n];
    let mut open_below = vec![0usize; n];
    for &v in order.iter().rev() {
        open_below[v] += usize::from(open(v));
        if let Some(p) = parent[v] {
            size[p] += size[v];
            open_below[p] += open_below[v];
        }
    }
    let total_open = open_below[0];

    let mut scan = BranchScan {
        per_size: BTreeMap::new(),
        largest: None,
        external: Vec::new(),
        max_union: None,
    };
    let oracle = oracle.filter(|o| o.is_finite() != Some(true));
    let mut pending_largest: Vec<(VertexId, VertexId)> = Vec::new();
    let mut largest_size = 0;
    let mut external_seen: HashSet<usize> = HashSet::new();

    for r in 0..n {
        if open(r) {
            // some branch at r is not materialized
            if let Some(oracle) = oracle {
                external_branches(oracle, lb, r, params, &mut scan, &mut external_seen);
            }
            continue;
        }
        let mut union = 1;
        let mut all_decided = true;
        for &w in tree.neighbors(r) {
            let (closed, comp_size) = if parent[w] == Some(r) {
                (open_below[w] == 0, size[w])
            } else {
                (total_open == open_below[r], n - size[r])
            };
            if !closed {
                let answer = oracle.map(|o| (o, o.hanging_component(ball.handle(r), ball.handle(w))));
                match answer {
                    Some((o, Some(ComponentSize::Finite(s)))) if s <= params.component_budget => {
                        union += s;
                        record_external(o, ball.handle(r), ball.handle(w), s, params, &mut scan, &mut external_seen);
                    }
                    Some((_, Some(ComponentSize::Infinite))) => {}
                    _ => all_decided = false,
                }
                continue;
            }
            union += comp_size;
            if comp_size <= params.witness_cap {
                let members = component(tree, r, w);
                let cand = branch_candidate(ball.handle(r).to_string(), members, w);
                let slot = scan.per_size.entry(comp_size);
                match slot {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(cand);
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        if cand.precedes(e.get()) {
                            e.insert(cand);
                        }
                    }
                }
            }
            if comp_size > largest_size {
                largest_size = comp_size;
                pending_largest.clear();
            }
            if comp_size == largest_size {
                pending_largest.push((r, w));
            }
        }
        if all_decided && union > 1 && scan.max_union.is_none_or(|(_, u)| union > u) {
            scan.max_union = Some((r, union));
        }
    }
    if largest_size > params.witness_cap {
        for (r, w) in pending_largest {
            let cand = branch_candidate(ball.handle(r).to_string(), component(tree, r, w), w);
            scan.largest = super::better_of(scan.largest.take(), Some(cand));
        }
    }
    scan
}

fn external_branches<O: TreeOracle>(
    oracle: &O,
    lb: &LeveledBall<O::Vertex>,
    r: VertexId,
    params: &ClassifyParams,
    scan: &mut BranchScan,
    seen: &mut HashSet<usize>,
) {
    let handle = lb.ball.handle(r);
    for w in oracle.neighbors(handle) {
        if let Some(ComponentSize::Finite(s)) = oracle.hanging_component(handle, &w) {
            if s <= params.component_budget {
                record_external(oracle, handle, &w, s, params, scan, seen);
            }
        }
    }
}

fn record_external<O: TreeOracle>(
    oracle: &O,
    r: &O::Vertex,
    w: &O::Vertex,
    s: usize,
    params: &ClassifyParams,
    scan: &mut BranchScan,
    seen: &mut HashSet<usize>,
) {
    // sizes already covered inside the ball, or by an earlier query, are skipped
    if scan.per_size.contains_key(&s) || seen.contains(&s) {
        return;
    }
    if s > params.witness_cap && scan.external.iter().any(|c| c.size() >= s) {
        return;
    }
    let Some(members) = bounded_component(oracle, r, w, s + 1) else {
        return;
    };
    seen.insert(s);
    scan.external.push(FolnerCandidate::new(
        members.iter().map(ToString::to_string).collect(),
        vec![w.to_string()],
        Provenance::InessentialMinusRoot {
            root: r.to_string(),
            subtree_size: s + 1,
            root_neighbors: 1,
        },
    ));
}

fn component(tree: &Tree, cut: VertexId, start: VertexId) -> Vec<VertexId> {
    let mut out = vec![start];
    let mut stack = vec![(start, cut)];
    while let Some((u, from)) = stack.pop() {
        for &w in tree.neighbors(u) {
            if w != from {
                out.push(w);
                stack.push((w, u));
            }
        }
    }
    out
}

fn branch_candidate(root: String, members: Vec<VertexId>, w: VertexId) -> FolnerCandidate<VertexId> {
    let size = members.len();
    FolnerCandidate::new(
        members,
        vec![w],
        Provenance::InessentialMinusRoot {
            root,
            subtree_size: size + 1,
            root_neighbors: 1,
        },
    )
}

fn refuted(reason: String, counterexample: Vec<String>) -> Error {
    Error::DeclaredBoundsRefuted {
        reason,
        counterexample,
    }
}

/// Candidates gathered around one leveled ball.
struct Collected {
    local: Vec<FolnerCandidate<VertexId>>,
    external: Vec<FolnerCandidate<String>>,
    paths: Vec<PathRow>,
    levels: Vec<LevelRuns>,
    branches: Option<BranchScan>,
    max_trim_level: usize,
}

fn collect<O: TreeOracle>(
    oracle: Option<&O>,
    lb: &LeveledBall<O::Vertex>,
    params: &ClassifyParams,
) -> Result<Collected> {
    if params.thresholds.iter().chain(&params.path_targets).any(|&d| d == 0) {
        return Err(Error::InvalidInput("path lengths and thresholds must be positive".into()));
    }
    let whole_host = !lb.ball.patch.has_exterior();
    let radius = lb.ball.radius;
    let k_max_for = |d: usize| params.k_max.unwrap_or(radius.saturating_sub(d));
    let max_trim_level = params.path_targets.iter().map(|&d| k_max_for(d)).max().unwrap_or(0);
    let max_trim_level = match params.declared {
        Some(b) => max_trim_level.max(b.k + 1),
        None => max_trim_level,
    };

    let mut local = Vec::new();
    if whole_host {
        let all: Vec<VertexId> = (0..lb.ball.handles.len()).collect();
        local.push(FolnerCandidate::new(all, Vec::new(), Provenance::WholeTree));
    }

    // branchless paths, one best witness per target length
    let levels: Vec<LevelRuns> = (0..=max_trim_level).map(|k| LevelRuns::new(lb, k)).collect();
    let mut paths = Vec::new();
    for &d in &params.path_targets {
        let ks = 0..=k_max_for(d).min(max_trim_level);
        let Some(best_sum) = ks.clone().filter_map(|k| levels[k].best_sum(d)).max() else {
            continue;
        };
        let mut best: Option<FolnerCandidate<VertexId>> = None;
        for k in ks {
            if levels[k].best_sum(d) == Some(best_sum) {
                best = super::better_of(best, levels[k].materialize(lb, d, best_sum)?);
            }
        }
        if let Some(c) = best {
            let trim_level = match c.provenance {
                Provenance::BranchlessPath { trim_level, .. } => trim_level,
                _ => unreachable!(),
            };
            paths.push(PathRow {
                d,
                ratio: c.ratio,
                size: c.size(),
                trim_level,
            });
            local.push(c);
        }
    }

    // finite hanging components
    let branches = (!whole_host).then(|| scan_branches(oracle, lb, params));
    let mut external = Vec::new();
    if let Some(scan) = &branches {
        local.extend(scan.per_size.values().cloned());
        local.extend(scan.largest.iter().cloned());
        external.extend(scan.external.iter().cloned());
    }
    Ok(Collected {
        local,
        external,
        paths,
        levels,
        branches,
        max_trim_level,
    })
}

/// One witness per ratio, in decreasing order of ratio.
fn ladder<V: Ord + Clone>(candidates: impl IntoIterator<Item = FolnerCandidate<V>>) -> Vec<FolnerCandidate<V>> {
    let mut by_ratio: BTreeMap<Ratio, FolnerCandidate<V>> = BTreeMap::new();
    for c in candidates {
        match by_ratio.get(&c.ratio) {
            Some(old) if !c.precedes(old) => {}
            _ => {
                by_ratio.insert(c.ratio, c);
            }
        }
    }
    by_ratio.into_values().rev().collect()
}

/// The witness ladder of a finite patch, searched around vertex 0 with the
/// path and size settings of `params`.
pub fn witnesses_in_patch(patch: &Patch, params: &ClassifyParams) -> Result<Vec<FolnerCandidate<VertexId>>> {
    let lb = LeveledBall::new(Ball::from_patch(patch.clone(), 0));
    let collected = collect::<Tree>(None, &lb, params)?;
    Ok(ladder(collected.local))
}

/// Explores the ball around `center`, collects inessential and
/// branchless-path witnesses, and either reports amenability, verifies
/// declared bounds within the explored scope, or stays inconclusive.
pub fn classify<O: TreeOracle>(
    oracle: &O,
    center: &O::Vertex,
    params: &ClassifyParams,
) -> Result<AmenabilityReport> {
    let ball = explore_ball_capped(oracle, center, params.radius, params.max_vertices)?;
    let whole_host = !ball.patch.has_exterior();
    let lb = LeveledBall::new(ball);
    let collected = collect(Some(oracle), &lb, params)?;
    let names: Vec<String> = lb.ball.handles.iter().map(ToString::to_string).collect();
    let witnesses = ladder(
        collected
            .local
            .iter()
            .map(|c| c.map(|&i| names[i].clone()))
            .chain(collected.external.iter().cloned()),
    );

    let thresholds: Vec<ThresholdRow> = params
        .thresholds
        .iter()
        .map(|&d| {
            let target = Ratio::from_counts(1, d);
            let witness = witnesses
                .iter()
                .enumerate()
                .filter(|(_, w)| w.ratio <= target)
                .min_by_key(|(i, w)| (w.size(), *i))
                .map(|(i, _)| i);
            ThresholdRow {
                d,
                met: witness.is_some(),
                witness,
            }
        })
        .collect();

    let certificate = match params.declared {
        None => None,
        Some(b) => Some(certify(
            &lb,
            &collected.levels,
            &witnesses,
            collected.branches.as_ref(),
            &names,
            b,
            params,
        )?),
    };

    let verdict = if certificate.is_some() {
        Verdict::NonamenableCertified
    } else if whole_host || (!thresholds.is_empty() && thresholds.iter().all(|t| t.met)) {
        Verdict::AmenableWitnessed
    } else {
        Verdict::Inconclusive
    };

    Ok(AmenabilityReport {
        schema_version: 1,
        verdict,
        witnesses,
        thresholds,
        paths: collected.paths,
        certificate,
        scope: Scope {
            center: center.to_string(),
            radius: lb.ball.radius,
            vertices: names.len(),
            max_vertices: params.max_vertices,
            frontier: lb.ball.frontier().len(),
            whole_host,
            max_trim_level: collected.max_trim_level,
        },
    })
}

fn certify<V: Clone + Eq + std::hash::Hash>(
    lb: &LeveledBall<V>,
    levels: &[LevelRuns],
    witnesses: &[FolnerCandidate<String>],
    branches: Option<&BranchScan>,
    names: &[String],
    b: DeclaredBounds,
    params: &ClassifyParams,
) -> Result<Certificate> {
    let bound = b.cheeger_bound();
    for (x, level) in lb.levels.iter().enumerate() {
        if let Some(j) = level.removed_at {
            if j > b.k && level.at(j) == TrimDepth::RemovedAt(j) {
                return Err(refuted(
                    format!("a vertex is removed at trimming step {j}, after the declared fixed point {}", b.k),
                    vec![names[x].clone()],
                ));
            }
        }
    }
    if let Some(run) = levels[b.k].runs.iter().find(|r| r.len() >= b.d.max(1)) {
        return Err(refuted(
            format!(
                "stage {} has a chain of {} vertices of degree 2, so a contracted edge stands for {} edges",
                b.k,
                run.len(),
                run.len() + 1
            ),
            run.iter().map(|&x| names[x].clone()).collect(),
        ));
    }
    if let Some((r, union)) = branches.and_then(|s| s.max_union) {
        if union > b.r {
            return Err(refuted(
                format!("an inessential subtree rooted here has {union} vertices"),
                vec![names[r].clone()],
            ));
        }
    }
    if let Some(w) = witnesses.iter().find(|w| w.ratio < bound) {
        return Err(refuted(
            format!("a witness has ratio {} below the bound {bound}", w.ratio),
            w.members.clone(),
        ));
    }
    let ball = &lb.ball;
    let allowed: Vec<bool> = (0..names.len())
        .map(|i| ball.dist[i] <= params.cert_radius && (ball.dist[i] < ball.radius || !ball.patch.has_exterior()))
        .collect();
    let cheeger = cheeger_on_patch(
        &ball.patch,
        &allowed,
        params.cert_max_size,
        params.guard,
        format!("ball({}, {})", names[0], params.cert_radius),
    )?;
    if cheeger.value < bound {
        return Err(refuted(
            format!("a connected set has ratio {} below the bound {bound}", cheeger.value),
            cheeger.argmin.members.iter().map(|&i| names[i].clone()).collect(),
        ));
    }
    Ok(Certificate {
        declared: b,
        bound,
        empirical_cheeger: cheeger.value,
        empirical_region_vertices: cheeger.scope.region_vertices,
        empirical_max_size: params.cert_max_size,
    })
}
