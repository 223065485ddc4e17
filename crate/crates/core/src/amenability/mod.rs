//! Isoperimetric ratios, Følner witnesses and the amenability classifier.

mod classify;
mod contract;
mod paths;

pub use classify::{
    classify, witnesses_in_patch, AmenabilityReport, Certificate, ClassifyParams, DeclaredBounds, PathRow, Scope,
    ThresholdRow, Verdict,
};
pub use contract::{
    contract_branchless, min_degree3_bound_check, min_degree3_bound_check_patch, sandwich_check,
    Contraction, MinDegree3Report, SandwichReport,
};
pub use paths::{folner_from_branchless_path, lift_through_trim, path_windows};

use std::collections::HashSet;

use rand::Rng;
use serde::Serialize;

use crate::enumerate::{min_ratio_connected, DEFAULT_GUARD};
use crate::error::{Error, Result};
use crate::inessential::InessentialSubtree;
use crate::oracle::{explore_ball, oracle_boundary, TreeOracle};
use crate::patch::Patch;
use crate::ratio::Ratio;
use crate::tree::VertexId;

/// How a candidate set was obtained.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// A run of `path_length` vertices of degree 2 in `Θᵏ`, with the
    /// trimmed-away parts hanging off it added back.
    BranchlessPath { trim_level: usize, path_length: usize },
    /// An inessential subtree of `subtree_size` vertices minus its root;
    /// `root_neighbors` members touch the root.
    InessentialMinusRoot {
        root: String,
        subtree_size: usize,
        root_neighbors: usize,
    },
    /// Minimum of an exhaustive search.
    Enumerated,
    /// Supplied by the caller.
    User,
    /// The entire (finite) host.
    WholeTree,
    /// The first generations of a sampled tree.
    Truncation { generations: usize },
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Provenance::BranchlessPath { .. } => "branchless-path",
            Provenance::InessentialMinusRoot { .. } => "inessential-minus-root",
            Provenance::Enumerated => "enumerated",
            Provenance::User => "user",
            Provenance::WholeTree => "whole-tree",
            Provenance::Truncation { .. } => "truncation",
        }
    }
}

/// A finite vertex set with its exact boundary ratio.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FolnerCandidate<V> {
    /// Sorted.
    pub members: Vec<V>,
    /// Sorted.
    pub boundary: Vec<V>,
    pub ratio: Ratio,
    pub provenance: Provenance,
}

impl<V: Ord + Clone> FolnerCandidate<V> {
    pub fn new(mut members: Vec<V>, mut boundary: Vec<V>, provenance: Provenance) -> Self {
        members.sort();
        members.dedup();
        boundary.sort();
        boundary.dedup();
        let ratio = Ratio::from_counts(boundary.len(), members.len());
        FolnerCandidate {
            members,
            boundary,
            ratio,
            provenance,
        }
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Total order used to pick among candidates: smaller ratio, then
    /// smaller set, then lexicographically smaller members.
    pub fn precedes(&self, other: &Self) -> bool {
        (self.ratio, self.members.len(), &self.members) < (other.ratio, other.members.len(), &other.members)
    }

    pub fn map<W: Ord + Clone>(&self, f: impl Fn(&V) -> W) -> FolnerCandidate<W> {
        FolnerCandidate::new(
            self.members.iter().map(&f).collect(),
            self.boundary.iter().map(&f).collect(),
            self.provenance.clone(),
        )
    }
}

/// Keeps the better of two optional candidates under [`FolnerCandidate::precedes`].
pub fn better_of<V: Ord + Clone>(
    a: Option<FolnerCandidate<V>>,
    b: Option<FolnerCandidate<V>>,
) -> Option<FolnerCandidate<V>> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => Some(if b.precedes(&a) { b } else { a }),
    }
}

pub fn patch_candidate(
    patch: &Patch,
    members: &[VertexId],
    provenance: Provenance,
) -> Result<FolnerCandidate<VertexId>> {
    let sel = patch.select(members)?;
    let boundary = sel.boundary()?.to_vec();
    Ok(FolnerCandidate::new(sel.members().to_vec(), boundary, provenance))
}

pub fn oracle_candidate<O: TreeOracle>(
    oracle: &O,
    members: &[O::Vertex],
    provenance: Provenance,
) -> Result<FolnerCandidate<O::Vertex>> {
    if members.is_empty() {
        return Err(Error::EmptySelection);
    }
    Ok(FolnerCandidate::new(
        members.to_vec(),
        oracle_boundary(oracle, members),
        provenance,
    ))
}

/// `S` = an inessential subtree minus its root. The ratio reported is the
/// exact one under the inner-boundary convention: the members of `S`
/// adjacent to the root, over `|S|`. It equals `1/(k-1)` exactly when a
/// single member touches the root.
pub fn folner_from_inessential<O: TreeOracle>(
    oracle: &O,
    ines: &InessentialSubtree<O::Vertex>,
) -> Result<FolnerCandidate<O::Vertex>> {
    if ines.size() < 2 {
        return Err(Error::NoEdge);
    }
    let rest: Vec<O::Vertex> = ines
        .members
        .iter()
        .filter(|m| **m != ines.root)
        .cloned()
        .collect();
    let root_neighbors: HashSet<O::Vertex> = oracle.neighbors(&ines.root).into_iter().collect();
    let touching = rest.iter().filter(|m| root_neighbors.contains(m)).count();
    oracle_candidate(
        oracle,
        &rest,
        Provenance::InessentialMinusRoot {
            root: ines.root.to_string(),
            subtree_size: ines.size(),
            root_neighbors: touching,
        },
    )
}

/// Exact minimum over a searched family.
#[derive(Clone, Debug, Serialize)]
pub struct CheegerResult<V> {
    pub value: Ratio,
    pub argmin: FolnerCandidate<V>,
    pub scope: CheegerScope,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheegerScope {
    pub max_size: usize,
    pub region: String,
    pub region_vertices: usize,
    pub subsets_examined: u128,
    /// True when the host is finite and entirely inside the region, in
    /// which case `value` is the exact minimum over sets of at most
    /// `max_size` vertices; otherwise it is an upper bound on the
    /// isoperimetric constant of the host.
    pub whole_host: bool,
}

/// Exhaustive search on a patch over connected subsets of the allowed
/// vertices.
pub fn cheeger_on_patch(
    patch: &Patch,
    allowed: &[bool],
    max_size: usize,
    guard: u128,
    region: String,
) -> Result<CheegerResult<VertexId>> {
    let n = patch.tree().vertex_count();
    let whole_host = !patch.has_exterior() && allowed.iter().all(|&a| a);
    if whole_host && n <= max_size {
        // nothing beats an empty boundary
        let members: Vec<VertexId> = (0..n).collect();
        return Ok(CheegerResult {
            value: Ratio::zero(),
            argmin: FolnerCandidate::new(members, Vec::new(), Provenance::WholeTree),
            scope: CheegerScope {
                max_size,
                region,
                region_vertices: n,
                subsets_examined: 1,
                whole_host,
            },
        });
    }
    let best = min_ratio_connected(patch, allowed, max_size, guard)?.ok_or_else(|| {
        Error::Precondition("the search region has no admissible vertex".into())
    })?;
    let sel = patch.select(&best.members)?;
    let argmin = FolnerCandidate::new(
        best.members.clone(),
        sel.boundary()?.to_vec(),
        Provenance::Enumerated,
    );
    debug_assert_eq!(argmin.ratio, best.ratio);
    Ok(CheegerResult {
        value: best.ratio,
        argmin,
        scope: CheegerScope {
            max_size,
            region,
            region_vertices: allowed.iter().filter(|&&a| a).count(),
            subsets_examined: best.examined,
            whole_host: !patch.has_exterior() && allowed.iter().all(|&a| a),
        },
    })
}

/// Exhaustive search over connected subsets of at most `max_size` vertices
/// inside the ball of radius `radius` around `center`, avoiding the ball's
/// frontier so every boundary is exact.
pub fn cheeger_exact<O: TreeOracle>(
    oracle: &O,
    center: &O::Vertex,
    radius: usize,
    max_size: usize,
    max_vertices: usize,
    guard: Option<u128>,
) -> Result<CheegerResult<O::Vertex>> {
    let ball = explore_ball(oracle, center, radius, max_vertices)?;
    let whole = !ball.patch.has_exterior();
    let allowed: Vec<bool> = (0..ball.handles.len())
        .map(|i| whole || ball.dist[i] < radius)
        .collect();
    let res = cheeger_on_patch(
        &ball.patch,
        &allowed,
        max_size,
        guard.unwrap_or(DEFAULT_GUARD),
        format!("ball({center}, {radius})"),
    )?;
    Ok(CheegerResult {
        value: res.value,
        argmin: res.argmin.map(|&i| ball.handles[i].clone()),
        scope: res.scope,
    })
}

/// A connected component of `members` whose ratio is at most `epsilon`,
/// given that the whole set satisfies `|∂A| <= epsilon |A|`.
pub fn folner_refine_connected(
    patch: &Patch,
    members: &[VertexId],
    epsilon: Ratio,
) -> Result<Vec<VertexId>> {
    let sel = patch.select(members)?;
    if sel.ratio()? > epsilon {
        return Err(Error::Precondition(format!(
            "the set has ratio {} above {epsilon}",
            sel.ratio()?
        )));
    }
    let tree = patch.tree();
    let mut seen = vec![false; patch.vertex_count()];
    let mut best: Option<FolnerCandidate<VertexId>> = None;
    for &start in sel.members() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &w in tree.neighbors(u) {
                if sel.contains(w) && !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                    stack.push(w);
                }
            }
        }
        let cand = patch_candidate(patch, &comp, Provenance::User)?;
        best = better_of(best, Some(cand));
    }
    let best = best.expect("a nonempty set has a component");
    if best.ratio > epsilon {
        // unreachable when boundaries are computed consistently
        return Err(Error::Precondition("no component meets the ratio".into()));
    }
    Ok(best.members)
}

/// One element `A'ₙ = Bₙ ∪ A_k` of an exhausting Følner sequence.
#[derive(Clone, Debug, Serialize)]
pub struct ExhaustingStep {
    pub index: usize,
    pub witness: usize,
    pub members: Vec<VertexId>,
    pub ratio: Ratio,
    /// `(|Bₙ| + |∂A_k|) / |A_k|`.
    pub bound: Ratio,
}

/// Combines witnesses with a cover: for each cover set `Bₙ` picks the first
/// witness `A_k` (not earlier than the previous choice) with
/// `|A_k| >= |Bₙ|²` and returns `Bₙ ∪ A_k`. On a finite host a cover set
/// that is the entire host is returned as is, with ratio 0.
pub fn folner_exhausting(
    patch: &Patch,
    witnesses: &[Vec<VertexId>],
    cover: &[Vec<VertexId>],
) -> Result<Vec<ExhaustingStep>> {
    if witnesses.len() < 2 {
        return Err(Error::Precondition(
            "an exhausting sequence needs a sequence of witnesses, not a single set".into(),
        ));
    }
    let ratios: Vec<Ratio> = witnesses
        .iter()
        .map(|w| patch.select(w)?.ratio())
        .collect::<Result<_>>()?;
    if ratios.last() >= ratios.first() && *ratios.last().unwrap() != Ratio::zero() {
        return Err(Error::Precondition(
            "witness ratios do not decrease along the sequence".into(),
        ));
    }
    let n = patch.vertex_count();
    let mut out = Vec::with_capacity(cover.len());
    let mut k = 0;
    for (index, b) in cover.iter().enumerate() {
        let b_sel = patch.select(b)?;
        if !patch.has_exterior() && b_sel.len() == n {
            out.push(ExhaustingStep {
                index,
                witness: usize::MAX,
                members: b_sel.members().to_vec(),
                ratio: Ratio::zero(),
                bound: Ratio::zero(),
            });
            continue;
        }
        let need = b_sel.len() * b_sel.len();
        while k < witnesses.len() && witnesses[k].len() < need {
            k += 1;
        }
        if k == witnesses.len() {
            return Err(Error::Precondition(format!(
                "no witness has the {need} vertices needed for cover set {index}"
            )));
        }
        let a = patch.select(&witnesses[k])?;
        let mut union: Vec<VertexId> = b_sel.members().to_vec();
        union.extend_from_slice(a.members());
        let u = patch.select(&union)?;
        let ratio = u.ratio()?;
        let bound = Ratio::from_counts(b_sel.len() + a.boundary()?.len(), a.len());
        debug_assert!(ratio <= bound);
        out.push(ExhaustingStep {
            index,
            witness: k,
            members: u.members().to_vec(),
            ratio,
            bound,
        });
    }
    Ok(out)
}

/// Grows a connected set from `start` by repeatedly adding a uniformly
/// chosen outside neighbor, until it has `size` vertices or cannot grow.
pub fn random_connected_subset<O: TreeOracle, R: Rng>(
    oracle: &O,
    start: &O::Vertex,
    size: usize,
    rng: &mut R,
) -> Vec<O::Vertex> {
    let mut members = vec![start.clone()];
    let mut inside: HashSet<O::Vertex> = HashSet::from([start.clone()]);
    let mut frontier: Vec<O::Vertex> = oracle.neighbors(start);
    let mut queued: HashSet<O::Vertex> = frontier.iter().cloned().collect();
    while members.len() < size && !frontier.is_empty() {
        let pick = frontier.swap_remove(rng.gen_range(0..frontier.len()));
        inside.insert(pick.clone());
        for w in oracle.neighbors(&pick) {
            if !inside.contains(&w) && queued.insert(w.clone()) {
                frontier.push(w);
            }
        }
        members.push(pick);
    }
    members
}

/// Patch form of [`random_connected_subset`], restricted to `allowed`.
pub fn random_connected_subset_patch<R: Rng>(
    patch: &Patch,
    allowed: &[bool],
    start: VertexId,
    size: usize,
    rng: &mut R,
) -> Vec<VertexId> {
    let tree = patch.tree();
    let mut members = vec![start];
    let mut queued = vec![false; patch.vertex_count()];
    queued[start] = true;
    let mut frontier: Vec<VertexId> = Vec::new();
    for &w in tree.neighbors(start) {
        if allowed[w] {
            queued[w] = true;
            frontier.push(w);
        }
    }
    while members.len() < size && !frontier.is_empty() {
        let pick = frontier.swap_remove(rng.gen_range(0..frontier.len()));
        for &w in tree.neighbors(pick) {
            if allowed[w] && !queued[w] {
                queued[w] = true;
                frontier.push(w);
            }
        }
        members.push(pick);
    }
    members
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{Fixture, FixtureVertex};
    use crate::inessential::inessential_in;
    use crate::tree::Tree;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use FixtureVertex::*;

    #[test]
    fn cheeger_examples() {
        let r3 = Fixture::Regular(3);
        let res = cheeger_exact(&r3, &r3.root(), 4, 6, 10_000, None).unwrap();
        assert!(res.value >= Ratio::new(1, 2));
        let line = Fixture::Regular(2);
        let res = cheeger_exact(&line, &line.root(), 10, 10, 10_000, None).unwrap();
        assert_eq!(res.value, Ratio::new(1, 5));
        assert_eq!(res.argmin.size(), 10);
        let res = cheeger_exact(&r3, &r3.root(), 2, 1, 10_000, None).unwrap();
        assert_eq!(res.value, Ratio::new(1, 1));
        let finite = Tree::star(4);
        let res = cheeger_exact(&finite, &0, 5, 5, 100, None).unwrap();
        assert_eq!(res.value, Ratio::zero());
        assert!(res.scope.whole_host);
    }

    #[test]
    fn inessential_ratios() {
        let z = Fixture::ZLinePendant;
        let pendant = inessential_in(&z, &[Line(0), Pendant(0)]).unwrap();
        assert_eq!(folner_from_inessential(&z, &pendant).unwrap().ratio, Ratio::new(1, 1));
        let s = Fixture::Staircase(2);
        for i in 1..6u64 {
            let column: Vec<_> = (0..=2 * i).map(|j| Grid(i, j)).collect();
            let ines = inessential_in(&s, &column).unwrap();
            let c = folner_from_inessential(&s, &ines).unwrap();
            assert_eq!(c.ratio, Ratio::new(1, 2 * i));
        }
        let ray = Fixture::Sary(1);
        let deep: Vec<_> = (0..101).map(|l| Word(vec![0; l])).collect();
        let mut members = deep.clone();
        members.truncate(101);
        let ines = inessential_in(&ray, &members).unwrap();
        assert_eq!(ines.root, Word(vec![0; 100]));
        assert_eq!(folner_from_inessential(&ray, &ines).unwrap().ratio, Ratio::new(1, 100));
    }

    #[test]
    fn star_shaped_subtree_has_the_larger_ratio() {
        // leaves 1..=3 on the root 0, which continues through 4 - 5
        let t = Tree::from_edges(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (4, 5)]).unwrap();
        let ines = InessentialSubtree {
            root: 0,
            members: vec![0, 1, 2, 3],
        };
        let c = folner_from_inessential(&t, &ines).unwrap();
        assert_eq!(c.ratio, Ratio::new(3, 3));
        assert!(matches!(c.provenance, Provenance::InessentialMinusRoot { root_neighbors: 3, .. }));
    }

    #[test]
    fn refine_picks_the_good_component() {
        // a ball of the line, radius 12: positions 0..=24, ends continue
        let n = 25;
        let mut hidden = vec![Some(0); n];
        hidden[0] = Some(1);
        hidden[n - 1] = Some(1);
        let p = Patch::with_exterior(Tree::path(n), hidden).unwrap();
        let mut a: Vec<usize> = (2..22).collect(); // ratio 2/20
        a.retain(|&v| v != 20);
        a.push(23);
        // components: 2..=19 (18 vertices, ratio 1/9) and {21} and {23}
        let eps = p.select(&a).unwrap().ratio().unwrap();
        let comp = folner_refine_connected(&p, &a, eps).unwrap();
        assert_eq!(comp, (2..20).collect::<Vec<_>>());
        let path: Vec<usize> = (5..15).collect();
        assert_eq!(folner_refine_connected(&p, &path, Ratio::new(1, 5)).unwrap(), path);
        assert!(folner_refine_connected(&p, &path, Ratio::new(1, 10)).is_err());
    }

    #[test]
    fn exhausting_on_a_line() {
        let n = 401;
        let mid = 200;
        let mut hidden = vec![Some(0); n];
        hidden[0] = Some(1);
        hidden[n - 1] = Some(1);
        let p = Patch::with_exterior(Tree::path(n), hidden).unwrap();
        let witnesses: Vec<Vec<usize>> = (1..=6).map(|s| (mid - 30 * s..mid + 30 * s).collect()).collect();
        let cover: Vec<Vec<usize>> = (1..=6).map(|r| (mid - r..=mid + r).collect()).collect();
        let steps = folner_exhausting(&p, &witnesses, &cover).unwrap();
        for (i, s) in steps.iter().enumerate() {
            assert!(s.ratio <= s.bound);
            for v in &cover[i] {
                assert!(s.members.contains(v));
            }
        }
        assert!(folner_exhausting(&p, &witnesses[..1], &cover).is_err());
        let closed = Patch::closed(Tree::path(5));
        let steps = folner_exhausting(&closed, &[vec![2], vec![0, 1]], &[vec![0, 1, 2, 3, 4]]).unwrap();
        assert_eq!(steps[0].ratio, Ratio::zero());
    }

    #[test]
    fn random_subsets_are_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r3 = Fixture::Regular(3);
        for size in 1..20 {
            let s = random_connected_subset(&r3, &r3.root(), size, &mut rng);
            assert_eq!(s.len(), size);
            assert_eq!(s.iter().collect::<HashSet<_>>().len(), size);
        }
        let t = Tree::path(4);
        assert_eq!(random_connected_subset(&t, &0, 10, &mut rng).len(), 4);
    }
}
