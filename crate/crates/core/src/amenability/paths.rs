//! Witnesses built from long runs of degree-2 vertices in a trimmed tree.

use crate::error::{Error, Result};
use crate::oracle::{explore_ball_capped, TreeOracle};
use crate::trimming::LeveledBall;
use crate::tree::VertexId;

use super::{patch_candidate, FolnerCandidate, Provenance};

/// Adds back to a set of `Θᵏ` vertices everything trimmed away that hangs
/// off it. `None` when some hanging part is not entirely inside the ball.
pub fn lift_through_trim<V: Clone + Eq + std::hash::Hash>(
    lb: &LeveledBall<V>,
    k: usize,
    members: &[VertexId],
) -> Option<Vec<VertexId>> {
    let tree = lb.ball.tree();
    let mut inside = vec![false; tree.vertex_count()];
    let mut out = Vec::with_capacity(members.len());
    let mut stack = Vec::new();
    for &m in members {
        if lb.levels[m].alive_at(k) != Some(true) {
            return None;
        }
        if !inside[m] {
            inside[m] = true;
            out.push(m);
        }
    }
    for &m in members {
        for &w in tree.neighbors(m) {
            if !inside[w] && lb.levels[w].alive_at(k) == Some(false) {
                inside[w] = true;
                out.push(w);
                stack.push(w);
            }
        }
    }
    while let Some(u) = stack.pop() {
        if lb.ball.patch.hidden(u) != Some(0) {
            return None;
        }
        for &w in tree.neighbors(u) {
            if inside[w] {
                continue;
            }
            match lb.levels[w].alive_at(k) {
                Some(false) => {
                    inside[w] = true;
                    out.push(w);
                    stack.push(w);
                }
                // the hanging part attaches to a single surviving vertex
                Some(true) => {}
                None => return None,
            }
        }
    }
    out.sort_unstable();
    Some(out)
}

/// Maximal runs of vertices whose degree in `Θᵏ` is known to be 2, each in
/// path order.
pub fn path_windows<V: Clone + Eq + std::hash::Hash>(lb: &LeveledBall<V>, k: usize) -> Vec<Vec<VertexId>> {
    let tree = lb.ball.tree();
    let n = tree.vertex_count();
    let in_run: Vec<bool> = (0..n).map(|x| lb.trimmed_degree(x, k) == Some(2)).collect();
    let in_run = &in_run;
    let run_neighbors = |x: VertexId| tree.neighbors(x).iter().copied().filter(move |&w| in_run[w]);
    let mut seen = vec![false; n];
    let mut runs = Vec::new();
    for start in 0..n {
        if !in_run[start] || seen[start] || run_neighbors(start).count() > 1 {
            continue;
        }
        let mut run = vec![start];
        seen[start] = true;
        let mut cur = start;
        while let Some(next) = run_neighbors(cur).find(|&w| !seen[w]) {
            seen[next] = true;
            run.push(next);
            cur = next;
        }
        runs.push(run);
    }
    runs
}

/// Runs of `Θᵏ` together with the size each run vertex has once lifted.
pub(crate) struct LevelRuns {
    pub k: usize,
    pub runs: Vec<Vec<VertexId>>,
    pub weights: Vec<Vec<Option<usize>>>,
}

impl LevelRuns {
    pub fn new<V: Clone + Eq + std::hash::Hash>(lb: &LeveledBall<V>, k: usize) -> Self {
        let runs = path_windows(lb, k);
        let weights = runs
            .iter()
            .map(|run| {
                run.iter()
                    .map(|&x| lift_through_trim(lb, k, &[x]).map(|l| l.len()))
                    .collect()
            })
            .collect();
        LevelRuns { k, runs, weights }
    }

    /// Largest lifted size of a window of `d` consecutive run vertices.
    pub fn best_sum(&self, d: usize) -> Option<usize> {
        self.windows(d).map(|(_, _, s)| s).max()
    }

    /// `(run, start, lifted size)` of every fully known window.
    fn windows(&self, d: usize) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.weights.iter().enumerate().flat_map(move |(r, w)| {
            let mut out = Vec::new();
            if d > 0 && w.len() >= d {
                for start in 0..=w.len() - d {
                    let win = &w[start..start + d];
                    if win.iter().all(Option::is_some) {
                        out.push((r, start, win.iter().map(|x| x.unwrap()).sum()));
                    }
                }
            }
            out
        })
    }

    /// The best lifted window of `d` vertices whose lifted size is `sum`.
    pub fn materialize<V: Clone + Eq + std::hash::Hash>(
        &self,
        lb: &LeveledBall<V>,
        d: usize,
        sum: usize,
    ) -> Result<Option<FolnerCandidate<VertexId>>> {
        let mut best: Option<FolnerCandidate<VertexId>> = None;
        for (r, start, s) in self.windows(d) {
            if s != sum {
                continue;
            }
            let window = &self.runs[r][start..start + d];
            let lifted = lift_through_trim(lb, self.k, window).expect("weights were known");
            let cand = patch_candidate(
                &lb.ball.patch,
                &lifted,
                Provenance::BranchlessPath {
                    trim_level: self.k,
                    path_length: d,
                },
            )?;
            best = super::better_of(best, Some(cand));
        }
        Ok(best)
    }
}

/// The best lifted run of exactly `d` vertices of degree 2 in `Θᵏ`, found
/// in the ball of radius at most `radius` around `center`. Its ratio is at
/// most `2/d`.
pub fn folner_from_branchless_path<O: TreeOracle>(
    oracle: &O,
    center: &O::Vertex,
    k: usize,
    d: usize,
    radius: usize,
    max_vertices: usize,
) -> Result<Option<FolnerCandidate<O::Vertex>>> {
    if d == 0 {
        return Err(Error::InvalidInput("the path length must be positive".into()));
    }
    let lb = LeveledBall::new(explore_ball_capped(oracle, center, radius, max_vertices)?);
    let runs = LevelRuns::new(&lb, k);
    let Some(sum) = runs.best_sum(d) else {
        return Ok(None);
    };
    Ok(runs
        .materialize(&lb, d, sum)?
        .map(|c| c.map(|&i| lb.ball.handles[i].clone())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{Fixture, FixtureVertex::*};
    use crate::ratio::Ratio;

    #[test]
    fn ray_on_three_regular() {
        let f = Fixture::ThreeRegPlusRay;
        let c = folner_from_branchless_path(&f, &Ray(30), 0, 20, 21, 10_000)
            .unwrap()
            .unwrap();
        assert_eq!(c.size(), 20);
        assert_eq!(c.ratio, Ratio::new(1, 10));
        assert!(c.members.iter().all(|v| matches!(v, Ray(_))));
        // the only degree-2 vertices are on the ray
        let c = folner_from_branchless_path(&f, &f.root(), 0, 1, 4, 10_000)
            .unwrap()
            .unwrap();
        assert!(c.members.iter().all(|v| matches!(v, Ray(_))));
    }

    #[test]
    fn comb_needs_one_trim() {
        let f = Fixture::Comb;
        assert!(folner_from_branchless_path(&f, &f.root(), 0, 3, 10, 10_000)
            .unwrap()
            .is_none());
        let c = folner_from_branchless_path(&f, &f.root(), 1, 5, 10, 10_000)
            .unwrap()
            .unwrap();
        assert_eq!(c.size(), 10);
        assert_eq!(c.ratio, Ratio::new(1, 5));
    }

    #[test]
    fn zline_paths() {
        let f = Fixture::ZLinePendant;
        for d in [1, 2, 10, 50] {
            let c = folner_from_branchless_path(&f, &f.root(), 0, d, 64, 100_000)
                .unwrap()
                .unwrap();
            assert!(c.ratio <= Ratio::new(2, d as u64), "d = {d}");
        }
    }

    #[test]
    fn staircase_columns_are_paths() {
        let f = Fixture::Staircase(2);
        for k in 0..4 {
            let c = folner_from_branchless_path(&f, &f.root(), k, 3, 24, 100_000)
                .unwrap()
                .unwrap();
            assert!(c.ratio <= Ratio::new(2, 3));
        }
    }
}
