//! Acceptance criteria, one line per criterion. Runs without the libtest
//! harness so the summary is always printed; exits nonzero if any fails.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use arbor::amenability::{
    classify, min_degree3_bound_check, random_connected_subset, sandwich_check, ClassifyParams,
    Provenance,
};
use arbor::canonical::{rooted_code, sary_tree};
use arbor::fixtures::Fixture;
use arbor::gw::{
    event_path_prob, event_sary_prob, event_sary_prob_exact, generation_growth_check,
    monte_carlo_event, verify_dichotomy, DichotomyParams, EventPredicate, GwSpec,
};
use arbor::inessential::is_inessential;
use arbor::oracle::{explore_ball, TreeOracle};
use arbor::patch::Patch;
use arbor::trimming::{trim_depth, trimmed_ball, TrimDepth};
use arbor::{Ratio, Tree};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Verdict) -> Verdict {
    let start = Instant::now();
    let mut v = f();
    let took = start.elapsed();
    v.detail.push_str(&format!(" [{:.2}s", took.as_secs_f64()));
    if let Some(limit) = limit {
        v.detail.push_str(&format!(" < {}s", limit.as_secs()));
        if took >= limit {
            v.pass = false;
        }
    }
    v.detail.push(']');
    v
}

fn random_tree(rng: &mut ChaCha8Rng, max_n: usize) -> Tree {
    let n = rng.gen_range(1..=max_n);
    let edges: Vec<(usize, usize)> = (1..n).map(|i| (rng.gen_range(0..i), i)).collect();
    // shuffle labels so vertex 0 is not always an ancestor of everything
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let edges: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
    Tree::from_edges(n, &edges).unwrap()
}

/// `|∂A|` under the inner convention, straight from the neighbor query.
fn boundary_size<O: TreeOracle>(oracle: &O, members: &[O::Vertex]) -> usize {
    let set: HashSet<&O::Vertex> = members.iter().collect();
    set.iter()
        .filter(|v| oracle.neighbors(v).iter().any(|u| !set.contains(u)))
        .count()
}

fn c1_min_degree3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut violations = 0;
    let mut oracle_violations = 0;
    let mut checked = 0;
    for k in [3, 4] {
        let f = Fixture::Regular(k);
        let ball = explore_ball(&f, &f.root(), 6, 1_000_000).unwrap();
        let starts: Vec<_> = ball.handles.iter().filter(|h| ball.dist[ball.index[*h]] < 2).cloned().collect();
        for _ in 0..10_000 {
            let start = &starts[rng.gen_range(0..starts.len())];
            let size = rng.gen_range(1..=20);
            let members = random_connected_subset(&f, start, size, &mut rng);
            let report = min_degree3_bound_check(&f, &members, None).unwrap();
            violations += usize::from(!report.holds);
            oracle_violations += usize::from(members.len() > 2 * boundary_size(&f, &members));
            checked += 1;
        }
    }
    verdict(
        violations == 0 && oracle_violations == 0,
        format!("{checked} subsets, {violations} violations, {oracle_violations} by direct count"),
    )
}

/// Brute force: the host edges outside the subtree form a connected graph.
fn complement_connected(tree: &Tree, members: &[usize]) -> bool {
    let inside: HashSet<usize> = members.iter().copied().collect();
    let rest: Vec<(usize, usize)> = tree
        .edges()
        .into_iter()
        .filter(|(u, v)| !(inside.contains(u) && inside.contains(v)))
        .collect();
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for &(u, v) in &rest {
        adj.entry(u).or_default().push(v);
        adj.entry(v).or_default().push(u);
    }
    let Some(&first) = adj.keys().next() else {
        return false;
    };
    let mut seen = HashSet::from([first]);
    let mut stack = vec![first];
    while let Some(x) = stack.pop() {
        for &y in &adj[&x] {
            if seen.insert(y) {
                stack.push(y);
            }
        }
    }
    seen.len() == adj.len()
}

/// Every connected vertex subset with at least one edge, by brute force
/// over bitmasks.
fn connected_subtrees(tree: &Tree) -> Vec<Vec<usize>> {
    let n = tree.vertex_count();
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        if members.len() < 2 {
            continue;
        }
        let mut seen = 1u32 << members[0];
        let mut stack = vec![members[0]];
        while let Some(x) = stack.pop() {
            for &y in tree.neighbors(x) {
                if mask >> y & 1 == 1 && seen >> y & 1 == 0 {
                    seen |= 1 << y;
                    stack.push(y);
                }
            }
        }
        if seen == mask {
            out.push(members);
        }
    }
    out
}

fn c2_inessential_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut checked, mut disagreements, mut trees) = (0, 0, 0);
    while trees < 200 {
        let tree = random_tree(&mut rng, 12);
        if tree.vertex_count() < 3 {
            continue;
        }
        trees += 1;
        let patch = Patch::closed(tree.clone());
        for members in connected_subtrees(&tree) {
            if members.len() == tree.vertex_count() {
                // no outside edges: neither notion applies
                continue;
            }
            let fast = is_inessential(&patch, &members).unwrap();
            checked += 1;
            disagreements += usize::from(fast != complement_connected(&tree, &members));
        }
    }
    verdict(
        disagreements == 0,
        format!("{trees} trees, {checked} subtrees, {disagreements} disagreements"),
    )
}

/// Direct orbit: stage sets by repeated leaf removal.
fn stage_sets(tree: &Tree, steps: usize) -> Vec<HashSet<usize>> {
    let mut alive: HashSet<usize> = tree.vertices().collect();
    let mut out = vec![alive.clone()];
    for _ in 0..steps {
        let leaves: Vec<usize> = alive
            .iter()
            .copied()
            .filter(|&v| tree.neighbors(v).iter().filter(|u| alive.contains(u)).count() == 1)
            .collect();
        for v in leaves {
            alive.remove(&v);
        }
        out.push(alive.clone());
    }
    out
}

fn c3_trim_locality() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut checked, mut disagreements) = (0, 0);
    for _ in 0..500 {
        let tree = random_tree(&mut rng, 30);
        let stages = stage_sets(&tree, 6);
        for v in tree.vertices() {
            for (k, stage) in stages.iter().enumerate() {
                let local = match trim_depth(&tree, &v, k, 10_000).unwrap() {
                    TrimDepth::Survives => true,
                    TrimDepth::RemovedAt(j) => j > k,
                    TrimDepth::Unknown => unreachable!("trim_depth never returns Unknown"),
                };
                checked += 1;
                disagreements += usize::from(local != stage.contains(&v));
            }
        }
    }
    verdict(disagreements == 0, format!("{checked} checks, {disagreements} disagreements"))
}

fn c4_periodicity() -> Verdict {
    let mut mismatches = Vec::new();
    let mut checked = 0;
    for n in 1..=3u64 {
        let f = Fixture::Staircase(n);
        let code = |j: usize| trimmed_ball(&f, j, 8, 1_000_000).unwrap().code();
        let base: Vec<_> = (0..n as usize).map(code).collect();
        for j in 0..=3 * n as usize {
            checked += 1;
            if code(j) != base[j % n as usize] {
                mismatches.push(format!("n={n} j={j}"));
            }
        }
    }
    verdict(
        mismatches.is_empty(),
        format!("{checked} ball codes compared, mismatches: {mismatches:?}"),
    )
}

/// Recomputes `|∂A|/|A|` for a witness given by vertex names.
fn recheck_ratio(f: &Fixture, names: &HashMap<String, <Fixture as TreeOracle>::Vertex>, members: &[String]) -> Option<Ratio> {
    let vs: Vec<_> = members.iter().map(|m| names.get(m).cloned()).collect::<Option<_>>()?;
    Some(Ratio::from_counts(boundary_size(f, &vs), vs.len()))
}

fn c5_folner_ratios() -> Verdict {
    let mut problems = Vec::new();

    let z = Fixture::ZLinePendant;
    let report = classify(&z, &z.root(), &ClassifyParams::default()).unwrap();
    let ball = explore_ball(&z, &z.root(), 80, 1_000_000).unwrap();
    let names: HashMap<String, _> = ball.handles.iter().map(|h| (h.to_string(), h.clone())).collect();
    let rows: BTreeMap<usize, Ratio> = report.paths.iter().map(|p| (p.d, p.ratio)).collect();
    for d in 1..=50usize {
        let bound = Ratio::from_counts(2, d);
        match rows.get(&d) {
            Some(r) if *r <= bound => {}
            other => problems.push(format!("zline d={d}: {other:?}")),
        }
        // some listed witness meets the bound, and its ratio is what it claims
        let ok = report.witnesses.iter().any(|w| {
            w.ratio <= bound && recheck_ratio(&z, &names, &w.members) == Some(w.ratio)
        });
        if !ok {
            problems.push(format!("zline d={d}: no rechecked witness"));
        }
    }

    let s = Fixture::Staircase(1);
    let report = classify(&s, &s.root(), &ClassifyParams::default()).unwrap();
    let ball = explore_ball(&s, &s.root(), 130, 1_000_000).unwrap();
    let names: HashMap<String, _> = ball.handles.iter().map(|h| (h.to_string(), h.clone())).collect();
    for k in 2..=50usize {
        let target = Ratio::from_counts(1, k - 1);
        let found = report.witnesses.iter().any(|w| {
            matches!(w.provenance, Provenance::InessentialMinusRoot { .. })
                && w.ratio == target
                && recheck_ratio(&s, &names, &w.members) == Some(target)
        });
        if !found {
            problems.push(format!("staircase k={k}: no witness with ratio {target}"));
        }
    }
    verdict(
        problems.is_empty(),
        format!("zline d<=50 and staircase k<=50; problems: {problems:?}"),
    )
}

fn c6_sandwich() -> Verdict {
    let f = Fixture::SubdividedRegular { k: 3, m: 1 };
    let ball = explore_ball(&f, &f.root(), 6, 1_000_000).unwrap();
    let starts: Vec<_> = ball.handles.iter().filter(|h| ball.dist[ball.index[*h]] < 3).cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut checked, mut lower, mut upper, mut degenerate) = (0, 0, 0, 0);
    let mut example = None;
    while checked < 1000 {
        let start = &starts[rng.gen_range(0..starts.len())];
        let size = rng.gen_range(1..=20);
        let members = random_connected_subset(&f, start, size, &mut rng);
        match sandwich_check(&f, &members) {
            Ok(r) => {
                checked += 1;
                if !r.lower_holds {
                    lower += 1;
                    if example.is_none() {
                        example = Some(format!("|A|={} ratio {} vs contracted {}", r.size, r.ratio, r.contracted_ratio));
                    }
                }
                upper += usize::from(!r.upper_holds);
            }
            // a set inside one chain has no contracted image
            Err(arbor::Error::DegenerateImage) => degenerate += 1,
            Err(e) => panic!("{e}"),
        }
    }
    verdict(
        lower == 0 && upper == 0,
        format!(
            "{checked} subsets ({degenerate} without image skipped), lower violations {lower}, upper violations {upper}, first: {}",
            example.unwrap_or_else(|| "none".into())
        ),
    )
}

fn c7_case1() -> Verdict {
    let mut lines = Vec::new();
    let mut pass = true;
    for (p1, d) in [(0.5, 2usize), (0.7, 3)] {
        let spec = GwSpec::from_probs(vec![0.0, p1, 1.0 - p1]).unwrap();
        let q = event_path_prob(&spec, d);
        let trials = 100_000;
        let est = monte_carlo_event(&spec, &EventPredicate::Path { d }, trials, 7).unwrap();
        let se = (q * (1.0 - q) / trials as f64).sqrt();
        let ok = (est.estimate - q).abs() <= 3.0 * se;
        pass &= ok;
        lines.push(format!("p1={p1} d={d}: q={q:.6} mc={:.6} se={se:.6}", est.estimate));
    }
    verdict(pass, lines.join("; "))
}

struct Enumeration<'a> {
    p: &'a [Ratio],
    d: usize,
    target: arbor::canonical::CanonicalCode,
    total: Ratio,
}

impl Enumeration<'_> {
    /// Extends `parents` by every offspring assignment of `frontier`, the
    /// generation at `depth`.
    fn go(&mut self, parents: &mut Vec<Option<usize>>, frontier: Vec<usize>, depth: usize, prob: Ratio) {
        if depth > self.d {
            // generation d must be childless; any child there breaks the shape
            let tree = Tree::from_parents(parents).unwrap();
            if rooted_code(&tree, 0) == self.target {
                self.total = Ratio::from(self.total.inner() + prob.inner());
            }
            return;
        }
        let choices = self.p.len();
        let mut counts = vec![0usize; frontier.len()];
        loop {
            let pr = counts.iter().fold(prob.inner(), |acc, &c| acc * self.p[c].inner());
            if pr != num_rational::Ratio::from_integer(0) {
                let before = parents.len();
                let mut next = Vec::new();
                for (i, &v) in frontier.iter().enumerate() {
                    for _ in 0..counts[i] {
                        next.push(parents.len());
                        parents.push(Some(v));
                    }
                }
                self.go(parents, next, depth + 1, Ratio::from(pr));
                parents.truncate(before);
            }
            // next assignment, odometer style
            let mut i = 0;
            loop {
                if i == counts.len() {
                    return;
                }
                counts[i] += 1;
                if counts[i] < choices {
                    break;
                }
                counts[i] = 0;
                i += 1;
            }
        }
    }
}

/// Probability, by enumerating every offspring outcome of generations
/// `0..=d`, that they form the complete `s`-ary tree of depth `d` with a
/// childless last generation.
fn enumerate_event(p: &[Ratio], s: usize, d: usize) -> Ratio {
    let mut e = Enumeration {
        p,
        d,
        target: rooted_code(&sary_tree(s, d), 0),
        total: Ratio::zero(),
    };
    e.go(&mut vec![None], vec![0], 0, Ratio::new(1, 1));
    e.total
}

fn c8_case2() -> Verdict {
    let mut problems = Vec::new();
    let dists: [&[(u64, u64)]; 3] = [
        &[(1, 2), (0, 1), (1, 2)],
        &[(1, 5), (3, 10), (1, 2)],
        &[(1, 3), (1, 3), (1, 6), (1, 6)],
    ];
    let mut compared = 0;
    for dist in dists {
        let p: Vec<Ratio> = dist.iter().map(|&(a, b)| Ratio::new(a, b)).collect();
        let spec = GwSpec::from_ratios(p.clone()).unwrap();
        for s in 1..p.len() {
            for d in 0..=2 {
                let formula = event_sary_prob_exact(&spec, s, d).unwrap();
                let brute = enumerate_event(&p, s, d);
                compared += 1;
                if formula != brute {
                    problems.push(format!("{dist:?} s={s} d={d}: {formula} vs {brute}"));
                }
            }
        }
    }
    let spec = GwSpec::from_ratios(vec![Ratio::new(1, 2), Ratio::zero(), Ratio::new(1, 2)]).unwrap();
    let q = event_sary_prob(&spec, 2, 1).q;
    let trials = 100_000;
    let est = monte_carlo_event(&spec, &EventPredicate::Sary { s: 2, d: 1 }, trials, 8).unwrap();
    let se = (q * (1.0 - q) / trials as f64).sqrt();
    if q != 0.125 || (est.estimate - q).abs() > 3.0 * se {
        problems.push(format!("mc {} vs {q} (se {se})", est.estimate));
    }
    verdict(
        problems.is_empty(),
        format!("{compared} exact comparisons; mc {:.5} vs 1/8; problems: {problems:?}", est.estimate),
    )
}

fn c9_growth() -> Verdict {
    let spec = GwSpec::from_probs(vec![0.0, 0.5, 0.5]).unwrap();
    let r = generation_growth_check(&spec, 6, 100_000, 9).unwrap();
    let expected = 1.5f64.powi(6);
    let ok = (r.empirical_mean - expected).abs() <= 4.0 * r.std_error;
    verdict(
        ok && r.within_4se,
        format!("mean {:.4} vs {expected:.4}, se {:.4}", r.empirical_mean, r.std_error),
    )
}

fn c10_non_amenable() -> Verdict {
    let mut lines = Vec::new();
    let mut pass = true;
    for p in [vec![0.0, 0.0, 0.0, 1.0], vec![0.0, 0.0, 0.5, 0.5]] {
        let spec = GwSpec::from_probs(p.clone()).unwrap();
        let params = DichotomyParams {
            trials: 20,
            subsets: 1000,
            ..DichotomyParams::default()
        };
        let r = verify_dichotomy(&spec, &params, 10).unwrap();
        let s = r.non_amenable.unwrap();
        let ok = s.bound_violations == 0 && s.degree_violations == 0 && s.cheeger_violations == 0;
        pass &= ok;
        lines.push(format!(
            "p={p:?}: {} subsets, {} bound, {} degree, {} cheeger violations, min {}",
            s.subsets_checked,
            s.bound_violations,
            s.degree_violations,
            s.cheeger_violations,
            s.cheeger_min.map(|c| c.to_string()).unwrap_or_default()
        ));
    }
    verdict(pass, lines.join("; "))
}

fn c11_amenable() -> Verdict {
    let spec = GwSpec::from_probs(vec![0.25, 0.25, 0.5]).unwrap();
    let params = DichotomyParams {
        d_list: vec![5],
        trials: 200,
        ..DichotomyParams::default()
    };
    let r = verify_dichotomy(&spec, &params, 11).unwrap();
    let row = &r.amenable[0];
    let bound = row.plan.bound.unwrap();
    let ok = row.fraction >= bound - 3.0 * row.std_error;
    verdict(
        ok,
        format!(
            "fraction {:.4} (se {:.4}) vs bound {bound:.6}, q={:.3e}, r={}",
            row.fraction, row.std_error, row.plan.q, row.plan.r
        ),
    )
}

fn c12_determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_arbor");
    let runs: [&[&str]; 5] = [
        &["gw", "sample", "--p", "1/4,1/4,1/2", "--seed", "7", "--depth", "8"],
        &["gw", "events", "--p", "0,0.5,0.5", "--d", "2", "--seed", "7", "--trials", "2000"],
        &["gw", "growth", "--p", "0,0.5,0.5", "--n", "5", "--seed", "7", "--trials", "2000"],
        &["gw", "dichotomy", "--p", "0.25,0.25,0.5", "--d", "3", "--seed", "7", "--trials", "10"],
        &["gw", "dichotomy", "--p", "0,0,1/2,1/2", "--seed", "7", "--trials", "4", "--subsets", "100"],
    ];
    let mut diffs = Vec::new();
    for args in runs {
        let outputs: Vec<Vec<u8>> = ["1", "3", "1"]
            .iter()
            .map(|w| {
                let out = Command::new(bin).args(args).args(["--workers", w]).output().unwrap();
                assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
                out.stdout
            })
            .collect();
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            diffs.push(args[1]);
        }
    }
    verdict(
        diffs.is_empty(),
        format!("{} commands x 3 runs (1 and 3 workers), differing: {diffs:?}", runs.len()),
    )
}

type Criterion = (&'static str, Option<u64>, fn() -> Verdict);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1 min-degree-3 bound", Some(10), c1_min_degree3),
        ("2 inessential oracle equivalence", Some(60), c2_inessential_oracle),
        ("3 trim locality", None, c3_trim_locality),
        ("4 trimming periodicity", None, c4_periodicity),
        ("5 Følner ratios", None, c5_folner_ratios),
        ("6 sandwich inequality", None, c6_sandwich),
        ("7 GW path event", Some(30), c7_case1),
        ("8 GW s-ary event", None, c8_case2),
        ("9 GW mean growth", None, c9_growth),
        ("10 dichotomy, non-amenable side", None, c10_non_amenable),
        ("11 dichotomy, amenable side", None, c11_amenable),
        ("12 determinism", None, c12_determinism),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let v = timed(limit.map(Duration::from_secs), run);
        println!("criterion {name}: {} {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("{failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
