use std::collections::HashSet;

use proptest::prelude::*;

use arbor::amenability::{cheeger_on_patch, min_degree3_bound_check_patch};
use arbor::canonical::{canonical_form, rooted_code};
use arbor::enumerate::DEFAULT_GUARD;
use arbor::gw::{generation_sizes, sample, sample_trial, GwSpec};
use arbor::inessential::is_inessential;
use arbor::patch::{edge_complement_is_connected, Patch};
use arbor::tree::{parse_child_list, parse_edge_list, to_child_list, to_edge_list};
use arbor::trimming::{trim, trim_orbit};
use arbor::{Ratio, Tree};

/// A random tree from a parent vector: vertex `i > 0` hangs below
/// `parent_seed[i - 1] % i`.
fn tree_strategy(max_n: usize) -> impl Strategy<Value = Tree> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<usize>(), n - 1).prop_map(move |seeds| {
            let edges: Vec<(usize, usize)> =
                seeds.iter().enumerate().map(|(i, s)| (s % (i + 1), i + 1)).collect();
            Tree::from_edges(n, &edges).unwrap()
        })
    })
}

fn permuted(tree: &Tree, seed: u64) -> Tree {
    let n = tree.vertex_count();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut x = seed | 1;
    for i in (1..n).rev() {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        perm.swap(i, (x % (i as u64 + 1)) as usize);
    }
    tree.relabel(&perm)
}

/// `|∂A|` counted directly from adjacency.
fn brute_boundary(tree: &Tree, members: &[usize]) -> usize {
    let set: HashSet<usize> = members.iter().copied().collect();
    members
        .iter()
        .filter(|&&v| tree.neighbors(v).iter().any(|u| !set.contains(u)))
        .count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn one_trim_removes_exactly_the_leaves(tree in tree_strategy(40)) {
        let n = tree.vertex_count();
        let after = trim(&tree).vertex_count();
        if n == 2 {
            prop_assert_eq!(after, 0);
        } else {
            prop_assert_eq!(after, n - tree.leaves().len());
        }
    }

    #[test]
    fn finite_trees_stabilize_or_die_within_the_radius(tree in tree_strategy(40)) {
        let orbit = trim_orbit(&tree, tree.vertex_count() + 1).unwrap();
        let counts = orbit.counts();
        prop_assert!(counts.windows(2).all(|w| w[1] < w[0]));
        let last = *counts.last().unwrap();
        // a finite tree ends in its center: one vertex, or nothing for a bicentral tree
        prop_assert!(last <= 1);
        prop_assert!(counts.len() <= tree.diameter() / 2 + 2);
    }

    #[test]
    fn relabeling_preserves_shape_and_orbit(tree in tree_strategy(30), seed in any::<u64>()) {
        let other = permuted(&tree, seed);
        prop_assert_eq!(canonical_form(&tree), canonical_form(&other));
        prop_assert_eq!(
            trim_orbit(&tree, 40).unwrap().counts(),
            trim_orbit(&other, 40).unwrap().counts()
        );
    }

    #[test]
    fn serializations_round_trip(tree in tree_strategy(30)) {
        let back = parse_edge_list(&to_edge_list(&tree)).unwrap();
        prop_assert_eq!(canonical_form(&back), canonical_form(&tree));
        let rooted = tree.clone().with_root(0).unwrap();
        let back = parse_child_list(&to_child_list(&rooted)).unwrap();
        prop_assert_eq!(rooted_code(&back, back.root().unwrap()), rooted_code(&rooted, 0));
    }

    #[test]
    fn selection_boundary_matches_direct_count(tree in tree_strategy(25), mask in any::<u32>()) {
        let patch = Patch::closed(tree.clone());
        let members: Vec<usize> = tree.vertices().filter(|&v| mask >> (v % 32) & 1 == 1).collect();
        prop_assume!(!members.is_empty());
        let sel = patch.select(&members).unwrap();
        prop_assert_eq!(sel.boundary().unwrap().len(), brute_boundary(&tree, &members));
        let r = sel.ratio().unwrap();
        prop_assert!(r <= Ratio::new(1, 1));
    }

    #[test]
    fn inessential_check_agrees_with_complement(tree in tree_strategy(14), start in any::<usize>(), grow in any::<u64>()) {
        let patch = Patch::closed(tree.clone());
        let n = tree.vertex_count();
        prop_assume!(n >= 3);
        // grow a connected set from `start` using the bits of `grow`
        let mut members = vec![start % n];
        let mut bits = grow;
        for _ in 0..n {
            let candidates: Vec<usize> = members
                .iter()
                .flat_map(|&v| tree.neighbors(v).iter().copied())
                .filter(|u| !members.contains(u))
                .collect();
            if candidates.is_empty() || bits & 3 == 0 {
                break;
            }
            members.push(candidates[(bits >> 2) as usize % candidates.len()]);
            bits >>= 5;
        }
        prop_assume!(members.len() >= 2 && members.len() < n);
        prop_assert_eq!(
            is_inessential(&patch, &members).unwrap(),
            edge_complement_is_connected(&patch, &members).unwrap()
        );
    }

    #[test]
    fn finite_cheeger_is_zero(tree in tree_strategy(12)) {
        let patch = Patch::closed(tree.clone());
        let all = vec![true; tree.vertex_count()];
        let res = cheeger_on_patch(&patch, &all, tree.vertex_count(), DEFAULT_GUARD, "all".into()).unwrap();
        prop_assert_eq!(res.value, Ratio::zero());
    }

    #[test]
    fn gw_samples_are_inductive(seed in any::<u64>(), trial in 0u64..1000) {
        let spec = GwSpec::from_probs(vec![0.2, 0.3, 0.3, 0.2]).unwrap();
        let s = sample_trial(&spec, seed, trial, 8, 5000).unwrap();
        prop_assert!(s.is_inductive());
        prop_assert_eq!(s.generation_sizes.iter().take(s.depth + 1).sum::<usize>(), s.vertex_count());
        prop_assert_eq!(&s, &sample_trial(&spec, seed, trial, 8, 5000).unwrap());
        if s.truncated_at.is_none() || s.extinct {
            let sizes = generation_sizes(&spec, seed, trial, s.depth);
            prop_assert_eq!(&sizes[..], &s.generation_sizes[..=s.depth]);
        }
    }

    #[test]
    fn min_degree_three_samples_obey_the_bound(seed in any::<u64>(), mask in any::<u64>()) {
        let spec = GwSpec::from_probs(vec![0.0, 0.0, 0.4, 0.6]).unwrap();
        let s = sample(&spec, seed, 4, 10_000).unwrap();
        let patch = s.to_patch();
        // the set of vertices in generations up to the first that `mask` picks
        let cut = (mask % 4) as usize + 1;
        let members: Vec<usize> = (0..s.vertex_count()).filter(|&v| s.generation[v] < cut).collect();
        let rep = min_degree3_bound_check_patch(&patch, &members, Some(0)).unwrap();
        prop_assert!(rep.holds);
    }
}

/// Sibling subtrees are exchangeable: given at least two children, the first
/// child has more offspring than the second as often as the reverse.
#[test]
fn siblings_are_exchangeable() {
    let spec = GwSpec::from_probs(vec![0.2, 0.3, 0.5]).unwrap();
    let (mut first, mut second, mut pairs) = (0i64, 0i64, 0i64);
    for t in 0..40_000u64 {
        let s = sample_trial(&spec, 5, t, 2, 100).unwrap();
        let kids = s.children(0);
        if kids.len() < 2 {
            continue;
        }
        pairs += 1;
        let (a, b) = (s.offspring[kids[0]], s.offspring[kids[1]]);
        first += i64::from(a > b);
        second += i64::from(b > a);
    }
    let diff = (first - second) as f64;
    // each pair contributes +1, -1 or 0, so the variance is at most `pairs`
    let se = ((first + second) as f64).sqrt();
    assert!(pairs > 10_000);
    assert!(diff.abs() <= 4.0 * se, "first {first} second {second} pairs {pairs}");
}

#[test]
fn offspring_frequencies_match_the_distribution() {
    let spec = GwSpec::from_probs(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let mut counts = [0usize; 4];
    let trials = 50_000;
    for t in 0..trials {
        let s = sample_trial(&spec, 3, t, 1, 100).unwrap();
        counts[s.offspring[0]] += 1;
    }
    for (k, &c) in counts.iter().enumerate() {
        let p = spec.prob(k);
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        let f = c as f64 / trials as f64;
        assert!((f - p).abs() <= 4.0 * se, "k = {k}: {f} vs {p}");
    }
}
