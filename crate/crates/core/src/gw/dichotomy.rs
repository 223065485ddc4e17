//! Monte Carlo checks of both sides of the amenability dichotomy for
//! Galton-Watson trees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::amenability::{
    cheeger_on_patch, min_degree3_bound_check_patch, random_connected_subset_patch,
    witnesses_in_patch, ClassifyParams,
};
use crate::canonical::{rooted_code, sary_tree};
use crate::enumerate::DEFAULT_GUARD;
use crate::error::{Error, Result};
use crate::ratio::Ratio;
use crate::tree::VertexId;

use super::events::{csv_err, event_path_prob, event_sary_prob, finish_csv};
use super::sample::{sample_trial, GwSample};
use super::GwSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `p_0 + p_1 > 0`.
    Amenable,
    /// `p_0 = p_1 = 0`.
    NonAmenable,
}

/// The finite event behind the amenable side, with the depths it needs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EventPlan {
    /// 1 when `p_0 = 0` (long paths), 2 otherwise (finite `s`-ary subtrees).
    pub case: u8,
    /// Branching of the finite subtree (case 2).
    pub s: Option<usize>,
    /// Probability of the event below one vertex.
    pub q: f64,
    pub r: usize,
    pub n: usize,
    /// Generations sampled: `n + d + 1`.
    pub depth: usize,
    /// `1 - (1 - q)^r`, case 2 only.
    pub bound: Option<f64>,
}

/// `r = d`, `n = r d` (so `r = √n`), and in case 2 the `s >= 1` with
/// `p_s > 0` that makes the `s`-ary event most likely.
pub fn event_plan(spec: &GwSpec, d: usize) -> Result<EventPlan> {
    if d == 0 {
        return Err(Error::InvalidInput("d must be positive".into()));
    }
    let (r, n) = (d, d * d);
    let depth = n + d + 1;
    if spec.prob(0) == 0.0 {
        if spec.prob(1) == 0.0 {
            return Err(Error::Precondition("the amenable side needs p_0 + p_1 > 0".into()));
        }
        return Ok(EventPlan {
            case: 1,
            s: None,
            q: event_path_prob(spec, d),
            r,
            n,
            depth,
            bound: None,
        });
    }
    let (s, q) = (1..=spec.max_offspring())
        .filter(|&s| spec.prob(s) > 0.0)
        .map(|s| (s, event_sary_prob(spec, s, d).q))
        .fold(None, |best: Option<(usize, f64)>, (s, q)| match best {
            Some((_, bq)) if bq >= q => best,
            _ => Some((s, q)),
        })
        .ok_or_else(|| Error::Precondition("every vertex is childless".into()))?;
    Ok(EventPlan {
        case: 2,
        s: Some(s),
        q,
        r,
        n,
        depth,
        bound: Some(1.0 - (1.0 - q).powi(r as i32)),
    })
}

#[derive(Clone, Debug)]
pub struct DichotomyParams {
    pub d_list: Vec<usize>,
    pub trials: usize,
    pub max_vertices: usize,
    /// Attempts per trial when conditioning on survival.
    pub retry_budget: usize,
    /// Random connected subsets per tree on the non-amenable side.
    pub subsets: usize,
    pub subset_max_size: usize,
    /// Generations kept for the exhaustive search on the non-amenable side.
    pub truncation_depth: usize,
    pub cheeger_max_size: usize,
    pub guard: u128,
}

impl Default for DichotomyParams {
    fn default() -> Self {
        DichotomyParams {
            d_list: vec![5],
            trials: 200,
            max_vertices: 200_000,
            retry_budget: 1000,
            subsets: 1000,
            subset_max_size: 20,
            truncation_depth: 3,
            cheeger_max_size: 8,
            guard: DEFAULT_GUARD,
        }
    }
}

/// Per-trial outcome. On the amenable side `best_ratio` is the smallest
/// witness ratio found; on the other side it is the exhaustive minimum on
/// the truncation.
#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub d: Option<usize>,
    pub trial: u64,
    pub attempts: usize,
    pub generation_sizes: Vec<usize>,
    pub best_ratio: Option<Ratio>,
    pub witness: Option<String>,
    pub success: bool,
    /// `W_n > r` (amenable side).
    pub exceeds_r: bool,
    /// Some vertex of generation `n` carries the planned finite subtree.
    pub planned_event: bool,
    pub violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct AmenableRow {
    pub d: usize,
    pub plan: EventPlan,
    pub trials: usize,
    pub successes: usize,
    pub fraction: f64,
    pub std_error: f64,
    /// `fraction >= bound - 3 SE` (case 2 only).
    pub meets_bound: Option<bool>,
    pub attempts: usize,
    pub acceptance_rate: f64,
    /// `1 - ρ`.
    pub survival_probability: f64,
    pub planned_events: usize,
    pub fallbacks: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct NonAmenableSummary {
    pub trials: usize,
    pub subsets_checked: usize,
    /// Sets violating `|A| <= 2|∂A| + slack`.
    pub bound_violations: usize,
    /// Sets violating `|A| <= 2|∂A|`, which may happen only through the
    /// root slack.
    pub tight_violations: usize,
    /// Vertices other than the root with degree below 3, or a root of
    /// degree below 2.
    pub degree_violations: usize,
    pub cheeger_min: Option<Ratio>,
    /// Truncations whose exhaustive minimum falls below `1/2`, or below
    /// `1/2 - 1/|A|` for a minimizer `A` containing the root.
    pub cheeger_violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyReport {
    pub spec: GwSpec,
    pub side: Side,
    pub mean: f64,
    pub extinction_probability: f64,
    pub seed: u64,
    pub trials: usize,
    pub amenable: Vec<AmenableRow>,
    pub non_amenable: Option<NonAmenableSummary>,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

impl DichotomyReport {
    /// One row per trial: `d, trial, attempts, W sequence, best ratio, success`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["d", "trial", "attempts", "generation_sizes", "best_ratio", "success"])
            .map_err(csv_err)?;
        for r in &self.records {
            let seq: Vec<String> = r.generation_sizes.iter().map(usize::to_string).collect();
            w.write_record([
                r.d.map(|d| d.to_string()).unwrap_or_default(),
                r.trial.to_string(),
                r.attempts.to_string(),
                seq.join(";"),
                r.best_ratio.map(|x| x.to_string()).unwrap_or_default(),
                r.success.to_string(),
            ])
            .map_err(csv_err)?;
        }
        finish_csv(w)
    }
}

/// Runs the side of the dichotomy that the offspring distribution falls on.
pub fn verify_dichotomy(spec: &GwSpec, params: &DichotomyParams, seed: u64) -> Result<DichotomyReport> {
    if params.trials == 0 || params.retry_budget == 0 {
        return Err(Error::InvalidInput("trials and retry budget must be positive".into()));
    }
    let side = if spec.prob(0) + spec.prob(1) > 0.0 {
        Side::Amenable
    } else {
        Side::NonAmenable
    };
    let rho = spec.extinction_probability(1e-12);
    let mut report = DichotomyReport {
        spec: spec.clone(),
        side,
        mean: spec.mean(),
        extinction_probability: rho,
        seed,
        trials: params.trials,
        amenable: Vec::new(),
        non_amenable: None,
        records: Vec::new(),
    };
    match side {
        Side::Amenable => {
            if spec.mean() <= 1.0 {
                return Err(Error::Precondition(format!(
                    "conditioning on survival needs mean offspring above 1, got {}",
                    spec.mean()
                )));
            }
            for &d in &params.d_list {
                let plan = event_plan(spec, d)?;
                let records: Vec<TrialRecord> = (0..params.trials as u64)
                    .into_par_iter()
                    .map(|t| amenable_trial(spec, params, seed, t, d, &plan))
                    .collect::<Result<_>>()?;
                let successes = records.iter().filter(|r| r.success).count();
                let attempts: usize = records.iter().map(|r| r.attempts).sum();
                let fraction = successes as f64 / params.trials as f64;
                let se = (fraction * (1.0 - fraction) / params.trials as f64).sqrt();
                report.amenable.push(AmenableRow {
                    d,
                    plan,
                    trials: params.trials,
                    successes,
                    fraction,
                    std_error: se,
                    meets_bound: plan.bound.map(|b| fraction >= b - 3.0 * se),
                    attempts,
                    acceptance_rate: params.trials as f64 / attempts as f64,
                    survival_probability: 1.0 - rho,
                    planned_events: records.iter().filter(|r| r.planned_event).count(),
                    fallbacks: records
                        .iter()
                        .filter(|r| r.witness.as_deref() == Some("truncation"))
                        .count(),
                });
                report.records.extend(records);
            }
        }
        Side::NonAmenable => {
            let records: Vec<TrialRecord> = (0..params.trials as u64)
                .into_par_iter()
                .map(|t| non_amenable_trial(spec, params, seed, t))
                .collect::<Result<_>>()?;
            let mut summary = NonAmenableSummary {
                trials: params.trials,
                subsets_checked: params.trials * params.subsets,
                bound_violations: 0,
                tight_violations: 0,
                degree_violations: 0,
                cheeger_min: None,
                cheeger_violations: 0,
            };
            for r in &records {
                summary.bound_violations += r.violations;
                summary.tight_violations += usize::from(r.exceeds_r);
                summary.degree_violations += usize::from(r.planned_event);
                summary.cheeger_violations += usize::from(!r.success && r.violations == 0);
                summary.cheeger_min = match (summary.cheeger_min, r.best_ratio) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                };
            }
            report.non_amenable = Some(summary);
            report.records = records;
        }
    }
    Ok(report)
}

/// Attempt `a` of trial `t` uses trial index `t * retry_budget + a`.
fn surviving_sample(spec: &GwSpec, params: &DichotomyParams, seed: u64, t: u64, depth: usize) -> Result<(GwSample, usize)> {
    for a in 0..params.retry_budget {
        let index = t * params.retry_budget as u64 + a as u64;
        let s = sample_trial(spec, seed, index, depth, params.max_vertices)?;
        if !s.extinct {
            return Ok((s, a + 1));
        }
    }
    Err(Error::RejectionBudget {
        trial: t,
        attempts: params.retry_budget,
    })
}

fn amenable_trial(
    spec: &GwSpec,
    params: &DichotomyParams,
    seed: u64,
    t: u64,
    d: usize,
    plan: &EventPlan,
) -> Result<TrialRecord> {
    let (s, attempts) = surviving_sample(spec, params, seed, t, plan.depth)?;
    let patch = s.to_patch();
    let search = ClassifyParams {
        path_targets: vec![d, 2 * d],
        thresholds: vec![d],
        witness_cap: 4 * plan.depth,
        ..ClassifyParams::default()
    };
    let ladder = witnesses_in_patch(&patch, &search)?;
    let mut best: Option<(Ratio, String)> = ladder.last().map(|c| (c.ratio, c.provenance.label().to_string()));

    let exceeds_r = s.depth >= plan.n && s.generation_sizes[plan.n] > plan.r;
    // the first n generations have few exits when W_n is small
    if s.depth >= plan.n && !exceeds_r {
        let members: Vec<VertexId> = (0..s.vertex_count()).filter(|&v| s.generation[v] < plan.n).collect();
        let ratio = patch.select(&members)?.ratio()?;
        if best.as_ref().is_none_or(|(b, _)| ratio < *b) {
            best = Some((ratio, "truncation".to_string()));
        }
    }
    let planned_event = match plan.s {
        Some(branching) if s.depth > plan.n + d => has_finite_sary(&s, plan.n, branching, d),
        _ => false,
    };
    let target = Ratio::from_counts(1, d);
    Ok(TrialRecord {
        d: Some(d),
        trial: t,
        attempts,
        generation_sizes: s.generation_sizes.clone(),
        success: best.as_ref().is_some_and(|(b, _)| *b <= target),
        best_ratio: best.as_ref().map(|(b, _)| *b),
        witness: best.map(|(_, w)| w),
        exceeds_r,
        planned_event,
        violations: 0,
    })
}

/// Whether some vertex of generation `n` has exactly the complete
/// `s`-ary tree of depth `d` below it.
fn has_finite_sary(s: &GwSample, n: usize, branching: usize, d: usize) -> bool {
    let target = sary_tree(branching, d);
    let target_code = rooted_code(&target, 0);
    let count = s.vertex_count();
    // descendant counts and heights, children after parents in BFS order
    let mut size = vec![1usize; count];
    let mut height = vec![0usize; count];
    for v in (1..count).rev() {
        let p = s.parent[v].expect("non-root");
        size[p] += size[v];
        height[p] = height[p].max(height[v] + 1);
    }
    (0..count)
        .filter(|&v| s.generation[v] == n && size[v] == target.vertex_count() && height[v] == d)
        .any(|v| {
            s.subtree_at(&s.labels[v])
                .map(|t| rooted_code(&t, t.root().unwrap_or(0)) == target_code)
                .unwrap_or(false)
        })
}

fn non_amenable_trial(spec: &GwSpec, params: &DichotomyParams, seed: u64, t: u64) -> Result<TrialRecord> {
    let depth = params.truncation_depth.max(1);
    let s = sample_trial(spec, seed, t, depth, params.max_vertices)?;
    let patch = s.to_patch();
    let n = s.vertex_count();
    let degree_bad = (0..n).any(|v| {
        let need = if v == 0 { 2 } else { 3 };
        s.host_degree(v) < need
    });

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((1 << 63) | t);
    let allowed = vec![true; n];
    let mut violations = 0;
    let mut tight = false;
    for _ in 0..params.subsets {
        let start = rng.gen_range(0..n);
        let size = rng.gen_range(1..=params.subset_max_size.max(1));
        let members = random_connected_subset_patch(&patch, &allowed, start, size, &mut rng);
        let rep = min_degree3_bound_check_patch(&patch, &members, Some(0))?;
        violations += usize::from(!rep.holds);
        tight |= !rep.holds_tight;
    }

    let cheeger = cheeger_on_patch(
        &patch,
        &allowed,
        params.cheeger_max_size,
        params.guard,
        format!("first {depth} generations"),
    )?;
    let floor = if cheeger.argmin.members.contains(&0) {
        // |A| <= 2|∂A| + 2 gives |∂A|/|A| >= 1/2 - 1/|A|
        let a = cheeger.argmin.size() as u64;
        Ratio::new(a.saturating_sub(2), 2 * a)
    } else {
        Ratio::new(1, 2)
    };
    Ok(TrialRecord {
        d: None,
        trial: t,
        attempts: 1,
        generation_sizes: s.generation_sizes.clone(),
        best_ratio: Some(cheeger.value),
        witness: None,
        success: violations == 0 && cheeger.value >= floor,
        exceeds_r: tight,
        planned_event: degree_bad,
        violations,
    })
}
