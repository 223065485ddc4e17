//! Probabilities of shape events on the first generations, analytic and
//! Monte Carlo.

use rayon::prelude::*;
use serde::Serialize;

use crate::canonical::{rooted_code, sary_tree, CanonicalCode};
use crate::error::{Error, Result};
use crate::ratio::Ratio;
use crate::tree::Tree;

use super::sample::{generation_sizes, sample_trial, Truncation};
use super::GwSpec;

/// Probability that every vertex of the first `d + 1` generations (labels
/// of length at most `d`) has exactly one child: `p_1^(d+1)`.
pub fn event_path_prob(spec: &GwSpec, d: usize) -> f64 {
    spec.prob(1).powi(d as i32 + 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SaryProb {
    pub q: f64,
    /// False when `p_0 = 0` or `p_s = 0`, in which case `q = 0`.
    pub hypothesis_holds: bool,
}

/// Probability that the first `d + 1` generations form the complete
/// `s`-ary tree of depth `d` whose last generation is childless:
/// `Π_{i<d} p_s^(s^i) · p_0^(s^d)`.
pub fn event_sary_prob(spec: &GwSpec, s: usize, d: usize) -> SaryProb {
    let (p0, ps) = (spec.prob(0), spec.prob(s));
    if p0 == 0.0 || ps == 0.0 {
        return SaryProb {
            q: 0.0,
            hypothesis_holds: false,
        };
    }
    let internal: u64 = (0..d as u32).map(|i| (s as u64).saturating_pow(i)).fold(0, u64::saturating_add);
    let leaves = (s as u64).saturating_pow(d as u32);
    let q = match (i32::try_from(internal), i32::try_from(leaves)) {
        (Ok(a), Ok(b)) => ps.powi(a) * p0.powi(b),
        // exponents this large put q far below the smallest double
        _ => 0.0,
    };
    SaryProb {
        q,
        hypothesis_holds: true,
    }
}

/// The same product in exact arithmetic, for distributions given as
/// rationals. `None` when the vector is not exact or the result does not
/// fit in 64-bit terms.
pub fn event_sary_prob_exact(spec: &GwSpec, s: usize, d: usize) -> Option<Ratio> {
    let exact = spec.exact.as_ref()?;
    let get = |k: usize| exact.get(k).copied().unwrap_or_else(Ratio::zero);
    let (p0, ps) = (get(0), get(s));
    let internal = (0..d).try_fold(0u32, |acc, i| acc.checked_add((s as u32).checked_pow(i as u32)?))?;
    let leaves = (s as u32).checked_pow(d as u32)?;
    let pow = |r: Ratio, e: u32| -> Option<(u128, u128)> {
        Some(((r.numer() as u128).checked_pow(e)?, (r.denom() as u128).checked_pow(e)?))
    };
    let (a, b) = pow(ps, internal)?;
    let (c, e) = pow(p0, leaves)?;
    let (mut n, mut m) = (a.checked_mul(c)?, b.checked_mul(e)?);
    let g = gcd(n, m);
    if g > 1 {
        n /= g;
        m /= g;
    }
    Some(Ratio::new(u64::try_from(n).ok()?, u64::try_from(m).ok()?))
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Shape events decided on the first generations of a sample.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventPredicate {
    /// One child per vertex through depth `d`: a path on `d + 2` vertices.
    Path { d: usize },
    /// The complete `s`-ary tree of depth `d`, with childless leaves.
    Sary { s: usize, d: usize },
    /// Rooted canonical code of the first `depth + 1` generations.
    Code { depth: usize, code: CanonicalCode },
}

impl EventPredicate {
    /// `(generations to look at, rooted target shape code, target size)`.
    fn target(&self) -> (usize, CanonicalCode, Option<usize>) {
        match self {
            EventPredicate::Path { d } => {
                let t = Tree::path(d + 2);
                (d + 1, rooted_code(&t, 0), Some(d + 2))
            }
            EventPredicate::Sary { s, d } => {
                let t = sary_tree(*s, *d);
                let n = t.vertex_count();
                (d + 1, rooted_code(&t, 0), Some(n))
            }
            EventPredicate::Code { depth, code } => (*depth, code.clone(), None),
        }
    }
}

/// Empirical frequency with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub trials: usize,
    pub hits: usize,
    pub estimate: f64,
    pub std_error: f64,
}

impl McEstimate {
    pub fn from_counts(hits: usize, trials: usize) -> McEstimate {
        let p = hits as f64 / trials as f64;
        McEstimate {
            trials,
            hits,
            estimate: p,
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }
}

/// Samples `trials` trees (trial `t` uses stream family `t` of `seed`) and
/// counts those whose first generations match the predicate.
pub fn monte_carlo_event(
    spec: &GwSpec,
    predicate: &EventPredicate,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::InvalidInput("at least one trial is needed".into()));
    }
    let (depth, target, size) = predicate.target();
    // a sample with more vertices than the target cannot match, so the
    // vertex budget can stop at one past it
    let budget = size.map_or(10_000_000, |n| n + 1);
    let hits: Result<Vec<bool>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let s = sample_trial(spec, seed, t, depth.max(1), budget)?;
            if matches!(s.truncated_at, Some(Truncation::Vertices(_))) {
                if size.is_some() {
                    return Ok(false);
                }
                return Err(Error::BudgetExhausted(format!(
                    "trial {t} has more than {budget} vertices in its first {depth} generations"
                )));
            }
            let first = s.truncate(depth)?;
            Ok(rooted_code(&first, 0) == target)
        })
        .collect();
    let hits = hits?.into_iter().filter(|&h| h).count();
    Ok(McEstimate::from_counts(hits, trials))
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub n: usize,
    pub trials: usize,
    pub mean_offspring: f64,
    /// `m^n`.
    pub expected: f64,
    pub empirical_mean: f64,
    pub std_error: f64,
    pub within_4se: bool,
    /// Samples in which some `W_(l+1) < W_l`; reported when `p_0 = 0`.
    pub monotone_violations: Option<usize>,
    /// Fraction of steps `l < n` with `W_(l+1) > W_l`, when `p_0 = 0`.
    pub strict_increase_fraction: Option<f64>,
    /// `1 - p_1`.
    pub strict_increase_bound: Option<f64>,
    pub strict_increase_holds: Option<bool>,
    #[serde(skip)]
    pub sequences: Vec<Vec<usize>>,
}

/// Compares the empirical mean of `W_n` with `m^n`, and for `p_0 = 0`
/// checks that generation sizes never decrease.
pub fn generation_growth_check(spec: &GwSpec, n: usize, trials: usize, seed: u64) -> Result<GrowthReport> {
    if trials < 2 {
        return Err(Error::InvalidInput("at least two trials are needed".into()));
    }
    let sequences: Vec<Vec<usize>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| generation_sizes(spec, seed, t, n))
        .collect();
    let wn: Vec<f64> = sequences.iter().map(|s| s[n] as f64).collect();
    let mean = wn.iter().sum::<f64>() / trials as f64;
    let var = wn.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    let se = (var / trials as f64).sqrt();
    let m = spec.mean();
    let expected = m.powi(n as i32);
    let within = if se == 0.0 {
        (mean - expected).abs() <= 1e-9 * expected.max(1.0)
    } else {
        (mean - expected).abs() <= 4.0 * se
    };

    let (mut violations, mut fraction, mut bound, mut holds) = (None, None, None, None);
    if spec.prob(0) == 0.0 {
        let bad = sequences.iter().filter(|s| s.windows(2).any(|w| w[1] < w[0])).count();
        let steps = trials * n;
        let strict: usize = sequences
            .iter()
            .map(|s| s.windows(2).filter(|w| w[1] > w[0]).count())
            .sum();
        let b = 1.0 - spec.prob(1);
        if steps > 0 {
            let f = strict as f64 / steps as f64;
            let tol = 3.0 * (b * (1.0 - b) / steps as f64).sqrt();
            fraction = Some(f);
            holds = Some(f >= b - tol);
        }
        violations = Some(bad);
        bound = Some(b);
    }
    Ok(GrowthReport {
        n,
        trials,
        mean_offspring: m,
        expected,
        empirical_mean: mean,
        std_error: se,
        within_4se: within,
        monotone_violations: violations,
        strict_increase_fraction: fraction,
        strict_increase_bound: bound,
        strict_increase_holds: holds,
        sequences,
    })
}

impl GrowthReport {
    /// One row per trial: `trial, W_0;W_1;...;W_n`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["trial", "generation_sizes"]).map_err(csv_err)?;
        for (t, s) in self.sequences.iter().enumerate() {
            let seq: Vec<String> = s.iter().map(usize::to_string).collect();
            w.write_record([t.to_string(), seq.join(";")]).map_err(csv_err)?;
        }
        finish_csv(w)
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub(crate) fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(p: &[f64]) -> GwSpec {
        GwSpec::from_probs(p.to_vec()).unwrap()
    }

    #[test]
    fn analytic_values() {
        assert_eq!(event_path_prob(&spec(&[0.0, 0.5, 0.5]), 2), 0.125);
        assert_eq!(event_path_prob(&spec(&[0.0, 0.5, 0.5]), 0), 0.5);
        assert_eq!(event_path_prob(&spec(&[0.0, 1.0]), 7), 1.0);
        let half = spec(&[0.5, 0.0, 0.5]);
        assert!((event_sary_prob(&half, 2, 1).q - 0.125).abs() < 1e-15);
        assert!((event_sary_prob(&half, 2, 0).q - 0.5).abs() < 1e-15);
        let none = event_sary_prob(&spec(&[0.0, 0.0, 1.0]), 2, 1);
        assert_eq!(none.q, 0.0);
        assert!(!none.hypothesis_holds);
    }

    #[test]
    fn deterministic_events() {
        let path = spec(&[0.0, 1.0]);
        let est = monte_carlo_event(&path, &EventPredicate::Path { d: 4 }, 50, 1).unwrap();
        assert_eq!(est.hits, 50);
        let bin = spec(&[0.0, 0.0, 1.0]);
        let est = monte_carlo_event(&bin, &EventPredicate::Path { d: 1 }, 50, 1).unwrap();
        assert_eq!(est.hits, 0);
    }

    #[test]
    fn growth_of_a_deterministic_tree() {
        let r = generation_growth_check(&spec(&[0.0, 0.0, 1.0]), 5, 10, 3).unwrap();
        assert_eq!(r.empirical_mean, 32.0);
        assert!(r.within_4se);
        assert_eq!(r.monotone_violations, Some(0));
        assert_eq!(r.strict_increase_fraction, Some(1.0));
    }
}
