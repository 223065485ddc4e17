//! Galton-Watson trees: offspring distributions, seeded sampling, event
//! probabilities and Monte Carlo checks of the amenability dichotomy.

mod dichotomy;
mod events;
mod sample;

pub use dichotomy::{
    event_plan, verify_dichotomy, AmenableRow, DichotomyParams, DichotomyReport, EventPlan,
    NonAmenableSummary, Side, TrialRecord,
};
pub use events::{
    event_path_prob, event_sary_prob, event_sary_prob_exact, generation_growth_check, monte_carlo_event, EventPredicate,
    GrowthReport, McEstimate, SaryProb,
};
pub use sample::{
    format_label, generation_sizes, parse_label, sample, sample_trial, GwSample, Truncation,
};

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::ratio::Ratio;

/// Mass left out when an infinite-support family is cut off.
pub const DEFAULT_TRUNCATION: f64 = 1e-12;

/// Where an offspring distribution came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Vector,
    Poisson { lambda: f64, truncation: f64 },
    /// `p_k = success (1 - success)^k`.
    Geometric { success: f64, truncation: f64 },
}

/// A finitely supported offspring distribution `(p_0, ..., p_max)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GwSpec {
    pub p: Vec<f64>,
    /// The same vector as exact rationals, when it was given that way.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<Vec<Ratio>>,
    #[serde(flatten)]
    pub family: Family,
    /// Mass removed by truncation before renormalizing.
    pub dropped_mass: f64,
    #[serde(skip)]
    cdf: Vec<f64>,
}

impl GwSpec {
    pub fn from_probs(p: Vec<f64>) -> Result<GwSpec> {
        Self::build(p, None, Family::Vector, 0.0)
    }

    pub fn from_ratios(p: Vec<Ratio>) -> Result<GwSpec> {
        let total: num_rational::Ratio<u64> = p.iter().map(Ratio::inner).sum();
        if total != num_rational::Ratio::from_integer(1) {
            return Err(Error::InvalidDistribution(format!(
                "the probabilities sum to {}",
                Ratio::from(total)
            )));
        }
        let floats = p.iter().map(Ratio::to_f64).collect();
        Self::build(floats, Some(p), Family::Vector, 0.0)
    }

    pub fn poisson(lambda: f64, truncation: f64) -> Result<GwSpec> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidDistribution(format!("poisson rate {lambda}")));
        }
        let mut term = (-lambda).exp();
        Self::truncated(
            |k| {
                if k > 0 {
                    term *= lambda / k as f64;
                }
                term
            },
            truncation,
            Family::Poisson { lambda, truncation },
        )
    }

    pub fn geometric(success: f64, truncation: f64) -> Result<GwSpec> {
        if !(success > 0.0 && success <= 1.0) {
            return Err(Error::InvalidDistribution(format!("geometric success {success}")));
        }
        Self::truncated(
            |k| success * (1.0 - success).powi(k as i32),
            truncation,
            Family::Geometric { success, truncation },
        )
    }

    fn truncated(mut term: impl FnMut(usize) -> f64, eps: f64, family: Family) -> Result<GwSpec> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidDistribution(format!("truncation {eps}")));
        }
        let mut p = Vec::new();
        let mut mass = 0.0;
        while mass < 1.0 - eps {
            let t = term(p.len());
            p.push(t);
            mass += t;
            if p.len() > 100_000 {
                return Err(Error::InvalidDistribution("the support does not fit the truncation".into()));
            }
        }
        let p = p.into_iter().map(|x| x / mass).collect();
        Self::build(p, None, family, 1.0 - mass)
    }

    fn build(p: Vec<f64>, exact: Option<Vec<Ratio>>, family: Family, dropped_mass: f64) -> Result<GwSpec> {
        if p.is_empty() {
            return Err(Error::InvalidDistribution("empty offspring distribution".into()));
        }
        if let Some(x) = p.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("probability {x}")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("the probabilities sum to {total}")));
        }
        let mut cdf = Vec::with_capacity(p.len());
        let mut acc = 0.0;
        for x in &p {
            acc += x;
            cdf.push(acc);
        }
        // guard against rounding: the last nonzero entry absorbs every draw
        let last = p.iter().rposition(|&x| x > 0.0).expect("the mass is 1");
        for c in &mut cdf[last..] {
            *c = f64::INFINITY;
        }
        Ok(GwSpec {
            p,
            exact,
            family,
            dropped_mass,
            cdf,
        })
    }

    /// `{"p": [..]}` with entries as numbers or `"a/b"` strings, or
    /// `{"family": "poisson", "lambda": x}` / `{"family": "geometric",
    /// "success": x}` with an optional `"truncation"`.
    pub fn from_json(text: &str) -> Result<GwSpec> {
        let v: Value = serde_json::from_str(text)?;
        let truncation = v
            .get("truncation")
            .map(|t| t.as_f64().ok_or_else(|| bad("truncation must be a number")))
            .transpose()?
            .unwrap_or(DEFAULT_TRUNCATION);
        match v.get("family").and_then(Value::as_str) {
            Some("poisson") => {
                let lambda = v.get("lambda").and_then(Value::as_f64).ok_or_else(|| bad("poisson needs a numeric lambda"))?;
                GwSpec::poisson(lambda, truncation)
            }
            Some("geometric") => {
                let success = v.get("success").and_then(Value::as_f64).ok_or_else(|| bad("geometric needs a numeric success"))?;
                GwSpec::geometric(success, truncation)
            }
            Some(other) => Err(bad(&format!("unknown family `{other}`"))),
            None => {
                let entries = v.get("p").and_then(Value::as_array).ok_or_else(|| bad("expected a \"p\" array or a \"family\""))?;
                let all_exact = entries.iter().all(|e| e.is_string() || e.is_u64());
                if all_exact {
                    let ratios = entries
                        .iter()
                        .map(|e| match e {
                            Value::String(s) => s.parse::<Ratio>().map_err(|m| bad(&m)),
                            other => Ok(Ratio::new(other.as_u64().unwrap(), 1)),
                        })
                        .collect::<Result<Vec<_>>>()?;
                    GwSpec::from_ratios(ratios)
                } else {
                    let floats = entries
                        .iter()
                        .map(|e| match e {
                            Value::String(s) => s.parse::<Ratio>().map(|r| r.to_f64()).map_err(|m| bad(&m)),
                            other => other.as_f64().ok_or_else(|| bad("probabilities must be numbers")),
                        })
                        .collect::<Result<Vec<_>>>()?;
                    GwSpec::from_probs(floats)
                }
            }
        }
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.p.get(k).copied().unwrap_or(0.0)
    }

    pub fn max_offspring(&self) -> usize {
        self.p.len() - 1
    }

    /// `m = Σ k p_k`.
    pub fn mean(&self) -> f64 {
        self.p.iter().enumerate().map(|(k, x)| k as f64 * x).sum()
    }

    /// The mean as an exact rational, when the vector was given exactly.
    pub fn mean_exact(&self) -> Option<Ratio> {
        let exact = self.exact.as_ref()?;
        let sum: num_rational::Ratio<u64> = exact
            .iter()
            .enumerate()
            .map(|(k, r)| r.inner() * k as u64)
            .sum();
        Some(sum.into())
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.p
            .iter()
            .enumerate()
            .map(|(k, x)| x * (k as f64 - m).powi(2))
            .sum()
    }

    /// `f(s) = Σ p_k s^k`.
    pub fn generating_function(&self, s: f64) -> f64 {
        self.p.iter().rev().fold(0.0, |acc, x| acc * s + x)
    }

    /// Offspring count for a uniform draw `u` in `[0, 1)`.
    pub fn offspring(&self, u: f64) -> usize {
        self.cdf.partition_point(|&c| c <= u)
    }

    /// Smallest fixed point of the generating function on `[0, 1]`.
    pub fn extinction_probability(&self, tol: f64) -> f64 {
        if self.prob(1) == 1.0 {
            return 0.0;
        }
        if let Some(m) = self.mean_exact() {
            if m <= Ratio::new(1, 1) {
                return 1.0;
            }
        } else if self.mean() <= 1.0 + 1e-12 {
            return 1.0;
        }
        let tol = tol.max(f64::EPSILON);
        let mut s = 0.0;
        for _ in 0..10_000_000 {
            let next = self.generating_function(s);
            if (next - s).abs() < tol {
                return next;
            }
            s = next;
        }
        s
    }
}

fn bad(msg: &str) -> Error {
    Error::InvalidDistribution(msg.to_string())
}
