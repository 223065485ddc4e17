//! Exact boundary-to-size ratios.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A non-negative rational number, serialized as `"p/q"`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Ratio(num_rational::Ratio<u64>);

impl Ratio {
    /// Panics when `denom` is zero.
    pub fn new(numer: u64, denom: u64) -> Self {
        Ratio(num_rational::Ratio::new(numer, denom))
    }

    pub fn from_counts(numer: usize, denom: usize) -> Self {
        Self::new(numer as u64, denom as u64)
    }

    pub fn zero() -> Self {
        Self::new(0, 1)
    }

    pub fn numer(&self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u64 {
        *self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    /// `self * k`.
    pub fn scale(&self, k: u64) -> Self {
        Ratio(self.0 * k)
    }

    pub fn inner(&self) -> num_rational::Ratio<u64> {
        self.0
    }
}

impl From<num_rational::Ratio<u64>> for Ratio {
    fn from(r: num_rational::Ratio<u64>) -> Self {
        Ratio(r)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl FromStr for Ratio {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let n: u64 = n.parse().map_err(|_| format!("bad numerator in `{s}`"))?;
        let d: u64 = d.parse().map_err(|_| format!("bad denominator in `{s}`"))?;
        if d == 0 {
            return Err(format!("zero denominator in `{s}`"));
        }
        Ok(Ratio::new(n, d))
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
