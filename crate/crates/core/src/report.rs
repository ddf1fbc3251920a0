//! Serializable run reports. Infinite and undefined values are written as the
//! strings `"inf"`, `"-inf"` and `"nan"` since JSON has no such numbers.

use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;

use crate::numeric::mean_variance;

/// Version tag written into every JSON document.
pub const SCHEMA_VERSION: &str = "ppmc/v1";

/// A real number that serializes infinities and NaN as marker strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        real(&self.0, s)
    }
}

impl From<f64> for Real {
    fn from(v: f64) -> Self {
        Real(v)
    }
}

pub fn real<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

pub fn reals<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&Real(*x))?;
    }
    seq.end()
}

/// Outcome of a batch of replicas of one estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub schema: String,
    pub estimator: String,
    pub distribution: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub scheme: Option<String>,
    pub burn_in: u64,
    pub replicas: usize,
    #[serde(serialize_with = "real")]
    pub value: f64,
    #[serde(serialize_with = "real")]
    pub mean: f64,
    #[serde(serialize_with = "real")]
    pub variance: f64,
    #[serde(serialize_with = "real")]
    pub stderr: f64,
    /// Cost charged under the `N + bT` accounting.
    pub total_cost: u64,
    /// Instrumented number of generator calls or integrand evaluations.
    pub evaluations: u64,
    pub seed: u64,
    #[serde(serialize_with = "reals")]
    pub replica_values: Vec<f64>,
    pub params: serde_json::Value,
}

impl EstimateReport {
    /// Builds a report whose value is the mean of `replica_values`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_values(
        estimator: &str,
        distribution: &str,
        n: usize,
        scheme: Option<String>,
        burn_in: u64,
        replica_values: Vec<f64>,
        total_cost: u64,
        evaluations: u64,
        seed: u64,
        params: serde_json::Value,
    ) -> Self {
        let (mean, variance) = mean_variance(&replica_values);
        let replicas = replica_values.len();
        let stderr = if replicas > 0 {
            (variance / replicas as f64).sqrt()
        } else {
            f64::NAN
        };
        Self {
            schema: SCHEMA_VERSION.to_string(),
            estimator: estimator.to_string(),
            distribution: distribution.to_string(),
            n,
            scheme,
            burn_in,
            replicas,
            value: mean,
            mean,
            variance,
            stderr,
            total_cost,
            evaluations,
            seed,
            replica_values,
            params,
        }
    }
}
