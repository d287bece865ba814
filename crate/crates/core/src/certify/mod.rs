//! Certification suites and the two numerical experiments.
//!
//! Every suite is deterministic given the instance and seed. Runtime and timestamp are
//! kept in a separate `metadata` object so that the rest of a report is reproducible
//! byte for byte.

pub mod approx;
pub mod sard;
pub mod suites;

use std::fmt;
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::assembly::Instance;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub use approx::{experiment_local_approx, ApproxLevel, ApproxReport, MollifiedFactors, SyntheticFactoredMap};
pub use sard::{experiment_sard_breach, find_breach, BreachOutcome, BreachSearch, Occupancy, SardConfig, SardReport};

/// Order statistics of a residual sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
}

impl Quantiles {
    /// Nearest-rank quantiles; all zero for an empty sample.
    pub fn from_values(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                p50: 0.0,
                p95: 0.0,
                max: 0.0,
            };
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let at = |q: f64| v[((v.len() - 1) as f64 * q).round() as usize];
        Self {
            p50: at(0.5),
            p95: at(0.95),
            max: v[v.len() - 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExclusionStats {
    pub excluded: usize,
    pub total: usize,
    pub fraction: f64,
    pub cap: f64,
}

impl ExclusionStats {
    pub fn new(excluded: usize, total: usize, cap: f64) -> Self {
        let fraction = if total == 0 {
            0.0
        } else {
            excluded as f64 / total as f64
        };
        Self {
            excluded,
            total,
            fraction,
            cap,
        }
    }

    pub fn within_cap(&self) -> bool {
        self.fraction < self.cap
    }
}

/// Outcome of a configuration that is designed to fail the suite's test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeControl {
    pub description: String,
    pub statistic: f64,
    pub threshold: f64,
    pub failed_as_expected: bool,
}

/// Non-reproducible fields of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub runtime_ms: f64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl ReportMetadata {
    pub fn since(start: Instant) -> Self {
        Self {
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }
}

/// Tunables shared by the suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertConfig {
    /// Recursion depth for evaluations.
    pub depth: usize,
    /// Sample count for the boundary, gluing, skeleton and rank suites.
    pub samples: usize,
    /// Check count for the self-similarity and convergence suites.
    pub checks: usize,
    /// Relative singular value threshold of the rank suite.
    pub tol: f64,
    pub fd_step: f64,
    pub seed: u64,
    pub exclusion_cap: f64,
    /// Generations measured by the decay suite.
    pub generations: usize,
}

impl Default for CertConfig {
    fn default() -> Self {
        Self {
            depth: 3,
            samples: 10_000,
            checks: 1_000,
            tol: 1e-6,
            fd_step: 1e-6,
            seed: 7,
            exclusion_cap: 0.05,
            generations: 3,
        }
    }
}

/// Result of one suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub suite: String,
    pub params: serde_json::Value,
    pub config: CertConfig,
    pub seed: u64,
    pub n_samples: usize,
    pub tolerance: f64,
    pub pass: bool,
    pub residuals: Quantiles,
    pub exclusion: ExclusionStats,
    pub negative_control: Option<NegativeControl>,
    pub details: serde_json::Value,
    pub metadata: ReportMetadata,
}

impl CertReport {
    /// Report JSON without the `metadata` object.
    pub fn reproducible_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("metadata");
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

pub(crate) struct ReportBuilder {
    suite: Suite,
    start: Instant,
}

impl ReportBuilder {
    pub(crate) fn start(suite: Suite) -> Self {
        Self {
            suite,
            start: Instant::now(),
        }
    }

    /// Assembles a report; `pass` requires the residual test, the exclusion cap and a
    /// failing negative control.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn finish<T: Real>(
        self,
        inst: &Instance<T>,
        config: &CertConfig,
        residuals: &[f64],
        tolerance: f64,
        exclusion: ExclusionStats,
        negative: Option<NegativeControl>,
        extra_pass: bool,
        details: serde_json::Value,
    ) -> CertReport {
        let q = Quantiles::from_values(residuals);
        let residual_ok = residuals.iter().all(|r| r.is_finite() && *r <= tolerance);
        let negative_ok = negative.as_ref().map_or(true, |n| n.failed_as_expected);
        CertReport {
            suite: self.suite.to_string(),
            params: serde_json::to_value(&inst.params).unwrap_or(serde_json::Value::Null),
            config: config.clone(),
            seed: config.seed,
            n_samples: residuals.len(),
            tolerance,
            pass: residual_ok && exclusion.within_cap() && negative_ok && extra_pass,
            residuals: q,
            exclusion,
            negative_control: negative,
            details,
            metadata: ReportMetadata::since(self.start),
        }
    }
}

/// Named certification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    BoundaryGluing,
    Skeleton,
    Rank,
    SelfSimilarity,
    Convergence,
    Decay,
    Linking,
    /// Runs only the designed-to-fail configurations; never passes.
    Negative,
}

impl Suite {
    /// Suites selected by `all` (every suite except `negative`).
    pub const ALL: [Suite; 7] = [
        Suite::BoundaryGluing,
        Suite::Skeleton,
        Suite::Rank,
        Suite::SelfSimilarity,
        Suite::Convergence,
        Suite::Decay,
        Suite::Linking,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::BoundaryGluing => "boundary-gluing",
            Suite::Skeleton => "skeleton",
            Suite::Rank => "rank",
            Suite::SelfSimilarity => "self-similarity",
            Suite::Convergence => "convergence",
            Suite::Decay => "decay",
            Suite::Linking => "linking",
            Suite::Negative => "negative",
        }
    }

    /// Parses a suite name or `all`.
    pub fn parse_selection(s: &str) -> Result<Vec<Suite>> {
        if s == "all" {
            return Ok(Self::ALL.to_vec());
        }
        s.split(',').map(|p| p.trim().parse()).collect()
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .chain(std::iter::once(&Suite::Negative))
            .find(|x| x.name() == s)
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite '{s}'")))
    }
}

/// Runs one suite.
pub fn run_suite<T: Real>(inst: &Instance<T>, suite: Suite, config: &CertConfig) -> Result<CertReport> {
    match suite {
        Suite::BoundaryGluing => suites::cert_boundary_and_gluing(inst, config),
        Suite::Skeleton => suites::cert_skeleton(inst, config),
        Suite::Rank => suites::cert_rank_bound(inst, config),
        Suite::SelfSimilarity => suites::cert_selfsimilarity(inst, config),
        Suite::Convergence => suites::cert_convergence(inst, config),
        Suite::Decay => suites::cert_derivative_decay(inst, config),
        Suite::Linking => suites::cert_linking(inst, config),
        Suite::Negative => suites::cert_negative_controls(inst, config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let q = Quantiles::from_values(&[3.0, 1.0, 2.0, 4.0, 5.0]);
        assert_eq!(q.p50, 3.0);
        assert_eq!(q.max, 5.0);
        assert_eq!(Quantiles::from_values(&[]).max, 0.0);
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert_eq!(Suite::parse_selection("all").unwrap().len(), 7);
        assert_eq!("negative".parse::<Suite>().unwrap(), Suite::Negative);
        assert!("bogus".parse::<Suite>().is_err());
    }
}
