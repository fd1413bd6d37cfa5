//! Versioned, deterministic report envelope shared by every command.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::classify::Classification;
use crate::schatten::{CutoffReport, SchattenOracle, SchattenVerdict};
use crate::spectra::SpectralReport;
use crate::truncation::OracleRecord;

pub const SCHEMA: &str = "sphershift-report";
pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// The family part of a request.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyEcho {
    pub name: String,
    pub kind: String,
    pub parameters: BTreeMap<String, String>,
}

/// What was asked for, echoed verbatim into the report.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AnalysisRequest {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyEcho>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub m: Vec<usize>,
    /// Named horizons such as `K`, `J`, `N`, `P`, `Q`.
    pub horizons: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub p_grid: Vec<f64>,
    pub tolerances: BTreeMap<String, f64>,
}

/// Top-level document written by every command except the CSV dumps.
#[derive(Clone, Debug, Serialize)]
pub struct Report<R: Serialize> {
    pub schema: &'static str,
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: String,
    pub request: AnalysisRequest,
    pub result: R,
    /// Wall-clock seconds per phase; only present on request since it breaks byte-identity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
}

impl<R: Serialize> Report<R> {
    pub fn new(command: &str, request: AnalysisRequest, result: R) -> Self {
        Self {
            schema: SCHEMA,
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION,
            command: command.to_string(),
            request,
            result,
            timings: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report types always serialise");
        s.push('\n');
        s
    }
}

/// Result of `analyze`.
#[derive(Clone, Debug, Serialize)]
pub struct FullAnalysis {
    pub spectra: SpectralReport,
    pub schatten: Vec<SchattenVerdict>,
    pub cutoff: CutoffReport,
    pub classification: Classification,
    pub oracles: Vec<OracleRecord>,
    pub oracles_pass: bool,
}

/// Result of `verify`.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyResult {
    pub pass: bool,
    pub failures: usize,
    pub max_deviation: f64,
    pub operators: Vec<OracleRecord>,
    pub schatten: Vec<SchattenOracleRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SchattenOracleRecord {
    #[serde(flatten)]
    pub oracle: SchattenOracle,
    pub pass: bool,
}

/// Wall-clock stopwatch keyed by phase name.
#[derive(Debug, Default)]
pub struct Timings {
    enabled: bool,
    phases: BTreeMap<String, f64>,
}

impl Timings {
    pub fn new(enabled: bool) -> Self {
        Self {
            enabled,
            phases: BTreeMap::new(),
        }
    }

    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = std::time::Instant::now();
        let out = f();
        if self.enabled {
            *self.phases.entry(phase.to_string()).or_default() += start.elapsed().as_secs_f64();
        }
        out
    }

    pub fn finish(self) -> Option<BTreeMap<String, f64>> {
        self.enabled.then_some(self.phases)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_fields_and_determinism() {
        let mut req = AnalysisRequest::default();
        req.horizons.insert("K".into(), 10);
        let a = Report::new("families", req.clone(), vec![1, 2]).to_json();
        let b = Report::new("families", req, vec![1, 2]).to_json();
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["request"]["horizons"]["K"], 10);
        assert!(v.get("timings").is_none());
    }

    #[test]
    fn timings_only_when_enabled() {
        let mut off = Timings::new(false);
        assert_eq!(off.time("x", || 3), 3);
        assert!(off.finish().is_none());
        let mut on = Timings::new(true);
        on.time("x", || ());
        assert!(on.finish().unwrap().contains_key("x"));
    }
}
