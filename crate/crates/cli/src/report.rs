//! Machine-readable command reports. Every field is deterministic so the
//! JSON output is stable enough for golden-file tests; terms are rendered
//! in the same prefix notation the spec format uses.

use serde::Serialize;

#[derive(Serialize)]
pub struct ClassifyReport {
    pub command: &'static str,
    pub relation: String,
    pub reflexive: bool,
    pub symmetric: bool,
    pub transitive: bool,
    pub compatible: bool,
    pub tolerance: bool,
    pub congruence: bool,
}

#[derive(Serialize)]
pub struct RelationReport {
    pub command: &'static str,
    pub generators: Vec<(usize, usize)>,
    pub size: usize,
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Serialize)]
pub struct FreeReport {
    pub command: &'static str,
    pub rank: usize,
    pub size: usize,
    pub elements: Vec<String>,
}

#[derive(Serialize)]
pub struct MnReport {
    pub command: &'static str,
    pub n: usize,
    pub status: &'static str,
    pub examined: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample_f: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample_g: Option<String>,
}

#[derive(Serialize)]
pub struct TermSearchReport {
    pub command: &'static str,
    pub found: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub term: Option<String>,
}

#[derive(Serialize)]
pub struct PermutabilityReport {
    pub command: &'static str,
    pub max_n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    pub chain: Vec<String>,
}

#[derive(Serialize)]
pub struct RefuteReport {
    pub command: &'static str,
    pub n: usize,
    pub refuted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment: Option<Vec<(usize, usize)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<(usize, usize)>,
}

#[derive(Serialize)]
pub struct CheckLine {
    pub fixture: String,
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Serialize)]
pub struct VerifyReport {
    pub command: &'static str,
    pub checks: Vec<CheckLine>,
    pub passed: bool,
}
