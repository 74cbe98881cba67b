//! The JSON record written by `softpen solve`.

use serde::{Deserialize, Serialize};
use softpen::{Certificate, PenaltyConfig, SolveOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub spec_path: String,
    pub config: SolveOptions,
    pub instance_hash: String,
    pub penalty: PenaltyConfig,
    pub certificate: Certificate,
    pub trace_path: Option<String>,
    /// The only field that differs between repeated runs.
    pub wall_time_secs: f64,
    pub tool_version: String,
}
