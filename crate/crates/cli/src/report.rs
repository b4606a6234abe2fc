use serde::Serialize;
use serde_json::Value;

use crate::files::Input;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Execution facts that vary between runs; not part of the reproducible
/// content of a report.
#[derive(Debug, Serialize)]
pub struct Runtime {
    pub wall_clock_seconds: f64,
    pub workers: usize,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub kind: &'static str,
    pub command: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub seed: u64,
    pub values: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<Vec<StageActions>>,
    pub diagnostics: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime: Option<Runtime>,
}

/// `(measurement label, action label)` pairs for one decision maker.
#[derive(Debug, Serialize)]
pub struct StageActions {
    pub dm: usize,
    pub actions: Vec<[String; 2]>,
}

impl RunReport {
    pub fn new(inputs: &[&Input], seed: u64) -> Self {
        Self {
            kind: "report",
            command: std::env::args().skip(1).collect(),
            inputs: inputs
                .iter()
                .map(|i| InputDigest {
                    path: i.path.clone(),
                    sha256: i.sha256.clone(),
                })
                .collect(),
            seed,
            values: Value::Object(Default::default()),
            policy: None,
            diagnostics: Value::Object(Default::default()),
            runtime: None,
        }
    }
}
