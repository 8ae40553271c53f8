//! Versioned JSON instance documents.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use resilient_te::net::{
    validate_instance, validate_scenario, Condition, Diagnostic, FlowDemand, LogicalSequence, NetworkInstance,
    Scenario, Topology, Tunnel,
};
use resilient_te::prob::{FlowSet, ProbabilisticInstance};

use crate::error::{HarnessError, Result};

/// Schema tag written into every document.
pub const SCHEMA: &str = "resilient-te/instance/v1";

/// One instance document: the network, optional scenarios and the
/// probabilistic settings used by the percentile-loss tools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema: String,
    pub topology: Topology,
    #[serde(default)]
    pub demands: Vec<FlowDemand>,
    #[serde(default)]
    pub tunnels: Vec<Tunnel>,
    #[serde(default)]
    pub logical_sequences: Vec<LogicalSequence>,
    #[serde(default)]
    pub conditions: Vec<Condition>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scenarios: Vec<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_sets: Option<Vec<FlowSet>>,
}

impl InstanceFile {
    pub fn from_instance(inst: NetworkInstance) -> Self {
        InstanceFile {
            schema: SCHEMA.to_string(),
            topology: inst.topology,
            demands: inst.demands,
            tunnels: inst.tunnels,
            logical_sequences: inst.logical_sequences,
            conditions: inst.conditions,
            scenarios: Vec::new(),
            beta: None,
            flow_sets: None,
        }
    }

    pub fn from_prob_instance(pinst: ProbabilisticInstance) -> Self {
        let mut file = Self::from_instance(pinst.instance);
        file.scenarios = pinst.scenarios;
        file.beta = Some(pinst.beta);
        file.flow_sets = pinst.flow_sets;
        file
    }

    pub fn instance(&self) -> NetworkInstance {
        NetworkInstance {
            topology: self.topology.clone(),
            demands: self.demands.clone(),
            tunnels: self.tunnels.clone(),
            logical_sequences: self.logical_sequences.clone(),
            conditions: self.conditions.clone(),
        }
    }

    /// Structural diagnostics for the network and every listed scenario.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut out = validate_instance(&self.instance());
        for s in &self.scenarios {
            out.extend(validate_scenario(&self.topology, s));
        }
        out
    }

    /// Parses a document and checks its schema tag.
    pub fn parse(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        if file.schema != SCHEMA {
            return Err(HarnessError::Schema {
                found: file.schema,
                expected: SCHEMA,
            });
        }
        Ok(file)
    }

    /// Parses and rejects documents with any structural diagnostic.
    pub fn parse_valid(text: &str) -> Result<Self> {
        let file = Self::parse(text)?;
        let diags = file.diagnostics();
        if let Some(first) = diags.first() {
            return Err(HarnessError::Invalid(format!("{first} ({} issue(s) in total)", diags.len())));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance documents always serialize")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_valid(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json() + "\n").map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}
