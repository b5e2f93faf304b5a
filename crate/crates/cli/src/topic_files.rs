//! Topic artifact files inside a run directory: the indicator log, the
//! cluster map (with interpretations), and the article→topic assignment.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use bias_audit_core::report::{CLUSTERS_LOG, INDICATORS_LOG, TOPIC_ASSIGNMENT_FILE};
use bias_audit_core::topics::{Indicator, TopicAssignment, TopicCluster};

use crate::errors::CliError;

pub fn write_topic_artifacts(
    run_dir: &Path,
    indicators: &[Indicator],
    clusters: &[TopicCluster],
    assignment: &TopicAssignment,
) -> Result<(), CliError> {
    let mut lines = String::new();
    for indicator in indicators {
        lines.push_str(&serde_json::to_string(indicator).expect("indicator serializes"));
        lines.push('\n');
    }
    fs::write(run_dir.join(INDICATORS_LOG), lines)?;

    let mut lines = String::new();
    for cluster in clusters {
        lines.push_str(&serde_json::to_string(cluster).expect("cluster serializes"));
        lines.push('\n');
    }
    fs::write(run_dir.join(CLUSTERS_LOG), lines)?;

    let body = serde_json::to_vec_pretty(assignment).expect("assignment serializes");
    fs::write(run_dir.join(TOPIC_ASSIGNMENT_FILE), body)?;
    Ok(())
}

pub struct TopicArtifacts {
    pub assignment: BTreeMap<String, String>,
    pub ties: Vec<String>,
    /// topic key → interpretation, for clusters that have one
    pub interpretations: BTreeMap<String, String>,
}

/// Reads the artifacts written by `bias-audit topics`, or None when the run
/// directory has no assignment file.
pub fn load_topic_artifacts(run_dir: &Path) -> Result<Option<TopicArtifacts>, CliError> {
    let assignment_path = run_dir.join(TOPIC_ASSIGNMENT_FILE);
    if !assignment_path.exists() {
        return Ok(None);
    }
    let bytes = fs::read(&assignment_path)?;
    let assignment: TopicAssignment = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Data(format!("{}: {e}", assignment_path.display())))?;

    let mut interpretations = BTreeMap::new();
    let clusters_path = run_dir.join(CLUSTERS_LOG);
    if clusters_path.exists() {
        let text = fs::read_to_string(&clusters_path)?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cluster: TopicCluster = serde_json::from_str(line)
                .map_err(|e| CliError::Data(format!("{}:{}: {e}", clusters_path.display(), i + 1)))?;
            if let Some(interpretation) = cluster.interpretation.clone() {
                interpretations.insert(cluster.topic_key(), interpretation);
            }
        }
    }
    Ok(Some(TopicArtifacts {
        assignment: assignment.topics,
        ties: assignment.ties,
        interpretations,
    }))
}
