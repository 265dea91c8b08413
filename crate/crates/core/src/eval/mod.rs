//! Evaluation protocols over conversation distances.
//!
//! * [`knn_classify`]: stratified cross-validated k-NN domain classification.
//! * [`cluster`]: k-medoids on the distance matrix, purity against domain
//!   labels, and classical MDS coordinates for plotting.
//! * [`ablation_run`]: k-NN accuracy for a list of metric configurations on a
//!   seeded sample of the corpus.
//! * [`reorder_perturb`]: mean distance between each conversation and a copy
//!   with some of its turns deranged.

mod ablation;
mod cluster;
mod knn;
mod perturb;

pub use ablation::{ablation_preset, ablation_run, AblationRow, ABLATION_SAMPLE};
pub use cluster::{
    classical_mds, cluster, k_medoids, purity, ClusterOutput, CoordinateRow, Medoids,
};
pub use knn::{knn_classify, stratified_folds};
pub use perturb::{perturb_conversation, reorder_perturb, selected_count};

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::metric::MetricError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate distance matrix: {0}")]
    DegenerateMatrix(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Knn,
    Cluster,
    Ablation,
    Reorder,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ItemValue {
    Label(String),
    Cluster(usize),
    Distance(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemResult {
    pub id: String,
    pub value: ItemValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub protocol: Protocol,
    pub metric_name: String,
    pub numbers: IndexMap<String, f64>,
    pub per_item: Option<Vec<ItemResult>>,
}

impl EvalReport {
    pub fn new(protocol: Protocol, metric_name: impl Into<String>) -> Self {
        EvalReport {
            protocol,
            metric_name: metric_name.into(),
            numbers: IndexMap::new(),
            per_item: None,
        }
    }

    pub fn number(&self, name: &str) -> Option<f64> {
        self.numbers.get(name).copied()
    }

    /// Aligned text table: one row per measure.
    pub fn to_table(&self) -> String {
        let width = self
            .numbers
            .keys()
            .map(String::len)
            .max()
            .unwrap_or(0)
            .max("measure".len());
        let mut out = format!("# {:?} / {}\n", self.protocol, self.metric_name).to_lowercase();
        out.push_str(&format!("{:<width$}  value\n", "measure"));
        for (name, value) in &self.numbers {
            out.push_str(&format!("{name:<width$}  {value:.6}\n"));
        }
        out
    }

    /// One JSON object per measure, then one per item.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (name, value) in &self.numbers {
            let row = serde_json::json!({
                "protocol": self.protocol,
                "metric": self.metric_name,
                "measure": name,
                "value": value,
            });
            out.push_str(&row.to_string());
            out.push('\n');
        }
        for item in self.per_item.iter().flatten() {
            let row = serde_json::json!({
                "protocol": self.protocol,
                "metric": self.metric_name,
                "id": item.id,
                "value": item.value,
            });
            out.push_str(&row.to_string());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_renders_rows() {
        let mut report = EvalReport::new(Protocol::Knn, "taskdiff");
        report.numbers.insert("accuracy".into(), 0.95);
        report.per_item = Some(vec![ItemResult {
            id: "c1".into(),
            value: ItemValue::Label("Travel".into()),
        }]);
        assert!(report.to_table().contains("accuracy  0.950000"));
        let lines: Vec<_> = report.to_jsonl().lines().map(String::from).collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0],
            r#"{"measure":"accuracy","metric":"taskdiff","protocol":"knn","value":0.95}"#
        );
        assert!(lines[1].contains(r#""value":"Travel""#));
    }
}
