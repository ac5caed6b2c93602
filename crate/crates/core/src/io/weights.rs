//! Graph weights export.

use serde::{Deserialize, Serialize};

use crate::geometry::{CameraId, StateCode};
use crate::graph::CameraGraph;
use crate::quadrant_filter::FilterMode;

pub const WEIGHTS_FORMAT_VERSION: u32 = 1;

/// Parameters that produced the export. Stages that did not run are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsEcho {
    pub r: Option<usize>,
    pub h: Option<usize>,
    pub w: Option<usize>,
    pub mode: Option<FilterMode>,
    pub k: f64,
    pub p_min: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: CameraId,
    pub name: String,
    pub w_n: f64,
    #[serde(rename = "P")]
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub a: CameraId,
    pub b: CameraId,
    pub w_e: f64,
    pub state_code: StateCode,
    pub guarded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsExport {
    pub version: u32,
    pub params: ParamsEcho,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
}

impl WeightsExport {
    pub fn from_graph(graph: &CameraGraph, params: ParamsEcho) -> Self {
        let nodes = (1..=graph.node_count() as CameraId)
            .map(|id| {
                let i = id as usize - 1;
                NodeRecord {
                    id,
                    name: graph.name(id).unwrap_or_default().to_string(),
                    w_n: graph.node_weights()[i],
                    p: graph.sampling_probabilities()[i],
                }
            })
            .collect();
        let edges = graph
            .edges()
            .iter()
            .map(|e| EdgeRecord {
                a: e.a,
                b: e.b,
                w_e: e.weight,
                state_code: e.state,
                guarded: e.guarded,
            })
            .collect();
        Self {
            version: WEIGHTS_FORMAT_VERSION,
            params,
            nodes,
            edges,
        }
    }

    pub fn to_json(&self) -> crate::Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}
