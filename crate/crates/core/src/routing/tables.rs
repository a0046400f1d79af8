use serde::{Deserialize, Serialize};

use crate::contacts::line_pair_contact_seconds;
use crate::encounter::{
    build_graph, contact_time_graph, estimate_matrix, shortest_paths, EncounterMatrix, LineGraph,
    RoutingTable,
};
use crate::mobility::MobilityTrace;
use crate::provenance::Provenance;
use crate::LineId;

pub const TABLES_FORMAT: &str = "busnet-tables/1";

/// Everything the table-driven policies need, learnt from one trace and
/// serialized as `routing_tables.json`. `trace_id` ties the tables to the
/// trace they were learnt from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTables {
    pub format: String,
    pub trace_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub matrix: EncounterMatrix,
    pub graph: LineGraph,
    pub ophop: RoutingTable,
    pub minhop: RoutingTable,
    pub shanghai: RoutingTable,
}

impl PolicyTables {
    pub fn from_trace(trace: &MobilityTrace, lines: &[LineId]) -> Self {
        let matrix = estimate_matrix(trace, lines);
        let graph = build_graph(&matrix);
        let ophop = shortest_paths(&graph);
        let minhop = shortest_paths(&graph.unit_weights());
        let shanghai = shortest_paths(&contact_time_graph(
            &matrix.lines,
            &line_pair_contact_seconds(&trace.contacts),
        ));
        PolicyTables {
            format: TABLES_FORMAT.to_string(),
            trace_id: trace.trace_id(),
            provenance: None,
            matrix,
            graph,
            ophop,
            minhop,
            shanghai,
        }
    }
}
