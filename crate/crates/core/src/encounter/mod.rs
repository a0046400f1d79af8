//! Line-to-line encounter probabilities and the routing tables built on them.
//!
//! A bus "encounters" line `j` on a trip cycle (departure up to the next
//! departure, or retirement) if it is in contact with any bus of `j` during
//! that cycle. `p(i, j)` is the share of line `i` trip cycles with such an
//! encounter. Probabilities are truncated to one decimal for routing and
//! turned into additive weights `ln(1 / p~)`, so a shortest path maximises
//! the product of hop probabilities.

mod delay;
mod graph;
mod matrix;
mod paths;

use thiserror::Error;

use crate::LineId;

pub use delay::{expected_delay, DelayEstimate, HopDelay};
pub use graph::{build_graph, build_graph_with_base, contact_time_graph, GraphEdge, LineGraph};
pub use matrix::{estimate_matrix, truncate_probability, EncounterMatrix, Tenths};
pub use paths::{approx_eq, shortest_paths, Route, RoutingTable};

#[derive(Debug, Error, PartialEq)]
pub enum EncounterError {
    #[error("line {0} is not in the matrix")]
    UnknownLine(LineId),
    #[error("no mean trip time for line {0}")]
    MissingTripTime(LineId),
    #[error("route is empty")]
    EmptyRoute,
    #[error("line {0} has no trips; its row is undefined")]
    UndefinedRow(LineId),
}
