//! Sub-rate linear network coding over prime fields.
//!
//! The crate builds linear multicast codes on acyclic networks, extracts each
//! sink's global encoding matrix, and designs source precoders that let sinks
//! with too little max-flow decode a subset of the source symbols exactly.

pub mod advisor;
pub mod blockcode;
pub mod field;
pub mod io;
pub mod linalg;
pub mod multicast;
pub mod netgraph;
pub mod subrate;
