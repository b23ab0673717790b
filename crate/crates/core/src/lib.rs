//! Labelled graphs, coverings and a relabelling engine for local computations.

pub mod covering;
pub mod engine;
pub mod generators;
pub mod graph;
pub mod io;
pub mod label;
pub mod lift;

pub use covering::{CoveringError, CoveringVerdict, Morphism, QuasiCoveringSpec};
pub use engine::{
    Engine, EngineError, Event, Occurrence, Rule, RunOutcome, Scheduler, StarUpdate, StarView, System, Trace,
};
pub use graph::{GraphError, LabelledGraph, Star, VertexId};
pub use label::{Label, LabelError, State};
