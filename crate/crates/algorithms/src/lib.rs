//! Relabelling systems built on the core engine: enumeration, stable-property
//! detection, cartography, termination detection and election.

pub mod carto;
pub mod catalog;
pub mod family;
pub mod gssp;
pub mod mazurkiewicz;
pub mod runner;
pub mod termination;
