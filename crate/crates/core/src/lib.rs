//! Word-centered neighborhood graphs for tracing word senses through time.
//!
//! A graph is built per target word and time slice from precomputed
//! neighbor tables ([`store`], [`graph`]). Removing the target leaves a
//! peripheral graph whose connected components are sense communities
//! ([`cluster`]). Communities are threaded across slices by member overlap
//! ([`align`]) and summarized as normalized usage distributions
//! ([`metrics`]). [`export`] writes everything as JSON, GraphML, DOT or CSV.

pub mod align;
pub mod cluster;
pub mod config;
pub mod export;
pub mod graph;
pub mod lemma;
pub mod metrics;
pub mod pipeline;
pub mod store;
pub mod synth;
