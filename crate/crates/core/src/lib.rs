//! Measurement and modeling toolkit for cloud outbound network latency.
//!
//! The crate covers the whole workflow of a download-latency study between
//! cloud regions:
//!
//! - [`probe`] times HTTP downloads of a fixed blob from server endpoints and
//!   persists the results as line-delimited JSON records.
//! - [`geodesy`] computes great-circle distances and orders regions by their
//!   distance to a reference city.
//! - [`model`] evaluates the two-level latency decomposition: data-center and
//!   core-network transfer terms plus a metro/edge delay built from inland and
//!   submarine cable distances and a per-relay overhead.
//! - [`fitting`] estimates the model coefficients from measurements with
//!   non-negative least squares.
//! - [`analysis`] builds the distance-sorted latency matrix, renders CSV and SVG
//!   heat maps and quantifies linearity and asymmetry.
//! - [`synth`] generates synthetic measurements from known parameters.
//! - [`cli`] wires everything into the `cloudlat` command.
//!
//! Units are SI throughout: bytes, meters, seconds. Latencies recorded from
//! probes and printed to users are in milliseconds.
//!
//! # Examples
//!
//! Each capability has a runnable example (`cargo run --example NAME`):
//!
//! | example | shows |
//! |---|---|
//! | `predict_latency` | evaluating the model and the byte·meter/second speed |
//! | `air_distance_ordering` | great-circle distances and reference ordering |
//! | `fit_synthetic` | synthetic data and coefficient recovery |
//! | `constant_payload_fit` | fitting when every payload has the same size |
//! | `local_campaign` | probing local throttled servers and persisting records |
//! | `heatmap_report` | the latency matrix, heat maps and reports |

pub mod analysis;
pub mod cli;
mod error;
pub mod fitting;
pub mod fixture;
pub mod geodesy;
pub mod model;
pub mod probe;
pub mod synth;

pub use error::{Error, Result};
pub use geodesy::{City, GeoPoint};
pub use model::{DataSize, ModelParams, PathSpec};
pub use probe::{MeasurementRecord, Region, Status};
