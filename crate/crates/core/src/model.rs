//! The latency decomposition model.
//!
//! Total outbound latency for a payload of `D` bytes is
//!
//! ```text
//! L   = 2 D / B_ds + 2 D / B_c + L_m
//! L_m = D * I_lan / S_lan + D * I_sub / S_sub + rho * N + c0
//! ```
//!
//! where `B_ds` is the bandwidth inside each data center, `B_c` the core
//! network bandwidth, `I_lan`/`I_sub` the inland and submarine cable distances,
//! `S_lan`/`S_sub` the corresponding transmission speeds in byte·meter/second,
//! and `N` the number of inland-submarine relays, each costing `rho` seconds.
//! `c0` is a constant offset that only matters for fitted models.
//!
//! An infinite speed or bandwidth is allowed and means the corresponding term
//! contributes nothing.

use crate::{Error, Result};

/// Intra-data-center bandwidth assumed when nothing else is known: 1.25 GB/s.
pub const DEFAULT_B_DS: f64 = 1.25e9;

/// Payload size in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DataSize(pub u64);

impl DataSize {
    pub fn bytes(self) -> u64 {
        self.0
    }

    fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl From<u64> for DataSize {
    fn from(bytes: u64) -> Self {
        DataSize(bytes)
    }
}

/// Cable distances and relay count between a client and a server.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSpec {
    i_lan: f64,
    i_sub: f64,
    n_relays: u32,
}

impl PathSpec {
    pub fn new(i_lan_m: f64, i_sub_m: f64, n_relays: u32) -> Result<Self> {
        for (name, v) in [("i_lan", i_lan_m), ("i_sub", i_sub_m)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(PathSpec {
            i_lan: i_lan_m,
            i_sub: i_sub_m,
            n_relays,
        })
    }

    /// Inland cable distance in meters.
    pub fn i_lan(&self) -> f64 {
        self.i_lan
    }

    /// Submarine cable distance in meters.
    pub fn i_sub(&self) -> f64 {
        self.i_sub
    }

    pub fn n_relays(&self) -> u32 {
        self.n_relays
    }
}

/// Parameters of the decomposition model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    b_ds: f64,
    b_c: f64,
    s_lan: f64,
    s_sub: f64,
    rho: f64,
    c0: f64,
}

impl ModelParams {
    /// Builds a parameter set with `c0 = 0`.
    ///
    /// Bandwidths and speeds must be positive (infinity allowed), `rho`
    /// non-negative and finite.
    pub fn new(b_ds: f64, b_c: f64, s_lan: f64, s_sub: f64, rho: f64) -> Result<Self> {
        ModelParams {
            b_ds,
            b_c,
            s_lan,
            s_sub,
            rho,
            c0: 0.0,
        }
        .validated()
    }

    pub fn with_c0(self, c0: f64) -> Result<Self> {
        ModelParams { c0, ..self }.validated()
    }

    fn validated(self) -> Result<Self> {
        for (name, v) in [
            ("b_ds", self.b_ds),
            ("b_c", self.b_c),
            ("s_lan", self.s_lan),
            ("s_sub", self.s_sub),
        ] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("rho", self.rho), ("c0", self.c0)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(self)
    }

    pub fn b_ds(&self) -> f64 {
        self.b_ds
    }

    pub fn b_c(&self) -> f64 {
        self.b_c
    }

    pub fn s_lan(&self) -> f64 {
        self.s_lan
    }

    pub fn s_sub(&self) -> f64 {
        self.s_sub
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Seconds per byte spent in the two data centers and the core network:
    /// `2 / B_ds + 2 / B_c`.
    pub fn core_coefficient(&self) -> f64 {
        2.0 / self.b_ds + 2.0 / self.b_c
    }
}

/// Metro/edge delay `L_m` in seconds.
pub fn metro_edge_latency(d: DataSize, path: &PathSpec, params: &ModelParams) -> f64 {
    let d = d.as_f64();
    d * path.i_lan / params.s_lan + d * path.i_sub / params.s_sub + params.rho * f64::from(path.n_relays) + params.c0
}

/// Total latency `L` in seconds given an already computed metro/edge delay.
pub fn total_latency(d: DataSize, params: &ModelParams, l_m: f64) -> f64 {
    let d = d.as_f64();
    2.0 * d / params.b_ds + 2.0 * d / params.b_c + l_m
}

/// Forward prediction of end-to-end latency in seconds.
pub fn predict(d: DataSize, path: &PathSpec, params: &ModelParams) -> f64 {
    total_latency(d, params, metro_edge_latency(d, path, params))
}

/// Transmission speed in byte·meter/second: payload times distance over time.
pub fn transmission_speed(d: DataSize, distance_m: f64, elapsed_s: f64) -> Result<f64> {
    if !(elapsed_s > 0.0 && elapsed_s.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "elapsed time must be positive, got {elapsed_s}"
        )));
    }
    if !(distance_m > 0.0 && distance_m.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "distance must be positive, got {distance_m}"
        )));
    }
    if d.0 == 0 {
        return Err(Error::InvalidArgument("payload must be non-empty".into()));
    }
    Ok(d.as_f64() * distance_m / elapsed_s)
}
