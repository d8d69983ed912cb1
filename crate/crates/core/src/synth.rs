//! Synthetic measurements generated from known parameters.
//!
//! Samples are the forward model prediction in milliseconds, optionally
//! multiplied by `exp(N(0, sigma))`. The random stream is ChaCha8 seeded with
//! `seed_from_u64(seed)`, with normals drawn by `rand_distr::StandardNormal`,
//! one draw per sample in scenario order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::model::{predict, DataSize, ModelParams, PathSpec};
use crate::probe::{MeasurementRecord, Status};
use crate::{Error, Result};

/// Identity of the random generator, recorded alongside generated data.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng::seed_from_u64 (rand_chacha 0.9) + rand_distr 0.5 StandardNormal";

pub const DEFAULT_SAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    None,
    LogNormal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Log-space standard deviation; ignored for [`NoiseKind::None`].
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            kind: NoiseKind::None,
            sigma: 0.0,
            seed: 0,
        }
    }

    pub fn lognormal(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma must be non-negative, got {sigma}"
            )));
        }
        Ok(NoiseSpec {
            kind: NoiseKind::LogNormal,
            sigma,
            seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub client_id: String,
    pub server_id: String,
    pub path: PathSpec,
    pub size: DataSize,
}

/// Generates one `ok` record per scenario with `samples` samples each.
///
/// Timestamps are fixed at 0 so that output depends only on the inputs.
pub fn generate(
    truth: &ModelParams,
    scenarios: &[Scenario],
    noise: &NoiseSpec,
    samples: usize,
) -> Result<Vec<MeasurementRecord>> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples per record must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let records = scenarios
        .iter()
        .map(|s| {
            let base_ms = predict(s.size, &s.path, truth) * 1e3;
            let samples_ms = (0..samples)
                .map(|_| match noise.kind {
                    NoiseKind::None => base_ms,
                    NoiseKind::LogNormal => {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        base_ms * (noise.sigma * z).exp()
                    }
                })
                .collect();
            MeasurementRecord {
                ts_unix_ms: 0,
                client_id: s.client_id.clone(),
                server_id: s.server_id.clone(),
                bytes: s.size.bytes(),
                samples_ms,
                status: Status::Ok,
            }
        })
        .collect();
    Ok(records)
}
