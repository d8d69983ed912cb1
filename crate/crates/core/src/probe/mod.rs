//! Timed HTTP downloads against server endpoints.
//!
//! A campaign sweeps one client across a list of servers. For each server it
//! runs `warmup` discarded downloads and then `repetitions` timed ones, strictly
//! one after another. Elapsed time covers the whole request, connection setup
//! included, up to the last body byte.

mod record;
mod region;

use std::io;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

pub(crate) use record::median;
pub use record::{
    load_records, persist_records, read_records, summarize, write_records, LatencyStat, MeasurementRecord, Status,
};
pub use region::{load_regions, parse_regions, regions_to_json, Region};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProbeError {
    #[error("{endpoint}: timed out")]
    Timeout { endpoint: String },
    #[error("{endpoint}: server answered with status {status}")]
    Protocol { endpoint: String, status: u16 },
    #[error("{endpoint}: {message}")]
    Transport { endpoint: String, message: String },
}

impl ProbeError {
    pub fn endpoint(&self) -> &str {
        match self {
            ProbeError::Timeout { endpoint }
            | ProbeError::Protocol { endpoint, .. }
            | ProbeError::Transport { endpoint, .. } => endpoint,
        }
    }
}

/// Result of a single timed download.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSample {
    pub elapsed_ms: f64,
    /// Time until the response head arrived.
    pub ttfb_ms: f64,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub repetitions: usize,
    pub warmup: usize,
    pub timeout: Duration,
    pub max_retries: usize,
    /// Servers probed at once. Anything above 1 lets downloads share the
    /// client's bandwidth and skews the numbers.
    pub parallelism: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            repetitions: 5,
            warmup: 1,
            timeout: Duration::from_secs(60),
            max_retries: 2,
            parallelism: 1,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
        }
        if self.timeout.is_zero() {
            return Err(Error::InvalidArgument("timeout must be positive".into()));
        }
        if self.parallelism == 0 {
            return Err(Error::InvalidArgument("parallelism must be at least 1".into()));
        }
        Ok(())
    }
}

/// Downloads `endpoint_url` once and times it on a monotonic clock.
pub fn probe_once(endpoint_url: &str, timeout: Duration) -> Result<ProbeSample, ProbeError> {
    let endpoint = endpoint_url.to_owned();
    region::parse_absolute_url(endpoint_url).map_err(|message| ProbeError::Transport {
        endpoint: endpoint.clone(),
        message,
    })?;

    // fresh agent per download: no pooled connection survives between samples
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .max_idle_connections(0)
        .build()
        .into();

    let start = Instant::now();
    let mut response = agent
        .get(endpoint_url)
        .call()
        .map_err(|e| classify_ureq(&endpoint, e))?;
    let ttfb = start.elapsed();

    let status = response.status().as_u16();
    if !(200..300).contains(&status) {
        return Err(ProbeError::Protocol { endpoint, status });
    }

    let mut reader = response.body_mut().as_reader();
    let bytes = io::copy(&mut reader, &mut io::sink()).map_err(|e| classify_io(&endpoint, e))?;
    let elapsed = start.elapsed();

    Ok(ProbeSample {
        elapsed_ms: elapsed.as_secs_f64() * 1e3,
        ttfb_ms: ttfb.as_secs_f64() * 1e3,
        bytes,
    })
}

fn classify_ureq(endpoint: &str, err: ureq::Error) -> ProbeError {
    match err {
        ureq::Error::Timeout(_) => ProbeError::Timeout {
            endpoint: endpoint.to_owned(),
        },
        ureq::Error::StatusCode(status) => ProbeError::Protocol {
            endpoint: endpoint.to_owned(),
            status,
        },
        ureq::Error::Io(e) => classify_io(endpoint, e),
        other => ProbeError::Transport {
            endpoint: endpoint.to_owned(),
            message: other.to_string(),
        },
    }
}

fn classify_io(endpoint: &str, err: io::Error) -> ProbeError {
    let timed_out = matches!(err.kind(), io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock)
        || err
            .get_ref()
            .and_then(|inner| inner.downcast_ref::<ureq::Error>())
            .is_some_and(|e| matches!(e, ureq::Error::Timeout(_)));
    if timed_out {
        ProbeError::Timeout {
            endpoint: endpoint.to_owned(),
        }
    } else {
        ProbeError::Transport {
            endpoint: endpoint.to_owned(),
            message: err.to_string(),
        }
    }
}

fn probe_with_retries(url: &str, config: &ProbeConfig) -> Result<ProbeSample, ProbeError> {
    let mut attempt = 0;
    loop {
        match probe_once(url, config.timeout) {
            Ok(sample) => return Ok(sample),
            Err(e) if attempt >= config.max_retries => return Err(e),
            Err(_) => attempt += 1,
        }
    }
}

fn now_unix_ms() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or_default()
}

fn measure_server(client_id: &str, server: &Region, url: &str, config: &ProbeConfig) -> MeasurementRecord {
    let ts_unix_ms = now_unix_ms();
    for _ in 0..config.warmup {
        let _ = probe_with_retries(url, config);
    }

    let mut samples_ms = Vec::with_capacity(config.repetitions);
    let mut bytes = 0;
    for _ in 0..config.repetitions {
        if let Ok(sample) = probe_with_retries(url, config) {
            // a zero-length elapsed time is impossible on a monotonic clock
            // but must never reach the file as an ok sample
            if sample.elapsed_ms > 0.0 {
                samples_ms.push(sample.elapsed_ms);
                bytes = sample.bytes;
            }
        }
    }

    let status = match samples_ms.len() {
        0 => Status::Failed,
        n if n == config.repetitions => Status::Ok,
        _ => Status::Partial,
    };
    MeasurementRecord {
        ts_unix_ms,
        client_id: client_id.to_owned(),
        server_id: server.id.clone(),
        bytes,
        samples_ms,
        status,
    }
}

/// Measures every server from `client_id`.
///
/// Returns one record per server, in input order. Download failures never
/// abort the campaign; they show up as `partial` or `failed` records.
pub fn run_campaign(client_id: &str, servers: &[Region], config: &ProbeConfig) -> Result<Vec<MeasurementRecord>> {
    config.validate()?;
    let targets = servers
        .iter()
        .map(|s| {
            s.endpoint_url()
                .map(|u| (s, u.as_str()))
                .ok_or_else(|| Error::Validation(format!("server `{}` has no endpoint_url", s.id)))
        })
        .collect::<Result<Vec<_>>>()?;

    if config.parallelism == 1 || targets.len() <= 1 {
        return Ok(targets
            .into_iter()
            .map(|(server, url)| measure_server(client_id, server, url, config))
            .collect());
    }

    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<MeasurementRecord>>> = targets.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|scope| {
        for _ in 0..config.parallelism.min(targets.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(server, url)) = targets.get(i) else { break };
                let record = measure_server(client_id, server, url, config);
                *slots[i].lock().unwrap() = Some(record);
            });
        }
    });
    Ok(slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("every slot is filled"))
        .collect())
}
