//! Runs a measurement campaign against local throttled servers, one of which
//! is down, and appends the records to a JSONL file.
//!
//! ```text
//! cargo run --example local_campaign -- [OUT.jsonl]
//! ```

use std::env;
use std::net::TcpListener;
use std::path::PathBuf;
use std::time::Duration;

use cloudlat::fixture::{FixtureConfig, ThrottledServer};
use cloudlat::probe::{load_records, persist_records, run_campaign, summarize, ProbeConfig};
use cloudlat::{City, GeoPoint, Region};

fn region(id: &str, lat: f64, lon: f64, url: &str) -> cloudlat::Result<Region> {
    let city = City::new(id, GeoPoint::new(lat, lon)?)?;
    Region::new(id, "local", "Localhost", city, Some(url))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| env::temp_dir().join("cloudlat-local-campaign.jsonl"));

    let fast = ThrottledServer::start(FixtureConfig {
        bytes_per_sec: Some(40e6),
        ..FixtureConfig::default()
    })?;
    let slow = ThrottledServer::start(FixtureConfig::default())?;
    let dead_port = TcpListener::bind("127.0.0.1:0")?.local_addr()?.port();
    let dead = format!("http://127.0.0.1:{dead_port}/blob");

    let servers = [
        region("fast", 1.0, 1.0, &fast.url())?,
        region("slow", 2.0, 2.0, &slow.url())?,
        region("dead", 3.0, 3.0, &dead)?,
    ];
    let config = ProbeConfig {
        repetitions: 5,
        warmup: 1,
        timeout: Duration::from_secs(5),
        max_retries: 1,
        parallelism: 2,
    };
    let records = run_campaign("localhost", &servers, &config)?;
    persist_records(&records, &out)?;

    for r in &records {
        match summarize(&r.samples_ms) {
            Ok(s) => println!(
                "{:<5} {:?}: median {:.1} ms, mean {:.1} ms, sd {:.1} ms",
                r.server_id, r.status, s.median_ms, s.mean_ms, s.stddev_ms
            ),
            Err(_) => println!("{:<5} {:?}: no samples", r.server_id, r.status),
        }
    }
    println!("{} records now in {}", load_records(&out)?.len(), out.display());
    Ok(())
}
