#![allow(dead_code)]

use std::net::TcpListener;

use cloudlat::geodesy::{City, GeoPoint};
use cloudlat::model::{DataSize, ModelParams, PathSpec};
use cloudlat::synth::Scenario;
use cloudlat::Region;

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// A localhost URL nobody listens on.
pub fn unreachable_url() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    drop(listener);
    format!("http://127.0.0.1:{port}/blob")
}

pub fn server(id: &str, url: &str) -> Region {
    let city = City::new(format!("city-{id}"), GeoPoint::new(10.0, 10.0).unwrap()).unwrap();
    Region::new(id, "fixture", "Nowhere", city, Some(url)).unwrap()
}

pub fn truth() -> ModelParams {
    ModelParams::new(1.25e9, 1.0e9, 1.12e14, 2.24e14, 0.03)
        .unwrap()
        .with_c0(0.02)
        .unwrap()
}

/// `n` scenarios with payloads spread over 1e6..2e7 bytes and paths that vary
/// independently in every coordinate.
pub fn varied_scenarios(n: usize) -> Vec<Scenario> {
    (0..n)
        .map(|k| {
            let k64 = k as u64;
            let bytes = 1_000_000 + (k64 * 7_919_000) % 19_000_001;
            let i_lan = 2e5 + ((k64 * 733_331) % 5_000_000) as f64;
            let i_sub = ((k64 * 1_913_039) % 12_000_000) as f64;
            let relays = ((k * 7 + k / 3) % 4) as u32;
            Scenario {
                client_id: format!("client-{}", k % 6),
                server_id: format!("server-{k}"),
                path: PathSpec::new(i_lan, i_sub, relays).unwrap(),
                size: DataSize(bytes),
            }
        })
        .collect()
}

pub fn paths_of(scenarios: &[Scenario]) -> cloudlat::fitting::PathTable {
    scenarios
        .iter()
        .map(|s| ((s.client_id.clone(), s.server_id.clone()), s.path))
        .collect()
}
