//! Orders the bundled regions by air distance to a reference city.
//!
//! ```text
//! cargo run --example air_distance_ordering -- [CITY]
//! ```
//!
//! `CITY` is any city name from `data/regions.json`; Ashburn by default.

use std::env;

use cloudlat::geodesy::{haversine_distance, sort_by_reference};
use cloudlat::probe::load_regions;
use cloudlat::City;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let regions = load_regions(concat!(env!("CARGO_MANIFEST_DIR"), "/data/regions.json"))?;
    let wanted = env::args().nth(1).unwrap_or_else(|| "Ashburn".into());
    let reference = regions
        .iter()
        .map(|r| &r.city)
        .find(|c| c.name.eq_ignore_ascii_case(&wanted))
        .cloned()
        .ok_or_else(|| format!("no region in city `{wanted}`"))?;

    let mut cities: Vec<City> = Vec::new();
    for r in &regions {
        if !cities.iter().any(|c| c.name == r.city.name) {
            cities.push(r.city.clone());
        }
    }

    println!("cities by distance from {}:", reference.name);
    for city in sort_by_reference(&cities, &reference.location)? {
        let km = haversine_distance(&reference.location, &city.location) / 1e3;
        let ids: Vec<&str> = regions
            .iter()
            .filter(|r| r.city.name == city.name)
            .map(|r| r.id.as_str())
            .collect();
        println!("{km:>9.1} km  {:<16} {}", city.name, ids.join(", "));
    }
    Ok(())
}
