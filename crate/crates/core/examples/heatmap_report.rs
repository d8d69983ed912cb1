//! Builds the distance-sorted latency matrix for the bundled regions from
//! synthetic measurements, writes CSV and SVG heat maps and prints the
//! asymmetry and linearity reports.
//!
//! ```text
//! cargo run --example heatmap_report -- [OUT_DIR]
//! ```

use std::env;
use std::fs::{self, File};
use std::path::PathBuf;

use cloudlat::analysis::{
    asymmetry_report, build_matrix, continent_points, emit_heatmap_csv, emit_heatmap_svg, linearity_report, Aggregator,
    ColorScale,
};
use cloudlat::geodesy::haversine_distance;
use cloudlat::probe::load_regions;
use cloudlat::synth::{generate, NoiseSpec, Scenario};
use cloudlat::{City, DataSize, ModelParams, PathSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out_dir: PathBuf = env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| env::temp_dir().join("cloudlat-heatmap"));
    fs::create_dir_all(&out_dir)?;

    let regions = load_regions(concat!(env!("CARGO_MANIFEST_DIR"), "/data/regions.json"))?;
    let truth = ModelParams::new(1.25e9, 1.0e9, 1.12e14, 0.9e14, 0.01)?.with_c0(0.015)?;

    // Every region downloads from every server region. Cross-continent pairs
    // are treated as mostly submarine, the rest as inland.
    let mut scenarios = Vec::new();
    for client in &regions {
        for server in regions
            .iter()
            .filter(|r| r.endpoint_url().is_some() && r.id != client.id)
        {
            let d = haversine_distance(&client.city.location, &server.city.location);
            let path = if client.continent == server.continent {
                PathSpec::new(d * 1.2, 0.0, 0)?
            } else {
                PathSpec::new(d * 0.3, d * 1.1, 2)?
            };
            scenarios.push(Scenario {
                client_id: client.id.clone(),
                server_id: server.id.clone(),
                path,
                size: DataSize(11_200_000),
            });
        }
    }
    let records = generate(&truth, &scenarios, &NoiseSpec::lognormal(0.05, 11)?, 5)?;

    let matrix = build_matrix(&records, &regions, &City::ashburn(), Aggregator::Median)?;
    let csv = out_dir.join("heatmap.csv");
    let svg = out_dir.join("heatmap.svg");
    emit_heatmap_csv(&matrix, File::create(&csv)?)?;
    emit_heatmap_svg(&matrix, File::create(&svg)?, ColorScale::Log)?;
    println!(
        "{} x {} matrix written to {} and {}",
        matrix.clients().len(),
        matrix.servers().len(),
        csv.display(),
        svg.display()
    );

    println!("\nmost asymmetric pairs:");
    for e in asymmetry_report(&matrix).iter().take(5) {
        println!(
            "  {} <-> {}: {:.1} vs {:.1} ms ({:.1}%)",
            e.pair.0,
            e.pair.1,
            e.forward_ms,
            e.backward_ms,
            e.relative * 100.0
        );
    }

    println!("\nlatency against distance within a continent:");
    for continent in ["North America", "Europe", "Asia"] {
        let points = continent_points(&matrix, &regions, continent)?;
        match linearity_report(&points) {
            Ok(r) => println!(
                "  {continent:<14} n = {:>2}, {:.3} ms/km, r = {:.3}",
                r.n_points,
                r.slope * 1e3,
                r.pearson_r.unwrap_or(f64::NAN)
            ),
            Err(e) => println!("  {continent:<14} {e}"),
        }
    }
    Ok(())
}
