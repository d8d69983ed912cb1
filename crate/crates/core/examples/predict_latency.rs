//! Evaluates the latency model for an 11.2 MB download and breaks the result
//! into its terms.
//!
//! ```text
//! cargo run --example predict_latency
//! ```

use cloudlat::model::{metro_edge_latency, predict, total_latency, transmission_speed};
use cloudlat::{DataSize, ModelParams, PathSpec};

fn main() -> cloudlat::Result<()> {
    let params = ModelParams::new(1.25e9, 1.0e9, 1.12e14, 1.12e14, 0.01)?;
    let video = DataSize(11_200_000);
    let path = PathSpec::new(1e6, 6e6, 2)?;

    let l_m = metro_edge_latency(video, &path, &params);
    let total = predict(video, &path, &params);
    println!("payload            {} bytes", video.bytes());
    println!(
        "inland / submarine {:.0} m / {:.0} m, {} relays",
        path.i_lan(),
        path.i_sub(),
        path.n_relays()
    );
    println!("data center + core {:.5} s", total_latency(video, &params, 0.0));
    println!("metro/edge         {l_m:.5} s");
    println!("total              {total:.5} s");

    let distance = path.i_lan() + path.i_sub();
    let speed = transmission_speed(video, distance, total)?;
    println!("transmission speed {speed:.4e} byte*m/s over {distance:.0} m");

    println!();
    println!("{:>12} {:>12}", "bytes", "latency ms");
    for mb in [1u64, 5, 11, 20, 50] {
        let d = DataSize(mb * 1_000_000);
        println!("{:>12} {:>12.3}", d.bytes(), predict(d, &path, &params) * 1e3);
    }
    Ok(())
}
