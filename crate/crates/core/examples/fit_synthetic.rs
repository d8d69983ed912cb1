//! Generates noisy synthetic measurements from known parameters and fits the
//! model back.
//!
//! ```text
//! cargo run --example fit_synthetic -- [SIGMA] [SEED]
//! ```

use std::env;

use cloudlat::fitting::{build_design_matrix, fit, FitOptions, PathTable};
use cloudlat::synth::{generate, NoiseSpec, Scenario, DEFAULT_SAMPLES};
use cloudlat::{DataSize, ModelParams, PathSpec};

fn scenarios(n: usize) -> Vec<Scenario> {
    (0..n)
        .map(|k| {
            let k64 = k as u64;
            Scenario {
                client_id: format!("client-{}", k % 5),
                server_id: format!("server-{k}"),
                path: PathSpec::new(
                    3e5 + ((k64 * 611_953) % 4_000_000) as f64,
                    ((k64 * 2_750_159) % 11_000_000) as f64,
                    ((k * 5 + k / 4) % 4) as u32,
                )
                .unwrap(),
                size: DataSize(1_000_000 + (k64 * 3_967_001) % 19_000_000),
            }
        })
        .collect()
}

fn main() -> cloudlat::Result<()> {
    let mut args = env::args().skip(1);
    let sigma: f64 = args.next().map_or(0.02, |s| s.parse().expect("SIGMA must be a number"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("SEED must be an integer"));

    let truth = ModelParams::new(1.25e9, 1.0e9, 1.12e14, 2.24e14, 0.03)?.with_c0(0.02)?;
    let scenarios = scenarios(60);
    let noise = if sigma == 0.0 {
        NoiseSpec::none()
    } else {
        NoiseSpec::lognormal(sigma, seed)?
    };
    let records = generate(&truth, &scenarios, &noise, DEFAULT_SAMPLES)?;

    let paths: PathTable = scenarios
        .iter()
        .map(|s| ((s.client_id.clone(), s.server_id.clone()), s.path))
        .collect();
    let options = FitOptions {
        b_c: Some(truth.b_c()),
        ..FitOptions::default()
    };
    let design = build_design_matrix(&records, &paths, &options)?;
    let result = fit(&design.rows, &options)?;

    println!("{} records, sigma {sigma}, seed {seed}", result.n_records);
    println!("{:<6} {:>14} {:>14} {:>9}", "param", "truth", "fitted", "error");
    for (name, t, f) in [
        ("s_lan", truth.s_lan(), result.params.s_lan()),
        ("s_sub", truth.s_sub(), result.params.s_sub()),
        ("rho", truth.rho(), result.params.rho()),
        ("c0", truth.c0(), result.params.c0()),
    ] {
        println!("{name:<6} {t:>14.5e} {f:>14.5e} {:>8.3}%", (f - t).abs() / t * 100.0);
    }
    println!("rmse {:.3e} s, r2 {:?}", result.rmse, result.r2);
    for note in &result.notes {
        println!("note: {note}");
    }
    Ok(())
}
