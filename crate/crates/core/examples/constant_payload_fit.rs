//! Fits the core-network coefficient when every download has the same size.
//!
//! With a fixed 11.2 MB payload the core term is indistinguishable from the
//! constant offset, so the fit merges the two and reports it.

use cloudlat::fitting::{fit, DesignRow, FitOptions};
use cloudlat::model::predict;
use cloudlat::{DataSize, ModelParams, PathSpec};

fn main() -> cloudlat::Result<()> {
    let truth = ModelParams::new(1.25e9, 1.0e9, 1.12e14, 1.12e14, 0.01)?;
    let video = DataSize(11_200_000);
    let paths = [
        (1.0e6, 6.0e6, 2),
        (2.5e6, 0.0, 0),
        (4.0e5, 9.1e6, 1),
        (3.2e6, 3.0e6, 3),
        (8.0e5, 1.2e7, 2),
        (1.7e6, 0.0, 1),
    ];
    let rows = paths
        .iter()
        .map(|&(lan, sub, n)| {
            let path = PathSpec::new(lan, sub, n)?;
            Ok(DesignRow::new(video, &path, predict(video, &path, &truth), true))
        })
        .collect::<cloudlat::Result<Vec<_>>>()?;

    let result = fit(
        &rows,
        &FitOptions {
            fit_core: true,
            ..FitOptions::default()
        },
    )?;

    println!("rank deficient: {}", result.rank_deficient);
    println!(
        "s_lan {:.6e}  s_sub {:.6e}  rho {:.6}",
        result.params.s_lan(),
        result.params.s_sub(),
        result.params.rho()
    );
    println!(
        "c0 {:.6} s (core share {:.6} s)",
        result.params.c0(),
        truth.core_coefficient() * video.bytes() as f64
    );
    println!("b_ds {}  b_c {}", result.params.b_ds(), result.params.b_c());
    for note in &result.notes {
        println!("note: {note}");
    }
    Ok(())
}
