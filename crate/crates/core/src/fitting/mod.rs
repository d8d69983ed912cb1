//! Estimating model coefficients from measurements.
//!
//! The metro/edge delay is linear in its coefficients:
//!
//! ```text
//! L_m = (1/S_lan) (D I_lan) + (1/S_sub) (D I_sub) + rho N + c0
//! ```
//!
//! so every measurement becomes one row of a small least-squares problem with
//! columns `[D I_lan, D I_sub, N, 1]`, plus a column `D` carrying the core
//! coefficient `2/B_ds + 2/B_c` when that is fitted too. Coefficients are
//! physically non-negative, so the default solver is non-negative least squares.

mod nnls;

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::model::{DataSize, ModelParams, PathSpec, DEFAULT_B_DS};
use crate::probe::{MeasurementRecord, Status};
use crate::{Error, Result};

/// Column positions inside [`DesignRow::features`].
pub const COL_LAN: usize = 0;
pub const COL_SUB: usize = 1;
pub const COL_RELAYS: usize = 2;
pub const COL_CONST: usize = 3;
pub const COL_CORE: usize = 4;

const COLUMN_NAMES: [&str; 5] = ["D*I_lan", "D*I_sub", "N", "constant", "D"];

/// Relative spread of the payload column under which it counts as constant.
const CONSTANT_PAYLOAD_RTOL: f64 = 1e-12;
/// Residual norm, relative to the column norm, under which a scaled column is
/// considered a combination of the columns already kept.
const DEPENDENCE_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Fit the core coefficient `2/B_ds + 2/B_c` as an extra column instead of
    /// subtracting known data-center and core terms from the targets.
    pub fit_core: bool,
    pub nonneg: bool,
    pub tol: f64,
    /// Data-center bandwidth: subtracted when `fit_core` is off, used as the
    /// prior for back-solving `b_c` when it is on.
    pub b_ds: f64,
    /// Core bandwidth, required when `fit_core` is off.
    pub b_c: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            fit_core: false,
            nonneg: true,
            tol: 1e-10,
            b_ds: DEFAULT_B_DS,
            b_c: None,
        }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.b_ds.is_nan() || self.b_ds <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "b_ds must be positive, got {}",
                self.b_ds
            )));
        }
        match (self.fit_core, self.b_c) {
            (false, None) => Err(Error::InvalidArgument(
                "b_c is required unless the core coefficient is fitted".into(),
            )),
            (_, Some(b_c)) if b_c.is_nan() || b_c <= 0.0 => {
                Err(Error::InvalidArgument(format!("b_c must be positive, got {b_c}")))
            }
            _ => Ok(()),
        }
    }

    fn n_columns(&self) -> usize {
        if self.fit_core {
            5
        } else {
            4
        }
    }
}

/// One linearized measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignRow {
    /// `[D*I_lan, D*I_sub, N, 1]`, followed by `D` when the core coefficient is fitted.
    pub features: Vec<f64>,
    /// Seconds.
    pub target: f64,
}

impl DesignRow {
    pub fn new(d: DataSize, path: &PathSpec, target: f64, fit_core: bool) -> Self {
        let d = d.bytes() as f64;
        let mut features = vec![d * path.i_lan(), d * path.i_sub(), f64::from(path.n_relays()), 1.0];
        if fit_core {
            features.push(d);
        }
        DesignRow { features, target }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub rows: Vec<DesignRow>,
    /// Records skipped because they had no usable positive latency.
    pub rejected: usize,
}

pub type PathTable = HashMap<(String, String), PathSpec>;

/// Turns measurement records into design rows.
///
/// The target of each row is the record's median sample in seconds; with
/// `fit_core` off the known `2D/B_ds + 2D/B_c` is subtracted from it.
pub fn build_design_matrix(records: &[MeasurementRecord], paths: &PathTable, options: &FitOptions) -> Result<Design> {
    options.validate()?;
    let known_core = match options.b_c {
        Some(b_c) if !options.fit_core => 2.0 / options.b_ds + 2.0 / b_c,
        _ => 0.0,
    };

    let mut rows = Vec::with_capacity(records.len());
    let mut rejected = 0;
    for record in records {
        let latency_s = match (record.status, record.representative_ms()) {
            (Status::Failed, _) | (_, None) => None,
            (_, Some(ms)) if ms > 0.0 && ms.is_finite() => Some(ms / 1e3),
            _ => None,
        };
        let Some(latency_s) = latency_s else {
            rejected += 1;
            continue;
        };
        let path = paths
            .get(&(record.client_id.clone(), record.server_id.clone()))
            .ok_or_else(|| Error::MissingPath {
                client: record.client_id.clone(),
                server: record.server_id.clone(),
            })?;
        let d = DataSize(record.bytes);
        let target = latency_s - known_core * d.bytes() as f64;
        rows.push(DesignRow::new(d, path, target, options.fit_core));
    }
    Ok(Design { rows, rejected })
}

/// Raw fitted coefficients, in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    /// Seconds per byte·meter inland (`1/S_lan`).
    pub inv_s_lan: f64,
    /// Seconds per byte·meter submarine (`1/S_sub`).
    pub inv_s_sub: f64,
    pub rho: f64,
    pub c0: f64,
    /// `2/B_ds + 2/B_c` in seconds per byte, when fitted.
    pub core: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: ModelParams,
    pub coefficients: Coefficients,
    pub rmse: f64,
    /// `None` when the targets have zero variance.
    pub r2: Option<f64>,
    pub n_records: usize,
    pub rank_deficient: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub rmse: f64,
    pub max_abs_residual: f64,
    pub r2: Option<f64>,
}

fn check_rows(rows: &[DesignRow], width: usize) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Degenerate("no design rows to fit".into()));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.features.len() != width {
            return Err(Error::InvalidArgument(format!(
                "row {i} has {} features, expected {width}",
                row.features.len()
            )));
        }
        if !row.target.is_finite() || row.features.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "row {i} has non-finite or negative values"
            )));
        }
    }
    Ok(())
}

/// Fits the coefficients by (non-negative) least squares.
///
/// Columns that carry no independent information are fixed at zero and the
/// result is flagged `rank_deficient`. In particular a constant payload size
/// makes the core column a multiple of the constant one; the core terms then
/// end up inside `c0` and `b_ds`/`b_c` are reported as infinite.
pub fn fit(rows: &[DesignRow], options: &FitOptions) -> Result<FitResult> {
    options.validate()?;
    let width = options.n_columns();
    check_rows(rows, width)?;

    let m = rows.len();
    let raw = DMatrix::from_fn(m, width, |i, j| rows[i].features[j]);
    let b = DVector::from_fn(m, |i, _| rows[i].target);

    let scales: Vec<f64> = (0..width).map(|j| raw.column(j).amax()).collect();
    let mut a = raw.clone();
    for (j, &s) in scales.iter().enumerate() {
        if s > 0.0 {
            a.column_mut(j).unscale_mut(s);
        }
    }

    let mut notes = Vec::new();
    let mut usable = vec![true; width];

    if options.fit_core {
        let col = raw.column(COL_CORE);
        let (lo, hi) = (col.min(), col.max());
        if hi == 0.0 || (hi - lo) <= CONSTANT_PAYLOAD_RTOL * hi {
            usable[COL_CORE] = false;
            notes.push("payload size is constant across records; core terms absorbed into c0".to_owned());
        }
    }

    // Gram-Schmidt in priority order: the constant column first, so anything
    // collinear with it is merged into c0.
    let order = [COL_CONST, COL_LAN, COL_SUB, COL_RELAYS, COL_CORE];
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for &j in order.iter().filter(|&&j| j < width) {
        if !usable[j] {
            continue;
        }
        let col = a.column(j).into_owned();
        let norm = col.norm();
        let mut v = col.clone();
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&v);
                v.axpy(-proj, q, 1.0);
            }
        }
        let residual = v.norm();
        if norm == 0.0 || residual <= DEPENDENCE_RTOL * norm {
            usable[j] = false;
            if norm == 0.0 {
                notes.push(format!(
                    "column {} is all zero; coefficient unidentified",
                    COLUMN_NAMES[j]
                ));
            } else {
                notes.push(format!(
                    "column {} is linearly dependent on other columns; coefficient fixed at 0",
                    COLUMN_NAMES[j]
                ));
            }
        } else {
            basis.push(v / residual);
        }
    }

    let kept = usable.iter().filter(|&&u| u).count();
    let mut rank_deficient = kept < width;
    if m < width {
        rank_deficient = true;
        notes.push(format!("{m} records for {width} coefficients"));
    }

    let scaled = if options.nonneg {
        nnls::nnls(&a, &b, &usable, options.tol)
    } else {
        nnls::lstsq_subset(&a, &b, &usable)
    };
    let coef: Vec<f64> = (0..width)
        .map(|j| if scales[j] > 0.0 { scaled[j] / scales[j] } else { 0.0 })
        .collect();

    if let Some(j) = (0..width).find(|&j| coef[j] < 0.0) {
        return Err(Error::Degenerate(format!(
            "coefficient for {} is negative ({:e}); no physical parameters match",
            COLUMN_NAMES[j], coef[j]
        )));
    }

    let coefficients = Coefficients {
        inv_s_lan: coef[COL_LAN],
        inv_s_sub: coef[COL_SUB],
        rho: coef[COL_RELAYS],
        c0: coef[COL_CONST],
        core: options.fit_core.then(|| coef[COL_CORE]),
    };
    for (name, c) in [("s_lan", coefficients.inv_s_lan), ("s_sub", coefficients.inv_s_sub)] {
        if c == 0.0 {
            notes.push(format!("{name} unidentified (coefficient fitted to 0)"));
        }
    }

    let (b_ds, b_c) = match coefficients.core {
        None => (options.b_ds, options.b_c.expect("validated")),
        Some(core) => bandwidths_from_core(core, options.b_ds, &mut notes),
    };
    let params = ModelParams::new(
        b_ds,
        b_c,
        1.0 / coefficients.inv_s_lan,
        1.0 / coefficients.inv_s_sub,
        coefficients.rho,
    )?
    .with_c0(coefficients.c0)?;

    let report = residual_stats(rows, &params)?;
    Ok(FitResult {
        params,
        coefficients,
        rmse: report.rmse,
        r2: report.r2,
        n_records: m,
        rank_deficient,
        notes,
    })
}

/// Splits a fitted core coefficient into `(b_ds, b_c)` given a `b_ds` prior.
fn bandwidths_from_core(core: f64, b_ds: f64, notes: &mut Vec<String>) -> (f64, f64) {
    if core == 0.0 {
        return (f64::INFINITY, f64::INFINITY);
    }
    let inv_b_c = core / 2.0 - 1.0 / b_ds;
    if inv_b_c > 0.0 {
        (b_ds, 1.0 / inv_b_c)
    } else {
        notes.push(format!(
            "fitted core coefficient is below the data-center term for b_ds = {b_ds:e}; \
             attributing it to b_ds alone"
        ));
        (2.0 / core, f64::INFINITY)
    }
}

/// Model prediction for a design row in seconds.
fn row_prediction(row: &DesignRow, params: &ModelParams) -> f64 {
    let f = &row.features;
    let mut pred = f[COL_LAN] / params.s_lan()
        + f[COL_SUB] / params.s_sub()
        + params.rho() * f[COL_RELAYS]
        + params.c0() * f[COL_CONST];
    if let Some(d) = f.get(COL_CORE) {
        pred += params.core_coefficient() * d;
    }
    pred
}

/// Residuals (target minus prediction) of `params` over `rows`.
pub fn residual_stats(rows: &[DesignRow], params: &ModelParams) -> Result<ResidualReport> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no rows to evaluate".into()));
    }
    let n = rows.len() as f64;
    let residuals: Vec<f64> = rows.iter().map(|r| r.target - row_prediction(r, params)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let max_abs_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));

    let mean = rows.iter().map(|r| r.target).sum::<f64>() / n;
    let ss_tot: f64 = rows.iter().map(|r| (r.target - mean).powi(2)).sum();
    let r2 = (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot);

    Ok(ResidualReport {
        rmse: (ss_res / n).sqrt(),
        max_abs_residual,
        r2,
    })
}
