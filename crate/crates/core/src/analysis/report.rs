use std::collections::HashMap;

use serde::Serialize;

use super::LatencyMatrix;
use crate::geodesy::haversine_distance;
use crate::probe::Region;
use crate::{Error, Result};

/// Latency difference between the two directions of a region pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymmetryEntry {
    /// `(a, b)` with `a < b`.
    pub pair: (String, String),
    /// Client `a` downloading from server `b`.
    pub forward_ms: f64,
    /// Client `b` downloading from server `a`.
    pub backward_ms: f64,
    pub delta_ms: f64,
    /// `|delta| / mean(forward, backward)`.
    pub relative: f64,
}

/// One entry per unordered pair measured in both directions, sorted by
/// descending relative asymmetry (ties by pair).
pub fn asymmetry_report(matrix: &LatencyMatrix) -> Vec<AsymmetryEntry> {
    let mut ids: Vec<&String> = matrix
        .clients()
        .iter()
        .filter(|c| matrix.servers().contains(c))
        .collect();
    ids.sort();

    let mut entries = Vec::new();
    for (k, a) in ids.iter().enumerate() {
        for b in &ids[k + 1..] {
            let (Some(forward_ms), Some(backward_ms)) = (matrix.get(a, b), matrix.get(b, a)) else {
                continue;
            };
            let delta_ms = forward_ms - backward_ms;
            let mean = (forward_ms + backward_ms) / 2.0;
            let relative = if mean == 0.0 { 0.0 } else { delta_ms.abs() / mean };
            entries.push(AsymmetryEntry {
                pair: ((*a).clone(), (*b).clone()),
                forward_ms,
                backward_ms,
                delta_ms,
                relative,
            });
        }
    }
    entries.sort_by(|x, y| y.relative.total_cmp(&x.relative).then_with(|| x.pair.cmp(&y.pair)));
    entries
}

/// Simple least-squares line of latency (ms) against distance (m).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearFitReport {
    /// Milliseconds per meter.
    pub slope: f64,
    pub intercept: f64,
    /// `None` when the latencies have zero variance.
    pub pearson_r: Option<f64>,
    pub r2: Option<f64>,
    pub n_points: usize,
}

pub fn linearity_report(points: &[(f64, f64)]) -> Result<LinearFitReport> {
    if points.len() < 2 {
        return Err(Error::Degenerate(format!(
            "linear fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate("all distances are equal".into()));
    }
    let slope = sxy / sxx;
    let pearson_r = (syy > 0.0).then(|| (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0));
    Ok(LinearFitReport {
        slope,
        intercept: mean_y - slope * mean_x,
        pearson_r,
        r2: pearson_r.map(|r| r * r),
        n_points: points.len(),
    })
}

/// `(distance_m, latency_ms)` for every present cell whose client and server
/// both lie on `continent`, in matrix order.
pub fn continent_points(matrix: &LatencyMatrix, regions: &[Region], continent: &str) -> Result<Vec<(f64, f64)>> {
    let by_id: HashMap<&str, &Region> = regions.iter().map(|r| (r.id.as_str(), r)).collect();
    let lookup = |id: &str| {
        by_id
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownRegion(id.to_owned()))
    };

    let mut points = Vec::new();
    for (client, row) in matrix.clients().iter().zip(matrix.values_ms()) {
        let c = lookup(client)?;
        for (server, value) in matrix.servers().iter().zip(row) {
            let s = lookup(server)?;
            if let Some(v) = value {
                if c.continent == continent && s.continent == continent {
                    points.push((haversine_distance(&c.city.location, &s.city.location), *v));
                }
            }
        }
    }
    Ok(points)
}
