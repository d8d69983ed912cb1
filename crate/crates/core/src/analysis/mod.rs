//! Latency matrices, heat maps and the linearity/asymmetry reports.

mod heatmap;
mod report;

use std::collections::{BTreeSet, HashMap};
use std::str::FromStr;

pub use heatmap::{
    emit_heatmap_csv, emit_heatmap_svg, palette_color, read_heatmap_csv, render_heatmap_svg, scale_position,
    ColorScale, HeatmapTable, HIGH_COLOR, LOW_COLOR,
};
pub use report::{asymmetry_report, continent_points, linearity_report, AsymmetryEntry, LinearFitReport};

use crate::geodesy::{order_by_distance, City};
use crate::probe::{MeasurementRecord, Region, Status};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregator {
    #[default]
    Median,
    Mean,
}

impl Aggregator {
    fn apply(self, values: &[f64]) -> Option<f64> {
        match self {
            Aggregator::Median => crate::probe::median(values),
            Aggregator::Mean if values.is_empty() => None,
            Aggregator::Mean => Some(values.iter().sum::<f64>() / values.len() as f64),
        }
    }
}

impl FromStr for Aggregator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(Aggregator::Median),
            "mean" => Ok(Aggregator::Mean),
            other => Err(Error::InvalidArgument(format!("unknown aggregator `{other}`"))),
        }
    }
}

/// Client-by-server grid of latencies in milliseconds.
///
/// Rows and columns are ordered by the distance of each region's city to the
/// reference city, ties broken by region id.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyMatrix {
    clients: Vec<String>,
    servers: Vec<String>,
    values_ms: Vec<Vec<Option<f64>>>,
    reference: City,
}

impl LatencyMatrix {
    /// Assembles a matrix from already ordered parts.
    pub fn from_parts(
        clients: Vec<String>,
        servers: Vec<String>,
        values_ms: Vec<Vec<Option<f64>>>,
        reference: City,
    ) -> Result<Self> {
        if values_ms.len() != clients.len() || values_ms.iter().any(|row| row.len() != servers.len()) {
            return Err(Error::Validation(format!(
                "grid shape does not match {} clients x {} servers",
                clients.len(),
                servers.len()
            )));
        }
        Ok(LatencyMatrix {
            clients,
            servers,
            values_ms,
            reference,
        })
    }

    pub fn clients(&self) -> &[String] {
        &self.clients
    }

    pub fn servers(&self) -> &[String] {
        &self.servers
    }

    pub fn values_ms(&self) -> &[Vec<Option<f64>>] {
        &self.values_ms
    }

    pub fn reference(&self) -> &City {
        &self.reference
    }

    pub fn get(&self, client: &str, server: &str) -> Option<f64> {
        let i = self.clients.iter().position(|c| c == client)?;
        let j = self.servers.iter().position(|s| s == server)?;
        self.values_ms[i][j]
    }

    /// Swaps the roles of clients and servers.
    pub fn transpose(&self) -> LatencyMatrix {
        let values_ms = (0..self.servers.len())
            .map(|j| self.values_ms.iter().map(|row| row[j]).collect())
            .collect();
        LatencyMatrix {
            clients: self.servers.clone(),
            servers: self.clients.clone(),
            values_ms,
            reference: self.reference.clone(),
        }
    }

    pub fn present_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values_ms.iter().flatten().filter_map(|v| *v)
    }
}

/// Builds the distance-ordered matrix from `ok` records.
///
/// Each cell aggregates all samples of all `ok` records of that pair. Clients
/// and servers are the ids that appear in the records.
pub fn build_matrix<'a>(
    records: &'a [MeasurementRecord],
    regions: &[Region],
    reference: &City,
    aggregator: Aggregator,
) -> Result<LatencyMatrix> {
    let by_id: HashMap<&str, &Region> = regions.iter().map(|r| (r.id.as_str(), r)).collect();

    let mut clients = BTreeSet::new();
    let mut servers = BTreeSet::new();
    let mut pooled: HashMap<(&str, &str), Vec<f64>> = HashMap::new();
    for r in records {
        for id in [&r.client_id, &r.server_id] {
            if !by_id.contains_key(id.as_str()) {
                return Err(Error::UnknownRegion(id.clone()));
            }
        }
        clients.insert(r.client_id.as_str());
        servers.insert(r.server_id.as_str());
        if r.status == Status::Ok {
            pooled
                .entry((r.client_id.as_str(), r.server_id.as_str()))
                .or_default()
                .extend_from_slice(&r.samples_ms);
        }
    }

    let order = |ids: BTreeSet<&'a str>| -> Vec<&'a str> {
        let mut ids: Vec<&str> = ids.into_iter().collect();
        order_by_distance(&mut ids, &reference.location, |id| by_id[id].city.location, |id| *id);
        ids
    };
    let clients = order(clients);
    let servers = order(servers);

    let values_ms = clients
        .iter()
        .map(|&c| {
            servers
                .iter()
                .map(|&s| pooled.get(&(c, s)).and_then(|v| aggregator.apply(v)))
                .collect()
        })
        .collect();

    Ok(LatencyMatrix {
        clients: clients.into_iter().map(str::to_owned).collect(),
        servers: servers.into_iter().map(str::to_owned).collect(),
        values_ms,
        reference: reference.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesy::GeoPoint;

    fn region(id: &str, lat: f64, lon: f64) -> Region {
        let city = City::new(format!("city-{id}"), GeoPoint::new(lat, lon).unwrap()).unwrap();
        Region::new(id, "p", "c", city, None).unwrap()
    }

    fn rec(c: &str, s: &str, samples: &[f64], status: Status) -> MeasurementRecord {
        MeasurementRecord {
            ts_unix_ms: 0,
            client_id: c.into(),
            server_id: s.into(),
            bytes: 1,
            samples_ms: samples.to_vec(),
            status,
        }
    }

    fn regions() -> Vec<Region> {
        vec![
            region("far", 0.0, 20.0),
            region("near", 0.0, 1.0),
            region("home", 0.0, 0.0),
        ]
    }

    fn origin() -> City {
        City::new("origin", GeoPoint::new(0.0, 0.0).unwrap()).unwrap()
    }

    #[test]
    fn full_grid_in_distance_order() {
        let records = [
            rec("far", "near", &[10.0], Status::Ok),
            rec("far", "home", &[11.0], Status::Ok),
            rec("near", "near", &[12.0], Status::Ok),
            rec("near", "home", &[13.0], Status::Ok),
        ];
        let m = build_matrix(&records, &regions(), &origin(), Aggregator::Median).unwrap();
        assert_eq!(m.clients(), ["near", "far"]);
        assert_eq!(m.servers(), ["home", "near"]);
        assert_eq!(m.values_ms(), [[Some(13.0), Some(12.0)], [Some(11.0), Some(10.0)]]);
    }

    #[test]
    fn cell_aggregates_all_ok_records() {
        let records = [
            rec("near", "far", &[100.0], Status::Ok),
            rec("near", "far", &[300.0], Status::Ok),
            rec("near", "far", &[200.0], Status::Ok),
            rec("near", "far", &[1.0], Status::Partial),
        ];
        let m = build_matrix(&records, &regions(), &origin(), Aggregator::Median).unwrap();
        assert_eq!(m.get("near", "far"), Some(200.0));
        let m = build_matrix(&records, &regions(), &origin(), Aggregator::Mean).unwrap();
        assert_eq!(m.get("near", "far"), Some(200.0));
    }

    #[test]
    fn failed_pairs_are_absent() {
        let records = [
            rec("near", "far", &[], Status::Failed),
            rec("near", "home", &[5.0], Status::Ok),
        ];
        let m = build_matrix(&records, &regions(), &origin(), Aggregator::Median).unwrap();
        assert_eq!(m.servers(), ["home", "far"]);
        assert_eq!(m.get("near", "far"), None);
    }

    #[test]
    fn unknown_region_is_named() {
        let records = [rec("near", "mars", &[5.0], Status::Ok)];
        let err = build_matrix(&records, &regions(), &origin(), Aggregator::Median).unwrap_err();
        assert!(err.to_string().contains("mars"));
    }

    #[test]
    fn transpose_swaps_roles() {
        let records = [
            rec("near", "far", &[5.0], Status::Ok),
            rec("home", "far", &[6.0], Status::Ok),
        ];
        let m = build_matrix(&records, &regions(), &origin(), Aggregator::Median).unwrap();
        let t = m.transpose();
        assert_eq!(t.clients(), m.servers());
        assert_eq!(t.get("far", "near"), Some(5.0));
        assert_eq!(t.transpose(), m);
    }

    #[test]
    fn from_parts_checks_shape() {
        assert!(LatencyMatrix::from_parts(vec!["a".into()], vec!["b".into()], vec![vec![]], origin()).is_err());
    }

    #[test]
    fn aggregator_parses() {
        assert_eq!("median".parse::<Aggregator>().unwrap(), Aggregator::Median);
        assert_eq!("mean".parse::<Aggregator>().unwrap(), Aggregator::Mean);
        assert!("mode".parse::<Aggregator>().is_err());
    }
}
