//! Great-circle ("air") distances on a spherical Earth and ordering of cities
//! by distance to a reference point.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Ashburn, Virginia: the default reference city for ordering heat maps.
pub const ASHBURN: GeoPoint = GeoPoint {
    lat_deg: 39.0438,
    lon_deg: -77.4874,
};

/// A point on the globe in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint")]
pub struct GeoPoint {
    lat_deg: f64,
    lon_deg: f64,
}

#[derive(Deserialize)]
struct RawPoint {
    lat_deg: f64,
    lon_deg: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = Error;

    fn try_from(raw: RawPoint) -> Result<Self> {
        GeoPoint::new(raw.lat_deg, raw.lon_deg)
    }
}

impl GeoPoint {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat_deg) {
            return Err(Error::InvalidArgument(format!("latitude {lat_deg} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&lon_deg) {
            return Err(Error::InvalidArgument(format!(
                "longitude {lon_deg} outside [-180, 180]"
            )));
        }
        Ok(GeoPoint { lat_deg, lon_deg })
    }

    pub fn lat_deg(&self) -> f64 {
        self.lat_deg
    }

    pub fn lon_deg(&self) -> f64 {
        self.lon_deg
    }

    /// Great-circle distance to `other` in meters.
    pub fn distance_to(&self, other: &GeoPoint) -> f64 {
        haversine_distance(self, other)
    }
}

/// A named location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct City {
    pub name: String,
    pub location: GeoPoint,
}

impl City {
    pub fn new(name: impl Into<String>, location: GeoPoint) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::Validation("city name must not be empty".into()));
        }
        Ok(City { name, location })
    }

    pub fn ashburn() -> City {
        City {
            name: "Ashburn".into(),
            location: ASHBURN,
        }
    }
}

/// Haversine great-circle distance in meters, using [`EARTH_RADIUS_M`].
pub fn haversine_distance(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let lat1 = a.lat_deg.to_radians();
    let lat2 = b.lat_deg.to_radians();
    let dlat = lat2 - lat1;
    let dlon = (b.lon_deg - a.lon_deg).to_radians();

    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    // rounding can push h a hair above 1 for antipodal points
    let h = h.clamp(0.0, 1.0);
    2.0 * EARTH_RADIUS_M * h.sqrt().asin()
}

/// Orders `items` by non-decreasing distance of `point(item)` to `reference`,
/// breaking ties by ascending `name(item)`.
pub(crate) fn order_by_distance<T, P, N>(items: &mut [T], reference: &GeoPoint, point: P, name: N)
where
    P: Fn(&T) -> GeoPoint,
    N: Fn(&T) -> &str,
{
    items.sort_by(|a, b| {
        let da = haversine_distance(&point(a), reference);
        let db = haversine_distance(&point(b), reference);
        da.partial_cmp(&db)
            .unwrap_or(Ordering::Equal)
            .then_with(|| name(a).cmp(name(b)))
    });
}

/// Sorts cities by distance to `reference`, ties broken by name.
///
/// City names must be unique.
pub fn sort_by_reference(cities: &[City], reference: &GeoPoint) -> Result<Vec<City>> {
    let mut seen = HashSet::with_capacity(cities.len());
    for city in cities {
        if !seen.insert(city.name.as_str()) {
            return Err(Error::Validation(format!("duplicate city name `{}`", city.name)));
        }
    }
    let mut sorted = cities.to_vec();
    order_by_distance(&mut sorted, reference, |c| c.location, |c| c.name.as_str());
    Ok(sorted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn identical_points_are_zero_apart() {
        assert_eq!(haversine_distance(&p(40.0, -75.0), &p(40.0, -75.0)), 0.0);
    }

    #[test]
    fn poles_are_half_circumference_apart() {
        let d = haversine_distance(&p(90.0, 0.0), &p(-90.0, 0.0));
        assert!((d - PI * EARTH_RADIUS_M).abs() / (PI * EARTH_RADIUS_M) < 1e-12);
        assert!((d - 20_015_086.8).abs() < 0.1);
    }

    #[test]
    fn ashburn_frankfurt_close_to_ellipsoid() {
        // WGS84 geodesic, computed with geographiclib
        let oracle = 6_566_086.2;
        let d = haversine_distance(&ASHBURN, &p(50.1109, 8.6821));
        assert!((d - oracle).abs() / oracle < 0.005, "{d}");
    }

    #[test]
    fn out_of_range_coordinates_rejected() {
        assert!(GeoPoint::new(90.1, 0.0).is_err());
        assert!(GeoPoint::new(-90.1, 0.0).is_err());
        assert!(GeoPoint::new(0.0, 180.5).is_err());
        assert!(GeoPoint::new(0.0, -181.0).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
        assert!(GeoPoint::new(-90.0, 180.0).is_ok());
    }

    #[test]
    fn deserialize_validates() {
        assert!(serde_json::from_str::<GeoPoint>(r#"{"lat_deg": 95, "lon_deg": 0}"#).is_err());
        let ok: GeoPoint = serde_json::from_str(r#"{"lat_deg": 1.5, "lon_deg": 2}"#).unwrap();
        assert_eq!(ok, p(1.5, 2.0));
    }

    #[test]
    fn reference_city_sorts_first() {
        let reference = City::ashburn();
        let other = City::new("Frankfurt", p(50.1109, 8.6821)).unwrap();
        let sorted = sort_by_reference(&[other.clone(), reference.clone()], &ASHBURN).unwrap();
        assert_eq!(sorted, vec![reference, other]);
    }

    #[test]
    fn ties_break_by_name() {
        // on the equator, one degree of longitude is R * pi / 180
        let origin = p(0.0, 0.0);
        let b = City::new("b", p(0.0, 2.0)).unwrap();
        let c = City::new("c", p(0.0, 1.0)).unwrap();
        let a = City::new("a", p(0.0, -1.0)).unwrap();
        let sorted = sort_by_reference(&[b, c, a], &origin).unwrap();
        let names: Vec<_> = sorted.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["a", "c", "b"]);
    }

    #[test]
    fn duplicate_names_rejected() {
        let a = City::new("x", p(0.0, 0.0)).unwrap();
        let b = City::new("x", p(1.0, 0.0)).unwrap();
        assert!(matches!(
            sort_by_reference(&[a, b], &ASHBURN),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn empty_name_rejected() {
        assert!(City::new("", ASHBURN).is_err());
    }
}
