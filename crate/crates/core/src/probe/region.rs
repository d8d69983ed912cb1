use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use url::Url;

use crate::geodesy::{City, GeoPoint};
use crate::{Error, Result};

/// A cloud location acting as a probe client, a server, or both.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: String,
    pub provider: String,
    pub continent: String,
    pub city: City,
    endpoint_url: Option<Url>,
}

impl Region {
    pub fn new(
        id: impl Into<String>,
        provider: impl Into<String>,
        continent: impl Into<String>,
        city: City,
        endpoint_url: Option<&str>,
    ) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::Validation("region id must not be empty".into()));
        }
        let endpoint_url = endpoint_url
            .map(|raw| parse_absolute_url(raw).map_err(|e| Error::Validation(format!("region `{id}`: {e}"))))
            .transpose()?;
        Ok(Region {
            id,
            provider: provider.into(),
            continent: continent.into(),
            city,
            endpoint_url,
        })
    }

    pub fn endpoint_url(&self) -> Option<&Url> {
        self.endpoint_url.as_ref()
    }
}

pub(crate) fn parse_absolute_url(raw: &str) -> std::result::Result<Url, String> {
    // `Url::parse` only accepts absolute URLs; relative input fails with
    // RelativeUrlWithoutBase.
    let url = Url::parse(raw).map_err(|e| format!("invalid endpoint url `{raw}`: {e}"))?;
    if url.cannot_be_a_base() || !url.has_host() {
        return Err(format!("endpoint url `{raw}` is not an absolute http(s) url"));
    }
    Ok(url)
}

/// On-disk shape of one entry in a regions file.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegionEntry {
    id: String,
    provider: String,
    continent: String,
    city_name: String,
    lat_deg: f64,
    lon_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    endpoint_url: Option<String>,
}

impl TryFrom<RegionEntry> for Region {
    type Error = Error;

    fn try_from(e: RegionEntry) -> Result<Region> {
        let location = GeoPoint::new(e.lat_deg, e.lon_deg)
            .map_err(|err| Error::Validation(format!("region `{}`: {err}", e.id)))?;
        let city = City::new(e.city_name, location)?;
        Region::new(e.id, e.provider, e.continent, city, e.endpoint_url.as_deref())
    }
}

impl From<&Region> for RegionEntry {
    fn from(r: &Region) -> Self {
        RegionEntry {
            id: r.id.clone(),
            provider: r.provider.clone(),
            continent: r.continent.clone(),
            city_name: r.city.name.clone(),
            lat_deg: r.city.location.lat_deg(),
            lon_deg: r.city.location.lon_deg(),
            endpoint_url: r.endpoint_url.as_ref().map(|u| u.as_str().to_owned()),
        }
    }
}

/// Parses a regions document: a JSON array of region objects.
pub fn parse_regions(text: &str) -> Result<Vec<Region>> {
    let entries: Vec<RegionEntry> = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: "<regions>".into(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let regions = entries.into_iter().map(Region::try_from).collect::<Result<Vec<_>>>()?;
    let mut seen = HashSet::new();
    for r in &regions {
        if !seen.insert(r.id.as_str()) {
            return Err(Error::Validation(format!("duplicate region id `{}`", r.id)));
        }
    }
    Ok(regions)
}

pub fn load_regions(path: impl AsRef<Path>) -> Result<Vec<Region>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_regions(&text).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse {
            path: path.into(),
            line,
            message,
        },
        other => other,
    })
}

/// Serializes regions into the regions document format.
pub fn regions_to_json(regions: &[Region]) -> String {
    let entries: Vec<RegionEntry> = regions.iter().map(RegionEntry::from).collect();
    serde_json::to_string_pretty(&entries).expect("region entries always serialize")
}
