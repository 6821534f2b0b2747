//! Dataset manifests: one CSV row per image with its feature file, geotag
//! and split.
//!
//! ```text
//! image_id,path,latitude,longitude,yaw,split
//! db_r000_c000_y0,features/db_r000_c000_y0.pvfm,36.35,127.38,0,database
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use spvp_core::GeoRecord;

use crate::error::{Error, Result};
use crate::formats::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Database,
    Query,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Database => "database",
            Split::Query => "query",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "database" => Ok(Split::Database),
            "query" => Ok(Split::Query),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    pub image_id: String,
    /// As written in the manifest.
    pub path: PathBuf,
    pub geo: GeoRecord,
    pub split: Split,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    image_id: String,
    path: String,
    latitude: f64,
    longitude: f64,
    yaw: Option<f32>,
    split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    root: PathBuf,
    records: Vec<ManifestRecord>,
}

impl Manifest {
    /// Builds a manifest rooted at `root`; ids must be unique.
    pub fn new(root: impl Into<PathBuf>, records: Vec<ManifestRecord>) -> Result<Self> {
        let root = root.into();
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.image_id.as_str()) {
                return Err(Error::manifest(&root, format!("duplicate image id `{}`", r.image_id)));
            }
        }
        Ok(Self { root, records })
    }

    /// Reads and validates a manifest. Fails without returning anything if a
    /// row is malformed, an id repeats, or a feature file is missing.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")), path)
    }

    fn parse(text: &str, root: &Path, origin: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| Error::manifest(origin, e.to_string()))?.clone();
        let expected = ["image_id", "path", "latitude", "longitude", "yaw", "split"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::manifest(origin, format!("header must be `{}`", expected.join(","))));
        }
        let mut records = Vec::new();
        for (line, row) in reader.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| Error::manifest(origin, format!("row {}: {e}", line + 1)))?;
            let mut geo = GeoRecord::new(row.image_id.as_str(), row.latitude, row.longitude)
                .map_err(|e| Error::manifest(origin, format!("row {}: {e}", line + 1)))?;
            if let Some(yaw) = row.yaw {
                geo = geo.with_yaw(yaw).map_err(|e| Error::manifest(origin, format!("row {}: {e}", line + 1)))?;
            }
            records.push(ManifestRecord {
                image_id: row.image_id,
                path: PathBuf::from(row.path),
                geo,
                split: row.split,
            });
        }
        let manifest = Self::new(root, records).map_err(|e| match e {
            Error::Manifest { message, .. } => Error::manifest(origin, message),
            other => other,
        })?;
        for r in &manifest.records {
            let p = manifest.resolve(r);
            if !p.is_file() {
                return Err(Error::manifest(
                    origin,
                    format!("feature file {} for `{}` does not exist", p.display(), r.image_id),
                ));
            }
        }
        Ok(manifest)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn records(&self) -> &[ManifestRecord] {
        &self.records
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn geo(&self, split: Split) -> Vec<GeoRecord> {
        self.split(split).map(|r| r.geo.clone()).collect()
    }

    pub fn resolve(&self, record: &ManifestRecord) -> PathBuf {
        if record.path.is_absolute() {
            record.path.clone()
        } else {
            self.root.join(&record.path)
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(Row {
                image_id: r.image_id.clone(),
                path: r.path.to_string_lossy().into_owned(),
                latitude: r.geo.latitude,
                longitude: r.geo.longitude,
                yaw: r.geo.yaw,
                split: r.split,
            })
            .map_err(|e| Error::manifest(&self.root, e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::manifest(&self.root, e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv()?.as_bytes())
    }
}
