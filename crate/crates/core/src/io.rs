//! JSON file formats.
//!
//! - Field: `{"domain": {"weights": [...]}, "manifold": "<registry string>",
//!   "values": [[...], ...], "vecs": [[...], ...]}` with `vecs` optional.
//! - Path: `{"times": [...], "maps": [<field>, ...], "velocities": [<field>, ...]}`
//!   with `velocities` optional; each velocity entry is a field file whose
//!   `vecs` hold the velocity at the matching snapshot.
//! - Measure: `{"atoms": [[...], ...], "masses": [...]}` (serde on
//!   [`crate::transport::DiscreteMeasure`]).
//! - Permutation: a JSON array of sample indices.
//!
//! Numbers are written in shortest round-trip form, so a written file
//! re-parses to bit-identical values.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::FieldPath;
use crate::error::{GeomError, Result};
use crate::manifold::{registry, Manifold};
use crate::mapspace::{MapField, QuadratureDomain, TangentField};

/// On-disk layout of a field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFile {
    pub domain: QuadratureDomain,
    pub manifold: String,
    pub values: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vecs: Option<Vec<Vec<f64>>>,
}

/// On-disk layout of a path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathFile {
    pub times: Vec<f64>,
    pub maps: Vec<FieldFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocities: Option<Vec<FieldFile>>,
}

fn rows(vs: &[DVector<f64>]) -> Vec<Vec<f64>> {
    vs.iter().map(|v| v.iter().copied().collect()).collect()
}

fn vectors(rows: Vec<Vec<f64>>) -> Vec<DVector<f64>> {
    rows.into_iter().map(DVector::from_vec).collect()
}

fn in_field(what: &str, e: GeomError) -> GeomError {
    GeomError::Format(format!("{what}: {e}"))
}

impl FieldFile {
    pub fn from_map(q: &MapField) -> Self {
        Self {
            domain: (**q.domain()).clone(),
            manifold: q.manifold().name().to_string(),
            values: rows(q.values()),
            vecs: None,
        }
    }

    pub fn from_tangent(h: &TangentField) -> Self {
        Self {
            vecs: Some(rows(h.vecs())),
            ..Self::from_map(h.base())
        }
    }

    /// Builds the map (and tangent field when `vecs` is present) against
    /// the given shared target, or a freshly parsed one.
    pub fn into_fields(
        self,
        target: Option<&Arc<Manifold>>,
    ) -> Result<(MapField, Option<TangentField>)> {
        let man = match target {
            Some(m) => m.clone(),
            None => Arc::new(registry::parse(&self.manifold).map_err(|e| in_field("manifold", e))?),
        };
        let domain = Arc::new(self.domain);
        let q =
            MapField::new(domain, man, vectors(self.values)).map_err(|e| in_field("values", e))?;
        let h = match self.vecs {
            Some(vecs) => {
                Some(TangentField::new(q.clone(), vectors(vecs)).map_err(|e| in_field("vecs", e))?)
            }
            None => None,
        };
        Ok((q, h))
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(json: &str) -> Result<T> {
    serde_json::from_str(json).map_err(|e| GeomError::Format(e.to_string()))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Parses a field file into a map and, when `vecs` is present, a tangent field.
pub fn read_field(json: &str) -> Result<(MapField, Option<TangentField>)> {
    parse_json::<FieldFile>(json)?.into_fields(None)
}

/// Parses a field file that must carry `vecs`.
pub fn read_tangent(json: &str) -> Result<TangentField> {
    read_field(json)?
        .1
        .ok_or_else(|| GeomError::Format("vecs: missing (a tangent field is required)".into()))
}

pub fn map_to_json(q: &MapField) -> String {
    to_json(&FieldFile::from_map(q))
}

pub fn tangent_to_json(h: &TangentField) -> String {
    to_json(&FieldFile::from_tangent(h))
}

pub fn path_to_json(path: &FieldPath) -> String {
    let file = PathFile {
        times: path.times().to_vec(),
        maps: path.maps().iter().map(FieldFile::from_map).collect(),
        velocities: path
            .velocities()
            .map(|vs| vs.iter().map(FieldFile::from_tangent).collect()),
    };
    to_json(&file)
}

pub fn read_path(json: &str) -> Result<FieldPath> {
    let file: PathFile = parse_json(json)?;
    let mut maps = Vec::with_capacity(file.maps.len());
    let mut target: Option<Arc<Manifold>> = None;
    for (t, f) in file.maps.into_iter().enumerate() {
        let (q, _) = f
            .into_fields(target.as_ref())
            .map_err(|e| GeomError::Format(format!("maps[{t}]: {e}")))?;
        target.get_or_insert_with(|| q.manifold().clone());
        maps.push(q);
    }
    let velocities = match file.velocities {
        None => None,
        Some(vs) => Some(
            vs.into_iter()
                .enumerate()
                .map(|(t, f)| {
                    let (_, h) = f
                        .into_fields(target.as_ref())
                        .map_err(|e| GeomError::Format(format!("velocities[{t}]: {e}")))?;
                    h.ok_or_else(|| GeomError::Format(format!("velocities[{t}]: missing vecs")))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    FieldPath::new(file.times, maps, velocities)
}

pub fn read_permutation(json: &str) -> Result<Vec<usize>> {
    parse_json(json)
}

/// Pretty JSON with a trailing newline, for reports and measures.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    to_json(value)
}

pub fn from_json_str<T: serde::de::DeserializeOwned>(json: &str) -> Result<T> {
    parse_json(json)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::integrate_geodesic;

    const SPHERE_FIELD: &str = r#"{
        "domain": {"weights": [0.5, 0.5]},
        "manifold": "sphere",
        "values": [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]],
        "vecs": [[0.1, 0.2, 0.0], [0.0, 0.3, -0.4]]
    }"#;

    #[test]
    fn field_round_trip() {
        let h = read_tangent(SPHERE_FIELD).unwrap();
        assert_eq!(h.manifold().name(), "sphere:r=1:rep=embedded");
        let again = read_tangent(&tangent_to_json(&h)).unwrap();
        assert_eq!(again, h);
        let (q, none) = read_field(&map_to_json(h.base())).unwrap();
        assert!(none.is_none());
        assert_eq!(&q, h.base());
    }

    #[test]
    fn malformed_inputs_are_located() {
        let err = read_field("{\"domain\": {\"weights\": [1.0]},\n \"manifold\": \"sphere\", \"values\": [[1.0, 0.0]]}").unwrap_err();
        assert!(err.to_string().contains("values"), "{err}");
        let err = read_field("{\n\"domain\": 3}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = read_field(
            r#"{"domain": {"weights": [1.0]}, "manifold": "sphere:r=-1", "values": [[0,0,1]]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("invalid parameter"), "{err}");
        assert!(read_tangent(
            r#"{"domain": {"weights": [1.0]}, "manifold": "flat", "values": [[0,0]]}"#
        )
        .is_err());
    }

    #[test]
    fn path_round_trip() {
        let h = read_tangent(SPHERE_FIELD).unwrap();
        let (path, _) = integrate_geodesic(&h, 4, 5).unwrap();
        let back = read_path(&path_to_json(&path)).unwrap();
        assert_eq!(back, path);
    }

    #[test]
    fn permutations() {
        assert_eq!(read_permutation("[2, 0, 1]").unwrap(), vec![2, 0, 1]);
        assert!(read_permutation("[-1]").is_err());
    }
}
