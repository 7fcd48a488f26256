//! JSON packing documents and result export.
//!
//! A [`PackingDocument`] carries the triangulation, the inversive distances,
//! optional radii and an optional target. Loading reports syntax errors with
//! line and column, schema errors with the path to the offending field, and
//! validation errors from the complex builders.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audit::AuditReport;
use crate::complex::{Edge, Geometry, PackingMetric, WeightedComplex};
use crate::error::Error;
use crate::potential::CurvatureTarget;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeValue {
    pub edge: [usize; 2],
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TargetSpec {
    Curvature { values: Vec<f64> },
    Alpha { alpha: f64, values: Vec<f64> },
}

impl TargetSpec {
    pub fn values(&self) -> &[f64] {
        match self {
            TargetSpec::Curvature { values } | TargetSpec::Alpha { values, .. } => values,
        }
    }

    pub fn to_target(&self) -> CurvatureTarget<f64> {
        match self {
            TargetSpec::Curvature { values } => CurvatureTarget::Curvature(values.clone()),
            TargetSpec::Alpha { alpha, values } => CurvatureTarget::Alpha {
                alpha: *alpha,
                values: values.clone(),
            },
        }
    }

    pub fn from_target(t: &CurvatureTarget<f64>) -> Self {
        match t {
            CurvatureTarget::Curvature(v) => TargetSpec::Curvature { values: v.clone() },
            CurvatureTarget::Alpha { alpha, values } => TargetSpec::Alpha {
                alpha: *alpha,
                values: values.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackingDocument {
    pub schema_version: String,
    pub geometry: Geometry,
    pub vertices: usize,
    pub faces: Vec<[usize; 3]>,
    pub inversive_distances: Vec<EdgeValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
}

impl PackingDocument {
    pub fn from_complex(c: &WeightedComplex<f64>, geometry: Geometry) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            geometry,
            vertices: c.vertex_count(),
            faces: c.faces().to_vec(),
            inversive_distances: c
                .edges()
                .iter()
                .zip(c.weights())
                .map(|(e, w)| EdgeValue {
                    edge: [e.0, e.1],
                    value: *w,
                })
                .collect(),
            radii: None,
            target: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize") + "\n"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DocumentError {
    Io {
        path: String,
        message: String,
    },
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    Schema {
        path: String,
        message: String,
    },
    Validation {
        field: String,
        source: Error,
    },
}

impl fmt::Display for DocumentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DocumentError::Io { path, message } => write!(f, "cannot read {path}: {message}"),
            DocumentError::Parse { line, column, message } => {
                write!(f, "parse error at line {line}, column {column}: {message}")
            }
            DocumentError::Schema { path, message } => write!(f, "schema error at `{path}`: {message}"),
            DocumentError::Validation { field, source } => write!(f, "validation error in `{field}`: {source}"),
        }
    }
}

impl std::error::Error for DocumentError {}

fn validation(field: &str, source: Error) -> DocumentError {
    DocumentError::Validation {
        field: field.into(),
        source,
    }
}

/// A validated document with the objects built from it.
#[derive(Debug, Clone)]
pub struct LoadedDocument {
    pub document: PackingDocument,
    pub complex: WeightedComplex<f64>,
    pub metric: Option<PackingMetric<f64>>,
    pub target: Option<CurvatureTarget<f64>>,
    /// Hex SHA-256 of the bytes the document was read from.
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn deserialize<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, DocumentError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() || inner.is_io() {
            DocumentError::Parse {
                line: inner.line(),
                column: inner.column(),
                message: strip_position(&inner.to_string()),
            }
        } else {
            DocumentError::Schema {
                path,
                message: strip_position(&inner.to_string()),
            }
        }
    })?;
    de.end().map_err(|e| DocumentError::Parse {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    Ok(value)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Builds and validates the complex, metric and target of a document.
pub fn validate_document(doc: PackingDocument, sha256: String) -> Result<LoadedDocument, DocumentError> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(DocumentError::Schema {
            path: "schema_version".into(),
            message: format!(
                "unsupported schema version {:?}, expected {SCHEMA_VERSION:?}",
                doc.schema_version
            ),
        });
    }
    for (k, ev) in doc.inversive_distances.iter().enumerate() {
        let [i, j] = ev.edge;
        if i >= j {
            return Err(DocumentError::Schema {
                path: format!("inversive_distances[{k}].edge"),
                message: format!("edge [{i}, {j}] must be listed as [min, max] with distinct endpoints"),
            });
        }
    }
    let weights = doc
        .inversive_distances
        .iter()
        .map(|ev| (Edge(ev.edge[0], ev.edge[1]), ev.value));
    let complex = WeightedComplex::new(doc.vertices, doc.faces.clone(), weights).map_err(|e| {
        let field = match e {
            Error::MissingWeight { .. }
            | Error::DuplicateWeight { .. }
            | Error::UnknownEdge { .. }
            | Error::WeightOutOfRange { .. } => "inversive_distances",
            _ => "faces",
        };
        validation(field, e)
    })?;
    let n = complex.vertex_count();
    let metric = match &doc.radii {
        Some(r) => {
            if r.len() != n {
                return Err(validation(
                    "radii",
                    Error::DimensionMismatch {
                        expected: n,
                        actual: r.len(),
                    },
                ));
            }
            Some(PackingMetric::new(doc.geometry, r.clone()).map_err(|e| validation("radii", e))?)
        }
        None => None,
    };
    let target = match &doc.target {
        Some(t) => {
            let v = t.values();
            if v.len() != n {
                return Err(validation(
                    "target.values",
                    Error::DimensionMismatch {
                        expected: n,
                        actual: v.len(),
                    },
                ));
            }
            if let Some(k) = v.iter().position(|x| !x.is_finite()) {
                return Err(DocumentError::Schema {
                    path: format!("target.values[{k}]"),
                    message: "target values must be finite".into(),
                });
            }
            if let TargetSpec::Alpha { alpha, .. } = t {
                if !alpha.is_finite() {
                    return Err(DocumentError::Schema {
                        path: "target.alpha".into(),
                        message: "alpha must be finite".into(),
                    });
                }
            }
            Some(t.to_target())
        }
        None => None,
    };
    Ok(LoadedDocument {
        document: doc,
        complex,
        metric,
        target,
        sha256,
    })
}

/// Parses a packing document, or the `packing` block of a result document.
pub fn parse_document(text: &str) -> Result<LoadedDocument, DocumentError> {
    let sha = sha256_hex(text.as_bytes());
    let is_result = serde_json::from_str::<serde_json::Value>(text)
        .ok()
        .and_then(|v| {
            v.as_object()
                .map(|o| o.contains_key("packing") && o.contains_key("input_sha256"))
        })
        .unwrap_or(false);
    let doc = if is_result {
        deserialize::<ResultDocument>(text)?.packing
    } else {
        deserialize::<PackingDocument>(text)?
    };
    validate_document(doc, sha)
}

pub fn load_document(path: impl AsRef<Path>) -> Result<LoadedDocument, DocumentError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| DocumentError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_document(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaBlock {
    pub alpha: f64,
    pub values: Vec<f64>,
    pub s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverDiagnostics {
    pub method: String,
    pub status: String,
    pub gauge: String,
    pub iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    pub extended_faces: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultDocument {
    pub schema_version: String,
    pub command: String,
    pub input_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub radii: Vec<f64>,
    pub u: Vec<f64>,
    pub curvatures: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<AlphaBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverDiagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditReport>,
    /// The input document with the computed radii filled in.
    pub packing: PackingDocument,
}

impl ResultDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("results serialize") + "\n"
    }
}

pub fn save_result(path: impl AsRef<Path>, result: &ResultDocument) -> std::io::Result<()> {
    std::fs::write(path, result.to_json())
}

/// Reads vertices and triangles from Wavefront OBJ text and assigns
/// `default_weight` to every edge. Non-triangular faces are rejected.
pub fn import_obj(text: &str, geometry: Geometry, default_weight: f64) -> Result<PackingDocument, DocumentError> {
    let mut vertices = 0usize;
    let mut faces = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => vertices += 1,
            Some("f") => {
                let idx: Vec<&str> = parts.collect();
                if idx.len() != 3 {
                    return Err(DocumentError::Parse {
                        line: ln + 1,
                        column: 1,
                        message: format!("face with {} vertices; only triangles are supported", idx.len()),
                    });
                }
                let mut tri = [0usize; 3];
                for (k, tok) in idx.iter().enumerate() {
                    let head = tok.split('/').next().unwrap_or("");
                    let raw: i64 = head.parse().map_err(|_| DocumentError::Parse {
                        line: ln + 1,
                        column: line.find(tok).map_or(1, |c| c + 1),
                        message: format!("invalid vertex index {tok:?}"),
                    })?;
                    let v = if raw > 0 { raw - 1 } else { vertices as i64 + raw };
                    if v < 0 {
                        return Err(DocumentError::Parse {
                            line: ln + 1,
                            column: line.find(tok).map_or(1, |c| c + 1),
                            message: format!("vertex index {raw} out of range"),
                        });
                    }
                    tri[k] = v as usize;
                }
                faces.push(tri);
            }
            _ => {}
        }
    }
    let edges = crate::fixtures::edges_of(&faces);
    let doc = PackingDocument {
        schema_version: SCHEMA_VERSION.into(),
        geometry,
        vertices,
        faces,
        inversive_distances: edges
            .into_iter()
            .map(|e| EdgeValue {
                edge: [e.0, e.1],
                value: default_weight,
            })
            .collect(),
        radii: None,
        target: None,
    };
    validate_document(doc.clone(), String::new())?;
    Ok(doc)
}
