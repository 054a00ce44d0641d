//! Body description files: a JSON document with a `kind` tag, optional
//! `dimension`, and per-variant payload. A file holds either a single body
//! or a suite `{"bodies": [{"name": ..., "body": {...}}, ...]}`.
//! Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ConvexBody, GeometryError};

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("body file parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("body construction failed: {0}")]
    Geometry(#[from] GeometryError),
    #[error("declared dimension {declared} does not match payload dimension {actual}")]
    DimensionMismatch { declared: usize, actual: usize },
}

pub type Result<T> = std::result::Result<T, SchemaError>;

/// One body description as stored on disk.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Ball {
        #[serde(skip_serializing_if = "Option::is_none")]
        dimension: Option<usize>,
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        #[serde(skip_serializing_if = "Option::is_none")]
        dimension: Option<usize>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Simplex {
        #[serde(skip_serializing_if = "Option::is_none")]
        dimension: Option<usize>,
        vertices: Vec<Vec<f64>>,
    },
    Hpolytope {
        #[serde(skip_serializing_if = "Option::is_none")]
        dimension: Option<usize>,
        rows: Vec<Vec<f64>>,
        offsets: Vec<f64>,
        interior_point: Vec<f64>,
        bounding_radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vertices: Option<Vec<Vec<f64>>>,
    },
    Ellipsoid {
        #[serde(skip_serializing_if = "Option::is_none")]
        dimension: Option<usize>,
        shape: Vec<Vec<f64>>,
        center: Vec<f64>,
    },
    Translated {
        shift: Vec<f64>,
        inner: Box<BodySpec>,
    },
}

impl BodySpec {
    pub fn build(&self) -> Result<ConvexBody> {
        let body = match self {
            BodySpec::Ball {
                dimension,
                center,
                radius,
            } => {
                check_dimension(*dimension, center.len())?;
                ConvexBody::ball(center.clone(), *radius)?
            }
            BodySpec::Box {
                dimension,
                lower,
                upper,
            } => {
                check_dimension(*dimension, lower.len())?;
                ConvexBody::cuboid(lower.clone(), upper.clone())?
            }
            BodySpec::Simplex {
                dimension,
                vertices,
            } => {
                let actual = vertices.first().map_or(0, Vec::len);
                check_dimension(*dimension, actual)?;
                ConvexBody::simplex(vertices.clone())?
            }
            BodySpec::Hpolytope {
                dimension,
                rows,
                offsets,
                interior_point,
                bounding_radius,
                vertices,
            } => {
                check_dimension(*dimension, interior_point.len())?;
                ConvexBody::hpolytope(
                    rows.clone(),
                    offsets.clone(),
                    interior_point.clone(),
                    *bounding_radius,
                    vertices.clone(),
                )?
            }
            BodySpec::Ellipsoid {
                dimension,
                shape,
                center,
            } => {
                check_dimension(*dimension, center.len())?;
                ConvexBody::ellipsoid(shape.clone(), center.clone())?
            }
            BodySpec::Translated { shift, inner } => {
                let inner_body = inner.build()?;
                ConvexBody::translated(inner_body, shift.clone())?
            }
        };
        Ok(body)
    }
}

fn check_dimension(declared: Option<usize>, actual: usize) -> Result<()> {
    match declared {
        Some(d) if d != actual => Err(SchemaError::DimensionMismatch {
            declared: d,
            actual,
        }),
        _ => Ok(()),
    }
}

/// A named entry of a suite file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    pub name: String,
    pub body: BodySpec,
}

/// On-disk layout: a bare body or a suite.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BodyFile {
    Suite { bodies: Vec<SuiteEntry> },
    Single(BodySpec),
}

/// Parses a body file; single bodies get `fallback_name`.
pub fn parse_bodies(json: &str, fallback_name: &str) -> Result<Vec<(String, ConvexBody)>> {
    let file: BodyFile = serde_json::from_str(json)?;
    match file {
        BodyFile::Single(spec) => Ok(vec![(fallback_name.to_string(), spec.build()?)]),
        BodyFile::Suite { bodies } => bodies
            .into_iter()
            .map(|e| Ok((e.name, e.body.build()?)))
            .collect(),
    }
}
