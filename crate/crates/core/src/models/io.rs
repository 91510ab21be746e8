//! Versioned JSON model container.
//!
//! The file is one JSON object: `version`, `kind`, and the model's own fields
//! (weights, kernel bank, scaler, vocabularies and embedding matrices as
//! nested arrays). Floats are written in shortest round-trip form.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde_json::{Map, Value};
use thiserror::Error;

use super::{KceModel, LetorModel, ModelKind, PageRankModel, SalienceModel};

pub const MODEL_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("I/O error on {path}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("model file is not valid JSON")]
    Json(#[from] serde_json::Error),
    #[error("model file has no version field")]
    MissingVersion,
    #[error("unsupported model version {found} (expected {expected})")]
    Version { expected: u64, found: Value },
    #[error("model file has no kind field")]
    MissingKind,
    #[error("model file holds a {found} model, expected {expected}")]
    KindMismatch { expected: ModelKind, found: ModelKind },
    #[error("model parameters are not finite")]
    NonFinite,
}

fn to_object(model: &SalienceModel) -> Result<Map<String, Value>, ModelError> {
    let value = match model {
        SalienceModel::Letor(m) => serde_json::to_value(m)?,
        SalienceModel::Kce(m) => serde_json::to_value(m)?,
        SalienceModel::PageRank(m) => serde_json::to_value(m)?,
    };
    let Value::Object(mut obj) = value else {
        unreachable!("models serialize to objects")
    };
    obj.insert("version".into(), Value::from(MODEL_VERSION));
    obj.insert("kind".into(), serde_json::to_value(model.kind())?);
    Ok(obj)
}

pub fn write_model<W: Write>(model: &SalienceModel, mut w: W) -> Result<(), ModelError> {
    let obj = to_object(model)?;
    serde_json::to_writer(&mut w, &obj)?;
    let io = |source| ModelError::Io {
        path: "<writer>".into(),
        source,
    };
    w.write_all(b"\n").map_err(io)?;
    w.flush().map_err(io)
}

pub fn save_model(model: &SalienceModel, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_model(model, BufWriter::new(file))
}

pub fn read_model<R: Read>(r: R) -> Result<SalienceModel, ModelError> {
    let value: Value = serde_json::from_reader(r)?;
    let Value::Object(mut obj) = value else {
        return Err(ModelError::MissingVersion);
    };
    match obj.remove("version") {
        None => return Err(ModelError::MissingVersion),
        Some(v) if v.as_u64() == Some(MODEL_VERSION) => {}
        Some(v) => {
            return Err(ModelError::Version {
                expected: MODEL_VERSION,
                found: v,
            })
        }
    }
    let kind: ModelKind = match obj.remove("kind") {
        None => return Err(ModelError::MissingKind),
        Some(k) => serde_json::from_value(k)?,
    };
    let rest = Value::Object(obj);
    let model = match kind {
        ModelKind::Letor => SalienceModel::Letor(serde_json::from_value(rest)?),
        ModelKind::Kce => SalienceModel::Kce(serde_json::from_value(rest)?),
        ModelKind::Pagerank => SalienceModel::PageRank(serde_json::from_value(rest)?),
    };
    let finite = match &model {
        SalienceModel::Letor(m) => m.is_finite(),
        SalienceModel::Kce(m) => m.is_finite(),
        SalienceModel::PageRank(m) => m.is_finite(),
    };
    if !finite {
        return Err(ModelError::NonFinite);
    }
    Ok(model)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SalienceModel, ModelError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_model(BufReader::new(file))
}

impl SalienceModel {
    pub fn into_kce(self) -> Result<KceModel, ModelError> {
        match self {
            SalienceModel::Kce(m) => Ok(m),
            other => Err(ModelError::KindMismatch {
                expected: ModelKind::Kce,
                found: other.kind(),
            }),
        }
    }

    pub fn into_letor(self) -> Result<LetorModel, ModelError> {
        match self {
            SalienceModel::Letor(m) => Ok(m),
            other => Err(ModelError::KindMismatch {
                expected: ModelKind::Letor,
                found: other.kind(),
            }),
        }
    }

    pub fn into_pagerank(self) -> Result<PageRankModel, ModelError> {
        match self {
            SalienceModel::PageRank(m) => Ok(m),
            other => Err(ModelError::KindMismatch {
                expected: ModelKind::Pagerank,
                found: other.kind(),
            }),
        }
    }
}
