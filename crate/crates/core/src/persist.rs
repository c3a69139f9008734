//! Versioned JSON envelope shared by every model file.
//!
//! ```json
//! {"format":"kbner-model","version":1,"section":"boundary","payload":{...}}
//! ```

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_NAME: &str = "kbner-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("not a kbner model file (format {0:?})")]
    Format(String),
    #[error("model file version {found} is not supported (expected {expected})")]
    Version { found: u64, expected: u32 },
    #[error("model file holds section {found:?}, expected {expected:?}")]
    Section { found: String, expected: String },
}

#[derive(Serialize)]
struct EnvelopeOut<'a, T> {
    format: &'a str,
    version: u32,
    section: &'a str,
    payload: &'a T,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u64,
    section: String,
}

#[derive(Deserialize)]
struct EnvelopeIn<T> {
    payload: T,
}

pub fn to_string<T: Serialize>(section: &str, payload: &T) -> Result<String, PersistError> {
    Ok(serde_json::to_string(&EnvelopeOut {
        format: FORMAT_NAME,
        version: FORMAT_VERSION,
        section,
        payload,
    })?)
}

pub fn from_str<T: DeserializeOwned>(section: &str, text: &str) -> Result<T, PersistError> {
    let header: Header = serde_json::from_str(text)?;
    if header.format != FORMAT_NAME {
        return Err(PersistError::Format(header.format));
    }
    if header.version != u64::from(FORMAT_VERSION) {
        return Err(PersistError::Version {
            found: header.version,
            expected: FORMAT_VERSION,
        });
    }
    if header.section != section {
        return Err(PersistError::Section {
            found: header.section,
            expected: section.to_string(),
        });
    }
    let env: EnvelopeIn<T> = serde_json::from_str(text)?;
    Ok(env.payload)
}

pub fn save<T: Serialize>(path: &Path, section: &str, payload: &T) -> Result<(), PersistError> {
    let text = to_string(section, payload)?;
    fs::write(path, text).map_err(|source| PersistError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load<T: DeserializeOwned>(path: &Path, section: &str) -> Result<T, PersistError> {
    let text = fs::read_to_string(path).map_err(|source| PersistError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_str(section, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_checks() {
        let s = to_string("boundary", &vec![1.5f64, -2.0]).unwrap();
        let v: Vec<f64> = from_str("boundary", &s).unwrap();
        assert_eq!(v, vec![1.5, -2.0]);
        assert!(matches!(
            from_str::<Vec<f64>>("classifier", &s),
            Err(PersistError::Section { .. })
        ));
        let bumped = s.replace("\"version\":1", "\"version\":2");
        assert!(matches!(
            from_str::<Vec<f64>>("boundary", &bumped),
            Err(PersistError::Version { found: 2, .. })
        ));
        let other = s.replace("kbner-model", "something");
        assert!(matches!(
            from_str::<Vec<f64>>("boundary", &other),
            Err(PersistError::Format(_))
        ));
    }
}
