//! Versioned JSON envelopes shared by every persisted artifact.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

/// Schema version written into every artifact.
pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum ArtifactError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("missing integer field `version`")]
    MissingVersion,
    #[error("artifact schema version {found} is newer than supported version {supported}")]
    UnsupportedVersion { found: u64, supported: u64 },
    #[error("schema violation: {0}")]
    Invalid(String),
    #[error("field `{field}`: {reason}")]
    Schema { field: String, reason: String },
}

impl ArtifactError {
    pub fn schema(field: &str, reason: impl Into<String>) -> Self {
        ArtifactError::Schema { field: field.to_string(), reason: reason.into() }
    }
}

/// Pretty JSON with a trailing newline. Output is a pure function of `value`.
pub fn to_json<S: Serialize>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact types serialize");
    s.push('\n');
    s
}

/// Parses a versioned artifact, rejecting files newer than [`SCHEMA_VERSION`].
pub fn from_json<D: DeserializeOwned>(text: &str) -> Result<D, ArtifactError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ArtifactError::Json(e.to_string()))?;
    let version = value.get("version").and_then(Value::as_u64).ok_or(ArtifactError::MissingVersion)?;
    if version > SCHEMA_VERSION {
        return Err(ArtifactError::UnsupportedVersion { found: version, supported: SCHEMA_VERSION });
    }
    serde_json::from_value(value).map_err(|e| ArtifactError::Invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    struct Doc {
        version: u64,
        x: f64,
    }

    #[test]
    fn version_gate() {
        let ok: Doc = from_json(r#"{"version": 1, "x": 0.1}"#).unwrap();
        assert_eq!(ok.x, 0.1);
        assert_eq!(
            from_json::<Doc>(r#"{"version": 2, "x": 0.1}"#),
            Err(ArtifactError::UnsupportedVersion { found: 2, supported: 1 })
        );
        assert_eq!(from_json::<Doc>(r#"{"x": 0.1}"#), Err(ArtifactError::MissingVersion));
        let err = from_json::<Doc>(r#"{"version": 1}"#).unwrap_err();
        assert!(err.to_string().contains("missing field `x`"));
    }
}
