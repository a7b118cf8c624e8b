use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::model::ModelSpec;

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical JSON encoding of a model description.
pub fn model_hash(spec: &ModelSpec) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(spec)?.as_bytes()))
}
