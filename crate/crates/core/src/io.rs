//! Checksummed JSON envelopes and small file helpers.
//!
//! An envelope is a JSON object
//! `{"format": ..., "version": ..., "sha256": ..., "payload": {...}}` where
//! `sha256` is the hex digest of the payload's serialized bytes exactly as
//! they appear in the file.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    sha256: String,
    payload: Box<RawValue>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Writes `contents` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_envelope<T: Serialize>(path: &Path, format: &str, version: u32, payload: &T) -> Result<()> {
    let body = serde_json::to_string(payload)?;
    let envelope = Envelope {
        format: format.to_owned(),
        version,
        sha256: sha256_hex(body.as_bytes()),
        payload: RawValue::from_string(body)?,
    };
    write_atomic(path, serde_json::to_string(&envelope)?.as_bytes())
}

pub fn read_envelope<T: DeserializeOwned>(path: &Path, format: &str, version: u32) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let envelope: Envelope =
        serde_json::from_str(&text).map_err(|e| Error::format(path, format!("not an envelope: {e}")))?;
    if envelope.format != format {
        return Err(Error::format(
            path,
            format!("expected format `{format}`, found `{}`", envelope.format),
        ));
    }
    if envelope.version != version {
        return Err(Error::format(
            path,
            format!("unsupported version {} (expected {version})", envelope.version),
        ));
    }
    let digest = sha256_hex(envelope.payload.get().as_bytes());
    if digest != envelope.sha256 {
        return Err(Error::format(path, "checksum mismatch"));
    }
    serde_json::from_str(envelope.payload.get()).map_err(|e| Error::format(path, e.to_string()))
}
