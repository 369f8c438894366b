//! Artifact files: versioned JSON envelopes, content hashes, the directory lock.

use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;
use crate::error::{Error, Result};

/// Wraps every JSON artifact without a header of its own.
#[derive(Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub format: String,
    pub version: u32,
    #[serde(flatten)]
    pub body: T,
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_envelope<T: Serialize>(path: &Path, format: &str, body: &T) -> Result<String> {
    let text = to_pretty_json(&Envelope {
        format: format.to_string(),
        version: crate::FORMAT_VERSION,
        body,
    })?;
    write_text(path, &text)?;
    Ok(sha256_hex(text.as_bytes()))
}

pub fn read_envelope<T: DeserializeOwned>(path: &Path, format: &str) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let env: Envelope<T> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if env.format != format || env.version != crate::FORMAT_VERSION {
        return Err(Error::Format(format!(
            "{}: expected {format} v{}, found {} v{}",
            path.display(),
            crate::FORMAT_VERSION,
            env.format,
            env.version
        )));
    }
    Ok(env.body)
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

/// JSONL with a header line naming the format. Returns the content hash.
pub fn write_records<T: Serialize>(path: &Path, format: &str, items: &[T]) -> Result<String> {
    let header = Header {
        format: format.to_string(),
        version: crate::FORMAT_VERSION,
    };
    let mut out = json_line(&header)?;
    for item in items {
        out.push_str(&json_line(item)?);
    }
    write_text(path, &out)?;
    Ok(sha256_hex(out.as_bytes()))
}

fn json_line<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string(value).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn read_records<T: DeserializeOwned>(path: &Path, format: &str) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |n: usize, e: serde_json::Error| Error::Parse {
        path: path.to_path_buf(),
        line: n + 1,
        column: e.column(),
        message: e.to_string(),
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let header: Header = match lines.next() {
        Some((n, l)) => serde_json::from_str(l).map_err(|e| parse_err(n, e))?,
        None => return Err(Error::Format(format!("{}: empty artifact", path.display()))),
    };
    if header.format != format || header.version != crate::FORMAT_VERSION {
        return Err(Error::Format(format!(
            "{}: expected {format} v{}, found {} v{}",
            path.display(),
            crate::FORMAT_VERSION,
            header.format,
            header.version
        )));
    }
    lines
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| parse_err(n, e)))
        .collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Fails with a message naming `what` when `path` does not exist.
pub fn require(path: &Path, what: &str) -> std::result::Result<(), CliError> {
    require_or(path, what, "")
}

/// [`require`] with a suggestion appended to the message.
pub fn require_or(path: &Path, what: &str, hint: &str) -> std::result::Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Missing {
            what: what.to_string(),
            path: path.to_path_buf(),
            hint: if hint.is_empty() {
                String::new()
            } else {
                format!(" ({hint})")
            },
        })
    }
}

/// Exclusive advisory lock on `<dir>/.lock`, released on drop.
pub struct DirLock {
    file: File,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> std::result::Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path: PathBuf = dir.join(".lock");
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        match file.try_lock() {
            Ok(()) => Ok(Self { file }),
            Err(fs::TryLockError::WouldBlock) => Err(CliError::Locked(dir.to_path_buf())),
            Err(fs::TryLockError::Error(e)) => Err(Error::io(&path, e).into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = self.file.unlock();
    }
}
