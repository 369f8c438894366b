use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Separator between group and artifact in a library coordinate.
pub const COORDINATE_SEPARATOR: char = ':';

/// One vulnerability and the libraries confirmed to be affected by it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VulnerabilityRecord {
    pub id: String,
    pub description: String,
    pub labels: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub references: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cwe: Vec<String>,
}

impl VulnerabilityRecord {
    pub fn new(
        id: impl Into<String>,
        description: impl Into<String>,
        labels: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            labels: labels.into_iter().map(Into::into).collect(),
            references: Vec::new(),
            cwe: Vec::new(),
        }
    }

    pub fn is_labeled(&self) -> bool {
        !self.labels.is_empty()
    }
}

/// A catalog library: its `group:artifact` coordinate and free-text description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryRecord {
    pub name: String,
    pub description: String,
}

impl LibraryRecord {
    pub fn new(name: impl Into<String>, description: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            description: description.into(),
        }
    }

    /// Libraries without a description are indexed by their name tokens only.
    pub fn is_description_less(&self) -> bool {
        self.description.trim().is_empty()
    }

    pub fn group(&self) -> &str {
        self.name
            .split_once(COORDINATE_SEPARATOR)
            .map_or("", |(g, _)| g)
    }

    pub fn artifact(&self) -> &str {
        self.name
            .split_once(COORDINATE_SEPARATOR)
            .map_or("", |(_, a)| a)
    }
}

/// Checks that `name` is a `group:artifact` coordinate whose halves both
/// carry at least one alphanumeric character.
pub fn validate_coordinate(name: &str) -> Result<()> {
    let separators = name.matches(COORDINATE_SEPARATOR).count();
    if separators != 1 {
        return Err(Error::validation(format!(
            "library name {name:?} must contain exactly one '{COORDINATE_SEPARATOR}' \
             group/artifact separator (found {separators})"
        )));
    }
    let (group, artifact) = name.split_once(COORDINATE_SEPARATOR).unwrap();
    for (part, what) in [(group, "group"), (artifact, "artifact")] {
        if !part.chars().any(|c| c.is_ascii_alphanumeric()) {
            return Err(Error::validation(format!(
                "library name {name:?} has an empty {what}"
            )));
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct RawVulnerability {
    id: Option<String>,
    description: Option<String>,
    labels: Option<Vec<String>>,
    #[serde(default)]
    references: Option<Vec<String>>,
    #[serde(default)]
    cwe: Option<Vec<String>>,
}

#[derive(Deserialize)]
struct RawLibrary {
    name: Option<String>,
    description: Option<String>,
}

fn missing(field: &str, index: usize) -> Error {
    Error::validation(format!(
        "record {index}: missing required field \"{field}\""
    ))
}

/// Reads either a JSON array or JSON Lines (one object per non-blank line).
pub fn read_json_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |e: serde_json::Error, line_offset: usize| Error::Parse {
        path: path.to_path_buf(),
        line: e.line() + line_offset,
        column: e.column(),
        message: e.to_string(),
    };

    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).map_err(|e| parse_err(e, 0));
    }

    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| parse_err(e, i))?);
    }
    Ok(out)
}

/// Loads a vulnerability corpus. Order is preserved; duplicate ids are rejected.
pub fn load_vulnerabilities(path: impl AsRef<Path>) -> Result<Vec<VulnerabilityRecord>> {
    let raw: Vec<RawVulnerability> = read_json_records(path.as_ref())?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(raw.len());
    for (index, r) in raw.into_iter().enumerate() {
        let id = r.id.ok_or_else(|| missing("id", index))?;
        let description = r.description.ok_or_else(|| missing("description", index))?;
        let labels = r.labels.ok_or_else(|| missing("labels", index))?;
        let record = VulnerabilityRecord {
            id,
            description,
            labels: labels.into_iter().collect(),
            references: r.references.unwrap_or_default(),
            cwe: r.cwe.unwrap_or_default(),
        };
        validate_vulnerability(&record, index)?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::validation(format!(
                "duplicate vulnerability id {:?} (record {index})",
                record.id
            )));
        }
        out.push(record);
    }
    Ok(out)
}

fn validate_vulnerability(record: &VulnerabilityRecord, index: usize) -> Result<()> {
    if record.id.trim().is_empty() {
        return Err(Error::validation(format!("record {index}: empty \"id\"")));
    }
    if record.labels.iter().any(|l| l.trim().is_empty()) {
        return Err(Error::validation(format!(
            "record {index} ({}): empty label string",
            record.id
        )));
    }
    Ok(())
}

/// Loads a library catalog. Description-less entries are kept.
pub fn load_libraries(path: impl AsRef<Path>) -> Result<Vec<LibraryRecord>> {
    let raw: Vec<RawLibrary> = read_json_records(path.as_ref())?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(raw.len());
    for (index, r) in raw.into_iter().enumerate() {
        let name = r.name.ok_or_else(|| missing("name", index))?;
        let description = r.description.ok_or_else(|| missing("description", index))?;
        validate_coordinate(&name)
            .map_err(|e| Error::validation(format!("record {index}: {e}")))?;
        if !seen.insert(name.clone()) {
            return Err(Error::validation(format!(
                "duplicate library name {name:?} (record {index})"
            )));
        }
        out.push(LibraryRecord { name, description });
    }
    Ok(out)
}

/// Writes records as JSON Lines.
pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = String::new();
    for item in items {
        buf.push_str(&serde_json::to_string(item).map_err(|e| Error::Format(e.to_string()))?);
        buf.push('\n');
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}
