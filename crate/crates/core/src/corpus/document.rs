use serde::{Deserialize, Serialize};

use super::clean::TextCleaner;
use super::records::LibraryRecord;

/// A library's indexed text: name tokens followed by cleaned description tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryDocument {
    pub library: String,
    /// Raw description, kept for scorers that consume text directly.
    pub description: String,
    pub description_less: bool,
    /// Number of leading tokens that come from the coordinate.
    pub name_len: usize,
    pub tokens: Vec<String>,
}

impl LibraryDocument {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn name_tokens(&self) -> &[String] {
        &self.tokens[..self.name_len]
    }

    pub fn description_tokens(&self) -> &[String] {
        &self.tokens[self.name_len..]
    }
}

pub fn build_library_document(cleaner: &TextCleaner, lib: &LibraryRecord) -> LibraryDocument {
    let mut tokens = cleaner.name_tokens(&lib.name);
    let name_len = tokens.len();
    tokens.extend(cleaner.clean(&lib.description));
    LibraryDocument {
        library: lib.name.clone(),
        description: lib.description.clone(),
        description_less: lib.is_description_less(),
        name_len,
        tokens,
    }
}
