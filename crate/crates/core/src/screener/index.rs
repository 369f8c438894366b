use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::LibraryDocument;
use crate::error::{Error, Result};

const INDEX_FORMAT: &str = "depmatch-index";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub count: u32,
}

/// Term postings over the library documents.
///
/// Document ids follow ascending coordinate order, so ranking ties broken by
/// id are broken lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    libraries: Vec<String>,
    doc_lengths: Vec<u32>,
    description_less: Vec<bool>,
    term_ids: HashMap<String, u32>,
    terms: Vec<String>,
    postings: Vec<Vec<Posting>>,
}

impl InvertedIndex {
    pub fn build(docs: &[LibraryDocument]) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::validation("cannot index an empty catalog"));
        }
        let mut order: Vec<&LibraryDocument> = docs.iter().collect();
        order.sort_by(|a, b| a.library.cmp(&b.library));
        for pair in order.windows(2) {
            if pair[0].library == pair[1].library {
                return Err(Error::validation(format!(
                    "duplicate library coordinate {:?} in index input",
                    pair[0].library
                )));
            }
        }

        let mut index = Self {
            libraries: Vec::with_capacity(order.len()),
            doc_lengths: Vec::with_capacity(order.len()),
            description_less: Vec::with_capacity(order.len()),
            term_ids: HashMap::new(),
            terms: Vec::new(),
            postings: Vec::new(),
        };
        let mut counts: Vec<(&str, u32)> = Vec::new();
        for (doc, d) in order.into_iter().enumerate() {
            if d.tokens.is_empty() {
                return Err(Error::validation(format!(
                    "library document {:?} has no tokens",
                    d.library
                )));
            }
            counts.clear();
            let mut sorted: Vec<&str> = d.tokens.iter().map(String::as_str).collect();
            sorted.sort_unstable();
            for t in sorted {
                match counts.last_mut() {
                    Some((last, c)) if *last == t => *c += 1,
                    _ => counts.push((t, 1)),
                }
            }
            for &(term, count) in &counts {
                let id = match index.term_ids.get(term) {
                    Some(&id) => id,
                    None => {
                        let id = index.terms.len() as u32;
                        index.term_ids.insert(term.to_string(), id);
                        index.terms.push(term.to_string());
                        index.postings.push(Vec::new());
                        id
                    }
                };
                index.postings[id as usize].push(Posting {
                    doc: doc as u32,
                    count,
                });
            }
            index.libraries.push(d.library.clone());
            index.doc_lengths.push(d.tokens.len() as u32);
            index.description_less.push(d.description_less);
        }
        Ok(index)
    }

    pub fn num_docs(&self) -> usize {
        self.libraries.len()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn library(&self, doc: u32) -> &str {
        &self.libraries[doc as usize]
    }

    pub fn libraries(&self) -> &[String] {
        &self.libraries
    }

    pub fn doc_id(&self, library: &str) -> Option<u32> {
        self.libraries
            .binary_search_by(|l| l.as_str().cmp(library))
            .ok()
            .map(|i| i as u32)
    }

    pub fn doc_length(&self, doc: u32) -> u32 {
        self.doc_lengths[doc as usize]
    }

    pub fn is_description_less(&self, doc: u32) -> bool {
        self.description_less[doc as usize]
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.term_ids
            .get(term)
            .map_or(&[], |&id| &self.postings[id as usize])
    }

    /// Number of documents containing `term`.
    pub fn doc_frequency(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    /// Occurrences of `term` in `doc`.
    pub fn term_count(&self, term: &str, doc: u32) -> u32 {
        let p = self.postings(term);
        p.binary_search_by_key(&doc, |p| p.doc)
            .map_or(0, |i| p[i].count)
    }

    fn to_file(&self) -> IndexFile {
        let mut postings = BTreeMap::new();
        for (term, list) in self.terms.iter().zip(&self.postings) {
            postings.insert(
                term.clone(),
                list.iter().map(|p| [p.doc, p.count]).collect::<Vec<_>>(),
            );
        }
        IndexFile {
            format: INDEX_FORMAT.to_string(),
            version: crate::FORMAT_VERSION,
            num_docs: self.num_docs(),
            documents: self
                .libraries
                .iter()
                .zip(&self.doc_lengths)
                .zip(&self.description_less)
                .map(|((library, &length), &description_less)| IndexedDocument {
                    library: library.clone(),
                    length,
                    description_less,
                })
                .collect(),
            postings,
        }
    }

    fn from_file(file: IndexFile) -> Result<Self> {
        if file.format != INDEX_FORMAT || file.version != crate::FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported index format {:?} version {}",
                file.format, file.version
            )));
        }
        if file.num_docs != file.documents.len() {
            return Err(Error::Format(
                "index num_docs does not match documents".into(),
            ));
        }
        let n = file.num_docs as u32;
        let mut index = Self {
            libraries: Vec::with_capacity(file.documents.len()),
            doc_lengths: Vec::with_capacity(file.documents.len()),
            description_less: Vec::with_capacity(file.documents.len()),
            term_ids: HashMap::with_capacity(file.postings.len()),
            terms: Vec::with_capacity(file.postings.len()),
            postings: Vec::with_capacity(file.postings.len()),
        };
        for d in file.documents {
            index.libraries.push(d.library);
            index.doc_lengths.push(d.length);
            index.description_less.push(d.description_less);
        }
        if index.libraries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Format(
                "index documents are not in canonical order".into(),
            ));
        }
        for (term, list) in file.postings {
            let list: Vec<Posting> = list
                .into_iter()
                .map(|[doc, count]| Posting { doc, count })
                .collect();
            for p in &list {
                if p.doc >= n || p.count == 0 || p.count > index.doc_lengths[p.doc as usize] {
                    return Err(Error::Format(format!("invalid posting for term {term:?}")));
                }
            }
            index
                .term_ids
                .insert(term.clone(), index.terms.len() as u32);
            index.terms.push(term);
            index.postings.push(list);
        }
        Ok(index)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        serde_json::to_writer(&mut w, &self.to_file()).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let file: IndexFile =
            serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        Self::from_file(file)
    }
}

#[derive(Serialize, Deserialize)]
struct IndexedDocument {
    library: String,
    length: u32,
    description_less: bool,
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    format: String,
    version: u32,
    num_docs: usize,
    documents: Vec<IndexedDocument>,
    postings: BTreeMap<String, Vec<[u32; 2]>>,
}
