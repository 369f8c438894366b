use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::corpus::{LibraryRecord, TextCleaner};
use crate::error::{Error, Result};

const VOCAB_MAGIC: &str = "# depmatch-vocab";

/// Decides, per query term, whether it names a library entity.
pub trait EntityRecognizer {
    fn recognize(&self, terms: &[String]) -> Vec<bool>;
}

/// Gazetteer of every token that occurs in some catalog library name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityVocabulary {
    tokens: BTreeSet<String>,
    source_count: usize,
}

impl EntityVocabulary {
    pub fn build(cleaner: &TextCleaner, catalog: &[LibraryRecord]) -> Self {
        let tokens = catalog
            .iter()
            .flat_map(|lib| cleaner.name_tokens(&lib.name))
            .collect();
        Self {
            tokens,
            source_count: catalog.len(),
        }
    }

    pub fn from_tokens(
        tokens: impl IntoIterator<Item = impl Into<String>>,
        source_count: usize,
    ) -> Self {
        Self {
            tokens: tokens.into_iter().map(Into::into).collect(),
            source_count,
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens.contains(token)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn source_count(&self) -> usize {
        self.source_count
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    /// Header line with the format version and source count, then one token per line, sorted.
    pub fn to_file_string(&self) -> String {
        let mut out = format!(
            "{VOCAB_MAGIC} v{} source_count={}\n",
            crate::FORMAT_VERSION,
            self.source_count
        );
        for t in &self.tokens {
            out.push_str(t);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty vocabulary file".into()))?;
        let rest = header
            .strip_prefix(VOCAB_MAGIC)
            .ok_or_else(|| Error::Format(format!("not a vocabulary file: {header:?}")))?;
        let mut version = None;
        let mut source_count = None;
        for field in rest.split_whitespace() {
            if let Some(v) = field.strip_prefix('v') {
                version = v.parse::<u32>().ok();
            } else if let Some(n) = field.strip_prefix("source_count=") {
                source_count = n.parse::<usize>().ok();
            }
        }
        match version {
            Some(v) if v == crate::FORMAT_VERSION => {}
            other => {
                return Err(Error::Format(format!(
                    "unsupported vocabulary format version {other:?}"
                )))
            }
        }
        let source_count = source_count
            .ok_or_else(|| Error::Format("vocabulary header lacks source_count".into()))?;
        Ok(Self {
            tokens: lines
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect(),
            source_count,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

impl EntityRecognizer for EntityVocabulary {
    fn recognize(&self, terms: &[String]) -> Vec<bool> {
        terms.iter().map(|t| self.contains(t)).collect()
    }
}

pub fn recognize_entities(terms: &[String], recognizer: &dyn EntityRecognizer) -> Vec<bool> {
    recognizer.recognize(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vocab(names: &[&str]) -> EntityVocabulary {
        let libs: Vec<_> = names.iter().map(|n| LibraryRecord::new(*n, "")).collect();
        EntityVocabulary::build(&TextCleaner::default(), &libs)
    }

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_name() {
        let v = vocab(&["org.jenkins-ci.plugins:mailer"]);
        let got: Vec<&str> = v.tokens().collect();
        assert_eq!(got, ["ci", "jenkins", "mailer", "org", "plugins"]);
        assert_eq!(v.source_count(), 1);
    }

    #[test]
    fn shared_group_deduplicated() {
        let v = vocab(&["a.b:c", "a.b:d"]);
        assert_eq!(v.len(), 4);
        assert_eq!(v.source_count(), 2);
    }

    #[test]
    fn membership_flags() {
        let v = EntityVocabulary::from_tokens(["jenkins"], 1);
        assert_eq!(
            v.recognize(&strings(&["jenkins", "passwords"])),
            [true, false]
        );
        assert!(v.recognize(&[]).is_empty());
    }

    #[test]
    fn jenkins_catalog_flags_mail_but_not_fused_commander() {
        // The three libraries named alongside CVE-2020-2318.
        let v = vocab(&[
            "org.jenkins-ci.plugins:mailer",
            "org.jenkins-ci.plugins:mailcommander",
            "org.jenkins-ci.plugins:job-direct-mail",
        ]);
        assert!(v.contains("mail"));
        // "commander" only appears fused inside "mailcommander".
        assert_eq!(
            recognize_entities(&strings(&["mail", "commander"]), &v),
            [true, false]
        );
    }

    #[test]
    fn file_round_trip_is_bit_exact() {
        let v = vocab(&[
            "org.apache.logging.log4j:log4j-core",
            "com.fasterxml:jackson",
        ]);
        let text = v.to_file_string();
        let back = EntityVocabulary::parse(&text).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.to_file_string(), text);
        assert!(EntityVocabulary::parse("junk\n").is_err());
        assert!(EntityVocabulary::parse("# depmatch-vocab v99 source_count=1\n").is_err());
    }

    proptest! {
        #[test]
        fn recognition_is_monotone(base in proptest::collection::vec("[a-d]{1,2}", 0..8),
                                   extra in proptest::collection::vec("[a-d]{1,2}", 0..8),
                                   terms in proptest::collection::vec("[a-d]{1,2}", 0..10)) {
            let small = EntityVocabulary::from_tokens(base.clone(), 1);
            let large = EntityVocabulary::from_tokens(base.into_iter().chain(extra), 2);
            for (s, l) in small.recognize(&terms).into_iter().zip(large.recognize(&terms)) {
                prop_assert!(!s || l);
            }
        }
    }
}
