use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use regex::{Captures, Regex};

use crate::error::{Error, Result};

/// Resource path of the bundled stopword list.
pub const BUNDLED_STOPWORDS_PATH: &str = "resources/stopwords/v1/english.txt";
const BUNDLED_STOPWORDS: &str = include_str!("../../resources/stopwords/v1/english.txt");

/// A stopword list, one lowercase word per line in its file form.
#[derive(Debug, Clone)]
pub struct Stopwords {
    words: HashSet<String>,
    source: String,
}

impl Stopwords {
    pub fn bundled() -> Arc<Stopwords> {
        static BUNDLED: OnceLock<Arc<Stopwords>> = OnceLock::new();
        BUNDLED
            .get_or_init(|| Arc::new(Stopwords::parse(BUNDLED_STOPWORDS, "bundled:v1")))
            .clone()
    }

    pub fn parse(text: &str, source: impl Into<String>) -> Self {
        let words = text
            .lines()
            .map(|l| l.trim().to_ascii_lowercase())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Self {
            words,
            source: source.into(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text, path.display().to_string()))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

fn contraction_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"([A-Za-z0-9]+)['\u{2019}]([A-Za-z]+)").unwrap())
}

/// Expands English contractions and strips possessive `'s`.
///
/// The letters after the apostrophe select the rule: `n't -> not`,
/// `'re -> are`, `'ve -> have`, `'ll -> will`, `'d -> would`, `'m -> am`,
/// `'s -> ""`. Anything else is left untouched.
pub fn expand_contractions(text: &str) -> String {
    contraction_regex()
        .replace_all(text, |caps: &Captures| {
            let word = &caps[1];
            let suffix = caps[2].to_ascii_lowercase();
            let lower = word.to_ascii_lowercase();
            match suffix.as_str() {
                "t" if lower.ends_with('n') => match lower.as_str() {
                    "can" => format!("{word} not"),
                    "won" => "will not".to_string(),
                    "shan" => "shall not".to_string(),
                    "ain" => "am not".to_string(),
                    _ => format!("{} not", &word[..word.len() - 1]),
                },
                "re" => format!("{word} are"),
                "ve" => format!("{word} have"),
                "ll" => format!("{word} will"),
                "d" => format!("{word} would"),
                "m" => format!("{word} am"),
                "s" => word.to_string(),
                _ => caps[0].to_string(),
            }
        })
        .into_owned()
}

/// Splits on every character that is not ASCII alphanumeric, keeping case.
pub fn split_alphanumeric(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
}

/// The four-step cleaning pipeline with a configurable stopword list.
#[derive(Debug, Clone)]
pub struct TextCleaner {
    stopwords: Arc<Stopwords>,
}

impl Default for TextCleaner {
    fn default() -> Self {
        Self {
            stopwords: Stopwords::bundled(),
        }
    }
}

impl TextCleaner {
    pub fn new(stopwords: Stopwords) -> Self {
        Self {
            stopwords: Arc::new(stopwords),
        }
    }

    pub fn stopwords(&self) -> &Stopwords {
        &self.stopwords
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    /// Contraction expansion, lowercasing, alphanumeric splitting, stopword removal.
    pub fn clean(&self, raw: &str) -> Vec<String> {
        let expanded = expand_contractions(raw).to_ascii_lowercase();
        split_alphanumeric(&expanded)
            .filter(|t| !self.stopwords.contains(t))
            .map(str::to_string)
            .collect()
    }

    /// Tokens of a library coordinate. Names are identifiers, so no stopword
    /// filtering is applied and a valid coordinate always yields a token.
    pub fn name_tokens(&self, name: &str) -> Vec<String> {
        split_alphanumeric(name)
            .map(|t| t.to_ascii_lowercase())
            .collect()
    }
}

/// [`TextCleaner::clean`] with the bundled stopword list.
pub fn clean_text(raw: &str) -> Vec<String> {
    static CLEANER: OnceLock<TextCleaner> = OnceLock::new();
    CLEANER.get_or_init(TextCleaner::default).clean(raw)
}
