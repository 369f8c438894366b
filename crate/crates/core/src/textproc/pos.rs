//! A small lexicon-and-suffix part-of-speech tagger.
//!
//! Tagging runs in two passes. The first assigns each token a tag from a
//! closed-class lexicon, known verb inflections and suffix rules; unknown
//! tokens become nouns. The second pass resolves noun/verb ambiguity from
//! the neighbouring first-pass tags.

use std::collections::HashSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosTag {
    Nn,
    Nns,
    Nnp,
    Nnps,
    Jj,
    Jjr,
    Jjs,
    /// Verb, any form.
    Vb,
    Vbz,
    Vbn,
    Vbg,
    /// Determiners, prepositions, conjunctions, pronouns, modals, adverbs,
    /// numbers and anything else outside the retained set.
    Other,
}

impl PosTag {
    /// Nouns and adjectives: NN, NNS, NNP, NNPS, JJ, JJR, JJS.
    pub const RETAINED: [PosTag; 7] = [
        PosTag::Nn,
        PosTag::Nns,
        PosTag::Nnp,
        PosTag::Nnps,
        PosTag::Jj,
        PosTag::Jjr,
        PosTag::Jjs,
    ];

    pub fn is_retained(self) -> bool {
        Self::RETAINED.contains(&self)
    }

    fn is_nominal(self) -> bool {
        matches!(self, PosTag::Nn | PosTag::Nns | PosTag::Nnp | PosTag::Nnps)
    }

    fn is_verbal(self) -> bool {
        matches!(self, PosTag::Vb | PosTag::Vbz | PosTag::Vbn | PosTag::Vbg)
    }
}

/// Finer classes for closed-class words; the context rules need them even
/// though they all surface as [`PosTag::Other`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Det,
    Prep,
    Conj,
    Pron,
    PossPron,
    Modal,
    To,
    Wh,
    Adverb,
    Number,
    Aux,
    Open(PosTag),
}

impl Class {
    fn tag(self) -> PosTag {
        match self {
            Class::Open(t) => t,
            Class::Aux => PosTag::Vb,
            _ => PosTag::Other,
        }
    }
}

/// First-pass reading plus what the second pass may still change.
#[derive(Debug, Clone, Copy)]
enum Ambiguity {
    None,
    /// `-s` form of a verb that is also a plural noun.
    PluralOrThirdPerson,
    /// Base form of a verb that is also a noun.
    NounOrBase,
    /// `-ed` form of a known verb.
    Participle,
    /// `-ing` form of a known verb.
    Gerund,
}

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "some", "any", "each", "every", "all",
    "both", "either", "neither", "no", "another", "such",
];
const PREPOSITIONS: &[&str] = &[
    "of", "in", "on", "at", "by", "for", "with", "about", "against", "between", "into", "through",
    "during", "before", "after", "above", "below", "from", "up", "down", "out", "off", "over",
    "under", "via", "within", "without", "upon", "among", "across", "along", "around", "behind",
    "beyond", "despite", "except", "inside", "like", "near", "onto", "outside", "since", "than",
    "toward", "towards", "until", "unlike", "whereas", "while", "because", "although", "though",
    "if", "unless", "whether", "as", "per", "prior",
];
const CONJUNCTIONS: &[&str] = &["and", "or", "but", "nor", "yet", "so", "plus"];
const PRONOUNS: &[&str] = &[
    "i",
    "me",
    "we",
    "us",
    "you",
    "he",
    "him",
    "she",
    "her",
    "it",
    "they",
    "them",
    "itself",
    "themselves",
    "myself",
    "ourselves",
    "yourself",
    "herself",
    "himself",
    "one",
];
const POSSESSIVES: &[&str] = &["my", "our", "your", "his", "its", "their"];
const MODALS: &[&str] = &[
    "can", "could", "may", "might", "must", "shall", "should", "will", "would",
];
const WH_WORDS: &[&str] = &[
    "which",
    "who",
    "whom",
    "whose",
    "what",
    "where",
    "when",
    "why",
    "how",
    "whatever",
    "whichever",
    "there",
];
const ADVERBS: &[&str] = &[
    "not",
    "also",
    "very",
    "only",
    "just",
    "too",
    "then",
    "here",
    "now",
    "again",
    "further",
    "once",
    "even",
    "still",
    "already",
    "never",
    "always",
    "often",
    "however",
    "thus",
    "therefore",
    "instead",
    "else",
    "more",
    "most",
    "less",
    "least",
    "well",
    "much",
    "n",
];
const NUMBERS: &[&str] = &[
    "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "hundred", "thousand",
];
const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "do", "does", "did", "doing", "done",
    "have", "has", "had", "having", "get", "gets", "got", "gotten",
];
const COMPARATIVES: &[&str] = &[
    "larger", "smaller", "higher", "lower", "greater", "better", "worse", "newer", "older",
    "earlier", "later", "longer", "shorter", "weaker", "stronger",
];
const SUPERLATIVES: &[&str] = &[
    "largest",
    "smallest",
    "highest",
    "lowest",
    "greatest",
    "best",
    "worst",
    "newest",
    "oldest",
    "earliest",
    "latest",
    "longest",
    "shortest",
    "weakest",
    "strongest",
];
/// Verbs whose base form is rarely a noun.
const VERB_ONLY: &[&str] = &[
    "allow",
    "execute",
    "obtain",
    "enable",
    "inject",
    "perform",
    "conduct",
    "gain",
    "disclose",
    "modify",
    "delete",
    "impersonate",
    "escalate",
    "overwrite",
    "retrieve",
    "deserialize",
    "serialize",
    "invoke",
    "cause",
    "contain",
    "provide",
    "permit",
    "prevent",
    "bypass",
    "exploit",
    "trigger",
    "expose",
    "affect",
    "specify",
    "include",
    "sanitize",
    "validate",
    "render",
    "generate",
    "encrypt",
    "decrypt",
    "authenticate",
    "authorize",
    "verify",
    "restrict",
    "implement",
    "receive",
    "send",
    "occur",
    "exist",
    "lack",
    "fail",
    "leverage",
    "consume",
    "traverse",
    "obtain",
    "become",
    "make",
    "take",
    "give",
    "see",
    "know",
    "lead",
    "hijack",
    "spoof",
    "forge",
    "elevate",
    "crash",
    "submit",
    "publish",
    "install",
    "configure",
    "define",
    "resolve",
    "evaluate",
    "manage",
    "connect",
    "disable",
    "ensure",
    "mitigate",
    "insert",
    "append",
    "reveal",
    "intercept",
    "sniff",
    "steal",
    "tamper",
    "abuse",
    "exhaust",
    "corrupt",
    "read",
    "write",
    "run",
    "set",
    "find",
];
/// Verbs whose base form is just as often a noun.
const NOUN_OR_VERB: &[&str] = &[
    "store",
    "view",
    "access",
    "use",
    "process",
    "request",
    "result",
    "load",
    "call",
    "return",
    "handle",
    "parse",
    "log",
    "open",
    "redirect",
    "leak",
    "upload",
    "download",
    "check",
    "fix",
    "add",
    "remove",
    "display",
    "support",
    "list",
    "show",
    "save",
    "sign",
    "reference",
    "need",
    "want",
    "escape",
    "craft",
    "cache",
    "query",
    "filter",
    "control",
    "design",
    "change",
    "update",
    "report",
    "test",
    "attack",
    "release",
    "map",
    "match",
    "format",
    "import",
    "export",
    "transfer",
    "send",
    "host",
    "link",
    "print",
    "scan",
    "search",
    "share",
    "stream",
    "start",
    "stop",
    "lock",
    "block",
    "crash",
    "overflow",
    "store",
    "visit",
    "click",
    "refer",
    "point",
    "work",
    "count",
    "limit",
    "mark",
];
/// `-ly` words that are not adverbs.
const LY_NOUNS: &[&str] = &[
    "family",
    "supply",
    "apply",
    "reply",
    "assembly",
    "anomaly",
    "italy",
    "poly",
    "butterfly",
    "monopoly",
    "ally",
    "rally",
    "jelly",
    "belly",
    "bully",
    "fly",
    "only",
];

struct Lexicon {
    verb_only: HashSet<&'static str>,
    noun_or_verb: HashSet<&'static str>,
}

fn lexicon() -> &'static Lexicon {
    static LEX: OnceLock<Lexicon> = OnceLock::new();
    LEX.get_or_init(|| Lexicon {
        verb_only: VERB_ONLY.iter().copied().collect(),
        noun_or_verb: NOUN_OR_VERB.iter().copied().collect(),
    })
}

impl Lexicon {
    fn is_verb(&self, stem: &str) -> bool {
        self.verb_only.contains(stem) || self.noun_or_verb.contains(stem)
    }

    /// Finds a known verb stem behind an inflected form.
    fn verb_stem(&self, word: &str, suffix: &str) -> Option<String> {
        let base = word.strip_suffix(suffix)?;
        if base.len() < 2 {
            return None;
        }
        let mut candidates = vec![base.to_string(), format!("{base}e")];
        if let Some(b) = base.strip_suffix('i') {
            candidates.push(format!("{b}y"));
        }
        let bytes = base.as_bytes();
        if bytes.len() >= 3 && bytes[bytes.len() - 1] == bytes[bytes.len() - 2] {
            candidates.push(base[..base.len() - 1].to_string());
        }
        if suffix == "s" {
            if let Some(b) = base.strip_suffix('e') {
                candidates.push(b.to_string());
            }
        }
        candidates.into_iter().find(|c| self.is_verb(c))
    }
}

fn first_pass(token: &str) -> (Class, Ambiguity) {
    let lower = token.to_ascii_lowercase();
    let w = lower.as_str();
    let lex = lexicon();
    let closed = [
        (DETERMINERS, Class::Det),
        (PREPOSITIONS, Class::Prep),
        (CONJUNCTIONS, Class::Conj),
        (PRONOUNS, Class::Pron),
        (POSSESSIVES, Class::PossPron),
        (MODALS, Class::Modal),
        (WH_WORDS, Class::Wh),
        (ADVERBS, Class::Adverb),
        (NUMBERS, Class::Number),
        (AUXILIARIES, Class::Aux),
    ];
    if w == "to" {
        return (Class::To, Ambiguity::None);
    }
    for (list, class) in closed {
        if list.contains(&w) {
            return (class, Ambiguity::None);
        }
    }
    if w.chars().all(|c| c.is_ascii_digit()) {
        return (Class::Number, Ambiguity::None);
    }
    if COMPARATIVES.contains(&w) {
        return (Class::Open(PosTag::Jjr), Ambiguity::None);
    }
    if SUPERLATIVES.contains(&w) {
        return (Class::Open(PosTag::Jjs), Ambiguity::None);
    }
    if token.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
        return (Class::Open(PosTag::Nnp), Ambiguity::None);
    }
    if lex.verb_only.contains(w) {
        return (Class::Open(PosTag::Vb), Ambiguity::None);
    }
    if lex.noun_or_verb.contains(w) {
        return (Class::Open(PosTag::Nn), Ambiguity::NounOrBase);
    }
    if w.len() > 4 && w.starts_with("un") && w.ends_with("ed") {
        return (Class::Open(PosTag::Jj), Ambiguity::None);
    }
    if w.ends_with("ed") {
        return match lex.verb_stem(w, "ed").or_else(|| lex.verb_stem(w, "d")) {
            Some(_) => (Class::Open(PosTag::Vbn), Ambiguity::Participle),
            None => (Class::Open(PosTag::Jj), Ambiguity::None),
        };
    }
    if w.ends_with("ing") && lex.verb_stem(w, "ing").is_some() {
        return (Class::Open(PosTag::Vbg), Ambiguity::Gerund);
    }
    if w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is") {
        if let Some(stem) = lex.verb_stem(w, "s") {
            return if lex.verb_only.contains(stem.as_str()) {
                (Class::Open(PosTag::Vbz), Ambiguity::None)
            } else {
                (Class::Open(PosTag::Nns), Ambiguity::PluralOrThirdPerson)
            };
        }
        return (Class::Open(PosTag::Nns), Ambiguity::None);
    }
    if w.len() > 4 && w.ends_with("ly") && !LY_NOUNS.contains(&w) {
        return (Class::Adverb, Ambiguity::None);
    }
    const ADJ_SUFFIXES: &[&str] = &["ous", "ful", "able", "ible", "less", "ive", "ical", "ic"];
    if w.len() > 4 && ADJ_SUFFIXES.iter().any(|s| w.ends_with(s)) {
        return (Class::Open(PosTag::Jj), Ambiguity::None);
    }
    (Class::Open(PosTag::Nn), Ambiguity::None)
}

/// Tags a case-preserved token sequence.
pub fn tag<S: AsRef<str>>(tokens: &[S]) -> Vec<PosTag> {
    let first: Vec<(Class, Ambiguity)> = tokens.iter().map(|t| first_pass(t.as_ref())).collect();
    let class_at = |i: isize| -> Option<Class> {
        if i < 0 {
            None
        } else {
            first.get(i as usize).map(|(c, _)| *c)
        }
    };

    first
        .iter()
        .enumerate()
        .map(|(i, &(class, amb))| {
            let i = i as isize;
            let prev = class_at(i - 1);
            let next = class_at(i + 1);
            match amb {
                Ambiguity::None => class.tag(),
                Ambiguity::PluralOrThirdPerson => {
                    let object_follows = match next {
                        Some(Class::Open(t)) => t.is_nominal() || t == PosTag::Jj,
                        Some(Class::Det | Class::PossPron | Class::Adverb | Class::Prep) => true,
                        _ => false,
                    };
                    let noun_context = matches!(
                        prev,
                        Some(Class::Det | Class::PossPron | Class::Prep | Class::Number)
                            | Some(Class::Open(PosTag::Jj))
                    );
                    if prev.is_some() && !noun_context && object_follows {
                        PosTag::Vbz
                    } else {
                        PosTag::Nns
                    }
                }
                Ambiguity::NounOrBase => match prev {
                    Some(Class::To | Class::Modal | Class::Pron) => PosTag::Vb,
                    _ => PosTag::Nn,
                },
                Ambiguity::Participle => {
                    let attributive = matches!(
                        prev,
                        Some(Class::Det | Class::Prep | Class::PossPron)
                    ) && matches!(next, Some(Class::Open(t)) if t.is_nominal() || t == PosTag::Jj);
                    if attributive {
                        PosTag::Jj
                    } else {
                        PosTag::Vbn
                    }
                }
                Ambiguity::Gerund => match prev {
                    None
                    | Some(
                        Class::Prep
                        | Class::To
                        | Class::Adverb
                        | Class::Pron
                        | Class::Modal
                        | Class::Aux,
                    ) => PosTag::Vbg,
                    Some(Class::Open(t)) if t.is_verbal() => PosTag::Vbg,
                    _ => PosTag::Nn,
                },
            }
        })
        .collect()
}

/// Keeps noun and adjective tokens, lowercased, in input order.
pub fn pos_filter<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tag(tokens)
        .into_iter()
        .zip(tokens)
        .filter(|(t, _)| t.is_retained())
        .map(|(_, tok)| tok.as_ref().to_ascii_lowercase())
        .collect()
}
