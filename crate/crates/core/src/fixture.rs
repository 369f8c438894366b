//! Deterministic synthetic corpora for tests, benchmarks and demos.
//!
//! Library names are built from pronounceable pseudo-words so that entity
//! tokens are unambiguous, while descriptions draw on shared domain
//! vocabularies so that many libraries compete on every non-entity term.
//! Sibling artifacts of one project share their name tokens and differ only
//! in their descriptions, which is what makes top-1 selection non-trivial.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{DatasetSplit, LibraryRecord, TextCleaner, VulnerabilityRecord};
use crate::error::{Error, Result};
use crate::textproc::pos_filter;

const CONSONANTS: &[u8] = b"bdfgklmnprtvz";
const VOWELS: &[u8] = b"aeiou";

const TLDS: &[&str] = &["org", "com", "io", "net"];
const GROUP_SUFFIXES: &[&str] = &["plugins", "tools", "ext", "modules"];
const ASPECTS: &[&str] = &[
    "core",
    "api",
    "client",
    "server",
    "plugin",
    "web",
    "cli",
    "utils",
    "common",
    "extras",
    "parent",
    "starter",
    "connector",
    "adapter",
    "bridge",
];

/// Topic vocabularies. Words are distinct across topics.
const DOMAINS: &[&[&str]] = &[
    &[
        "mail",
        "smtp",
        "mailbox",
        "inbox",
        "subject",
        "attachment",
        "message",
        "sender",
        "recipient",
        "imap",
        "newsletter",
        "notification",
        "digest",
        "envelope",
    ],
    &[
        "xml",
        "document",
        "element",
        "namespace",
        "stylesheet",
        "xpath",
        "transformer",
        "dtd",
        "attribute",
        "markup",
        "soap",
        "xslt",
        "sax",
        "dom",
    ],
    &[
        "http",
        "servlet",
        "session",
        "cookie",
        "url",
        "browser",
        "endpoint",
        "route",
        "websocket",
        "proxy",
        "html",
        "form",
        "header",
        "cors",
    ],
    &[
        "password",
        "credential",
        "token",
        "login",
        "ldap",
        "kerberos",
        "oauth",
        "realm",
        "principal",
        "keystore",
        "signature",
        "identity",
        "role",
        "saml",
    ],
    &[
        "database",
        "sql",
        "jdbc",
        "table",
        "column",
        "transaction",
        "connection",
        "cursor",
        "migration",
        "dialect",
        "row",
        "statement",
        "hibernate",
        "orm",
    ],
    &[
        "archive",
        "zip",
        "tar",
        "compression",
        "file",
        "directory",
        "path",
        "extraction",
        "checksum",
        "gzip",
        "bundle",
        "manifest",
        "jar",
        "symlink",
    ],
    &[
        "image",
        "pixel",
        "thumbnail",
        "bitmap",
        "png",
        "jpeg",
        "color",
        "canvas",
        "font",
        "chart",
        "graphic",
        "raster",
        "palette",
        "svg",
    ],
    &[
        "json",
        "yaml",
        "object",
        "mapper",
        "serializer",
        "payload",
        "gadget",
        "class",
        "type",
        "field",
        "property",
        "binding",
        "annotation",
        "polymorphic",
    ],
    &[
        "pipeline",
        "job",
        "build",
        "artifact",
        "agent",
        "workspace",
        "controller",
        "executor",
        "scheduler",
        "queue",
        "console",
        "script",
        "groovy",
        "node",
    ],
    &[
        "logger", "appender", "layout", "level", "event", "lookup", "pattern", "logback",
        "rotation", "audit", "journal", "syslog", "slf4j", "mdc",
    ],
    &[
        "cluster",
        "socket",
        "packet",
        "protocol",
        "channel",
        "frame",
        "buffer",
        "handshake",
        "tls",
        "broker",
        "topic",
        "consumer",
        "producer",
        "netty",
    ],
    &[
        "template",
        "expression",
        "variable",
        "sandbox",
        "engine",
        "macro",
        "placeholder",
        "directive",
        "scope",
        "context",
        "interpreter",
        "evaluation",
        "ognl",
        "spel",
    ],
];

const LIB_TEMPLATES: &[&str] = &[
    "{W0} {w1} library for {w2} and {w3} {w4}",
    "Provides {w0} {w1} support with {w2} {w3} integration",
    "A {w0} {w1} toolkit that handles {w2} {w3} and {w4}",
    "{P} {A}: {w0} {w1}, {w2} {w3} utilities",
    "Lightweight {w0} {w1} implementation with {w2} {w3} and {w4} helpers",
];

const GENERIC_DESCRIPTIONS: &[&str] = &[
    "Common utilities for application development",
    "Shared helpers and base classes",
    "Parent project descriptor",
    "Example module",
];

const VULN_TEMPLATES: &[&str] = &[
    "allows remote attackers to execute arbitrary code via a crafted {s0} {s1}",
    "allows remote attackers to read arbitrary files via a crafted {s0} in the {s1} {s2}",
    "does not properly validate the {s0} {s1}, which allows attackers to bypass authentication",
    "stores {s0} {s1} unencrypted where they can be viewed by users with access to the {s2}",
    "allows cross-site scripting via the {s0} {s1} parameter",
    "allows denial of service via a malformed {s0} {s1} with a large {s2}",
    "leaks the {s0} {s1} to unauthenticated users through the {s2}",
    "does not restrict the {s0} {s1}, resulting in privilege escalation via the {s2}",
];

const VERBOSE_TEMPLATE: &str =
    "The {d0} {d1} handling and the {d2} {d3} of the {d4} {d0} {d5} {d1} are affected by this {d2} {d6} issue";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixtureConfig {
    pub libraries: usize,
    pub vulnerabilities: usize,
    pub seed: u64,
    /// Share of vulnerabilities whose text adds a long run of topic words.
    pub verbose_fraction: f64,
    /// Share of non-target libraries without a description.
    pub description_less_fraction: f64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            libraries: 200,
            vulnerabilities: 40,
            seed: 7,
            verbose_fraction: 0.3,
            description_less_fraction: 0.08,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub catalog: Vec<LibraryRecord>,
    pub vulnerabilities: Vec<VulnerabilityRecord>,
}

struct Words {
    used: HashSet<String>,
    reserved: HashSet<&'static str>,
    cleaner: TextCleaner,
}

impl Words {
    fn new() -> Self {
        let mut reserved: HashSet<&'static str> = HashSet::new();
        for list in [TLDS, GROUP_SUFFIXES, ASPECTS] {
            reserved.extend(list.iter().copied());
        }
        for d in DOMAINS {
            reserved.extend(d.iter().copied());
        }
        for t in LIB_TEMPLATES
            .iter()
            .chain(GENERIC_DESCRIPTIONS)
            .chain(VULN_TEMPLATES)
            .chain(std::iter::once(&VERBOSE_TEMPLATE))
        {
            reserved.extend(
                t.split(|c: char| !c.is_ascii_alphanumeric())
                    .filter(|w| !w.is_empty()),
            );
        }
        Self {
            used: HashSet::new(),
            reserved,
            cleaner: TextCleaner::default(),
        }
    }

    /// A fresh pseudo-word of `syllables` consonant-vowel pairs that the
    /// query pipeline keeps as a noun.
    fn fresh(&mut self, rng: &mut ChaCha8Rng, syllables: usize) -> String {
        loop {
            let mut w = String::with_capacity(syllables * 2);
            for _ in 0..syllables {
                w.push(*CONSONANTS.choose(rng).unwrap() as char);
                w.push(*VOWELS.choose(rng).unwrap() as char);
            }
            if self.used.contains(&w)
                || self.reserved.contains(w.as_str())
                || self.cleaner.is_stopword(&w)
            {
                continue;
            }
            if pos_filter(&[w.as_str()]) != [w.clone()]
                || pos_filter(&[capitalize(&w)]) != [w.clone()]
            {
                continue;
            }
            self.used.insert(w.clone());
            return w;
        }
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_ascii_uppercase().to_string() + c.as_str(),
        None => String::new(),
    }
}

/// Replaces `{key}` placeholders; `{W0}` is `{w0}` capitalised.
fn fill(template: &str, values: &BTreeMap<String, String>) -> String {
    let mut out = String::with_capacity(template.len() + 32);
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let end = start + rest[start..].find('}').expect("unterminated placeholder");
        let key = &rest[start + 1..end];
        let lower = key.to_ascii_lowercase();
        let v = values
            .get(key)
            .or_else(|| values.get(&lower))
            .cloned()
            .unwrap_or_default();
        if key.chars().next().is_some_and(|c| c.is_ascii_uppercase()) && !values.contains_key(key) {
            out.push_str(&capitalize(&v));
        } else {
            out.push_str(&v);
        }
        rest = &rest[end + 1..];
    }
    out.push_str(rest);
    out
}

struct Lib {
    record: LibraryRecord,
    project: String,
    vendor: String,
    aspect: Option<String>,
    /// Topic words that occur in the description.
    signature: Vec<&'static str>,
    domain: usize,
    siblings: Vec<usize>,
}

fn sample_words(rng: &mut ChaCha8Rng, pool: &[&'static str], n: usize) -> Vec<&'static str> {
    pool.choose_multiple(rng, n.min(pool.len()))
        .copied()
        .collect()
}

fn library_description(rng: &mut ChaCha8Rng, lib: &Lib) -> String {
    let template = LIB_TEMPLATES.choose(rng).unwrap();
    let mut values = BTreeMap::new();
    for (i, w) in lib.signature.iter().enumerate() {
        values.insert(format!("w{i}"), w.to_string());
    }
    values.insert("P".into(), capitalize(&lib.project));
    values.insert(
        "A".into(),
        lib.aspect.clone().unwrap_or_else(|| "core".into()),
    );
    fill(template, &values)
}

fn generate_libraries(rng: &mut ChaCha8Rng, words: &mut Words, n: usize) -> Vec<Lib> {
    let mut libs: Vec<Lib> = Vec::with_capacity(n);
    while libs.len() < n {
        let vendor = words.fresh(rng, 3);
        let tld = TLDS.choose(rng).unwrap();
        let projects = rng.random_range(1..=3);
        for _ in 0..projects {
            if libs.len() >= n {
                break;
            }
            let group = if rng.random_bool(0.3) {
                format!("{tld}.{vendor}.{}", GROUP_SUFFIXES.choose(rng).unwrap())
            } else {
                format!("{tld}.{vendor}")
            };
            let project = words.fresh(rng, 3);
            let artifacts = rng.random_range(1..=4).min(n - libs.len());
            let aspects = sample_words(rng, ASPECTS, artifacts);
            let mut domains: Vec<usize> = (0..DOMAINS.len()).collect();
            domains.shuffle(rng);
            let first = libs.len();
            for (i, aspect) in aspects.iter().enumerate() {
                let aspect = (i > 0 || rng.random_bool(0.5)).then(|| aspect.to_string());
                let artifact = match &aspect {
                    Some(a) => format!("{project}-{a}"),
                    None => project.clone(),
                };
                let domain = domains[i % domains.len()];
                let signature = sample_words(rng, DOMAINS[domain], 5);
                libs.push(Lib {
                    record: LibraryRecord::new(format!("{group}:{artifact}"), ""),
                    project: project.clone(),
                    vendor: vendor.clone(),
                    aspect,
                    signature,
                    domain,
                    siblings: Vec::new(),
                });
            }
            let members: Vec<usize> = (first..libs.len()).collect();
            for &m in &members {
                libs[m].siblings = members.iter().copied().filter(|&o| o != m).collect();
            }
        }
    }
    for lib in libs.iter_mut() {
        let d = library_description(rng, lib);
        lib.record.description = d;
    }
    libs
}

fn version(rng: &mut ChaCha8Rng) -> String {
    let v = format!(
        "{}.{}.{}",
        rng.random_range(0..6),
        rng.random_range(0..20),
        rng.random_range(0..10)
    );
    if rng.random_bool(0.5) {
        format!("{v} and earlier")
    } else {
        format!("before {v}")
    }
}

fn vulnerability_text(rng: &mut ChaCha8Rng, targets: &[&Lib], verbose: bool) -> String {
    let main = targets[0];
    let mut mention = String::new();
    if rng.random_bool(0.3) {
        mention.push_str(&capitalize(&main.vendor));
        mention.push(' ');
    }
    mention.push_str(&capitalize(&main.project));
    for t in targets {
        if let Some(a) = &t.aspect {
            if rng.random_bool(0.6) {
                mention.push(' ');
                mention.push_str(&capitalize(a));
            }
        }
    }
    let mut sig: Vec<&str> = Vec::new();
    for t in targets {
        sig.extend(sample_words(rng, &t.signature, 2));
    }
    sig.shuffle(rng);
    let mut values = BTreeMap::new();
    for (i, w) in sig.iter().cycle().take(3).enumerate() {
        values.insert(format!("s{i}"), w.to_string());
    }
    let attack = fill(VULN_TEMPLATES.choose(rng).unwrap(), &values);
    let mut text = format!("{mention} {} {attack}.", version(rng));
    if verbose {
        // topic words shared with many other libraries, none from the target's signature
        let pool: Vec<&'static str> = DOMAINS[main.domain]
            .iter()
            .copied()
            .filter(|w| !main.signature.contains(w))
            .collect();
        let picked = sample_words(rng, &pool, 7);
        let mut dv = BTreeMap::new();
        for (i, w) in picked.iter().cycle().take(7).enumerate() {
            dv.insert(format!("d{i}"), w.to_string());
        }
        text.push(' ');
        text.push_str(&fill(VERBOSE_TEMPLATE, &dv));
        text.push('.');
    }
    text
}

/// Builds the catalog and labeled vulnerabilities.
///
/// A fifth of the vulnerability budget (rounded down) picks "popular"
/// libraries that each receive three vulnerabilities; every other
/// vulnerability targets a library no other vulnerability names, so both
/// seen and unseen labels occur in any split.
pub fn generate(config: &FixtureConfig) -> Result<Fixture> {
    if config.libraries == 0 {
        return Err(Error::Config("fixture needs at least one library".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut words = Words::new();
    let mut libs = generate_libraries(&mut rng, &mut words, config.libraries);

    let popular = config.vulnerabilities / 5;
    let unique = config.vulnerabilities - 3 * popular;
    let mut order: Vec<usize> = (0..libs.len()).collect();
    order.shuffle(&mut rng);
    if popular + unique > order.len() {
        return Err(Error::Config(format!(
            "{} libraries cannot host {} distinct targets",
            libs.len(),
            popular + unique
        )));
    }
    let targets: Vec<usize> = order[..popular + unique].to_vec();
    let mut reserved: HashSet<usize> = targets.iter().copied().collect();

    let mut plan: Vec<Vec<usize>> = Vec::with_capacity(config.vulnerabilities);
    for &t in &targets[..popular] {
        for _ in 0..3 {
            plan.push(vec![t]);
        }
    }
    for &t in &targets[popular..] {
        let mut labels = vec![t];
        if rng.random_bool(0.15) {
            let free: Vec<usize> = libs[t]
                .siblings
                .iter()
                .copied()
                .filter(|s| !reserved.contains(s))
                .collect();
            if let Some(&s) = free.choose(&mut rng) {
                reserved.insert(s);
                labels.push(s);
            }
        }
        plan.push(labels);
    }
    plan.shuffle(&mut rng);

    let mut vulns = Vec::with_capacity(plan.len());
    for (i, labels) in plan.iter().enumerate() {
        let verbose = rng.random_bool(config.verbose_fraction);
        let targets: Vec<&Lib> = labels.iter().map(|&l| &libs[l]).collect();
        let text = vulnerability_text(&mut rng, &targets, verbose);
        vulns.push(VulnerabilityRecord::new(
            format!("CVE-2024-{}", 10_000 + i),
            text,
            labels.iter().map(|&l| libs[l].record.name.clone()),
        ));
    }

    for (i, lib) in libs.iter_mut().enumerate() {
        if !reserved.contains(&i) && rng.random_bool(config.description_less_fraction) {
            lib.record.description.clear();
        }
    }
    let mut catalog: Vec<LibraryRecord> = libs.into_iter().map(|l| l.record).collect();
    catalog.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(Fixture {
        catalog,
        vulnerabilities: vulns,
    })
}

/// `count` unrelated libraries whose names never reuse a fixture name token.
///
/// Their descriptions use the same topic words as the fixture, so they
/// compete with the real libraries on every non-entity term.
pub fn distractors(count: usize, seed: u64, avoid: &[LibraryRecord]) -> Vec<LibraryRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD157_AC70);
    let cleaner = TextCleaner::default();
    let avoid_tokens: HashSet<String> = avoid
        .iter()
        .flat_map(|l| cleaner.name_tokens(&l.name))
        .collect();
    let mut names: HashSet<String> = avoid.iter().map(|l| l.name.clone()).collect();
    let mut out = Vec::with_capacity(count);
    let word = |rng: &mut ChaCha8Rng| -> String {
        loop {
            let mut w = String::with_capacity(8);
            for _ in 0..4 {
                w.push(*CONSONANTS.choose(rng).unwrap() as char);
                w.push(*VOWELS.choose(rng).unwrap() as char);
            }
            if !avoid_tokens.contains(&w) {
                return w;
            }
        }
    };
    while out.len() < count {
        let group = format!("{}.{}", TLDS.choose(&mut rng).unwrap(), word(&mut rng));
        let project = word(&mut rng);
        let artifact = if rng.random_bool(0.5) {
            format!("{project}-{}", ASPECTS.choose(&mut rng).unwrap())
        } else {
            project.clone()
        };
        let name = format!("{group}:{artifact}");
        if !names.insert(name.clone()) {
            continue;
        }
        let roll: f64 = rng.random();
        let description = if roll < 0.1 {
            String::new()
        } else if roll < 0.2 {
            GENERIC_DESCRIPTIONS.choose(&mut rng).unwrap().to_string()
        } else {
            let domain = DOMAINS.choose(&mut rng).unwrap();
            let lib = Lib {
                record: LibraryRecord::new(name.clone(), ""),
                project: project.clone(),
                vendor: String::new(),
                aspect: None,
                signature: sample_words(&mut rng, domain, 5),
                domain: 0,
                siblings: Vec::new(),
            };
            library_description(&mut rng, &lib)
        };
        out.push(LibraryRecord::new(name, description));
    }
    out
}

impl Fixture {
    /// The catalog plus `count` distractors, sorted by coordinate.
    pub fn catalog_with_distractors(&self, count: usize, seed: u64) -> Vec<LibraryRecord> {
        let mut all = self.catalog.clone();
        all.extend(distractors(count, seed, &self.catalog));
        all.sort_by(|a, b| a.name.cmp(&b.name));
        all
    }

    /// Every label in the fixture.
    pub fn labels(&self) -> BTreeSet<String> {
        self.vulnerabilities
            .iter()
            .flat_map(|v| v.labels.iter().cloned())
            .collect()
    }
}

/// A split whose test set has `round(test_size * zero_fraction)`
/// vulnerabilities with only unseen labels and whose remaining test
/// vulnerabilities each share a label with training.
///
/// About a quarter of the non-test records go to validation.
pub fn zero_shot_split(
    vulns: &[VulnerabilityRecord],
    test_size: usize,
    zero_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit> {
    if !(0.0..=1.0).contains(&zero_fraction) || test_size == 0 || test_size > vulns.len() {
        return Err(Error::Config("invalid zero-shot split parameters".into()));
    }
    let mut label_count: BTreeMap<&str, usize> = BTreeMap::new();
    for v in vulns {
        for l in &v.labels {
            *label_count.entry(l.as_str()).or_default() += 1;
        }
    }
    let mut shuffled: Vec<&VulnerabilityRecord> = vulns.iter().collect();
    shuffled.sort_by(|a, b| a.id.cmp(&b.id));
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let is_unique = |v: &VulnerabilityRecord| v.labels.iter().all(|l| label_count[l.as_str()] == 1);
    let want_zero = (test_size as f64 * zero_fraction).round() as usize;
    let mut test: Vec<&VulnerabilityRecord> = shuffled
        .iter()
        .copied()
        .filter(|v| is_unique(v))
        .take(want_zero)
        .collect();
    if test.len() < want_zero {
        return Err(Error::Config(format!(
            "only {} vulnerabilities have unique labels, {want_zero} needed",
            test.len()
        )));
    }
    // full-shot test records: at most one per label so a copy stays in training
    let mut taken_labels: HashSet<&str> = HashSet::new();
    for v in shuffled.iter().copied().filter(|v| !is_unique(v)) {
        if test.len() == test_size {
            break;
        }
        if v.labels.iter().all(|l| !taken_labels.contains(l.as_str())) {
            taken_labels.extend(v.labels.iter().map(String::as_str));
            test.push(v);
        }
    }
    if test.len() < test_size {
        return Err(Error::Config(
            "not enough repeated labels for the full-shot part".into(),
        ));
    }
    let in_test: HashSet<&str> = test.iter().map(|v| v.id.as_str()).collect();
    let rest: Vec<&VulnerabilityRecord> = shuffled
        .iter()
        .copied()
        .filter(|v| !in_test.contains(v.id.as_str()))
        .collect();

    // one anchor per full-shot label must stay in training
    let mut anchored: HashSet<&str> = HashSet::new();
    let mut training = Vec::new();
    let mut validation = Vec::new();
    let val_target = rest.len() / 4;
    for v in rest {
        let anchors = v
            .labels
            .iter()
            .any(|l| taken_labels.contains(l.as_str()) && !anchored.contains(l.as_str()));
        if anchors {
            anchored.extend(v.labels.iter().map(String::as_str));
            training.push(v.clone());
        } else if validation.len() < val_target {
            validation.push(v.clone());
        } else {
            training.push(v.clone());
        }
    }
    Ok(DatasetSplit {
        training,
        validation,
        testing: test.into_iter().cloned().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::validate_coordinate;
    use crate::eval::{label_set, zero_shot_split as classify};

    #[test]
    fn shape_and_determinism() {
        let c = FixtureConfig::default();
        let a = generate(&c).unwrap();
        let b = generate(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.catalog.len(), 200);
        assert_eq!(a.vulnerabilities.len(), 40);
        let names: BTreeSet<&str> = a.catalog.iter().map(|l| l.name.as_str()).collect();
        assert_eq!(names.len(), 200);
        for l in &a.catalog {
            validate_coordinate(&l.name).unwrap();
        }
        for v in &a.vulnerabilities {
            assert!(!v.labels.is_empty());
            assert!(v.labels.iter().all(|l| names.contains(l.as_str())));
        }
        assert_ne!(generate(&FixtureConfig { seed: 8, ..c }).unwrap(), a);
    }

    #[test]
    fn labels_share_entity_tokens() {
        let f = generate(&FixtureConfig::default()).unwrap();
        let cleaner = TextCleaner::default();
        for v in &f.vulnerabilities {
            let query: BTreeSet<String> = cleaner.clean(&v.description).into_iter().collect();
            for l in &v.labels {
                let shared = cleaner
                    .name_tokens(l)
                    .into_iter()
                    .filter(|t| query.contains(t))
                    .count();
                assert!(shared >= 1, "{} vs {l}", v.description);
            }
        }
    }

    #[test]
    fn distractors_avoid_fixture_names() {
        let f = generate(&FixtureConfig::default()).unwrap();
        let d = distractors(500, 1, &f.catalog);
        assert_eq!(d.len(), 500);
        let cleaner = TextCleaner::default();
        let fixture_tokens: HashSet<String> = f
            .catalog
            .iter()
            .flat_map(|l| cleaner.name_tokens(&l.name))
            .filter(|t| !TLDS.contains(&t.as_str()) && !ASPECTS.contains(&t.as_str()))
            .collect();
        for l in &d {
            validate_coordinate(&l.name).unwrap();
            assert!(cleaner
                .name_tokens(&l.name)
                .iter()
                .all(|t| !fixture_tokens.contains(t)));
        }
        assert_eq!(distractors(500, 1, &f.catalog), d);
    }

    #[test]
    fn zero_shot_split_hits_fraction() {
        let f = generate(&FixtureConfig {
            vulnerabilities: 100,
            libraries: 400,
            ..Default::default()
        })
        .unwrap();
        let s = zero_shot_split(&f.vulnerabilities, 20, 0.3, 3).unwrap();
        assert_eq!(s.testing.len(), 20);
        assert_eq!(s.training.len() + s.validation.len() + 20, 100);
        let (zero, full) = classify(&s.testing, &label_set(&s.training));
        assert_eq!(zero.len(), 6);
        assert_eq!(full.len(), 14);
    }

    #[test]
    fn fill_placeholders() {
        let mut v = BTreeMap::new();
        v.insert("w0".to_string(), "mail".to_string());
        v.insert("P".to_string(), "Kato".to_string());
        assert_eq!(fill("{W0} and {w0} of {P}", &v), "Mail and mail of Kato");
    }
}
