use std::collections::BTreeSet;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::artifacts::{
    read_envelope, read_records, require, require_or, sha256_file, to_pretty_json, write_envelope,
    write_records, write_text, DirLock,
};
use super::config::PipelineConfig;
use super::{
    Cli, CliError, CliResult, Command, EvaluateArgs, GenFixtureArgs, IngestArgs, QueryArgs,
    SweepArgs,
};
use crate::corpus::{
    build_library_document, load_libraries, load_vulnerabilities, partition_dataset,
    partition_with_sizes, write_jsonl, DatasetSplit, LibraryDocument, LibraryRecord, SplitManifest,
    Stopwords, TextCleaner, VulnerabilityRecord,
};
use crate::error::Error;
use crate::eval::{
    label_set, macro_report, macro_report_with_shots, screening_recall_curve, MetricsReport,
    PredictionRecord, RankedEntry,
};
use crate::fixture::{self, FixtureConfig};
use crate::pipeline::Linker;
use crate::reranker::{
    encode_pair, rank_candidates, score_pair, serve, train, CoherenceScorer, EpochLog,
    ExternalScorer, ModelParameters, PairInput, PairQuery,
};
use crate::screener::{InvertedIndex, ScreenerConfig};
use crate::textproc::{EntityVocabulary, EntityWeighting};

const DOCUMENTS: &str = "documents.jsonl";
const VULNERABILITIES: &str = "vulnerabilities.jsonl";
const DOCUMENTS_FORMAT: &str = "depmatch-documents";
const VULNERABILITIES_FORMAT: &str = "depmatch-vulnerabilities";
const SPLIT_FORMAT: &str = "depmatch-split";

struct Ctx<'a> {
    config: PipelineConfig,
    json: bool,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

pub(super) fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let config = match &cli.config {
        Some(p) => {
            require(p, "config")?;
            PipelineConfig::load(p)?
        }
        None => PipelineConfig::default(),
    };
    let mut config = config.with_seed(cli.seed);
    if let Some(dir) = &cli.artifacts {
        config.paths.artifacts = dir.clone();
    }
    let mut ctx = Ctx {
        config,
        json: cli.json,
        out,
        err,
    };
    match &cli.command {
        Command::Ingest(a) => ingest(&mut ctx, a),
        Command::Index => index(&mut ctx),
        Command::Train => train_cmd(&mut ctx),
        Command::Query(a) => query(&mut ctx, a),
        Command::Evaluate(a) => evaluate(&mut ctx, a),
        Command::Sweep(a) => sweep(&mut ctx, a),
        Command::GenFixture(a) => gen_fixture(&mut ctx, a),
        Command::ServeScorer => serve_scorer(&ctx),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io("<stdout>", e).into())
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> CliResult<()> {
    emit(out, &to_pretty_json(value)?)
}

fn cleaner(config: &PipelineConfig) -> CliResult<TextCleaner> {
    Ok(match &config.paths.stopwords {
        Some(p) => {
            require(p, "stopword list")?;
            TextCleaner::new(Stopwords::load(p)?)
        }
        None => TextCleaner::default(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct InputFile {
    path: PathBuf,
    sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct CorpusManifest {
    seed: u64,
    catalog: InputFile,
    vulnerabilities: Option<InputFile>,
    documents: usize,
    description_less: usize,
    vulnerability_count: usize,
    vocabulary_size: usize,
    stopwords: String,
    documents_sha256: String,
    vulnerabilities_sha256: Option<String>,
    vocab_sha256: String,
}

fn ingest(ctx: &mut Ctx, args: &IngestArgs) -> CliResult<()> {
    let catalog_path = args
        .catalog
        .clone()
        .or_else(|| ctx.config.paths.catalog.clone())
        .ok_or_else(|| CliError::Usage("no catalog given (--catalog or paths.catalog)".into()))?;
    require(&catalog_path, "catalog")?;
    let vulns_path = args
        .vulns
        .clone()
        .or_else(|| ctx.config.paths.vulnerabilities.clone());
    if let Some(p) = &vulns_path {
        require(p, "vulnerability file")?;
    }
    let cleaner = cleaner(&ctx.config)?;
    let catalog = load_libraries(&catalog_path)?;
    let vulns = vulns_path.as_ref().map(load_vulnerabilities).transpose()?;

    let dir = ctx.config.paths.artifacts.clone();
    let _lock = DirLock::acquire(&dir)?;
    let vocab = EntityVocabulary::build(&cleaner, &catalog);
    let mut docs: Vec<LibraryDocument> = catalog
        .iter()
        .map(|l| build_library_document(&cleaner, l))
        .collect();
    docs.sort_by(|a, b| a.library.cmp(&b.library));
    let documents_sha256 = write_records(&dir.join(DOCUMENTS), DOCUMENTS_FORMAT, &docs)?;
    let vulnerabilities_sha256 = match &vulns {
        Some(v) => Some(write_records(
            &dir.join(VULNERABILITIES),
            VULNERABILITIES_FORMAT,
            v,
        )?),
        None => None,
    };
    let vocab_path = ctx.config.vocab_path();
    vocab.save(&vocab_path)?;

    let manifest = CorpusManifest {
        seed: ctx.config.seed,
        catalog: InputFile {
            sha256: sha256_file(&catalog_path)?,
            path: catalog_path,
        },
        vulnerabilities: match &vulns_path {
            Some(p) => Some(InputFile {
                path: p.clone(),
                sha256: sha256_file(p)?,
            }),
            None => None,
        },
        documents: docs.len(),
        description_less: docs.iter().filter(|d| d.description_less).count(),
        vulnerability_count: vulns.as_ref().map_or(0, Vec::len),
        vocabulary_size: vocab.len(),
        stopwords: cleaner.stopwords().source().to_string(),
        documents_sha256,
        vulnerabilities_sha256,
        vocab_sha256: sha256_file(&vocab_path)?,
    };
    write_envelope(
        &dir.join("corpus-manifest.json"),
        "depmatch-corpus-manifest",
        &manifest,
    )?;
    if ctx.json {
        emit_json(ctx.out, &manifest)
    } else {
        emit(
            ctx.out,
            &format!(
                "ingested {} documents ({} description-less), {} vulnerabilities, {} vocabulary tokens into {}\n",
                manifest.documents,
                manifest.description_less,
                manifest.vulnerability_count,
                manifest.vocabulary_size,
                dir.display()
            ),
        )
    }
}

fn load_documents(config: &PipelineConfig) -> CliResult<Vec<LibraryDocument>> {
    let path = config.artifact(DOCUMENTS);
    require_or(&path, "ingested documents", "run `ingest` first")?;
    Ok(read_records(&path, DOCUMENTS_FORMAT)?)
}

fn load_ingested_vulns(config: &PipelineConfig) -> CliResult<Vec<VulnerabilityRecord>> {
    let path = config.artifact(VULNERABILITIES);
    require_or(
        &path,
        "ingested vulnerabilities",
        "run `ingest --vulns` first",
    )?;
    Ok(read_records(&path, VULNERABILITIES_FORMAT)?)
}

#[derive(Debug, Serialize)]
struct IndexManifest<'a> {
    seed: u64,
    documents: usize,
    terms: usize,
    screener: &'a ScreenerConfig,
    documents_sha256: String,
    index_sha256: String,
}

fn index(ctx: &mut Ctx) -> CliResult<()> {
    let docs = load_documents(&ctx.config)?;
    let _lock = DirLock::acquire(&ctx.config.paths.artifacts)?;
    let kept: Vec<LibraryDocument> = docs
        .into_iter()
        .filter(|d| !(ctx.config.screener.exclude_description_less && d.description_less))
        .collect();
    let index = InvertedIndex::build(&kept)?;
    let path = ctx.config.index_path();
    index.save(&path)?;
    let manifest = IndexManifest {
        seed: ctx.config.seed,
        documents: index.num_docs(),
        terms: index.num_terms(),
        screener: &ctx.config.screener,
        documents_sha256: sha256_file(&ctx.config.artifact(DOCUMENTS))?,
        index_sha256: sha256_file(&path)?,
    };
    write_envelope(
        &ctx.config.artifact("index-manifest.json"),
        "depmatch-index-manifest",
        &manifest,
    )?;
    if ctx.json {
        emit_json(ctx.out, &manifest)
    } else {
        emit(
            ctx.out,
            &format!(
                "indexed {} documents, {} terms into {}\n",
                manifest.documents,
                manifest.terms,
                path.display()
            ),
        )
    }
}

/// Index, its documents and the vocabulary, under the configured screener settings.
fn load_linker(config: &PipelineConfig) -> CliResult<Linker> {
    let index_path = config.index_path();
    require_or(&index_path, "index", "run `index` first")?;
    let vocab_path = config.vocab_path();
    require_or(&vocab_path, "entity vocabulary", "run `ingest` first")?;
    let docs = load_documents(config)?;
    let index = InvertedIndex::load(&index_path)?;
    let vocab = EntityVocabulary::load(&vocab_path)?;
    let docs = docs
        .into_iter()
        .filter(|d| index.doc_id(&d.library).is_some())
        .collect();
    Ok(Linker::from_parts(
        cleaner(config)?,
        docs,
        index,
        vocab,
        config.screener.clone(),
    )?)
}

fn load_model(config: &PipelineConfig) -> CliResult<ModelParameters> {
    let path = config.model_path();
    require_or(&path, "model", "run `train` first, or pass --screener-only")?;
    Ok(ModelParameters::load(&path)?)
}

fn load_split(config: &PipelineConfig, vulns: &[VulnerabilityRecord]) -> CliResult<DatasetSplit> {
    let path = config.split_path();
    require_or(&path, "split manifest", "run `train` first")?;
    let manifest: SplitManifest = read_envelope(&path, SPLIT_FORMAT)?;
    Ok(DatasetSplit::from_manifest(&manifest, vulns)?)
}

#[derive(Debug, Serialize)]
struct TrainingLog<'a> {
    seed: u64,
    best_epoch: usize,
    train_pairs: usize,
    train_positives: usize,
    epochs: &'a [EpochLog],
}

#[derive(Debug, Serialize)]
struct TrainManifest<'a> {
    seed: u64,
    split_sizes: [usize; 3],
    training: &'a crate::reranker::TrainingConfig,
    screener: &'a ScreenerConfig,
    best_epoch: usize,
    split_sha256: String,
    model_sha256: String,
}

fn train_cmd(ctx: &mut Ctx) -> CliResult<()> {
    let linker = load_linker(&ctx.config)?;
    let all = load_ingested_vulns(&ctx.config)?;
    let total = all.len();
    let vulns: Vec<VulnerabilityRecord> = all
        .into_iter()
        .filter(VulnerabilityRecord::is_labeled)
        .collect();
    if vulns.len() < total {
        let _ = writeln!(
            ctx.err,
            "warning: skipping {} unlabeled vulnerabilities",
            total - vulns.len()
        );
    }
    let _lock = DirLock::acquire(&ctx.config.paths.artifacts)?;
    let split_path = ctx.config.split_path();
    let split = if ctx.config.paths.split.is_some() {
        load_split(&ctx.config, &vulns)?
    } else {
        let split = match ctx.config.split_sizes {
            Some(sizes) => partition_with_sizes(&vulns, sizes, ctx.config.seed)?,
            None => partition_dataset(&vulns, ctx.config.ratio, ctx.config.seed)?,
        };
        write_envelope(
            &split_path,
            SPLIT_FORMAT,
            &split.manifest(ctx.config.seed, ctx.config.ratio),
        )?;
        split
    };

    let started = Instant::now();
    let outcome = train(&split, &linker, &ctx.config.training)?;
    let elapsed = started.elapsed().as_secs_f64();
    let model_path = ctx.config.model_path();
    outcome.params.save(&model_path)?;
    write_envelope(
        &ctx.config.artifact("training-log.json"),
        "depmatch-training-log",
        &TrainingLog {
            seed: ctx.config.seed,
            best_epoch: outcome.best_epoch,
            train_pairs: outcome.train_pairs,
            train_positives: outcome.train_positives,
            epochs: &outcome.log,
        },
    )?;
    let manifest = TrainManifest {
        seed: ctx.config.seed,
        split_sizes: split.sizes(),
        training: &ctx.config.training,
        screener: &ctx.config.screener,
        best_epoch: outcome.best_epoch,
        split_sha256: sha256_file(&split_path)?,
        model_sha256: sha256_file(&model_path)?,
    };
    write_envelope(
        &ctx.config.artifact("train-manifest.json"),
        "depmatch-train-manifest",
        &manifest,
    )?;
    if ctx.json {
        return emit_json(ctx.out, &manifest);
    }
    let mut text = format!(
        "split {}/{}/{}; {} training pairs ({} positive)\n",
        manifest.split_sizes[0],
        manifest.split_sizes[1],
        manifest.split_sizes[2],
        outcome.train_pairs,
        outcome.train_positives
    );
    for e in &outcome.log {
        text.push_str(&format!(
            "epoch {:>3}  train loss {:.5}  val loss {}  val F1@1 {}\n",
            e.epoch,
            e.train_loss,
            e.validation_loss.map_or("-".into(), |v| format!("{v:.5}")),
            e.validation_f1_at_1
                .map_or("-".into(), |v| format!("{v:.3}")),
        ));
    }
    text.push_str(&format!(
        "kept epoch {}; model written to {} ({elapsed:.1} s)\n",
        outcome.best_epoch,
        model_path.display()
    ));
    emit(ctx.out, &text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRow {
    pub rank: usize,
    pub library: String,
    pub screener_score: f64,
    /// Absent for a screener-only ranking.
    pub coherence: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryReport {
    pub query_id: String,
    pub terms: Vec<String>,
    pub entities: Vec<String>,
    pub screened: usize,
    pub rows: Vec<QueryRow>,
    pub screen_seconds: f64,
    pub total_seconds: f64,
    pub no_informative_terms: bool,
}

fn render_query(r: &QueryReport) -> String {
    if r.no_informative_terms {
        return "no informative terms in query; nothing to rank\n".into();
    }
    let mut s = format!(
        "{:>4}  {:<60} {:>10} {:>10}\n",
        "rank", "library", "screener", "coherence"
    );
    for row in &r.rows {
        s.push_str(&format!(
            "{:>4}  {:<60} {:>10.6} {:>10}\n",
            row.rank,
            row.library,
            row.screener_score,
            row.coherence.map_or("-".into(), |c| format!("{c:.6}")),
        ));
    }
    s.push_str(&format!(
        "time: screening {:.3} s, total {:.3} s ({} candidates, {} rows)\n",
        r.screen_seconds,
        r.total_seconds,
        r.screened,
        r.rows.len()
    ));
    s
}

fn scorer_for(config: &PipelineConfig, cmd: Option<&str>) -> CliResult<Box<dyn CoherenceScorer>> {
    match cmd {
        Some(cmd) => {
            let mut parts = cmd.split_whitespace().map(str::to_string);
            let program = parts
                .next()
                .ok_or_else(|| CliError::Usage("empty --scorer-cmd".into()))?;
            let args: Vec<String> = parts.collect();
            Ok(Box::new(ExternalScorer::spawn(&program, &args)?))
        }
        None => Ok(Box::new(load_model(config)?)),
    }
}

fn query(ctx: &mut Ctx, args: &QueryArgs) -> CliResult<()> {
    if args.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let linker = load_linker(&ctx.config)?;
    let (id, description) = match (&args.cve, &args.text) {
        (Some(id), _) => {
            let vulns = load_ingested_vulns(&ctx.config)?;
            let v = vulns
                .into_iter()
                .find(|v| v.id == *id)
                .ok_or_else(|| CliError::Usage(format!("unknown vulnerability id {id:?}")))?;
            (v.id, v.description)
        }
        (None, Some(text)) => ("query".to_string(), text.clone()),
        (None, None) => return Err(CliError::Usage("give a description or --cve".into())),
    };
    let scorer = if args.screener_only {
        None
    } else {
        Some(scorer_for(&ctx.config, args.scorer_cmd.as_deref())?)
    };

    let started = Instant::now();
    let mut screen_cfg = ctx.config.screener.clone();
    if args.screener_only {
        screen_cfg.candidate_num = screen_cfg.candidate_num.max(args.k);
    }
    let candidates = linker.screen_with(&description, &screen_cfg);
    let screen_seconds = started.elapsed().as_secs_f64();
    if let Some(p) = &args.dump_scores {
        candidates.write_score_dump(p)?;
    }
    let rows: Vec<QueryRow> = match &scorer {
        None => candidates
            .entries
            .iter()
            .take(args.k)
            .enumerate()
            .map(|(i, c)| QueryRow {
                rank: i + 1,
                library: c.library.clone(),
                screener_score: c.score,
                coherence: None,
            })
            .collect(),
        Some(s) => {
            let tokens = linker.query_tokens(&description);
            let q = PairQuery {
                id: &id,
                description: &description,
                tokens: &tokens,
            };
            rank_candidates(&q, &candidates, linker.docs(), s.as_ref(), args.k)?
                .into_iter()
                .enumerate()
                .map(|(i, r)| QueryRow {
                    rank: i + 1,
                    library: r.library,
                    screener_score: r.screener_score,
                    coherence: Some(r.coherence),
                })
                .collect()
        }
    };
    let report = QueryReport {
        query_id: id,
        terms: candidates
            .query
            .terms
            .iter()
            .map(|t| t.term.clone())
            .collect(),
        entities: candidates
            .query
            .terms
            .iter()
            .filter(|t| t.entity)
            .map(|t| t.term.clone())
            .collect(),
        screened: candidates.len(),
        rows,
        screen_seconds,
        total_seconds: started.elapsed().as_secs_f64(),
        no_informative_terms: candidates.empty_query(),
    };
    if ctx.json {
        emit_json(ctx.out, &report)
    } else {
        emit(ctx.out, &render_query(&report))
    }
}

#[derive(Debug, Serialize)]
struct EvaluationFile<'a> {
    seed: u64,
    scorer: &'a str,
    split: &'a str,
    report: &'a MetricsReport,
}

fn evaluate(ctx: &mut Ctx, args: &EvaluateArgs) -> CliResult<()> {
    let ks: BTreeSet<usize> = args.ks.iter().copied().collect();
    if ks.is_empty() || ks.contains(&0) {
        return Err(CliError::Usage("--ks must list positive cutoffs".into()));
    }
    let ks: Vec<usize> = ks.into_iter().collect();
    let linker = load_linker(&ctx.config)?;
    let vulns = load_ingested_vulns(&ctx.config)?;
    let split = load_split(&ctx.config, &vulns)?;
    let model = if args.screener_only {
        None
    } else {
        Some(load_model(&ctx.config)?)
    };
    let _lock = DirLock::acquire(&ctx.config.paths.artifacts)?;
    let kmax = *ks.last().expect("non-empty");
    let preds = linker.prediction_records(
        &split.testing,
        model.as_ref().map(|m| m as &dyn CoherenceScorer),
        kmax,
    )?;
    let report = if args.zero_shot_split {
        macro_report_with_shots(&preds, &ks, &label_set(&split.training))?
    } else {
        macro_report(&preds, &ks)?
    };
    let file = EvaluationFile {
        seed: ctx.config.seed,
        scorer: if model.is_some() { "model" } else { "screener" },
        split: "testing",
        report: &report,
    };
    write_envelope(
        &ctx.config.artifact("report.json"),
        "depmatch-report",
        &file,
    )?;
    let text = report.render_text();
    write_text(&ctx.config.artifact("report.txt"), &text)?;
    if ctx.json {
        emit_json(ctx.out, &file)
    } else {
        emit(ctx.out, &text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub entity_weight: String,
    pub candidate_num: usize,
    pub recall: f64,
    pub f1_at_1: f64,
    pub average_f1: f64,
}

#[derive(Debug, Serialize)]
struct SweepFile<'a> {
    seed: u64,
    scorer: &'a str,
    vulnerabilities: usize,
    cells: &'a [SweepCell],
}

/// Reranked top entries among the first `n` scored candidates.
fn top_by_coherence(libs: &[String], coherence: &[f64], n: usize, k: usize) -> Vec<RankedEntry> {
    let mut order: Vec<usize> = (0..n.min(libs.len())).collect();
    order.sort_by(|&a, &b| {
        coherence[b]
            .total_cmp(&coherence[a])
            .then_with(|| libs[a].cmp(&libs[b]))
    });
    order
        .into_iter()
        .take(k)
        .map(|i| RankedEntry {
            library: libs[i].clone(),
            score: coherence[i],
        })
        .collect()
}

fn sweep(ctx: &mut Ctx, args: &SweepArgs) -> CliResult<()> {
    let weights: Vec<EntityWeighting> = args
        .weights
        .iter()
        .map(|w| w.parse())
        .collect::<crate::Result<_>>()?;
    let mut cns = args.candidate_nums.clone();
    cns.sort_unstable();
    cns.dedup();
    if weights.is_empty() || cns.is_empty() || cns[0] == 0 {
        return Err(CliError::Usage(
            "--weights and --candidate-nums must be non-empty and positive".into(),
        ));
    }
    let linker = load_linker(&ctx.config)?;
    let all = load_ingested_vulns(&ctx.config)?;
    let vulns: Vec<VulnerabilityRecord> = if args.all {
        all.into_iter()
            .filter(VulnerabilityRecord::is_labeled)
            .collect()
    } else {
        load_split(&ctx.config, &all)?.testing
    };
    if vulns.is_empty() {
        return Err(CliError::Usage(
            "no labeled vulnerabilities to sweep".into(),
        ));
    }
    let model = if args.screener_only {
        None
    } else {
        Some(load_model(&ctx.config)?)
    };
    let _lock = DirLock::acquire(&ctx.config.paths.artifacts)?;
    let ks = [1usize, 2, 3];
    let max_cn = *cns.last().expect("non-empty");

    let mut cells = Vec::new();
    for &w in &weights {
        let cfg = ScreenerConfig {
            entity_weight: w,
            candidate_num: max_cn,
            ..ctx.config.screener.clone()
        };
        let mut rankings: Vec<Vec<String>> = Vec::with_capacity(vulns.len());
        let mut coherences: Vec<Vec<f64>> = Vec::with_capacity(vulns.len());
        for v in &vulns {
            let set = linker.screen_with(&v.description, &cfg);
            let libs: Vec<String> = set.libraries().map(str::to_string).collect();
            let coh = match &model {
                Some(m) => {
                    let tokens = linker.query_tokens(&v.description);
                    let q = PairQuery {
                        id: &v.id,
                        description: &v.description,
                        tokens: &tokens,
                    };
                    let pairs: Vec<PairInput> = set
                        .entries
                        .iter()
                        .map(|c| PairInput {
                            doc: &linker.docs()[c.doc as usize],
                            screener_score: c.score,
                        })
                        .collect();
                    m.score_pairs(&q, &pairs)?
                }
                None => set.entries.iter().map(|c| c.score).collect(),
            };
            rankings.push(libs);
            coherences.push(coh);
        }
        let recall = screening_recall_curve(&vulns, &rankings, &cns)?;
        for (point, &cn) in recall.iter().zip(&cns) {
            let preds = vulns
                .iter()
                .zip(rankings.iter().zip(&coherences))
                .map(|(v, (libs, coh))| {
                    let ranked = if model.is_some() {
                        top_by_coherence(libs, coh, cn, 3)
                    } else {
                        libs.iter()
                            .zip(coh)
                            .take(cn.min(3))
                            .map(|(l, &s)| RankedEntry {
                                library: l.clone(),
                                score: s,
                            })
                            .collect()
                    };
                    PredictionRecord::new(v.id.clone(), ranked, v.labels.clone())
                })
                .collect::<crate::Result<Vec<_>>>()?;
            let report = macro_report(&preds, &ks)?;
            cells.push(SweepCell {
                entity_weight: w.to_string(),
                candidate_num: cn,
                recall: point.recall,
                f1_at_1: report.f1_at(1),
                average_f1: report.average_f1,
            });
        }
    }

    let file = SweepFile {
        seed: ctx.config.seed,
        scorer: if model.is_some() { "model" } else { "screener" },
        vulnerabilities: vulns.len(),
        cells: &cells,
    };
    write_envelope(&ctx.config.artifact("sweep.json"), "depmatch-sweep", &file)?;
    let mut csv = String::from("entity_weight,candidate_num,recall,f1_at_1,average_f1\n");
    for c in &cells {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            c.entity_weight, c.candidate_num, c.recall, c.f1_at_1, c.average_f1
        ));
    }
    write_text(&ctx.config.artifact("sweep.csv"), &csv)?;
    if ctx.json {
        return emit_json(ctx.out, &file);
    }
    let mut text = format!(
        "{} vulnerabilities, scorer: {}; cells show recall@CN / F1@1\n{:<12}",
        vulns.len(),
        file.scorer,
        "EW \\ CN"
    );
    for cn in &cns {
        text.push_str(&format!("{cn:>14}"));
    }
    text.push('\n');
    for w in &weights {
        text.push_str(&format!("{:<12}", w.to_string()));
        for c in cells.iter().filter(|c| c.entity_weight == w.to_string()) {
            text.push_str(&format!(
                "{:>14}",
                format!("{:.3} / {:.3}", c.recall, c.f1_at_1)
            ));
        }
        text.push('\n');
    }
    emit(ctx.out, &text)
}

fn gen_fixture(ctx: &mut Ctx, args: &GenFixtureArgs) -> CliResult<()> {
    let config = FixtureConfig {
        libraries: args.libraries,
        vulnerabilities: args.vulnerabilities,
        seed: ctx.config.seed,
        ..FixtureConfig::default()
    };
    let fx = fixture::generate(&config)?;
    let catalog = if args.distractors > 0 {
        fx.catalog_with_distractors(args.distractors, ctx.config.seed)
    } else {
        fx.catalog.clone()
    };
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let catalog_path = args.out.join("catalog.jsonl");
    let vulns_path = args.out.join("vulnerabilities.jsonl");
    write_jsonl(&catalog_path, &catalog)?;
    write_jsonl(&vulns_path, &fx.vulnerabilities)?;
    emit(
        ctx.out,
        &format!(
            "wrote {} libraries to {} and {} vulnerabilities to {}\n",
            catalog.len(),
            catalog_path.display(),
            fx.vulnerabilities.len(),
            vulns_path.display()
        ),
    )
}

fn serve_scorer(ctx: &Ctx) -> CliResult<()> {
    let model = load_model(&ctx.config)?;
    let cleaner = cleaner(&ctx.config)?;
    let stdin = io::stdin();
    let stdout = io::stdout();
    serve(stdin.lock(), stdout.lock(), |req| {
        let tokens = cleaner.clean(&req.vuln);
        let doc = build_library_document(
            &cleaner,
            &LibraryRecord::new(req.library.clone(), req.lib_desc.clone()),
        );
        let enc = encode_pair(
            &model.encoder,
            &tokens,
            &doc,
            req.screener_score.unwrap_or(0.0),
        );
        score_pair(&enc, &model)
    })?;
    Ok(())
}
