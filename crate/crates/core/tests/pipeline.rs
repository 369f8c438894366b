//! The public library API end to end: files in, linker, training, reports.

use std::fs;

use depmatch::corpus::{
    load_libraries, load_vulnerabilities, partition_dataset, write_jsonl, DatasetSplit,
    SplitManifest,
};
use depmatch::eval::{label_set, macro_report, macro_report_with_shots};
use depmatch::fixture::{self, FixtureConfig};
use depmatch::pipeline::Linker;
use depmatch::reranker::{train, ModelParameters, TrainingConfig};
use depmatch::screener::{InvertedIndex, ScreenerConfig};
use depmatch::textproc::{EntityVocabulary, EntityWeighting};
use depmatch::Error;

fn small_training(seed: u64) -> TrainingConfig {
    TrainingConfig {
        epochs: 3,
        hidden: 16,
        feature_dim: 512,
        seed,
        ..TrainingConfig::default()
    }
}

#[test]
fn loads_records_from_both_file_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let jsonl = dir.path().join("v.jsonl");
    fs::write(
        &jsonl,
        r#"{"id":"CVE-2020-2318","description":"Jenkins Mail Commander Plugin for Jenkins-ci Plugin 1.0.0 and earlier stores passwords unencrypted","labels":["org.jenkins-ci.plugins:mailcommander"]}"#,
    )
    .unwrap();
    let v = load_vulnerabilities(&jsonl).unwrap();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].labels.len(), 1);

    let array = dir.path().join("c.json");
    fs::write(
        &array,
        r#"[{"name":"org.jenkins-ci.plugins:mailcommander","description":"This plug-in provides function that read a mail subject as a CLI Command"}]"#,
    )
    .unwrap();
    assert_eq!(load_libraries(&array).unwrap().len(), 1);

    fs::write(&array, r#"[{"name":"nogroupseparator","description":""}]"#).unwrap();
    assert!(matches!(load_libraries(&array), Err(Error::Validation(_))));
}

#[test]
fn persisted_parts_rebuild_an_identical_linker() {
    let fx = fixture::generate(&FixtureConfig::default()).unwrap();
    let linker = Linker::build(&fx.catalog, ScreenerConfig::default()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let (ip, vp) = (dir.path().join("index.json"), dir.path().join("vocab.txt"));
    linker.index().save(&ip).unwrap();
    linker.vocab().save(&vp).unwrap();
    let rebuilt = Linker::from_parts(
        linker.cleaner().clone(),
        linker.docs().to_vec(),
        InvertedIndex::load(&ip).unwrap(),
        EntityVocabulary::load(&vp).unwrap(),
        ScreenerConfig::default(),
    )
    .unwrap();
    for v in &fx.vulnerabilities {
        assert_eq!(
            linker.screen(&v.description),
            rebuilt.screen(&v.description)
        );
    }
}

#[test]
fn catalog_round_trips_through_jsonl() {
    let fx = fixture::generate(&FixtureConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("catalog.jsonl");
    write_jsonl(&p, &fx.catalog).unwrap();
    assert_eq!(load_libraries(&p).unwrap(), fx.catalog);
    let q = dir.path().join("vulns.jsonl");
    write_jsonl(&q, &fx.vulnerabilities).unwrap();
    assert_eq!(load_vulnerabilities(&q).unwrap(), fx.vulnerabilities);
}

#[test]
fn split_manifest_restores_the_split() {
    let fx = fixture::generate(&FixtureConfig::default()).unwrap();
    let split = partition_dataset(&fx.vulnerabilities, [3, 1, 1], 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("split.json");
    split.manifest(5, [3, 1, 1]).save(&p).unwrap();
    let back = DatasetSplit::from_manifest(&SplitManifest::load(&p).unwrap(), &fx.vulnerabilities)
        .unwrap();
    assert_eq!(back, split);
}

#[test]
fn trained_model_round_trips_and_scores_reports() {
    let fx = fixture::generate(&FixtureConfig::default()).unwrap();
    let linker = Linker::build(&fx.catalog, ScreenerConfig::default()).unwrap();
    let split = partition_dataset(&fx.vulnerabilities, [3, 1, 1], 11).unwrap();
    let outcome = train(&split, &linker, &small_training(11)).unwrap();
    assert_eq!(outcome.log.len(), 4);

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("model.json");
    outcome.params.save(&p).unwrap();
    let loaded = ModelParameters::load(&p).unwrap();
    assert_eq!(loaded, outcome.params);

    let preds = linker
        .prediction_records(&split.testing, Some(&loaded), 3)
        .unwrap();
    let report = macro_report_with_shots(&preds, &[1, 2, 3], &label_set(&split.training)).unwrap();
    let (z, f) = (
        report.zero_shot.as_ref().unwrap(),
        report.full_shot.as_ref().unwrap(),
    );
    assert_eq!(z.count + f.count, report.count);
    for m in &report.per_k {
        assert!((0.0..=1.0).contains(&m.f1));
    }
}

#[test]
fn entity_only_weighting_drops_plain_terms() {
    let fx = fixture::generate(&FixtureConfig::default()).unwrap();
    let cfg = ScreenerConfig {
        entity_weight: EntityWeighting::EntityOnly,
        ..Default::default()
    };
    let linker = Linker::build(&fx.catalog, cfg).unwrap();
    for v in fx.vulnerabilities.iter().take(10) {
        let q = linker.query(&v.description, EntityWeighting::EntityOnly);
        assert!(q.terms.iter().all(|t| t.entity || t.weight == 0.0));
    }
}

#[test]
fn screener_report_without_a_model() {
    let fx = fixture::generate(&FixtureConfig::default()).unwrap();
    let linker = Linker::build(&fx.catalog, ScreenerConfig::default()).unwrap();
    let preds = linker
        .prediction_records(&fx.vulnerabilities, None, 3)
        .unwrap();
    let report = macro_report(&preds, &[1, 2, 3]).unwrap();
    assert_eq!(report.count, fx.vulnerabilities.len());
    assert!(report.f1_at(1) > 0.0);
}
