//! Python bindings: the `depmatch` extension module.

use std::collections::BTreeSet;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyString};

use depmatch::corpus::{
    build_library_document, clean_text as core_clean, partition_dataset, LibraryRecord,
    TextCleaner, VulnerabilityRecord,
};
use depmatch::eval::{self, PredictionRecord};
use depmatch::fixture::{self, FixtureConfig};
use depmatch::pipeline::Linker as CoreLinker;
use depmatch::reranker::{self, encode_pair, score_pair, ModelParameters, TrainingConfig};
use depmatch::screener::ScreenerConfig;
use depmatch::textproc::EntityWeighting;
use depmatch::{corpus, Error};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::Parse { .. } | Error::Validation(_) | Error::Config(_) | Error::Format(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::Numerical(_) | Error::External(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A labeled vulnerability.
#[pyclass(name = "Vulnerability", module = "depmatch", skip_from_py_object)]
#[derive(Clone)]
struct Vulnerability {
    #[pyo3(get, set)]
    id: String,
    #[pyo3(get, set)]
    description: String,
    #[pyo3(get, set)]
    labels: Vec<String>,
}

#[pymethods]
impl Vulnerability {
    #[new]
    #[pyo3(signature = (id, description, labels=Vec::new()))]
    fn new(id: String, description: String, labels: Vec<String>) -> Self {
        Self {
            id,
            description,
            labels,
        }
    }

    fn __repr__(&self) -> String {
        format!("Vulnerability({:?}, labels={:?})", self.id, self.labels)
    }
}

impl Vulnerability {
    fn record(&self) -> VulnerabilityRecord {
        VulnerabilityRecord::new(&self.id, &self.description, &self.labels)
    }

    fn from_record(r: VulnerabilityRecord) -> Self {
        Self {
            id: r.id,
            description: r.description,
            labels: r.labels.into_iter().collect(),
        }
    }
}

fn records(vulns: &[PyRef<'_, Vulnerability>]) -> Vec<VulnerabilityRecord> {
    vulns.iter().map(|v| v.record()).collect()
}

fn entity_weighting(value: Option<&Bound<'_, PyAny>>) -> PyResult<EntityWeighting> {
    let Some(v) = value else {
        return Ok(EntityWeighting::default());
    };
    if let Ok(s) = v.cast::<PyString>() {
        return s.to_str()?.parse().map_err(err);
    }
    EntityWeighting::factor(v.extract::<f64>()?).map_err(err)
}

/// Reranking model parameters.
#[pyclass(name = "Model", module = "depmatch")]
struct Model {
    inner: ModelParameters,
}

#[pymethods]
impl Model {
    /// Randomly initialised parameters.
    #[staticmethod]
    #[pyo3(signature = (seed=42, hidden=256, feature_dim=2048))]
    fn init(seed: u64, hidden: usize, feature_dim: usize) -> PyResult<Self> {
        let config = TrainingConfig {
            hidden,
            feature_dim,
            ..TrainingConfig::default()
        };
        config.validate().map_err(err)?;
        Ok(Self {
            inner: ModelParameters::init(config.encoder(), hidden, seed),
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ModelParameters::load(path).map_err(err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    #[getter]
    fn num_parameters(&self) -> usize {
        self.inner.num_parameters()
    }

    #[getter]
    fn hidden(&self) -> usize {
        self.inner.hidden
    }

    /// Coherence of one (vulnerability, library) pair, in (0, 1).
    #[pyo3(signature = (description, library, library_description, screener_score=0.0))]
    fn score(
        &self,
        description: &str,
        library: &str,
        library_description: &str,
        screener_score: f64,
    ) -> PyResult<f64> {
        let cleaner = TextCleaner::default();
        let doc =
            build_library_document(&cleaner, &LibraryRecord::new(library, library_description));
        let enc = encode_pair(
            &self.inner.encoder,
            &cleaner.clean(description),
            &doc,
            screener_score,
        );
        score_pair(&enc, &self.inner).map_err(err)
    }
}

/// An indexed catalog: screening and reranking.
#[pyclass(name = "Linker", module = "depmatch")]
struct Linker {
    inner: CoreLinker,
}

#[pymethods]
impl Linker {
    /// `catalog` is a list of `(coordinate, description)` pairs.
    /// `entity_weight` is a factor >= 1 or `"entity-only"`.
    #[new]
    #[pyo3(signature = (catalog, entity_weight=None, candidate_num=512, idf_smoothing=true, exclude_description_less=false))]
    fn new(
        py: Python<'_>,
        catalog: Vec<(String, String)>,
        entity_weight: Option<&Bound<'_, PyAny>>,
        candidate_num: usize,
        idf_smoothing: bool,
        exclude_description_less: bool,
    ) -> PyResult<Self> {
        let config = ScreenerConfig {
            entity_weight: entity_weighting(entity_weight)?,
            candidate_num,
            idf_smoothing,
            exclude_description_less,
        };
        let libs: Vec<LibraryRecord> = catalog
            .into_iter()
            .map(|(n, d)| LibraryRecord::new(n, d))
            .collect();
        for l in &libs {
            corpus::validate_coordinate(&l.name).map_err(err)?;
        }
        let inner = py
            .detach(|| CoreLinker::build(&libs, config))
            .map_err(err)?;
        Ok(Self { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.docs().len()
    }

    /// Weighted query terms: `(term, frequency, is_entity, weight)`.
    fn query_terms(&self, description: &str) -> Vec<(String, u32, bool, f64)> {
        self.inner
            .query(description, self.inner.config().entity_weight)
            .terms
            .into_iter()
            .map(|t| (t.term, t.frequency, t.entity, t.weight))
            .collect()
    }

    /// Candidate pool: `(library, score, padded)` best first.
    #[pyo3(signature = (description, candidate_num=None))]
    fn screen(
        &self,
        description: &str,
        candidate_num: Option<usize>,
    ) -> PyResult<Vec<(String, f64, bool)>> {
        let mut config = self.inner.config().clone();
        if let Some(n) = candidate_num {
            config.candidate_num = n;
        }
        config.validate().map_err(err)?;
        Ok(self
            .inner
            .screen_with(description, &config)
            .entries
            .into_iter()
            .map(|c| (c.library, c.score, c.padded))
            .collect())
    }

    /// Screens then reranks: `(library, screener_score, coherence)` best first.
    #[pyo3(signature = (description, model, k=10, id="query"))]
    fn predict(
        &self,
        py: Python<'_>,
        description: &str,
        model: PyRef<'_, Model>,
        k: usize,
        id: &str,
    ) -> PyResult<Vec<(String, f64, f64)>> {
        let params = &model.inner;
        let pred = py
            .detach(|| self.inner.predict(id, description, params, k))
            .map_err(err)?;
        Ok(pred
            .ranked
            .into_iter()
            .map(|r| (r.library, r.screener_score, r.coherence))
            .collect())
    }

    /// Metrics report as a dict. Without a model the screener ranking is
    /// scored. `training` adds zero-shot / full-shot sub-reports.
    #[pyo3(signature = (vulnerabilities, model=None, ks=vec![1, 2, 3], training=None))]
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        vulnerabilities: Vec<PyRef<'py, Vulnerability>>,
        model: Option<PyRef<'py, Model>>,
        ks: Vec<usize>,
        training: Option<Vec<PyRef<'py, Vulnerability>>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let vulns = records(&vulnerabilities);
        let kmax = ks.iter().copied().max().unwrap_or(0);
        if kmax == 0 || ks.contains(&0) {
            return Err(PyValueError::new_err("ks must be positive cutoffs"));
        }
        let scorer = model
            .as_ref()
            .map(|m| &m.inner as &dyn reranker::CoherenceScorer);
        let preds = self
            .inner
            .prediction_records(&vulns, scorer, kmax)
            .map_err(err)?;
        let report = match training {
            Some(t) => eval::macro_report_with_shots(&preds, &ks, &eval::label_set(&records(&t))),
            None => eval::macro_report(&preds, &ks),
        }
        .map_err(err)?;
        let json = report.to_json().map_err(err)?;
        py.import("json")?.call_method1("loads", (json,))
    }

    /// Mean screening recall at each pool size.
    fn recall_curve(
        &self,
        vulnerabilities: Vec<PyRef<'_, Vulnerability>>,
        ks: Vec<usize>,
    ) -> PyResult<Vec<(usize, f64)>> {
        let vulns = records(&vulnerabilities);
        let mut config = self.inner.config().clone();
        config.candidate_num = ks.iter().copied().max().unwrap_or(1).max(1);
        let rankings: Vec<Vec<String>> = vulns
            .iter()
            .map(|v| {
                self.inner
                    .screen_with(&v.description, &config)
                    .entries
                    .into_iter()
                    .map(|c| c.library)
                    .collect()
            })
            .collect();
        Ok(eval::screening_recall_curve(&vulns, &rankings, &ks)
            .map_err(err)?
            .into_iter()
            .map(|p| (p.k, p.recall))
            .collect())
    }
}

/// `(epoch, train_loss, validation_loss, validation_f1_at_1)`
type EpochRow = (usize, f64, Option<f64>, Option<f64>);

/// Trains a model; returns `(model, best_epoch, log)` where each log entry
/// is `(epoch, train_loss, validation_loss, validation_f1_at_1)`.
#[pyfunction]
#[pyo3(signature = (linker, training, validation=Vec::new(), seed=42, epochs=20, hidden=256, feature_dim=2048, lr=1e-3, alpha=0.9, batch_size=32))]
#[allow(clippy::too_many_arguments)]
fn train(
    py: Python<'_>,
    linker: PyRef<'_, Linker>,
    training: Vec<PyRef<'_, Vulnerability>>,
    validation: Vec<PyRef<'_, Vulnerability>>,
    seed: u64,
    epochs: usize,
    hidden: usize,
    feature_dim: usize,
    lr: f64,
    alpha: f64,
    batch_size: usize,
) -> PyResult<(Model, usize, Vec<EpochRow>)> {
    let config = TrainingConfig {
        seed,
        epochs,
        hidden,
        feature_dim,
        lr,
        alpha,
        batch_size,
        ..TrainingConfig::default()
    };
    let split = corpus::DatasetSplit {
        training: records(&training),
        validation: records(&validation),
        testing: Vec::new(),
    };
    let core = &linker.inner;
    let outcome = py
        .detach(|| reranker::train(&split, core, &config))
        .map_err(err)?;
    let log = outcome
        .log
        .iter()
        .map(|e| {
            (
                e.epoch,
                e.train_loss,
                e.validation_loss,
                e.validation_f1_at_1,
            )
        })
        .collect();
    Ok((
        Model {
            inner: outcome.params,
        },
        outcome.best_epoch,
        log,
    ))
}

/// Cleaned tokens of `text` under the bundled stopword list.
#[pyfunction]
fn clean_text(text: &str) -> Vec<String> {
    core_clean(text)
}

/// Catalog entries as `(coordinate, description)` pairs.
#[pyfunction]
fn load_libraries(path: &str) -> PyResult<Vec<(String, String)>> {
    Ok(corpus::load_libraries(path)
        .map_err(err)?
        .into_iter()
        .map(|l| (l.name, l.description))
        .collect())
}

#[pyfunction]
fn load_vulnerabilities(path: &str) -> PyResult<Vec<Vulnerability>> {
    Ok(corpus::load_vulnerabilities(path)
        .map_err(err)?
        .into_iter()
        .map(Vulnerability::from_record)
        .collect())
}

/// Seeded `(training, validation, testing)` split by `ratio`.
#[pyfunction]
#[pyo3(signature = (vulnerabilities, seed=42, ratio=(3, 1, 1)))]
fn partition(
    vulnerabilities: Vec<PyRef<'_, Vulnerability>>,
    seed: u64,
    ratio: (u32, u32, u32),
) -> PyResult<(Vec<Vulnerability>, Vec<Vulnerability>, Vec<Vulnerability>)> {
    let split = partition_dataset(
        &records(&vulnerabilities),
        [ratio.0, ratio.1, ratio.2],
        seed,
    )
    .map_err(err)?;
    let conv =
        |v: Vec<VulnerabilityRecord>| v.into_iter().map(Vulnerability::from_record).collect();
    Ok((
        conv(split.training),
        conv(split.validation),
        conv(split.testing),
    ))
}

/// Precision, recall and F1 of one ranking at cutoff `k`.
#[pyfunction]
fn metrics_at_k<'py>(
    py: Python<'py>,
    ranked: Vec<String>,
    affected: Vec<String>,
    k: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let pred = PredictionRecord::from_names("q", &ranked, &affected).map_err(err)?;
    let m = eval::metrics_at_k(&pred, k).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("k", m.k)?;
    d.set_item("hits", m.hits)?;
    d.set_item("precision", m.precision)?;
    d.set_item("recall", m.recall)?;
    d.set_item("f1", m.f1)?;
    Ok(d)
}

/// Class-weighted binary cross-entropy, averaged over pairs.
#[pyfunction]
#[pyo3(signature = (scores, labels, alpha=0.9))]
fn weighted_bce_loss(scores: Vec<f64>, labels: Vec<bool>, alpha: f64) -> PyResult<f64> {
    reranker::weighted_bce_loss(&scores, &labels, alpha).map_err(err)
}

/// Synthetic `(catalog, vulnerabilities)` with entity-sharing labels.
/// `(name, description)`
type NamedDescription = (String, String);

#[pyfunction]
#[pyo3(signature = (libraries=200, vulnerabilities=40, seed=7))]
fn generate_fixture(
    libraries: usize,
    vulnerabilities: usize,
    seed: u64,
) -> PyResult<(Vec<NamedDescription>, Vec<Vulnerability>)> {
    let fx = fixture::generate(&FixtureConfig {
        libraries,
        vulnerabilities,
        seed,
        ..FixtureConfig::default()
    })
    .map_err(err)?;
    Ok((
        fx.catalog
            .into_iter()
            .map(|l| (l.name, l.description))
            .collect(),
        fx.vulnerabilities
            .into_iter()
            .map(Vulnerability::from_record)
            .collect(),
    ))
}

/// Labels shared by `vulnerabilities`, as a sorted list.
#[pyfunction]
fn label_set(vulnerabilities: Vec<PyRef<'_, Vulnerability>>) -> Vec<String> {
    let labels: BTreeSet<String> = eval::label_set(&records(&vulnerabilities));
    labels.into_iter().collect()
}

#[pymodule]
#[pyo3(name = "depmatch")]
pub fn depmatch_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Vulnerability>()?;
    m.add_class::<Model>()?;
    m.add_class::<Linker>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(clean_text, m)?)?;
    m.add_function(wrap_pyfunction!(load_libraries, m)?)?;
    m.add_function(wrap_pyfunction!(load_vulnerabilities, m)?)?;
    m.add_function(wrap_pyfunction!(partition, m)?)?;
    m.add_function(wrap_pyfunction!(metrics_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_bce_loss, m)?)?;
    m.add_function(wrap_pyfunction!(generate_fixture, m)?)?;
    m.add_function(wrap_pyfunction!(label_set, m)?)?;
    Ok(())
}
