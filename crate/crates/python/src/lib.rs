//! Python bindings: vocabularies, context extraction, pretraining, the
//! relation classifier and the scorer.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use relemb::cbow::random_initialization;
use relemb::classifier::{
    cross_validate as cv, train_classifier, Classifier, FoldSplit, SupervisedConfig,
};
use relemb::corpus::{
    extract_noun_pair_contexts, parse_semeval_records, vocabulary_from_records, ContextFile,
    ContextWriter, RelationLabel, SemEvalInstance, SemEvalRecord, TaggedCorpusReader, VocabCounter,
    Vocabulary,
};
use relemb::embed_train::{train_embeddings, PretrainConfig};
use relemb::eval::{score_semeval, EvalReport};
use relemb::features::FeatureOptions;
use relemb::params::EmbeddingParams;
use relemb::synth::{generate, SynthConfig};
use relemb::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::File { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn open(path: &PathBuf) -> PyResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))
}

fn read_records(path: &PathBuf) -> PyResult<Vec<SemEvalRecord>> {
    parse_semeval_records(open(path)?)
        .and_then(|p| p.into_result())
        .map_err(py_err)
}

fn instances(records: &[SemEvalRecord], vocab: &Vocabulary, m_out: usize) -> Vec<SemEvalInstance> {
    records
        .iter()
        .map(|r| r.to_instance(vocab, m_out))
        .collect()
}

fn default_m_out() -> usize {
    PretrainConfig::default().m_out
}

fn report_dict<'py>(py: Python<'py>, r: &EvalReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("instances", r.instances)?;
    d.set_item("macro_f1", r.macro_f1)?;
    d.set_item("accuracy", r.accuracy)?;
    let families = PyDict::new(py);
    for f in &r.families {
        families.set_item(f.family.name(), (f.precision, f.recall, f.f1))?;
    }
    d.set_item("families", families)?;
    Ok(d)
}

/// Word and noun inventories with counts.
#[pyclass(name = "Vocabulary", module = "relemb", frozen)]
struct PyVocabulary {
    inner: Vocabulary,
}

#[pymethods]
impl PyVocabulary {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyVocabulary {
            inner: Vocabulary::load(path).map_err(py_err)?,
        })
    }

    /// Counts a tagged corpus (`token<TAB>tag` lines, blank line between sentences).
    #[staticmethod]
    #[pyo3(signature = (path, max_words = 300_000, max_nouns = 300_000, lowercase = true))]
    fn from_corpus(
        py: Python<'_>,
        path: PathBuf,
        max_words: usize,
        max_nouns: usize,
        lowercase: bool,
    ) -> PyResult<Self> {
        let reader = open(&path)?;
        let inner = py.detach(|| {
            let mut counter = VocabCounter::new(lowercase);
            for (i, s) in TaggedCorpusReader::new(reader).enumerate() {
                counter.add_sentence(i as u64, &s?);
            }
            counter.finish(max_words, max_nouns)
        });
        Ok(PyVocabulary {
            inner: inner.map_err(py_err)?,
        })
    }

    /// Vocabulary of a labeled file alone, entity heads counted as nouns.
    #[staticmethod]
    #[pyo3(signature = (path, max_words = 300_000, max_nouns = 300_000, lowercase = true))]
    fn from_labeled(
        path: PathBuf,
        max_words: usize,
        max_nouns: usize,
        lowercase: bool,
    ) -> PyResult<Self> {
        let records = read_records(&path)?;
        Ok(PyVocabulary {
            inner: vocabulary_from_records(&records, max_words, max_nouns, lowercase)
                .map_err(py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(py_err)
    }

    #[getter]
    fn n_words(&self) -> usize {
        self.inner.words().len()
    }

    #[getter]
    fn n_nouns(&self) -> usize {
        self.inner.nouns().len()
    }

    #[getter]
    fn total_tokens(&self) -> u64 {
        self.inner.total_token_count()
    }

    fn word_id(&self, surface: &str) -> usize {
        self.inner.word_id(surface)
    }

    fn noun_id(&self, surface: &str) -> usize {
        self.inner.noun_id(surface)
    }

    fn knows_word(&self, surface: &str) -> bool {
        self.inner.knows_word(surface)
    }

    fn knows_noun(&self, surface: &str) -> bool {
        self.inner.knows_noun(surface)
    }

    fn __repr__(&self) -> String {
        format!(
            "Vocabulary(words={}, nouns={})",
            self.inner.words().len(),
            self.inner.nouns().len()
        )
    }
}

/// Noun, word and prediction embeddings.
#[pyclass(name = "Embeddings", module = "relemb", frozen)]
struct PyEmbeddings {
    inner: EmbeddingParams,
}

#[pymethods]
impl PyEmbeddings {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyEmbeddings {
            inner: EmbeddingParams::load(path).map_err(py_err)?,
        })
    }

    /// Gaussian noun and word vectors, zero prediction weights.
    #[staticmethod]
    #[pyo3(signature = (vocab, d, c, seed = 1))]
    fn random(vocab: &PyVocabulary, d: usize, c: usize, seed: u64) -> PyResult<Self> {
        if d == 0 || c == 0 {
            return Err(PyValueError::new_err("d and c must be at least 1"));
        }
        Ok(PyEmbeddings {
            inner: random_initialization(&vocab.inner, d, c, seed),
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(py_err)
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d
    }

    #[getter]
    fn c(&self) -> usize {
        self.inner.c
    }

    fn noun_vector(&self, id: usize) -> PyResult<Vec<f64>> {
        if id >= self.inner.n_nouns() {
            return Err(PyValueError::new_err(format!("noun id {id} out of range")));
        }
        Ok(self.inner.nouns.row(id).to_vec())
    }

    fn word_vector(&self, id: usize) -> PyResult<Vec<f64>> {
        if id >= self.inner.n_words() {
            return Err(PyValueError::new_err(format!("word id {id} out of range")));
        }
        Ok(self.inner.words.row(id).to_vec())
    }

    fn __repr__(&self) -> String {
        format!(
            "Embeddings(d={}, c={}, words={}, nouns={})",
            self.inner.d,
            self.inner.c,
            self.inner.n_words(),
            self.inner.n_nouns()
        )
    }
}

/// Writes the noun-pair contexts of a tagged corpus to `output`.
/// Returns `(contexts, targets)`.
#[pyfunction]
#[pyo3(signature = (corpus, vocab, output, m_out = 5, max_between = 10))]
fn extract_contexts(
    py: Python<'_>,
    corpus: PathBuf,
    vocab: &PyVocabulary,
    output: PathBuf,
    m_out: usize,
    max_between: usize,
) -> PyResult<(u64, u64)> {
    let reader = open(&corpus)?;
    let vocab = &vocab.inner;
    let stats = py.detach(|| {
        let mut w = ContextWriter::create(&output, m_out)?;
        for s in TaggedCorpusReader::new(reader) {
            for ctx in extract_noun_pair_contexts(&s?, vocab, m_out, max_between) {
                w.write(&ctx)?;
            }
        }
        w.finish()
    });
    let stats = stats.map_err(py_err)?;
    Ok((stats.contexts, stats.targets))
}

/// Pretrains embeddings on a context file. Returns the embeddings and the
/// mean objective over the first and last tenth of training.
#[pyfunction]
#[pyo3(signature = (vocab, contexts, d = 100, c = 3, k = 25, alpha = 0.025, t = 1e-5, epochs = 1, seed = 1, threads = 1))]
#[allow(clippy::too_many_arguments)]
fn pretrain(
    py: Python<'_>,
    vocab: &PyVocabulary,
    contexts: PathBuf,
    d: usize,
    c: usize,
    k: usize,
    alpha: f64,
    t: f64,
    epochs: usize,
    seed: u64,
    threads: usize,
) -> PyResult<(PyEmbeddings, Option<(f64, f64)>)> {
    let file = ContextFile::open(&contexts).map_err(py_err)?;
    let config = PretrainConfig {
        d,
        c,
        k,
        alpha,
        m_out: file.stats().m_out,
        t,
        epochs,
        seed,
        threads,
        ..Default::default()
    };
    let vocab = &vocab.inner;
    let (params, report) = py
        .detach(|| train_embeddings(&file, vocab, &config))
        .map_err(py_err)?;
    Ok((
        PyEmbeddings { inner: params },
        report.early_late_objective(0.1),
    ))
}

#[allow(clippy::too_many_arguments)]
fn supervised_config(
    eta: f64,
    lambda: f64,
    epochs: usize,
    dropout: bool,
    fine_tune: bool,
    features: &str,
    m_out: Option<usize>,
    seed: u64,
) -> PyResult<SupervisedConfig> {
    let mut features: FeatureOptions = features.parse().map_err(py_err)?;
    if m_out.is_some() {
        features.m_out = m_out;
    }
    let config = SupervisedConfig {
        eta,
        lambda,
        epochs,
        dropout,
        fine_tune,
        features,
        seed,
        ..Default::default()
    };
    config.validate().map_err(py_err)?;
    Ok(config)
}

/// Softmax relation classifier over embedding features.
#[pyclass(name = "Classifier", module = "relemb", frozen)]
struct PyClassifier {
    inner: Classifier,
}

impl PyClassifier {
    fn m_out(&self) -> usize {
        self.inner.options.m_out.unwrap_or_else(default_m_out)
    }
}

#[pymethods]
impl PyClassifier {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyClassifier {
            inner: Classifier::load(path).map_err(py_err)?,
        })
    }

    /// Trains on a labeled file. Returns the classifier and the embeddings
    /// it uses, which differ from `embeddings` when fine-tuning.
    #[staticmethod]
    #[pyo3(signature = (path, vocab, embeddings, eta = 0.05, lambda_ = 1e-5, epochs = 10, dropout = true, fine_tune = true, features = "n,in,out", m_out = None, seed = 1))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        py: Python<'_>,
        path: PathBuf,
        vocab: &PyVocabulary,
        embeddings: &PyEmbeddings,
        eta: f64,
        lambda_: f64,
        epochs: usize,
        dropout: bool,
        fine_tune: bool,
        features: &str,
        m_out: Option<usize>,
        seed: u64,
    ) -> PyResult<(PyClassifier, PyEmbeddings)> {
        let config = supervised_config(
            eta, lambda_, epochs, dropout, fine_tune, features, m_out, seed,
        )?;
        let records = read_records(&path)?;
        let train = instances(&records, &vocab.inner, m_out.unwrap_or_else(default_m_out));
        let mut params = embeddings.inner.clone();
        let (clf, _) = py
            .detach(|| train_classifier(&train, &mut params, &config))
            .map_err(py_err)?;
        Ok((PyClassifier { inner: clf }, PyEmbeddings { inner: params }))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(py_err)
    }

    /// `(id, label)` for every instance of a labeled file.
    fn predict(
        &self,
        path: PathBuf,
        vocab: &PyVocabulary,
        embeddings: &PyEmbeddings,
    ) -> PyResult<Vec<(u64, String)>> {
        let records = read_records(&path)?;
        let inst = instances(&records, &vocab.inner, self.m_out());
        let labels = self
            .inner
            .predict_all(inst.iter().map(|i| &i.context), &embeddings.inner)
            .map_err(py_err)?;
        Ok(inst
            .iter()
            .zip(labels)
            .map(|(i, l)| (i.id, l.to_string()))
            .collect())
    }

    /// Scores the classifier on a labeled file.
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        path: PathBuf,
        vocab: &PyVocabulary,
        embeddings: &PyEmbeddings,
    ) -> PyResult<Bound<'py, PyDict>> {
        let records = read_records(&path)?;
        let inst = instances(&records, &vocab.inner, self.m_out());
        let pred = self
            .inner
            .predict_all(inst.iter().map(|i| &i.context), &embeddings.inner)
            .map_err(py_err)?;
        let gold: Vec<_> = inst.iter().map(|i| i.label).collect();
        report_dict(py, &score_semeval(&gold, &pred).map_err(py_err)?)
    }

    /// Highest-scoring n-grams between the pairs of a labeled file.
    #[pyo3(signature = (embeddings, vocab, path, label, n = 3, top = 5))]
    fn top_ngrams(
        &self,
        embeddings: &PyEmbeddings,
        vocab: &PyVocabulary,
        path: PathBuf,
        label: &str,
        n: usize,
        top: usize,
    ) -> PyResult<Vec<(String, f64)>> {
        let label: RelationLabel = label.parse().map_err(py_err)?;
        let records = read_records(&path)?;
        let inst = instances(&records, &vocab.inner, self.m_out());
        let scores = relemb::eval::top_ngrams(
            &self.inner,
            &embeddings.inner,
            &vocab.inner,
            &inst,
            label,
            n,
            top,
        )
        .map_err(py_err)?;
        Ok(scores.into_iter().map(|s| (s.ngram, s.score)).collect())
    }

    #[getter]
    fn features(&self) -> String {
        self.inner.options.to_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "Classifier(features={}, dim={})",
            self.inner.options,
            self.inner.softmax.dim()
        )
    }
}

/// Macro-F1 and accuracy of predicted against gold label strings.
#[pyfunction]
fn score<'py>(
    py: Python<'py>,
    gold: Vec<String>,
    pred: Vec<String>,
) -> PyResult<Bound<'py, PyDict>> {
    let parse = |v: &[String]| -> PyResult<Vec<RelationLabel>> {
        v.iter().map(|s| s.parse().map_err(py_err)).collect()
    };
    let report = score_semeval(&parse(&gold)?, &parse(&pred)?).map_err(py_err)?;
    report_dict(py, &report)
}

/// Mean cross-validation macro-F1 for each `(eta, lambda)` pair on the
/// same folds. Returns `(eta, lambda, mean_f1)` triples.
#[pyfunction]
#[pyo3(signature = (path, vocab, embeddings, etas, lambdas, folds = 10, epochs = 10, dropout = true, features = "n,in,out", m_out = None, seed = 1, threads = 1))]
#[allow(clippy::too_many_arguments)]
fn cross_validate(
    py: Python<'_>,
    path: PathBuf,
    vocab: &PyVocabulary,
    embeddings: &PyEmbeddings,
    etas: Vec<f64>,
    lambdas: Vec<f64>,
    folds: usize,
    epochs: usize,
    dropout: bool,
    features: &str,
    m_out: Option<usize>,
    seed: u64,
    threads: usize,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let mut settings = Vec::new();
    for &eta in &etas {
        for &lambda in &lambdas {
            let mut s =
                supervised_config(eta, lambda, epochs, dropout, true, features, m_out, seed)?;
            s.folds = folds;
            s.validate().map_err(py_err)?;
            settings.push(s);
        }
    }
    let records = read_records(&path)?;
    let train = instances(&records, &vocab.inner, m_out.unwrap_or_else(default_m_out));
    let split = FoldSplit::new(train.len(), folds, seed).map_err(py_err)?;
    let params = &embeddings.inner;
    let results = py
        .detach(|| cv(&train, params, &settings, &split, threads.max(1)))
        .map_err(py_err)?;
    Ok(results
        .iter()
        .map(|r| (r.config.eta, r.config.lambda, r.mean_f1))
        .collect())
}

/// Writes a synthetic tagged corpus and labeled train/test files with
/// planted relation patterns to `dir`.
#[pyfunction]
#[pyo3(signature = (dir, seed = 7, sentences = 20_000))]
fn write_synthetic(dir: PathBuf, seed: u64, sentences: usize) -> PyResult<()> {
    std::fs::create_dir_all(&dir).map_err(|e| PyIOError::new_err(e.to_string()))?;
    let data = generate(&SynthConfig {
        seed,
        corpus_sentences: sentences,
        ..Default::default()
    });
    data.write_to(&dir).map_err(py_err)
}

#[pymodule(name = "relemb")]
fn relemb_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyVocabulary>()?;
    m.add_class::<PyEmbeddings>()?;
    m.add_class::<PyClassifier>()?;
    m.add_function(wrap_pyfunction!(extract_contexts, m)?)?;
    m.add_function(wrap_pyfunction!(pretrain, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    m.add_function(wrap_pyfunction!(write_synthetic, m)?)?;
    Ok(())
}
