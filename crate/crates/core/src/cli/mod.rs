//! The `relemb` command line.
//!
//! Every subcommand resolves a [`RunConfig`] from defaults, an optional
//! `--config` file, `--set key=value` pairs and its own flags, in that
//! order, and logs the result before running.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors
//! (bad flags, invalid settings, missing input files).

mod config;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

pub use config::{InitKind, Paths, RunConfig, VocabSettings};

use crate::cbow::{
    import_as_initialization, random_initialization, train_cbow, write_vectors_file, CbowModel,
};
use crate::classifier::{
    cross_validate, train_classifier, Classifier, FoldSplit, SupervisedConfig,
};
use crate::corpus::{
    extract_noun_pair_contexts, parse_semeval_records, ContextFile, ContextWriter, RelationLabel,
    SemEvalInstance, SemEvalRecord, TaggedCorpusReader, VocabCounter, Vocabulary,
};
use crate::embed_train::train_embeddings;
use crate::error::Error;
use crate::eval::{
    align_by_id, bootstrap_ci, format_ablation_table, format_cv_table, read_predictions,
    read_wordsim, run_ablations, score_semeval, spearman_wordsim, top_ngrams, write_predictions,
    EmbeddingSelector,
};
use crate::params::EmbeddingParams;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(e) => write!(f, "error: {e:#}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

#[derive(Debug, Parser)]
#[command(
    name = "relemb",
    version,
    about = "Relation-specific word embeddings and relation classification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count words and nouns in a tagged corpus and/or a labeled file.
    BuildVocab(BuildVocabArgs),
    /// Write the noun-pair contexts of a tagged corpus to a binary file.
    Extract(ExtractArgs),
    /// Train embeddings on extracted contexts.
    Pretrain(PretrainArgs),
    /// Train CBOW vectors on a tagged corpus.
    Cbow(CbowArgs),
    /// Train a relation classifier on a labeled file.
    Train(TrainArgs),
    /// Cross-validate a hyperparameter grid or the feature ablations.
    Cv(CvArgs),
    /// Score predictions, or run a classifier on a labeled file and score it.
    Eval(EvalArgs),
    /// Spearman correlation with word similarity judgments.
    Wordsim(WordsimArgs),
    /// List the n-grams that contribute most to each class.
    Ngrams(NgramsArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Set a configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Write the resolved configuration to this file.
    #[arg(long)]
    pub dump_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildVocabArgs {
    #[command(flatten)]
    pub common: Common,
    /// Tagged corpus: one `token<TAB>tag` per line, blank line between sentences.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Labeled file whose tokens are counted too; entity heads count as nouns.
    #[arg(long)]
    pub semeval: Option<PathBuf>,
    /// Vocabulary file to write.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub max_words: Option<usize>,
    #[arg(long)]
    pub max_nouns: Option<usize>,
    #[arg(long)]
    pub lowercase: Option<bool>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Context file to write.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub m_out: Option<usize>,
    /// Longest gap between the two nouns of a pair.
    #[arg(long)]
    pub max_between: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub contexts: Option<PathBuf>,
    /// Model file to write.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write `N` and `W` as text vectors to `<prefix>.N.vec` and `<prefix>.W.vec`.
    #[arg(long)]
    pub export_prefix: Option<PathBuf>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub c: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub report_every: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CbowArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Output prefix; writes `<prefix>.in.vec` and `<prefix>.out.vec`.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub c: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Settings shared by `train` and `cv`.
#[derive(Debug, Args)]
pub struct SupervisedArgs {
    /// Labeled training file.
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// relemb (pretrained model), rand (random) or w2v (CBOW vectors).
    #[arg(long)]
    pub init: Option<String>,
    /// Pretrained model for `--init relemb`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// CBOW vector prefix for `--init w2v`.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Embedding size for `--init rand`.
    #[arg(long)]
    pub d: Option<usize>,
    /// Window for `--init rand` and `--init w2v`.
    #[arg(long)]
    pub c: Option<usize>,
    #[arg(long)]
    pub dropout: Option<bool>,
    #[arg(long)]
    pub fine_tune: Option<bool>,
    /// Feature blocks, e.g. `n,in,out` or `n,insimple,mout=3`.
    #[arg(long)]
    pub features: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub sup: SupervisedArgs,
    /// Classifier file to write.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Where to write the embeddings the classifier uses (default `<output>.emb`).
    #[arg(long)]
    pub output_model: Option<PathBuf>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub m_out: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub sup: SupervisedArgs,
    /// Learning rates to try, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub eta: Vec<f64>,
    /// L2 strengths to try, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Vec<f64>,
    /// `M_out` values to try, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub m_out: Vec<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Compare the feature combinations instead of a grid.
    #[arg(long)]
    pub ablation: bool,
    /// Parallel (setting, fold) jobs. Results do not depend on it.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Gold `id<TAB>label` file.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Predicted `id<TAB>label` file.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Labeled test file; gold labels when `--gold` is absent.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Classifier to run on `--test`.
    #[arg(long)]
    pub classifier: Option<PathBuf>,
    /// Embeddings for `--classifier`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Write predictions made with `--classifier` here.
    #[arg(long)]
    pub write_pred: Option<PathBuf>,
    /// Report file (`key=value` lines).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Bootstrap resamples for a confidence interval; 0 disables.
    #[arg(long, default_value_t = 0)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = 1)]
    pub bootstrap_seed: u64,
}

#[derive(Debug, Args)]
pub struct WordsimArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// `word1,word2,score` file.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// N (nouns) or W (words).
    #[arg(long, default_value = "N")]
    pub embedding: String,
}

#[derive(Debug, Args)]
pub struct NgramsArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub classifier: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Labeled file whose between-words are ranked.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// N-gram lengths, comma-separated odd numbers.
    #[arg(long, value_delimiter = ',', default_value = "1,3")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub top: usize,
    /// Only this label; all labels by default.
    #[arg(long)]
    pub label: Option<String>,
}

/// Collects `(key, value)` overrides from optional flags.
#[derive(Default)]
struct Overrides(Vec<(&'static str, String)>);

impl Overrides {
    fn opt<T: ToString>(&mut self, key: &'static str, v: &Option<T>) -> &mut Self {
        if let Some(v) = v {
            self.0.push((key, v.to_string()));
        }
        self
    }

    fn path(&mut self, key: &'static str, v: &Option<PathBuf>) -> &mut Self {
        if let Some(v) = v {
            self.0.push((key, v.display().to_string()));
        }
        self
    }
}

fn resolve(common: &Common, flags: &Overrides) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => {
            require_file(p)?;
            RunConfig::load(p).map_err(|e| usage(e.to_string()))?
        }
        None => RunConfig::default(),
    };
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v).map_err(|e| usage(e.to_string()))?;
    }
    for (k, v) in &flags.0 {
        cfg.set(k, v)
            .map_err(|e| usage(format!("--{}: {e}", flag_name(k))))?;
    }
    log::info!("resolved configuration:\n{}", cfg.render());
    if let Some(p) = &common.dump_config {
        std::fs::write(p, cfg.render()).map_err(|e| Error::file(p, e))?;
    }
    Ok(cfg)
}

fn flag_name(key: &str) -> String {
    key.rsplit('.').next().unwrap_or(key).replace('_', "-")
}

fn require_file(p: &Path) -> CliResult<()> {
    if p.exists() {
        Ok(())
    } else {
        Err(usage(format!("input file {} does not exist", p.display())))
    }
}

/// An input path that must be set and exist.
fn input<'a>(p: &'a Option<PathBuf>, what: &str) -> CliResult<&'a Path> {
    let p = p
        .as_deref()
        .ok_or_else(|| usage(format!("missing {what}")))?;
    require_file(p)?;
    Ok(p)
}

fn output<'a>(p: &'a Option<PathBuf>, what: &str) -> CliResult<&'a Path> {
    p.as_deref().ok_or_else(|| usage(format!("missing {what}")))
}

fn validated<T>(r: crate::Result<T>) -> CliResult<T> {
    r.map_err(|e| usage(e.to_string()))
}

fn open(p: &Path) -> CliResult<BufReader<File>> {
    Ok(BufReader::new(
        File::open(p).map_err(|e| Error::file(p, e))?,
    ))
}

fn create(p: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(p).map_err(|e| Error::file(p, e))?,
    ))
}

/// Parses the command line and runs it; returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::BuildVocab(a) => cmd_build_vocab(&a),
        Command::Extract(a) => cmd_extract(&a),
        Command::Pretrain(a) => cmd_pretrain(&a),
        Command::Cbow(a) => cmd_cbow(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Cv(a) => cmd_cv(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Wordsim(a) => cmd_wordsim(&a),
        Command::Ngrams(a) => cmd_ngrams(&a),
    }
}

fn tagged_sentences(p: &Path) -> CliResult<TaggedCorpusReader<BufReader<File>>> {
    Ok(TaggedCorpusReader::new(open(p)?))
}

fn read_records(p: &Path) -> CliResult<Vec<SemEvalRecord>> {
    let parsed = parse_semeval_records(open(p)?)?;
    for e in &parsed.errors {
        log::warn!("{}: skipping {e}", p.display());
    }
    if parsed.records.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "{}: no labeled instances",
            p.display()
        )));
    }
    Ok(parsed.records)
}

pub fn cmd_build_vocab(a: &BuildVocabArgs) -> CliResult<()> {
    let mut o = Overrides::default();
    o.path("path.corpus", &a.corpus)
        .path("path.vocab", &a.output)
        .opt("vocab.max_words", &a.max_words)
        .opt("vocab.max_nouns", &a.max_nouns)
        .opt("vocab.lowercase", &a.lowercase);
    let cfg = resolve(&a.common, &o)?;
    if cfg.paths.corpus.is_none() && a.semeval.is_none() {
        return Err(usage("need --corpus and/or --semeval"));
    }
    let out = output(&cfg.paths.vocab, "--output vocabulary file")?;
    let corpus = match &cfg.paths.corpus {
        Some(_) => Some(input(&cfg.paths.corpus, "--corpus")?),
        None => None,
    };
    let semeval = match &a.semeval {
        Some(_) => Some(input(&a.semeval, "--semeval")?),
        None => None,
    };
    let mut counter = VocabCounter::new(cfg.vocab.lowercase);
    let mut sentences = 0u64;
    if let Some(p) = corpus {
        let mut reader = tagged_sentences(p)?;
        for s in reader.by_ref() {
            counter.add_sentence(sentences, &s?);
            sentences += 1;
        }
        if reader.skipped_lines() > 0 {
            println!("skipped {} malformed lines", reader.skipped_lines());
        }
    }
    if let Some(p) = semeval {
        for r in read_records(p)? {
            for (i, t) in r.tokens.iter().enumerate() {
                counter.add_token(sentences, i as u32, t, i == r.e1 || i == r.e2);
            }
            sentences += 1;
        }
    }
    let vocab = counter.finish(cfg.vocab.max_words, cfg.vocab.max_nouns)?;
    vocab.save(out)?;
    println!(
        "sentences {sentences} words {} nouns {} tokens {}",
        vocab.words().len(),
        vocab.nouns().len(),
        vocab.total_token_count()
    );
    Ok(())
}

pub fn cmd_extract(a: &ExtractArgs) -> CliResult<()> {
    let mut o = Overrides::default();
    o.path("path.corpus", &a.corpus)
        .path("path.vocab", &a.vocab)
        .path("path.contexts", &a.output)
        .opt("pretrain.m_out", &a.m_out)
        .opt("vocab.max_between", &a.max_between);
    let cfg = resolve(&a.common, &o)?;
    let corpus = input(&cfg.paths.corpus, "--corpus")?;
    let vocab = Vocabulary::load(input(&cfg.paths.vocab, "--vocab")?)?;
    let out = output(&cfg.paths.contexts, "--output context file")?;
    let m_out = cfg.pretrain.m_out;
    let mut writer = ContextWriter::create(out, m_out)?;
    let mut sentences = 0u64;
    for s in tagged_sentences(corpus)? {
        let s = s?;
        sentences += 1;
        for ctx in extract_noun_pair_contexts(&s, &vocab, m_out, cfg.vocab.max_between) {
            writer.write(&ctx)?;
        }
    }
    let stats = writer.finish()?;
    println!(
        "sentences {sentences} pairs {} targets {}",
        stats.contexts, stats.targets
    );
    Ok(())
}

pub fn cmd_pretrain(a: &PretrainArgs) -> CliResult<()> {
    let mut o = Overrides::default();
    o.path("path.vocab", &a.vocab)
        .path("path.contexts", &a.contexts)
        .path("path.model", &a.output)
        .opt("pretrain.d", &a.d)
        .opt("pretrain.c", &a.c)
        .opt("pretrain.k", &a.k)
        .opt("pretrain.alpha", &a.alpha)
        .opt("pretrain.t", &a.t)
        .opt("pretrain.epochs", &a.epochs)
        .opt("pretrain.seed", &a.seed)
        .opt("pretrain.threads", &a.threads)
        .opt("pretrain.report_every", &a.report_every);
    let cfg = resolve(&a.common, &o)?;
    validated(cfg.pretrain.validate())?;
    let vocab = Vocabulary::load(input(&cfg.paths.vocab, "--vocab")?)?;
    let contexts = ContextFile::open(input(&cfg.paths.contexts, "--contexts")?)?;
    let out = output(&cfg.paths.model, "--output model file")?;
    let stats = contexts.stats();
    println!(
        "contexts {} targets {} m_out {}",
        stats.contexts, stats.targets, stats.m_out
    );
    let start = Instant::now();
    let (params, report) = train_embeddings(&contexts, &vocab, &cfg.pretrain)?;
    for w in &report.windows {
        log::info!(
            "window {}: objective {:.5} lr {:.6} ({} trained)",
            w.index,
            w.mean_objective,
            w.lr,
            w.trained
        );
    }
    params.save(out)?;
    if let Some(prefix) = &a.export_prefix {
        let (n, w) = export_paths(prefix);
        write_vectors_file(&n, vocab.nouns().surfaces(), &params.nouns)?;
        write_vectors_file(&w, vocab.words().surfaces(), &params.words)?;
    }
    println!(
        "processed {} trained {} in {:.1?}",
        report.processed,
        report.trained,
        start.elapsed()
    );
    if let Some((early, late)) = report.early_late_objective(0.1) {
        println!("objective {early:.5} -> {late:.5}");
    }
    Ok(())
}

/// Text export paths `<prefix>.N.vec` and `<prefix>.W.vec`.
pub fn export_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    let with = |ext: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    (with(".N.vec"), with(".W.vec"))
}

pub fn cmd_cbow(a: &CbowArgs) -> CliResult<()> {
    let mut o = Overrides::default();
    o.path("path.corpus", &a.corpus)
        .path("path.vocab", &a.vocab)
        .path("path.vectors", &a.output)
        .opt("cbow.d", &a.d)
        .opt("cbow.c", &a.c)
        .opt("cbow.k", &a.k)
        .opt("cbow.alpha", &a.alpha)
        .opt("cbow.t", &a.t)
        .opt("cbow.epochs", &a.epochs)
        .opt("cbow.seed", &a.seed)
        .opt("cbow.threads", &a.threads);
    let cfg = resolve(&a.common, &o)?;
    validated(cfg.cbow.validate())?;
    let corpus = input(&cfg.paths.corpus, "--corpus")?;
    let vocab = Vocabulary::load(input(&cfg.paths.vocab, "--vocab")?)?;
    let out = output(&cfg.paths.vectors, "--output prefix")?;
    let mut sentences = Vec::new();
    for s in tagged_sentences(corpus)? {
        let s = s?;
        sentences.push(
            s.tokens()
                .iter()
                .map(|t| vocab.word_id(&t.surface) as u32)
                .collect(),
        );
    }
    let start = Instant::now();
    let (model, report) = train_cbow(&sentences, &vocab, &cfg.cbow)?;
    model.save(out)?;
    println!(
        "sentences {} tokens {} trained {} in {:.1?}",
        sentences.len(),
        report.processed,
        report.trained,
        start.elapsed()
    );
    for (e, obj) in report.epoch_objective.iter().enumerate() {
        println!("epoch {} objective {obj:.5}", e + 1);
    }
    Ok(())
}

fn supervised_overrides(s: &SupervisedArgs, o: &mut Overrides) {
    o.path("path.train", &s.train)
        .path("path.vocab", &s.vocab)
        .path("path.model", &s.model)
        .path("path.vectors", &s.vectors)
        .opt("train.init", &s.init)
        .opt("pretrain.d", &s.d)
        .opt("pretrain.c", &s.c)
        .opt("train.dropout", &s.dropout)
        .opt("train.fine_tune", &s.fine_tune)
        .opt("train.features", &s.features)
        .opt("train.seed", &s.seed);
}

/// The embeddings a supervised run starts from.
fn initial_params(cfg: &RunConfig, vocab: &Vocabulary) -> CliResult<EmbeddingParams> {
    let params = match cfg.init {
        InitKind::Relemb => {
            EmbeddingParams::load(input(&cfg.paths.model, "--model for --init relemb")?)?
        }
        InitKind::Rand => {
            validated(cfg.pretrain.validate())?;
            random_initialization(vocab, cfg.pretrain.d, cfg.pretrain.c, cfg.train.seed)
        }
        InitKind::W2v => {
            let prefix = output(&cfg.paths.vectors, "--vectors for --init w2v")?;
            let (inp, _) = crate::cbow::vector_paths(prefix);
            require_file(&inp)?;
            let cbow = CbowModel::load(prefix, cfg.pretrain.c)?;
            import_as_initialization(&cbow, vocab, cfg.pretrain.c)?
        }
    };
    if params.n_words() != vocab.words().len() || params.n_nouns() != vocab.nouns().len() {
        return Err(Error::Dimension(format!(
            "model has {} words and {} nouns but the vocabulary has {} and {}",
            params.n_words(),
            params.n_nouns(),
            vocab.words().len(),
            vocab.nouns().len()
        ))
        .into());
    }
    Ok(params)
}

fn instances(records: &[SemEvalRecord], vocab: &Vocabulary, m_out: usize) -> Vec<SemEvalInstance> {
    records
        .iter()
        .map(|r| r.to_instance(vocab, m_out))
        .collect()
}

pub fn cmd_train(a: &TrainArgs) -> CliResult<()> {
    let mut o = Overrides::default();
    supervised_overrides(&a.sup, &mut o);
    o.path("path.classifier", &a.output)
        .opt("train.eta", &a.eta)
        .opt("train.lambda", &a.lambda)
        .opt("train.epochs", &a.epochs)
        .opt("train.m_out", &a.m_out);
    let cfg = resolve(&a.common, &o)?;
    validated(cfg.train.validate())?;
    let vocab = Vocabulary::load(input(&cfg.paths.vocab, "--vocab")?)?;
    let records = read_records(input(&cfg.paths.train, "--train")?)?;
    let out = output(&cfg.paths.classifier, "--output classifier file")?;
    let emb_out = a.output_model.clone().unwrap_or_else(|| {
        let mut s = out.as_os_str().to_owned();
        s.push(".emb");
        PathBuf::from(s)
    });
    let mut params = initial_params(&cfg, &vocab)?;
    let train = instances(&records, &vocab, cfg.instance_m_out());
    let start = Instant::now();
    let (clf, log) = train_classifier(&train, &mut params, &cfg.train)?;
    clf.save(out)?;
    params.save(&emb_out)?;
    if let Some(last) = log.epochs.last() {
        println!(
            "instances {} epochs {} log-likelihood {:.5} train accuracy {:.2} ({:.1?})",
            train.len(),
            last.epoch,
            last.mean_log_likelihood,
            last.train_accuracy,
            start.elapsed()
        );
    }
    println!(
        "classifier {} embeddings {}",
        out.display(),
        emb_out.display()
    );
    Ok(())
}

pub fn cmd_cv(a: &CvArgs) -> CliResult<()> {
    let mut o = Overrides::default();
    supervised_overrides(&a.sup, &mut o);
    o.opt("train.epochs", &a.epochs)
        .opt("train.folds", &a.folds);
    // A single grid value also becomes the resolved setting.
    if let [eta] = a.eta[..] {
        o.opt("train.eta", &Some(eta));
    }
    if let [lambda] = a.lambda[..] {
        o.opt("train.lambda", &Some(lambda));
    }
    if let [m] = a.m_out[..] {
        o.opt("train.m_out", &Some(m));
    }
    let cfg = resolve(&a.common, &o)?;
    validated(cfg.train.validate())?;
    if a.jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    let vocab = Vocabulary::load(input(&cfg.paths.vocab, "--vocab")?)?;
    let records = read_records(input(&cfg.paths.train, "--train")?)?;
    let params = initial_params(&cfg, &vocab)?;
    let base = cfg.train.clone();
    let etas = if a.eta.is_empty() {
        vec![base.eta]
    } else {
        a.eta.clone()
    };
    let lambdas = if a.lambda.is_empty() {
        vec![base.lambda]
    } else {
        a.lambda.clone()
    };
    let m_outs: Vec<Option<usize>> = if a.m_out.is_empty() {
        vec![base.features.m_out]
    } else {
        a.m_out.iter().map(|&m| Some(m)).collect()
    };
    let widest = m_outs
        .iter()
        .map(|m| m.unwrap_or(cfg.pretrain.m_out))
        .max()
        .unwrap_or(cfg.pretrain.m_out);
    let train = instances(&records, &vocab, widest);
    let split = FoldSplit::new(train.len(), base.folds, base.seed)?;
    let sizes: Vec<usize> = (0..split.folds())
        .map(|f| split.validation(f).len())
        .collect();
    println!(
        "instances {} folds {} sizes {:?}",
        train.len(),
        split.folds(),
        sizes
    );
    let start = Instant::now();
    if a.ablation {
        let rows = run_ablations(&train, &params, &base, &split, a.jobs)?;
        print!("{}", format_ablation_table(&rows));
    } else {
        let mut settings = Vec::new();
        for &m_out in &m_outs {
            for &eta in &etas {
                for &lambda in &lambdas {
                    let mut s = SupervisedConfig {
                        eta,
                        lambda,
                        ..base.clone()
                    };
                    s.features.m_out = m_out;
                    validated(s.validate())?;
                    settings.push(s);
                }
            }
        }
        let results = cross_validate(&train, &params, &settings, &split, a.jobs)?;
        print!("{}", format_cv_table(&results));
        let best = results
            .iter()
            .reduce(|b, r| if r.mean_f1 > b.mean_f1 { r } else { b });
        if let Some(best) = best {
            println!(
                "best eta={} lambda={} features={} F1 {:.2}",
                best.config.eta, best.config.lambda, best.config.features, best.mean_f1
            );
        }
    }
    println!("cv took {:.1?}", start.elapsed());
    Ok(())
}

pub fn cmd_eval(a: &EvalArgs) -> CliResult<()> {
    let mut o = Overrides::default();
    o.path("path.test", &a.test)
        .path("path.classifier", &a.classifier)
        .path("path.model", &a.model)
        .path("path.vocab", &a.vocab)
        .path("path.output", &a.output);
    let cfg = resolve(&a.common, &o)?;
    if a.bootstrap > 0 && (a.bootstrap < 100 || !(a.level > 0.0 && a.level < 1.0)) {
        return Err(usage(
            "--bootstrap needs at least 100 resamples and 0 < --level < 1",
        ));
    }
    let gold: Vec<(u64, RelationLabel)> = match (&a.gold, &cfg.paths.test) {
        (Some(_), _) => read_predictions(open(input(&a.gold, "--gold")?)?)?,
        (None, Some(_)) => read_records(input(&cfg.paths.test, "--test")?)?
            .iter()
            .map(|r| (r.id, r.label))
            .collect(),
        (None, None) => return Err(usage("need --gold or --test")),
    };
    let pred: Vec<(u64, RelationLabel)> = match (&a.pred, &cfg.paths.classifier) {
        (Some(_), _) => read_predictions(open(input(&a.pred, "--pred")?)?)?,
        (None, Some(_)) => {
            let test = input(&cfg.paths.test, "--test for --classifier")?;
            let clf = Classifier::load(input(&cfg.paths.classifier, "--classifier")?)?;
            let params = EmbeddingParams::load(input(&cfg.paths.model, "--model")?)?;
            let vocab = Vocabulary::load(input(&cfg.paths.vocab, "--vocab")?)?;
            let records = read_records(test)?;
            let m_out = clf.options.m_out.unwrap_or(cfg.pretrain.m_out);
            let inst = instances(&records, &vocab, m_out);
            let labels = clf.predict_all(inst.iter().map(|i| &i.context), &params)?;
            let rows: Vec<_> = inst.iter().map(|i| i.id).zip(labels).collect();
            if let Some(p) = &a.write_pred {
                let mut w = create(p)?;
                write_predictions(&mut w, &rows)?;
                w.flush()?;
            }
            rows
        }
        (None, None) => return Err(usage("need --pred or --classifier")),
    };
    let (g, p) = align_by_id(&gold, &pred)?;
    let mut report = score_semeval(&g, &p)?;
    if a.bootstrap > 0 {
        report.interval = Some(bootstrap_ci(
            &g,
            &p,
            a.bootstrap,
            a.level,
            a.bootstrap_seed,
        )?);
    }
    print!("{report}");
    if let Some(out) = &cfg.paths.output {
        std::fs::write(out, report.to_key_values()).map_err(|e| Error::file(out, e))?;
    }
    Ok(())
}

pub fn cmd_wordsim(a: &WordsimArgs) -> CliResult<()> {
    let mut o = Overrides::default();
    o.path("path.model", &a.model)
        .path("path.vocab", &a.vocab)
        .path("path.wordsim", &a.pairs);
    let cfg = resolve(&a.common, &o)?;
    let selector: EmbeddingSelector = a
        .embedding
        .parse()
        .map_err(|e: Error| usage(e.to_string()))?;
    let params = EmbeddingParams::load(input(&cfg.paths.model, "--model")?)?;
    let vocab = Vocabulary::load(input(&cfg.paths.vocab, "--vocab")?)?;
    let pairs = read_wordsim(open(input(&cfg.paths.wordsim, "--pairs")?)?)?;
    let r = spearman_wordsim(&pairs, selector, &params, &vocab)?;
    println!(
        "rho {:.4} pairs {} oov_pairs {}",
        r.rho, r.pairs, r.oov_pairs
    );
    if !r.oov_words.is_empty() {
        println!("oov {}", r.oov_words.join(" "));
    }
    Ok(())
}

pub fn cmd_ngrams(a: &NgramsArgs) -> CliResult<()> {
    let mut o = Overrides::default();
    o.path("path.classifier", &a.classifier)
        .path("path.model", &a.model)
        .path("path.vocab", &a.vocab)
        .path("path.train", &a.train);
    let cfg = resolve(&a.common, &o)?;
    let labels: Vec<RelationLabel> = match &a.label {
        Some(l) => vec![l.parse().map_err(|e: Error| usage(e.to_string()))?],
        None => RelationLabel::all().collect(),
    };
    let clf = Classifier::load(input(&cfg.paths.classifier, "--classifier")?)?;
    let params = EmbeddingParams::load(input(&cfg.paths.model, "--model")?)?;
    let vocab = Vocabulary::load(input(&cfg.paths.vocab, "--vocab")?)?;
    let records = read_records(input(&cfg.paths.train, "--train")?)?;
    let m_out = clf.options.m_out.unwrap_or(cfg.pretrain.m_out);
    let inst = instances(&records, &vocab, m_out);
    for label in labels {
        println!("{label}");
        for &n in &a.n {
            let top = top_ngrams(&clf, &params, &vocab, &inst, label, n, a.top)?;
            for (rank, t) in top.iter().enumerate() {
                println!("  n={n} {:>2}. {:<40} {:>9.4}", rank + 1, t.ngram, t.score);
            }
        }
    }
    Ok(())
}
