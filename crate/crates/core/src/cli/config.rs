//! `key = value` run configuration shared by all subcommands.
//!
//! Keys are grouped by prefix: `vocab.*`, `pretrain.*`, `cbow.*`,
//! `train.*` and `path.*`. Blank lines and `#` comments are ignored.
//! Unknown keys are errors. [`RunConfig::render`] prints every key, and
//! parsing the rendered text gives back the same configuration.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::cbow::CbowConfig;
use crate::classifier::SupervisedConfig;
use crate::corpus::DEFAULT_MAX_BETWEEN;
use crate::embed_train::PretrainConfig;
use crate::error::{Error, Result};

/// How the embeddings of a supervised run are initialized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitKind {
    /// A pretrained model file.
    Relemb,
    /// Gaussian `N`, `W`; zero `W̃`.
    Rand,
    /// CBOW text vectors.
    W2v,
}

impl FromStr for InitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relemb" => Ok(InitKind::Relemb),
            "rand" => Ok(InitKind::Rand),
            "w2v" => Ok(InitKind::W2v),
            _ => Err(Error::Config(format!(
                "unknown init `{s}`; use relemb, rand or w2v"
            ))),
        }
    }
}

impl Display for InitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InitKind::Relemb => "relemb",
            InitKind::Rand => "rand",
            InitKind::W2v => "w2v",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VocabSettings {
    pub max_words: usize,
    pub max_nouns: usize,
    pub lowercase: bool,
    pub max_between: usize,
}

impl Default for VocabSettings {
    fn default() -> Self {
        VocabSettings {
            max_words: 300_000,
            max_nouns: 300_000,
            lowercase: true,
            max_between: DEFAULT_MAX_BETWEEN,
        }
    }
}

/// Input and output files. Unset paths are rendered as empty values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub contexts: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    pub classifier: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub wordsim: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub vocab: VocabSettings,
    pub pretrain: PretrainConfig,
    pub cbow: CbowConfig,
    pub train: SupervisedConfig,
    pub init: InitKind,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            vocab: VocabSettings::default(),
            pretrain: PretrainConfig::default(),
            cbow: CbowConfig::default(),
            train: SupervisedConfig::default(),
            init: InitKind::Relemb,
            paths: Paths::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "bad value `{value}` for `{key}`; expected true or false"
        ))),
    }
}

fn parse_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_default()
}

impl RunConfig {
    /// All recognised keys, in rendering order.
    pub const KEYS: [&'static str; 42] = [
        "vocab.max_words",
        "vocab.max_nouns",
        "vocab.lowercase",
        "vocab.max_between",
        "pretrain.d",
        "pretrain.c",
        "pretrain.k",
        "pretrain.alpha",
        "pretrain.m_out",
        "pretrain.t",
        "pretrain.epochs",
        "pretrain.seed",
        "pretrain.threads",
        "pretrain.report_every",
        "cbow.d",
        "cbow.c",
        "cbow.k",
        "cbow.alpha",
        "cbow.t",
        "cbow.epochs",
        "cbow.seed",
        "cbow.threads",
        "train.eta",
        "train.lambda",
        "train.epochs",
        "train.dropout",
        "train.fine_tune",
        "train.features",
        "train.m_out",
        "train.seed",
        "train.folds",
        "train.init",
        "path.corpus",
        "path.vocab",
        "path.contexts",
        "path.model",
        "path.vectors",
        "path.classifier",
        "path.train",
        "path.test",
        "path.wordsim",
        "path.output",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let p = &mut self.pretrain;
        let w = &mut self.cbow;
        let s = &mut self.train;
        match key {
            "vocab.max_words" => self.vocab.max_words = parse(key, v)?,
            "vocab.max_nouns" => self.vocab.max_nouns = parse(key, v)?,
            "vocab.lowercase" => self.vocab.lowercase = parse_bool(key, v)?,
            "vocab.max_between" => self.vocab.max_between = parse(key, v)?,
            "pretrain.d" => p.d = parse(key, v)?,
            "pretrain.c" => p.c = parse(key, v)?,
            "pretrain.k" => p.k = parse(key, v)?,
            "pretrain.alpha" => p.alpha = parse(key, v)?,
            "pretrain.m_out" => p.m_out = parse(key, v)?,
            "pretrain.t" => p.t = parse(key, v)?,
            "pretrain.epochs" => p.epochs = parse(key, v)?,
            "pretrain.seed" => p.seed = parse(key, v)?,
            "pretrain.threads" => p.threads = parse(key, v)?,
            "pretrain.report_every" => p.report_every = parse(key, v)?,
            "cbow.d" => w.d = parse(key, v)?,
            "cbow.c" => w.c = parse(key, v)?,
            "cbow.k" => w.k = parse(key, v)?,
            "cbow.alpha" => w.alpha = parse(key, v)?,
            "cbow.t" => w.t = parse(key, v)?,
            "cbow.epochs" => w.epochs = parse(key, v)?,
            "cbow.seed" => w.seed = parse(key, v)?,
            "cbow.threads" => w.threads = parse(key, v)?,
            "train.eta" => s.eta = parse(key, v)?,
            "train.lambda" => s.lambda = parse(key, v)?,
            "train.epochs" => s.epochs = parse(key, v)?,
            "train.dropout" => s.dropout = parse_bool(key, v)?,
            "train.fine_tune" => s.fine_tune = parse_bool(key, v)?,
            "train.features" => s.features = v.parse()?,
            "train.m_out" => {
                s.features.m_out = if v.is_empty() {
                    None
                } else {
                    Some(parse(key, v)?)
                }
            }
            "train.seed" => s.seed = parse(key, v)?,
            "train.folds" => s.folds = parse(key, v)?,
            "train.init" => self.init = v.parse()?,
            "path.corpus" => self.paths.corpus = parse_path(v),
            "path.vocab" => self.paths.vocab = parse_path(v),
            "path.contexts" => self.paths.contexts = parse_path(v),
            "path.model" => self.paths.model = parse_path(v),
            "path.vectors" => self.paths.vectors = parse_path(v),
            "path.classifier" => self.paths.classifier = parse_path(v),
            "path.train" => self.paths.train = parse_path(v),
            "path.test" => self.paths.test = parse_path(v),
            "path.wordsim" => self.paths.wordsim = parse_path(v),
            "path.output" => self.paths.output = parse_path(v),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let p = &self.pretrain;
        let w = &self.cbow;
        let s = &self.train;
        Some(match key {
            "vocab.max_words" => self.vocab.max_words.to_string(),
            "vocab.max_nouns" => self.vocab.max_nouns.to_string(),
            "vocab.lowercase" => self.vocab.lowercase.to_string(),
            "vocab.max_between" => self.vocab.max_between.to_string(),
            "pretrain.d" => p.d.to_string(),
            "pretrain.c" => p.c.to_string(),
            "pretrain.k" => p.k.to_string(),
            "pretrain.alpha" => p.alpha.to_string(),
            "pretrain.m_out" => p.m_out.to_string(),
            "pretrain.t" => p.t.to_string(),
            "pretrain.epochs" => p.epochs.to_string(),
            "pretrain.seed" => p.seed.to_string(),
            "pretrain.threads" => p.threads.to_string(),
            "pretrain.report_every" => p.report_every.to_string(),
            "cbow.d" => w.d.to_string(),
            "cbow.c" => w.c.to_string(),
            "cbow.k" => w.k.to_string(),
            "cbow.alpha" => w.alpha.to_string(),
            "cbow.t" => w.t.to_string(),
            "cbow.epochs" => w.epochs.to_string(),
            "cbow.seed" => w.seed.to_string(),
            "cbow.threads" => w.threads.to_string(),
            "train.eta" => s.eta.to_string(),
            "train.lambda" => s.lambda.to_string(),
            "train.epochs" => s.epochs.to_string(),
            "train.dropout" => s.dropout.to_string(),
            "train.fine_tune" => s.fine_tune.to_string(),
            "train.features" => s.features.to_string(),
            "train.m_out" => s.features.m_out.map(|m| m.to_string()).unwrap_or_default(),
            "train.seed" => s.seed.to_string(),
            "train.folds" => s.folds.to_string(),
            "train.init" => self.init.to_string(),
            "path.corpus" => show_path(&self.paths.corpus),
            "path.vocab" => show_path(&self.paths.vocab),
            "path.contexts" => show_path(&self.paths.contexts),
            "path.model" => show_path(&self.paths.model),
            "path.vectors" => show_path(&self.paths.vectors),
            "path.classifier" => show_path(&self.paths.classifier),
            "path.train" => show_path(&self.paths.train),
            "path.test" => show_path(&self.paths.test),
            "path.wordsim" => show_path(&self.paths.wordsim),
            "path.output" => show_path(&self.paths.output),
            _ => return None,
        })
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::format(
                    "config file",
                    format!("line {}: expected `key = value`", n + 1),
                )
            })?;
            self.set(key.trim(), value)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        c.merge_text(text)?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_text(&text)
    }

    /// Every key with its resolved value, one `key = value` per line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for key in Self::KEYS {
            let value = self.get(key).expect("listed key");
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        }
        out
    }

    /// `M_out` used when building labeled instances: the feature override
    /// if set, else the extraction setting.
    pub fn instance_m_out(&self) -> usize {
        self.train.features.m_out.unwrap_or(self.pretrain.m_out)
    }
}
