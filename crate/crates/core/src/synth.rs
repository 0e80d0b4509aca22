//! Synthetic corpora with planted relation patterns, for end-to-end runs
//! without external data.
//!
//! Every sentence holds exactly one noun pair. Three relation labels are
//! tied to a fixed three-word pattern between the nouns and to the noun
//! groups that fill the two slots. The patterns differ only in their
//! middle word; `Other` pairs arbitrary nouns around random filler words.
//! Extra filler words may surround the pattern.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use std::path::Path;

use crate::corpus::{
    format_record, Direction, Family, RelationLabel, SemEvalRecord, TaggedSentence, Token,
};
use crate::error::{Error, Result};

/// Planted patterns: label, the words between the nouns, and the noun
/// groups of the first and second slot.
pub const PATTERNS: [(RelationLabel, [&str; 3], &str, &str); 3] = [
    (
        RelationLabel::Relation(Family::CauseEffect, Direction::Forward),
        ["that", "caused", "the"],
        "cause",
        "effect",
    ),
    (
        RelationLabel::Relation(Family::CauseEffect, Direction::Backward),
        ["that", "followed", "the"],
        "effect",
        "cause",
    ),
    (
        RelationLabel::Relation(Family::ContentContainer, Direction::Forward),
        ["that", "filled", "the"],
        "content",
        "container",
    ),
];

const GROUPS: [&str; 5] = ["cause", "effect", "content", "container", "thing"];

/// The four labels of the synthetic task, `Other` first.
pub fn labels() -> [RelationLabel; 4] {
    [
        RelationLabel::Other,
        PATTERNS[0].0,
        PATTERNS[1].0,
        PATTERNS[2].0,
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub nouns_per_group: usize,
    pub fillers: usize,
    pub corpus_sentences: usize,
    pub train_instances: usize,
    pub test_instances: usize,
    /// Upper bound on filler words before and after the pair.
    pub max_outside: usize,
    /// Upper bound on filler words on each side of a planted pattern.
    pub max_pattern_noise: usize,
    /// Chance that a word between an `Other` pair is drawn from the
    /// pattern words instead of the fillers.
    pub distractor_rate: f64,
    /// Chance that the words between an `Other` pair are a planted
    /// pattern in scrambled order.
    pub scrambled_other: f64,
    /// Chance that a training label is replaced by a random one. Test
    /// labels stay clean.
    pub label_noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            nouns_per_group: 8,
            fillers: 120,
            corpus_sentences: 20_000,
            train_instances: 400,
            test_instances: 400,
            max_outside: 4,
            max_pattern_noise: 1,
            distractor_rate: 0.0,
            scrambled_other: 0.0,
            label_noise: 0.2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthData {
    pub corpus: Vec<TaggedSentence>,
    pub train: Vec<SemEvalRecord>,
    pub test: Vec<SemEvalRecord>,
}

impl SynthData {
    /// Writes `corpus.tagged`, `train.txt` and `test.txt` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let write = |name: &str, text: String| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::file(path, e))
        };
        write(
            "corpus.tagged",
            self.corpus.iter().map(|s| s.to_tagged_text()).collect(),
        )?;
        write("train.txt", self.train.iter().map(format_record).collect())?;
        write("test.txt", self.test.iter().map(format_record).collect())
    }
}

struct Sentence {
    tokens: Vec<Token>,
    e1: usize,
    e2: usize,
    label: RelationLabel,
}

struct Generator<'a> {
    config: &'a SynthConfig,
    rng: ChaCha8Rng,
}

impl Generator<'_> {
    fn noun(&mut self, group: &str) -> Token {
        let i = self.rng.random_range(0..self.config.nouns_per_group);
        Token::new(format!("{group}{i}"), "NN")
    }

    fn filler(&mut self) -> Token {
        let i = self.rng.random_range(0..self.config.fillers);
        Token::new(format!("w{i}"), "JJ")
    }

    fn fillers(&mut self, max: usize) -> Vec<Token> {
        let n = self.rng.random_range(0..=max);
        (0..n).map(|_| self.filler()).collect()
    }

    /// The words of a random pattern in an order no pattern uses.
    fn scrambled_pattern(&mut self) -> Vec<Token> {
        let mut words = PATTERNS.choose(&mut self.rng).unwrap().1.to_vec();
        while PATTERNS.iter().any(|p| p.1[..] == words[..]) {
            words.shuffle(&mut self.rng);
        }
        words.into_iter().map(|w| Token::new(w, "IN")).collect()
    }

    fn sentence(&mut self) -> Sentence {
        let class = self.rng.random_range(0..4);
        let (label, n1, between, n2) = if class == 0 {
            let g1 = *GROUPS.choose(&mut self.rng).unwrap();
            let g2 = *GROUPS.choose(&mut self.rng).unwrap();
            let n1 = self.noun(g1);
            let n = self.rng.random_range(1..=3);
            let between = if self.rng.random::<f64>() < self.config.scrambled_other {
                self.scrambled_pattern()
            } else {
                (0..n)
                    .map(|_| {
                        if self.rng.random::<f64>() < self.config.distractor_rate {
                            let words = PATTERNS.choose(&mut self.rng).unwrap().1;
                            Token::new(*words.choose(&mut self.rng).unwrap(), "IN")
                        } else {
                            self.filler()
                        }
                    })
                    .collect()
            };
            (RelationLabel::Other, n1, between, self.noun(g2))
        } else {
            let (label, words, g1, g2) = PATTERNS[class - 1];
            let n1 = self.noun(g1);
            let mut between = self.fillers(self.config.max_pattern_noise);
            between.extend(words.iter().map(|w| Token::new(*w, "IN")));
            between.extend(self.fillers(self.config.max_pattern_noise));
            (label, n1, between, self.noun(g2))
        };
        let mut tokens = self.fillers(self.config.max_outside);
        let e1 = tokens.len();
        tokens.push(n1);
        tokens.extend(between);
        let e2 = tokens.len();
        tokens.push(n2);
        tokens.extend(self.fillers(self.config.max_outside));
        tokens.push(Token::new(".", "."));
        Sentence {
            tokens,
            e1,
            e2,
            label,
        }
    }

    fn record(&mut self, id: u64, label_noise: f64) -> SemEvalRecord {
        let s = self.sentence();
        let label = if self.rng.random::<f64>() < label_noise {
            *labels().choose(&mut self.rng).unwrap()
        } else {
            s.label
        };
        SemEvalRecord {
            id,
            tokens: s.tokens.into_iter().map(|t| t.surface).collect(),
            e1: s.e1,
            e2: s.e2,
            label,
        }
    }
}

/// Generates a tagged corpus and labeled train/test sets from one seed.
pub fn generate(config: &SynthConfig) -> SynthData {
    let mut g = Generator {
        config,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
    };
    let corpus = (0..config.corpus_sentences)
        .map(|_| TaggedSentence::new(g.sentence().tokens).expect("non-empty sentence"))
        .collect();
    let train = (0..config.train_instances)
        .map(|i| g.record(i as u64 + 1, config.label_noise))
        .collect();
    let test = (0..config.test_instances)
        .map(|i| g.record((config.train_instances + i) as u64 + 1, 0.0))
        .collect();
    SynthData {
        corpus,
        train,
        test,
    }
}
