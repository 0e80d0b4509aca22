//! Spearman correlation between human similarity judgments and embedding
//! cosines.

use std::io::BufRead;

use crate::cbow::cosine;
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::params::EmbeddingParams;

#[derive(Clone, Debug, PartialEq)]
pub struct WordSimPair {
    pub word1: String,
    pub word2: String,
    pub score: f64,
}

/// Which embedding matrix to compare.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmbeddingSelector {
    Nouns,
    Words,
}

impl std::str::FromStr for EmbeddingSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" | "n" | "nouns" => Ok(EmbeddingSelector::Nouns),
            "W" | "w" | "words" => Ok(EmbeddingSelector::Words),
            _ => Err(Error::Config(format!(
                "unknown embedding selector `{s}`; use N or W"
            ))),
        }
    }
}

/// Reads `word1,word2,score` lines, comma- or tab-separated. A first line
/// whose score does not parse is taken as a header.
pub fn read_wordsim<R: BufRead>(reader: R) -> Result<Vec<WordSimPair>> {
    let mut pairs = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => Error::Decode { line: n + 1 },
            _ => Error::Io(e),
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split([',', '\t']).map(str::trim).collect();
        let bad = || Error::format("word similarity file", format!("line {}: `{line}`", n + 1));
        if fields.len() < 3 {
            return Err(bad());
        }
        match fields[2].parse::<f64>() {
            Ok(score) => pairs.push(WordSimPair {
                word1: fields[0].to_string(),
                word2: fields[1].to_string(),
                score,
            }),
            Err(_) if n == 0 => continue,
            Err(_) => return Err(bad()),
        }
    }
    Ok(pairs)
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Empty("need at least two pairs"));
    }
    Ok(pearson(&average_ranks(x), &average_ranks(y)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct WordSimResult {
    pub rho: f64,
    pub pairs: usize,
    /// Pairs with at least one word scored through UNK.
    pub oov_pairs: usize,
    pub oov_words: Vec<String>,
}

/// Scores every pair by cosine in the selected matrix; unknown words use
/// the UNK row and are reported.
pub fn spearman_wordsim(
    pairs: &[WordSimPair],
    selector: EmbeddingSelector,
    params: &EmbeddingParams,
    vocab: &Vocabulary,
) -> Result<WordSimResult> {
    let (matrix, lookup, known): (
        _,
        fn(&Vocabulary, &str) -> usize,
        fn(&Vocabulary, &str) -> bool,
    ) = match selector {
        EmbeddingSelector::Nouns => (&params.nouns, Vocabulary::noun_id, Vocabulary::knows_noun),
        EmbeddingSelector::Words => (&params.words, Vocabulary::word_id, Vocabulary::knows_word),
    };
    let mut human = Vec::with_capacity(pairs.len());
    let mut model = Vec::with_capacity(pairs.len());
    let mut oov_pairs = 0;
    let mut oov_words = Vec::new();
    for p in pairs {
        let mut oov = false;
        for w in [&p.word1, &p.word2] {
            if !known(vocab, w) {
                oov = true;
                if !oov_words.contains(w) {
                    oov_words.push(w.clone());
                }
            }
        }
        oov_pairs += oov as usize;
        human.push(p.score);
        model.push(cosine(
            matrix.row(lookup(vocab, &p.word1)),
            matrix.row(lookup(vocab, &p.word2)),
        ));
    }
    Ok(WordSimResult {
        rho: spearman(&human, &model)?,
        pairs: pairs.len(),
        oov_pairs,
        oov_words,
    })
}
