//! Frequency-ranked word and noun inventories.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::tagged::TaggedSentence;
use crate::error::{Error, Result};

pub const UNK: &str = "<UNK>";
pub const NULL: &str = "<NULL>";

/// Word-inventory id of the unknown-word token.
pub const WORD_UNK: usize = 0;
/// Word-inventory id of the padding token.
pub const WORD_NULL: usize = 1;
/// Noun-inventory id of the unknown-noun token.
pub const NOUN_UNK: usize = 0;

/// One ranked inventory. The first `specials` ids are reserved tokens;
/// the rest are ordered by non-increasing corpus count.
#[derive(Clone, Debug, PartialEq)]
pub struct Inventory {
    surfaces: Vec<String>,
    counts: Vec<u64>,
    specials: usize,
    index: HashMap<String, usize>,
}

impl Inventory {
    fn from_parts(surfaces: Vec<String>, counts: Vec<u64>, specials: usize) -> Self {
        let index = surfaces
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Inventory {
            surfaces,
            counts,
            specials,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    /// Number of reserved ids at the front of the inventory.
    pub fn specials(&self) -> usize {
        self.specials
    }

    pub fn get(&self, surface: &str) -> Option<usize> {
        self.index.get(surface).copied()
    }

    pub fn surface(&self, id: usize) -> &str {
        &self.surfaces[id]
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts[id]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn surfaces(&self) -> &[String] {
        &self.surfaces
    }

    /// Sum of all counts, including the unknown token's.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    words: Inventory,
    nouns: Inventory,
    lowercase: bool,
}

impl Vocabulary {
    pub fn words(&self) -> &Inventory {
        &self.words
    }

    pub fn nouns(&self) -> &Inventory {
        &self.nouns
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }

    fn normalize<'a>(&self, surface: &'a str) -> std::borrow::Cow<'a, str> {
        if self.lowercase {
            std::borrow::Cow::Owned(surface.to_lowercase())
        } else {
            std::borrow::Cow::Borrowed(surface)
        }
    }

    /// Word id of `surface`, or [`WORD_UNK`].
    pub fn word_id(&self, surface: &str) -> usize {
        self.words.get(&self.normalize(surface)).unwrap_or(WORD_UNK)
    }

    /// Noun id of `surface`, or [`NOUN_UNK`].
    pub fn noun_id(&self, surface: &str) -> usize {
        self.nouns.get(&self.normalize(surface)).unwrap_or(NOUN_UNK)
    }

    /// Whether `surface` has its own word id (specials excluded).
    pub fn knows_word(&self, surface: &str) -> bool {
        self.words
            .get(&self.normalize(surface))
            .is_some_and(|id| id >= self.words.specials())
    }

    pub fn knows_noun(&self, surface: &str) -> bool {
        self.nouns
            .get(&self.normalize(surface))
            .is_some_and(|id| id >= self.nouns.specials())
    }

    /// All tokens counted while building, in-vocabulary or not.
    pub fn total_token_count(&self) -> u64 {
        self.words.total()
    }

    /// All noun-tagged tokens counted while building.
    pub fn total_noun_count(&self) -> u64 {
        self.nouns.total()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::file(path, e))?;
        let mut w = BufWriter::new(file);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(
            w,
            "relemb-vocab v1 {} {} lowercase={}",
            self.words.len(),
            self.nouns.len(),
            u8::from(self.lowercase)
        )?;
        for inv in [&self.words, &self.nouns] {
            for (s, c) in inv.surfaces.iter().zip(&inv.counts) {
                writeln!(w, "{s}\t{c}")?;
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::file(path, e))?;
        Self::read(BufReader::new(file))
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::format("vocabulary", "empty file"))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() < 4 || fields[0] != "relemb-vocab" || fields[1] != "v1" {
            return Err(Error::format(
                "vocabulary",
                format!("bad header `{header}`"),
            ));
        }
        let parse_n = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::format("vocabulary", format!("bad size `{s}`")))
        };
        let n_words = parse_n(fields[2])?;
        let n_nouns = parse_n(fields[3])?;
        let mut lowercase = true;
        for extra in &fields[4..] {
            match extra.split_once('=') {
                Some(("lowercase", v)) => lowercase = v != "0",
                _ => {
                    return Err(Error::format(
                        "vocabulary",
                        format!("unknown header field `{extra}`"),
                    ))
                }
            }
        }
        if n_words < 2 || n_nouns < 1 {
            return Err(Error::format("vocabulary", "missing special tokens"));
        }
        let mut read_section = |n: usize| -> Result<(Vec<String>, Vec<u64>)> {
            let mut surfaces = Vec::with_capacity(n);
            let mut counts = Vec::with_capacity(n);
            for _ in 0..n {
                let line = lines
                    .next()
                    .ok_or_else(|| Error::format("vocabulary", "truncated file"))??;
                let (s, c) = line
                    .rsplit_once('\t')
                    .ok_or_else(|| Error::format("vocabulary", format!("bad line `{line}`")))?;
                let c = c
                    .parse::<u64>()
                    .map_err(|_| Error::format("vocabulary", format!("bad count in `{line}`")))?;
                surfaces.push(s.to_string());
                counts.push(c);
            }
            Ok((surfaces, counts))
        };
        let (ws, wc) = read_section(n_words)?;
        let (ns, nc) = read_section(n_nouns)?;
        if ws[WORD_UNK] != UNK || ws[WORD_NULL] != NULL || ns[NOUN_UNK] != UNK {
            return Err(Error::format("vocabulary", "special tokens out of place"));
        }
        Ok(Vocabulary {
            words: Inventory::from_parts(ws, wc, 2),
            nouns: Inventory::from_parts(ns, nc, 1),
            lowercase,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct FirstSeen {
    sentence: u64,
    token: u32,
}

#[derive(Clone, Debug, Default)]
struct CountTable {
    entries: HashMap<String, (u64, FirstSeen)>,
    total: u64,
}

impl CountTable {
    fn add(&mut self, surface: &str, at: FirstSeen) {
        self.total += 1;
        match self.entries.get_mut(surface) {
            Some((c, first)) => {
                *c += 1;
                if at < *first {
                    *first = at;
                }
            }
            None => {
                self.entries.insert(surface.to_string(), (1, at));
            }
        }
    }

    fn merge(&mut self, other: CountTable) {
        self.total += other.total;
        for (s, (c, first)) in other.entries {
            let e = self.entries.entry(s).or_insert((0, first));
            e.0 += c;
            e.1 = e.1.min(first);
        }
    }

    /// Top-`max` entries by count, earliest first occurrence breaking ties.
    fn ranked(self, max: usize) -> (Vec<(String, u64)>, u64) {
        let mut all: Vec<_> = self.entries.into_iter().collect();
        all.sort_unstable_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.1 .1.cmp(&b.1 .1)));
        all.truncate(max);
        let kept: u64 = all.iter().map(|(_, (c, _))| c).sum();
        let unk = self.total - kept;
        (all.into_iter().map(|(s, (c, _))| (s, c)).collect(), unk)
    }
}

/// Accumulates token counts. Counters built over disjoint shards can be
/// merged in any order; the result only depends on global sentence indices.
#[derive(Clone, Debug)]
pub struct VocabCounter {
    words: CountTable,
    nouns: CountTable,
    lowercase: bool,
}

impl VocabCounter {
    pub fn new(lowercase: bool) -> Self {
        VocabCounter {
            words: CountTable::default(),
            nouns: CountTable::default(),
            lowercase,
        }
    }

    /// Counts one sentence; `sentence_index` is its position in the corpus.
    pub fn add_sentence(&mut self, sentence_index: u64, sentence: &TaggedSentence) {
        for (i, tok) in sentence.tokens().iter().enumerate() {
            let at = FirstSeen {
                sentence: sentence_index,
                token: i as u32,
            };
            let surface = if self.lowercase {
                tok.surface.to_lowercase()
            } else {
                tok.surface.clone()
            };
            self.words.add(&surface, at);
            if tok.is_noun() {
                self.nouns.add(&surface, at);
            }
        }
    }

    /// Counts a plain token that is not part of a tagged sentence, e.g. from
    /// labeled data. `is_noun` routes it into the noun inventory as well.
    pub fn add_token(&mut self, sentence_index: u64, position: u32, surface: &str, is_noun: bool) {
        let at = FirstSeen {
            sentence: sentence_index,
            token: position,
        };
        let surface = if self.lowercase {
            surface.to_lowercase()
        } else {
            surface.to_string()
        };
        self.words.add(&surface, at);
        if is_noun {
            self.nouns.add(&surface, at);
        }
    }

    pub fn merge(&mut self, other: VocabCounter) {
        self.words.merge(other.words);
        self.nouns.merge(other.nouns);
    }

    pub fn finish(self, max_words: usize, max_nouns: usize) -> Result<Vocabulary> {
        if max_words == 0 || max_nouns == 0 {
            return Err(Error::Config(
                "max_words and max_nouns must be at least 1".into(),
            ));
        }
        let (words, word_unk) = self.words.ranked(max_words);
        let (nouns, noun_unk) = self.nouns.ranked(max_nouns);

        let mut ws = vec![UNK.to_string(), NULL.to_string()];
        let mut wc = vec![word_unk, 0];
        for (s, c) in words {
            ws.push(s);
            wc.push(c);
        }
        let mut ns = vec![UNK.to_string()];
        let mut nc = vec![noun_unk];
        for (s, c) in nouns {
            ns.push(s);
            nc.push(c);
        }
        Ok(Vocabulary {
            words: Inventory::from_parts(ws, wc, 2),
            nouns: Inventory::from_parts(ns, nc, 1),
            lowercase: self.lowercase,
        })
    }
}

/// Builds both inventories from a sentence stream.
pub fn build_vocabulary<'a, I>(
    sentences: I,
    max_words: usize,
    max_nouns: usize,
    lowercase: bool,
) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a TaggedSentence>,
{
    let mut counter = VocabCounter::new(lowercase);
    for (i, s) in sentences.into_iter().enumerate() {
        counter.add_sentence(i as u64, s);
    }
    counter.finish(max_words, max_nouns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tagged::Token;

    fn sentence(tokens: &[(&str, &str)]) -> TaggedSentence {
        TaggedSentence::new(tokens.iter().map(|(s, p)| Token::new(*s, *p)).collect()).unwrap()
    }

    #[test]
    fn top_k_and_unk_lookup() {
        let s = sentence(&[
            ("a", "DT"),
            ("a", "DT"),
            ("b", "DT"),
            ("a", "DT"),
            ("c", "DT"),
            ("b", "DT"),
            ("a", "DT"),
            ("b", "DT"),
            ("a", "DT"),
        ]);
        let v = build_vocabulary([&s], 2, 5, true).unwrap();
        assert_eq!(v.words().len(), 4);
        assert_eq!(v.words().surface(2), "a");
        assert_eq!(v.words().surface(3), "b");
        assert_eq!(v.word_id("c"), WORD_UNK);
        assert_eq!(v.words().count(WORD_UNK), 1);
        assert_eq!(v.total_token_count(), 9);
    }

    #[test]
    fn noun_counts_only_noun_tags() {
        let s = sentence(&[
            ("cause", "VB"),
            ("cause", "NN"),
            ("effects", "NNS"),
            ("cause", "VBZ"),
        ]);
        let v = build_vocabulary([&s], 10, 10, true).unwrap();
        assert_eq!(v.words().count(v.word_id("cause")), 3);
        assert_eq!(v.nouns().count(v.noun_id("cause")), 1);
        assert_eq!(v.total_noun_count(), 2);
    }

    #[test]
    fn tie_broken_by_first_occurrence() {
        let s = sentence(&[("b", "DT"), ("a", "DT"), ("a", "DT"), ("b", "DT")]);
        let v = build_vocabulary([&s], 1, 1, true).unwrap();
        assert!(v.knows_word("b"));
        assert!(!v.knows_word("a"));
    }

    #[test]
    fn lowercasing_flag() {
        let s = sentence(&[("The", "DT"), ("the", "DT")]);
        let lower = build_vocabulary([&s], 10, 10, true).unwrap();
        assert_eq!(lower.words().len(), 3);
        assert_eq!(lower.word_id("THE"), 2);
        let exact = build_vocabulary([&s], 10, 10, false).unwrap();
        assert_eq!(exact.words().len(), 4);
        assert_eq!(exact.word_id("THE"), WORD_UNK);
    }

    #[test]
    fn zero_limits_rejected() {
        let s = sentence(&[("a", "DT")]);
        assert!(build_vocabulary([&s], 0, 1, true).is_err());
    }

    #[test]
    fn shard_merge_order_independent() {
        let sents = vec![
            sentence(&[("x", "NN"), ("y", "NN")]),
            sentence(&[("y", "NN"), ("x", "NN")]),
            sentence(&[("z", "NN"), ("z", "NN"), ("w", "DT")]),
            sentence(&[("w", "DT"), ("x", "NN"), ("y", "NN")]),
        ];
        let whole = build_vocabulary(&sents, 3, 2, true).unwrap();
        let shard = |range: std::ops::Range<usize>| {
            let mut c = VocabCounter::new(true);
            for i in range {
                c.add_sentence(i as u64, &sents[i]);
            }
            c
        };
        let mut fwd = shard(0..2);
        fwd.merge(shard(2..4));
        let mut rev = shard(2..4);
        rev.merge(shard(0..2));
        assert_eq!(fwd.finish(3, 2).unwrap(), whole);
        assert_eq!(rev.finish(3, 2).unwrap(), whole);
    }

    #[test]
    fn file_round_trip() {
        let s = sentence(&[
            ("cats", "NNS"),
            ("chase", "VBP"),
            ("mice", "NNS"),
            ("cats", "NNS"),
        ]);
        let v = build_vocabulary([&s], 10, 10, true).unwrap();
        let mut buf = Vec::new();
        v.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("relemb-vocab v1 5 3"));
        assert_eq!(Vocabulary::read(&buf[..]).unwrap(), v);
    }

    #[test]
    fn ranked_counts_non_increasing() {
        let s = sentence(&[
            ("q", "DT"),
            ("r", "DT"),
            ("r", "DT"),
            ("s", "DT"),
            ("s", "DT"),
            ("s", "DT"),
        ]);
        let v = build_vocabulary([&s], 10, 10, true).unwrap();
        let regular = &v.words().counts()[2..];
        assert!(regular.windows(2).all(|w| w[0] >= w[1]));
        assert!(regular.iter().all(|&c| c > 0));
    }
}
