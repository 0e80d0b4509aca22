//! Reader for the two-column POS-tagged corpus format.
//!
//! One token per line as `surface<TAB>POS`; a blank line ends a sentence.
//! Lines that do not have exactly two non-empty columns are skipped and
//! counted.

use std::io::{BufRead, ErrorKind};

use crate::error::{Error, Result};

/// Penn Treebank tags that mark a token as a noun.
pub const NOUN_TAGS: [&str; 4] = ["NN", "NNS", "NNP", "NNPS"];

pub fn is_noun_tag(pos: &str) -> bool {
    NOUN_TAGS.contains(&pos)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub pos: String,
}

impl Token {
    pub fn new(surface: impl Into<String>, pos: impl Into<String>) -> Self {
        Token {
            surface: surface.into(),
            pos: pos.into(),
        }
    }

    pub fn is_noun(&self) -> bool {
        is_noun_tag(&self.pos)
    }
}

/// A non-empty sentence of POS-tagged tokens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedSentence {
    tokens: Vec<Token>,
}

impl TaggedSentence {
    /// Returns `None` for an empty token list or a token with an empty tag.
    pub fn new(tokens: Vec<Token>) -> Option<Self> {
        if tokens.is_empty() || tokens.iter().any(|t| t.pos.is_empty()) {
            return None;
        }
        Some(TaggedSentence { tokens })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Renders the sentence back into the tagged text format, including the
    /// terminating blank line.
    pub fn to_tagged_text(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            out.push_str(&t.surface);
            out.push('\t');
            out.push_str(&t.pos);
            out.push('\n');
        }
        out.push('\n');
        out
    }
}

/// Streaming parser over a tagged corpus.
pub struct TaggedCorpusReader<R> {
    reader: R,
    line_no: usize,
    skipped: usize,
    buf: String,
    done: bool,
}

impl<R: BufRead> TaggedCorpusReader<R> {
    pub fn new(reader: R) -> Self {
        TaggedCorpusReader {
            reader,
            line_no: 0,
            skipped: 0,
            buf: String::new(),
            done: false,
        }
    }

    /// Number of malformed lines skipped so far.
    pub fn skipped_lines(&self) -> usize {
        self.skipped
    }

    fn next_sentence(&mut self) -> Result<Option<TaggedSentence>> {
        let mut tokens = Vec::new();
        loop {
            self.buf.clear();
            let n = match self.reader.read_line(&mut self.buf) {
                Ok(n) => n,
                Err(e) if e.kind() == ErrorKind::InvalidData => {
                    return Err(Error::Decode {
                        line: self.line_no + 1,
                    })
                }
                Err(e) => return Err(e.into()),
            };
            if n == 0 {
                self.done = true;
                return Ok(TaggedSentence::new(tokens));
            }
            self.line_no += 1;
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                if !tokens.is_empty() {
                    return Ok(TaggedSentence::new(tokens));
                }
                continue;
            }
            let mut cols = line.split('\t');
            match (cols.next(), cols.next(), cols.next()) {
                (Some(surface), Some(pos), None)
                    if !surface.is_empty() && !pos.trim().is_empty() =>
                {
                    tokens.push(Token::new(surface, pos.trim()));
                }
                _ => {
                    self.skipped += 1;
                    log::warn!(
                        "tagged corpus line {}: skipping malformed line",
                        self.line_no
                    );
                }
            }
        }
    }
}

impl<R: BufRead> Iterator for TaggedCorpusReader<R> {
    type Item = Result<TaggedSentence>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_sentence() {
            Ok(Some(s)) => Some(Ok(s)),
            Ok(None) => None,
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Parses a whole tagged corpus held in memory.
pub fn parse_tagged_corpus<R: BufRead>(reader: R) -> TaggedCorpusReader<R> {
    TaggedCorpusReader::new(reader)
}
