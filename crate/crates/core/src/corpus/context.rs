//! Noun-pair contexts and their binary file format.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use super::tagged::TaggedSentence;
use super::vocab::{Vocabulary, WORD_NULL};
use crate::error::{Error, Result};

/// Pairs with more than this many words between the nouns are not extracted.
pub const DEFAULT_MAX_BETWEEN: usize = 10;

/// A noun pair with the words between, before and after it.
///
/// `w_bef` is in sentence order with the word nearest `n1` last, and
/// `w_aft` starts with the word nearest `n2`. Both are padded with NULL on
/// their far side to exactly `M_out` entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NounPairContext {
    pub n1: u32,
    pub n2: u32,
    pub w_in: Vec<u32>,
    pub w_bef: Vec<u32>,
    pub w_aft: Vec<u32>,
    pub sentence_ref: Option<u64>,
}

impl NounPairContext {
    pub fn m_in(&self) -> usize {
        self.w_in.len()
    }

    pub fn m_out(&self) -> usize {
        self.w_bef.len()
    }

    /// Copy keeping only the `m_out` outside words nearest the pair.
    pub fn truncate_outside(&self, m_out: usize) -> NounPairContext {
        assert!(m_out <= self.m_out(), "cannot widen outside windows");
        let skip = self.w_bef.len() - m_out;
        NounPairContext {
            w_bef: self.w_bef[skip..].to_vec(),
            w_aft: self.w_aft[..m_out].to_vec(),
            ..self.clone()
        }
    }
}

/// Builds a context from token word ids and the two noun positions `p < q`.
pub fn context_at(
    word_ids: &[u32],
    n1: u32,
    n2: u32,
    p: usize,
    q: usize,
    m_out: usize,
) -> NounPairContext {
    debug_assert!(p < q && q < word_ids.len());
    let null = WORD_NULL as u32;
    let start = p.saturating_sub(m_out);
    let mut w_bef = vec![null; m_out - (p - start)];
    w_bef.extend_from_slice(&word_ids[start..p]);
    let end = (q + 1 + m_out).min(word_ids.len());
    let mut w_aft = word_ids[q + 1..end].to_vec();
    w_aft.resize(m_out, null);
    NounPairContext {
        n1,
        n2,
        w_in: word_ids[p + 1..q].to_vec(),
        w_bef,
        w_aft,
        sentence_ref: None,
    }
}

/// Emits every ordered pair of noun tokens with between 1 and `max_between`
/// words separating them.
pub fn extract_noun_pair_contexts(
    sentence: &TaggedSentence,
    vocab: &Vocabulary,
    m_out: usize,
    max_between: usize,
) -> Vec<NounPairContext> {
    let tokens = sentence.tokens();
    let noun_pos: Vec<usize> = (0..tokens.len()).filter(|&i| tokens[i].is_noun()).collect();
    if noun_pos.len() < 2 {
        return Vec::new();
    }
    let word_ids: Vec<u32> = tokens
        .iter()
        .map(|t| vocab.word_id(&t.surface) as u32)
        .collect();
    let mut out = Vec::new();
    for (a, &p) in noun_pos.iter().enumerate() {
        let n1 = vocab.noun_id(&tokens[p].surface) as u32;
        for &q in &noun_pos[a + 1..] {
            let between = q - p - 1;
            if between > max_between {
                break;
            }
            if between == 0 {
                continue;
            }
            let n2 = vocab.noun_id(&tokens[q].surface) as u32;
            out.push(context_at(&word_ids, n1, n2, p, q, m_out));
        }
    }
    out
}

const CONTEXT_MAGIC: &str = "relemb-ctx v1";
const HEADER_LEN: usize = 96;

/// Summary numbers stored in a context file header.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ContextStats {
    pub contexts: u64,
    pub targets: u64,
    pub m_out: usize,
}

/// Streams contexts into a binary file: a fixed-width text header
/// followed by little-endian u32 records
/// `n1 n2 m_in w_in[m_in] w_bef[m_out] w_aft[m_out]`.
pub struct ContextWriter {
    out: BufWriter<File>,
    stats: ContextStats,
}

impl ContextWriter {
    pub fn create(path: impl AsRef<Path>, m_out: usize) -> Result<Self> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::file(path, e))?;
        let mut out = BufWriter::new(file);
        out.write_all(&[b' '; HEADER_LEN])?;
        Ok(ContextWriter {
            out,
            stats: ContextStats {
                m_out,
                ..Default::default()
            },
        })
    }

    pub fn write(&mut self, ctx: &NounPairContext) -> Result<()> {
        if ctx.m_out() != self.stats.m_out || ctx.w_aft.len() != self.stats.m_out {
            return Err(Error::Dimension(format!(
                "context has M_out={} but file uses {}",
                ctx.m_out(),
                self.stats.m_out
            )));
        }
        let o = &mut self.out;
        o.write_all(&ctx.n1.to_le_bytes())?;
        o.write_all(&ctx.n2.to_le_bytes())?;
        o.write_all(&(ctx.w_in.len() as u32).to_le_bytes())?;
        for id in ctx.w_in.iter().chain(&ctx.w_bef).chain(&ctx.w_aft) {
            o.write_all(&id.to_le_bytes())?;
        }
        self.stats.contexts += 1;
        self.stats.targets += ctx.w_in.len() as u64;
        Ok(())
    }

    pub fn finish(mut self) -> Result<ContextStats> {
        let header = format!(
            "{CONTEXT_MAGIC} contexts={} targets={} m_out={}",
            self.stats.contexts, self.stats.targets, self.stats.m_out
        );
        assert!(header.len() < HEADER_LEN);
        self.out.flush()?;
        let mut file = self.out.into_inner().map_err(|e| e.into_error())?;
        file.seek(SeekFrom::Start(0))?;
        let mut bytes = header.into_bytes();
        bytes.resize(HEADER_LEN - 1, b' ');
        bytes.push(b'\n');
        file.write_all(&bytes)?;
        file.flush()?;
        Ok(self.stats)
    }
}

/// A context file on disk; can be streamed any number of times.
#[derive(Clone, Debug)]
pub struct ContextFile {
    path: PathBuf,
    stats: ContextStats,
}

impl ContextFile {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut file = File::open(&path).map_err(|e| Error::file(&path, e))?;
        let mut header = vec![0u8; HEADER_LEN];
        file.read_exact(&mut header)
            .map_err(|_| Error::format("context file", "truncated header"))?;
        let header = String::from_utf8(header)
            .map_err(|_| Error::format("context file", "header is not text"))?;
        let header = header.trim();
        let rest = header
            .strip_prefix(CONTEXT_MAGIC)
            .ok_or_else(|| Error::format("context file", format!("bad header `{header}`")))?;
        let mut stats = ContextStats::default();
        for field in rest.split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| Error::format("context file", format!("bad field `{field}`")))?;
            let v: u64 = v
                .parse()
                .map_err(|_| Error::format("context file", format!("bad value `{field}`")))?;
            match k {
                "contexts" => stats.contexts = v,
                "targets" => stats.targets = v,
                "m_out" => stats.m_out = v as usize,
                _ => {
                    return Err(Error::format(
                        "context file",
                        format!("unknown field `{k}`"),
                    ))
                }
            }
        }
        Ok(ContextFile { path, stats })
    }

    pub fn stats(&self) -> ContextStats {
        self.stats
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn iter(&self) -> Result<ContextFileIter> {
        let mut file = File::open(&self.path).map_err(|e| Error::file(&self.path, e))?;
        file.seek(SeekFrom::Start(HEADER_LEN as u64))?;
        Ok(ContextFileIter {
            reader: BufReader::with_capacity(1 << 20, file),
            m_out: self.stats.m_out,
            remaining: self.stats.contexts,
        })
    }

    pub fn read_all(&self) -> Result<Vec<NounPairContext>> {
        self.iter()?.collect()
    }
}

pub struct ContextFileIter {
    reader: BufReader<File>,
    m_out: usize,
    remaining: u64,
}

impl ContextFileIter {
    fn read_u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.reader
            .read_exact(&mut b)
            .map_err(|_| Error::format("context file", "truncated record"))?;
        Ok(u32::from_le_bytes(b))
    }

    fn read_ids(&mut self, n: usize) -> Result<Vec<u32>> {
        (0..n).map(|_| self.read_u32()).collect()
    }

    fn read_record(&mut self) -> Result<NounPairContext> {
        let n1 = self.read_u32()?;
        let n2 = self.read_u32()?;
        let m_in = self.read_u32()? as usize;
        let w_in = self.read_ids(m_in)?;
        let w_bef = self.read_ids(self.m_out)?;
        let w_aft = self.read_ids(self.m_out)?;
        Ok(NounPairContext {
            n1,
            n2,
            w_in,
            w_bef,
            w_aft,
            sentence_ref: None,
        })
    }
}

impl Iterator for ContextFileIter {
    type Item = Result<NounPairContext>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let r = self.read_record();
        if r.is_err() {
            self.remaining = 0;
        }
        Some(r)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining as usize, Some(self.remaining as usize))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tagged::Token;
    use crate::corpus::vocab::build_vocabulary;

    fn sentence_with_nouns_at(len: usize, nouns: &[usize]) -> TaggedSentence {
        TaggedSentence::new(
            (0..len)
                .map(|i| {
                    if nouns.contains(&i) {
                        Token::new(format!("n{i}"), "NN")
                    } else {
                        Token::new(format!("w{i}"), "VB")
                    }
                })
                .collect(),
        )
        .unwrap()
    }

    fn vocab_for(s: &TaggedSentence) -> Vocabulary {
        build_vocabulary([s], 1000, 1000, true).unwrap()
    }

    #[test]
    fn pair_beyond_ten_words_omitted() {
        let s = sentence_with_nouns_at(13, &[0, 12]);
        let v = vocab_for(&s);
        assert!(extract_noun_pair_contexts(&s, &v, 5, DEFAULT_MAX_BETWEEN).is_empty());
        let s = sentence_with_nouns_at(13, &[0, 11]);
        assert_eq!(
            extract_noun_pair_contexts(&s, &v, 5, DEFAULT_MAX_BETWEEN).len(),
            1
        );
    }

    #[test]
    fn adjacent_nouns_omitted() {
        let s = sentence_with_nouns_at(4, &[1, 2]);
        let v = vocab_for(&s);
        assert!(extract_noun_pair_contexts(&s, &v, 2, 10).is_empty());
    }

    #[test]
    fn three_nouns_three_pairs() {
        let s = sentence_with_nouns_at(10, &[1, 4, 8]);
        let v = vocab_for(&s);
        let ctxs = extract_noun_pair_contexts(&s, &v, 2, 10);
        let pairs: Vec<(String, String)> = ctxs
            .iter()
            .map(|c| {
                (
                    v.nouns().surface(c.n1 as usize).to_string(),
                    v.nouns().surface(c.n2 as usize).to_string(),
                )
            })
            .collect();
        assert_eq!(
            pairs,
            vec![
                ("n1".into(), "n4".into()),
                ("n1".into(), "n8".into()),
                ("n4".into(), "n8".into())
            ]
        );
    }

    #[test]
    fn outside_windows_padded_with_null() {
        let s = sentence_with_nouns_at(6, &[1, 4]);
        let v = vocab_for(&s);
        let ctx = &extract_noun_pair_contexts(&s, &v, 3, 10)[0];
        let null = WORD_NULL as u32;
        let id = |w: &str| v.word_id(w) as u32;
        assert_eq!(ctx.w_in, vec![id("w2"), id("w3")]);
        assert_eq!(ctx.w_bef, vec![null, null, id("w0")]);
        assert_eq!(ctx.w_aft, vec![id("w5"), null, null]);
    }

    #[test]
    fn truncate_keeps_nearest() {
        let s = sentence_with_nouns_at(12, &[4, 7]);
        let v = vocab_for(&s);
        let ctx = &extract_noun_pair_contexts(&s, &v, 4, 10)[0];
        let t = ctx.truncate_outside(2);
        let id = |w: &str| v.word_id(w) as u32;
        assert_eq!(t.w_bef, vec![id("w2"), id("w3")]);
        assert_eq!(t.w_aft, vec![id("w8"), id("w9")]);
    }

    #[test]
    fn context_file_round_trip() {
        let s = sentence_with_nouns_at(15, &[0, 3, 5, 9, 14]);
        let v = vocab_for(&s);
        let ctxs = extract_noun_pair_contexts(&s, &v, 2, 10);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ctx.bin");
        let mut w = ContextWriter::create(&path, 2).unwrap();
        for c in &ctxs {
            w.write(c).unwrap();
        }
        let stats = w.finish().unwrap();
        assert_eq!(stats.contexts, ctxs.len() as u64);
        let f = ContextFile::open(&path).unwrap();
        assert_eq!(f.stats(), stats);
        assert_eq!(f.read_all().unwrap(), ctxs);
        // Re-iterable.
        assert_eq!(f.iter().unwrap().count(), ctxs.len());
    }

    #[test]
    fn writer_rejects_wrong_m_out() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ContextWriter::create(dir.path().join("c.bin"), 3).unwrap();
        let ctx = context_at(&[5, 6, 7, 8], 1, 2, 0, 2, 2);
        assert!(w.write(&ctx).is_err());
    }
}
