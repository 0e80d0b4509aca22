//! CBOW embeddings with negative sampling, used to initialize the
//! classifier from general-purpose word vectors instead of pretrained
//! relation embeddings.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Vocabulary, NOUN_UNK, UNK, WORD_UNK};
use crate::embed_train::{ParamRows, SharedParams};
use crate::error::{Error, Result};
use crate::params::{
    axpy, dot, log_sigmoid, sigmoid, Block, EmbeddingParams, Matrix, SparseGradient,
};
use crate::sampling::{NoiseSampler, SubsamplingFilter};

#[derive(Clone, Debug, PartialEq)]
pub struct CbowConfig {
    pub d: usize,
    /// Context words on each side of the target.
    pub c: usize,
    pub k: usize,
    pub alpha: f64,
    pub t: f64,
    pub epochs: usize,
    pub seed: u64,
    pub threads: usize,
}

impl Default for CbowConfig {
    fn default() -> Self {
        CbowConfig {
            d: 100,
            c: 5,
            k: 25,
            alpha: 0.025,
            t: 1e-5,
            epochs: 1,
            seed: 1,
            threads: 1,
        }
    }
}

impl CbowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.d == 0 || self.c == 0 || self.k == 0 {
            return bad("d, c and k must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.t > 0.0) {
            return bad("t must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.threads == 0 {
            return bad("threads must be at least 1");
        }
        Ok(())
    }
}

/// Input (context) and output (prediction) vectors, one row per word.
#[derive(Clone, Debug, PartialEq)]
pub struct CbowModel {
    pub words: Vec<String>,
    pub input: Matrix,
    pub output: Matrix,
    pub c: usize,
}

impl CbowModel {
    pub fn d(&self) -> usize {
        self.input.cols()
    }

    pub fn is_finite(&self) -> bool {
        self.input.is_finite() && self.output.is_finite()
    }

    pub fn index(&self) -> HashMap<&str, usize> {
        let mut map = HashMap::with_capacity(self.words.len());
        for (i, w) in self.words.iter().enumerate() {
            map.entry(w.as_str()).or_insert(i);
        }
        map
    }

    /// The other word whose input vector has the highest cosine with
    /// `word`'s.
    pub fn nearest_neighbor(&self, word: &str) -> Option<(&str, f64)> {
        let i = self.words.iter().position(|w| w == word)?;
        let q = self.input.row(i);
        (0..self.words.len())
            .filter(|&j| j != i)
            .map(|j| (j, cosine(q, self.input.row(j))))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(j, s)| (self.words[j].as_str(), s))
    }

    /// Writes `<prefix>.in.vec` and `<prefix>.out.vec`.
    pub fn save(&self, prefix: impl AsRef<Path>) -> Result<()> {
        let (inp, out) = vector_paths(prefix.as_ref());
        write_vectors_file(&inp, &self.words, &self.input)?;
        write_vectors_file(&out, &self.words, &self.output)
    }

    /// Reads `<prefix>.in.vec` and, when present, `<prefix>.out.vec`.
    /// Without output vectors the output matrix is zero.
    pub fn load(prefix: impl AsRef<Path>, c: usize) -> Result<Self> {
        let (inp, out) = vector_paths(prefix.as_ref());
        let (words, input) = read_vectors_file(&inp)?;
        let output = if out.exists() {
            let (out_words, output) = read_vectors_file(&out)?;
            if out_words != words || output.cols() != input.cols() {
                return Err(Error::format(
                    "vector files",
                    format!(
                        "{} and {} list different words or dimensions",
                        inp.display(),
                        out.display()
                    ),
                ));
            }
            output
        } else {
            log::warn!("{} not found; output vectors set to zero", out.display());
            Matrix::zeros(input.rows(), input.cols())
        };
        Ok(CbowModel {
            words,
            input,
            output,
            c,
        })
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let den = (dot(a, a) * dot(b, b)).sqrt();
    if den == 0.0 {
        0.0
    } else {
        dot(a, b) / den
    }
}

pub(crate) fn vector_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    let with = |ext: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    (with(".in.vec"), with(".out.vec"))
}

/// Writes one `word v1 … vd` line per row.
pub fn write_vectors<W: Write>(w: &mut W, words: &[String], m: &Matrix) -> Result<()> {
    assert_eq!(words.len(), m.rows(), "one word per row");
    for (i, word) in words.iter().enumerate() {
        w.write_all(word.as_bytes())?;
        for v in m.row(i) {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_vectors_file(path: &Path, words: &[String], m: &Matrix) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::file(path, e))?;
    let mut w = BufWriter::new(file);
    write_vectors(&mut w, words, m)?;
    w.flush()?;
    Ok(())
}

/// Reads `word v1 … vd` lines. A leading `count dim` line, as written by
/// word2vec, is skipped.
pub fn read_vectors<R: BufRead>(reader: R) -> Result<(Vec<String>, Matrix)> {
    let mut words = Vec::new();
    let mut data = Vec::new();
    let mut dim = None;
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => Error::Decode { line: n + 1 },
            _ => Error::Io(e),
        })?;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else { continue };
        let values: Vec<&str> = fields.collect();
        if n == 0
            && values.len() == 1
            && word.parse::<u64>().is_ok()
            && values[0].parse::<u64>().is_ok()
        {
            continue;
        }
        let row = values
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::format("vector file", format!("line {}: bad number", n + 1)))?;
        match dim {
            None if row.is_empty() => {
                return Err(Error::format(
                    "vector file",
                    format!("line {}: no values", n + 1),
                ))
            }
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::format(
                    "vector file",
                    format!("line {}: {} values, expected {d}", n + 1, row.len()),
                ))
            }
            _ => {}
        }
        words.push(word.to_string());
        data.extend(row);
    }
    let d = dim.ok_or(Error::Empty("vector file"))?;
    let n = words.len();
    Ok((words, Matrix::from_vec(n, d, data)))
}

pub fn read_vectors_file(path: &Path) -> Result<(Vec<String>, Matrix)> {
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    read_vectors(BufReader::new(file))
}

/// `log σ(v'_w·h) + Σ log σ(-v'_u·h)` with `h` the mean input vector of
/// `context`.
pub fn cbow_objective(
    context: &[usize],
    target: usize,
    noise: &[usize],
    input: &Matrix,
    output: &Matrix,
) -> f64 {
    let mut h = vec![0.0; input.cols()];
    let scale = 1.0 / context.len() as f64;
    for &w in context {
        axpy(scale, input.row(w), &mut h);
    }
    log_sigmoid(dot(output.row(target), &h))
        + noise
            .iter()
            .map(|&u| log_sigmoid(-dot(output.row(u), &h)))
            .sum::<f64>()
}

struct Scratch {
    h: Vec<f64>,
    grad_h: Vec<f64>,
    row: Vec<f64>,
    coeffs: Vec<(usize, f64)>,
}

impl Scratch {
    fn new(d: usize) -> Self {
        Scratch {
            h: vec![0.0; d],
            grad_h: vec![0.0; d],
            row: vec![0.0; d],
            coeffs: Vec::new(),
        }
    }
}

/// One ascent step; input rows live in [`Block::Words`], output rows in
/// [`Block::Out`]. Gradients are taken before any update.
fn cbow_kernel<P: ParamRows + ?Sized>(
    p: &mut P,
    context: &[usize],
    target: usize,
    noise: &[usize],
    lr: f64,
    s: &mut Scratch,
) -> f64 {
    s.h.fill(0.0);
    let scale = 1.0 / context.len() as f64;
    for &w in context {
        p.read_row(Block::Words, w, &mut s.row);
        axpy(scale, &s.row, &mut s.h);
    }
    s.grad_h.fill(0.0);
    s.coeffs.clear();
    let mut objective = 0.0;
    for (u, label) in std::iter::once((target, 1.0)).chain(noise.iter().map(|&u| (u, 0.0))) {
        let score = p.dot_row(Block::Out, u, &s.h);
        objective += if label == 1.0 {
            log_sigmoid(score)
        } else {
            log_sigmoid(-score)
        };
        let g = label - sigmoid(score);
        p.read_row(Block::Out, u, &mut s.row);
        axpy(g, &s.row, &mut s.grad_h);
        s.coeffs.push((u, g));
    }
    for &(u, g) in &s.coeffs {
        p.add_row(Block::Out, u, lr * g, &s.h);
    }
    for &w in context {
        p.add_row(Block::Words, w, lr * scale, &s.grad_h);
    }
    objective
}

/// Gradient of [`cbow_objective`]: input rows under [`Block::Words`],
/// output rows under [`Block::Out`].
pub fn cbow_gradient(
    context: &[usize],
    target: usize,
    noise: &[usize],
    input: &Matrix,
    output: &Matrix,
) -> SparseGradient {
    let params = as_params(input.clone(), output.clone());
    let mut rec = crate::embed_train::GradientRecorder::new(&params);
    let mut s = Scratch::new(input.cols());
    cbow_kernel(&mut rec, context, target, noise, 1.0, &mut s);
    rec.gradient
}

/// Packs CBOW matrices into the parameter layout the row accessors use:
/// input vectors as `W`, output vectors as a `d`-column `W̃`.
fn as_params(input: Matrix, output: Matrix) -> EmbeddingParams {
    let d = input.cols();
    let n = input.rows();
    EmbeddingParams {
        d,
        c: 1,
        nouns: Matrix::zeros(0, d),
        words: input,
        out: output,
        bias: vec![0.0; n],
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CbowReport {
    pub planned_tokens: u64,
    pub processed: u64,
    pub trained: u64,
    /// Mean objective of the trained samples of each epoch.
    pub epoch_objective: Vec<f64>,
}

struct Shared<'a> {
    config: &'a CbowConfig,
    sampler: NoiseSampler,
    filter: SubsamplingFilter,
    planned: u64,
}

impl Shared<'_> {
    /// Subsamples `sentence` and trains on every kept position that has
    /// at least one kept neighbour within the window.
    #[allow(clippy::too_many_arguments)]
    fn sentence<P: ParamRows + ?Sized, R: Rng>(
        &self,
        p: &mut P,
        sentence: &[u32],
        processed_before: u64,
        rng: &mut R,
        kept: &mut Vec<usize>,
        context: &mut Vec<usize>,
        noise: &mut Vec<usize>,
        s: &mut Scratch,
    ) -> (u64, f64) {
        let cfg = self.config;
        kept.clear();
        kept.extend(
            sentence
                .iter()
                .map(|&w| w as usize)
                .filter(|&w| !self.filter.discard(w, rng)),
        );
        let lr = cfg.alpha * (1.0 - processed_before as f64 / self.planned as f64).max(0.0);
        let mut trained = 0;
        let mut objective = 0.0;
        for i in 0..kept.len() {
            context.clear();
            let lo = i.saturating_sub(cfg.c);
            let hi = (i + cfg.c + 1).min(kept.len());
            context.extend((lo..hi).filter(|&j| j != i).map(|j| kept[j]));
            if context.is_empty() {
                continue;
            }
            self.sampler.sample_into(cfg.k, Some(kept[i]), rng, noise);
            objective += cbow_kernel(p, context, kept[i], noise, lr, s);
            trained += 1;
        }
        (trained, objective)
    }
}

/// Trains CBOW vectors over word-id sentences.
///
/// Input vectors start Gaussian with variance `1/d`, output vectors at
/// zero. The learning rate decays linearly per sentence over
/// `epochs × tokens`. One thread gives a bit-reproducible run.
pub fn train_cbow(
    sentences: &[Vec<u32>],
    vocab: &Vocabulary,
    config: &CbowConfig,
) -> Result<(CbowModel, CbowReport)> {
    config.validate()?;
    let tokens: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    if tokens == 0 {
        return Err(Error::Empty("sentence stream"));
    }
    let n = vocab.words().len();
    if let Some(&bad) = sentences.iter().flatten().find(|&&w| w as usize >= n) {
        return Err(Error::Domain(format!(
            "word id {bad} outside the {n}-word inventory"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let std_dev = (1.0 / config.d as f64).sqrt();
    let input = Matrix::gaussian(n, config.d, std_dev, &mut rng);
    let mut params = as_params(input, Matrix::zeros(n, config.d));
    let shared = Shared {
        config,
        sampler: NoiseSampler::new(vocab.words().counts())?,
        filter: SubsamplingFilter::new(vocab.words().counts(), config.t)?,
        planned: tokens * config.epochs as u64,
    };
    let mut report = CbowReport {
        planned_tokens: shared.planned,
        ..Default::default()
    };
    let mut sums = vec![(0.0, 0u64); config.epochs];
    if config.threads == 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        let mut s = Scratch::new(config.d);
        let (mut kept, mut context, mut noise) = (Vec::new(), Vec::new(), Vec::new());
        let mut processed = 0u64;
        for sum in sums.iter_mut() {
            for sentence in sentences {
                let (t, o) = shared.sentence(
                    &mut params,
                    sentence,
                    processed,
                    &mut rng,
                    &mut kept,
                    &mut context,
                    &mut noise,
                    &mut s,
                );
                processed += sentence.len() as u64;
                sum.0 += o;
                sum.1 += t;
            }
        }
        report.processed = processed;
    } else {
        let view = SharedParams::new(&mut params);
        let next = AtomicUsize::new(0);
        let progress = AtomicU64::new(0);
        let merged = Mutex::new(vec![(0.0, 0u64); config.epochs]);
        let jobs = sentences.len() * config.epochs;
        std::thread::scope(|scope| {
            for worker in 0..config.threads {
                let (shared, next, progress, merged) = (&shared, &next, &progress, &merged);
                scope.spawn(move || {
                    let mut p = view;
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                    rng.set_stream(2 + worker as u64);
                    let mut s = Scratch::new(config.d);
                    let (mut kept, mut context, mut noise) = (Vec::new(), Vec::new(), Vec::new());
                    let mut local = vec![(0.0, 0u64); config.epochs];
                    loop {
                        let j = next.fetch_add(1, Ordering::Relaxed);
                        if j >= jobs {
                            break;
                        }
                        let sentence = &sentences[j % sentences.len()];
                        let before = progress.fetch_add(sentence.len() as u64, Ordering::Relaxed);
                        let (t, o) = shared.sentence(
                            &mut p,
                            sentence,
                            before,
                            &mut rng,
                            &mut kept,
                            &mut context,
                            &mut noise,
                            &mut s,
                        );
                        let e = &mut local[j / sentences.len()];
                        e.0 += o;
                        e.1 += t;
                    }
                    let mut m = merged.lock().unwrap();
                    for (a, b) in m.iter_mut().zip(local) {
                        a.0 += b.0;
                        a.1 += b.1;
                    }
                });
            }
        });
        sums = merged.into_inner().unwrap();
        report.processed = progress.into_inner();
    }
    report.trained = sums.iter().map(|s| s.1).sum();
    report.epoch_objective = sums
        .iter()
        .map(|&(o, t)| if t == 0 { 0.0 } else { o / t as f64 })
        .collect();
    for (e, obj) in report.epoch_objective.iter().enumerate() {
        log::info!("cbow epoch {}: mean objective {obj:.5}", e + 1);
    }
    let model = CbowModel {
        words: vocab.words().surfaces().to_vec(),
        input: params.words,
        output: params.out,
        c: config.c,
    };
    if !model.is_finite() {
        return Err(Error::Domain("CBOW training diverged".into()));
    }
    Ok((model, report))
}

/// Builds classifier parameters from CBOW vectors: `N` and `W` rows copy
/// the input vector of the same surface form and `W̃` takes the
/// `d`-dimensional output vectors. Surfaces the vectors lack take the
/// UNK row; without an UNK row they are reported as missing.
pub fn import_as_initialization(
    cbow: &CbowModel,
    vocab: &Vocabulary,
    c: usize,
) -> Result<EmbeddingParams> {
    if c == 0 {
        return Err(Error::Config("c must be at least 1".into()));
    }
    let index = cbow.index();
    // Case-folded fallback for vocabularies built with lowercasing.
    let mut folded: HashMap<String, usize> = HashMap::new();
    if vocab.lowercase() {
        for (i, w) in cbow.words.iter().enumerate() {
            folded.entry(w.to_lowercase()).or_insert(i);
        }
    }
    build_params(cbow, vocab, c, |s: &str| {
        index.get(s).copied().or_else(|| folded.get(s).copied())
    })
}

fn build_params(
    cbow: &CbowModel,
    vocab: &Vocabulary,
    c: usize,
    lookup: impl Fn(&str) -> Option<usize>,
) -> Result<EmbeddingParams> {
    let d = cbow.d();
    let unk = lookup(UNK);
    let mut missing = Vec::new();
    let mut resolve = |surface: &str| match lookup(surface).or(unk) {
        Some(i) => i,
        None => {
            missing.push(surface.to_string());
            0
        }
    };
    let word_rows: Vec<usize> = vocab
        .words()
        .surfaces()
        .iter()
        .map(|s| resolve(s))
        .collect();
    let noun_rows: Vec<usize> = vocab
        .nouns()
        .surfaces()
        .iter()
        .map(|s| resolve(s))
        .collect();
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(Error::VocabularyMismatch(missing));
    }
    let gather = |rows: &[usize], m: &Matrix| {
        let mut out = Matrix::zeros(rows.len(), d);
        for (i, &r) in rows.iter().enumerate() {
            out.row_mut(i).copy_from_slice(m.row(r));
        }
        out
    };
    let params = EmbeddingParams {
        d,
        c,
        nouns: gather(&noun_rows, &cbow.input),
        words: gather(&word_rows, &cbow.input),
        out: gather(&word_rows, &cbow.output),
        bias: vec![0.0; vocab.words().len()],
    };
    debug_assert_eq!(params.words.row(WORD_UNK).len(), d);
    debug_assert!(params.nouns.rows() > NOUN_UNK);
    params.validate()?;
    Ok(params)
}

/// Gaussian `N` and `W`, zero `W̃` and biases: the randomly initialized
/// starting point.
pub fn random_initialization(vocab: &Vocabulary, d: usize, c: usize, seed: u64) -> EmbeddingParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    EmbeddingParams::init(d, c, vocab.words().len(), vocab.nouns().len(), &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, TaggedSentence, Token};

    fn vocab_of(text: &[&str]) -> Vocabulary {
        let sentences: Vec<TaggedSentence> = text
            .iter()
            .map(|s| {
                TaggedSentence::new(s.split(' ').map(|w| Token::new(w, "NN")).collect()).unwrap()
            })
            .collect();
        build_vocabulary(sentences.iter(), 100, 100, false).unwrap()
    }

    #[test]
    fn zero_output_gives_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let input = Matrix::gaussian(5, 3, 0.5, &mut rng);
        let output = Matrix::zeros(5, 3);
        let obj = cbow_objective(&[1, 2], 3, &[], &input, &output);
        assert!((obj - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn vector_text_round_trip_and_header() {
        let words = vec!["a".to_string(), "b".to_string()];
        let m = Matrix::from_vec(2, 2, vec![0.1, -2.5, 1e-17, 3.0]);
        let mut buf = Vec::new();
        write_vectors(&mut buf, &words, &m).unwrap();
        let (w2, m2) = read_vectors(&buf[..]).unwrap();
        assert_eq!((w2, m2), (words.clone(), m.clone()));
        let with_header = format!("2 2\n{}", String::from_utf8(buf).unwrap());
        assert_eq!(read_vectors(with_header.as_bytes()).unwrap().1, m);
        assert!(read_vectors("a 1 2\nb 3\n".as_bytes()).is_err());
    }

    #[test]
    fn import_copies_and_falls_back_to_unk() {
        let vocab = vocab_of(&["cause effect cause", "effect x"]);
        let words = vec![UNK.to_string(), "cause".to_string(), "effect".to_string()];
        let input = Matrix::from_vec(3, 2, vec![9.0, 9.0, 1.0, 2.0, 3.0, 4.0]);
        let output = Matrix::from_vec(3, 2, vec![-9.0, -9.0, -1.0, -2.0, -3.0, -4.0]);
        let cbow = CbowModel {
            words,
            input,
            output,
            c: 2,
        };
        let p = import_as_initialization(&cbow, &vocab, 3).unwrap();
        assert_eq!(p.out_dim(), 2);
        assert_eq!(p.nouns.row(vocab.noun_id("cause")), &[1.0, 2.0]);
        assert_eq!(p.words.row(vocab.word_id("effect")), &[3.0, 4.0]);
        assert_eq!(p.out.row(vocab.word_id("effect")), &[-3.0, -4.0]);
        // "x" is absent from the vectors.
        assert_eq!(p.words.row(vocab.word_id("x")), &[9.0, 9.0]);
    }

    #[test]
    fn import_without_unk_lists_missing() {
        let vocab = vocab_of(&["cause effect"]);
        let cbow = CbowModel {
            words: vec!["cause".into()],
            input: Matrix::zeros(1, 2),
            output: Matrix::zeros(1, 2),
            c: 1,
        };
        match import_as_initialization(&cbow, &vocab, 1) {
            Err(Error::VocabularyMismatch(m)) => assert!(m.contains(&"effect".to_string())),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_stream_rejected() {
        let vocab = vocab_of(&["a b"]);
        assert!(train_cbow(&[], &vocab, &CbowConfig::default()).is_err());
    }

    #[test]
    fn seeded_serial_runs_match() {
        let vocab = vocab_of(&["a b c d", "b c d e"]);
        let sents: Vec<Vec<u32>> = (0..50)
            .map(|i| {
                ["a", "b", "c", "d", "e"]
                    .iter()
                    .cycle()
                    .skip(i % 5)
                    .take(6)
                    .map(|w| vocab.word_id(w) as u32)
                    .collect()
            })
            .collect();
        let cfg = CbowConfig {
            d: 8,
            c: 2,
            k: 3,
            t: 1.0,
            epochs: 2,
            ..Default::default()
        };
        let (a, ra) = train_cbow(&sents, &vocab, &cfg).unwrap();
        let (b, _) = train_cbow(&sents, &vocab, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra.processed, 600);
        let par = CbowConfig { threads: 3, ..cfg };
        let (c, rc) = train_cbow(&sents, &vocab, &par).unwrap();
        assert!(c.is_finite());
        assert_eq!(rc.processed, 600);
    }
}
