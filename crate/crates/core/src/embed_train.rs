//! Pretraining: predict each word between a noun pair with negative
//! sampling, pair- and target-level subsampling and a linearly decaying
//! learning rate.
//!
//! The update kernel is written against [`ParamRows`], so the same code
//! drives the deterministic single-threaded trainer, the lock-free
//! multi-threaded trainer and the gradient recorder used by tests.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{ContextFile, NounPairContext, Vocabulary, WORD_NULL};
use crate::error::{Error, Result};
pub use crate::params::SparseGradient;
use crate::params::{axpy, dot, feature_dim, log_sigmoid, sigmoid, Block, EmbeddingParams};
use crate::sampling::{pair_discard, NoiseSampler, SubsamplingFilter};

#[derive(Clone, Debug, PartialEq)]
pub struct PretrainConfig {
    pub d: usize,
    pub c: usize,
    /// Negative samples per target.
    pub k: usize,
    /// Initial learning rate.
    pub alpha: f64,
    pub m_out: usize,
    /// Subsampling threshold.
    pub t: f64,
    pub epochs: usize,
    pub seed: u64,
    pub threads: usize,
    /// Targets per objective reporting window.
    pub report_every: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            d: 100,
            c: 3,
            k: 25,
            alpha: 0.025,
            m_out: 5,
            t: 1e-5,
            epochs: 1,
            seed: 1,
            threads: 1,
            report_every: 100_000,
        }
    }
}

impl PretrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.d == 0 {
            return bad("d must be at least 1");
        }
        if self.c == 0 {
            return bad("c must be at least 1");
        }
        if self.k == 0 {
            return bad("k must be at least 1");
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
        if self.report_every == 0 {
            return bad("report_every must be at least 1");
        }
        Ok(())
    }
}

/// Row-level access to embedding parameters.
pub trait ParamRows {
    fn read_row(&self, block: Block, idx: usize, out: &mut [f64]);
    fn dot_row(&self, block: Block, idx: usize, x: &[f64]) -> f64;
    /// `row += alpha * x`
    fn add_row(&mut self, block: Block, idx: usize, alpha: f64, x: &[f64]);
    fn bias(&self, idx: usize) -> f64;
    fn add_bias(&mut self, idx: usize, delta: f64);
}

impl ParamRows for EmbeddingParams {
    #[inline]
    fn read_row(&self, block: Block, idx: usize, out: &mut [f64]) {
        out.copy_from_slice(self.block(block).row(idx));
    }

    #[inline]
    fn dot_row(&self, block: Block, idx: usize, x: &[f64]) -> f64 {
        dot(self.block(block).row(idx), x)
    }

    #[inline]
    fn add_row(&mut self, block: Block, idx: usize, alpha: f64, x: &[f64]) {
        axpy(alpha, x, self.block_mut(block).row_mut(idx));
    }

    #[inline]
    fn bias(&self, idx: usize) -> f64 {
        self.bias[idx]
    }

    #[inline]
    fn add_bias(&mut self, idx: usize, delta: f64) {
        self.bias[idx] += delta;
    }
}

/// Reads from fixed parameters and records every update instead of
/// applying it. With a unit learning rate the record is the gradient.
pub struct GradientRecorder<'a> {
    params: &'a EmbeddingParams,
    pub gradient: SparseGradient,
}

impl<'a> GradientRecorder<'a> {
    pub fn new(params: &'a EmbeddingParams) -> Self {
        GradientRecorder {
            params,
            gradient: SparseGradient::default(),
        }
    }
}

impl ParamRows for GradientRecorder<'_> {
    fn read_row(&self, block: Block, idx: usize, out: &mut [f64]) {
        self.params.read_row(block, idx, out)
    }

    fn dot_row(&self, block: Block, idx: usize, x: &[f64]) -> f64 {
        self.params.dot_row(block, idx, x)
    }

    fn add_row(&mut self, block: Block, idx: usize, alpha: f64, x: &[f64]) {
        self.gradient.add_row(block, idx, alpha, x);
    }

    fn bias(&self, idx: usize) -> f64 {
        self.params.bias[idx]
    }

    fn add_bias(&mut self, idx: usize, delta: f64) {
        *self.gradient.bias.entry(idx).or_insert(0.0) += delta;
    }
}

/// Unsynchronized shared view for lock-free parallel updates. Values are
/// stored as `f64` bit patterns in relaxed atomics; concurrent
/// read-modify-write sequences may lose updates, which the training
/// contract tolerates.
#[derive(Clone, Copy)]
pub(crate) struct SharedParams<'a> {
    nouns: &'a [AtomicU64],
    words: &'a [AtomicU64],
    out: &'a [AtomicU64],
    bias: &'a [AtomicU64],
    d: usize,
    out_dim: usize,
}

fn atomic_view(values: &mut [f64]) -> &[AtomicU64] {
    assert_eq!(std::mem::size_of::<f64>(), std::mem::size_of::<AtomicU64>());
    assert_eq!(
        values.as_ptr() as usize % std::mem::align_of::<AtomicU64>(),
        0
    );
    // SAFETY: the exclusive borrow guarantees no other access for the
    // returned lifetime; size and alignment were checked above.
    unsafe { std::slice::from_raw_parts(values.as_mut_ptr() as *const AtomicU64, values.len()) }
}

impl<'a> SharedParams<'a> {
    pub(crate) fn new(p: &'a mut EmbeddingParams) -> Self {
        let d = p.d;
        let out_dim = p.out_dim();
        SharedParams {
            nouns: atomic_view(p.nouns.as_mut_slice()),
            words: atomic_view(p.words.as_mut_slice()),
            out: atomic_view(p.out.as_mut_slice()),
            bias: atomic_view(&mut p.bias),
            d,
            out_dim,
        }
    }

    #[inline]
    fn row(&self, block: Block, idx: usize) -> &'a [AtomicU64] {
        let (data, width) = match block {
            Block::Nouns => (self.nouns, self.d),
            Block::Words => (self.words, self.d),
            Block::Out => (self.out, self.out_dim),
        };
        &data[idx * width..(idx + 1) * width]
    }
}

#[inline]
fn load(a: &AtomicU64) -> f64 {
    f64::from_bits(a.load(Ordering::Relaxed))
}

#[inline]
fn store(a: &AtomicU64, v: f64) {
    a.store(v.to_bits(), Ordering::Relaxed)
}

impl ParamRows for SharedParams<'_> {
    fn read_row(&self, block: Block, idx: usize, out: &mut [f64]) {
        for (o, a) in out.iter_mut().zip(self.row(block, idx)) {
            *o = load(a);
        }
    }

    fn dot_row(&self, block: Block, idx: usize, x: &[f64]) -> f64 {
        self.row(block, idx)
            .iter()
            .zip(x)
            .map(|(a, v)| load(a) * v)
            .sum()
    }

    fn add_row(&mut self, block: Block, idx: usize, alpha: f64, x: &[f64]) {
        for (a, v) in self.row(block, idx).iter().zip(x) {
            store(a, load(a) + alpha * v);
        }
    }

    fn bias(&self, idx: usize) -> f64 {
        load(&self.bias[idx])
    }

    fn add_bias(&mut self, idx: usize, delta: f64) {
        let a = &self.bias[idx];
        store(a, load(a) + delta);
    }
}

/// Word ids of the `2c` window slots around target `i` (0-based): the
/// left neighbours nearest first, then the right neighbours nearest first.
/// Positions outside `w_in` yield NULL.
pub fn window_ids(w_in: &[u32], i: usize, c: usize) -> impl Iterator<Item = usize> + '_ {
    let null = WORD_NULL;
    let left = (1..=c).map(move |j| if j <= i { w_in[i - j] as usize } else { null });
    let right = (1..=c).map(move |j| w_in.get(i + j).map_or(null, |&w| w as usize));
    left.chain(right)
}

fn assemble_f<P: ParamRows + ?Sized>(
    ctx: &NounPairContext,
    i: usize,
    p: &P,
    d: usize,
    c: usize,
    f: &mut [f64],
    row: &mut [f64],
) {
    debug_assert_eq!(f.len(), feature_dim(d, c));
    p.read_row(Block::Nouns, ctx.n1 as usize, &mut f[0..d]);
    p.read_row(Block::Nouns, ctx.n2 as usize, &mut f[d..2 * d]);
    for (slot, w) in window_ids(&ctx.w_in, i, c).enumerate() {
        let off = (2 + slot) * d;
        p.read_row(Block::Words, w, &mut f[off..off + d]);
    }
    let bef = (2 + 2 * c) * d;
    let aft = bef + d;
    for (off, ids) in [(bef, &ctx.w_bef), (aft, &ctx.w_aft)] {
        let out = &mut f[off..off + d];
        out.fill(0.0);
        if ids.is_empty() {
            continue;
        }
        let scale = 1.0 / ids.len() as f64;
        for &w in ids.iter() {
            p.read_row(Block::Words, w as usize, row);
            axpy(scale, row, out);
        }
    }
}

/// The pretraining feature vector for target `i` (0-based) of `ctx`:
/// `[N(n1); N(n2); W(left window); W(right window); mean W(w_bef); mean W(w_aft)]`.
pub fn build_feature_vector(ctx: &NounPairContext, i: usize, params: &EmbeddingParams) -> Vec<f64> {
    assert!(
        i < ctx.m_in(),
        "target index {i} out of range for M_in={}",
        ctx.m_in()
    );
    let (d, c) = (params.d, params.c);
    let mut f = vec![0.0; feature_dim(d, c)];
    let mut row = vec![0.0; d];
    assemble_f(ctx, i, params, d, c, &mut f, &mut row);
    f
}

/// `σ(W̃(w)·f + b(w))`
pub fn target_probability(f: &[f64], w: usize, params: &EmbeddingParams) -> f64 {
    sigmoid(dot(params.out.row(w), f) + params.bias[w])
}

/// The per-sample objective `log p(target|f) + Σ log(1 - p(noise|f))`.
pub fn pretrain_objective(
    ctx: &NounPairContext,
    i: usize,
    params: &EmbeddingParams,
    noise: &[usize],
) -> f64 {
    let f = build_feature_vector(ctx, i, params);
    let target = ctx.w_in[i] as usize;
    let score = |w: usize| dot(params.out.row(w), &f) + params.bias[w];
    log_sigmoid(score(target)) + noise.iter().map(|&w| log_sigmoid(-score(w))).sum::<f64>()
}

/// Reusable buffers for [`step_kernel`].
pub struct StepScratch {
    f: Vec<f64>,
    grad_f: Vec<f64>,
    row: Vec<f64>,
    out_row: Vec<f64>,
    noise: Vec<usize>,
    coeffs: Vec<(usize, f64)>,
}

impl StepScratch {
    pub fn new(d: usize, c: usize) -> Self {
        let n = feature_dim(d, c);
        StepScratch {
            f: vec![0.0; n],
            grad_f: vec![0.0; n],
            row: vec![0.0; d],
            out_row: vec![0.0; n],
            noise: Vec::new(),
            coeffs: Vec::new(),
        }
    }
}

/// One gradient-ascent step on target `i` against the given noise words.
/// All gradients are taken at the pre-step parameters. Returns the
/// objective before the update.
pub fn step_kernel<P: ParamRows + ?Sized>(
    p: &mut P,
    ctx: &NounPairContext,
    i: usize,
    noise: &[usize],
    lr: f64,
    d: usize,
    c: usize,
    s: &mut StepScratch,
) -> f64 {
    assemble_f(ctx, i, p, d, c, &mut s.f, &mut s.row);
    s.grad_f.fill(0.0);
    s.coeffs.clear();

    let target = ctx.w_in[i] as usize;
    let mut objective = 0.0;
    let samples = std::iter::once((target, true)).chain(noise.iter().map(|&w| (w, false)));
    for (w, positive) in samples {
        let score = p.dot_row(Block::Out, w, &s.f) + p.bias(w);
        let (label, ll) = if positive {
            (1.0, log_sigmoid(score))
        } else {
            (0.0, log_sigmoid(-score))
        };
        objective += ll;
        let g = label - sigmoid(score);
        p.read_row(Block::Out, w, &mut s.out_row);
        axpy(g, &s.out_row, &mut s.grad_f);
        s.coeffs.push((w, g));
    }

    for &(w, g) in &s.coeffs {
        p.add_row(Block::Out, w, lr * g, &s.f);
        p.add_bias(w, lr * g);
    }

    let gf = &s.grad_f;
    p.add_row(Block::Nouns, ctx.n1 as usize, lr, &gf[0..d]);
    p.add_row(Block::Nouns, ctx.n2 as usize, lr, &gf[d..2 * d]);
    for (slot, w) in window_ids(&ctx.w_in, i, c).enumerate() {
        let off = (2 + slot) * d;
        p.add_row(Block::Words, w, lr, &gf[off..off + d]);
    }
    let bef = (2 + 2 * c) * d;
    let aft = bef + d;
    for (off, ids) in [(bef, &ctx.w_bef), (aft, &ctx.w_aft)] {
        if ids.is_empty() {
            continue;
        }
        let scale = lr / ids.len() as f64;
        for &w in ids.iter() {
            p.add_row(Block::Words, w as usize, scale, &gf[off..off + d]);
        }
    }
    objective
}

/// Draws `k` noise words (redrawing the target) and applies one update to
/// `params`. Returns the sample's objective before the update.
pub fn pretrain_step<R: Rng + ?Sized>(
    ctx: &NounPairContext,
    i: usize,
    params: &mut EmbeddingParams,
    lr: f64,
    k: usize,
    sampler: &NoiseSampler,
    rng: &mut R,
) -> f64 {
    assert!(i < ctx.m_in(), "target index out of range");
    let (d, c) = (params.d, params.c);
    let mut scratch = StepScratch::new(d, c);
    let mut noise = std::mem::take(&mut scratch.noise);
    sampler.sample_into(k, Some(ctx.w_in[i] as usize), rng, &mut noise);
    step_kernel(params, ctx, i, &noise, lr, d, c, &mut scratch)
}

/// Gradient of the per-sample objective at `params` for fixed noise words.
pub fn pretrain_gradient(
    ctx: &NounPairContext,
    i: usize,
    params: &EmbeddingParams,
    noise: &[usize],
) -> SparseGradient {
    let mut rec = GradientRecorder::new(params);
    let mut scratch = StepScratch::new(params.d, params.c);
    step_kernel(
        &mut rec,
        ctx,
        i,
        noise,
        1.0,
        params.d,
        params.c,
        &mut scratch,
    );
    rec.gradient
}

/// A source of contexts that can be streamed once per epoch.
pub trait ContextSource: Sync {
    /// Total prediction targets in one pass.
    fn total_targets(&self) -> Result<u64>;
    fn stream(&self) -> Result<Box<dyn Iterator<Item = Result<NounPairContext>> + Send + '_>>;
}

impl ContextSource for [NounPairContext] {
    fn total_targets(&self) -> Result<u64> {
        Ok(self.iter().map(|c| c.m_in() as u64).sum())
    }

    fn stream(&self) -> Result<Box<dyn Iterator<Item = Result<NounPairContext>> + Send + '_>> {
        Ok(Box::new(self.iter().cloned().map(Ok)))
    }
}

impl ContextSource for Vec<NounPairContext> {
    fn total_targets(&self) -> Result<u64> {
        self.as_slice().total_targets()
    }

    fn stream(&self) -> Result<Box<dyn Iterator<Item = Result<NounPairContext>> + Send + '_>> {
        self.as_slice().stream()
    }
}

impl ContextSource for ContextFile {
    fn total_targets(&self) -> Result<u64> {
        Ok(self.stats().targets)
    }

    fn stream(&self) -> Result<Box<dyn Iterator<Item = Result<NounPairContext>> + Send + '_>> {
        Ok(Box::new(self.iter()?))
    }
}

/// Mean objective over one reporting window.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowStat {
    /// Index of the window; covers processed targets
    /// `[index * report_every, (index + 1) * report_every)`.
    pub index: u64,
    pub trained: u64,
    pub mean_objective: f64,
    /// Learning rate at the window start.
    pub lr: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PretrainReport {
    pub planned_targets: u64,
    pub processed: u64,
    /// Targets that survived subsampling and were trained on.
    pub trained: u64,
    pub windows: Vec<WindowStat>,
}

impl PretrainReport {
    /// Mean windowed objective over the first and last `fraction` of the
    /// reporting windows.
    pub fn early_late_objective(&self, fraction: f64) -> Option<(f64, f64)> {
        let w: Vec<_> = self.windows.iter().filter(|w| w.trained > 0).collect();
        let n = ((w.len() as f64 * fraction).ceil() as usize).max(1);
        if w.len() < 2 * n {
            return None;
        }
        let mean = |ws: &[&WindowStat]| {
            let t: u64 = ws.iter().map(|w| w.trained).sum();
            ws.iter()
                .map(|w| w.mean_objective * w.trained as f64)
                .sum::<f64>()
                / t as f64
        };
        Some((mean(&w[..n]), mean(&w[w.len() - n..])))
    }
}

#[derive(Default)]
struct WindowAccum {
    sums: BTreeMap<u64, (f64, u64)>,
}

impl WindowAccum {
    fn add(&mut self, window: u64, objective: f64) {
        let e = self.sums.entry(window).or_insert((0.0, 0));
        e.0 += objective;
        e.1 += 1;
    }

    fn merge(&mut self, other: WindowAccum) {
        for (k, (s, n)) in other.sums {
            let e = self.sums.entry(k).or_insert((0.0, 0));
            e.0 += s;
            e.1 += n;
        }
    }

    fn into_stats(self, alpha: f64, planned: u64, every: u64) -> Vec<WindowStat> {
        self.sums
            .into_iter()
            .map(|(index, (sum, n))| WindowStat {
                index,
                trained: n,
                mean_objective: sum / n as f64,
                lr: alpha * (1.0 - (index * every) as f64 / planned as f64).max(0.0),
            })
            .collect()
    }
}

struct TrainShared<'a> {
    config: &'a PretrainConfig,
    sampler: NoiseSampler,
    word_filter: SubsamplingFilter,
    noun_filter: SubsamplingFilter,
    planned: u64,
}

impl TrainShared<'_> {
    #[inline]
    fn lr_at(&self, processed: u64) -> f64 {
        self.config.alpha * (1.0 - processed as f64 / self.planned as f64).max(0.0)
    }

    /// Runs every target of `ctx`. `progress` returns the processed count
    /// before each target and is advanced by the caller-provided closure.
    #[allow(clippy::too_many_arguments)]
    fn process<P: ParamRows + ?Sized, R: Rng>(
        &self,
        p: &mut P,
        ctx: &NounPairContext,
        rng: &mut R,
        scratch: &mut StepScratch,
        noise: &mut Vec<usize>,
        windows: &mut WindowAccum,
        mut next_progress: impl FnMut() -> u64,
    ) -> u64 {
        let cfg = self.config;
        let mut trained = 0;
        for i in 0..ctx.m_in() {
            let processed = next_progress();
            if pair_discard(&self.noun_filter, ctx.n1 as usize, ctx.n2 as usize, rng) {
                continue;
            }
            let target = ctx.w_in[i] as usize;
            if self.word_filter.discard(target, rng) {
                continue;
            }
            self.sampler.sample_into(cfg.k, Some(target), rng, noise);
            let lr = self.lr_at(processed);
            let obj = step_kernel(p, ctx, i, noise, lr, cfg.d, cfg.c, scratch);
            windows.add(processed / cfg.report_every, obj);
            trained += 1;
        }
        trained
    }
}

fn check_vocab(vocab: &Vocabulary, params: &EmbeddingParams) -> Result<()> {
    if params.n_words() != vocab.words().len() || params.n_nouns() != vocab.nouns().len() {
        return Err(Error::Dimension(format!(
            "parameters have {} words / {} nouns, vocabulary has {} / {}",
            params.n_words(),
            params.n_nouns(),
            vocab.words().len(),
            vocab.nouns().len()
        )));
    }
    Ok(())
}

/// Trains embeddings from scratch. See [`train_embeddings_from`].
pub fn train_embeddings<S: ContextSource + ?Sized>(
    source: &S,
    vocab: &Vocabulary,
    config: &PretrainConfig,
) -> Result<(EmbeddingParams, PretrainReport)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = EmbeddingParams::init(
        config.d,
        config.c,
        vocab.words().len(),
        vocab.nouns().len(),
        &mut rng,
    );
    let report = train_embeddings_from(source, vocab, config, &mut params)?;
    Ok((params, report))
}

/// Continues training `params` over `config.epochs` passes of `source`.
///
/// The learning rate decays linearly from `alpha` towards zero over the
/// planned targets (`epochs` times the targets per pass); discarded
/// samples still advance the schedule. With one thread the run is
/// bit-reproducible for a fixed seed.
pub fn train_embeddings_from<S: ContextSource + ?Sized>(
    source: &S,
    vocab: &Vocabulary,
    config: &PretrainConfig,
    params: &mut EmbeddingParams,
) -> Result<PretrainReport> {
    config.validate()?;
    check_vocab(vocab, params)?;
    if params.d != config.d || params.c != config.c || !params.has_full_out() {
        return Err(Error::Dimension(format!(
            "parameters (d={}, c={}, out={}) do not match config (d={}, c={})",
            params.d,
            params.c,
            params.out_dim(),
            config.d,
            config.c
        )));
    }
    let per_epoch = source.total_targets()?;
    if per_epoch == 0 {
        return Err(Error::Empty("no prediction targets in the context stream"));
    }
    let shared = TrainShared {
        config,
        sampler: NoiseSampler::new(vocab.words().counts())?,
        word_filter: SubsamplingFilter::new(vocab.words().counts(), config.t)?,
        noun_filter: SubsamplingFilter::new(vocab.nouns().counts(), config.t)?,
        planned: per_epoch * config.epochs as u64,
    };
    let (processed, trained, windows) = if config.threads == 1 {
        train_serial(source, &shared, params)?
    } else {
        train_parallel(source, &shared, params)?
    };
    log::info!(
        "pretraining done: {processed} targets processed, {trained} trained after subsampling"
    );
    Ok(PretrainReport {
        planned_targets: shared.planned,
        processed,
        trained,
        windows: windows.into_stats(config.alpha, shared.planned, config.report_every),
    })
}

fn train_serial<S: ContextSource + ?Sized>(
    source: &S,
    shared: &TrainShared<'_>,
    params: &mut EmbeddingParams,
) -> Result<(u64, u64, WindowAccum)> {
    let cfg = shared.config;
    // Separate stream from the initialization draws.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut scratch = StepScratch::new(cfg.d, cfg.c);
    let mut noise = Vec::with_capacity(cfg.k);
    let mut windows = WindowAccum::default();
    let mut processed = 0u64;
    let mut trained = 0u64;
    for epoch in 0..cfg.epochs {
        for ctx in source.stream()? {
            let ctx = ctx?;
            trained += shared.process(
                params,
                &ctx,
                &mut rng,
                &mut scratch,
                &mut noise,
                &mut windows,
                || {
                    let p = processed;
                    processed += 1;
                    p
                },
            );
        }
        log::info!(
            "epoch {} done: {processed}/{} targets, lr {:.6}",
            epoch + 1,
            shared.planned,
            shared.lr_at(processed)
        );
    }
    Ok((processed, trained, windows))
}

const CHUNK: usize = 512;
const PROGRESS_FLUSH: u64 = 256;

fn train_parallel<S: ContextSource + ?Sized>(
    source: &S,
    shared: &TrainShared<'_>,
    params: &mut EmbeddingParams,
) -> Result<(u64, u64, WindowAccum)> {
    let cfg = shared.config;
    let view = SharedParams::new(params);
    let progress = AtomicU64::new(0);
    let trained_total = AtomicU64::new(0);
    let merged = Mutex::new(WindowAccum::default());
    let (tx, rx) = crossbeam_channel::bounded::<Vec<NounPairContext>>(cfg.threads * 4);

    let read_result = std::thread::scope(|scope| -> Result<()> {
        for worker in 0..cfg.threads {
            let rx = rx.clone();
            let progress = &progress;
            let trained_total = &trained_total;
            let merged = &merged;
            scope.spawn(move || {
                let mut p = view;
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(2 + worker as u64);
                let mut scratch = StepScratch::new(cfg.d, cfg.c);
                let mut noise = Vec::with_capacity(cfg.k);
                let mut windows = WindowAccum::default();
                let mut trained = 0;
                let mut base = progress.fetch_add(PROGRESS_FLUSH, Ordering::Relaxed);
                let mut used = 0u64;
                for chunk in rx.iter() {
                    for ctx in &chunk {
                        trained += shared.process(
                            &mut p,
                            ctx,
                            &mut rng,
                            &mut scratch,
                            &mut noise,
                            &mut windows,
                            || {
                                if used == PROGRESS_FLUSH {
                                    base = progress.fetch_add(PROGRESS_FLUSH, Ordering::Relaxed);
                                    used = 0;
                                }
                                used += 1;
                                base + used - 1
                            },
                        );
                    }
                }
                trained_total.fetch_add(trained, Ordering::Relaxed);
                merged.lock().unwrap().merge(windows);
            });
        }
        drop(rx);
        for _ in 0..cfg.epochs {
            let mut chunk = Vec::with_capacity(CHUNK);
            for ctx in source.stream()? {
                chunk.push(ctx?);
                if chunk.len() == CHUNK {
                    let full = std::mem::replace(&mut chunk, Vec::with_capacity(CHUNK));
                    if tx.send(full).is_err() {
                        break;
                    }
                }
            }
            if !chunk.is_empty() {
                let _ = tx.send(chunk);
            }
        }
        drop(tx);
        Ok(())
    });
    read_result?;
    Ok((
        shared.planned,
        trained_total.into_inner(),
        merged.into_inner().unwrap(),
    ))
}
