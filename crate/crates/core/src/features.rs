//! Classification features built from trained embeddings.
//!
//! The feature vector `e` concatenates up to three blocks, always in this
//! order:
//!
//! * `g_n`: the two noun embeddings,
//! * `g_in`: the mean n-gram embedding `h_i` over the words between the
//!   nouns, or the bag-of-words variant `g_in'`,
//! * `g_out`: the mean word embeddings before and after the pair.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::corpus::{NounPairContext, WORD_NULL};
use crate::embed_train::window_ids;
use crate::error::{Error, Result};
use crate::params::{axpy, Block, EmbeddingParams, SparseGradient};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FeatureOptions {
    pub nouns: bool,
    pub between: bool,
    pub outside: bool,
    /// Use the bag-of-words `g_in'` instead of the n-gram `g_in`.
    pub simplified: bool,
    /// Keep only this many outside words on each side.
    pub m_out: Option<usize>,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions {
            nouns: true,
            between: true,
            outside: true,
            simplified: false,
            m_out: None,
        }
    }
}

impl FeatureOptions {
    pub fn only_nouns() -> Self {
        FeatureOptions {
            between: false,
            outside: false,
            ..Default::default()
        }
    }

    pub fn only_between() -> Self {
        FeatureOptions {
            nouns: false,
            outside: false,
            ..Default::default()
        }
    }

    pub fn only_simplified_between() -> Self {
        FeatureOptions {
            simplified: true,
            ..Self::only_between()
        }
    }

    pub fn nouns_and_between() -> Self {
        FeatureOptions {
            outside: false,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nouns || self.between || self.outside) {
            return Err(Error::Config(
                "at least one feature block must be enabled".into(),
            ));
        }
        Ok(())
    }
}

/// Flag string stored in classifier files, e.g. `n,in,out,mout=5`.
impl fmt::Display for FeatureOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.nouns {
            parts.push("n".to_string());
        }
        if self.between {
            parts.push(if self.simplified { "insimple" } else { "in" }.to_string());
        }
        if self.outside {
            parts.push("out".to_string());
        }
        if let Some(m) = self.m_out {
            parts.push(format!("mout={m}"));
        }
        f.write_str(&parts.join(","))
    }
}

impl FromStr for FeatureOptions {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut o = FeatureOptions {
            nouns: false,
            between: false,
            outside: false,
            simplified: false,
            m_out: None,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "n" => o.nouns = true,
                "in" => o.between = true,
                "insimple" => {
                    o.between = true;
                    o.simplified = true;
                }
                "out" => o.outside = true,
                p => match p.strip_prefix("mout=") {
                    Some(m) => {
                        o.m_out = Some(m.parse().map_err(|_| {
                            Error::Config(format!("bad M_out in feature flags `{s}`"))
                        })?)
                    }
                    None => return Err(Error::Config(format!("unknown feature flag `{p}`"))),
                },
            }
        }
        o.validate()?;
        Ok(o)
    }
}

/// Offsets of the enabled blocks inside `e`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockMap {
    pub nouns: Option<Range<usize>>,
    pub between: Option<Range<usize>>,
    pub outside: Option<Range<usize>>,
    pub len: usize,
}

/// `|h_i| = 2cd + |W̃ column|`; `4d(1+c)` for pretrained parameters.
pub fn ngram_dim(d: usize, c: usize, out_dim: usize) -> usize {
    2 * c * d + out_dim
}

impl BlockMap {
    pub fn new(opts: &FeatureOptions, d: usize, c: usize, out_dim: usize) -> Self {
        let mut at = 0;
        let mut take = |on: bool, n: usize| {
            on.then(|| {
                let r = at..at + n;
                at += n;
                r
            })
        };
        let between_len = if opts.simplified {
            d + out_dim
        } else {
            ngram_dim(d, c, out_dim)
        };
        let nouns = take(opts.nouns, 2 * d);
        let between = take(opts.between, between_len);
        let outside = take(opts.outside, 2 * d);
        BlockMap {
            nouns,
            between,
            outside,
            len: at,
        }
    }

    pub fn for_params(opts: &FeatureOptions, params: &EmbeddingParams) -> Self {
        Self::new(opts, params.d, params.c, params.out_dim())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub blocks: BlockMap,
}

/// `[N(n1); N(n2)]`
pub fn g_n(ctx: &NounPairContext, params: &EmbeddingParams) -> Vec<f64> {
    let mut out = vec![0.0; 2 * params.d];
    write_g_n(ctx, params, &mut out);
    out
}

fn write_g_n(ctx: &NounPairContext, params: &EmbeddingParams, out: &mut [f64]) {
    let d = params.d;
    out[..d].copy_from_slice(params.nouns.row(ctx.n1 as usize));
    out[d..].copy_from_slice(params.nouns.row(ctx.n2 as usize));
}

/// `h_i` for target `i` (0-based): left window, right window, then
/// `W̃(w_i)`.
pub fn ngram_embedding(ctx: &NounPairContext, i: usize, params: &EmbeddingParams) -> Vec<f64> {
    assert!(
        i < ctx.m_in(),
        "n-gram index {i} out of range for M_in={}",
        ctx.m_in()
    );
    let mut out = vec![0.0; ngram_dim(params.d, params.c, params.out_dim())];
    accumulate_h(ctx, i, params, 1.0, &mut out, params.c);
    out
}

/// Adds `scale * h_i` into `out`, with window slots farther than `reach`
/// from the centre replaced by NULL.
pub(crate) fn accumulate_h(
    ctx: &NounPairContext,
    i: usize,
    params: &EmbeddingParams,
    scale: f64,
    out: &mut [f64],
    reach: usize,
) {
    let (d, c) = (params.d, params.c);
    for (slot, w) in window_ids(&ctx.w_in, i, c).enumerate() {
        let dist = slot % c + 1;
        let w = if dist > reach { WORD_NULL } else { w };
        let off = slot * d;
        axpy(scale, params.words.row(w), &mut out[off..off + d]);
    }
    axpy(
        scale,
        params.out.row(ctx.w_in[i] as usize),
        &mut out[2 * c * d..],
    );
}

/// Mean of `h_i` over the words between the pair; zero when there are none.
pub fn g_in(ctx: &NounPairContext, params: &EmbeddingParams) -> Vec<f64> {
    let mut out = vec![0.0; ngram_dim(params.d, params.c, params.out_dim())];
    write_g_in(ctx, params, &mut out);
    out
}

fn write_g_in(ctx: &NounPairContext, params: &EmbeddingParams, out: &mut [f64]) {
    out.fill(0.0);
    if ctx.m_in() == 0 {
        return;
    }
    let scale = 1.0 / ctx.m_in() as f64;
    for i in 0..ctx.m_in() {
        accumulate_h(ctx, i, params, scale, out, params.c);
    }
}

/// Mean of `[W(w_i); W̃(w_i)]` over the words between the pair.
pub fn g_in_simplified(ctx: &NounPairContext, params: &EmbeddingParams) -> Vec<f64> {
    let mut out = vec![0.0; params.d + params.out_dim()];
    write_g_in_simplified(ctx, params, &mut out);
    out
}

fn write_g_in_simplified(ctx: &NounPairContext, params: &EmbeddingParams, out: &mut [f64]) {
    out.fill(0.0);
    if ctx.m_in() == 0 {
        return;
    }
    let d = params.d;
    let scale = 1.0 / ctx.m_in() as f64;
    for &w in &ctx.w_in {
        axpy(scale, params.words.row(w as usize), &mut out[..d]);
        axpy(scale, params.out.row(w as usize), &mut out[d..]);
    }
}

/// `[mean W(w_bef); mean W(w_aft)]`
pub fn g_out(ctx: &NounPairContext, params: &EmbeddingParams) -> Vec<f64> {
    let mut out = vec![0.0; 2 * params.d];
    write_g_out(ctx, params, &mut out);
    out
}

fn write_g_out(ctx: &NounPairContext, params: &EmbeddingParams, out: &mut [f64]) {
    let d = params.d;
    out.fill(0.0);
    for (half, ids) in [(0, &ctx.w_bef), (d, &ctx.w_aft)] {
        if ids.is_empty() {
            continue;
        }
        let scale = 1.0 / ids.len() as f64;
        for &w in ids.iter() {
            axpy(
                scale,
                params.words.row(w as usize),
                &mut out[half..half + d],
            );
        }
    }
}

fn effective_context<'a>(
    ctx: &'a NounPairContext,
    opts: &FeatureOptions,
) -> std::borrow::Cow<'a, NounPairContext> {
    match opts.m_out {
        Some(m) if m != ctx.m_out() => std::borrow::Cow::Owned(ctx.truncate_outside(m)),
        _ => std::borrow::Cow::Borrowed(ctx),
    }
}

/// Writes `e` into `out`, which must have length `blocks.len`.
pub fn write_features(
    ctx: &NounPairContext,
    params: &EmbeddingParams,
    opts: &FeatureOptions,
    blocks: &BlockMap,
    out: &mut [f64],
) {
    assert_eq!(out.len(), blocks.len, "feature buffer length");
    let ctx = effective_context(ctx, opts);
    if let Some(r) = &blocks.nouns {
        write_g_n(&ctx, params, &mut out[r.clone()]);
    }
    if let Some(r) = &blocks.between {
        if opts.simplified {
            write_g_in_simplified(&ctx, params, &mut out[r.clone()]);
        } else {
            write_g_in(&ctx, params, &mut out[r.clone()]);
        }
    }
    if let Some(r) = &blocks.outside {
        write_g_out(&ctx, params, &mut out[r.clone()]);
    }
}

pub fn assemble_features(
    ctx: &NounPairContext,
    params: &EmbeddingParams,
    opts: &FeatureOptions,
) -> FeatureVector {
    let blocks = BlockMap::for_params(opts, params);
    let mut values = vec![0.0; blocks.len];
    write_features(ctx, params, opts, &blocks, &mut values);
    FeatureVector { values, blocks }
}

/// Distributes `∂J/∂e` onto the embedding rows that produced `e`.
pub fn scatter_gradient(
    ctx: &NounPairContext,
    params: &EmbeddingParams,
    opts: &FeatureOptions,
    blocks: &BlockMap,
    grad_e: &[f64],
    grad: &mut SparseGradient,
) {
    let ctx = effective_context(ctx, opts);
    let (d, c) = (params.d, params.c);
    if let Some(r) = &blocks.nouns {
        let g = &grad_e[r.clone()];
        grad.add_row(Block::Nouns, ctx.n1 as usize, 1.0, &g[..d]);
        grad.add_row(Block::Nouns, ctx.n2 as usize, 1.0, &g[d..]);
    }
    if let Some(r) = &blocks.between {
        if ctx.m_in() > 0 {
            let g = &grad_e[r.clone()];
            let scale = 1.0 / ctx.m_in() as f64;
            for i in 0..ctx.m_in() {
                let w = ctx.w_in[i] as usize;
                if opts.simplified {
                    grad.add_row(Block::Words, w, scale, &g[..d]);
                    grad.add_row(Block::Out, w, scale, &g[d..]);
                } else {
                    for (slot, wid) in window_ids(&ctx.w_in, i, c).enumerate() {
                        grad.add_row(Block::Words, wid, scale, &g[slot * d..(slot + 1) * d]);
                    }
                    grad.add_row(Block::Out, w, scale, &g[2 * c * d..]);
                }
            }
        }
    }
    if let Some(r) = &blocks.outside {
        let g = &grad_e[r.clone()];
        for (half, ids) in [(0, &ctx.w_bef), (d, &ctx.w_aft)] {
            if ids.is_empty() {
                continue;
            }
            let scale = 1.0 / ids.len() as f64;
            for &w in ids.iter() {
                grad.add_row(Block::Words, w as usize, scale, &g[half..half + d]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(d: usize, c: usize) -> EmbeddingParams {
        let mut rng = ChaCha8Rng::seed_from_u64(d as u64 * 31 + c as u64);
        let mut p = EmbeddingParams::init(d, c, 12, 6, &mut rng);
        let rows = p.out.rows();
        p.out = crate::params::Matrix::gaussian(rows, p.out.cols(), 0.3, &mut rng);
        p
    }

    fn ctx(w_in: Vec<u32>) -> NounPairContext {
        NounPairContext {
            n1: 2,
            n2: 3,
            w_in,
            w_bef: vec![WORD_NULL as u32, 4],
            w_aft: vec![5, 6],
            sentence_ref: None,
        }
    }

    #[test]
    fn g_n_concatenates() {
        let mut p = EmbeddingParams::zeros(2, 1, 5, 4);
        p.nouns.row_mut(2).copy_from_slice(&[1.0, 0.0]);
        p.nouns.row_mut(3).copy_from_slice(&[0.0, 1.0]);
        assert_eq!(g_n(&ctx(vec![]), &p), vec![1.0, 0.0, 0.0, 1.0]);
        let mut same = ctx(vec![]);
        same.n2 = 2;
        let v = g_n(&same, &p);
        assert_eq!(v[..2], v[2..]);
        let mut unk = ctx(vec![]);
        unk.n1 = crate::corpus::NOUN_UNK as u32;
        assert_eq!(g_n(&unk, &p)[..2], *p.nouns.row(0));
    }

    #[test]
    fn ngram_lengths() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = EmbeddingParams::init(100, 3, 10, 5, &mut rng);
        assert_eq!(ngram_embedding(&ctx(vec![7, 8]), 0, &p).len(), 1600);
        let e = assemble_features(&ctx(vec![7, 8]), &p, &FeatureOptions::default());
        assert_eq!(e.values.len(), 2000);
        let e = assemble_features(&ctx(vec![7]), &p, &FeatureOptions::only_nouns());
        assert_eq!(e.values.len(), 200);
        let e = assemble_features(&ctx(vec![7]), &p, &FeatureOptions::nouns_and_between());
        assert_eq!(e.values.len(), 200 + 1600);
    }

    #[test]
    fn single_word_ngram_has_null_window() {
        let p = params(3, 2);
        let h = ngram_embedding(&ctx(vec![7]), 0, &p);
        for slot in 0..4 {
            assert_eq!(&h[slot * 3..slot * 3 + 3], p.words.row(WORD_NULL));
        }
        assert_eq!(&h[12..], p.out.row(7));
    }

    #[test]
    fn hand_set_d1_ngram() {
        // d=1, c=1, out_dim = 6.
        let mut p = EmbeddingParams::zeros(1, 1, 10, 4);
        for w in 0..10 {
            p.words.row_mut(w)[0] = w as f64;
            p.out.row_mut(w).fill(w as f64 * 0.5);
        }
        let c = ctx(vec![7, 8, 9]);
        let h = ngram_embedding(&c, 1, &p);
        assert_eq!(h, vec![7.0, 9.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0]);
        let h0 = ngram_embedding(&c, 0, &p);
        assert_eq!(h0[..2], [WORD_NULL as f64, 8.0]);
    }

    #[test]
    fn g_in_mean_of_h() {
        let p = params(2, 1);
        let one = ctx(vec![7]);
        assert_eq!(g_in(&one, &p), ngram_embedding(&one, 0, &p));
        let empty = ctx(vec![]);
        assert!(g_in(&empty, &p).iter().all(|&v| v == 0.0));
        let two = ctx(vec![7, 8]);
        let h0 = ngram_embedding(&two, 0, &p);
        let h1 = ngram_embedding(&two, 1, &p);
        let g = g_in(&two, &p);
        for k in 0..g.len() {
            assert!((g[k] - 0.5 * (h0[k] + h1[k])).abs() < 1e-15);
        }
    }

    #[test]
    fn simplified_is_bag_of_words() {
        let p = params(3, 2);
        let one = ctx(vec![7]);
        let mut expect = p.words.row(7).to_vec();
        expect.extend_from_slice(p.out.row(7));
        assert_eq!(g_in_simplified(&one, &p), expect);

        let a = ctx(vec![7, 8, 9]);
        let b = ctx(vec![9, 7, 8]);
        let (ga, gb) = (g_in_simplified(&a, &p), g_in_simplified(&b, &p));
        for (x, y) in ga.iter().zip(&gb) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn permutation_changes_ngram_mean() {
        let p = params(2, 1);
        let a = g_in(&ctx(vec![7, 8]), &p);
        let b = g_in(&ctx(vec![8, 7]), &p);
        assert!(a.iter().zip(&b).any(|(x, y)| (x - y).abs() > 1e-9));
    }

    #[test]
    fn g_out_means() {
        let mut p = EmbeddingParams::zeros(1, 1, 10, 4);
        for w in 0..10 {
            p.words.row_mut(w)[0] = w as f64;
        }
        let mut c = ctx(vec![7]);
        c.w_bef = vec![WORD_NULL as u32; 2];
        c.w_aft = vec![5, 8];
        assert_eq!(g_out(&c, &p), vec![WORD_NULL as f64, 6.5]);
        c.w_bef = vec![4];
        c.w_aft = vec![9];
        assert_eq!(g_out(&c, &p), vec![4.0, 9.0]);
    }

    #[test]
    fn m_out_override_truncates() {
        let mut p = EmbeddingParams::zeros(1, 1, 10, 4);
        for w in 0..10 {
            p.words.row_mut(w)[0] = w as f64;
        }
        let c = ctx(vec![7]);
        let opts = FeatureOptions {
            m_out: Some(1),
            ..FeatureOptions::default()
        };
        let e = assemble_features(&c, &p, &opts);
        let r = e.blocks.outside.clone().unwrap();
        assert_eq!(e.values[r], [4.0, 5.0]);
    }

    #[test]
    fn block_map_partitions() {
        for d in 1..=8 {
            for c in 1..=4 {
                let full = 2 * d * (2 + c);
                let m = BlockMap::new(&FeatureOptions::default(), d, c, full);
                assert_eq!(m.len, 4 * d * (2 + c));
                assert_eq!(m.nouns, Some(0..2 * d));
                assert_eq!(m.between, Some(2 * d..2 * d + 4 * d * (1 + c)));
                assert_eq!(m.outside.unwrap().end, m.len);
            }
        }
        // CBOW-initialized parameters: (2c+5)d
        assert_eq!(
            BlockMap::new(&FeatureOptions::default(), 100, 3, 100).len,
            1100
        );
    }

    #[test]
    fn option_flags_round_trip() {
        for o in [
            FeatureOptions::default(),
            FeatureOptions::only_nouns(),
            FeatureOptions::only_simplified_between(),
            FeatureOptions {
                m_out: Some(3),
                ..FeatureOptions::nouns_and_between()
            },
        ] {
            assert_eq!(o.to_string().parse::<FeatureOptions>().unwrap(), o);
        }
        assert!("".parse::<FeatureOptions>().is_err());
        assert!("n,xyz".parse::<FeatureOptions>().is_err());
    }
}
