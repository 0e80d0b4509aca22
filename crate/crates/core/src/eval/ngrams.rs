//! Ranking the n-grams between noun pairs by their contribution to a
//! class score.

use std::collections::BTreeMap;

use crate::classifier::{Classifier, Labeled};
use crate::corpus::{RelationLabel, Vocabulary, NULL};
use crate::error::{Error, Result};
use crate::features::{accumulate_h, ngram_dim};
use crate::params::{dot, EmbeddingParams};

#[derive(Clone, Debug, PartialEq)]
pub struct NgramScore {
    pub ngram: String,
    pub score: f64,
}

/// The `top_k` n-grams by `S[label, g_in] · h`, where `h` is the n-gram
/// embedding of a word between a training pair with window slots beyond
/// `(n-1)/2` set to NULL. Each surface form is listed once; equal scores
/// sort by surface.
pub fn top_ngrams<T: Labeled>(
    clf: &Classifier,
    params: &EmbeddingParams,
    vocab: &Vocabulary,
    instances: &[T],
    label: RelationLabel,
    n: usize,
    top_k: usize,
) -> Result<Vec<NgramScore>> {
    let blocks = clf.blocks_for(params)?;
    let range = match blocks.between {
        Some(r) if !clf.options.simplified => r,
        _ => {
            return Err(Error::Config(
                "n-gram scores need a classifier trained with the n-gram g_in block".into(),
            ))
        }
    };
    let c = params.c;
    if n.is_multiple_of(2) || n > 2 * c + 1 {
        return Err(Error::Config(format!(
            "n must be odd and at most {}",
            2 * c + 1
        )));
    }
    let row = label.index();
    if row >= clf.softmax.labels() {
        return Err(Error::UnknownLabel(label.to_string()));
    }
    let weights = &clf.softmax.weights.row(row)[range];
    let reach = (n - 1) / 2;
    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    let mut h = vec![0.0; ngram_dim(params.d, c, params.out_dim())];
    for inst in instances {
        let ctx = inst.context();
        for i in 0..ctx.m_in() {
            h.fill(0.0);
            accumulate_h(ctx, i, params, 1.0, &mut h, reach);
            let score = dot(weights, &h);
            let surface = (i as isize - reach as isize..=(i + reach) as isize)
                .map(
                    |j| match usize::try_from(j).ok().and_then(|j| ctx.w_in.get(j)) {
                        Some(&w) => vocab.words().surface(w as usize),
                        None => NULL,
                    },
                )
                .collect::<Vec<_>>()
                .join(" ");
            best.entry(surface)
                .and_modify(|s| *s = s.max(score))
                .or_insert(score);
        }
    }
    let mut ranked: Vec<NgramScore> = best
        .into_iter()
        .map(|(ngram, score)| NgramScore { ngram, score })
        .collect();
    // Stable sort keeps the surface order of the map among equal scores.
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score));
    ranked.truncate(top_k);
    Ok(ranked)
}
