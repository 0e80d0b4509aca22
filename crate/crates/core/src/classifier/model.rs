use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{argmax, softmax_in_place, SoftmaxParams};
use crate::corpus::{NounPairContext, RelationLabel};
use crate::error::{Error, Result};
use crate::features::{write_features, BlockMap, FeatureOptions};
use crate::params::{read_f64s, write_f64s, EmbeddingParams, Matrix};

/// Softmax weights bundled with the feature options that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct Classifier {
    pub softmax: SoftmaxParams,
    pub options: FeatureOptions,
}

impl Classifier {
    pub fn new(softmax: SoftmaxParams, options: FeatureOptions) -> Self {
        Classifier { softmax, options }
    }

    /// Block layout for `params`, or an error naming both dimensions when
    /// the parameters do not produce features of the trained length.
    pub fn blocks_for(&self, params: &EmbeddingParams) -> Result<BlockMap> {
        let blocks = BlockMap::for_params(&self.options, params);
        if blocks.len != self.softmax.dim() {
            return Err(Error::Dimension(format!(
                "classifier expects |e|={} but the embedding model (d={}, c={}, W̃ width {}) gives |e|={}",
                self.softmax.dim(),
                params.d,
                params.c,
                params.out_dim(),
                blocks.len
            )));
        }
        Ok(blocks)
    }

    pub fn features(&self, ctx: &NounPairContext, params: &EmbeddingParams) -> Result<Vec<f64>> {
        let blocks = self.blocks_for(params)?;
        let mut e = vec![0.0; blocks.len];
        write_features(ctx, params, &self.options, &blocks, &mut e);
        Ok(e)
    }

    pub fn probabilities(
        &self,
        ctx: &NounPairContext,
        params: &EmbeddingParams,
    ) -> Result<Vec<f64>> {
        let mut p = self.softmax.scores(&self.features(ctx, params)?);
        softmax_in_place(&mut p);
        Ok(p)
    }

    /// Class index of the highest score on an undropped feature vector.
    pub fn predict_features(&self, e: &[f64]) -> usize {
        argmax(&self.softmax.scores(e))
    }

    pub fn predict_index(&self, ctx: &NounPairContext, params: &EmbeddingParams) -> Result<usize> {
        Ok(self.predict_features(&self.features(ctx, params)?))
    }

    pub fn predict(
        &self,
        ctx: &NounPairContext,
        params: &EmbeddingParams,
    ) -> Result<RelationLabel> {
        let i = self.predict_index(ctx, params)?;
        RelationLabel::from_index(i).ok_or_else(|| Error::UnknownLabel(format!("class {i}")))
    }

    /// Predicts every context, checking dimensions once.
    pub fn predict_all<'a, I>(
        &self,
        contexts: I,
        params: &EmbeddingParams,
    ) -> Result<Vec<RelationLabel>>
    where
        I: IntoIterator<Item = &'a NounPairContext>,
    {
        let blocks = self.blocks_for(params)?;
        let mut e = vec![0.0; blocks.len];
        contexts
            .into_iter()
            .map(|ctx| {
                write_features(ctx, params, &self.options, &blocks, &mut e);
                let i = self.predict_features(&e);
                RelationLabel::from_index(i)
                    .ok_or_else(|| Error::UnknownLabel(format!("class {i}")))
            })
            .collect()
    }

    /// Header line, then little-endian f64 `S` (row per label) and `s`.
    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(
            w,
            "relemb-clf v1 L={} dim={} opts={}",
            self.softmax.labels(),
            self.softmax.dim(),
            self.options
        )?;
        write_f64s(w, self.softmax.weights.as_slice())?;
        write_f64s(w, &self.softmax.bias)?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::file(path, e))?;
        let mut w = BufWriter::new(file);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(mut r: R) -> Result<Self> {
        let mut header = String::new();
        r.read_line(&mut header)?;
        let bad = |m: String| Error::format("classifier file", m);
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() < 2 || fields[0] != "relemb-clf" || fields[1] != "v1" {
            return Err(bad(format!("bad header `{}`", header.trim())));
        }
        let (mut labels, mut dim, mut opts) = (None, None, None);
        for f in &fields[2..] {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| bad(format!("bad field `{f}`")))?;
            let num = || {
                v.parse::<usize>()
                    .map_err(|_| bad(format!("bad value `{f}`")))
            };
            match k {
                "L" => labels = Some(num()?),
                "dim" => dim = Some(num()?),
                "opts" => opts = Some(v.parse::<FeatureOptions>()?),
                _ => return Err(bad(format!("unknown field `{k}`"))),
            }
        }
        let labels = labels.ok_or_else(|| bad("header lacks `L`".into()))?;
        let dim = dim.ok_or_else(|| bad("header lacks `dim`".into()))?;
        let options = opts.ok_or_else(|| bad("header lacks `opts`".into()))?;
        let weights = Matrix::from_vec(labels, dim, read_f64s(&mut r, labels * dim)?);
        let bias = read_f64s(&mut r, labels)?;
        Ok(Classifier::new(SoftmaxParams { weights, bias }, options))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::file(path, e))?;
        Self::read(BufReader::new(file))
    }
}
