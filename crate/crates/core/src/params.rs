//! Embedding parameter blocks and the binary model file.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Row-major matrix where each row is one item's vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn gaussian<R: Rng>(rows: usize, cols: usize, std_dev: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, std_dev).expect("finite standard deviation");
        let data = (0..rows * cols).map(|_| normal.sample(rng)).collect();
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)` without overflow or underflow to `-inf` for moderate `x`.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// The parameter blocks selectable by row-level accessors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Block {
    /// Noun embeddings.
    Nouns,
    /// Word embeddings.
    Words,
    /// Per-word prediction weights.
    Out,
}

/// Sparse per-row gradient, keyed by block and row.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseGradient {
    pub rows: BTreeMap<(Block, usize), Vec<f64>>,
    pub bias: BTreeMap<usize, f64>,
}

impl SparseGradient {
    pub fn row(&self, block: Block, idx: usize) -> Option<&[f64]> {
        self.rows.get(&(block, idx)).map(Vec::as_slice)
    }

    pub fn add_row(&mut self, block: Block, idx: usize, alpha: f64, x: &[f64]) {
        let row = self
            .rows
            .entry((block, idx))
            .or_insert_with(|| vec![0.0; x.len()]);
        axpy(alpha, x, row);
    }
}

/// Noun embeddings `N`, word embeddings `W`, per-word prediction weights
/// `W̃` and biases `b`.
///
/// The prediction weights have `2d(2+c)` columns for pretrained models.
/// Models initialized from CBOW vectors carry `d`-column output weights
/// instead.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingParams {
    pub d: usize,
    pub c: usize,
    pub nouns: Matrix,
    pub words: Matrix,
    pub out: Matrix,
    pub bias: Vec<f64>,
}

/// Length of the pretraining feature vector for dimensionality `d` and
/// window `c`.
pub fn feature_dim(d: usize, c: usize) -> usize {
    2 * d * (2 + c)
}

impl EmbeddingParams {
    /// Gaussian `N(0, 1/d)` noun and word embeddings with zero prediction
    /// weights and biases.
    pub fn init<R: Rng>(d: usize, c: usize, n_words: usize, n_nouns: usize, rng: &mut R) -> Self {
        let std_dev = (1.0 / d as f64).sqrt();
        let nouns = Matrix::gaussian(n_nouns, d, std_dev, rng);
        let words = Matrix::gaussian(n_words, d, std_dev, rng);
        EmbeddingParams {
            d,
            c,
            nouns,
            words,
            out: Matrix::zeros(n_words, feature_dim(d, c)),
            bias: vec![0.0; n_words],
        }
    }

    pub fn zeros(d: usize, c: usize, n_words: usize, n_nouns: usize) -> Self {
        EmbeddingParams {
            d,
            c,
            nouns: Matrix::zeros(n_nouns, d),
            words: Matrix::zeros(n_words, d),
            out: Matrix::zeros(n_words, feature_dim(d, c)),
            bias: vec![0.0; n_words],
        }
    }

    pub fn n_words(&self) -> usize {
        self.words.rows()
    }

    pub fn n_nouns(&self) -> usize {
        self.nouns.rows()
    }

    /// Column count of the prediction weights.
    pub fn out_dim(&self) -> usize {
        self.out.cols()
    }

    /// Whether `W̃` has the full pretraining width `2d(2+c)`.
    pub fn has_full_out(&self) -> bool {
        self.out_dim() == feature_dim(self.d, self.c)
    }

    pub fn block(&self, block: Block) -> &Matrix {
        match block {
            Block::Nouns => &self.nouns,
            Block::Words => &self.words,
            Block::Out => &self.out,
        }
    }

    pub fn block_mut(&mut self, block: Block) -> &mut Matrix {
        match block {
            Block::Nouns => &mut self.nouns,
            Block::Words => &mut self.words,
            Block::Out => &mut self.out,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.nouns.is_finite()
            && self.words.is_finite()
            && self.out.is_finite()
            && self.bias.iter().all(|b| b.is_finite())
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.nouns.cols() == self.d
            && self.words.cols() == self.d
            && self.out.rows() == self.words.rows()
            && self.bias.len() == self.words.rows()
            && (self.out.cols() == feature_dim(self.d, self.c) || self.out.cols() == self.d);
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "inconsistent parameter shapes for d={} c={}",
                self.d, self.c
            )))
        }
    }

    /// Writes the binary model file: a one-line text header, then
    /// little-endian f64 matrices `N`, `W`, `W̃`, `b`.
    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        write!(
            w,
            "relemb-model v1 d={} c={} nwords={} nnouns={}",
            self.d,
            self.c,
            self.n_words(),
            self.n_nouns()
        )?;
        if !self.has_full_out() {
            write!(w, " wdim={}", self.out_dim())?;
        }
        writeln!(w)?;
        for block in [
            self.nouns.as_slice(),
            self.words.as_slice(),
            self.out.as_slice(),
            &self.bias,
        ] {
            write_f64s(w, block)?;
        }
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
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() < 2 || fields[0] != "relemb-model" || fields[1] != "v1" {
            return Err(Error::format(
                "model file",
                format!("bad header `{}`", header.trim()),
            ));
        }
        let (mut d, mut c, mut nwords, mut nnouns, mut wdim) = (None, None, None, None, None);
        for f in &fields[2..] {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| Error::format("model file", format!("bad field `{f}`")))?;
            let v: usize = v
                .parse()
                .map_err(|_| Error::format("model file", format!("bad value `{f}`")))?;
            match k {
                "d" => d = Some(v),
                "c" => c = Some(v),
                "nwords" => nwords = Some(v),
                "nnouns" => nnouns = Some(v),
                "wdim" => wdim = Some(v),
                _ => return Err(Error::format("model file", format!("unknown field `{k}`"))),
            }
        }
        let missing = |n: &str| Error::format("model file", format!("header lacks `{n}`"));
        let d = d.ok_or_else(|| missing("d"))?;
        let c = c.ok_or_else(|| missing("c"))?;
        let nwords = nwords.ok_or_else(|| missing("nwords"))?;
        let nnouns = nnouns.ok_or_else(|| missing("nnouns"))?;
        let wdim = wdim.unwrap_or(feature_dim(d, c));
        let nouns = Matrix::from_vec(nnouns, d, read_f64s(&mut r, nnouns * d)?);
        let words = Matrix::from_vec(nwords, d, read_f64s(&mut r, nwords * d)?);
        let out = Matrix::from_vec(nwords, wdim, read_f64s(&mut r, nwords * wdim)?);
        let bias = read_f64s(&mut r, nwords)?;
        let params = EmbeddingParams {
            d,
            c,
            nouns,
            words,
            out,
            bias,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::file(path, e))?;
        Self::read(BufReader::new(file))
    }
}

pub(crate) fn write_f64s<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::format("binary matrix", "truncated data"))?;
    Ok(bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert!(sigmoid(-1000.0).is_finite());
    }

    #[test]
    fn log_sigmoid_stable() {
        assert!((log_sigmoid(0.0) - 0.5f64.ln()).abs() < 1e-15);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-9);
        assert!(log_sigmoid(800.0).abs() < 1e-300);
        for x in [-5.0, -0.3, 0.7, 4.0] {
            assert!((log_sigmoid(x) - sigmoid(x).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn init_shapes_and_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = EmbeddingParams::init(25, 3, 400, 300, &mut rng);
        assert_eq!(p.out_dim(), 2 * 25 * 5);
        assert!(p.out.as_slice().iter().all(|&v| v == 0.0));
        assert!(p.bias.iter().all(|&v| v == 0.0));
        let n = p.words.as_slice().len() as f64;
        let var = p.words.as_slice().iter().map(|v| v * v).sum::<f64>() / n;
        assert!((var - 1.0 / 25.0).abs() < 0.004, "variance {var}");
    }

    #[test]
    fn model_file_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut p = EmbeddingParams::init(3, 2, 5, 4, &mut rng);
        p.out.as_mut_slice()[7] = 1.5;
        p.bias[2] = -0.25;
        let mut buf = Vec::new();
        p.write(&mut buf).unwrap();
        assert!(buf.starts_with(b"relemb-model v1 d=3 c=2 nwords=5 nnouns=4\n"));
        assert_eq!(EmbeddingParams::read(&buf[..]).unwrap(), p);
    }

    #[test]
    fn narrow_out_round_trip() {
        let mut p = EmbeddingParams::zeros(4, 1, 3, 2);
        p.out = Matrix::zeros(3, 4);
        let mut buf = Vec::new();
        p.write(&mut buf).unwrap();
        let q = EmbeddingParams::read(&buf[..]).unwrap();
        assert_eq!(q.out_dim(), 4);
    }

    #[test]
    fn truncated_model_rejected() {
        let p = EmbeddingParams::zeros(2, 1, 3, 2);
        let mut buf = Vec::new();
        p.write(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(EmbeddingParams::read(&buf[..]).is_err());
    }
}
