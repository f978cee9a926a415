//! Single-layer LSTM sequence autoencoder with hand-written backpropagation
//! through time.
//!
//! Gate order inside every `4H` block is input, forget, cell, output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::num::Real;

use super::features::FeatureWindow;

pub const DEFAULT_HIDDEN: usize = 32;

/// Weights of one LSTM cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCell<T> {
    /// `4H x input`
    pub w_in: Mat<T>,
    /// `4H x H`
    pub w_rec: Mat<T>,
    /// `4H`
    pub bias: Vec<T>,
}

impl<T: Real> LstmCell<T> {
    fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_in: Mat::zeros(4 * hidden, input),
            w_rec: Mat::zeros(4 * hidden, hidden),
            bias: vec![T::zero(); 4 * hidden],
        }
    }
}

/// Autoencoder parameters. Also used as the gradient container, since a
/// gradient has exactly the parameters' shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeParams<T> {
    pub hidden_dim: usize,
    pub features: usize,
    pub encoder: LstmCell<T>,
    pub decoder: LstmCell<T>,
    /// `2H x H`; maps the embedding to the decoder's initial `(h, c)`.
    pub latent_w: Mat<T>,
    pub latent_b: Vec<T>,
    /// `F x H`
    pub out_w: Mat<T>,
    pub out_b: Vec<T>,
}

/// Tensor names in declared (checkpoint and flattening) order.
pub const TENSOR_NAMES: [&str; 10] = [
    "encoder.w_in",
    "encoder.w_rec",
    "encoder.bias",
    "decoder.w_in",
    "decoder.w_rec",
    "decoder.bias",
    "latent.w",
    "latent.b",
    "output.w",
    "output.b",
];

impl<T: Real> AeParams<T> {
    pub fn zeros(hidden_dim: usize, features: usize) -> Self {
        Self {
            hidden_dim,
            features,
            encoder: LstmCell::zeros(features, hidden_dim),
            decoder: LstmCell::zeros(features, hidden_dim),
            latent_w: Mat::zeros(2 * hidden_dim, hidden_dim),
            latent_b: vec![T::zero(); 2 * hidden_dim],
            out_w: Mat::zeros(features, hidden_dim),
            out_b: vec![T::zero(); features],
        }
    }

    /// Uniform initialization in `[-scale, scale]` from a seeded generator.
    pub fn init_uniform(hidden_dim: usize, features: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(hidden_dim, features);
        for t in p.tensors_mut() {
            for v in t.iter_mut() {
                *v = T::lit(rng.random_range(-scale..=scale));
            }
        }
        p
    }

    /// Shapes `(rows, cols)` in [`TENSOR_NAMES`] order; vectors have `cols = 1`.
    pub fn tensor_shapes(&self) -> [(usize, usize); 10] {
        let (h, f) = (self.hidden_dim, self.features);
        [
            (4 * h, f),
            (4 * h, h),
            (4 * h, 1),
            (4 * h, f),
            (4 * h, h),
            (4 * h, 1),
            (2 * h, h),
            (2 * h, 1),
            (f, h),
            (f, 1),
        ]
    }

    pub fn tensors(&self) -> [&[T]; 10] {
        [
            self.encoder.w_in.as_slice(),
            self.encoder.w_rec.as_slice(),
            &self.encoder.bias,
            self.decoder.w_in.as_slice(),
            self.decoder.w_rec.as_slice(),
            &self.decoder.bias,
            self.latent_w.as_slice(),
            &self.latent_b,
            self.out_w.as_slice(),
            &self.out_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [T]; 10] {
        [
            self.encoder.w_in.as_mut_slice(),
            self.encoder.w_rec.as_mut_slice(),
            &mut self.encoder.bias,
            self.decoder.w_in.as_mut_slice(),
            self.decoder.w_rec.as_mut_slice(),
            &mut self.decoder.bias,
            self.latent_w.as_mut_slice(),
            &mut self.latent_b,
            self.out_w.as_mut_slice(),
            &mut self.out_b,
        ]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn check_shapes(&self) -> Result<()> {
        for ((name, t), (r, c)) in TENSOR_NAMES
            .iter()
            .zip(self.tensors())
            .zip(self.tensor_shapes())
        {
            if t.len() != r * c {
                return Err(Error::ShapeMismatch(format!(
                    "{name}: expected {} values, got {}",
                    r * c,
                    t.len()
                )));
            }
        }
        let mats = [
            &self.encoder.w_in,
            &self.encoder.w_rec,
            &self.decoder.w_in,
            &self.decoder.w_rec,
            &self.latent_w,
            &self.out_w,
        ];
        let want = self.tensor_shapes();
        for (m, (r, c)) in mats.iter().zip([want[0], want[1], want[3], want[4], want[6], want[8]]) {
            if m.shape() != (r, c) {
                return Err(Error::ShapeMismatch(format!(
                    "matrix is {:?}, expected {:?}",
                    m.shape(),
                    (r, c)
                )));
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// `self += k * other`
    pub fn add_scaled(&mut self, other: &Self, k: T) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = *d + k * *s;
            }
        }
    }

    pub fn scale(&mut self, k: T) {
        for t in self.tensors_mut() {
            for v in t.iter_mut() {
                *v = *v * k;
            }
        }
    }

    pub fn squared_norm(&self) -> T {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|v| *v * *v)
            .sum()
    }

    fn check_sequence(&self, seq: &Mat<T>) -> Result<()> {
        if seq.rows() != self.features {
            return Err(Error::ShapeMismatch(format!(
                "sequence has {} feature rows, model expects {}",
                seq.rows(),
                self.features
            )));
        }
        if seq.cols() == 0 {
            return Err(Error::ShapeMismatch("empty sequence".into()));
        }
        Ok(())
    }
}

/// Latent vector produced by the encoder for one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding<T> {
    pub traj_id: String,
    pub start_index: usize,
    pub z: Vec<T>,
}

#[inline]
fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

struct StepCache<T> {
    x: Vec<T>,
    h_prev: Vec<T>,
    c_prev: Vec<T>,
    i: Vec<T>,
    f: Vec<T>,
    g: Vec<T>,
    o: Vec<T>,
    tanh_c: Vec<T>,
    h: Vec<T>,
    c: Vec<T>,
}

fn cell_forward<T: Real>(cell: &LstmCell<T>, x: &[T], h: &[T], c: &[T]) -> StepCache<T> {
    let hd = h.len();
    let mut z = cell.bias.clone();
    cell.w_in.matvec_acc(x, &mut z);
    cell.w_rec.matvec_acc(h, &mut z);
    let i: Vec<T> = z[..hd].iter().map(|&v| sigmoid(v)).collect();
    let f: Vec<T> = z[hd..2 * hd].iter().map(|&v| sigmoid(v)).collect();
    let g: Vec<T> = z[2 * hd..3 * hd].iter().map(|&v| v.tanh()).collect();
    let o: Vec<T> = z[3 * hd..].iter().map(|&v| sigmoid(v)).collect();
    let c_new: Vec<T> = (0..hd).map(|k| f[k] * c[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<T> = c_new.iter().map(|v| v.tanh()).collect();
    let h_new: Vec<T> = (0..hd).map(|k| o[k] * tanh_c[k]).collect();
    StepCache {
        x: x.to_vec(),
        h_prev: h.to_vec(),
        c_prev: c.to_vec(),
        i,
        f,
        g,
        o,
        tanh_c,
        h: h_new,
        c: c_new,
    }
}

/// Backward through one step. `dh`/`dc` are the gradients flowing into this
/// step's outputs; returns the gradients for the previous `(h, c)`.
fn cell_backward<T: Real>(
    cell: &LstmCell<T>,
    grad: &mut LstmCell<T>,
    s: &StepCache<T>,
    dh: &[T],
    dc_next: &[T],
) -> (Vec<T>, Vec<T>) {
    let hd = dh.len();
    let one = T::one();
    let mut dz = vec![T::zero(); 4 * hd];
    let mut dc_prev = vec![T::zero(); hd];
    for k in 0..hd {
        let d_o = dh[k] * s.tanh_c[k];
        let dc = dc_next[k] + dh[k] * s.o[k] * (one - s.tanh_c[k] * s.tanh_c[k]);
        let di = dc * s.g[k];
        let dg = dc * s.i[k];
        let df = dc * s.c_prev[k];
        dc_prev[k] = dc * s.f[k];
        dz[k] = di * s.i[k] * (one - s.i[k]);
        dz[hd + k] = df * s.f[k] * (one - s.f[k]);
        dz[2 * hd + k] = dg * (one - s.g[k] * s.g[k]);
        dz[3 * hd + k] = d_o * s.o[k] * (one - s.o[k]);
    }
    grad.w_in.add_outer(&dz, &s.x);
    grad.w_rec.add_outer(&dz, &s.h_prev);
    for (b, d) in grad.bias.iter_mut().zip(&dz) {
        *b = *b + *d;
    }
    let mut dh_prev = vec![T::zero(); hd];
    cell.w_rec.matvec_t_acc(&dz, &mut dh_prev);
    (dh_prev, dc_prev)
}

fn run_encoder<T: Real>(params: &AeParams<T>, seq: &Mat<T>) -> Vec<StepCache<T>> {
    let hd = params.hidden_dim;
    let mut h = vec![T::zero(); hd];
    let mut c = vec![T::zero(); hd];
    let mut steps = Vec::with_capacity(seq.cols());
    for t in 0..seq.cols() {
        let s = cell_forward(&params.encoder, &seq.column(t), &h, &c);
        h.clone_from(&s.h);
        c.clone_from(&s.c);
        steps.push(s);
    }
    steps
}

struct DecoderTrace<T> {
    latent_pre: Vec<T>,
    h0: Vec<T>,
    steps: Vec<StepCache<T>>,
    output: Mat<T>,
}

fn run_decoder<T: Real>(params: &AeParams<T>, z: &[T], len: usize) -> DecoderTrace<T> {
    let hd = params.hidden_dim;
    let mut a = params.latent_b.clone();
    params.latent_w.matvec_acc(z, &mut a);
    let h0: Vec<T> = a[..hd].iter().map(|v| v.tanh()).collect();
    let c0: Vec<T> = a[hd..].to_vec();
    let zero_input = vec![T::zero(); params.features];
    let mut h = h0.clone();
    let mut c = c0;
    let mut steps = Vec::with_capacity(len);
    let mut output = Mat::zeros(params.features, len);
    for t in 0..len {
        let s = cell_forward(&params.decoder, &zero_input, &h, &c);
        let mut y = params.out_b.clone();
        params.out_w.matvec_acc(&s.h, &mut y);
        for (f, v) in y.into_iter().enumerate() {
            output.set(f, t, v);
        }
        h.clone_from(&s.h);
        c.clone_from(&s.c);
        steps.push(s);
    }
    DecoderTrace {
        latent_pre: a,
        h0,
        steps,
        output,
    }
}

/// Final encoder hidden state after consuming every column left to right.
pub fn encode<T: Real>(params: &AeParams<T>, seq: &Mat<T>) -> Result<Vec<T>> {
    params.check_sequence(seq)?;
    let steps = run_encoder(params, seq);
    Ok(steps.last().map(|s| s.h.clone()).unwrap_or_default())
}

pub fn encode_window<T: Real>(params: &AeParams<T>, window: &FeatureWindow<T>) -> Result<Embedding<T>> {
    Ok(Embedding {
        traj_id: window.traj_id.clone(),
        start_index: window.start_index,
        z: encode(params, &window.data)?,
    })
}

/// Reconstructs an `F x len` sequence from a latent vector, feeding the
/// decoder zero inputs.
pub fn decode<T: Real>(params: &AeParams<T>, z: &[T], len: usize) -> Result<Mat<T>> {
    if z.len() != params.hidden_dim {
        return Err(Error::ShapeMismatch(format!(
            "latent has {} entries, model hidden size is {}",
            z.len(),
            params.hidden_dim
        )));
    }
    Ok(run_decoder(params, z, len).output)
}

/// Mean squared error over all entries.
pub fn reconstruction_loss<T: Real>(target: &Mat<T>, reconstruction: &Mat<T>) -> Result<T> {
    if target.shape() != reconstruction.shape() {
        return Err(Error::ShapeMismatch(format!(
            "loss operands are {:?} and {:?}",
            target.shape(),
            reconstruction.shape()
        )));
    }
    let n = T::from_usize_lossy(target.as_slice().len().max(1));
    Ok(target
        .as_slice()
        .iter()
        .zip(reconstruction.as_slice())
        .map(|(a, b)| (*a - *b) * (*a - *b))
        .sum::<T>()
        / n)
}

/// Loss of reconstructing `seq` through the full autoencoder.
pub fn loss<T: Real>(params: &AeParams<T>, seq: &Mat<T>) -> Result<T> {
    let z = encode(params, seq)?;
    reconstruction_loss(seq, &decode(params, &z, seq.cols())?)
}

/// Reconstruction loss and its gradient with respect to every parameter.
pub fn grad<T: Real>(params: &AeParams<T>, seq: &Mat<T>) -> Result<(T, AeParams<T>)> {
    grad_weighted(params, seq, T::one())
}

/// Gradient of `weight * loss`. Returns the unweighted loss.
pub fn grad_weighted<T: Real>(
    params: &AeParams<T>,
    seq: &Mat<T>,
    weight: T,
) -> Result<(T, AeParams<T>)> {
    params.check_sequence(seq)?;
    let hd = params.hidden_dim;
    let len = seq.cols();
    let enc = run_encoder(params, seq);
    let z = enc.last().expect("non-empty sequence").h.clone();
    let dec = run_decoder(params, &z, len);
    let loss = reconstruction_loss(seq, &dec.output)?;

    let mut g = AeParams::zeros(hd, params.features);
    let coeff = weight * T::lit(2.0) / T::from_usize_lossy(params.features * len);

    let mut dh = vec![T::zero(); hd];
    let mut dc = vec![T::zero(); hd];
    for t in (0..len).rev() {
        let s = &dec.steps[t];
        let dy: Vec<T> = (0..params.features)
            .map(|f| coeff * (dec.output.get(f, t) - seq.get(f, t)))
            .collect();
        g.out_w.add_outer(&dy, &s.h);
        for (b, d) in g.out_b.iter_mut().zip(&dy) {
            *b = *b + *d;
        }
        params.out_w.matvec_t_acc(&dy, &mut dh);
        let (dh_prev, dc_prev) = cell_backward(&params.decoder, &mut g.decoder, s, &dh, &dc);
        dh = dh_prev;
        dc = dc_prev;
    }

    let mut da = vec![T::zero(); 2 * hd];
    for k in 0..hd {
        da[k] = dh[k] * (T::one() - dec.h0[k] * dec.h0[k]);
        da[hd + k] = dc[k];
    }
    debug_assert_eq!(dec.latent_pre.len(), 2 * hd);
    g.latent_w.add_outer(&da, &z);
    for (b, d) in g.latent_b.iter_mut().zip(&da) {
        *b = *b + *d;
    }
    let mut dh = vec![T::zero(); hd];
    params.latent_w.matvec_t_acc(&da, &mut dh);
    let mut dc = vec![T::zero(); hd];
    for s in enc.iter().rev() {
        let (dh_prev, dc_prev) = cell_backward(&params.encoder, &mut g.encoder, s, &dh, &dc);
        dh = dh_prev;
        dc = dc_prev;
    }
    Ok((loss, g))
}
