//! The joint encoder-decoder model: hyperparameters, the full trainable
//! parameter set, initialization, and uniform tensor access used by the
//! optimizer, gradient checker and checkpoint writer.

use crate::cell::{CellParams, LstmLayerParams, RnnReluLayerParams};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{Matrix, Vector};
use crate::vocab::Vocab;

/// Which recurrent cell the stacks are built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    Lstm,
    RnnRelu,
}

impl CellKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellKind::Lstm => "lstm",
            CellKind::RnnRelu => "rnn-relu",
        }
    }

    pub fn parse(s: &str) -> Result<CellKind> {
        match s {
            "lstm" => Ok(CellKind::Lstm),
            "rnn-relu" => Ok(CellKind::RnnRelu),
            other => Err(Error::Config(format!(
                "unknown cell kind {other:?} (expected lstm or rnn-relu)"
            ))),
        }
    }
}

/// Structural hyperparameters, fixed at model construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HyperParams {
    /// Input image height H.
    pub height: usize,
    /// Number of recurrent layers L in each of encoder and decoder.
    pub layers: usize,
    pub hidden_dim: usize,
    pub embed_dim: usize,
    /// Greedy-decode step cap; refreshed from the training labels.
    pub max_len: usize,
    pub cell: CellKind,
}

impl HyperParams {
    fn validate(&self) -> Result<()> {
        if self.height == 0 || self.layers == 0 || self.hidden_dim == 0 || self.embed_dim == 0 {
            return Err(Error::InvalidInput("hyperparameters must be >= 1".into()));
        }
        if self.max_len == 0 {
            return Err(Error::InvalidInput("max_len must be >= 1".into()));
        }
        Ok(())
    }
}

/// Greedy-decode cap used when training labels are available: generous
/// enough that a converged model is never cut short.
pub fn default_max_len(longest_label: usize) -> usize {
    4 + 2 * longest_label
}

/// Borrowed view of one named tensor.
pub enum TensorRef<'a> {
    Mat(&'a Matrix),
    Vec(&'a Vector),
}

impl TensorRef<'_> {
    pub fn dims(&self) -> Vec<usize> {
        match self {
            TensorRef::Mat(m) => vec![m.rows(), m.cols()],
            TensorRef::Vec(v) => vec![v.len()],
        }
    }

    pub fn data(&self) -> &[f64] {
        match self {
            TensorRef::Mat(m) => m.data(),
            TensorRef::Vec(v) => v.as_slice(),
        }
    }
}

/// The complete trainable parameter set. Gradients and optimizer state
/// reuse this type: every tensor's gradient has the tensor's shape.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub encoder: Vec<CellParams>,
    pub decoder: Vec<CellParams>,
    /// Character embedding table, (symbols + SOS + EOS) x embed_dim.
    pub embedding: Matrix,
    /// Output projection, (symbols + EOS) x hidden_dim, plus bias.
    pub out_w: Matrix,
    pub out_b: Vector,
}

impl ModelParams {
    fn zeros(hyper: &HyperParams, vocab: &Vocab) -> ModelParams {
        let cell = |input_dim: usize| -> CellParams {
            match hyper.cell {
                CellKind::Lstm => CellParams::Lstm(LstmLayerParams::zeros(input_dim, hyper.hidden_dim)),
                CellKind::RnnRelu => {
                    CellParams::RnnRelu(RnnReluLayerParams::zeros(input_dim, hyper.hidden_dim))
                }
            }
        };
        let stack = |first_input: usize| -> Vec<CellParams> {
            (0..hyper.layers)
                .map(|n| cell(if n == 0 { first_input } else { hyper.hidden_dim }))
                .collect()
        };
        ModelParams {
            encoder: stack(hyper.height),
            decoder: stack(hyper.embed_dim),
            embedding: Matrix::zeros(vocab.embedding_rows(), hyper.embed_dim),
            out_w: Matrix::zeros(vocab.output_dim(), hyper.hidden_dim),
            out_b: Vector::zeros(vocab.output_dim()),
        }
    }

    pub fn zeros_like(&self) -> ModelParams {
        ModelParams {
            encoder: self.encoder.iter().map(|c| c.zeros_like()).collect(),
            decoder: self.decoder.iter().map(|c| c.zeros_like()).collect(),
            embedding: Matrix::zeros(self.embedding.rows(), self.embedding.cols()),
            out_w: Matrix::zeros(self.out_w.rows(), self.out_w.cols()),
            out_b: Vector::zeros(self.out_b.len()),
        }
    }

    /// All tensor payloads in a fixed order (encoder layers, decoder
    /// layers, embedding, output weight, output bias; within an LSTM
    /// layer: gate matrices, peepholes and biases in equation order).
    pub fn tensor_data(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for cell in self.encoder.iter().chain(&self.decoder) {
            cell_tensor_data(cell, &mut out);
        }
        out.push(self.embedding.data());
        out.push(self.out_w.data());
        out.push(self.out_b.as_slice());
        out
    }

    pub fn tensor_data_mut(&mut self) -> Vec<&mut [f64]> {
        let ModelParams { encoder, decoder, embedding, out_w, out_b } = self;
        let mut out = Vec::new();
        for cell in encoder.iter_mut().chain(decoder.iter_mut()) {
            cell_tensor_data_mut(cell, &mut out);
        }
        out.push(embedding.data_mut());
        out.push(out_w.data_mut());
        out.push(out_b.as_mut_slice());
        out
    }

    /// Named views in the same order as [`ModelParams::tensor_data`].
    pub fn named_tensors(&self) -> Vec<(String, TensorRef<'_>)> {
        let mut out = Vec::new();
        for (i, cell) in self.encoder.iter().enumerate() {
            cell_named(cell, &format!("enc.l{i}."), &mut out);
        }
        for (i, cell) in self.decoder.iter().enumerate() {
            cell_named(cell, &format!("dec.l{i}."), &mut out);
        }
        out.push(("embed.w_e".into(), TensorRef::Mat(&self.embedding)));
        out.push(("out.w".into(), TensorRef::Mat(&self.out_w)));
        out.push(("out.b".into(), TensorRef::Vec(&self.out_b)));
        out
    }

    /// Tensor names in declaration order, aligned with
    /// [`ModelParams::tensor_data`].
    pub fn tensor_names(&self) -> Vec<String> {
        self.named_tensors().into_iter().map(|(n, _)| n).collect()
    }

    pub fn param_count(&self) -> usize {
        self.tensor_data().iter().map(|t| t.len()).sum()
    }

    pub fn add_assign(&mut self, other: &ModelParams) {
        let mut mine = self.tensor_data_mut();
        let theirs = other.tensor_data();
        assert_eq!(mine.len(), theirs.len(), "parameter layout mismatch");
        for (a, b) in mine.iter_mut().zip(theirs) {
            assert_eq!(a.len(), b.len(), "tensor shape mismatch");
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensor_data_mut() {
            for x in t {
                *x *= s;
            }
        }
    }

    pub fn fill(&mut self, v: f64) {
        for t in self.tensor_data_mut() {
            for x in t {
                *x = v;
            }
        }
    }

    /// Euclidean norm over every parameter, in fixed tensor order.
    pub fn global_norm(&self) -> f64 {
        let mut acc = 0.0;
        for t in self.tensor_data() {
            for &x in t {
                acc += x * x;
            }
        }
        acc.sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.tensor_data().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    /// Layout compatibility check (same tensors, same shapes).
    pub fn same_layout(&self, other: &ModelParams) -> bool {
        let a = self.tensor_data();
        let b = other.tensor_data();
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.len() == y.len())
    }
}

fn cell_tensor_data<'a>(cell: &'a CellParams, out: &mut Vec<&'a [f64]>) {
    match cell {
        CellParams::Lstm(p) => {
            out.push(p.w_xi.data());
            out.push(p.w_hi.data());
            out.push(p.w_ci.as_slice());
            out.push(p.b_i.as_slice());
            out.push(p.w_xf.data());
            out.push(p.w_hf.data());
            out.push(p.w_cf.as_slice());
            out.push(p.b_f.as_slice());
            out.push(p.w_xc.data());
            out.push(p.w_hc.data());
            out.push(p.b_c.as_slice());
            out.push(p.w_xo.data());
            out.push(p.w_ho.data());
            out.push(p.w_co.as_slice());
            out.push(p.b_o.as_slice());
        }
        CellParams::RnnRelu(p) => {
            out.push(p.w_in.data());
            out.push(p.w_rec.data());
            out.push(p.b.as_slice());
        }
    }
}

fn cell_tensor_data_mut<'a>(cell: &'a mut CellParams, out: &mut Vec<&'a mut [f64]>) {
    match cell {
        CellParams::Lstm(p) => {
            out.push(p.w_xi.data_mut());
            out.push(p.w_hi.data_mut());
            out.push(p.w_ci.as_mut_slice());
            out.push(p.b_i.as_mut_slice());
            out.push(p.w_xf.data_mut());
            out.push(p.w_hf.data_mut());
            out.push(p.w_cf.as_mut_slice());
            out.push(p.b_f.as_mut_slice());
            out.push(p.w_xc.data_mut());
            out.push(p.w_hc.data_mut());
            out.push(p.b_c.as_mut_slice());
            out.push(p.w_xo.data_mut());
            out.push(p.w_ho.data_mut());
            out.push(p.w_co.as_mut_slice());
            out.push(p.b_o.as_mut_slice());
        }
        CellParams::RnnRelu(p) => {
            out.push(p.w_in.data_mut());
            out.push(p.w_rec.data_mut());
            out.push(p.b.as_mut_slice());
        }
    }
}

fn cell_named<'a>(cell: &'a CellParams, prefix: &str, out: &mut Vec<(String, TensorRef<'a>)>) {
    match cell {
        CellParams::Lstm(p) => {
            let entries: [(&str, TensorRef<'a>); 15] = [
                ("w_xi", TensorRef::Mat(&p.w_xi)),
                ("w_hi", TensorRef::Mat(&p.w_hi)),
                ("w_ci", TensorRef::Vec(&p.w_ci)),
                ("b_i", TensorRef::Vec(&p.b_i)),
                ("w_xf", TensorRef::Mat(&p.w_xf)),
                ("w_hf", TensorRef::Mat(&p.w_hf)),
                ("w_cf", TensorRef::Vec(&p.w_cf)),
                ("b_f", TensorRef::Vec(&p.b_f)),
                ("w_xc", TensorRef::Mat(&p.w_xc)),
                ("w_hc", TensorRef::Mat(&p.w_hc)),
                ("b_c", TensorRef::Vec(&p.b_c)),
                ("w_xo", TensorRef::Mat(&p.w_xo)),
                ("w_ho", TensorRef::Mat(&p.w_ho)),
                ("w_co", TensorRef::Vec(&p.w_co)),
                ("b_o", TensorRef::Vec(&p.b_o)),
            ];
            for (name, t) in entries {
                out.push((format!("{prefix}{name}"), t));
            }
        }
        CellParams::RnnRelu(p) => {
            out.push((format!("{prefix}w_in"), TensorRef::Mat(&p.w_in)));
            out.push((format!("{prefix}w_rec"), TensorRef::Mat(&p.w_rec)));
            out.push((format!("{prefix}b"), TensorRef::Vec(&p.b)));
        }
    }
}

/// Encoder-decoder model: hyperparameters, vocabulary and parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Seq2OcrModel {
    pub hyper: HyperParams,
    pub vocab: Vocab,
    pub params: ModelParams,
}

impl Seq2OcrModel {
    /// All-zero parameters (useful as a gradient/optimizer-state shape
    /// template and in tests).
    pub fn new_zero(hyper: HyperParams, vocab: Vocab) -> Result<Self> {
        hyper.validate()?;
        let params = ModelParams::zeros(&hyper, &vocab);
        Ok(Seq2OcrModel { hyper, vocab, params })
    }

    /// Training initialization: every weight matrix uniform(-s, s) with
    /// s = 1/sqrt(fan_in); peepholes and biases zero except the forget
    /// bias, which starts at 1 so memory is retained over long inputs
    /// from the first epoch.
    pub fn new_random(hyper: HyperParams, vocab: Vocab, seed: u64) -> Result<Self> {
        let mut model = Seq2OcrModel::new_zero(hyper, vocab)?;
        let mut rng = Rng::new(seed);
        init_params(&mut model.params, &mut rng);
        Ok(model)
    }

    /// Every parameter uniform(-scale, scale); used by the gradient
    /// checker so peepholes and biases are exercised at nonzero values.
    pub fn new_random_uniform(
        hyper: HyperParams,
        vocab: Vocab,
        scale: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut model = Seq2OcrModel::new_zero(hyper, vocab)?;
        let mut rng = Rng::new(seed);
        for t in model.params.tensor_data_mut() {
            for x in t {
                *x = rng.uniform(-scale, scale);
            }
        }
        Ok(model)
    }
}

fn init_matrix(m: &mut Matrix, rng: &mut Rng) {
    let s = 1.0 / (m.cols() as f64).sqrt();
    for x in m.data_mut() {
        *x = rng.uniform(-s, s);
    }
}

fn init_params(params: &mut ModelParams, rng: &mut Rng) {
    let ModelParams { encoder, decoder, embedding, out_w, out_b: _ } = params;
    for cell in encoder.iter_mut().chain(decoder.iter_mut()) {
        match cell {
            CellParams::Lstm(p) => {
                for m in [
                    &mut p.w_xi, &mut p.w_hi, &mut p.w_xf, &mut p.w_hf,
                    &mut p.w_xc, &mut p.w_hc, &mut p.w_xo, &mut p.w_ho,
                ] {
                    init_matrix(m, rng);
                }
                for x in p.b_f.as_mut_slice() {
                    *x = 1.0;
                }
            }
            CellParams::RnnRelu(p) => {
                init_matrix(&mut p.w_in, rng);
                init_matrix(&mut p.w_rec, rng);
            }
        }
    }
    init_matrix(embedding, rng);
    init_matrix(out_w, rng);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_hyper(cell: CellKind) -> HyperParams {
        HyperParams {
            height: 6,
            layers: 2,
            hidden_dim: 4,
            embed_dim: 3,
            max_len: 10,
            cell,
        }
    }

    fn small_vocab() -> Vocab {
        Vocab::from_labels(["abc"])
    }

    #[test]
    fn lstm_param_count() {
        let model = Seq2OcrModel::new_zero(small_hyper(CellKind::Lstm), small_vocab()).unwrap();
        // layer params: 4 * h * in + 4 * h * h + 7 * h
        let lstm = |inp: usize, h: usize| 4 * h * inp + 4 * h * h + 7 * h;
        let expect = lstm(6, 4) + lstm(4, 4)        // encoder
            + lstm(3, 4) + lstm(4, 4)               // decoder
            + 5 * 3                                 // embedding (3 symbols + 2)
            + 4 * 4 + 4;                            // output layer (3 symbols + EOS)
        assert_eq!(model.params.param_count(), expect);
    }

    #[test]
    fn named_tensors_align_with_data() {
        let model = Seq2OcrModel::new_random(small_hyper(CellKind::Lstm), small_vocab(), 3).unwrap();
        let named = model.params.named_tensors();
        let data = model.params.tensor_data();
        assert_eq!(named.len(), data.len());
        for ((_, t), d) in named.iter().zip(&data) {
            assert_eq!(t.data().len(), d.len());
            assert!(std::ptr::eq(t.data().as_ptr(), d.as_ptr()));
        }
        // no duplicate names
        let mut names: Vec<_> = named.iter().map(|(n, _)| n.clone()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), named.len());
    }

    #[test]
    fn rnn_relu_layout() {
        let model = Seq2OcrModel::new_zero(small_hyper(CellKind::RnnRelu), small_vocab()).unwrap();
        let names = model.params.tensor_names();
        assert!(names.contains(&"enc.l0.w_in".to_string()));
        assert!(names.contains(&"dec.l1.w_rec".to_string()));
        assert!(!names.iter().any(|n| n.contains("w_xi")));
    }

    #[test]
    fn random_init_is_seeded_and_bounded() {
        let a = Seq2OcrModel::new_random(small_hyper(CellKind::Lstm), small_vocab(), 7).unwrap();
        let b = Seq2OcrModel::new_random(small_hyper(CellKind::Lstm), small_vocab(), 7).unwrap();
        assert_eq!(a.params, b.params);
        let c = Seq2OcrModel::new_random(small_hyper(CellKind::Lstm), small_vocab(), 8).unwrap();
        assert_ne!(a.params, c.params);
        // fan-in bound for the first encoder layer: 1/sqrt(6)
        if let CellParams::Lstm(p) = &a.params.encoder[0] {
            let bound = 1.0 / 6.0f64.sqrt() + 1e-12;
            assert!(p.w_xi.data().iter().all(|x| x.abs() <= bound));
            assert!(p.b_f.as_slice().iter().all(|&x| x == 1.0));
            assert!(p.b_i.as_slice().iter().all(|&x| x == 0.0));
        } else {
            panic!("expected lstm cell");
        }
    }

    #[test]
    fn add_assign_and_scale() {
        let mut a = Seq2OcrModel::new_random(small_hyper(CellKind::Lstm), small_vocab(), 1).unwrap();
        let b = a.clone();
        a.params.add_assign(&b.params);
        a.params.scale(0.5);
        for (x, y) in a.params.tensor_data().iter().zip(b.params.tensor_data()) {
            for (p, q) in x.iter().zip(y.iter()) {
                assert!((p - q).abs() < 1e-15);
            }
        }
        assert!(a.params.all_finite());
        assert!(a.params.global_norm() > 0.0);
    }
}
