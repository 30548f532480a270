//! Decoder: expands the encoder's fixed-dimensional state into a
//! character sequence.
//!
//! The decoder stack starts from the encoder's final per-layer states
//! (both h and c). Step 0 feeds the SOS embedding; each later step feeds
//! the embedding of the previous symbol — the argmax prediction during
//! greedy decoding, the ground-truth symbol under teacher forcing.
//! Logits are `W_out h^L_t + b_out` over the symbols plus EOS.

use crate::cell::{stack_step, stack_step_backward_into, CellParams, StateGrad, StepCache};
use crate::encoder::EncoderOutput;
use crate::error::{Error, Result};
use crate::model::Seq2OcrModel;
use crate::tensor::{log_softmax, softmax, Matrix, Vector};

/// Greedy decoding outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult {
    /// Emitted characters, EOS excluded.
    pub text: String,
    /// Log probability of each emitted token, including the final EOS
    /// when decoding terminated (so its length is text length + 1 unless
    /// truncated).
    pub stepwise_logprobs: Vec<f64>,
    /// True when the step cap was hit before EOS.
    pub truncated: bool,
}

fn check_z(model: &Seq2OcrModel, z: &EncoderOutput) -> Result<()> {
    if z.states.len() != model.params.decoder.len() {
        return Err(Error::Shape(format!(
            "encoder output has {} layers, decoder has {}",
            z.states.len(),
            model.params.decoder.len()
        )));
    }
    for s in &z.states {
        if s.h.len() != model.hyper.hidden_dim || s.c.len() != model.hyper.hidden_dim {
            return Err(Error::Shape(format!(
                "encoder state dim ({}, {}) != decoder hidden {}",
                s.h.len(),
                s.c.len(),
                model.hyper.hidden_dim
            )));
        }
    }
    Ok(())
}

fn output_logits(model: &Seq2OcrModel, h_top: &Vector) -> Vector {
    let mut logits = model.params.out_w.mul_vec(h_top);
    logits.add_assign(&model.params.out_b);
    logits
}

/// Greedy argmax decoding until EOS or `max_len` steps. Argmax ties
/// break toward the lowest output index.
pub fn decode_greedy(model: &Seq2OcrModel, z: &EncoderOutput, max_len: usize) -> Result<DecodeResult> {
    if max_len == 0 {
        return Err(Error::InvalidInput("max_len must be >= 1".into()));
    }
    check_z(model, z)?;
    let vocab = &model.vocab;
    let mut states = z.states.clone();
    let mut input_row = vocab.sos_id();
    let mut text = String::new();
    let mut stepwise_logprobs = Vec::new();
    for _ in 0..max_len {
        let x = model.params.embedding.row_vector(input_row);
        let (next, _) = stack_step(&model.params.decoder, &x, &states)?;
        states = next;
        let logits = output_logits(model, &states.last().expect("nonempty stack").h);
        let pick = logits.argmax();
        stepwise_logprobs.push(log_softmax(&logits).get(pick));
        if pick == vocab.eos_output_index() {
            return Ok(DecodeResult { text, stepwise_logprobs, truncated: false });
        }
        text.push(vocab.char_of(pick).expect("output index maps to symbol"));
        input_row = pick;
    }
    Ok(DecodeResult { text, stepwise_logprobs, truncated: true })
}

/// Loss and gradients from scoring `label_ids` under teacher forcing.
#[derive(Debug)]
pub struct NllBackprop {
    /// Negative log likelihood of the label plus terminal EOS.
    pub loss: f64,
    /// Per-decoder-layer parameter gradients.
    pub decoder_grads: Vec<CellParams>,
    /// Gradient of the character embedding table.
    pub embedding_grad: Matrix,
    pub out_w_grad: Matrix,
    pub out_b_grad: Vector,
    /// dL/d(encoder final states), one per layer, for encoder BPTT.
    pub z_grad: Vec<StateGrad>,
}

fn check_label_ids(model: &Seq2OcrModel, label_ids: &[usize]) -> Result<()> {
    if label_ids.is_empty() {
        return Err(Error::InvalidInput("empty label".into()));
    }
    for &id in label_ids {
        if id >= model.vocab.symbol_count() {
            return Err(Error::InvalidInput(format!(
                "symbol id {id} out of range (vocab has {} symbols; sentinels are not valid label ids)",
                model.vocab.symbol_count()
            )));
        }
    }
    Ok(())
}

/// Teacher-forced negative log likelihood of `label_ids` (plus EOS),
/// with gradients for the decoder stack, embedding table, output layer
/// and encoder states.
pub fn teacher_forced_nll(
    model: &Seq2OcrModel,
    z: &EncoderOutput,
    label_ids: &[usize],
) -> Result<NllBackprop> {
    check_z(model, z)?;
    check_label_ids(model, label_ids)?;
    let vocab = &model.vocab;
    let cells = &model.params.decoder;
    let steps = label_ids.len() + 1;

    // Inputs are SOS then the ground-truth symbols; targets are the
    // symbols then EOS.
    let input_rows: Vec<usize> =
        std::iter::once(vocab.sos_id()).chain(label_ids.iter().copied()).collect();
    let targets: Vec<usize> = label_ids
        .iter()
        .copied()
        .chain(std::iter::once(vocab.eos_output_index()))
        .collect();

    // Forward, retaining caches.
    let mut states = z.states.clone();
    let mut caches: Vec<Vec<StepCache>> = Vec::with_capacity(steps);
    let mut probs: Vec<Vector> = Vec::with_capacity(steps);
    let mut loss = 0.0;
    for t in 0..steps {
        let x = model.params.embedding.row_vector(input_rows[t]);
        let (next, step_caches) = stack_step(cells, &x, &states)?;
        states = next;
        let logits = output_logits(model, &states.last().expect("nonempty stack").h);
        loss -= log_softmax(&logits).get(targets[t]);
        probs.push(softmax(&logits));
        caches.push(step_caches);
    }

    // Backward through time.
    let mut decoder_grads: Vec<CellParams> = cells.iter().map(|c| c.zeros_like()).collect();
    let mut embedding_grad = Matrix::zeros(model.params.embedding.rows(), model.params.embedding.cols());
    let mut out_w_grad = Matrix::zeros(model.params.out_w.rows(), model.params.out_w.cols());
    let mut out_b_grad = Vector::zeros(model.params.out_b.len());
    let mut carry: Vec<StateGrad> =
        cells.iter().map(|c| StateGrad::zeros(c.hidden_dim())).collect();
    for t in (0..steps).rev() {
        // d(loss)/d(logits) = softmax - one_hot(target)
        let mut d_logits = probs[t].clone();
        d_logits.set(targets[t], d_logits.get(targets[t]) - 1.0);

        let h_top = caches[t].last().expect("nonempty stack").h();
        out_w_grad.add_outer(&d_logits, h_top);
        out_b_grad.add_assign(&d_logits);
        let top_dh = model.params.out_w.tr_mul_vec(&d_logits);

        let (dx, prev) =
            stack_step_backward_into(cells, &caches[t], &carry, Some(&top_dh), &mut decoder_grads)?;
        let row = embedding_grad.row_mut(input_rows[t]);
        for (r, &v) in row.iter_mut().zip(dx.as_slice()) {
            *r += v;
        }
        carry = prev;
    }

    Ok(NllBackprop {
        loss,
        decoder_grads,
        embedding_grad,
        out_w_grad,
        out_b_grad,
        z_grad: carry,
    })
}

/// Forward-only teacher-forced loss; the cheap path for numeric
/// differentiation.
pub fn teacher_forced_loss(
    model: &Seq2OcrModel,
    z: &EncoderOutput,
    label_ids: &[usize],
) -> Result<f64> {
    check_z(model, z)?;
    check_label_ids(model, label_ids)?;
    let vocab = &model.vocab;
    let input_rows: Vec<usize> =
        std::iter::once(vocab.sos_id()).chain(label_ids.iter().copied()).collect();
    let targets: Vec<usize> = label_ids
        .iter()
        .copied()
        .chain(std::iter::once(vocab.eos_output_index()))
        .collect();
    let mut states = z.states.clone();
    let mut loss = 0.0;
    for t in 0..targets.len() {
        let x = model.params.embedding.row_vector(input_rows[t]);
        let (next, _) = stack_step(&model.params.decoder, &x, &states)?;
        states = next;
        let logits = output_logits(model, &states.last().expect("nonempty stack").h);
        loss -= log_softmax(&logits).get(targets[t]);
    }
    Ok(loss)
}
