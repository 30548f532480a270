//! Encoder: reads a word image column by column through the recurrent
//! stack and emits the fixed-dimensional representation.
//!
//! The output bundles the final (h, c) of every layer. Its size depends
//! only on the layer count and hidden width, never on the image width —
//! that fixed dimensionality is what makes the embedding usable for
//! retrieval and as the decoder's initial state.

use crate::cell::{
    stack_step, stack_step_backward_into, CellParams, LstmState, StateGrad, StepCache,
};
use crate::error::{Error, Result};
use crate::image::WordImage;
use crate::model::Seq2OcrModel;

/// Final per-layer states after reading the whole image.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderOutput {
    /// One state per layer, each holding h and c of the last timestep.
    pub states: Vec<LstmState>,
}

impl EncoderOutput {
    pub fn layers(&self) -> usize {
        self.states.len()
    }

    pub fn hidden_dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.h.len())
    }
}

/// Per-timestep, per-layer caches retained for backpropagation through
/// time.
#[derive(Debug)]
pub struct EncodeTrace {
    /// steps[t][layer]
    pub steps: Vec<Vec<StepCache>>,
}

fn check_image(model: &Seq2OcrModel, img: &WordImage) -> Result<()> {
    if img.height() != model.hyper.height {
        return Err(Error::Shape(format!(
            "image height {} != model height {}",
            img.height(),
            model.hyper.height
        )));
    }
    if img.width() == 0 {
        return Err(Error::InvalidInput("zero-width image".into()));
    }
    Ok(())
}

/// Encode without keeping the trace (prediction / embedding extraction).
pub fn encode(model: &Seq2OcrModel, img: &WordImage) -> Result<EncoderOutput> {
    check_image(model, img)?;
    let cells = &model.params.encoder;
    let mut states: Vec<LstmState> =
        cells.iter().map(|c| LstmState::zeros(c.hidden_dim())).collect();
    for t in 0..img.width() {
        let x = img.column(t);
        let (next, _) = stack_step(cells, &x, &states)?;
        states = next;
    }
    Ok(EncoderOutput { states })
}

/// Encode keeping the full trace for BPTT.
pub fn encode_traced(model: &Seq2OcrModel, img: &WordImage) -> Result<(EncoderOutput, EncodeTrace)> {
    check_image(model, img)?;
    let cells = &model.params.encoder;
    let mut states: Vec<LstmState> =
        cells.iter().map(|c| LstmState::zeros(c.hidden_dim())).collect();
    let mut steps = Vec::with_capacity(img.width());
    for t in 0..img.width() {
        let x = img.column(t);
        let (next, caches) = stack_step(cells, &x, &states)?;
        states = next;
        steps.push(caches);
    }
    Ok((EncoderOutput { states }, EncodeTrace { steps }))
}

/// Backpropagate dL/d(final states) through the encoder unroll.
/// Returns per-layer parameter gradients; gradients with respect to the
/// image pixels are discarded.
pub fn encode_backward(
    model: &Seq2OcrModel,
    trace: &EncodeTrace,
    z_grad: &[StateGrad],
) -> Result<Vec<CellParams>> {
    let cells = &model.params.encoder;
    if z_grad.len() != cells.len() {
        return Err(Error::Shape(format!(
            "encoder backward: {} state grads for {} layers",
            z_grad.len(),
            cells.len()
        )));
    }
    let mut grads: Vec<CellParams> = cells.iter().map(|c| c.zeros_like()).collect();
    let mut carry: Vec<StateGrad> = z_grad.to_vec();
    for caches in trace.steps.iter().rev() {
        let (_dx, prev) = stack_step_backward_into(cells, caches, &carry, None, &mut grads)?;
        carry = prev;
    }
    Ok(grads)
}
