//! Binary model checkpoints.
//!
//! Container layout (all integers little-endian u32 unless noted):
//!
//! ```text
//! magic            8 bytes  "SEQ2OCR1"
//! format version   u32      (currently 1)
//! height, layers, hidden_dim, embed_dim, max_len   u32 each
//! cell kind        u8       0 = lstm, 1 = rnn-relu
//! symbol count     u32
//! symbols          u32 each (unicode scalar values, id order)
//! sos id, eos id   u32 each
//! tensor count     u32
//! per tensor:      name len u32, name bytes (UTF-8),
//!                  rank u32, dims u32 x rank,
//!                  payload f64 little-endian x prod(dims)
//! ```
//!
//! Payloads are raw IEEE-754 bits, so a save/load cycle reproduces the
//! model and therefore every decode bit-exactly.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{CellKind, HyperParams, Seq2OcrModel};
use crate::vocab::Vocab;

const MAGIC: &[u8; 8] = b"SEQ2OCR1";
const VERSION: u32 = 1;

pub fn save(model: &Seq2OcrModel, path: &Path) -> Result<()> {
    let mut out: Vec<u8> = Vec::new();
    out.extend_from_slice(MAGIC);
    push_u32(&mut out, VERSION);
    push_u32(&mut out, model.hyper.height as u32);
    push_u32(&mut out, model.hyper.layers as u32);
    push_u32(&mut out, model.hyper.hidden_dim as u32);
    push_u32(&mut out, model.hyper.embed_dim as u32);
    push_u32(&mut out, model.hyper.max_len as u32);
    out.push(match model.hyper.cell {
        CellKind::Lstm => 0,
        CellKind::RnnRelu => 1,
    });
    push_u32(&mut out, model.vocab.symbol_count() as u32);
    for &c in model.vocab.symbols() {
        push_u32(&mut out, c as u32);
    }
    push_u32(&mut out, model.vocab.sos_id() as u32);
    push_u32(&mut out, model.vocab.eos_id() as u32);

    let tensors = model.params.named_tensors();
    push_u32(&mut out, tensors.len() as u32);
    for (name, tensor) in tensors {
        push_u32(&mut out, name.len() as u32);
        out.extend_from_slice(name.as_bytes());
        let dims = tensor.dims();
        push_u32(&mut out, dims.len() as u32);
        for d in &dims {
            push_u32(&mut out, *d as u32);
        }
        for v in tensor.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Seq2OcrModel> {
    let bytes = fs::read(path).map_err(|e| Error::Checkpoint(format!("{}: {}", path.display(), e)))?;
    load_bytes(&bytes).map_err(|e| match e {
        Error::Checkpoint(m) => Error::Checkpoint(format!("{}: {}", path.display(), m)),
        other => other,
    })
}

fn load_bytes(bytes: &[u8]) -> Result<Seq2OcrModel> {
    let mut pos = 0usize;
    let magic = take(bytes, &mut pos, 8)?;
    if magic != MAGIC {
        return Err(Error::Checkpoint("bad magic (not a seq2ocr checkpoint)".into()));
    }
    let version = take_u32(bytes, &mut pos)?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported format version {version}")));
    }
    let height = take_u32(bytes, &mut pos)? as usize;
    let layers = take_u32(bytes, &mut pos)? as usize;
    let hidden_dim = take_u32(bytes, &mut pos)? as usize;
    let embed_dim = take_u32(bytes, &mut pos)? as usize;
    let max_len = take_u32(bytes, &mut pos)? as usize;
    let cell = match take(bytes, &mut pos, 1)?[0] {
        0 => CellKind::Lstm,
        1 => CellKind::RnnRelu,
        k => return Err(Error::Checkpoint(format!("unknown cell kind {k}"))),
    };
    let symbol_count = take_u32(bytes, &mut pos)? as usize;
    let mut symbols = Vec::with_capacity(symbol_count);
    for _ in 0..symbol_count {
        let code = take_u32(bytes, &mut pos)?;
        let c = char::from_u32(code)
            .ok_or_else(|| Error::Checkpoint(format!("invalid symbol codepoint {code}")))?;
        symbols.push(c);
    }
    let vocab = Vocab::from_symbols(symbols);
    let sos = take_u32(bytes, &mut pos)? as usize;
    let eos = take_u32(bytes, &mut pos)? as usize;
    if sos != vocab.sos_id() || eos != vocab.eos_id() {
        return Err(Error::Checkpoint("inconsistent sentinel positions".into()));
    }

    let hyper = HyperParams { height, layers, hidden_dim, embed_dim, max_len, cell };
    let mut model = Seq2OcrModel::new_zero(hyper, vocab)
        .map_err(|e| Error::Checkpoint(format!("invalid hyperparameters: {e}")))?;

    let tensor_count = take_u32(bytes, &mut pos)? as usize;
    let expected_names = model.params.tensor_names();
    if tensor_count != expected_names.len() {
        return Err(Error::Checkpoint(format!(
            "{} tensors in file, model needs {}",
            tensor_count,
            expected_names.len()
        )));
    }
    // Index destination slices by name so a reordered file still loads.
    let mut remaining: std::collections::BTreeMap<String, usize> = expected_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i))
        .collect();
    let expected_dims: Vec<Vec<usize>> = model
        .params
        .named_tensors()
        .iter()
        .map(|(_, t)| t.dims())
        .collect();

    for _ in 0..tensor_count {
        let name_len = take_u32(bytes, &mut pos)? as usize;
        let name = String::from_utf8(take(bytes, &mut pos, name_len)?.to_vec())
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
        let rank = take_u32(bytes, &mut pos)? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(take_u32(bytes, &mut pos)? as usize);
        }
        let slot = remaining
            .remove(&name)
            .ok_or_else(|| Error::Checkpoint(format!("unexpected or duplicate tensor {name:?}")))?;
        if dims != expected_dims[slot] {
            return Err(Error::Checkpoint(format!(
                "tensor {name:?} has dims {dims:?}, expected {:?}",
                expected_dims[slot]
            )));
        }
        let count: usize = dims.iter().product();
        let payload = take(bytes, &mut pos, count * 8)?;
        let dest = &mut model.params.tensor_data_mut()[slot];
        for (i, chunk) in payload.chunks_exact(8).enumerate() {
            let mut buf = [0u8; 8];
            buf.copy_from_slice(chunk);
            dest[i] = f64::from_le_bytes(buf);
        }
    }
    if !remaining.is_empty() {
        let missing: Vec<&String> = remaining.keys().collect();
        return Err(Error::Checkpoint(format!("missing tensors: {missing:?}")));
    }
    if pos != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes after tensors",
            bytes.len() - pos
        )));
    }
    Ok(model)
}

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize) -> Result<&'a [u8]> {
    if *pos + n > bytes.len() {
        return Err(Error::Checkpoint("unexpected end of file".into()));
    }
    let s = &bytes[*pos..*pos + n];
    *pos += n;
    Ok(s)
}

fn take_u32(bytes: &[u8], pos: &mut usize) -> Result<u32> {
    let s = take(bytes, pos, 4)?;
    let mut buf = [0u8; 4];
    buf.copy_from_slice(s);
    Ok(u32::from_le_bytes(buf))
}
