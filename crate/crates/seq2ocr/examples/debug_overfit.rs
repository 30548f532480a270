use std::time::Instant;

use seq2ocr::dataset::{render_word, FontAtlas, LabeledSample, RenderJitter};
use seq2ocr::eval::corpus_label_error_rate;
use seq2ocr::model::{default_max_len, CellKind, HyperParams, Seq2OcrModel};
use seq2ocr::rng::{mix_seed, Rng};
use seq2ocr::train::{train, TrainConfig};
use seq2ocr::vocab::Vocab;

fn random_words(count: usize, min_len: usize, max_len: usize, seed: u64) -> Vec<String> {
    let mut rng = Rng::new(seed);
    let mut words = std::collections::BTreeSet::new();
    while words.len() < count {
        let len = min_len + rng.below(max_len - min_len + 1);
        let w: String = (0..len).map(|_| (b'a' + rng.below(26) as u8) as char).collect();
        words.insert(w);
    }
    words.into_iter().collect()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_words: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let renders: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let max_epochs: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(200);
    let chunk: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(10);
    let bf: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let gain: f64 = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let scale: usize = args.get(7).and_then(|s| s.parse().ok()).unwrap_or(2);

    let words = random_words(n_words, 1, 8, 4242);
    let atlas = FontAtlas::builtin();
    let jitter = RenderJitter {
        pad_max: 2,
        spacing_jitter: 1,
        noise_prob: 0.01,
        scale,
        seed: 77,
    };
    let mut samples: Vec<LabeledSample> = Vec::new();
    for (wi, w) in words.iter().enumerate() {
        for r in 0..renders {
            let img = render_word(w, &atlas, &jitter, mix_seed(&[1, wi as u64, r as u64])).unwrap();
            samples.push(LabeledSample { id: format!("w{wi}_r{r}"), image: img, label: w.clone() });
        }
    }
    let avg_width: f64 =
        samples.iter().map(|s| s.image.width() as f64).sum::<f64>() / samples.len() as f64;
    println!("# {} samples, avg width {avg_width:.1}", samples.len());

    let vocab = Vocab::from_labels(words.iter().map(|s| s.as_str()));
    let longest = words.iter().map(|w| w.len()).max().unwrap();
    let hyper = HyperParams {
        height: 30,
        layers: 2,
        hidden_dim: 64,
        embed_dim: 25,
        max_len: default_max_len(longest),
        cell: CellKind::Lstm,
    };
    let mut model = Seq2OcrModel::new_random(hyper, vocab, 12345).unwrap();
    // init experiments: forget-gate bias and global matrix gain
    for cell in model.params.encoder.iter_mut().chain(model.params.decoder.iter_mut()) {
        if let seq2ocr::cell::CellParams::Lstm(p) = cell {
            for v in p.b_f.as_mut_slice() {
                *v = bf;
            }
            for m in [
                &mut p.w_xi, &mut p.w_hi, &mut p.w_xf, &mut p.w_hf,
                &mut p.w_xc, &mut p.w_hc, &mut p.w_xo, &mut p.w_ho,
            ] {
                for v in m.data_mut() {
                    *v *= gain;
                }
            }
        }
    }
    println!("# bf {bf} gain {gain} scale {scale}");

    let start = Instant::now();
    let mut epochs_done = 0;
    while epochs_done < max_epochs {
        let cfg = TrainConfig {
            epochs: chunk.min(max_epochs - epochs_done),
            seed: mix_seed(&[99, epochs_done as u64]),
            ..TrainConfig::default()
        };
        let report = train(&mut model, &samples, &[], &cfg).unwrap();
        epochs_done += report.epochs.len();
        let ler = corpus_label_error_rate(&model, &samples).unwrap();
        let nll = report.epochs.last().unwrap().train_nll;
        println!(
            "epoch {epochs_done}: nll {nll:.4} train-LER {ler:.4} elapsed {:.1}s",
            start.elapsed().as_secs_f64()
        );
        if ler < 0.01 {
            println!("# reached LER < 1% at epoch {epochs_done} in {:.1}s", start.elapsed().as_secs_f64());
            break;
        }
    }
}
