use seq2ocr::dataset::LabeledSample;
use seq2ocr::image::WordImage;
use seq2ocr::model::{CellKind, HyperParams, Seq2OcrModel};
use seq2ocr::train::{gradient_check, loss_and_grads};
use seq2ocr::vocab::Vocab;

fn main() {
    for seed in [12u64, 99, 7, 2024, 5] {
        let vocab = Vocab::from_symbols(vec!['a', 'b', 'c', 'd', 'e']);
        let hyper = HyperParams {
            height: 6,
            layers: 2,
            hidden_dim: 8,
            embed_dim: 5,
            max_len: 12,
            cell: CellKind::Lstm,
        };
        let model = Seq2OcrModel::new_random_uniform(hyper, vocab, 0.1, seed).unwrap();
        let mut rng = seq2ocr::rng::Rng::new(seed + 1);
        let data = (0..6 * 7).map(|_| rng.below(2) as u8).collect();
        let image = WordImage::from_column_major(6, 7, data).unwrap();
        let label: String = (0..4).map(|_| ['a', 'b', 'c', 'd', 'e'][rng.below(5)]).collect();
        let sample = LabeledSample { id: "g".into(), image, label };

        let (loss, grads) = loss_and_grads(&model, &sample).unwrap();
        let mins: Vec<f64> = grads
            .tensor_data()
            .iter()
            .flat_map(|t| t.iter().map(|x| x.abs()))
            .collect();
        let min = mins.iter().cloned().fold(f64::INFINITY, f64::min);
        let below_1em5 = mins.iter().filter(|&&x| x < 1e-5).count();
        let t0 = std::time::Instant::now();
        let report = gradient_check(&model, &sample, 1e-5).unwrap();
        println!(
            "seed {seed}: loss {loss:.4} min|g| {min:.3e} (#<1e-5: {below_1em5}/{}) max_rel {:.3e} at {}[{}] a {:.3e} n {:.3e} [{:?}]",
            report.params_checked,
            report.max_rel_error,
            report.worst_tensor,
            report.worst_offset,
            report.worst_analytic,
            report.worst_numeric,
            t0.elapsed()
        );
    }
}
