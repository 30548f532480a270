//! Command-line surface: `synth`, `train`, `predict`, `embed`,
//! `retrieve`, `gradcheck`.
//!
//! Every command takes `--config PATH` and repeated `--set key=value`
//! overrides; all other parameters flow through [`RunConfig`]. Output
//! files are byte-for-byte reproducible from (config, seed, inputs);
//! anything timing-dependent goes to log lines prefixed `#`.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 data error,
//! 3 gradient-check threshold failure.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::checkpoint;
use crate::config::RunConfig;
use crate::dataset::{load_corpus, FontAtlas, LabeledSample, RenderJitter, SynthSpec};
use crate::decoder::decode_greedy;
use crate::encoder::encode;
use crate::error::{Error, Result};
use crate::eval::{
    extract_dwie, knn_rank, label_error_rate, mean_average_precision, read_embeddings,
    write_embeddings_binary, write_embeddings_text, DwieVariant, EmbeddingRecord, EmbeddingSet,
    VecNorm,
};
use crate::image::WordImage;
use crate::model::{default_max_len, CellKind, HyperParams, Seq2OcrModel};
use crate::rng::{mix_seed, Rng};
use crate::train::{gradient_check, split_dataset, train, TrainConfig};
use crate::vocab::Vocab;

const USAGE: &str = "usage: seq2ocr <command> [--config PATH] [--set key=value]...

commands:
  synth      render a synthetic word-image corpus (synth.* keys)
  train      split, build vocab, train, write checkpoint + CSV (train.* keys)
  predict    greedy-decode a corpus and report label error rate (predict.* keys)
  embed      export word-image embeddings (embed.* keys)
  retrieve   rank queries against an embedding index, report mAP-n (retrieve.* keys)
  gradcheck  finite-difference check of all gradients (gradcheck.* keys)

run `seq2ocr help-config` for the full key schema.";

/// Entry point used by the binary; returns the process exit code.
pub fn run(args: &[String]) -> u8 {
    match dispatch(args) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn dispatch(args: &[String]) -> Result<u8> {
    let Some(command) = args.first() else {
        println!("{USAGE}");
        return Err(Error::Config("missing command".into()));
    };
    if command == "--help" || command == "-h" || command == "help" {
        println!("{USAGE}");
        return Ok(0);
    }
    if command == "help-config" {
        print!("{}", RunConfig::describe_schema());
        return Ok(0);
    }
    let cfg = parse_common(&args[1..])?;
    match command.as_str() {
        "synth" => cmd_synth(&cfg).map(|_| 0),
        "train" => cmd_train(&cfg).map(|_| 0),
        "predict" => cmd_predict(&cfg).map(|_| 0),
        "embed" => cmd_embed(&cfg).map(|_| 0),
        "retrieve" => cmd_retrieve(&cfg).map(|_| 0),
        "gradcheck" => cmd_gradcheck(&cfg),
        other => {
            println!("{USAGE}");
            Err(Error::Config(format!("unknown command {other:?}")))
        }
    }
}

fn parse_common(args: &[String]) -> Result<RunConfig> {
    let mut config_path: Option<PathBuf> = None;
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--config" => {
                let v = it.next().ok_or_else(|| Error::Config("--config needs a path".into()))?;
                config_path = Some(PathBuf::from(v));
            }
            "--set" => {
                let v = it.next().ok_or_else(|| Error::Config("--set needs key=value".into()))?;
                let (k, val) = v
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("--set {v:?} is not key=value")))?;
                overrides.push((k.trim().to_string(), val.trim().to_string()));
            }
            other => return Err(Error::Config(format!("unknown argument {other:?}"))),
        }
    }
    RunConfig::load(config_path.as_deref(), &overrides)
}

fn jitter_from(cfg: &RunConfig) -> Result<RenderJitter> {
    Ok(RenderJitter {
        pad_max: cfg.usize("synth.pad")?,
        spacing_jitter: cfg.usize("synth.spacing_jitter")?,
        noise_prob: cfg.f64("synth.noise")?,
        scale: cfg.usize("synth.scale")?,
        seed: cfg.u64("seed")?,
    })
}

fn cmd_synth(cfg: &RunConfig) -> Result<()> {
    let words_path = cfg.path("synth.words")?;
    let out_dir = cfg.path("synth.out_dir")?;
    let text = fs::read_to_string(&words_path)
        .map_err(|e| Error::Data(format!("{}: {}", words_path.display(), e)))?;
    let words: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect();
    let atlas = FontAtlas::builtin();
    let spec = SynthSpec {
        words: &words,
        renderings: cfg.usize("synth.renderings")?,
        jitter: jitter_from(cfg)?,
        seed: cfg.u64("seed")?,
    };
    let started = Instant::now();
    let manifest = crate::dataset::write_synth_corpus(&out_dir, &atlas, &spec)?;
    println!("# rendered {} words x {} in {:.2}s", words.len(), spec.renderings, started.elapsed().as_secs_f64());
    println!("manifest\t{}", manifest.display());
    Ok(())
}

fn hyper_from(cfg: &RunConfig, max_len: usize) -> Result<HyperParams> {
    Ok(HyperParams {
        height: cfg.usize("model.height")?,
        layers: cfg.usize("model.layers")?,
        hidden_dim: cfg.usize("model.hidden")?,
        embed_dim: cfg.usize("model.embed")?,
        max_len,
        cell: CellKind::parse(&cfg.text("model.cell")?)?,
    })
}

fn train_config_from(cfg: &RunConfig) -> Result<TrainConfig> {
    Ok(TrainConfig {
        step_size: cfg.f64("train.step_size")?,
        rms_decay: cfg.f64("train.rms_decay")?,
        rms_epsilon: cfg.f64("train.rms_epsilon")?,
        epochs: cfg.usize("train.epochs")?,
        seed: cfg.u64("seed")?,
        grad_clip: cfg.opt_f64("train.grad_clip")?,
        batch_size: cfg.usize("train.batch_size")?,
    })
}

/// model.ckpt -> model.best.ckpt (or path.best without an extension).
fn best_checkpoint_path(path: &Path) -> PathBuf {
    match (path.file_stem(), path.extension()) {
        (Some(stem), Some(ext)) => path.with_file_name(format!(
            "{}.best.{}",
            stem.to_string_lossy(),
            ext.to_string_lossy()
        )),
        _ => {
            let mut p = path.as_os_str().to_owned();
            p.push(".best");
            PathBuf::from(p)
        }
    }
}

fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let manifest = cfg.path("train.manifest")?;
    let height = cfg.usize("model.height")?;
    let corpus = load_corpus(&manifest, height)?;
    let seed = cfg.u64("seed")?;
    let (train_set, mut val_set, test_set) = split_dataset(corpus, seed)?;

    let vocab = Vocab::from_labels(train_set.iter().map(|s| s.label.as_str()));
    let longest = train_set.iter().map(|s| s.label.chars().count()).max().unwrap_or(1);
    let hyper = hyper_from(cfg, default_max_len(longest))?;
    let mut model = Seq2OcrModel::new_random(hyper, vocab, mix_seed(&[seed, 0x696e6974]))?;

    // Coverage report before epoch 0: validation/test samples whose
    // labels contain symbols outside the training vocabulary cannot be
    // scored and are dropped here.
    let unusable_val = drop_uncovered(&mut val_set, &model.vocab);
    let unusable_test = test_set.iter().filter(|s| !model.vocab.covers(&s.label)).count();
    println!(
        "# split: {} train / {} val / {} test; vocab {} symbols",
        train_set.len(),
        val_set.len(),
        test_set.len(),
        model.vocab.symbol_count()
    );
    if unusable_val > 0 || unusable_test > 0 {
        println!("# excluded for unknown symbols: {unusable_val} val, {unusable_test} test");
    }

    let tcfg = train_config_from(cfg)?;
    let started = Instant::now();
    let report = train(&mut model, &train_set, &val_set, &tcfg)?;
    println!("# trained {} epochs in {:.2}s", report.epochs.len(), started.elapsed().as_secs_f64());
    if report.skipped_updates > 0 {
        println!("# skipped {} non-finite updates", report.skipped_updates);
    }

    let mut csv = String::from("epoch,train_nll,val_ler\n");
    for e in &report.epochs {
        let _ = writeln!(csv, "{},{},{}", e.epoch, e.train_nll, e.val_ler);
    }
    let csv_path = cfg.path("train.csv_out")?;
    fs::write(&csv_path, csv)?;

    let ckpt_path = cfg.path("train.checkpoint_out")?;
    checkpoint::save(&model, &ckpt_path)?;
    if let Some(best) = report.best_params {
        let mut best_model = model.clone();
        best_model.params = best;
        let best_path = best_checkpoint_path(&ckpt_path);
        checkpoint::save(&best_model, &best_path)?;
        println!(
            "# best validation LER {} at epoch {} -> {}",
            report.best_val_ler,
            report.best_epoch.unwrap_or(0),
            best_path.display()
        );
    }
    println!("checkpoint\t{}", ckpt_path.display());
    println!("csv\t{}", csv_path.display());
    if let Some(last) = report.epochs.last() {
        println!("final_train_nll\t{}", last.train_nll);
        println!("final_val_ler\t{}", last.val_ler);
    }
    Ok(())
}

fn drop_uncovered(samples: &mut Vec<LabeledSample>, vocab: &Vocab) -> usize {
    let before = samples.len();
    samples.retain(|s| vocab.covers(&s.label));
    before - samples.len()
}

fn cmd_predict(cfg: &RunConfig) -> Result<()> {
    let model = checkpoint::load(&cfg.path("predict.checkpoint")?)?;
    let corpus = load_corpus(&cfg.path("predict.manifest")?, model.hyper.height)?;
    let mut out = String::new();
    let mut pairs: Vec<(String, String)> = Vec::with_capacity(corpus.len());
    for sample in &corpus {
        let z = encode(&model, &sample.image)?;
        let res = decode_greedy(&model, &z, model.hyper.max_len)?;
        let _ = writeln!(out, "{}\t{}\t{}", sample.id, sample.label, res.text);
        pairs.push((sample.label.clone(), res.text));
    }
    let out_path = cfg.path("predict.out")?;
    fs::write(&out_path, out)?;
    let ler = label_error_rate(pairs.iter().map(|(t, p)| (t.as_str(), p.as_str())))?;
    println!("predictions\t{}", out_path.display());
    println!("ler\t{}", ler);
    Ok(())
}

fn cmd_embed(cfg: &RunConfig) -> Result<()> {
    let model = checkpoint::load(&cfg.path("embed.checkpoint")?)?;
    let corpus = load_corpus(&cfg.path("embed.manifest")?, model.hyper.height)?;
    let variant = DwieVariant::parse(&cfg.text("embed.variant")?)?;
    let norm = VecNorm::parse(&cfg.text("embed.norm")?)?;
    let mut records = Vec::with_capacity(corpus.len());
    let mut dim = 0;
    for sample in &corpus {
        let feature = extract_dwie(&model, &sample.image, variant, norm)?;
        dim = feature.vector.len();
        records.push(EmbeddingRecord {
            id: sample.id.clone(),
            label: sample.label.clone(),
            vector: feature.vector,
        });
    }
    let set = EmbeddingSet {
        variant: variant.name(model.hyper.layers),
        norm: norm.name().to_string(),
        dim,
        records,
    };
    let out_path = cfg.path("embed.out")?;
    match cfg.text("embed.format")?.as_str() {
        "binary" => write_embeddings_binary(&out_path, &set)?,
        _ => write_embeddings_text(&out_path, &set)?,
    }
    println!("embeddings\t{}", out_path.display());
    println!("count\t{}", set.records.len());
    println!("dim\t{}", set.dim);
    Ok(())
}

fn cmd_retrieve(cfg: &RunConfig) -> Result<()> {
    let index = read_embeddings(&cfg.path("retrieve.index")?)?;
    let queries = read_embeddings(&cfg.path("retrieve.queries")?)?;
    if index.dim != queries.dim {
        return Err(Error::Data(format!(
            "index dim {} != query dim {}",
            index.dim, queries.dim
        )));
    }
    if index.variant != queries.variant || index.norm != queries.norm {
        return Err(Error::Data(format!(
            "index ({}, {}) and queries ({}, {}) use different variant/norm",
            index.variant, index.norm, queries.variant, queries.norm
        )));
    }
    let n = cfg.usize("retrieve.n")?;
    let mut labels: BTreeMap<String, String> = BTreeMap::new();
    for rec in index.records.iter().chain(&queries.records) {
        labels.insert(rec.id.clone(), rec.label.clone());
    }
    let mut out = String::new();
    let mut results = Vec::with_capacity(queries.records.len());
    for q in &queries.records {
        let res = knn_rank(&index.records, &q.id, &q.vector)?;
        for (rank, item) in res.ranked.iter().take(n).enumerate() {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", q.id, rank + 1, item.id, item.distance);
        }
        results.push(res);
    }
    let out_path = cfg.path("retrieve.out")?;
    fs::write(&out_path, out)?;
    let report = mean_average_precision(&results, &labels, n)?;
    println!("ranked\t{}", out_path.display());
    println!("map\t{}\t{}\t{}\t{}", report.map, n, index.variant, index.norm);
    println!("queries_used\t{}", report.queries_used);
    println!("queries_excluded\t{}", report.queries_excluded);
    Ok(())
}

fn cmd_gradcheck(cfg: &RunConfig) -> Result<u8> {
    let height = cfg.usize("gradcheck.height")?;
    let width = cfg.usize("gradcheck.width")?;
    let vocab_size = cfg.usize("gradcheck.vocab")?;
    let label_len = cfg.usize("gradcheck.label_len")?;
    let seed = cfg.u64("seed")?;
    let symbols: Vec<char> = ('a'..).take(vocab_size).collect();
    let vocab = Vocab::from_symbols(symbols.clone());
    let hyper = HyperParams {
        height,
        layers: cfg.usize("gradcheck.layers")?,
        hidden_dim: cfg.usize("gradcheck.hidden")?,
        embed_dim: cfg.usize("gradcheck.embed")?,
        max_len: default_max_len(label_len),
        cell: CellKind::parse(&cfg.text("model.cell")?)?,
    };
    let model = Seq2OcrModel::new_random_uniform(
        hyper,
        vocab,
        cfg.f64("gradcheck.init_scale")?,
        mix_seed(&[seed, 0x6763]),
    )?;
    let mut rng = Rng::new(mix_seed(&[seed, 0x696d67]));
    let data = (0..width * height).map(|_| rng.below(2) as u8).collect();
    let image = WordImage::from_column_major(height, width, data)?;
    let label: String = (0..label_len).map(|_| symbols[rng.below(symbols.len())]).collect();
    let sample = LabeledSample { id: "gradcheck".into(), image, label };

    let started = Instant::now();
    let report = gradient_check(&model, &sample, cfg.f64("gradcheck.epsilon")?)?;
    println!(
        "# checked {} parameters in {:.2}s",
        report.params_checked,
        started.elapsed().as_secs_f64()
    );
    println!("max_rel_error\t{}", report.max_rel_error);
    println!(
        "worst\t{}[{}]\tanalytic\t{}\tnumeric\t{}",
        report.worst_tensor, report.worst_offset, report.worst_analytic, report.worst_numeric
    );
    if report.max_rel_error < 1e-6 {
        println!("status\tpass");
        Ok(0)
    } else {
        println!("status\tfail");
        Ok(3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn best_checkpoint_path_forms() {
        assert_eq!(best_checkpoint_path(Path::new("model.ckpt")), PathBuf::from("model.best.ckpt"));
        assert_eq!(best_checkpoint_path(Path::new("out/m.ckpt")), PathBuf::from("out/m.best.ckpt"));
        assert_eq!(best_checkpoint_path(Path::new("model")), PathBuf::from("model.best"));
    }

    #[test]
    fn unknown_arguments_are_usage_errors() {
        assert!(parse_common(&["--frobnicate".into()]).is_err());
        assert!(parse_common(&["--set".into(), "noequals".into()]).is_err());
        assert!(parse_common(&["--set".into(), "model.hidden=32".into()]).is_ok());
    }

    #[test]
    fn run_reports_exit_codes() {
        assert_eq!(run(&["help".into()]), 0);
        assert_eq!(run(&["nonsense".into()]), 1);
        assert_eq!(run(&[]), 1);
        // missing required key -> config error
        assert_eq!(run(&["synth".into()]), 1);
        // missing data file -> data error
        assert_eq!(
            run(&[
                "predict".into(),
                "--set".into(),
                "predict.checkpoint=/nonexistent.ckpt".into(),
                "--set".into(),
                "predict.manifest=/nonexistent.tsv".into(),
            ]),
            2
        );
    }
}
