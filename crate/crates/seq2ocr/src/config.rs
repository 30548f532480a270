//! Flat `key = value` run configuration.
//!
//! A config file is UTF-8 text: blank lines and `#` comments are
//! ignored; every other line is `key = value`. Command-line `--set
//! key=value` overrides are applied on top. Every key is validated
//! against the schema below — unknown keys are hard errors, as are
//! values that do not parse as the declared type.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    U64,
    F64,
    /// Either "none" or an f64.
    OptF64,
    Path,
    /// One of a fixed set of words.
    Choice(&'static [&'static str]),
}

struct Entry {
    key: &'static str,
    kind: Kind,
    default: Option<&'static str>,
    help: &'static str,
}

macro_rules! entry {
    ($key:literal, $kind:expr, $default:expr, $help:literal) => {
        Entry { key: $key, kind: $kind, default: $default, help: $help }
    };
}

/// The full key schema. Keys without defaults are required only by the
/// subcommands that read them.
const SCHEMA: &[Entry] = &[
    entry!("seed", Kind::U64, Some("42"), "master seed; sub-streams are derived from it"),
    entry!("model.height", Kind::U64, Some("30"), "input image height in pixels"),
    entry!("model.layers", Kind::U64, Some("2"), "recurrent layers in encoder and decoder"),
    entry!("model.hidden", Kind::U64, Some("64"), "hidden units per layer"),
    entry!("model.embed", Kind::U64, Some("25"), "character embedding size"),
    entry!("model.cell", Kind::Choice(&["lstm", "rnn-relu"]), Some("lstm"), "recurrent cell kind"),
    entry!("train.step_size", Kind::F64, Some("0.0001"), "RMSProp step size"),
    entry!("train.rms_decay", Kind::F64, Some("0.99"), "RMSProp squared-gradient decay"),
    entry!("train.rms_epsilon", Kind::F64, Some("1e-8"), "RMSProp denominator epsilon"),
    entry!("train.epochs", Kind::U64, Some("100"), "training epochs"),
    entry!("train.batch_size", Kind::U64, Some("1"), "samples per update"),
    entry!("train.grad_clip", Kind::OptF64, Some("none"), "global-norm gradient clip, or none"),
    entry!("train.manifest", Kind::Path, None, "corpus manifest to train on"),
    entry!("train.checkpoint_out", Kind::Path, Some("model.ckpt"), "final checkpoint path"),
    entry!("train.csv_out", Kind::Path, Some("train_log.csv"), "per-epoch metrics CSV path"),
    entry!("synth.words", Kind::Path, None, "word list, one word per line"),
    entry!("synth.out_dir", Kind::Path, None, "output directory for the corpus"),
    entry!("synth.renderings", Kind::U64, Some("10"), "renderings per word"),
    entry!("synth.pad", Kind::U64, Some("2"), "max horizontal padding per side (glyph px)"),
    entry!("synth.spacing_jitter", Kind::U64, Some("1"), "max extra inter-glyph spacing"),
    entry!("synth.noise", Kind::F64, Some("0.0"), "pixel flip probability (max 0.05)"),
    entry!("synth.scale", Kind::U64, Some("2"), "integer upscale before resizing"),
    entry!("predict.checkpoint", Kind::Path, None, "checkpoint to decode with"),
    entry!("predict.manifest", Kind::Path, None, "corpus manifest to decode"),
    entry!("predict.out", Kind::Path, Some("predictions.tsv"), "predictions output path"),
    entry!("embed.checkpoint", Kind::Path, None, "checkpoint to embed with"),
    entry!("embed.manifest", Kind::Path, None, "corpus manifest to embed"),
    entry!(
        "embed.variant",
        Kind::Choice(&["h1-h2", "c1-c2", "h1-h2-c1-c2", "h", "c", "hc"]),
        Some("c1-c2"),
        "state concatenation variant"
    ),
    entry!("embed.norm", Kind::Choice(&["none", "l1", "l2"]), Some("none"), "feature normalization"),
    entry!("embed.out", Kind::Path, Some("embeddings.tsv"), "embedding output path"),
    entry!("embed.format", Kind::Choice(&["text", "binary"]), Some("text"), "embedding file format"),
    entry!("retrieve.index", Kind::Path, None, "embedding file to search in"),
    entry!("retrieve.queries", Kind::Path, None, "embedding file of queries"),
    entry!("retrieve.n", Kind::U64, Some("100"), "retrievals per query for mAP-n"),
    entry!("retrieve.out", Kind::Path, Some("retrieval.tsv"), "ranked list output path"),
    entry!("gradcheck.height", Kind::U64, Some("6"), "gradient check: image height"),
    entry!("gradcheck.layers", Kind::U64, Some("2"), "gradient check: layers"),
    entry!("gradcheck.hidden", Kind::U64, Some("8"), "gradient check: hidden units"),
    entry!("gradcheck.embed", Kind::U64, Some("5"), "gradient check: embedding size"),
    entry!("gradcheck.vocab", Kind::U64, Some("5"), "gradient check: symbol count"),
    entry!("gradcheck.width", Kind::U64, Some("7"), "gradient check: image width"),
    entry!("gradcheck.label_len", Kind::U64, Some("4"), "gradient check: label length"),
    entry!("gradcheck.epsilon", Kind::F64, Some("1e-5"), "finite-difference step"),
    entry!("gradcheck.init_scale", Kind::F64, Some("0.1"), "uniform init scale for the check"),
];

fn schema_entry(key: &str) -> Option<&'static Entry> {
    SCHEMA.iter().find(|e| e.key == key)
}

/// Validated key/value store with schema defaults.
#[derive(Clone, Debug, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Defaults only.
    pub fn new() -> RunConfig {
        RunConfig { values: BTreeMap::new() }
    }

    /// Parse a config file and apply `--set` overrides (later wins).
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
        let mut cfg = RunConfig::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {}", path.display(), e)))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::Config(format!(
                        "{}:{}: expected key = value",
                        path.display(),
                        lineno + 1
                    ))
                })?;
                cfg.set(key.trim(), value.trim())?;
            }
        }
        for (key, value) in overrides {
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Validate and store one assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let entry = schema_entry(key)
            .ok_or_else(|| Error::Config(format!("unknown config key {key:?}")))?;
        check_value(entry, value)?;
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    fn raw(&self, key: &str) -> Result<&str> {
        let entry = schema_entry(key)
            .ok_or_else(|| Error::Config(format!("unknown config key {key:?}")))?;
        if let Some(v) = self.values.get(key) {
            return Ok(v);
        }
        entry
            .default
            .ok_or_else(|| Error::Config(format!("missing required config key {key:?}")))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        let v = self.raw(key)?;
        v.parse().map_err(|_| Error::Config(format!("{key}: {v:?} is not an integer")))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        Ok(self.u64(key)? as usize)
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v = self.raw(key)?;
        v.parse().map_err(|_| Error::Config(format!("{key}: {v:?} is not a number")))
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        let v = self.raw(key)?;
        if v == "none" {
            return Ok(None);
        }
        v.parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{key}: {v:?} is not a number or none")))
    }

    pub fn text(&self, key: &str) -> Result<String> {
        Ok(self.raw(key)?.to_string())
    }

    pub fn path(&self, key: &str) -> Result<PathBuf> {
        Ok(PathBuf::from(self.raw(key)?))
    }

    /// One line per schema key: `key = value  # help`, for `--help`.
    pub fn describe_schema() -> String {
        let mut out = String::new();
        for e in SCHEMA {
            let default = e.default.map(|d| format!(" (default {d})")).unwrap_or_default();
            out.push_str(&format!("  {:<24} {}{}\n", e.key, e.help, default));
        }
        out
    }
}

fn check_value(entry: &Entry, value: &str) -> Result<()> {
    let bad = |why: &str| Error::Config(format!("{}: {value:?} {why}", entry.key));
    match entry.kind {
        Kind::U64 => {
            value.parse::<u64>().map_err(|_| bad("is not an integer"))?;
        }
        Kind::F64 => {
            value.parse::<f64>().map_err(|_| bad("is not a number"))?;
        }
        Kind::OptF64 => {
            if value != "none" {
                value.parse::<f64>().map_err(|_| bad("is not a number or none"))?;
            }
        }
        Kind::Path => {
            if value.is_empty() {
                return Err(bad("is empty"));
            }
        }
        Kind::Choice(options) => {
            if !options.contains(&value) {
                return Err(Error::Config(format!(
                    "{}: {value:?} is not one of {options:?}",
                    entry.key
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_apply() {
        let cfg = RunConfig::new();
        assert_eq!(cfg.u64("model.height").unwrap(), 30);
        assert_eq!(cfg.u64("model.hidden").unwrap(), 64);
        assert_eq!(cfg.f64("train.step_size").unwrap(), 1e-4);
        assert_eq!(cfg.opt_f64("train.grad_clip").unwrap(), None);
        assert!(cfg.path("train.manifest").is_err()); // required, no default
    }

    #[test]
    fn file_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "# comment\nmodel.hidden = 32\ntrain.epochs = 7\n\n").unwrap();
        let overrides = vec![("train.epochs".to_string(), "9".to_string())];
        let cfg = RunConfig::load(Some(&path), &overrides).unwrap();
        assert_eq!(cfg.u64("model.hidden").unwrap(), 32);
        assert_eq!(cfg.u64("train.epochs").unwrap(), 9); // override wins
    }

    #[test]
    fn unknown_keys_are_hard_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "model.hiden = 32\n").unwrap();
        assert!(RunConfig::load(Some(&path), &[]).is_err());
        let mut cfg = RunConfig::new();
        assert!(cfg.set("nope", "1").is_err());
    }

    #[test]
    fn values_are_type_checked_eagerly() {
        let mut cfg = RunConfig::new();
        assert!(cfg.set("model.hidden", "lots").is_err());
        assert!(cfg.set("model.cell", "gru").is_err());
        assert!(cfg.set("train.grad_clip", "maybe").is_err());
        assert!(cfg.set("train.grad_clip", "5.0").is_ok());
        assert!(cfg.set("train.grad_clip", "none").is_ok());
        assert!(cfg.set("embed.norm", "l2").is_ok());
    }

    #[test]
    fn malformed_lines_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "model.hidden 32\n").unwrap();
        assert!(RunConfig::load(Some(&path), &[]).is_err());
    }
}
