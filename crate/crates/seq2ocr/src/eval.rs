//! Evaluation: label error rate for prediction, and the retrieval
//! pipeline over deep word-image embeddings (feature extraction,
//! exact nearest-neighbor ranking, mAP-n).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::dataset::LabeledSample;
use crate::decoder::decode_greedy;
use crate::encoder::encode;
use crate::error::{Error, Result};
use crate::image::WordImage;
use crate::model::Seq2OcrModel;
use crate::tensor::Vector;

/// Levenshtein distance over unicode scalar values, unit costs.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Corpus-level label error rate: total edit operations over total
/// ground-truth length (sum-over-sum).
pub fn label_error_rate<'a>(
    pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> Result<f64> {
    let mut ops = 0usize;
    let mut truth_len = 0usize;
    for (truth, pred) in pairs {
        if truth.is_empty() {
            return Err(Error::InvalidInput("empty ground truth in LER".into()));
        }
        ops += edit_distance(truth, pred);
        truth_len += truth.chars().count();
    }
    if truth_len == 0 {
        return Err(Error::InvalidInput("LER over an empty corpus".into()));
    }
    Ok(ops as f64 / truth_len as f64)
}

/// Greedy-decode every sample and report the corpus LER.
pub fn corpus_label_error_rate(model: &Seq2OcrModel, samples: &[LabeledSample]) -> Result<f64> {
    let mut pairs = Vec::with_capacity(samples.len());
    for s in samples {
        let z = encode(model, &s.image)?;
        let res = decode_greedy(model, &z, model.hyper.max_len)?;
        pairs.push((s.label.clone(), res.text));
    }
    label_error_rate(pairs.iter().map(|(t, p)| (t.as_str(), p.as_str())))
}

/// Which final states are concatenated into the embedding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DwieVariant {
    /// Hidden states of every layer (h1-h2 for a two-layer model).
    Hidden,
    /// Memory states of every layer (c1-c2).
    Memory,
    /// Hidden block then memory block (h1-h2-c1-c2).
    HiddenMemory,
}

impl DwieVariant {
    /// Canonical name for a stack of `layers` layers, e.g. "c1-c2".
    pub fn name(&self, layers: usize) -> String {
        let block = |prefix: &str| {
            (1..=layers).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>().join("-")
        };
        match self {
            DwieVariant::Hidden => block("h"),
            DwieVariant::Memory => block("c"),
            DwieVariant::HiddenMemory => format!("{}-{}", block("h"), block("c")),
        }
    }

    pub fn parse(s: &str) -> Result<DwieVariant> {
        // accept the canonical two-layer spellings and the short forms
        match s {
            "h" | "h1-h2" => Ok(DwieVariant::Hidden),
            "c" | "c1-c2" => Ok(DwieVariant::Memory),
            "hc" | "h1-h2-c1-c2" => Ok(DwieVariant::HiddenMemory),
            other => Err(Error::Config(format!("unknown feature variant {other:?}"))),
        }
    }
}

/// Normalization applied to the concatenated feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VecNorm {
    None,
    L1,
    L2,
}

impl VecNorm {
    pub fn name(&self) -> &'static str {
        match self {
            VecNorm::None => "none",
            VecNorm::L1 => "l1",
            VecNorm::L2 => "l2",
        }
    }

    pub fn parse(s: &str) -> Result<VecNorm> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(VecNorm::None),
            "l1" => Ok(VecNorm::L1),
            "l2" => Ok(VecNorm::L2),
            other => Err(Error::Config(format!("unknown norm {other:?}"))),
        }
    }

    /// Normalize in place; an all-zero vector is left unchanged.
    pub fn apply(&self, v: &mut Vector) {
        let denom = match self {
            VecNorm::None => return,
            VecNorm::L1 => v.norm_l1(),
            VecNorm::L2 => v.norm_l2(),
        };
        if denom > 0.0 {
            for x in v.as_mut_slice() {
                *x /= denom;
            }
        }
    }
}

/// Fixed-dimensional word-image embedding.
#[derive(Clone, Debug)]
pub struct DwieFeature {
    pub vector: Vector,
    pub variant: DwieVariant,
    pub norm: VecNorm,
}

/// Encode an image and concatenate the selected final states (layer 1
/// first; hidden block before memory block for the combined variant).
pub fn extract_dwie(
    model: &Seq2OcrModel,
    img: &WordImage,
    variant: DwieVariant,
    norm: VecNorm,
) -> Result<DwieFeature> {
    if variant != DwieVariant::Hidden && model.params.encoder.iter().any(|c| !c.has_memory()) {
        return Err(Error::InvalidInput(
            "memory-state variants require LSTM cells".into(),
        ));
    }
    let out = encode(model, img)?;
    let mut data = Vec::new();
    if variant != DwieVariant::Memory {
        for s in &out.states {
            data.extend_from_slice(s.h.as_slice());
        }
    }
    if variant != DwieVariant::Hidden {
        for s in &out.states {
            data.extend_from_slice(s.c.as_slice());
        }
    }
    let mut vector = Vector::from_vec(data);
    norm.apply(&mut vector);
    Ok(DwieFeature { vector, variant, norm })
}

/// One embedded item of a retrieval index.
#[derive(Clone, Debug)]
pub struct EmbeddingRecord {
    pub id: String,
    pub label: String,
    pub vector: Vector,
}

/// A set of embeddings sharing a variant/norm.
#[derive(Clone, Debug)]
pub struct EmbeddingSet {
    pub variant: String,
    pub norm: String,
    pub dim: usize,
    pub records: Vec<EmbeddingRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankedItem {
    pub id: String,
    pub distance: f64,
}

#[derive(Clone, Debug)]
pub struct RetrievalResult {
    pub query_id: String,
    /// Every index item except the query itself, nearest first; ties
    /// broken by item id.
    pub ranked: Vec<RankedItem>,
}

/// Exact Euclidean ranking of `index` against one query. An index item
/// whose id equals `query_id` is excluded.
pub fn knn_rank(index: &[EmbeddingRecord], query_id: &str, query: &Vector) -> Result<RetrievalResult> {
    let mut ranked = Vec::with_capacity(index.len());
    for item in index {
        if item.id == query_id {
            continue;
        }
        if item.vector.len() != query.len() {
            return Err(Error::Shape(format!(
                "index item {} has dim {}, query has {}",
                item.id,
                item.vector.len(),
                query.len()
            )));
        }
        let mut acc = 0.0;
        for (a, b) in item.vector.as_slice().iter().zip(query.as_slice()) {
            let d = a - b;
            acc += d * d;
        }
        ranked.push(RankedItem { id: item.id.clone(), distance: acc.sqrt() });
    }
    ranked.sort_by(|a, b| {
        a.distance
            .partial_cmp(&b.distance)
            .expect("finite distances")
            .then_with(|| a.id.cmp(&b.id))
    });
    Ok(RetrievalResult { query_id: query_id.to_string(), ranked })
}

/// mAP-n report.
#[derive(Clone, Debug)]
pub struct MapReport {
    pub map: f64,
    pub queries_used: usize,
    /// Queries dropped because no relevant item exists in the index.
    pub queries_excluded: usize,
}

/// Mean average precision over the top `n` retrievals.
///
/// Relevance is exact label equality. For each query,
/// AP@n = sum_{k<=n} precision@k * rel(k) / min(R, n) with R the total
/// number of relevant items in the query's candidate list. Queries with
/// R = 0 are excluded and counted.
pub fn mean_average_precision(
    results: &[RetrievalResult],
    labels: &BTreeMap<String, String>,
    n: usize,
) -> Result<MapReport> {
    if n == 0 {
        return Err(Error::InvalidInput("mAP-n needs n >= 1".into()));
    }
    let mut total = 0.0;
    let mut used = 0usize;
    let mut excluded = 0usize;
    for res in results {
        let query_label = labels.get(&res.query_id).ok_or_else(|| {
            Error::InvalidInput(format!("no label for query {}", res.query_id))
        })?;
        let rel: Vec<bool> = res
            .ranked
            .iter()
            .map(|item| labels.get(&item.id).map(|l| l == query_label).unwrap_or(false))
            .collect();
        let total_relevant = rel.iter().filter(|&&r| r).count();
        if total_relevant == 0 {
            excluded += 1;
            continue;
        }
        let mut hits = 0usize;
        let mut ap = 0.0;
        for (k, &is_rel) in rel.iter().take(n).enumerate() {
            if is_rel {
                hits += 1;
                ap += hits as f64 / (k + 1) as f64;
            }
        }
        ap /= total_relevant.min(n) as f64;
        total += ap;
        used += 1;
    }
    if used == 0 {
        return Err(Error::InvalidInput("every query had zero relevant items".into()));
    }
    Ok(MapReport { map: total / used as f64, queries_used: used, queries_excluded: excluded })
}

// ---------------------------------------------------------------------------
// Embedding files
//
// Text format: a `#!` header line carrying variant/norm/dim, then one
// `id\tlabel\tv1,v2,...` record per line. Floats are written with Rust's
// shortest round-trip formatting, so read(write(x)) == x bit for bit.
//
// Binary format: magic "DWIEBIN1", then variant and norm as
// length-prefixed strings, dim and count as u32 LE, then per record
// id/label as length-prefixed strings and dim f64 LE values.
// ---------------------------------------------------------------------------

const DWIE_BINARY_MAGIC: &[u8; 8] = b"DWIEBIN1";

pub fn write_embeddings_text(path: &Path, set: &EmbeddingSet) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "#! variant={}\tnorm={}\tdim={}", set.variant, set.norm, set.dim);
    for rec in &set.records {
        let values: Vec<String> = rec.vector.as_slice().iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(out, "{}\t{}\t{}", rec.id, rec.label, values.join(","));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_embeddings_binary(path: &Path, set: &EmbeddingSet) -> Result<()> {
    let mut out: Vec<u8> = Vec::new();
    out.extend_from_slice(DWIE_BINARY_MAGIC);
    write_str(&mut out, &set.variant);
    write_str(&mut out, &set.norm);
    out.extend_from_slice(&(set.dim as u32).to_le_bytes());
    out.extend_from_slice(&(set.records.len() as u32).to_le_bytes());
    for rec in &set.records {
        write_str(&mut out, &rec.id);
        write_str(&mut out, &rec.label);
        for v in rec.vector.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&out)?;
    Ok(())
}

fn write_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

/// Read an embedding file, auto-detecting text or binary by magic.
pub fn read_embeddings(path: &Path) -> Result<EmbeddingSet> {
    let bytes = fs::read(path).map_err(|e| Error::Data(format!("{}: {}", path.display(), e)))?;
    if bytes.starts_with(DWIE_BINARY_MAGIC) {
        read_embeddings_binary(&bytes)
            .map_err(|m| Error::Data(format!("{}: {}", path.display(), m)))
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::Data(format!("{}: not valid UTF-8", path.display())))?;
        read_embeddings_text(&text)
            .map_err(|m| Error::Data(format!("{}: {}", path.display(), m)))
    }
}

fn read_embeddings_text(text: &str) -> std::result::Result<EmbeddingSet, String> {
    let mut variant = String::new();
    let mut norm = String::new();
    let mut dim = 0usize;
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix("#!") {
            for field in header.trim().split('\t') {
                if let Some((k, v)) = field.split_once('=') {
                    match k {
                        "variant" => variant = v.to_string(),
                        "norm" => norm = v.to_string(),
                        "dim" => dim = v.parse().map_err(|_| format!("bad dim {v:?}"))?,
                        _ => return Err(format!("unknown header field {k:?}")),
                    }
                }
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let mut parts = line.splitn(3, '\t');
        let id = parts.next().unwrap_or_default();
        let label = parts.next().ok_or(format!("line {}: missing label", lineno + 1))?;
        let values = parts.next().ok_or(format!("line {}: missing values", lineno + 1))?;
        let vector: Vec<f64> = values
            .split(',')
            .map(|v| v.parse().map_err(|_| format!("line {}: bad float {v:?}", lineno + 1)))
            .collect::<std::result::Result<_, _>>()?;
        if dim == 0 {
            dim = vector.len();
        } else if vector.len() != dim {
            return Err(format!("line {}: dim {} != {}", lineno + 1, vector.len(), dim));
        }
        records.push(EmbeddingRecord {
            id: id.to_string(),
            label: label.to_string(),
            vector: Vector::from_vec(vector),
        });
    }
    Ok(EmbeddingSet { variant, norm, dim, records })
}

fn read_embeddings_binary(bytes: &[u8]) -> std::result::Result<EmbeddingSet, String> {
    let mut pos = DWIE_BINARY_MAGIC.len();
    let variant = read_str(bytes, &mut pos)?;
    let norm = read_str(bytes, &mut pos)?;
    let dim = read_u32(bytes, &mut pos)? as usize;
    let count = read_u32(bytes, &mut pos)? as usize;
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let id = read_str(bytes, &mut pos)?;
        let label = read_str(bytes, &mut pos)?;
        let mut values = Vec::with_capacity(dim);
        for _ in 0..dim {
            if pos + 8 > bytes.len() {
                return Err("truncated embedding payload".into());
            }
            let mut buf = [0u8; 8];
            buf.copy_from_slice(&bytes[pos..pos + 8]);
            values.push(f64::from_le_bytes(buf));
            pos += 8;
        }
        records.push(EmbeddingRecord { id, label, vector: Vector::from_vec(values) });
    }
    Ok(EmbeddingSet { variant, norm, dim, records })
}

fn read_u32(bytes: &[u8], pos: &mut usize) -> std::result::Result<u32, String> {
    if *pos + 4 > bytes.len() {
        return Err("truncated header".into());
    }
    let mut buf = [0u8; 4];
    buf.copy_from_slice(&bytes[*pos..*pos + 4]);
    *pos += 4;
    Ok(u32::from_le_bytes(buf))
}

fn read_str(bytes: &[u8], pos: &mut usize) -> std::result::Result<String, String> {
    let len = read_u32(bytes, pos)? as usize;
    if *pos + len > bytes.len() {
        return Err("truncated string".into());
    }
    let s = String::from_utf8(bytes[*pos..*pos + len].to_vec())
        .map_err(|_| "invalid UTF-8 string".to_string())?;
    *pos += len;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Full-matrix DP, independent of the rolling-row implementation.
    fn edit_distance_oracle(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut dp = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in dp.iter_mut().enumerate() {
            row[0] = i;
        }
        for j in 0..=b.len() {
            dp[0][j] = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let cost = usize::from(a[i - 1] != b[j - 1]);
                dp[i][j] = (dp[i - 1][j] + 1)
                    .min(dp[i][j - 1] + 1)
                    .min(dp[i - 1][j - 1] + cost);
            }
        }
        dp[a.len()][b.len()]
    }

    fn random_string(rng: &mut crate::rng::Rng, max_len: usize) -> String {
        let alphabet = ['a', 'b', 'c', 'd'];
        let len = rng.below(max_len + 1);
        (0..len).map(|_| alphabet[rng.below(alphabet.len())]).collect()
    }

    #[test]
    fn edit_distance_anchors() {
        assert_eq!(edit_distance("abc", "abc"), 0);
        assert_eq!(edit_distance("", "ab"), 2);
        assert_eq!(edit_distance("ab", ""), 2);
        assert_eq!(edit_distance("kitten", "sitting"), 3);
        assert_eq!(edit_distance_oracle("kitten", "sitting"), 3);
    }

    #[test]
    fn edit_distance_matches_oracle_on_1000_random_pairs() {
        let mut rng = crate::rng::Rng::new(2024);
        for _ in 0..1000 {
            let a = random_string(&mut rng, 12);
            let b = random_string(&mut rng, 12);
            assert_eq!(edit_distance(&a, &b), edit_distance_oracle(&a, &b), "{a:?} vs {b:?}");
        }
    }

    proptest! {
        #[test]
        fn edit_distance_is_a_metric(
            a in "[abc]{0,8}",
            b in "[abc]{0,8}",
            c in "[abc]{0,8}",
        ) {
            prop_assert_eq!(edit_distance(&a, &a), 0);
            prop_assert_eq!(edit_distance(&a, &b), edit_distance(&b, &a));
            let ab = edit_distance(&a, &b);
            let bc = edit_distance(&b, &c);
            let ac = edit_distance(&a, &c);
            prop_assert!(ac <= ab + bc);
            if a != b {
                prop_assert!(ab > 0);
            }
        }
    }

    #[test]
    fn ler_worked_examples() {
        // exact predictions
        let exact = label_error_rate([("abcd", "abcd"), ("xy", "xy")]).unwrap();
        assert_eq!(exact, 0.0);
        // lengths 4 and 6 with distances 1 and 2 -> 3/10
        let v = label_error_rate([("abcd", "abcx"), ("mnopqr", "mnopxx")]).unwrap();
        assert!((v - 0.3).abs() < 1e-15);
        // single truth "ab", empty prediction -> 1.0
        let v = label_error_rate([("ab", "")]).unwrap();
        assert_eq!(v, 1.0);
        // empty truth is an error
        assert!(label_error_rate([("", "x")]).is_err());
    }

    #[test]
    fn knn_identical_vector_ranks_first_with_zero_distance() {
        let index = vec![
            EmbeddingRecord { id: "a".into(), label: "x".into(), vector: Vector::from_vec(vec![1.0, 0.0]) },
            EmbeddingRecord { id: "b".into(), label: "y".into(), vector: Vector::from_vec(vec![0.0, 1.0]) },
            EmbeddingRecord { id: "c".into(), label: "x".into(), vector: Vector::from_vec(vec![0.5, 0.5]) },
        ];
        let res = knn_rank(&index, "q", &Vector::from_vec(vec![0.5, 0.5])).unwrap();
        assert_eq!(res.ranked[0].id, "c");
        assert_eq!(res.ranked[0].distance, 0.0);
        // distances nondecreasing
        for w in res.ranked.windows(2) {
            assert!(w[0].distance <= w[1].distance);
        }
    }

    #[test]
    fn knn_excludes_query_and_breaks_ties_by_id() {
        let e1 = Vector::from_vec(vec![1.0, 0.0]);
        let index = vec![
            EmbeddingRecord { id: "self".into(), label: "x".into(), vector: e1.clone() },
            EmbeddingRecord { id: "z-far".into(), label: "y".into(), vector: Vector::from_vec(vec![-1.0, 0.0]) },
            EmbeddingRecord { id: "b-tied".into(), label: "y".into(), vector: Vector::from_vec(vec![0.0, 1.0]) },
            EmbeddingRecord { id: "a-tied".into(), label: "y".into(), vector: Vector::from_vec(vec![0.0, -1.0]) },
        ];
        let res = knn_rank(&index, "self", &e1).unwrap();
        assert!(res.ranked.iter().all(|r| r.id != "self"));
        // the two tied items (distance sqrt(2)) come in id order
        assert_eq!(res.ranked[0].id, "a-tied");
        assert_eq!(res.ranked[1].id, "b-tied");
        assert_eq!(res.ranked[2].id, "z-far");
    }

    #[test]
    fn knn_matches_naive_sort_oracle() {
        let mut rng = crate::rng::Rng::new(5);
        let index: Vec<EmbeddingRecord> = (0..20)
            .map(|i| EmbeddingRecord {
                id: format!("item{i:02}"),
                label: "w".into(),
                vector: Vector::from_vec((0..4).map(|_| rng.uniform(-1.0, 1.0)).collect()),
            })
            .collect();
        let query = Vector::from_vec((0..4).map(|_| rng.uniform(-1.0, 1.0)).collect());
        let res = knn_rank(&index, "query", &query).unwrap();

        // oracle: compute distances independently and sort
        let mut oracle: Vec<(f64, String)> = index
            .iter()
            .map(|it| {
                let d: f64 = it
                    .vector
                    .as_slice()
                    .iter()
                    .zip(query.as_slice())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                (d, it.id.clone())
            })
            .collect();
        oracle.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then_with(|| x.1.cmp(&y.1)));
        assert_eq!(res.ranked.len(), 20);
        for (got, want) in res.ranked.iter().zip(&oracle) {
            assert_eq!(got.id, want.1);
            assert_eq!(got.distance, want.0);
        }
    }

    proptest! {
        #[test]
        fn knn_order_invariant_under_positive_scaling(scale in 0.001f64..1000.0, seed in 0u64..100) {
            let mut rng = crate::rng::Rng::new(seed);
            let index: Vec<EmbeddingRecord> = (0..8)
                .map(|i| EmbeddingRecord {
                    id: format!("i{i}"),
                    label: "w".into(),
                    vector: Vector::from_vec((0..3).map(|_| rng.uniform(-1.0, 1.0)).collect()),
                })
                .collect();
            let query = Vector::from_vec((0..3).map(|_| rng.uniform(-1.0, 1.0)).collect());
            let base = knn_rank(&index, "q", &query).unwrap();

            let scaled_index: Vec<EmbeddingRecord> = index
                .iter()
                .map(|it| EmbeddingRecord {
                    id: it.id.clone(),
                    label: it.label.clone(),
                    vector: it.vector.scale(scale),
                })
                .collect();
            let scaled = knn_rank(&scaled_index, "q", &query.scale(scale)).unwrap();
            let ids = |r: &RetrievalResult| r.ranked.iter().map(|x| x.id.clone()).collect::<Vec<_>>();
            prop_assert_eq!(ids(&base), ids(&scaled));
        }
    }

    fn labels_of(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(i, l)| (i.to_string(), l.to_string())).collect()
    }

    fn result_with(query: &str, ids: &[&str]) -> RetrievalResult {
        RetrievalResult {
            query_id: query.into(),
            ranked: ids
                .iter()
                .enumerate()
                .map(|(k, id)| RankedItem { id: id.to_string(), distance: k as f64 })
                .collect(),
        }
    }

    #[test]
    fn map_all_relevant_on_top_is_one() {
        let labels = labels_of(&[("q", "w"), ("a", "w"), ("b", "w"), ("c", "v")]);
        let res = vec![result_with("q", &["a", "b", "c"])];
        let report = mean_average_precision(&res, &labels, 10).unwrap();
        assert_eq!(report.map, 1.0);
        assert_eq!(report.queries_used, 1);
    }

    #[test]
    fn map_worked_example_five_sixths() {
        // R = 2, relevant at ranks 1 and 3, n = 10 -> (1 + 2/3)/2 = 5/6
        let labels = labels_of(&[
            ("q", "w"),
            ("r1", "w"),
            ("x1", "v"),
            ("r2", "w"),
            ("x2", "v"),
        ]);
        let res = vec![result_with("q", &["r1", "x1", "r2", "x2"])];
        let report = mean_average_precision(&res, &labels, 10).unwrap();
        assert!((report.map - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn map_zero_when_no_relevant_in_top_n() {
        let labels = labels_of(&[("q", "w"), ("x1", "v"), ("x2", "v"), ("r", "w")]);
        let res = vec![result_with("q", &["x1", "x2", "r"])];
        let report = mean_average_precision(&res, &labels, 2).unwrap();
        assert_eq!(report.map, 0.0);
    }

    #[test]
    fn map_excludes_zero_relevant_queries_with_count() {
        let labels = labels_of(&[("q1", "w"), ("q2", "unique"), ("a", "w"), ("b", "v")]);
        let res = vec![result_with("q1", &["a", "b"]), result_with("q2", &["a", "b"])];
        let report = mean_average_precision(&res, &labels, 5).unwrap();
        assert_eq!(report.queries_used, 1);
        assert_eq!(report.queries_excluded, 1);
        assert_eq!(report.map, 1.0);
    }

    #[test]
    fn map_invariant_to_query_order() {
        let labels = labels_of(&[
            ("q1", "w"), ("q2", "v"), ("a", "w"), ("b", "v"), ("c", "w"),
        ]);
        let r1 = result_with("q1", &["a", "b", "c"]);
        let r2 = result_with("q2", &["a", "b", "c"]);
        let fwd = mean_average_precision(&[r1.clone(), r2.clone()], &labels, 3).unwrap();
        let rev = mean_average_precision(&[r2, r1], &labels, 3).unwrap();
        assert_eq!(fwd.map, rev.map);
    }

    #[test]
    fn norms_behave() {
        let mut v = Vector::from_vec(vec![3.0, -4.0]);
        VecNorm::L2.apply(&mut v);
        assert!((v.norm_l2() - 1.0).abs() < 1e-12);
        let mut v = Vector::from_vec(vec![3.0, -1.0]);
        VecNorm::L1.apply(&mut v);
        assert!((v.norm_l1() - 1.0).abs() < 1e-12);
        let mut z = Vector::zeros(4);
        VecNorm::L2.apply(&mut z);
        assert_eq!(z, Vector::zeros(4));
    }

    #[test]
    fn embedding_files_roundtrip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let set = EmbeddingSet {
            variant: "c1-c2".into(),
            norm: "l2".into(),
            dim: 3,
            records: vec![
                EmbeddingRecord {
                    id: "img1".into(),
                    label: "word".into(),
                    vector: Vector::from_vec(vec![0.1, -2.5e-17, 3.0]),
                },
                EmbeddingRecord {
                    id: "img2".into(),
                    label: "née".into(),
                    vector: Vector::from_vec(vec![1.0 / 3.0, f64::MIN_POSITIVE, -0.0]),
                },
            ],
        };
        let writers: [(&str, fn(&Path, &EmbeddingSet) -> Result<()>); 2] =
            [("t.tsv", write_embeddings_text), ("t.bin", write_embeddings_binary)];
        for (name, write) in writers {
            let path = dir.path().join(name);
            write(&path, &set).unwrap();
            let back = read_embeddings(&path).unwrap();
            assert_eq!(back.variant, set.variant);
            assert_eq!(back.norm, set.norm);
            assert_eq!(back.dim, 3);
            assert_eq!(back.records.len(), 2);
            for (a, b) in back.records.iter().zip(&set.records) {
                assert_eq!(a.id, b.id);
                assert_eq!(a.label, b.label);
                for (x, y) in a.vector.as_slice().iter().zip(b.vector.as_slice()) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }
}
