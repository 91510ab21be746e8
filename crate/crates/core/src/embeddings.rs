//! Vocabularies with unknown-token fallback, dense embedding tables, cosine
//! similarity, and word2vec-style text vector files.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::numeric::Real;
use crate::rng::seeded;

pub const UNKNOWN_TOKEN: &str = "<unk>";
pub const DEFAULT_DIM: usize = 128;
pub const DEFAULT_MIN_COUNT: usize = 2;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("pretrained vectors have dim {found}, expected {expected}")]
    DimMismatch { expected: usize, found: usize },
    #[error("embedding dim must be positive")]
    ZeroDim,
    #[error("{path}: line {line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
    #[error("I/O error on {path}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VocabField {
    EventLemma,
    EntityKey,
}

/// Token to dense index map. Lookup is total: unseen tokens resolve to
/// `unknown_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    unknown_index: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    tokens: Vec<String>,
    unknown_index: usize,
}

impl From<VocabRepr> for Vocabulary {
    fn from(r: VocabRepr) -> Self {
        let index = r
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            tokens: r.tokens,
            index,
            unknown_index: r.unknown_index,
        }
    }
}

impl From<Vocabulary> for VocabRepr {
    fn from(v: Vocabulary) -> Self {
        VocabRepr {
            tokens: v.tokens,
            unknown_index: v.unknown_index,
        }
    }
}

impl Vocabulary {
    /// Unknown token at index 0, then `tokens` in the given order (duplicates
    /// and the reserved unknown token are skipped).
    pub fn from_tokens<I: IntoIterator<Item = String>>(tokens: I) -> Self {
        let mut all = vec![UNKNOWN_TOKEN.to_string()];
        let mut index = HashMap::new();
        index.insert(UNKNOWN_TOKEN.to_string(), 0);
        for t in tokens {
            if !index.contains_key(&t) {
                index.insert(t.clone(), all.len());
                all.push(t);
            }
        }
        Vocabulary {
            tokens: all,
            index,
            unknown_index: 0,
        }
    }

    pub fn lookup(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(self.unknown_index)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token) && token != UNKNOWN_TOKEN
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn unknown_index(&self) -> usize {
        self.unknown_index
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Counts tokens of `field` over the corpus; tokens seen at least `min_count`
/// times get their own index, ordered by descending count then lexicographically.
pub fn build_vocab(corpus: &Corpus, field: VocabField, min_count: usize) -> Vocabulary {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &corpus.documents {
        match field {
            VocabField::EventLemma => {
                for e in &doc.events {
                    *counts.entry(e.head_lemma.as_str()).or_default() += 1;
                }
            }
            VocabField::EntityKey => {
                for e in &doc.entities {
                    *counts.entry(e.entity_key.as_str()).or_default() += 1;
                }
            }
        }
    }
    let mut kept: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(t, c)| c >= min_count.max(1) && t != UNKNOWN_TOKEN)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Vocabulary::from_tokens(kept.into_iter().map(|(t, _)| t.to_string()))
}

/// Row-major `size x dim` matrix of embeddings indexed through a vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "TableRepr", into = "TableRepr")]
pub struct EmbeddingTable {
    pub vocab: Vocabulary,
    pub dim: usize,
    pub vectors: Vec<f64>,
    pub trainable: bool,
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    vocab: Vocabulary,
    dim: usize,
    trainable: bool,
    vectors: Vec<Vec<f64>>,
}

impl From<TableRepr> for EmbeddingTable {
    fn from(r: TableRepr) -> Self {
        EmbeddingTable {
            vocab: r.vocab,
            dim: r.dim,
            vectors: r.vectors.into_iter().flatten().collect(),
            trainable: r.trainable,
        }
    }
}

impl From<EmbeddingTable> for TableRepr {
    fn from(t: EmbeddingTable) -> Self {
        let dim = t.dim.max(1);
        TableRepr {
            vectors: t.vectors.chunks(dim).map(<[f64]>::to_vec).collect(),
            vocab: t.vocab,
            dim: t.dim,
            trainable: t.trainable,
        }
    }
}

impl EmbeddingTable {
    pub fn row(&self, index: usize) -> &[f64] {
        &self.vectors[index * self.dim..(index + 1) * self.dim]
    }

    pub fn row_mut(&mut self, index: usize) -> &mut [f64] {
        &mut self.vectors[index * self.dim..(index + 1) * self.dim]
    }

    pub fn index_of(&self, token: &str) -> usize {
        self.vocab.lookup(token)
    }

    pub fn lookup(&self, token: &str) -> &[f64] {
        self.row(self.index_of(token))
    }

    pub fn rows(&self) -> usize {
        self.vocab.size()
    }

    /// Checks the shape and finiteness invariants.
    pub fn is_consistent(&self) -> bool {
        self.dim > 0
            && self.vectors.len() == self.vocab.size() * self.dim
            && self.vectors.iter().all(|x| x.is_finite())
    }
}

/// Pretrained vectors keyed by token. A `BTreeMap` keeps file output ordered.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WordVectors {
    pub dim: usize,
    pub vectors: BTreeMap<String, Vec<f64>>,
}

impl WordVectors {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }
}

/// Builds a table for `vocab`. Every row is first drawn uniformly from
/// `[-0.5/dim, 0.5/dim]`; rows whose token is in `pretrained` are then
/// overwritten with the pretrained vector.
pub fn init_embeddings(
    vocab: &Vocabulary,
    dim: usize,
    seed: u64,
    pretrained: Option<&WordVectors>,
) -> Result<EmbeddingTable, EmbeddingError> {
    if dim == 0 {
        return Err(EmbeddingError::ZeroDim);
    }
    if let Some(p) = pretrained {
        if !p.is_empty() && p.dim != dim {
            return Err(EmbeddingError::DimMismatch {
                expected: dim,
                found: p.dim,
            });
        }
    }
    let mut rng = seeded(seed);
    let half = 0.5 / dim as f64;
    let mut vectors: Vec<f64> = (0..vocab.size() * dim)
        .map(|_| rng.gen_range(-half..=half))
        .collect();
    if let Some(p) = pretrained {
        for (i, token) in vocab.tokens().iter().enumerate() {
            if i == vocab.unknown_index() {
                continue;
            }
            if let Some(v) = p.get(token) {
                vectors[i * dim..(i + 1) * dim].copy_from_slice(v);
            }
        }
    }
    Ok(EmbeddingTable {
        vocab: vocab.clone(),
        dim,
        vectors,
        trainable: true,
    })
}

pub fn dot<T: Real>(u: &[T], v: &[T]) -> T {
    let mut s = T::zero();
    for (&a, &b) in u.iter().zip(v) {
        s += a * b;
    }
    s
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(cosine_unchecked(u, v))
}

pub(crate) fn cosine_unchecked<T: Real>(u: &[T], v: &[T]) -> T {
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu == T::zero() || nv == T::zero() {
        return T::zero();
    }
    dot(u, v) / (nu * nv)
}

/// Reads the word2vec text format: a `count dim` header, then one
/// `token v1 .. vdim` row per line. Later duplicates replace earlier ones.
pub fn load_word_vectors(path: impl AsRef<Path>) -> Result<WordVectors, EmbeddingError> {
    let path = path.as_ref();
    let p = path.display().to_string();
    let file = File::open(path).map_err(|source| EmbeddingError::Io {
        path: p.clone(),
        source,
    })?;
    read_word_vectors(BufReader::new(file), &p)
}

pub fn read_word_vectors<R: BufRead>(reader: R, origin: &str) -> Result<WordVectors, EmbeddingError> {
    let fmt = |line: usize, message: String| EmbeddingError::Format {
        path: origin.to_string(),
        line,
        message,
    };
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => l.map_err(|source| EmbeddingError::Io {
            path: origin.to_string(),
            source,
        })?,
        None => return Err(fmt(1, "missing header".into())),
    };
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(fmt(1, format!("header must be 'count dim', got {header:?}")));
    }
    let _count: usize = parts[0]
        .parse()
        .map_err(|_| fmt(1, format!("bad count {:?}", parts[0])))?;
    let dim: usize = parts[1]
        .parse()
        .map_err(|_| fmt(1, format!("bad dim {:?}", parts[1])))?;
    let mut vectors = BTreeMap::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line.map_err(|source| EmbeddingError::Io {
            path: origin.to_string(),
            source,
        })?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values = fields
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| fmt(line_no, format!("bad value {f:?}")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if values.len() != dim {
            return Err(fmt(
                line_no,
                format!("ragged row: {} values, expected {dim}", values.len()),
            ));
        }
        vectors.insert(token.to_string(), values);
    }
    Ok(WordVectors { dim, vectors })
}

/// Writes vectors in token order. Values use the shortest decimal that
/// parses back to the same `f64`.
pub fn write_word_vectors<W: Write>(vectors: &WordVectors, mut w: W) -> io::Result<()> {
    writeln!(w, "{} {}", vectors.len(), vectors.dim)?;
    for (token, v) in &vectors.vectors {
        w.write_all(token.as_bytes())?;
        for x in v {
            write!(w, " {x:?}")?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn save_word_vectors(vectors: &WordVectors, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
    let path = path.as_ref();
    let io_err = |source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_word_vectors(vectors, BufWriter::new(file)).map_err(io_err)
}
