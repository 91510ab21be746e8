//! Document data model and JSONL corpus I/O.
//!
//! One document per line, UTF-8, `\n` terminated. Field order on output is
//! fixed by the struct declarations so that save is deterministic.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O error on {path}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: malformed JSON: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: document {doc_id}: {violation}")]
    Invalid {
        line: usize,
        doc_id: String,
        violation: String,
    },
    #[error("line {line}: duplicate doc_id {doc_id}")]
    DuplicateDoc { line: usize, doc_id: String },
}

/// An event mention, anchored at the syntactic head of a predicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventMention {
    pub id: String,
    pub head_lemma: String,
    pub surface: String,
    pub sentence_index: usize,
    pub frame: Option<String>,
    pub salient: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityMention {
    pub id: String,
    pub entity_key: String,
    pub sentence_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub num_sentences: usize,
    pub events: Vec<EventMention>,
    pub entities: Vec<EntityMention>,
    pub abstract_lemmas: Option<BTreeSet<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
    #[default]
    Unsplit,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub split: Split,
}

impl Document {
    /// True when every event carries a gold label. Empty documents count as labeled.
    pub fn is_labeled(&self) -> bool {
        self.events.iter().all(|e| e.salient.is_some())
    }

    /// Gold labels in event order; unlabeled events read as non-salient.
    pub fn labels(&self) -> Vec<bool> {
        self.events
            .iter()
            .map(|e| e.salient.unwrap_or(false))
            .collect()
    }

    pub fn num_salient(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.salient == Some(true))
            .count()
    }
}

impl Corpus {
    pub fn new(documents: Vec<Document>, split: Split) -> Self {
        Self { documents, split }
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }
}

/// Lists every invariant violation in `doc`. Empty means the document is valid.
pub fn validate_document(doc: &Document) -> Vec<String> {
    let mut out = Vec::new();
    if doc.num_sentences == 0 {
        out.push("num_sentences: must be positive".to_string());
    }
    let mut seen: HashSet<&str> = HashSet::new();
    let mut prev_sentence = 0usize;
    let mut labeled = 0usize;
    for (i, ev) in doc.events.iter().enumerate() {
        if ev.sentence_index >= doc.num_sentences {
            out.push(format!(
                "event {}: sentence_index out of range ({} >= {})",
                ev.id, ev.sentence_index, doc.num_sentences
            ));
        }
        if ev.head_lemma.is_empty() {
            out.push(format!("event {}: head_lemma is empty", ev.id));
        } else if ev.head_lemma.chars().any(char::is_whitespace) {
            out.push(format!("event {}: head_lemma contains whitespace", ev.id));
        }
        if !seen.insert(ev.id.as_str()) {
            out.push(format!("event {}: duplicate id", ev.id));
        }
        if i > 0 && ev.sentence_index < prev_sentence {
            out.push(format!(
                "event {}: sentence_index not in discourse order",
                ev.id
            ));
        }
        prev_sentence = ev.sentence_index;
        if ev.salient.is_some() {
            labeled += 1;
        }
    }
    if labeled != 0 && labeled != doc.events.len() {
        out.push(format!(
            "events: salient set on {} of {} events (labels must be all or none)",
            labeled,
            doc.events.len()
        ));
    }
    for en in &doc.entities {
        if en.sentence_index >= doc.num_sentences {
            out.push(format!(
                "entity {}: sentence_index out of range ({} >= {})",
                en.id, en.sentence_index, doc.num_sentences
            ));
        }
        if en.entity_key.is_empty() {
            out.push(format!("entity {}: entity_key is empty", en.id));
        }
        if !seen.insert(en.id.as_str()) {
            out.push(format!("entity {}: duplicate id", en.id));
        }
    }
    out
}

/// Parses one JSONL line into a validated document.
pub fn parse_document_line(line: &str, line_no: usize) -> Result<Document, CorpusError> {
    let doc: Document = serde_json::from_str(line).map_err(|e| CorpusError::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    if let Some(violation) = validate_document(&doc).into_iter().next() {
        return Err(CorpusError::Invalid {
            line: line_no,
            doc_id: doc.doc_id,
            violation,
        });
    }
    Ok(doc)
}

/// Reads a corpus from any buffered reader. Line numbers in errors are 1-based.
pub fn read_corpus<R: BufRead>(reader: R, origin: &str) -> Result<Corpus, CorpusError> {
    let mut documents = Vec::new();
    let mut ids: HashSet<String> = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: origin.to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let doc = parse_document_line(&line, line_no)?;
        if !ids.insert(doc.doc_id.clone()) {
            return Err(CorpusError::DuplicateDoc {
                line: line_no,
                doc_id: doc.doc_id,
            });
        }
        documents.push(doc);
    }
    Ok(Corpus::new(documents, Split::Unsplit))
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_corpus(BufReader::new(file), &path.display().to_string())
}

pub fn write_corpus<W: Write>(corpus: &Corpus, mut w: W) -> io::Result<()> {
    for doc in &corpus.documents {
        serde_json::to_writer(&mut w, doc)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_corpus(corpus, BufWriter::new(file)).map_err(io_err)
}
