//! Synthetic corpora with planted salience structure.
//!
//! Each document draws a topic. Salient events use lemmas from that topic's
//! pool, whose vectors share a common direction, so their pairwise cosine sits
//! near `cosine_gap`. Non-salient events come from a background pool of
//! isotropic vectors, except for a few near-synonym clusters whose members are
//! almost parallel, and a handful of events from a second, distractor topic.
//! Clusters make the average-similarity voting features ambiguous while
//! leaving the per-bin similarity counts distinct. Distractor events are as
//! coherent as the salient ones; what tells them apart is that more of the
//! document's entities lean toward the main topic.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document, EntityMention, EventMention, Split};
use crate::embeddings::{cosine, WordVectors};
use crate::rng::{derive_seed, seeded, Rng};

fn d_num_train() -> usize {
    500
}
fn d_num_eval() -> usize {
    100
}
fn d_events() -> usize {
    20
}
fn d_entities() -> usize {
    30
}
fn d_dim() -> usize {
    128
}
fn d_gap() -> f64 {
    0.4
}
fn d_topics() -> usize {
    25
}
fn d_topic_pool() -> usize {
    12
}
fn d_salient_min() -> usize {
    5
}
fn d_salient_max() -> usize {
    8
}
fn d_background() -> usize {
    800
}
fn d_families() -> usize {
    60
}
fn d_family_size() -> usize {
    4
}
fn d_cluster_cosine() -> f64 {
    0.87
}
fn d_clusters_per_doc() -> usize {
    1
}
fn d_distractor_min() -> usize {
    3
}
fn d_distractor_max() -> usize {
    4
}
fn d_distractor_entities() -> usize {
    2
}
fn d_cluster_draw() -> usize {
    3
}
fn d_repeats() -> usize {
    2
}
fn d_topic_entities() -> usize {
    4
}
fn d_entity_weight() -> f64 {
    0.2
}
fn d_entity_pool() -> usize {
    1500
}
fn d_topic_entity_pool() -> usize {
    10
}
fn d_sentences() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_num_train")]
    pub num_train: usize,
    #[serde(default = "d_num_eval")]
    pub num_dev: usize,
    #[serde(default = "d_num_eval")]
    pub num_test: usize,
    #[serde(default = "d_events")]
    pub events_per_doc: usize,
    #[serde(default = "d_entities")]
    pub entities_per_doc: usize,
    #[serde(default = "d_dim")]
    pub dim: usize,
    /// Expected pairwise cosine between lemmas of one topic pool.
    #[serde(default = "d_gap")]
    pub cosine_gap: f64,
    #[serde(default = "d_topics")]
    pub num_topics: usize,
    #[serde(default = "d_topic_pool")]
    pub topic_pool_size: usize,
    #[serde(default = "d_salient_min")]
    pub salient_min: usize,
    #[serde(default = "d_salient_max")]
    pub salient_max: usize,
    #[serde(default = "d_background")]
    pub background_pool_size: usize,
    #[serde(default = "d_families")]
    pub cluster_families: usize,
    #[serde(default = "d_family_size")]
    pub cluster_family_size: usize,
    /// Expected pairwise cosine inside a near-synonym family.
    #[serde(default = "d_cluster_cosine")]
    pub cluster_cosine: f64,
    #[serde(default = "d_clusters_per_doc")]
    pub clusters_per_doc: usize,
    /// Non-salient events drawn from a second topic, inclusive range.
    #[serde(default = "d_distractor_min")]
    pub distractor_min: usize,
    #[serde(default = "d_distractor_max")]
    pub distractor_max: usize,
    /// Members of a family placed in a document per cluster.
    #[serde(default = "d_cluster_draw")]
    pub cluster_draw: usize,
    /// Mentions of one repeated background lemma per document.
    #[serde(default = "d_repeats")]
    pub background_repeats: usize,
    #[serde(default = "d_topic_entities")]
    pub topic_entities_per_doc: usize,
    #[serde(default = "d_distractor_entities")]
    pub distractor_entities_per_doc: usize,
    /// Squared cosine between a topic entity and its topic direction.
    #[serde(default = "d_entity_weight")]
    pub entity_topic_weight: f64,
    #[serde(default = "d_entity_pool")]
    pub entity_pool_size: usize,
    #[serde(default = "d_topic_entity_pool")]
    pub topic_entity_pool_size: usize,
    #[serde(default = "d_sentences")]
    pub sentences_per_doc: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.dim == 0 {
            return Err("dim must be positive".into());
        }
        if !(self.cosine_gap > 0.0 && self.cosine_gap < 1.0) {
            return Err("cosine_gap must lie in (0, 1)".into());
        }
        if !(self.cluster_cosine > 0.0 && self.cluster_cosine < 1.0) {
            return Err("cluster_cosine must lie in (0, 1)".into());
        }
        if !(0.0..1.0).contains(&self.entity_topic_weight) {
            return Err("entity_topic_weight must lie in [0, 1)".into());
        }
        if self.salient_min == 0 || self.salient_min > self.salient_max {
            return Err("need 0 < salient_min <= salient_max".into());
        }
        if self.cluster_draw > self.cluster_family_size {
            return Err("cluster_draw exceeds cluster_family_size".into());
        }
        if self.distractor_min > self.distractor_max {
            return Err("need distractor_min <= distractor_max".into());
        }
        if (self.distractor_max > 0 || self.distractor_entities_per_doc > 0) && self.num_topics < 2 {
            return Err("distractor events need at least two topics".into());
        }
        let fixed = self.salient_max
            + self.distractor_max
            + self.clusters_per_doc * self.cluster_draw
            + self.background_repeats;
        if fixed > self.events_per_doc {
            return Err(format!(
                "events_per_doc = {} cannot hold {} salient, distractor, clustered and repeated events",
                self.events_per_doc, fixed
            ));
        }
        if self.topic_entities_per_doc + self.distractor_entities_per_doc > self.entities_per_doc {
            return Err("topic and distractor entities exceed entities_per_doc".into());
        }
        let pools = [
            self.num_topics,
            self.topic_pool_size,
            self.background_pool_size,
            self.entity_pool_size,
            self.sentences_per_doc,
        ];
        if pools.contains(&0) || (self.clusters_per_doc > 0 && self.cluster_families < self.clusters_per_doc) {
            return Err("pools and sentence count must be non-empty".into());
        }
        if self.topic_entities_per_doc + self.distractor_entities_per_doc > 0 && self.topic_entity_pool_size == 0 {
            return Err("topic_entity_pool_size must be positive".into());
        }
        Ok(())
    }
}

/// Lemma pools, kept so the planted similarity gap can be measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthPools {
    pub topic_lemmas: Vec<Vec<String>>,
    /// Background and near-synonym lemmas.
    pub nonsalient_lemmas: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub train: Corpus,
    pub dev: Corpus,
    pub test: Corpus,
    pub event_vectors: WordVectors,
    pub entity_vectors: WordVectors,
    pub pools: SynthPools,
}

fn gaussian_unit(rng: &mut Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    scaled(&v, 1.0)
}

fn scaled(v: &[f64], norm: f64) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x * norm / n).collect()
}

/// Unit vector with squared cosine `weight` to `anchor` in expectation.
fn leaning(rng: &mut Rng, anchor: &[f64], weight: f64) -> Vec<f64> {
    let g = gaussian_unit(rng, anchor.len());
    let (a, b) = (weight.sqrt(), (1.0 - weight).sqrt());
    let v: Vec<f64> = anchor.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
    scaled(&v, 1.0)
}

struct Pools {
    topics: Vec<Vec<String>>,
    topic_entities: Vec<Vec<String>>,
    background: Vec<String>,
    families: Vec<Vec<String>>,
    entities: Vec<String>,
    event_vectors: WordVectors,
    entity_vectors: WordVectors,
}

fn build_pools(cfg: &SynthConfig) -> Pools {
    let mut rng = seeded(derive_seed(cfg.seed, &[0]));
    let dim = cfg.dim;
    // Rows are stored with norm sqrt(dim), i.e. entries of unit variance.
    let norm = (dim as f64).sqrt();
    let mut ev = WordVectors {
        dim,
        ..WordVectors::default()
    };
    let mut en = WordVectors {
        dim,
        ..WordVectors::default()
    };
    let mut topics = Vec::new();
    let mut topic_entities = Vec::new();
    for t in 0..cfg.num_topics {
        let dir = gaussian_unit(&mut rng, dim);
        let mut lemmas = Vec::new();
        for k in 0..cfg.topic_pool_size {
            let name = format!("topic{t}_{k}");
            ev.vectors.insert(name.clone(), scaled(&leaning(&mut rng, &dir, cfg.cosine_gap), norm));
            lemmas.push(name);
        }
        topics.push(lemmas);
        let mut keys = Vec::new();
        for k in 0..cfg.topic_entity_pool_size {
            let name = format!("topic{t}_ent{k}");
            en.vectors.insert(
                name.clone(),
                scaled(&leaning(&mut rng, &dir, cfg.entity_topic_weight), norm),
            );
            keys.push(name);
        }
        topic_entities.push(keys);
    }
    let mut background = Vec::new();
    for k in 0..cfg.background_pool_size {
        let name = format!("bg{k}");
        ev.vectors.insert(name.clone(), scaled(&gaussian_unit(&mut rng, dim), norm));
        background.push(name);
    }
    let mut families = Vec::new();
    for f in 0..cfg.cluster_families {
        let center = gaussian_unit(&mut rng, dim);
        let mut members = Vec::new();
        for m in 0..cfg.cluster_family_size {
            let name = format!("syn{f}_{m}");
            ev.vectors.insert(name.clone(), scaled(&leaning(&mut rng, &center, cfg.cluster_cosine), norm));
            members.push(name);
        }
        families.push(members);
    }
    let mut entities = Vec::new();
    for k in 0..cfg.entity_pool_size {
        let name = format!("ent{k}");
        en.vectors.insert(name.clone(), scaled(&gaussian_unit(&mut rng, dim), norm));
        entities.push(name);
    }
    Pools {
        topics,
        topic_entities,
        background,
        families,
        entities,
        event_vectors: ev,
        entity_vectors: en,
    }
}

fn make_document(pools: &Pools, cfg: &SynthConfig, doc_id: String, rng: &mut Rng) -> Document {
    let topic = rng.gen_range(0..pools.topics.len());
    let n_salient = rng.gen_range(cfg.salient_min..=cfg.salient_max);
    let mut lemmas: Vec<(String, bool)> = Vec::with_capacity(cfg.events_per_doc);
    for _ in 0..n_salient {
        let pool = &pools.topics[topic];
        lemmas.push((pool[rng.gen_range(0..pool.len())].clone(), true));
    }
    let n_distractor = rng.gen_range(cfg.distractor_min..=cfg.distractor_max);
    let distractor = if n_distractor > 0 || cfg.distractor_entities_per_doc > 0 {
        let d = rng.gen_range(0..pools.topics.len() - 1);
        Some(if d >= topic { d + 1 } else { d })
    } else {
        None
    };
    if let Some(d) = distractor {
        let pool = &pools.topics[d];
        for _ in 0..n_distractor {
            lemmas.push((pool[rng.gen_range(0..pool.len())].clone(), false));
        }
    }
    let mut families: Vec<usize> = (0..pools.families.len()).collect();
    families.shuffle(rng);
    for &f in families.iter().take(cfg.clusters_per_doc) {
        for m in pools.families[f].choose_multiple(rng, cfg.cluster_draw) {
            lemmas.push((m.clone(), false));
        }
    }
    let mut background = pools.background.choose_multiple(rng, cfg.events_per_doc).cloned();
    if cfg.background_repeats > 0 {
        let repeated = background.next().expect("background pool is non-empty");
        for _ in 0..cfg.background_repeats {
            lemmas.push((repeated.clone(), false));
        }
    }
    while lemmas.len() < cfg.events_per_doc {
        let lemma = match background.next() {
            Some(l) => l,
            None => pools.background[rng.gen_range(0..pools.background.len())].clone(),
        };
        lemmas.push((lemma, false));
    }

    let mut placed: Vec<(usize, String, bool)> = lemmas
        .into_iter()
        .map(|(l, s)| (rng.gen_range(0..cfg.sentences_per_doc), l, s))
        .collect();
    placed.shuffle(rng);
    placed.sort_by_key(|p| p.0);
    let abstract_lemmas: BTreeSet<String> = placed.iter().filter(|p| p.2).map(|p| p.1.clone()).collect();
    let events = placed
        .into_iter()
        .enumerate()
        .map(|(i, (sentence_index, lemma, salient))| EventMention {
            id: format!("e{i}"),
            surface: lemma.clone(),
            head_lemma: lemma,
            sentence_index,
            frame: None,
            salient: Some(salient),
        })
        .collect();

    let mut keys: Vec<String> = Vec::with_capacity(cfg.entities_per_doc);
    let topical = &pools.topic_entities[topic];
    for _ in 0..cfg.topic_entities_per_doc {
        keys.push(topical[rng.gen_range(0..topical.len())].clone());
    }
    if let Some(d) = distractor {
        let pool = &pools.topic_entities[d];
        for _ in 0..cfg.distractor_entities_per_doc {
            keys.push(pool[rng.gen_range(0..pool.len())].clone());
        }
    }
    while keys.len() < cfg.entities_per_doc {
        keys.push(pools.entities[rng.gen_range(0..pools.entities.len())].clone());
    }
    let mut placed: Vec<(usize, String)> = keys
        .into_iter()
        .map(|k| (rng.gen_range(0..cfg.sentences_per_doc), k))
        .collect();
    placed.sort_by_key(|p| p.0);
    let entities = placed
        .into_iter()
        .enumerate()
        .map(|(i, (sentence_index, entity_key))| EntityMention {
            id: format!("n{i}"),
            entity_key,
            sentence_index,
        })
        .collect();

    Document {
        doc_id,
        num_sentences: cfg.sentences_per_doc,
        events,
        entities,
        abstract_lemmas: Some(abstract_lemmas),
    }
}

/// Generates the three splits and the pretrained vectors. Fully determined by
/// `cfg` (including its seed).
pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput, String> {
    cfg.validate()?;
    let pools = build_pools(cfg);
    let split = |split: Split, tag: &str, stream: u64, n: usize| {
        let documents = (0..n)
            .map(|i| {
                let mut rng = seeded(derive_seed(cfg.seed, &[1, stream, i as u64]));
                make_document(&pools, cfg, format!("{tag}-{i:05}"), &mut rng)
            })
            .collect();
        Corpus::new(documents, split)
    };
    let train = split(Split::Train, "train", 0, cfg.num_train);
    let dev = split(Split::Dev, "dev", 1, cfg.num_dev);
    let test = split(Split::Test, "test", 2, cfg.num_test);
    let nonsalient_lemmas = pools
        .background
        .iter()
        .chain(pools.families.iter().flatten())
        .cloned()
        .collect();
    Ok(SynthOutput {
        train,
        dev,
        test,
        pools: SynthPools {
            topic_lemmas: pools.topics,
            nonsalient_lemmas,
        },
        event_vectors: pools.event_vectors,
        entity_vectors: pools.entity_vectors,
    })
}

fn mean_pairwise_cosine(vectors: &WordVectors, lemmas: &[String]) -> (f64, usize) {
    let rows: Vec<&[f64]> = lemmas.iter().filter_map(|l| vectors.get(l)).collect();
    let (mut sum, mut n) = (0.0, 0usize);
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            sum += cosine(rows[i], rows[j]).unwrap_or(0.0);
            n += 1;
        }
    }
    (sum, n)
}

/// Mean pairwise cosine within topic pools minus the mean pairwise cosine
/// over the non-salient pool.
pub fn measured_gap(out: &SynthOutput) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for pool in &out.pools.topic_lemmas {
        let (ps, pn) = mean_pairwise_cosine(&out.event_vectors, pool);
        s += ps;
        n += pn;
    }
    let (bs, bn) = mean_pairwise_cosine(&out.event_vectors, &out.pools.nonsalient_lemmas);
    s / n.max(1) as f64 - bs / bn.max(1) as f64
}
