use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use salience::annotate::{corpus_stats, default_filter_config, filter_candidates, label_salience, FilterConfig};
use salience::corpus::{load_corpus, save_corpus};
use salience::embeddings::{
    build_vocab as make_vocab, load_word_vectors, save_word_vectors, VocabField, Vocabulary, WordVectors, DEFAULT_DIM,
};
use salience::eval::{
    evaluate_with, paired_metric, permutation_test, rank_order, MetricsReport, TieBreak,
};
use salience::intrusion::{curves_to_csv, run_study, IntruderKind, IntrusionConfig};
use salience::models::{
    frequency_scores, load_model, location_scores, save_model, Differentiable, KceVariant, ModelInputs,
    SalienceModel, ScoreOptions,
};
use salience::synth::{generate, measured_gap, SynthConfig};
use salience::training::{self, grad_check, record_meta, tune_pagerank_lambda, TrainConfig, TrainHistory};
use salience::{par, Corpus, Document};

use crate::error::{usage, CliResult, DataContext, Failure};
use crate::manifest::{manifest_path, Manifest};
use crate::{
    AnnotateArgs, Baseline, BuildVocabArgs, EvaluateArgs, ExportArgs, Field, GradcheckArgs, IntrudeArgs, Kind,
    ModelChoice, RankArgs, SigtestArgs, StatsArgs, SynthArgs, TrainArgs,
};

fn snapshot<T: Serialize>(args: &T) -> Value {
    serde_json::to_value(args).unwrap_or(Value::Null)
}

fn read_corpus_file(path: &Path) -> CliResult<Corpus> {
    load_corpus(path).data(&format!("reading corpus {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).data(&format!("reading {}", path.display()))?;
    serde_json::from_str(&text).data(&format!("parsing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).data(&format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).data("serializing output")?;
    write_text(path, &(text + "\n"))
}

fn read_model_file(path: &Path) -> CliResult<SalienceModel> {
    load_model(path).map_err(|e| match Failure::from(e) {
        Failure::Data(e) => Failure::Data(e.context(format!("reading model {}", path.display()))),
        other => other,
    })
}

fn print_json(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).unwrap_or_default());
}

pub fn annotate(args: &AnnotateArgs) -> CliResult<()> {
    let mut m = Manifest::start("annotate", snapshot(args));
    let corpus = read_corpus_file(&args.corpus)?;
    let filter = match &args.filter_config {
        Some(p) => {
            m.input(p);
            FilterConfig::from_json_file(p).data("loading filter config")?
        }
        None => default_filter_config(),
    };
    let before: usize = corpus.documents.iter().map(|d| d.events.len()).sum();
    let docs: Vec<CliResult<Document>> = par::map(&corpus.documents, |d| {
        let f = filter_candidates(d, &filter);
        if args.no_label {
            Ok(f)
        } else {
            label_salience(&f).data("labeling")
        }
    });
    let out = Corpus::new(docs.into_iter().collect::<CliResult<_>>()?, corpus.split);
    let after: usize = out.documents.iter().map(|d| d.events.len()).sum();
    save_corpus(&out, &args.out).data(&format!("writing {}", args.out.display()))?;
    m.input(&args.corpus).output(&args.out);
    m.summary = Some(json!({"documents": out.len(), "events_in": before, "events_kept": after}));
    m.finish(&manifest_path(&args.out))
}

pub fn stats(args: &StatsArgs) -> CliResult<()> {
    let mut m = Manifest::start("stats", snapshot(args));
    let corpus = read_corpus_file(&args.corpus)?;
    let s = serde_json::to_value(corpus_stats(&corpus)).data("serializing stats")?;
    match &args.out {
        Some(out) => {
            write_json(out, &s)?;
            m.input(&args.corpus).output(out);
            m.finish(&manifest_path(out))
        }
        None => {
            print_json(&s);
            Ok(())
        }
    }
}

pub fn build_vocab(args: &BuildVocabArgs) -> CliResult<()> {
    if args.min_count == 0 {
        return Err(usage("--min-count must be positive"));
    }
    let mut m = Manifest::start("build-vocab", snapshot(args));
    let corpus = read_corpus_file(&args.corpus)?;
    let field = match args.field {
        Field::Event => VocabField::EventLemma,
        Field::Entity => VocabField::EntityKey,
    };
    let vocab = make_vocab(&corpus, field, args.min_count);
    write_json(&args.out, &vocab)?;
    m.input(&args.corpus).output(&args.out);
    m.summary = Some(json!({"size": vocab.size()}));
    m.finish(&manifest_path(&args.out))
}

fn optional_vectors(path: &Option<PathBuf>, m: &mut Manifest) -> CliResult<Option<WordVectors>> {
    path.as_ref()
        .map(|p| {
            m.input(p);
            load_word_vectors(p).data(&format!("reading vectors {}", p.display()))
        })
        .transpose()
}

fn vocab_or_build(path: &Option<PathBuf>, train: &Corpus, field: VocabField, min_count: usize, m: &mut Manifest) -> CliResult<Vocabulary> {
    match path {
        Some(p) => {
            m.input(p);
            read_json(p)
        }
        None => Ok(make_vocab(train, field, min_count)),
    }
}

fn fit<M: Differentiable>(model: M, train: &Corpus, dev: &Corpus, cfg: &TrainConfig) -> CliResult<(M, TrainHistory)> {
    Ok(training::train(model, train, dev, cfg)?)
}

pub fn train(args: &TrainArgs) -> CliResult<()> {
    if args.min_count == 0 || args.dim == Some(0) {
        return Err(usage("--min-count and --dim must be positive"));
    }
    let mut m = Manifest::start("train", snapshot(args));
    let mut cfg: TrainConfig = match &args.config {
        Some(p) => {
            m.input(p);
            read_json(p)?
        }
        None => TrainConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let train = read_corpus_file(&args.train)?;
    let dev = read_corpus_file(&args.dev)?;
    m.input(&args.train).input(&args.dev);
    let ev_vecs = optional_vectors(&args.event_vectors, &mut m)?;
    let en_vecs = optional_vectors(&args.entity_vectors, &mut m)?;
    let dim = args
        .dim
        .or(ev_vecs.as_ref().map(|v| v.dim))
        .or(en_vecs.as_ref().map(|v| v.dim))
        .unwrap_or(DEFAULT_DIM);
    let ev_vocab = vocab_or_build(&args.event_vocab, &train, VocabField::EventLemma, args.min_count, &mut m)?;
    let en_vocab = vocab_or_build(&args.entity_vocab, &train, VocabField::EntityKey, args.min_count, &mut m)?;
    let inputs = ModelInputs::new(&train, &ev_vocab, &en_vocab, ev_vecs.as_ref(), en_vecs.as_ref(), dim, cfg.seed)
        .data("building embeddings")?;

    let mut summary = json!({"dim": dim, "event_vocab": ev_vocab.size(), "entity_vocab": en_vocab.size()});
    let kce = |variant| -> CliResult<(SalienceModel, TrainHistory)> {
        let (mut model, h) = fit(inputs.kce(variant, cfg.seed), &train, &dev, &cfg)?;
        record_meta(&mut model.meta, &cfg, &h);
        Ok((SalienceModel::Kce(model), h))
    };
    let (model, history) = match args.model {
        ModelChoice::Letor => {
            let (mut model, h) = fit(inputs.letor(), &train, &dev, &cfg)?;
            record_meta(&mut model.meta, &cfg, &h);
            (SalienceModel::Letor(model), h)
        }
        ModelChoice::Kce => kce(KceVariant::Full)?,
        ModelChoice::KceE => kce(KceVariant::EventsOnly)?,
        ModelChoice::KceEf => kce(KceVariant::EventsFeatures)?,
        ModelChoice::Pagerank => {
            let (mut model, h) = fit(inputs.pagerank(), &train, &dev, &cfg)?;
            let (lambda, auc) = tune_pagerank_lambda(&mut model, &dev);
            record_meta(&mut model.meta, &cfg, &h);
            summary["combine_lambda"] = json!(lambda);
            summary["lambda_dev_auc"] = json!(auc);
            (SalienceModel::PageRank(model), h)
        }
    };
    save_model(&model, &args.out)?;
    let history_path = args.history.clone().unwrap_or_else(|| {
        let mut name = args.out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".history.csv");
        args.out.with_file_name(name)
    });
    write_text(&history_path, &history.to_csv())?;
    summary["initial_loss"] = json!(history.initial_loss);
    summary["final_loss"] = json!(history.final_loss());
    summary["best_epoch"] = json!(history.best_epoch);
    summary["best_dev_auc"] = json!(model.meta().best_dev_auc);
    m.seed("train", cfg.seed);
    m.output(&args.out).output(&history_path);
    m.config = json!({"args": m.config, "train_config": cfg});
    m.summary = Some(summary);
    m.finish(&manifest_path(&args.out))
}

#[derive(Serialize)]
struct RankedEvent<'a> {
    event_id: &'a str,
    score: f64,
}

#[derive(Serialize)]
struct RankedDocument<'a> {
    doc_id: &'a str,
    ranking: Vec<RankedEvent<'a>>,
}

pub fn rank(args: &RankArgs) -> CliResult<()> {
    let mut m = Manifest::start("rank", snapshot(args));
    let model = read_model_file(&args.model)?;
    let corpus = read_corpus_file(&args.corpus)?;
    let scores = par::map(&corpus.documents, |d| model.score(d));
    let file = fs::File::create(&args.out).data(&format!("writing {}", args.out.display()))?;
    let mut w = BufWriter::new(file);
    for (doc, s) in corpus.documents.iter().zip(&scores) {
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Failure::Numeric(anyhow::anyhow!("non-finite score in {}", doc.doc_id)));
        }
        let ids: Vec<&str> = doc.events.iter().map(|e| e.id.as_str()).collect();
        let ranking = rank_order(s, &ids, TieBreak::ById)
            .into_iter()
            .map(|i| RankedEvent {
                event_id: ids[i],
                score: s[i],
            })
            .collect();
        let line = serde_json::to_string(&RankedDocument {
            doc_id: &doc.doc_id,
            ranking,
        })
        .data("serializing ranking")?;
        writeln!(w, "{line}").data("writing ranking")?;
    }
    w.flush().data("writing ranking")?;
    m.input(&args.model).input(&args.corpus).output(&args.out);
    m.finish(&manifest_path(&args.out))
}

pub fn evaluate(args: &EvaluateArgs) -> CliResult<()> {
    if args.cutoffs.is_empty() || args.cutoffs.contains(&0) {
        return Err(usage("--cutoffs must be positive integers"));
    }
    let mut m = Manifest::start("evaluate", snapshot(args));
    let corpus = read_corpus_file(&args.corpus)?;
    m.input(&args.corpus);
    let report = match (&args.model, args.baseline) {
        (Some(path), _) => {
            let model = read_model_file(path)?;
            m.input(path);
            let tie = args.tie_seed.map_or(TieBreak::ById, TieBreak::Random);
            evaluate_with(&corpus, |d| model.score(d), &args.cutoffs, tie)
        }
        (None, Some(b)) => {
            let seed = args.tie_seed.unwrap_or(0);
            m.seed("tie_break", seed);
            let scorer = match b {
                Baseline::Frequency => frequency_scores,
                Baseline::Location => location_scores,
            };
            evaluate_with(&corpus, scorer, &args.cutoffs, TieBreak::Random(seed))
        }
        (None, None) => return Err(usage("one of --model or --baseline is required")),
    };
    if let Some(seed) = args.tie_seed {
        m.seed("tie_break", seed);
    }
    if report.per_doc.iter().any(|d| d.auc.is_some_and(|a| !a.is_finite())) {
        return Err(Failure::Numeric(anyhow::anyhow!("non-finite metric")));
    }
    report.save(&args.out).data(&format!("writing {}", args.out.display()))?;
    let summary = json!({
        "auc": report.auc,
        "p_at": report.p_at,
        "r_at": report.r_at,
        "num_docs": report.num_docs,
    });
    print_json(&summary);
    m.output(&args.out);
    m.summary = Some(summary);
    m.finish(&manifest_path(&args.out))
}

fn valid_metric(name: &str) -> bool {
    name == "auc"
        || ["p@", "r@"]
            .iter()
            .any(|p| name.strip_prefix(p).and_then(|k| k.parse::<usize>().ok()).is_some_and(|k| k > 0))
}

pub fn sigtest(args: &SigtestArgs) -> CliResult<()> {
    if !valid_metric(&args.metric) {
        return Err(usage(format!("unknown metric {:?}; use auc, p@k or r@k", args.metric)));
    }
    if args.iterations == 0 {
        return Err(usage("--iterations must be positive"));
    }
    let mut m = Manifest::start("sigtest", snapshot(args));
    let load = |p: &Path| MetricsReport::load(p).data(&format!("reading report {}", p.display()));
    let (a, b) = (load(&args.a)?, load(&args.b)?);
    let (xa, xb) = paired_metric(&a, &b, &args.metric);
    if xa.is_empty() {
        return Err(Failure::Data(anyhow::anyhow!(
            "no document has {} in both reports",
            args.metric
        )));
    }
    let p = permutation_test(&xa, &xb, args.iterations, args.seed).data("permutation test")?;
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let result = json!({
        "metric": args.metric,
        "n": xa.len(),
        "mean_a": mean(&xa),
        "mean_b": mean(&xb),
        "mean_difference": mean(&xa) - mean(&xb),
        "p_value": p,
        "iterations": args.iterations,
        "seed": args.seed,
    });
    print_json(&result);
    if let Some(out) = &args.out {
        write_json(out, &result)?;
        m.seed("permutation", args.seed);
        m.input(&args.a).input(&args.b).output(out);
        m.finish(&manifest_path(out))?;
    }
    Ok(())
}

pub fn intrude(args: &IntrudeArgs) -> CliResult<()> {
    let mut m = Manifest::start("intrude", snapshot(args));
    let model = read_model_file(&args.model)?;
    let corpus = read_corpus_file(&args.corpus)?;
    let cfg = IntrusionConfig {
        num_pairs: args.pairs,
        intruder_kind: match args.kind {
            Kind::Salient => IntruderKind::SalientOnly,
            Kind::Nonsalient => IntruderKind::NonsalientOnly,
        },
        seed: args.seed,
        ..IntrusionConfig::default()
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    // KCE sees only relational evidence: every feature but frequency is zeroed.
    let relational = ScoreOptions { relational_only: true };
    let curve = match &model {
        SalienceModel::Kce(k) => run_study(&corpus, |d| k.score_with(d, relational), &cfg),
        other => run_study(&corpus, |d| other.score(d), &cfg),
    }
    .data("intrusion study")?;
    if curve.iter().any(|p| !(p.auc.is_finite() && p.sa_auc.is_finite())) {
        return Err(Failure::Numeric(anyhow::anyhow!("non-finite AUC in intrusion curve")));
    }
    write_text(&args.out, &curves_to_csv(&curve))?;
    m.seed("intrusion", args.seed);
    m.input(&args.model).input(&args.corpus).output(&args.out);
    m.finish(&manifest_path(&args.out))
}

pub fn gradcheck(args: &GradcheckArgs) -> CliResult<()> {
    if !(args.step > 0.0 && args.step.is_finite()) {
        return Err(usage("--step must be positive"));
    }
    let mut m = Manifest::start("gradcheck", snapshot(args));
    let mut model = read_model_file(&args.model)?.into_kce()?;
    if args.freeze_embeddings {
        model.set_embeddings_trainable(false);
    }
    let corpus = read_corpus_file(&args.corpus)?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for doc in corpus.documents.iter().take(args.docs) {
        let r = grad_check(&model, doc, args.step)?;
        worst = if r.max_rel_error.is_nan() { f64::NAN } else { worst.max(r.max_rel_error) };
        rows.push(json!({"doc_id": doc.doc_id, "report": r}));
    }
    let result = json!({
        "step": args.step,
        "tolerance": args.tolerance,
        "max_rel_error": worst,
        "passed": worst <= args.tolerance,
        "documents": rows,
    });
    print_json(&json!({"max_rel_error": worst, "documents": rows.len(), "passed": worst <= args.tolerance}));
    if let Some(out) = &args.out {
        write_json(out, &result)?;
        m.input(&args.model).input(&args.corpus).output(out);
        m.finish(&manifest_path(out))?;
    }
    if worst <= args.tolerance {
        Ok(())
    } else {
        Err(Failure::Numeric(anyhow::anyhow!(
            "max relative error {worst:e} exceeds tolerance {:e}",
            args.tolerance
        )))
    }
}

pub fn export_kernel_weights(args: &ExportArgs) -> CliResult<()> {
    let mut m = Manifest::start("export-kernel-weights", snapshot(args));
    let model = read_model_file(&args.model)?.into_kce()?;
    let mut csv = String::from("mu,sigma,w_v,w_e\n");
    for k in 0..model.bank.len() {
        let _ = writeln!(
            csv,
            "{:?},{:?},{:?},{:?}",
            model.bank.means[k], model.bank.sigmas[k], model.w_v[k], model.w_e[k]
        );
    }
    write_text(&args.out, &csv)?;
    m.input(&args.model).output(&args.out);
    m.finish(&manifest_path(&args.out))
}

pub fn synth(args: &SynthArgs) -> CliResult<()> {
    let mut m = Manifest::start("synth", snapshot(args));
    let mut cfg: SynthConfig = match &args.config {
        Some(p) => {
            m.input(p);
            read_json(p)?
        }
        None => SynthConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let out = generate(&cfg).map_err(|e| Failure::Data(anyhow::anyhow!("invalid synth config: {e}")))?;
    let dir = &args.out_dir;
    fs::create_dir_all(dir).data(&format!("creating {}", dir.display()))?;
    for (name, corpus) in [("train", &out.train), ("dev", &out.dev), ("test", &out.test)] {
        let p = dir.join(format!("{name}.jsonl"));
        save_corpus(corpus, &p).data(&format!("writing {}", p.display()))?;
        m.output(&p);
    }
    for (name, vecs) in [("event_vectors", &out.event_vectors), ("entity_vectors", &out.entity_vectors)] {
        let p = dir.join(format!("{name}.txt"));
        save_word_vectors(vecs, &p).data(&format!("writing {}", p.display()))?;
        m.output(&p);
    }
    let pools = dir.join("pools.json");
    write_json(&pools, &out.pools)?;
    m.output(&pools);
    m.seed("synth", cfg.seed);
    m.config = json!({"args": m.config, "synth_config": cfg});
    m.summary = Some(json!({
        "train": out.train.len(),
        "dev": out.dev.len(),
        "test": out.test.len(),
        "measured_gap": measured_gap(&out),
    }));
    m.finish(&dir.join("manifest.json"))
}
