//! `ndnf`: train neural DNF models on binary-attribute datasets, run the
//! post-training pipeline, evaluate checkpoints or rule files, generate
//! synthetic datasets, and preprocess CUB-style annotation dumps.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use neural_dnf::data::{
    filter_by_mi, gen_synthetic_multiclass, gen_synthetic_multilabel, ingest_cub,
    load_dataset_csv, preprocess_cub, save_dataset_csv_with_provenance, split, Dataset, TaskKind,
};
use neural_dnf::post_training::{
    eval_rules, extract_rules, finetune_config, finetune_eo, finetune_vanilla, prune,
    threshold_search, PipelineReport, PostTrainConfig,
};
use neural_dnf::training::{
    eval_dnf, eval_mlp, history_to_csv, train_eo, train_mlp, train_vanilla, EvalMetric, LossKind,
    TrainConfig,
};
use neural_dnf::{
    init_eo, init_mlp, init_vanilla, rules, Checkpoint, Error, ModelKind, Result, DEFAULT_SEED,
};

#[derive(Parser)]
#[command(name = "ndnf", version, about = "neural DNF rule learning toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset plus its ground-truth rules.
    GenSynth(GenSynthArgs),
    /// Train a model on a generated dataset directory.
    Train(TrainArgs),
    /// Run prune/finetune/threshold/extract on a trained checkpoint.
    Posttrain(PosttrainArgs),
    /// Evaluate a checkpoint or rules file against a dataset CSV.
    Eval(EvalArgs),
    /// Preprocess raw inputs into dataset CSVs (CUB ingestion, MI filter).
    Preprocess(PreprocessArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SynthKind {
    Multiclass,
    Multilabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModelChoice {
    Vanilla,
    Eo,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum LossChoice {
    Ce,
    Bce,
}

impl From<LossChoice> for LossKind {
    fn from(l: LossChoice) -> LossKind {
        match l {
            LossChoice::Ce => LossKind::CrossEntropy,
            LossChoice::Bce => LossKind::BinaryCrossEntropy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum MetricChoice {
    Jaccard,
    Macrof1,
    Accuracy,
}

impl From<MetricChoice> for EvalMetric {
    fn from(m: MetricChoice) -> EvalMetric {
        match m {
            MetricChoice::Jaccard => EvalMetric::Jaccard,
            MetricChoice::Macrof1 => EvalMetric::MacroF1,
            MetricChoice::Accuracy => EvalMetric::Accuracy,
        }
    }
}

/// Optional JSON config file; command-line flags override its values.
fn load_config<T: for<'de> Deserialize<'de> + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("config {p:?}: {e}")))
        }
        None => Ok(T::default()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Format(format!("encode {path:?}: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

// ---------------------------------------------------------------- gen-synth

#[derive(Args)]
struct GenSynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    /// Number of classes (multiclass) or labels (multilabel).
    #[arg(long)]
    outputs: Option<usize>,
    /// Noise attributes appended after the selector block (multiclass).
    #[arg(long)]
    noise_attrs: Option<usize>,
    /// Attribute pool size (multilabel).
    #[arg(long)]
    attrs: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    train: Option<usize>,
    #[arg(long)]
    val: Option<usize>,
    #[arg(long)]
    test: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct GenSynthConfig {
    kind: SynthKind,
    outputs: usize,
    noise_attrs: usize,
    attrs: usize,
    samples: usize,
    /// Split sizes; when omitted, a 64/16/20 percent split of `samples`.
    train: Option<usize>,
    val: Option<usize>,
    test: Option<usize>,
    seed: u64,
}

impl Default for GenSynthConfig {
    fn default() -> Self {
        GenSynthConfig {
            kind: SynthKind::Multiclass,
            outputs: 3,
            noise_attrs: 20,
            attrs: 10,
            samples: 10000,
            train: None,
            val: None,
            test: None,
            seed: DEFAULT_SEED,
        }
    }
}

fn cmd_gen_synth(a: GenSynthArgs) -> Result<()> {
    let mut cfg: GenSynthConfig = load_config(&a.config)?;
    cfg.kind = a.kind;
    if let Some(v) = a.outputs {
        cfg.outputs = v;
    }
    if let Some(v) = a.noise_attrs {
        cfg.noise_attrs = v;
    }
    if let Some(v) = a.attrs {
        cfg.attrs = v;
    }
    if let Some(v) = a.samples {
        cfg.samples = v;
    }
    if a.train.is_some() {
        cfg.train = a.train;
    }
    if a.val.is_some() {
        cfg.val = a.val;
    }
    if a.test.is_some() {
        cfg.test = a.test;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }

    let (dataset, ground_truth) = match cfg.kind {
        SynthKind::Multiclass => {
            gen_synthetic_multiclass(cfg.outputs, cfg.noise_attrs, cfg.samples, cfg.seed)?
        }
        SynthKind::Multilabel => {
            gen_synthetic_multilabel(cfg.outputs, cfg.attrs, cfg.samples, cfg.seed)?
        }
    };
    let n_train = cfg.train.unwrap_or(cfg.samples * 64 / 100);
    let n_val = cfg.val.unwrap_or(cfg.samples * 16 / 100);
    let n_test = cfg
        .test
        .unwrap_or_else(|| cfg.samples.saturating_sub(n_train + n_val));
    let (train, val, test) = split(&dataset, n_train, n_val, n_test, cfg.seed)?;

    std::fs::create_dir_all(&a.out)?;
    let provenance = serde_json::to_value(&cfg)
        .map_err(|e| Error::Format(format!("config encode: {e}")))?;
    for (name, part) in [("train", &train), ("val", &val), ("test", &test)] {
        save_dataset_csv_with_provenance(
            part,
            &a.out.join(format!("{name}.csv")),
            provenance.clone(),
        )?;
    }
    std::fs::write(a.out.join("ground_truth.lp"), ground_truth.rules.emit_asp())?;
    write_json(&a.out.join("gen_config.json"), &cfg)?;
    println!(
        "wrote {n_train} train / {n_val} val / {n_test} test samples to {}",
        a.out.display()
    );
    Ok(())
}

// -------------------------------------------------------------------- train

#[derive(Args)]
struct TrainArgs {
    /// Directory holding train.csv, val.csv, test.csv.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    model: Option<ModelChoice>,
    #[arg(long, value_enum)]
    loss: Option<LossChoice>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Conjunction count (hidden width); defaults to 3x the output arity.
    #[arg(long)]
    n_conj: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    l1: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct TrainRunConfig {
    model: ModelChoice,
    loss: LossChoice,
    epochs: usize,
    batch_size: usize,
    n_conj: Option<usize>,
    lr: f64,
    weight_decay: f64,
    l1: f64,
    seed: u64,
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        TrainRunConfig {
            model: ModelChoice::Eo,
            loss: LossChoice::Ce,
            epochs: 100,
            batch_size: 32,
            n_conj: None,
            lr: 0.001,
            weight_decay: 0.00004,
            l1: 1e-4,
            seed: DEFAULT_SEED,
        }
    }
}

fn load_split(dir: &Path) -> Result<(Dataset, Dataset, Dataset)> {
    Ok((
        load_dataset_csv(&dir.join("train.csv"))?,
        load_dataset_csv(&dir.join("val.csv"))?,
        load_dataset_csv(&dir.join("test.csv"))?,
    ))
}

fn default_metric(task: TaskKind) -> EvalMetric {
    match task {
        TaskKind::MultiClass { .. } => EvalMetric::Jaccard,
        TaskKind::MultiLabel { .. } => EvalMetric::MacroF1,
    }
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut cfg: TrainRunConfig = load_config(&a.config)?;
    if let Some(v) = a.model {
        cfg.model = v;
    }
    if let Some(v) = a.loss {
        cfg.loss = v;
    }
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if a.n_conj.is_some() {
        cfg.n_conj = a.n_conj;
    }
    if let Some(v) = a.lr {
        cfg.lr = v;
    }
    if let Some(v) = a.weight_decay {
        cfg.weight_decay = v;
    }
    if let Some(v) = a.l1 {
        cfg.l1 = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }

    let (train, val, test) = load_split(&a.data)?;
    let n_in = train.n_attributes();
    let n_out = train.task.arity();
    let n_conj = cfg.n_conj.unwrap_or(3 * n_out);

    let mut tc = TrainConfig::new(cfg.loss.into(), cfg.epochs, cfg.batch_size, cfg.seed);
    tc.optimizer.learning_rate = cfg.lr;
    tc.optimizer.weight_decay = cfg.weight_decay;
    tc.l1_weight = cfg.l1;

    let (model, history) = match cfg.model {
        ModelChoice::Vanilla => {
            let mut m = init_vanilla(n_in, n_conj, n_out, cfg.seed)?;
            let h = train_vanilla(&mut m, &train, &val, &tc)?;
            (ModelKind::Vanilla(m), h)
        }
        ModelChoice::Eo => {
            let mut m = init_eo(n_in, n_conj, n_out, cfg.seed)?;
            let h = train_eo(&mut m, &train, &val, &tc)?;
            (ModelKind::Eo(m), h)
        }
        ModelChoice::Mlp => {
            let mut m = init_mlp(n_in, n_conj, n_out, cfg.seed)?;
            let h = train_mlp(&mut m, &train, &val, &tc)?;
            (ModelKind::Mlp(m), h)
        }
    };

    let metric = default_metric(train.task);
    let eval_on = |data: &Dataset| -> Result<f64> {
        match &model {
            ModelKind::Vanilla(m) => eval_dnf(m, data, metric),
            ModelKind::Eo(m) => eval_dnf(&m.base, data, metric),
            ModelKind::Mlp(m) => eval_mlp(m, data, EvalMetric::Accuracy, false),
        }
    };
    let metrics = serde_json::json!({
        "metric": match &model { ModelKind::Mlp(_) => EvalMetric::Accuracy, _ => metric },
        "train": eval_on(&train)?,
        "val": eval_on(&val)?,
        "test": eval_on(&test)?,
    });

    std::fs::create_dir_all(&a.out)?;
    let config_echo =
        serde_json::to_value(&cfg).map_err(|e| Error::Format(format!("config encode: {e}")))?;
    let checkpoint = Checkpoint {
        seed: cfg.seed,
        config: config_echo,
        model,
    };
    std::fs::write(a.out.join("checkpoint.json"), checkpoint.to_json()? + "\n")?;
    std::fs::write(a.out.join("history.csv"), history_to_csv(&history))?;
    write_json(&a.out.join("metrics.json"), &metrics)?;
    println!("{metrics}");
    Ok(())
}

// ---------------------------------------------------------------- posttrain

#[derive(Args)]
struct PosttrainArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Directory holding train.csv, val.csv, test.csv.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum)]
    metric: Option<MetricChoice>,
    #[arg(long)]
    threshold_step: Option<f64>,
    #[arg(long)]
    finetune_epochs: Option<usize>,
    #[arg(long, value_enum)]
    finetune_loss: Option<LossChoice>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn cmd_posttrain(a: PosttrainArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.checkpoint)?;
    let checkpoint = Checkpoint::from_json(&text)?;
    let (train, val, test) = load_split(&a.data)?;

    let mut cfg: PostTrainConfig = load_config(&a.config)?;
    cfg.metric = a.metric.map(Into::into).unwrap_or(default_metric(train.task));
    if let Some(v) = a.epsilon {
        cfg.prune_epsilon = v;
    }
    if let Some(v) = a.threshold_step {
        cfg.threshold_step = v;
    }
    if let Some(v) = a.finetune_epochs {
        cfg.finetune_epochs = v;
    }
    cfg.finetune_loss = a.finetune_loss.map(Into::into).unwrap_or(match train.task {
        TaskKind::MultiClass { .. } => LossKind::CrossEntropy,
        TaskKind::MultiLabel { .. } => LossKind::BinaryCrossEntropy,
    });
    if let Some(v) = a.batch_size {
        cfg.finetune_batch_size = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    cfg.validate()?;

    let mut model = checkpoint.model;
    if matches!(model, ModelKind::Mlp(_)) {
        return Err(Error::InvalidArgument(
            "the post-training pipeline applies to DNF models, not the MLP".into(),
        ));
    }
    std::fs::create_dir_all(&a.out)?;
    let config_echo =
        serde_json::to_value(&cfg).map_err(|e| Error::Format(format!("config encode: {e}")))?;
    let save_stage = |name: &str, model: &ModelKind| -> Result<()> {
        let ck = Checkpoint {
            seed: cfg.seed,
            config: config_echo.clone(),
            model: model.clone(),
        };
        std::fs::write(a.out.join(format!("{name}.json")), ck.to_json()? + "\n")?;
        Ok(())
    };
    let eval_base = |model: &ModelKind, data: &Dataset| -> Result<f64> {
        match model {
            ModelKind::Vanilla(m) => eval_dnf(m, data, cfg.metric),
            ModelKind::Eo(m) => eval_dnf(&m.base, data, cfg.metric),
            ModelKind::Mlp(_) => unreachable!(),
        }
    };

    let after_train = eval_base(&model, &test)?;

    let stats = match &mut model {
        ModelKind::Vanilla(m) => prune(m, &train, cfg.prune_epsilon, cfg.metric)?,
        ModelKind::Eo(m) => prune(&mut m.base, &train, cfg.prune_epsilon, cfg.metric)?,
        ModelKind::Mlp(_) => unreachable!(),
    };
    let after_prune = eval_base(&model, &test)?;
    save_stage("pruned", &model)?;

    let ft = finetune_config(&cfg);
    match &mut model {
        ModelKind::Vanilla(m) => {
            finetune_vanilla(m, &train, &val, &ft)?;
        }
        ModelKind::Eo(m) => {
            finetune_eo(m, &train, &val, &ft)?;
        }
        ModelKind::Mlp(_) => unreachable!(),
    }
    let after_finetune = eval_base(&model, &test)?;
    save_stage("finetuned", &model)?;

    let base = match &model {
        ModelKind::Vanilla(m) => m,
        ModelKind::Eo(m) => &m.base,
        ModelKind::Mlp(_) => unreachable!(),
    };
    let (t_star, discretized) = threshold_search(base, &val, cfg.threshold_step, cfg.metric)?;
    let after_threshold = eval_dnf(&discretized, &test, cfg.metric)?;
    save_stage("thresholded", &ModelKind::Vanilla(discretized.clone()))?;

    let ruleset = extract_rules(&discretized, &train.attribute_names, &train.output_names)?;
    let rules_metric = eval_rules(&ruleset, &test, cfg.metric)?;
    std::fs::write(a.out.join("rules.lp"), ruleset.emit_asp())?;

    let report = PipelineReport {
        metric: cfg.metric,
        after_train,
        after_prune,
        after_finetune,
        after_threshold,
        rules_metric,
        threshold: t_star,
        pruned_weights: stats.pruned_weights,
        removed_disjuncts: stats.removed_disjuncts,
    };
    std::fs::write(a.out.join("report.json"), report.to_json()? + "\n")?;
    println!("{}", report.to_json()?);
    Ok(())
}

// --------------------------------------------------------------------- eval

#[derive(Args)]
struct EvalArgs {
    #[arg(long, conflicts_with = "rules")]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Dataset CSV file.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    metric: Option<MetricChoice>,
    /// For MLP checkpoints: tanh-squash logits and threshold at 0.
    #[arg(long)]
    interpret: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let data = load_dataset_csv(&a.data)?;
    let metric: EvalMetric = a
        .metric
        .map(Into::into)
        .unwrap_or(default_metric(data.task));
    let threshold0 = match a.interpret.as_deref() {
        None => false,
        Some("threshold0") => true,
        Some(other) => {
            return Err(Error::InvalidArgument(format!(
                "unknown --interpret mode '{other}' (expected 'threshold0')"
            )))
        }
    };

    let value = match (&a.checkpoint, &a.rules) {
        (Some(ck), None) => {
            let checkpoint = Checkpoint::from_json(&std::fs::read_to_string(ck)?)?;
            match &checkpoint.model {
                ModelKind::Vanilla(m) => eval_dnf(m, &data, metric)?,
                ModelKind::Eo(m) => eval_dnf(&m.base, &data, metric)?,
                ModelKind::Mlp(m) => eval_mlp(m, &data, metric, threshold0)?,
            }
        }
        (None, Some(path)) => {
            let ruleset = rules::parse_asp(&std::fs::read_to_string(path)?)?;
            eval_rules(&ruleset, &data, metric)?
        }
        _ => {
            return Err(Error::InvalidArgument(
                "pass exactly one of --checkpoint or --rules".into(),
            ))
        }
    };

    let metrics = serde_json::json!({ "metric": metric, "value": value });
    if let Some(out) = &a.out {
        write_json(out, &metrics)?;
    }
    println!("{metrics}");
    Ok(())
}

// --------------------------------------------------------------- preprocess

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PreprocessKind {
    Cub,
    Mi,
}

#[derive(Args)]
struct PreprocessArgs {
    #[arg(long, value_enum)]
    kind: PreprocessKind,
    /// CUB annotation directory, or a dataset CSV for the MI filter.
    #[arg(long)]
    input: PathBuf,
    /// Class-count threshold N for the class-median preprocessing.
    #[arg(long)]
    n: Option<usize>,
    /// Mutual-information threshold t.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn cmd_preprocess(a: PreprocessArgs) -> Result<()> {
    match a.kind {
        PreprocessKind::Cub => {
            let n = a.n.ok_or_else(|| {
                Error::InvalidArgument("--n is required for --kind cub".into())
            })?;
            let raw = ingest_cub(&a.input)?;
            let train_ids = raw.train_ids.clone();
            let (dataset, kept) = preprocess_cub(&raw, n, &train_ids)?;
            std::fs::create_dir_all(a.out.parent().unwrap_or(Path::new(".")))?;
            let provenance = serde_json::json!({
                "source": "cub",
                "n": n,
                "kept_attributes": kept.iter().filter(|k| **k).count(),
            });
            save_dataset_csv_with_provenance(&dataset, &a.out, provenance)?;
            println!(
                "kept {} of {} attributes, {} samples",
                kept.iter().filter(|k| **k).count(),
                kept.len(),
                dataset.samples.len()
            );
        }
        PreprocessKind::Mi => {
            let t = a.t.ok_or_else(|| {
                Error::InvalidArgument("--t is required for --kind mi".into())
            })?;
            let dataset = load_dataset_csv(&a.input)?;
            let filtered = filter_by_mi(&dataset, t)?;
            let provenance = serde_json::json!({ "source": "mi-filter", "t": t });
            save_dataset_csv_with_provenance(&filtered, &a.out, provenance)?;
            println!(
                "kept {} of {} attributes",
                filtered.n_attributes(),
                dataset.n_attributes()
            );
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::GenSynth(a) => cmd_gen_synth(a),
        Cmd::Train(a) => cmd_train(a),
        Cmd::Posttrain(a) => cmd_posttrain(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Preprocess(a) => cmd_preprocess(a),
    };
    if let Err(e) = result {
        eprintln!("error[{}]: {e}", e.category());
        std::process::exit(1);
    }
}
