use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use time2box::data::{ParseOptions, Split, SplitMask, SyntheticConfig, SyntheticDataset, TemporalKB};
use time2box::eval::{
    aeiou, eval_link_prediction, eval_time_prediction, gaeiou, giou, Interval, LinkOptions, TimeOptions,
};
use time2box::model::{Block, QueryPlan, TimeConstraint, Variant};
use time2box::train::{check_compatible, load_checkpoint, save_checkpoint, train_with, TrainConfig};

use crate::config::Settings;
use crate::{DataArgs, ModelArgs, UsageError};

fn parse_options(data: &DataArgs) -> ParseOptions {
    ParseOptions {
        missing: data.missing.clone(),
        lenient_dates: data.lenient_dates,
    }
}

fn data_dir(path: Option<&Path>) -> Result<&Path> {
    let dir = path.ok_or_else(|| UsageError("missing dataset path (--data)".into()))?;
    if !dir.is_dir() {
        return Err(UsageError(format!("dataset directory {} does not exist", dir.display())).into());
    }
    Ok(dir)
}

fn load_kb(dir: &Path, opts: &ParseOptions) -> Result<TemporalKB> {
    Ok(TemporalKB::load_dir(dir, opts)?)
}

fn out_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_model(args: &ModelArgs) -> Result<(TemporalKB, time2box::model::ParameterStore)> {
    let dir = data_dir(args.data.data.as_deref())?;
    let kb = load_kb(dir, &parse_options(&args.data))?;
    let params = load_checkpoint(&args.checkpoint)?;
    check_compatible(&params, &kb)?;
    Ok((kb, params))
}

fn parse_split(name: &str) -> Result<Split> {
    Split::parse(name).ok_or_else(|| UsageError(format!("unknown split `{name}`")).into())
}

pub fn stats(data: &DataArgs) -> Result<()> {
    let kb = load_kb(data_dir(data.data.as_deref())?, &parse_options(data))?;
    print!("{}", kb.stats());
    Ok(())
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub entities: usize,
    #[arg(long, default_value_t = 5)]
    pub relations: usize,
    #[arg(long, default_value_t = 40)]
    pub axis: usize,
    #[arg(long, default_value_t = 100)]
    pub rules: usize,
    #[arg(long, default_value_t = 1980)]
    pub origin: i32,
}

pub fn gen_synthetic(a: &GenArgs) -> Result<()> {
    let config = SyntheticConfig {
        seed: a.seed,
        entities: a.entities,
        relations: a.relations,
        axis_len: a.axis,
        rules: a.rules,
        origin: a.origin,
    };
    let ds = SyntheticDataset::generate(&config).map_err(|e| UsageError(e.to_string()))?;
    ds.write_dir(&a.out)?;
    let mut snapshot = Settings::default();
    snapshot.set("seed", a.seed);
    snapshot.set("entities", a.entities);
    snapshot.set("relations", a.relations);
    snapshot.set("axis", a.axis);
    snapshot.set("rules", a.rules);
    snapshot.set("origin", a.origin);
    snapshot.save(&a.out.join("config.txt"))?;
    println!(
        "wrote {} train, {} valid, {} test statements to {}",
        ds.train.len(),
        ds.valid.len(),
        ds.test.len(),
        a.out.display()
    );
    Ok(())
}

const TRAIN_KEYS: &[&str] = &[
    "data",
    "missing",
    "lenient_dates",
    "d",
    "k",
    "m",
    "lr",
    "batch",
    "steps",
    "gamma",
    "alpha",
    "beta",
    "variant",
    "seed",
    "eval_every",
    "valid_limit",
];

#[derive(Args)]
pub struct TrainArgs {
    /// Directory for the checkpoint, log and config snapshot.
    #[arg(long)]
    pub out: PathBuf,
    /// Flat key=value file; command-line flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub missing: Option<String>,
    #[arg(long)]
    pub lenient_dates: bool,
    /// Embedding dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Negatives per positive.
    #[arg(long)]
    pub k: Option<usize>,
    /// Time negatives per positive (variant tns); defaults to k/2.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Comma-separated: te or dm, plus any of tr, si, tns.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    /// Validate on at most this many statements.
    #[arg(long)]
    pub valid_limit: Option<usize>,
}

/// Merges the config file with the flags and fills in every default, so the
/// result can be written out and replayed.
fn resolve_train(a: &TrainArgs) -> Result<(Settings, TrainConfig)> {
    let mut s = match &a.config {
        Some(path) => Settings::load(path, TRAIN_KEYS)?,
        None => Settings::default(),
    };
    s.set_opt("data", &a.data.as_ref().map(|p| p.display().to_string()));
    s.set_opt("missing", &a.missing);
    if a.lenient_dates {
        s.set("lenient_dates", true);
    }
    s.set_opt("d", &a.d);
    s.set_opt("k", &a.k);
    s.set_opt("m", &a.m);
    s.set_opt("lr", &a.lr);
    s.set_opt("batch", &a.batch);
    s.set_opt("steps", &a.steps);
    s.set_opt("gamma", &a.gamma);
    s.set_opt("alpha", &a.alpha);
    s.set_opt("beta", &a.beta);
    s.set_opt("variant", &a.variant);
    s.set_opt("seed", &a.seed);
    s.set_opt("eval_every", &a.eval_every);
    s.set_opt("valid_limit", &a.valid_limit);

    let d = TrainConfig::default();
    let optional = |key: &str| -> Result<Option<usize>, UsageError> {
        match s.get(key) {
            None | Some("auto") | Some("all") => Ok(None),
            Some(_) => s.parsed(key, 0).map(Some),
        }
    };
    let variant = Variant::parse(s.get("variant").unwrap_or("te"))?;
    let config = TrainConfig {
        dim: s.parsed("d", d.dim)?,
        negatives: s.parsed("k", d.negatives)?,
        time_negatives: optional("m")?,
        lr: s.parsed("lr", d.lr)?,
        batch: s.parsed("batch", d.batch)?,
        steps: s.parsed("steps", d.steps)?,
        gamma: s.parsed("gamma", d.gamma)?,
        alpha: s.parsed("alpha", d.alpha)?,
        beta: s.parsed("beta", d.beta)?,
        variant,
        seed: s.parsed("seed", d.seed)?,
        eval_every: s.parsed("eval_every", d.eval_every)?,
        valid_limit: optional("valid_limit")?,
    };
    config.validate()?;

    let mut resolved = Settings::default();
    if let Some(data) = s.get("data") {
        resolved.set("data", data);
    }
    resolved.set("missing", s.get("missing").unwrap_or("-"));
    resolved.set("lenient_dates", s.parsed("lenient_dates", false)?);
    resolved.set("d", config.dim);
    resolved.set("k", config.negatives);
    resolved.set("m", config.time_negatives.map_or("auto".to_string(), |m| m.to_string()));
    resolved.set("lr", config.lr);
    resolved.set("batch", config.batch);
    resolved.set("steps", config.steps);
    resolved.set("gamma", config.gamma);
    resolved.set("alpha", config.alpha);
    resolved.set("beta", config.beta);
    resolved.set("variant", config.variant);
    resolved.set("seed", config.seed);
    resolved.set("eval_every", config.eval_every);
    resolved.set("valid_limit", config.valid_limit.map_or("all".to_string(), |n| n.to_string()));
    Ok((resolved, config))
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let (resolved, config) = resolve_train(a)?;
    let dir = data_dir(resolved.get("data").map(Path::new))?;
    let opts = ParseOptions {
        missing: resolved.get("missing").unwrap_or("-").to_string(),
        lenient_dates: resolved.parsed("lenient_dates", false)?,
    };
    let kb = load_kb(dir, &opts)?;
    out_dir(&a.out)?;
    resolved.save(&a.out.join("config.txt"))?;

    let with_lambda = config.beta > 0.0;
    let mut log = String::from("step\tloss\tvalid_mrr");
    if with_lambda {
        log.push_str("\tlambda");
    }
    log.push('\n');
    println!("{}", log.trim_end());
    let outcome = train_with(&kb, &config, |e| {
        let mut line = format!(
            "{}\t{:.6}\t{}",
            e.step,
            e.loss,
            e.valid_mrr.map_or("-".to_string(), |m| format!("{m:.6}"))
        );
        if with_lambda {
            let _ = write!(line, "\t{:.6}", e.smoothness);
        }
        println!("{line}");
        log.push_str(&line);
        log.push('\n');
    });
    write(&a.out.join("train.log"), &log)?;
    let outcome = outcome?;
    let path = a.out.join("model.t2b");
    save_checkpoint(&outcome.params, &path)?;
    match outcome.best_step {
        Some(step) => println!("saved {} (best validation at step {step})", path.display()),
        None => println!("saved {}", path.display()),
    }
    Ok(())
}

#[derive(Args)]
pub struct EvalLinkArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Splits whose known answers are filtered out.
    #[arg(long, default_value = "train,valid")]
    pub filter: String,
    /// Rank objects only, not subjects.
    #[arg(long)]
    pub object_only: bool,
    /// Directory for the report files.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn eval_link(a: &EvalLinkArgs) -> Result<()> {
    let split = parse_split(&a.split)?;
    let filter = SplitMask::parse(&a.filter).ok_or_else(|| UsageError(format!("bad filter `{}`", a.filter)))?;
    let (kb, params) = load_model(&a.model)?;
    let opts = LinkOptions {
        filter,
        both_directions: !a.object_only,
    };
    let report = eval_link_prediction(&params, &kb, kb.split(split), &opts);
    print!("{}", report.to_text());
    if let Some(out) = &a.out {
        out_dir(out)?;
        write(&out.join("link_report.txt"), &report.to_text())?;
        write(&out.join("link_report.tsv"), &report.to_tsv())?;
        let mut snap = Settings::default();
        snap.set("checkpoint", a.model.checkpoint.display());
        snap.set("split", split.name());
        snap.set("filter", filter.names());
        snap.set("object_only", a.object_only);
        snap.save(&out.join("link_config.txt"))?;
    }
    Ok(())
}

#[derive(Args)]
pub struct EvalTimeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Intervals predicted per statement.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Coalescing threshold relative to the seed probability.
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Seed of the random-interval baseline.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn eval_time(a: &EvalTimeArgs) -> Result<()> {
    if a.k == 0 || !(a.tau > 0.0 && a.tau <= 1.0) {
        bail!(UsageError("need k >= 1 and 0 < tau <= 1".into()));
    }
    let split = parse_split(&a.split)?;
    let (kb, params) = load_model(&a.model)?;
    let opts = TimeOptions {
        k: a.k,
        tau: a.tau,
        seed: a.seed,
        baseline_trials: a.trials,
    };
    let statements = kb.split(split);
    let report = eval_time_prediction(&params, statements, &opts);
    print!("{}", report.to_text());
    if let Some(out) = &a.out {
        out_dir(out)?;
        write(&out.join("time_report.txt"), &report.to_text())?;
        write(&out.join("time_report.tsv"), &report.to_tsv())?;
        let year = |t: i64| kb.axis.year(t as usize);
        let mut rows = String::from("subject\trelation\tobject\tgold_lo\tgold_hi\tpredicted\n");
        for p in &report.predictions {
            let st = &statements[p.query];
            let predicted: Vec<String> = p
                .predicted
                .iter()
                .map(|i| format!("{}-{}", year(i.lo), year(i.hi)))
                .collect();
            let _ = writeln!(
                rows,
                "{}\t{}\t{}\t{}\t{}\t{}",
                kb.entities.label(st.subject),
                kb.relation_label(st.relation),
                kb.entities.label(st.object),
                year(p.gold.lo),
                year(p.gold.hi),
                predicted.join(",")
            );
        }
        write(&out.join("time_predictions.tsv"), &rows)?;
        let mut snap = Settings::default();
        snap.set("checkpoint", a.model.checkpoint.display());
        snap.set("split", split.name());
        snap.set("k", a.k);
        snap.set("tau", a.tau);
        snap.set("seed", a.seed);
        snap.set("trials", a.trials);
        snap.save(&out.join("time_config.txt"))?;
    }
    Ok(())
}

#[derive(Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub subject: String,
    /// Relation label; append `^-1` to query subjects instead.
    #[arg(long)]
    pub relation: String,
    /// Year of the query.
    #[arg(long, conflicts_with_all = ["from", "to"])]
    pub time: Option<i32>,
    /// First year of an interval query.
    #[arg(long, requires = "to")]
    pub from: Option<i32>,
    /// Last year of an interval query.
    #[arg(long, requires = "from")]
    pub to: Option<i32>,
    #[arg(long, default_value_t = 10)]
    pub topk: usize,
}

pub fn predict(a: &PredictArgs) -> Result<()> {
    let (kb, params) = load_model(&a.model)?;
    let s = kb.entity_id(&a.subject)?;
    let r = kb.relation_id(&a.relation)?;
    let index = |year: i32| {
        if kb.axis.index(year).is_none() {
            log::warn!("year {year} is outside the time axis and was clamped");
        }
        kb.axis.clamp(year)
    };
    let scores_at = |time: TimeConstraint| -> Result<Vec<f64>> {
        let b = params.box_of_query(&QueryPlan::new(s, r, time))?;
        Ok(params.score_all(&b))
    };

    if let (Some(from), Some(to)) = (a.from, a.to) {
        if from > to {
            bail!(UsageError(format!("--from {from} is after --to {to}")));
        }
        println!("year\tentity\tscore");
        for year in from..=to {
            let scores = scores_at(TimeConstraint::At(index(year)))?;
            let best = (0..scores.len()).fold(0, |b, e| if scores[e] > scores[b] { e } else { b });
            println!("{year}\t{}\t{:.6}", kb.entities.label(best), scores[best]);
        }
        return Ok(());
    }

    let time = a.time.map_or(TimeConstraint::None, |y| TimeConstraint::At(index(y)));
    let scores = scores_at(time)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&x, &y| scores[y].total_cmp(&scores[x]).then(x.cmp(&y)));
    println!("rank\tentity\tscore");
    for (i, &e) in order.iter().take(a.topk).enumerate() {
        println!("{}\t{}\t{:.6}", i + 1, kb.entities.label(e), scores[e]);
    }
    Ok(())
}

#[derive(Args)]
pub struct MetricsArgs {
    /// TSV of `gold_lo gold_hi pred_lo pred_hi`; `-` reads stdin.
    #[arg(long, default_value = "-")]
    pub input: PathBuf,
    /// Defaults to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Appends the three interval metrics to every data row of `input`.
pub fn metrics_table(input: impl Read) -> Result<String> {
    let mut out = String::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let row = line.trim_end();
        if row.trim().is_empty() || row.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = row.split_whitespace().collect();
        if fields.len() < 4 {
            bail!("line {}: expected 4 integer columns", i + 1);
        }
        let mut v = [0i64; 4];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f
                .parse()
                .with_context(|| format!("line {}: `{f}` is not an integer", i + 1))?;
        }
        let gold = Interval::new(v[0], v[1]).with_context(|| format!("line {}: gold lo > hi", i + 1))?;
        let pred = Interval::new(v[2], v[3]).with_context(|| format!("line {}: predicted lo > hi", i + 1))?;
        let _ = writeln!(
            out,
            "{row}\t{:.6}\t{:.6}\t{:.6}",
            giou(gold, pred),
            aeiou(gold, pred),
            gaeiou(gold, pred)
        );
    }
    Ok(out)
}

pub fn metrics(a: &MetricsArgs) -> Result<()> {
    let table = if a.input.as_os_str() == "-" {
        metrics_table(std::io::stdin().lock())?
    } else {
        let file = fs::File::open(&a.input)
            .map_err(|e| UsageError(format!("cannot open {}: {e}", a.input.display())))?;
        metrics_table(file)?
    };
    match &a.output {
        Some(path) => write(path, &table),
        None => {
            print!("{table}");
            Ok(())
        }
    }
}

#[derive(Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// entities, relations or times.
    #[arg(long, default_value = "entities")]
    pub what: String,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn export_embeddings(a: &ExportArgs) -> Result<()> {
    let (kb, params) = load_model(&a.model)?;
    let (block, label): (Block, Box<dyn Fn(usize) -> String>) = match a.what.as_str() {
        "entities" => (Block::Entity, Box::new(|i| kb.entities.label(i).to_string())),
        "relations" => (Block::Relation, Box::new(|i| kb.relation_label(i))),
        "times" => (Block::Time, Box::new(|i| kb.axis.year(i).to_string())),
        other => bail!(UsageError(format!("cannot export `{other}`"))),
    };
    let dim = params.row_len(block);
    let mut out = String::new();
    for (i, row) in params.block(block).chunks_exact(dim).enumerate() {
        out.push_str(&label(i));
        for x in row {
            let _ = write!(out, "\t{x}");
        }
        out.push('\n');
    }
    write(&a.out, &out)?;
    println!("wrote {} rows to {}", params.rows(block), a.out.display());
    Ok(())
}
