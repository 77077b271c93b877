//! Command-line front end. `main.rs` only parses arguments and reports
//! errors; everything else lives here so it can be driven from tests.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::convert::{convert_corpus, label_types, read_conll, simple_tokenize, TokenTransformTable};
use crate::document::{read_jsonl, write_jsonl, AnnotatedDocument};
use crate::error::{Error, Result};
use crate::eval::score;
use crate::model::{AlignmentMode, ModelConfig, NeuralCharCrf, Resources, TrainControl};
use crate::represent::lm::LmCheckpoint;
use crate::represent::{
    select_matches, tokenize_align, Alignment, CharLm, CharVocab, DfCounter, Direction,
    EmbeddingTable, IdfDictionary, LmDims, LmTrainConfig, LmTrainer, Matcher, Slot,
};
use crate::serial::write_atomic;
use crate::tagging::TagSet;
use crate::text::CharSequence;

#[derive(Debug, Parser)]
#[command(name = "rawner", version, about = "Named entity recognition on raw text")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Suppress progress output.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    /// Configuration override, `key=value`. Repeatable; applied after the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an IDF dictionary (word<TAB>idf) from a one-document-per-line corpus.
    BuildDict(BuildDictArgs),
    /// Train a character language model.
    LmTrain(LmTrainArgs),
    /// Train a tagger.
    Train(TrainArgs),
    /// Tag raw text lines or JSONL documents.
    Tag(TagArgs),
    /// Score predictions against gold documents.
    Eval(EvalArgs),
    /// Project word-level CoNLL labels onto raw sentences.
    Convert(ConvertArgs),
    /// Print the per-character word alignment of a text.
    Align(AlignArgs),
}

#[derive(Debug, Args)]
pub struct BuildDictArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Keep only words present in this word2vec text file.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Defaults to the configured `min_df`.
    #[arg(long)]
    pub min_df: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LmTrainArgs {
    /// One document per line.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "forward")]
    pub direction: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch log as JSON lines; the first line is the untrained model.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Rewritten after every epoch.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Continue from a checkpoint instead of starting fresh.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Stop once an epoch's training perplexity falls below this.
    #[arg(long)]
    pub target_perplexity: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training documents (JSONL).
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// word2vec text file; needed by tokenize and match alignment.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// IDF dictionary; needed by match alignment.
    #[arg(long)]
    pub dict: Option<PathBuf>,
    #[arg(long)]
    pub forward_lm: Option<PathBuf>,
    #[arg(long)]
    pub backward_lm: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch log as JSON lines.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum InputFormat {
    Text,
    Jsonl,
}

#[derive(Debug, Args)]
pub struct TagArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to jsonl for `.jsonl` inputs and text otherwise.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub conll: PathBuf,
    /// Raw sentences, one per line, index-matched with the CoNLL blocks.
    #[arg(long)]
    pub raw: PathBuf,
    /// Extra token<TAB>raw transformations on top of the built-in table.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Text to align; otherwise every line of `--input`.
    #[arg(long, conflicts_with = "input")]
    pub text: Option<String>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// tokenize or match; defaults to the configured alignment.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub dict: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Everything a command needs besides its own arguments.
struct Ctx {
    config: ModelConfig,
    quiet: bool,
}

impl Ctx {
    fn progress(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

/// Resolves the configuration: file, then `--set` overrides, then `--seed`.
pub fn resolve_config(cli: &Cli) -> Result<ModelConfig> {
    let mut config = match &cli.config {
        Some(p) => ModelConfig::load(p)?,
        None => ModelConfig::default(),
    };
    for o in &cli.overrides {
        config.set(o)?;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

pub fn run(cli: Cli) -> Result<()> {
    let config = resolve_config(&cli)?;
    let ctx = Ctx {
        config,
        quiet: cli.quiet,
    };
    match &cli.command {
        Command::BuildDict(a) => build_dict(&ctx, a),
        Command::LmTrain(a) => lm_train(&ctx, a),
        Command::Train(a) => train(&ctx, a),
        Command::Tag(a) => tag(&ctx, a),
        Command::Eval(a) => eval(&ctx, a),
        Command::Convert(a) => convert(&ctx, a),
        Command::Align(a) => align(&ctx, a),
    }
}

fn require_files<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<()> {
    for p in paths {
        if !p.is_file() {
            return Err(Error::ResourceNotFound(p.to_path_buf()));
        }
    }
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::ResourceNotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })
}

fn source(path: &Path) -> String {
    path.display().to_string()
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(open(path)?.lines().collect::<std::io::Result<_>>()?)
}

fn read_docs(path: &Path) -> Result<Vec<AnnotatedDocument>> {
    read_jsonl(open(path)?, &source(path))
}

fn write_docs(path: &Path, docs: &[AnnotatedDocument]) -> Result<()> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, docs)?;
    write_atomic(path, &buf)
}

fn write_json_lines<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

fn load_embeddings(path: &Path, seed: u64) -> Result<EmbeddingTable> {
    EmbeddingTable::read_word2vec(open(path)?, &source(path), seed)
}

fn load_dict(path: &Path) -> Result<IdfDictionary> {
    IdfDictionary::read_tsv(open(path)?, &source(path))
}

fn load_lm(path: &Path, direction: Direction) -> Result<CharLm> {
    let lm = CharLm::from_json(&std::fs::read_to_string(path)?)?;
    if lm.direction != direction {
        return Err(Error::Config(format!(
            "{} holds a {:?} language model, expected {direction:?}",
            path.display(),
            lm.direction
        )));
    }
    Ok(lm)
}

fn build_dict(ctx: &Ctx, a: &BuildDictArgs) -> Result<()> {
    require_files(std::iter::once(a.corpus.as_path()).chain(a.embeddings.as_deref()))?;
    let min_df = a.min_df.unwrap_or(ctx.config.min_df);
    let table = a
        .embeddings
        .as_deref()
        .map(|p| load_embeddings(p, ctx.config.seed))
        .transpose()?;
    let mut counter = DfCounter::new();
    for line in open(&a.corpus)?.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            counter.add_document(&line);
        }
    }
    let docs = counter.doc_count();
    let dict = counter.finish(min_df, |w| table.as_ref().map_or(true, |t| t.contains(w)))?;
    let mut buf = Vec::new();
    dict.write_tsv(&mut buf)?;
    write_atomic(&a.out, &buf)?;
    ctx.progress(format!("{} words from {docs} documents", dict.len()));
    Ok(())
}

fn lm_train_config(config: &ModelConfig, target: Option<f64>) -> LmTrainConfig {
    LmTrainConfig {
        epochs: config.lm_epochs,
        lr: config.lm_lr,
        bptt: config.lm_bptt,
        anneal: config.anneal,
        patience: config.patience,
        seed: config.seed,
        optimizer: config.optimizer.build(),
        target_perplexity: target,
        ..LmTrainConfig::default()
    }
}

/// One row of the `lm-train` log.
#[derive(serde::Serialize)]
struct LmLogRow {
    epoch: Option<usize>,
    perplexity: f64,
    lr: f64,
}

fn lm_train(ctx: &Ctx, a: &LmTrainArgs) -> Result<()> {
    let direction: Direction = a.direction.parse()?;
    require_files(std::iter::once(a.corpus.as_path()).chain(a.resume.as_deref()))?;
    let docs: Vec<CharSequence> = read_lines(&a.corpus)?
        .iter()
        .filter(|l| !l.is_empty())
        .map(|l| CharSequence::new(l))
        .collect();
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut trainer = match &a.resume {
        Some(p) => {
            let ck: LmCheckpoint = serde_json::from_str(&std::fs::read_to_string(p)?)?;
            let mut t = LmTrainer::from_checkpoint(ck)?;
            if t.lm.direction != direction {
                return Err(Error::Config("checkpoint direction differs from --direction".into()));
            }
            t.config.epochs = ctx.config.lm_epochs;
            t.config.target_perplexity = a.target_perplexity;
            t
        }
        None => {
            let vocab = CharVocab::new(docs.iter().flat_map(|d| d.chars().iter().copied()));
            let dims = LmDims {
                char_dim: ctx.config.lm_char_dim,
                type_dim: ctx.config.lm_type_dim,
                hidden: ctx.config.lm_hidden,
            };
            let lm = CharLm::new(direction, vocab, dims, ctx.config.seed);
            LmTrainer::new(lm, lm_train_config(&ctx.config, a.target_perplexity))
        }
    };
    let mut rows = vec![LmLogRow {
        epoch: None,
        perplexity: trainer.lm.perplexity(&docs)?,
        lr: trainer.lr,
    }];
    ctx.progress(format!("initial perplexity {:.4}", rows[0].perplexity));
    rows.extend(trainer.log.iter().map(|e| LmLogRow {
        epoch: Some(e.epoch),
        perplexity: e.perplexity,
        lr: e.lr,
    }));
    while trainer.epoch < trainer.config.epochs {
        let e = trainer.run_epoch(&docs)?;
        ctx.progress(format!("epoch {} perplexity {:.4} lr {:e}", e.epoch, e.perplexity, e.lr));
        rows.push(LmLogRow {
            epoch: Some(e.epoch),
            perplexity: e.perplexity,
            lr: e.lr,
        });
        if let Some(p) = &a.checkpoint {
            write_atomic(p, &serde_json::to_vec(&trainer.checkpoint())?)?;
        }
        if trainer.config.target_perplexity.is_some_and(|t| e.perplexity < t) {
            break;
        }
    }
    write_atomic(&a.out, trainer.lm.to_json()?.as_bytes())?;
    if let Some(p) = &a.log {
        write_json_lines(p, &rows)?;
    }
    Ok(())
}

fn train(ctx: &Ctx, a: &TrainArgs) -> Result<()> {
    let cfg = &ctx.config;
    let needs_embeddings = cfg.alignment != AlignmentMode::None;
    let needs_dict = cfg.alignment == AlignmentMode::Match;
    let missing = |flag: &str, why: &str| Error::Config(format!("{flag} is required {why}"));
    if needs_embeddings && a.embeddings.is_none() {
        return Err(missing("--embeddings", "unless alignment = none"));
    }
    if needs_dict && a.dict.is_none() {
        return Err(missing("--dict", "for match alignment"));
    }
    if cfg.contextual && (a.forward_lm.is_none() || a.backward_lm.is_none()) {
        return Err(missing("--forward-lm and --backward-lm", "when contextual = true"));
    }
    require_files(
        [Some(&a.train), a.dev.as_ref(), a.embeddings.as_ref(), a.dict.as_ref()]
            .into_iter()
            .chain([a.forward_lm.as_ref(), a.backward_lm.as_ref()])
            .flatten()
            .map(PathBuf::as_path),
    )?;
    let train_docs = read_docs(&a.train)?;
    if train_docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let dev_docs = a.dev.as_deref().map(read_docs).transpose()?.unwrap_or_default();
    let resources = Resources {
        embeddings: match (&a.embeddings, needs_embeddings) {
            (Some(p), true) => Some(load_embeddings(p, cfg.seed)?),
            _ => None,
        },
        dictionary: match (&a.dict, needs_dict) {
            (Some(p), true) => Some(load_dict(p)?),
            _ => None,
        },
        forward_lm: match (&a.forward_lm, cfg.contextual) {
            (Some(p), true) => Some(load_lm(p, Direction::Forward)?),
            _ => None,
        },
        backward_lm: match (&a.backward_lm, cfg.contextual) {
            (Some(p), true) => Some(load_lm(p, Direction::Backward)?),
            _ => None,
        },
    };
    let texts: Vec<String> = train_docs.iter().map(|d| d.text().to_string()).collect();
    let vocab = CharVocab::from_texts(texts.iter().map(String::as_str), 1);
    let mut model = NeuralCharCrf::new(cfg.clone(), resources, vocab)?;
    let log = model.train(&train_docs, &dev_docs, |e, _| {
        ctx.progress(format!(
            "epoch {} loss {:.6} train {:.6}{} lr {:e}",
            e.epoch,
            e.running_loss,
            e.train_loss,
            e.dev_f1.map(|f| format!(" dev-f1 {f:.4}")).unwrap_or_default(),
            e.lr
        ));
        TrainControl::Continue
    })?;
    model.save(&a.out)?;
    if let Some(p) = &a.log {
        write_atomic(p, serde_json::to_string_pretty(&log)?.as_bytes())?;
    }
    Ok(())
}

fn tag(ctx: &Ctx, a: &TagArgs) -> Result<()> {
    require_files([a.model.as_path(), a.input.as_path()])?;
    let model = NeuralCharCrf::load(&a.model)?;
    let format = a.format.unwrap_or_else(|| {
        if a.input.extension().is_some_and(|e| e == "jsonl") {
            InputFormat::Jsonl
        } else {
            InputFormat::Text
        }
    });
    let texts: Vec<CharSequence> = match format {
        InputFormat::Jsonl => read_docs(&a.input)?.into_iter().map(|d| d.text().clone()).collect(),
        InputFormat::Text => read_lines(&a.input)?.iter().map(|l| CharSequence::new(l)).collect(),
    };
    let preds = texts
        .iter()
        .map(|t| model.predict_document(t))
        .collect::<Result<Vec<_>>>()?;
    write_docs(&a.out, &preds)?;
    ctx.progress(format!("tagged {} documents", preds.len()));
    Ok(())
}

fn eval(_ctx: &Ctx, a: &EvalArgs) -> Result<()> {
    require_files([a.gold.as_path(), a.pred.as_path()])?;
    let report = score(&read_docs(&a.gold)?, &read_docs(&a.pred)?)?;
    print!("{report}");
    std::io::stdout().flush()?;
    if let Some(p) = &a.json {
        write_atomic(p, report.to_json()?.as_bytes())?;
    }
    Ok(())
}

fn convert(ctx: &Ctx, a: &ConvertArgs) -> Result<()> {
    require_files([a.conll.as_path(), a.raw.as_path()].into_iter().chain(a.table.as_deref()))?;
    let mut table = TokenTransformTable::builtin();
    if let Some(p) = &a.table {
        table.extend_from_tsv(open(p)?, &source(p))?;
    }
    let sentences = read_conll(open(&a.conll)?, &source(&a.conll))?;
    let raw = read_lines(&a.raw)?;
    let raw: Vec<String> = raw.into_iter().filter(|l| !l.trim().is_empty()).collect();
    let types = label_types(&sentences);
    let tags = if types.is_empty() {
        TagSet::new(ctx.config.types.clone())?
    } else {
        TagSet::new(types)?
    };
    let docs = convert_corpus(&sentences, &raw, &table, &tags)?;
    write_docs(&a.out, &docs)?;
    ctx.progress(format!("converted {} sentences", docs.len()));
    Ok(())
}

/// Slots of `text` under `mode`. Without an embedding table, tokenize mode
/// shows every token as its own word.
pub fn alignment_for(
    text: &CharSequence,
    mode: AlignmentMode,
    matcher: Option<&Matcher>,
    embeddings: Option<&EmbeddingTable>,
) -> Result<Alignment> {
    match mode {
        AlignmentMode::Match => {
            let m = matcher.ok_or_else(|| Error::Config("match alignment needs --dict".into()))?;
            select_matches(&m.find_matches(text), text)
        }
        AlignmentMode::Tokenize => {
            let tokens = simple_tokenize(text);
            match embeddings {
                Some(table) => {
                    let offsets: Vec<(usize, usize)> = tokens.iter().map(|t| (t.start, t.end)).collect();
                    tokenize_align(text, &offsets, table)
                }
                None => {
                    let mut slots: Vec<Slot> = text
                        .chars()
                        .iter()
                        .map(|&c| if crate::text::is_whitespace(c) { Slot::Whitespace } else { Slot::Unk })
                        .collect();
                    for t in tokens {
                        let word: std::sync::Arc<str> = t.text.into();
                        for s in &mut slots[t.start..t.end] {
                            *s = Slot::Word(word.clone());
                        }
                    }
                    Ok(Alignment::new(slots))
                }
            }
        }
        AlignmentMode::None => Err(Error::Config("alignment mode none has nothing to show".into())),
    }
}

/// `index<TAB>char<TAB>slot` per character; documents separated by a blank line.
pub fn render_alignment(text: &CharSequence, alignment: &Alignment, out: &mut String) {
    for (i, (c, s)) in text.chars().iter().zip(alignment.slots()).enumerate() {
        let shown = match c {
            '\t' => "\\t".to_string(),
            '\n' => "\\n".to_string(),
            c => c.to_string(),
        };
        out.push_str(&format!("{i}\t{shown}\t{}\n", s.label()));
    }
}

fn align(ctx: &Ctx, a: &AlignArgs) -> Result<()> {
    let mode: AlignmentMode = match &a.mode {
        Some(m) => m.parse()?,
        None => ctx.config.alignment,
    };
    require_files(
        [a.input.as_ref(), a.dict.as_ref(), a.embeddings.as_ref()]
            .into_iter()
            .flatten()
            .map(PathBuf::as_path),
    )?;
    let texts: Vec<CharSequence> = match (&a.text, &a.input) {
        (Some(t), _) => vec![CharSequence::new(t)],
        (None, Some(p)) => read_lines(p)?.iter().map(|l| CharSequence::new(l)).collect(),
        (None, None) => return Err(Error::Config("align needs --text or --input".into())),
    };
    let matcher = match (&a.dict, mode) {
        (Some(p), AlignmentMode::Match) => Some(Matcher::new(&load_dict(p)?, ctx.config.case_mode)?),
        (None, AlignmentMode::Match) => return Err(Error::Config("match alignment needs --dict".into())),
        _ => None,
    };
    let embeddings = a
        .embeddings
        .as_deref()
        .map(|p| load_embeddings(p, ctx.config.seed))
        .transpose()?;
    let mut out = String::new();
    for (k, t) in texts.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        let alignment = alignment_for(t, mode, matcher.as_ref(), embeddings.as_ref())?;
        render_alignment(t, &alignment, &mut out);
    }
    match &a.out {
        Some(p) => write_atomic(p, out.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(out.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

/// The single stderr line printed for a failed command.
pub fn error_line(e: &Error) -> String {
    let detail = e.to_string().replace('\n', " ");
    format!("error[{}]: {detail}", e.class())
}
