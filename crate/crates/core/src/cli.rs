//! Command-line frontend. The phases hand off through files:
//! pool → filtered pool → script → replaced script, with `stats` readable
//! at any point.
//!
//! Exit codes: 0 success, 2 usage or configuration, 3 I/O or parse,
//! 4 validation.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::corpus::{DistributionVector, FitnessWeights, Script, SentenceId, SentencePool};
use crate::error::{Error, ErrorKind, Result};
use crate::filters::{load_word_list, run_pipeline, Charset, FilterConfig, PosCriteria};
use crate::fitness::{fitness, FitnessBreakdown};
use crate::ga::{evolve, GaConfig, GaTrace};
use crate::ingest::{load_pool, scan_corpus, write_pool, DistributionSnapshot};
use crate::postprocess::{
    ga_replace, greedy_replace, load_unwanted, strategy_hint, ReplacementRequest, Strategy,
};
use crate::report::{compare_scripts, export_distribution, script_stats};
use crate::synth::{generate, SynthConfig};

#[derive(Parser, Debug)]
#[command(
    name = "scriptbal",
    version,
    about = "Compose balanced multi-set recording scripts"
)]
pub struct Cli {
    /// Flat TOML file presetting any flag; command-line flags win.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Worker threads. Outputs do not depend on this.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the candidate filter cascade over a pool
    Filter(FilterArgs),
    /// Compose a script with the genetic algorithm
    Compose(ComposeArgs),
    /// Replace flagged sentences in a script
    Replace(ReplaceArgs),
    /// Print statistics of a script
    Stats(StatsArgs),
    /// Count unit labels in a reference corpus
    RealDist(RealDistArgs),
    /// Write a synthetic pool and a matching reference distribution
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Preset {
    /// All five stages with the published thresholds
    Strict,
    /// Every stage disabled
    Permissive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CharsetArg {
    Han,
    Any,
}

impl From<CharsetArg> for Charset {
    fn from(c: CharsetArg) -> Self {
        match c {
            CharsetArg::Han => Charset::Han,
            CharsetArg::Any => Charset::Any,
        }
    }
}

#[derive(Args, Debug)]
struct FilterArgs {
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    #[arg(long, value_name = "PATH")]
    output: PathBuf,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Required sentence length in characters; 0 disables the check
    #[arg(long)]
    length: Option<usize>,
    #[arg(long, value_enum)]
    charset: Option<CharsetArg>,
    /// Word list, one per line
    #[arg(long, value_name = "PATH")]
    sensitive: Option<PathBuf>,
    /// TOML tag criteria; repeat for several taggers. Replaces the preset's.
    #[arg(long, value_name = "PATH")]
    pos: Vec<PathBuf>,
    /// Keep sentences with perplexity at or below this
    #[arg(long)]
    perplexity: Option<f64>,
    /// Keep sentences with intelligibility at or above this
    #[arg(long)]
    intelligibility: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct GaFlags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sets: Option<usize>,
    #[arg(long)]
    set_size: Option<usize>,
    /// Population size (even)
    #[arg(long)]
    population: Option<usize>,
    /// Generations without improvement before stopping
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    max_generations: Option<usize>,
    /// Weights of script distribution, coverage and set distribution
    #[arg(long, value_name = "W1,W2,W3")]
    weights: Option<String>,
}

#[derive(Args, Debug)]
struct ComposeArgs {
    /// Candidate pool (JSON lines)
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Reference distribution snapshot
    #[arg(long, value_name = "PATH")]
    real: PathBuf,
    #[arg(long, value_name = "PATH")]
    output: PathBuf,
    #[command(flatten)]
    ga: GaFlags,
}

#[derive(Args, Debug)]
struct ReplaceArgs {
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    #[arg(long, value_name = "PATH")]
    real: PathBuf,
    #[arg(long, value_name = "PATH")]
    script: PathBuf,
    /// One sentence id or set:position per line
    #[arg(long, value_name = "PATH")]
    unwanted: PathBuf,
    #[arg(long, value_name = "PATH")]
    output: PathBuf,
    #[arg(long)]
    strategy: Option<Strategy>,
    #[command(flatten)]
    ga: GaFlags,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    #[arg(long, value_name = "PATH")]
    real: PathBuf,
    #[arg(long, value_name = "PATH")]
    script: PathBuf,
    /// Write the per-unit count table as CSV
    #[arg(long, value_name = "PATH")]
    export: Option<PathBuf>,
    /// Second script; prints field deltas (script minus this one)
    #[arg(long, value_name = "PATH")]
    compare: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RealDistArgs {
    /// Corpus in record format (only `units` is read)
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    #[arg(long, value_name = "PATH")]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Pool to write (JSON lines)
    #[arg(long, value_name = "PATH")]
    output: PathBuf,
    /// Snapshot to write
    #[arg(long, value_name = "PATH")]
    real: PathBuf,
    #[arg(long)]
    sentences: Option<usize>,
    #[arg(long)]
    inventory: Option<usize>,
    #[arg(long)]
    topics: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

/// Keys accepted in the `--config` file. Paths are relative to the file.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    workers: Option<usize>,
    sets: Option<usize>,
    set_size: Option<usize>,
    population: Option<usize>,
    patience: Option<usize>,
    max_generations: Option<usize>,
    weights: Option<String>,
    strategy: Option<String>,
    preset: Option<String>,
    length: Option<usize>,
    charset: Option<String>,
    sensitive: Option<PathBuf>,
    #[serde(default)]
    pos: Vec<PathBuf>,
    perplexity: Option<f64>,
    intelligibility: Option<f64>,
}

impl FileConfig {
    fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.sensitive.as_mut() {
            fix(p);
        }
        cfg.pos.iter_mut().for_each(fix);
        Ok(cfg)
    }
}

fn value_enum<T: ValueEnum>(key: &str, s: &str) -> Result<T> {
    T::from_str(s, true).map_err(|_| Error::Config(format!("bad value {s:?} for {key}")))
}

/// Provenance record written next to every output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<&'static str, PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub duration_secs: f64,
}

impl RunManifest {
    fn new(subcommand: &'static str, config: &impl Serialize) -> Self {
        RunManifest {
            subcommand,
            version: env!("CARGO_PKG_VERSION"),
            seed: None,
            config: serde_json::to_value(config).expect("config serializes"),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            duration_secs: 0.0,
        }
    }

    fn finish(mut self, primary: &Path, started: Instant) -> Result<()> {
        let path = sibling(primary, "manifest.json");
        self.outputs.push(path.clone());
        self.duration_secs = started.elapsed().as_secs_f64();
        write_json(&path, &self)
    }
}

/// `dir/stem.<suffix>` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct ScriptEntry {
    id: SentenceId,
    #[serde(default)]
    text: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScriptFile {
    sets: Vec<Vec<ScriptEntry>>,
}

/// Writes a script as JSON: sets of `{id, text}` entries.
pub fn write_script(path: &Path, script: &Script, pool: &SentencePool) -> Result<()> {
    let sets = script
        .sets()
        .iter()
        .map(|set| {
            set.iter()
                .map(|&id| {
                    Ok(ScriptEntry {
                        id,
                        text: pool.sentence(id)?.text.clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    write_json(path, &ScriptFile { sets })
}

pub fn read_script(path: &Path) -> Result<Script> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ScriptFile =
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
    Script::new(
        file.sets
            .into_iter()
            .map(|set| set.into_iter().map(|e| e.id).collect())
            .collect(),
    )
}

fn load_candidates(path: &Path) -> Result<SentencePool> {
    let loaded = load_pool(path)?;
    if !loaded.rejects.is_empty() {
        eprintln!(
            "warning: {}: skipped {} malformed lines (first at line {})",
            path.display(),
            loaded.rejects.len(),
            loaded.rejects[0].line
        );
    }
    Ok(loaded.pool)
}

fn load_real(path: &Path, pool: &SentencePool) -> Result<DistributionVector> {
    let projected = DistributionSnapshot::load(path)?.project(pool.inventory());
    if projected.empty {
        return Err(Error::Domain(format!(
            "{}: reference distribution is empty",
            path.display()
        )));
    }
    if projected.unknown_tokens > 0.0 {
        eprintln!(
            "warning: {}: {} tokens over {} labels absent from the pool inventory were ignored",
            path.display(),
            projected.unknown_tokens,
            projected.unknown_labels.len()
        );
    }
    Ok(projected.counts)
}

fn ga_config(flags: &GaFlags, file: &FileConfig) -> Result<GaConfig> {
    let d = GaConfig::default();
    let weights = match flags.weights.as_ref().or(file.weights.as_ref()) {
        Some(w) => w.parse::<FitnessWeights>()?,
        None => d.weights,
    };
    let cfg = GaConfig {
        population_size: flags
            .population
            .or(file.population)
            .unwrap_or(d.population_size),
        sets: flags.sets.or(file.sets).unwrap_or(d.sets),
        set_size: flags.set_size.or(file.set_size).unwrap_or(d.set_size),
        weights,
        patience: flags.patience.or(file.patience).unwrap_or(d.patience),
        max_generations: flags
            .max_generations
            .or(file.max_generations)
            .unwrap_or(d.max_generations),
        seed: flags.seed.or(file.seed).unwrap_or(d.seed),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn filter_config(args: &FilterArgs, file: &FileConfig) -> Result<FilterConfig> {
    let preset = match (args.preset, file.preset.as_deref()) {
        (Some(p), _) => p,
        (None, Some(s)) => value_enum("preset", s)?,
        (None, None) => Preset::Strict,
    };
    let mut cfg = match preset {
        Preset::Strict => FilterConfig::default(),
        Preset::Permissive => FilterConfig::permissive(),
    };
    if let Some(n) = args.length.or(file.length) {
        cfg.required_length = (n > 0).then_some(n);
    }
    match (args.charset, file.charset.as_deref()) {
        (Some(c), _) => cfg.charset = c.into(),
        (None, Some(s)) => cfg.charset = value_enum::<CharsetArg>("charset", s)?.into(),
        (None, None) => {}
    }
    if let Some(p) = args.sensitive.as_ref().or(file.sensitive.as_ref()) {
        cfg.sensitive_words = load_word_list(p)?;
    }
    let pos = if args.pos.is_empty() {
        &file.pos
    } else {
        &args.pos
    };
    if !pos.is_empty() {
        cfg.pos_criteria = pos.iter().map(PosCriteria::load).collect::<Result<_>>()?;
    }
    if let Some(t) = args.perplexity.or(file.perplexity) {
        cfg.perplexity_threshold = Some(t);
    }
    if let Some(t) = args.intelligibility.or(file.intelligibility) {
        cfg.intelligibility_threshold = Some(t);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_filter(args: &FilterArgs, file: &FileConfig) -> Result<()> {
    let started = Instant::now();
    let cfg = filter_config(args, file)?;
    let pool = load_candidates(&args.input)?;
    let (kept, report) = run_pipeline(&pool, &cfg)?;
    write_pool(&args.output, &kept)?;
    let report_path = sibling(&args.output, "report.json");
    write_json(&report_path, &report)?;
    if !report.untagged.is_empty() && !cfg.pos_criteria.is_empty() {
        eprintln!(
            "warning: {} sentences had no tags and skipped the pos stage",
            report.untagged.len()
        );
    }
    eprintln!("kept {} of {} sentences", report.survivors, report.input);

    let mut m = RunManifest::new("filter", &cfg);
    m.inputs.insert("pool", args.input.clone());
    m.outputs = vec![args.output.clone(), report_path];
    m.finish(&args.output, started)
}

#[derive(Serialize)]
struct ComposeFitness<'a> {
    best: &'a FitnessBreakdown,
    initial_best: &'a FitnessBreakdown,
    generations: usize,
}

fn cmd_compose(args: &ComposeArgs, file: &FileConfig) -> Result<()> {
    let started = Instant::now();
    let cfg = ga_config(&args.ga, file)?;
    let pool = load_candidates(&args.input)?;
    let d_real = load_real(&args.real, &pool)?;
    let out = evolve(&pool, &d_real, &cfg)?;

    write_script(&args.output, &out.best, &pool)?;
    let fitness_path = sibling(&args.output, "fitness.json");
    write_json(
        &fitness_path,
        &ComposeFitness {
            best: &out.breakdown,
            initial_best: &out.initial_breakdown,
            generations: out.trace.records.len(),
        },
    )?;
    let trace_path = sibling(&args.output, "trace.csv");
    out.trace.write_csv(&trace_path)?;
    eprintln!(
        "fitness {:.6} after {} generations (initial best {:.6})",
        out.breakdown.total,
        out.trace.records.len(),
        out.initial_breakdown.total
    );

    let mut m = RunManifest::new("compose", &cfg);
    m.seed = Some(cfg.seed);
    m.inputs.insert("pool", args.input.clone());
    m.inputs.insert("real", args.real.clone());
    m.outputs = vec![args.output.clone(), fitness_path, trace_path];
    m.finish(&args.output, started)
}

#[derive(Serialize)]
struct ReplaceFitness<'a> {
    before: &'a FitnessBreakdown,
    after: &'a FitnessBreakdown,
    replaced: usize,
}

#[derive(Serialize)]
struct ReplaceConfig<'a> {
    strategy: Strategy,
    #[serde(flatten)]
    ga: &'a GaConfig,
}

fn cmd_replace(args: &ReplaceArgs, file: &FileConfig) -> Result<()> {
    let started = Instant::now();
    let strategy = match (args.strategy, file.strategy.as_deref()) {
        (Some(s), _) => s,
        (None, Some(s)) => s.parse()?,
        (None, None) => Strategy::Greedy,
    };
    let mut cfg = ga_config_lenient(&args.ga, file)?;
    let pool = load_candidates(&args.input)?;
    let d_real = load_real(&args.real, &pool)?;
    let script = read_script(&args.script)?;
    script.validate(&pool)?;
    (cfg.sets, cfg.set_size) = script.shape();
    cfg.validate()?;

    let req = ReplacementRequest::new(script.clone(), load_unwanted(&args.unwanted)?);
    let slots = req.slots()?;
    if let Some(hint) = strategy_hint(strategy, slots.len() as f64 / script.len().max(1) as f64) {
        eprintln!("hint: {hint}");
    }
    let before = fitness(&script, &pool, &d_real, cfg.weights)?;
    let (replaced, after, trace): (Script, FitnessBreakdown, Option<GaTrace>) = match strategy {
        Strategy::Greedy => {
            let (s, b) = greedy_replace(&req, &pool, &d_real, cfg.weights)?;
            (s, b, None)
        }
        Strategy::Ga => {
            let (s, b, t) = ga_replace(&req, &pool, &d_real, &cfg)?;
            (s, b, Some(t))
        }
    };

    write_script(&args.output, &replaced, &pool)?;
    let fitness_path = sibling(&args.output, "fitness.json");
    write_json(
        &fitness_path,
        &ReplaceFitness {
            before: &before,
            after: &after,
            replaced: slots.len(),
        },
    )?;
    let mut outputs = vec![args.output.clone(), fitness_path];
    if let Some(t) = trace {
        let p = sibling(&args.output, "trace.csv");
        t.write_csv(&p)?;
        outputs.push(p);
    }
    eprintln!(
        "replaced {} sentences with {strategy}: fitness {:.6} -> {:.6}",
        slots.len(),
        before.total,
        after.total
    );

    let mut m = RunManifest::new("replace", &ReplaceConfig { strategy, ga: &cfg });
    m.seed = (strategy == Strategy::Ga).then_some(cfg.seed);
    m.inputs.insert("pool", args.input.clone());
    m.inputs.insert("real", args.real.clone());
    m.inputs.insert("script", args.script.clone());
    m.inputs.insert("unwanted", args.unwanted.clone());
    m.outputs = outputs;
    m.finish(&args.output, started)
}

/// Like [`ga_config`] but leaves shape checks to the caller, whose shape
/// comes from an existing script.
fn ga_config_lenient(flags: &GaFlags, file: &FileConfig) -> Result<GaConfig> {
    let shape_free = GaFlags {
        sets: Some(1),
        set_size: Some(1),
        seed: flags.seed,
        population: flags.population,
        patience: flags.patience,
        max_generations: flags.max_generations,
        weights: flags.weights.clone(),
    };
    ga_config(&shape_free, file)
}

fn cmd_stats(args: &StatsArgs) -> Result<()> {
    let pool = load_candidates(&args.input)?;
    let d_real = load_real(&args.real, &pool)?;
    let script = read_script(&args.script)?;
    let stats = script_stats(&script, &pool, &d_real)?;
    print!("{stats}");
    if let Some(path) = &args.export {
        export_distribution(pool.inventory(), &stats.histogram, &d_real, path)?;
    }
    if let Some(other) = &args.compare {
        let b = script_stats(&read_script(other)?, &pool, &d_real)?;
        println!();
        print!("{}", compare_scripts(&stats, &b)?);
    }
    Ok(())
}

fn cmd_real_dist(args: &RealDistArgs) -> Result<()> {
    let scan = scan_corpus(&args.input)?;
    if !scan.malformed.is_empty() {
        eprintln!(
            "warning: {}: skipped {} malformed lines",
            args.input.display(),
            scan.malformed.len()
        );
    }
    scan.snapshot.save(&args.output)?;
    eprintln!(
        "{} labels from {} lines",
        scan.snapshot.labels.len(),
        scan.lines
    );
    Ok(())
}

fn cmd_synth(args: &SynthArgs, file: &FileConfig) -> Result<()> {
    let d = SynthConfig::default();
    let cfg = SynthConfig {
        sentences: args.sentences.unwrap_or(d.sentences),
        inventory: args.inventory.unwrap_or(d.inventory),
        topics: args.topics.unwrap_or(d.topics),
        seed: args.seed.or(file.seed).unwrap_or(d.seed),
        ..d
    };
    let corpus = generate(&cfg)?;
    write_pool(&args.output, &corpus.pool)?;
    DistributionSnapshot::from_vector(corpus.pool.inventory(), &corpus.d_real).save(&args.real)
}

fn dispatch(command: &Command, file: &FileConfig) -> Result<()> {
    match command {
        Command::Filter(a) => cmd_filter(a, file),
        Command::Compose(a) => cmd_compose(a, file),
        Command::Replace(a) => cmd_replace(a, file),
        Command::Stats(a) => cmd_stats(a),
        Command::RealDist(a) => cmd_real_dist(a),
        Command::Synth(a) => cmd_synth(a, file),
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match cli.workers.or(file.workers) {
        Some(0) => Err(Error::Config("workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| dispatch(&cli.command, &file)),
        None => dispatch(&cli.command, &file),
    }
}

pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Usage => 2,
        ErrorKind::Io => 3,
        ErrorKind::Validation => 4,
    }
}

/// Parses `args` (including the program name), runs, and returns the exit
/// status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(e.kind())
        }
    }
}
