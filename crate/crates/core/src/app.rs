//! Command-line front end. `main.rs` only forwards to [`main`].

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::complementarity::{comp_prf, comp_rate, error_set};
use crate::config::{CorpusSection, RunConfig, Task};
use crate::error::{Error, Result};
use crate::expr::{ExprParser, ExprTree, Op};
use crate::ingest::{ingest_corpus, DisambiguationPolicy, IngestedCorpus};
use crate::model::{GroupFilter, ALL_GROUPS};
use crate::report::{emit_table, CompRow, CuiRow, Format, MetricRow, Table};
use crate::search::{
    cross_group_union_merge, cui_ensemble_eval, grid_search, majority_vote_eval, CuiLevel, PreparedMasks,
    SearchConfig, SearchMode,
};
use crate::synth::{generate, SourceSpec, SynthSpec, GOLD_SOURCE};

#[derive(Debug, Parser)]
#[command(name = "boolens", version, about = "Boolean combination ensembles for NER and CUI evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// csv, markdown, or json.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Group label, `all`, or `each`.
    #[arg(long, global = true)]
    pub group: Option<String>,
    /// Comma-separated subset of the configured systems.
    #[arg(long, global = true)]
    pub systems: Option<String>,
    /// Ensemble expression; repeatable.
    #[arg(long, global = true)]
    pub expr: Vec<String>,
    /// CUI matching level: doc or mention.
    #[arg(long, global = true)]
    pub level: Option<String>,
    #[arg(long, global = true)]
    pub top_k: Option<usize>,
    /// Sample budget; implies sampled search unless the config says otherwise.
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    /// Merge assignments `Group=Source,...`.
    #[arg(long, global = true)]
    pub assign: Option<String>,
    /// Output file (single task) or directory (`run`, `synth`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Score each system on its own.
    NerEval,
    /// Score given ensemble expressions.
    EnsembleEval,
    /// Grid search over the ensemble space.
    Search,
    /// Per-character majority vote.
    Vote,
    /// CUI matching at document or mention level.
    CuiEval,
    /// Pairwise complementarity.
    Complementarity,
    /// Union of per-group sources, scored on all groups.
    Merge,
    /// Generate a synthetic corpus and a matching config.
    Synth,
    /// Run every task listed in the config.
    Run,
}

impl Command {
    fn task(self) -> Option<Task> {
        Some(match self {
            Command::NerEval => Task::NerEval,
            Command::EnsembleEval => Task::EnsembleEval,
            Command::Search => Task::Search,
            Command::Vote => Task::Vote,
            Command::CuiEval => Task::CuiEval,
            Command::Complementarity => Task::Complementarity,
            Command::Merge => Task::Merge,
            Command::Synth | Command::Run => return None,
        })
    }
}

/// Parses arguments, runs, reports errors on stderr, and returns the exit
/// code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_cli(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run_cli(cli: &Cli) -> Result<()> {
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(e.to_string()))?
            .install(|| dispatch(cli)),
        None => dispatch(cli),
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.command == Command::Synth {
        return synth_command(cli, &cfg);
    }
    let session = Session::open(cli, &cfg)?;
    let tasks = match cli.command.task() {
        Some(t) => vec![t],
        None if cfg.tasks.is_empty() => return Err(Error::config("config lists no tasks to run")),
        None => cfg.tasks.clone(),
    };
    // everything is computed before anything is written
    let mut reports = Vec::with_capacity(tasks.len());
    for t in &tasks {
        let table = session.task(*t)?;
        reports.push((*t, emit_table(&table, session.format)?));
    }
    write_reports(cli, session.format, reports)
}

fn extension(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Markdown => "md",
        Format::Json => "json",
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_reports(cli: &Cli, format: Format, reports: Vec<(Task, String)>) -> Result<()> {
    match (&cli.out, cli.command) {
        (Some(dir), Command::Run) => {
            for (t, text) in &reports {
                write_file(&dir.join(format!("{}.{}", t.name(), extension(format))), text)?;
            }
            Ok(())
        }
        (Some(file), _) => write_file(file, &reports[0].1),
        (None, _) => {
            let mut out = std::io::stdout().lock();
            let n = reports.len();
            for (i, (_, text)) in reports.iter().enumerate() {
                out.write_all(text.as_bytes())
                    .and_then(|_| if i + 1 < n { out.write_all(b"\n") } else { Ok(()) })
                    .map_err(|e| Error::io("<stdout>", e))?;
            }
            Ok(())
        }
    }
}

struct Session<'a> {
    cli: &'a Cli,
    cfg: &'a RunConfig,
    seed: u64,
    format: Format,
    corpus: IngestedCorpus,
    gold: String,
    systems: Vec<String>,
    groups: Vec<GroupFilter>,
}

impl<'a> Session<'a> {
    fn open(cli: &'a Cli, cfg: &'a RunConfig) -> Result<Self> {
        let format = match (&cli.format, cfg.format) {
            (Some(s), _) => s.parse()?,
            (None, Some(f)) => f,
            (None, None) => Format::Csv,
        };
        let inputs = cfg.corpus_inputs()?;
        let seed = cli
            .seed
            .or(cfg.seed)
            .ok_or_else(|| Error::config("a seed is required (--seed or `seed` in the config)"))?;
        let corpus = ingest_corpus(&inputs, &DisambiguationPolicy::new(seed))?;
        let configured: Vec<String> = cfg.systems.keys().cloned().collect();
        let systems = match &cli.systems {
            None => configured,
            Some(list) => {
                let picked: Vec<String> = list
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect();
                if let Some(bad) = picked.iter().find(|s| !configured.contains(s)) {
                    return Err(Error::config(format!("system {bad:?} is not configured")));
                }
                if picked.is_empty() {
                    return Err(Error::config("--systems is empty"));
                }
                picked
            }
        };
        let label = cli.group.as_deref().or(cfg.group.as_deref()).unwrap_or("each");
        let groups = if label == "each" {
            std::iter::once(GroupFilter::All)
                .chain(corpus.store.group_universe().iter().cloned().map(GroupFilter::Group))
                .collect()
        } else {
            match label.parse::<GroupFilter>()? {
                GroupFilter::All => vec![GroupFilter::All],
                GroupFilter::Group(g) => {
                    let name = corpus
                        .group_map
                        .resolve_group_label(&g)
                        .ok_or_else(|| Error::config(format!("unknown group {g:?}")))?;
                    vec![GroupFilter::Group(name.to_string())]
                }
            }
        };
        Ok(Session {
            cli,
            cfg,
            seed,
            format,
            gold: inputs.gold_source,
            corpus,
            systems,
            groups,
        })
    }

    fn corpus_name(&self) -> String {
        self.corpus.store.corpus_name()
    }

    fn expressions(&self) -> Result<Vec<ExprTree>> {
        let raw = if self.cli.expr.is_empty() { &self.cfg.expressions } else { &self.cli.expr };
        let parser = ExprParser::new().known_sources(self.systems.iter().map(String::as_str));
        raw.iter().map(|s| parser.parse(s)).collect()
    }

    fn task(&self, task: Task) -> Result<Table> {
        match task {
            Task::NerEval => self.ner_eval(),
            Task::EnsembleEval => self.ensemble_eval(),
            Task::Search => self.search(),
            Task::Vote => self.vote(),
            Task::CuiEval => self.cui_eval(),
            Task::Complementarity => self.complementarity(),
            Task::Merge => self.merge(),
        }
    }

    fn scored_rows(&self, trees: &[ExprTree]) -> Result<Vec<MetricRow>> {
        let mut rows = Vec::new();
        for g in &self.groups {
            let prepared = PreparedMasks::new(&self.corpus.store, &self.gold, &self.systems, g)?;
            for t in trees {
                rows.push(MetricRow {
                    corpus: self.corpus_name(),
                    group: g.label().to_string(),
                    combination: t.to_string(),
                    metrics: prepared.score(t)?,
                });
            }
        }
        Ok(rows)
    }

    fn ner_eval(&self) -> Result<Table> {
        let leaves: Vec<ExprTree> = self.systems.iter().map(|s| ExprTree::leaf(s.as_str())).collect();
        Ok(Table::SingleSystems(self.scored_rows(&leaves)?))
    }

    fn ensemble_eval(&self) -> Result<Table> {
        let trees = self.expressions()?;
        if trees.is_empty() {
            return Err(Error::config("ensemble_eval needs --expr or `expressions` in the config"));
        }
        Ok(Table::SingleSystems(self.scored_rows(&trees)?))
    }

    fn search(&self) -> Result<Table> {
        let s = &self.cfg.search;
        let budget = self.cli.budget.or(s.budget);
        let mut results = Vec::new();
        for g in &self.groups {
            let mut c = SearchConfig::new(self.systems.iter().cloned());
            c.group = g.clone();
            c.seed = self.seed;
            c.min_size = s.min_size.unwrap_or(1);
            c.max_size = s.max_size.unwrap_or(self.systems.len());
            c.mode = s.mode.unwrap_or(if budget.is_some() { SearchMode::Sampled } else { SearchMode::Exhaustive });
            c.budget = budget.unwrap_or(c.budget);
            c.top_k = self.cli.top_k.or(s.top_k).unwrap_or(c.top_k);
            c.relax_f1_only = s.relax_f1_only;
            results.push(grid_search(&self.corpus.store, &self.gold, &c)?);
        }
        Ok(Table::EnsemblePanels(results))
    }

    fn vote(&self) -> Result<Table> {
        let mut rows = Vec::new();
        for g in &self.groups {
            rows.push(MetricRow {
                corpus: self.corpus_name(),
                group: g.label().to_string(),
                combination: format!("vote({})", self.systems.join(",")),
                metrics: majority_vote_eval(&self.corpus.store, &self.systems, &self.gold, g, self.seed)?,
            });
        }
        Ok(Table::Vote(rows))
    }

    fn cui_eval(&self) -> Result<Table> {
        let level = match (&self.cli.level, self.cfg.level) {
            (Some(s), _) => s.parse()?,
            (None, Some(l)) => l,
            (None, None) => CuiLevel::Doc,
        };
        let mut trees = self.expressions()?;
        if trees.is_empty() {
            trees = self.systems.iter().map(|s| ExprTree::leaf(s.as_str())).collect();
            if self.systems.len() > 1 {
                let leaves = self.systems.iter().map(|s| ExprTree::leaf(s.as_str()));
                trees.push(ExprTree::fold_left(Op::Or, leaves));
            }
        }
        let mut rows = Vec::new();
        for t in &trees {
            rows.push(CuiRow {
                corpus: self.corpus_name(),
                level,
                combination: t.to_string(),
                result: cui_ensemble_eval(&self.corpus.store, t, &self.gold, level, self.seed)?,
            });
        }
        Ok(Table::Cui(rows))
    }

    fn complementarity(&self) -> Result<Table> {
        if self.systems.len() < 2 {
            return Err(Error::config("complementarity needs at least two systems"));
        }
        let mut rows = Vec::new();
        for g in &self.groups {
            let p = PreparedMasks::new(&self.corpus.store, &self.gold, &self.systems, g)?;
            let errors: BTreeMap<&str, _> = p
                .sources
                .iter()
                .map(|(s, m)| Ok((s.as_str(), error_set(&p.gold, m)?)))
                .collect::<Result<_>>()?;
            for a in &self.systems {
                for b in &self.systems {
                    if a == b {
                        continue;
                    }
                    let (ea, eb) = (&errors[a.as_str()], &errors[b.as_str()]);
                    rows.push(CompRow {
                        corpus: self.corpus_name(),
                        group: g.label().to_string(),
                        system_a: a.clone(),
                        system_b: b.clone(),
                        errors_a: ea.len() as u64,
                        shared_errors: ea.intersect(eb)?.len() as u64,
                        comp_rate: comp_rate(ea, eb)?,
                        restricted: comp_prf(&p.gold, &p.sources[a], &p.sources[b])?,
                    });
                }
            }
        }
        Ok(Table::Complementarity(rows))
    }

    fn merge(&self) -> Result<Table> {
        let assignments: BTreeMap<String, String> = match &self.cli.assign {
            Some(s) => s
                .split(',')
                .filter(|p| !p.trim().is_empty())
                .map(|pair| {
                    let (g, src) = pair
                        .split_once('=')
                        .ok_or_else(|| Error::config(format!("assignment {pair:?} is not Group=Source")))?;
                    Ok((g.trim().to_string(), src.trim().to_string()))
                })
                .collect::<Result<_>>()?,
            None => self.cfg.merge.clone(),
        };
        let assignments: BTreeMap<String, String> = assignments
            .into_iter()
            .map(|(g, s)| {
                let name = self
                    .corpus
                    .group_map
                    .resolve_group_label(&g)
                    .ok_or_else(|| Error::config(format!("unknown group {g:?}")))?;
                Ok((name.to_string(), s))
            })
            .collect::<Result<_>>()?;
        let label = assignments
            .iter()
            .map(|(g, s)| format!("{g}:{s}"))
            .collect::<Vec<_>>()
            .join("|");
        let metrics = cross_group_union_merge(&self.corpus.store, &assignments, &self.gold)?;
        Ok(Table::SingleSystems(vec![MetricRow {
            corpus: self.corpus_name(),
            group: ALL_GROUPS.to_string(),
            combination: label,
            metrics,
        }]))
    }
}

/// Default five-system demo corpus.
pub fn demo_spec(seed: u64) -> SynthSpec {
    let src = |name: &str, miss: f64, spurious: f64, jitter: usize| SourceSpec {
        name: name.into(),
        miss_rate: miss,
        spurious_rate: spurious,
        jitter,
        cui_error_rate: 0.15,
        overlap_rate: 0.05,
        groups: Vec::new(),
    };
    SynthSpec {
        n_docs: 100,
        doc_length: 2000,
        sources: vec![
            src("A", 0.30, 4.0, 1),
            src("B", 0.20, 8.0, 2),
            src("C", 0.40, 2.0, 0),
            src("D", 0.25, 6.0, 1),
            src("E", 0.35, 3.0, 2),
        ],
        correlation: 0.3,
        seed,
        ..Default::default()
    }
}

fn synth_command(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    let dir = cli
        .out
        .as_ref()
        .ok_or_else(|| Error::config("synth needs --out <directory>"))?;
    let mut spec = match &cfg.synth {
        Some(s) => s.clone(),
        None => {
            let seed = cli
                .seed
                .or(cfg.seed)
                .ok_or_else(|| Error::config("a seed is required (--seed or a [synth] section)"))?;
            demo_spec(seed)
        }
    };
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    let corpus = generate(&spec)?;
    let files = corpus.write(dir)?;
    let rel = |p: &Path| PathBuf::from(p.file_name().expect("file name"));
    let run = RunConfig {
        seed: Some(spec.seed),
        gold_source: Some(GOLD_SOURCE.into()),
        tasks: vec![Task::NerEval, Task::Search, Task::Vote, Task::CuiEval, Task::Complementarity],
        corpus: Some(CorpusSection {
            manifest: rel(&files.manifest),
            gold: rel(&files.gold),
            semgroups: rel(&files.semgroups),
            overrides: None,
        }),
        systems: files.systems.iter().map(|(n, p)| (n.clone(), rel(p))).collect(),
        ..Default::default()
    };
    let cfg_path = dir.join("config.toml");
    write_file(&cfg_path, &run.to_toml()?)?;
    println!(
        "wrote {} documents, {} gold spans, {} systems to {}",
        corpus.documents.len(),
        corpus.gold.len(),
        corpus.sources.len(),
        dir.display()
    );
    Ok(())
}
