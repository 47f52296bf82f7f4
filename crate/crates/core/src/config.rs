//! TOML run configuration. Relative paths resolve against the config file's
//! directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::CorpusInputs;
use crate::report::Format;
use crate::search::{CuiLevel, SearchMode};
use crate::synth::SynthSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    NerEval,
    EnsembleEval,
    Search,
    Vote,
    CuiEval,
    Complementarity,
    Merge,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::NerEval => "ner_eval",
            Task::EnsembleEval => "ensemble_eval",
            Task::Search => "search",
            Task::Vote => "vote",
            Task::CuiEval => "cui_eval",
            Task::Complementarity => "complementarity",
            Task::Merge => "merge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub manifest: PathBuf,
    pub gold: PathBuf,
    pub semgroups: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overrides: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<SearchMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_k: Option<usize>,
    pub relax_f1_only: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Group label, `all`, or `each` (all groups plus every group).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gold_source: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tasks: Vec<Task>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<CorpusSection>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub systems: BTreeMap<String, PathBuf>,
    /// Expressions for `ensemble_eval` and `cui_eval`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub expressions: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<CuiLevel>,
    pub search: SearchSection,
    /// Group to source assignments for the cross-group merge.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub merge: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::parse(&text, path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::ParseLine {
                path: origin.to_path_buf(),
                line,
                message: e.message().to_string(),
            }
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(c) = &mut self.corpus {
            fix(&mut c.manifest);
            fix(&mut c.gold);
            fix(&mut c.semgroups);
            if let Some(o) = &mut c.overrides {
                fix(o);
            }
        }
        for p in self.systems.values_mut() {
            fix(p);
        }
    }

    pub fn gold_source(&self) -> &str {
        self.gold_source.as_deref().unwrap_or("gold")
    }

    /// Ingest inputs, checking that every referenced file exists.
    pub fn corpus_inputs(&self) -> Result<CorpusInputs> {
        let c = self
            .corpus
            .as_ref()
            .ok_or_else(|| Error::config("config has no [corpus] section"))?;
        if self.systems.is_empty() {
            return Err(Error::config("config lists no [systems]"));
        }
        let mut paths: Vec<&Path> = vec![&c.manifest, &c.gold, &c.semgroups];
        paths.extend(c.overrides.as_deref());
        paths.extend(self.systems.values().map(PathBuf::as_path));
        for p in paths {
            if !p.is_file() {
                return Err(Error::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "file not found")));
            }
        }
        Ok(CorpusInputs {
            manifest: c.manifest.clone(),
            gold: c.gold.clone(),
            gold_source: self.gold_source().to_string(),
            systems: self.systems.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            semgroups: c.semgroups.clone(),
            overrides: c.overrides.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_resolve() {
        let text = r#"
seed = 7
format = "markdown"
tasks = ["ner_eval", "search"]

[corpus]
manifest = "manifest.jsonl"
gold = "/abs/gold.jsonl"
semgroups = "semgroups.txt"

[systems]
A = "A.jsonl"

[search]
top_k = 3
mode = "sampled"
"#;
        let mut c = RunConfig::parse(text, Path::new("x.toml")).unwrap();
        c.resolve_paths(Path::new("/data"));
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.search.mode, Some(SearchMode::Sampled));
        let corpus = c.corpus.as_ref().unwrap();
        assert_eq!(corpus.manifest, PathBuf::from("/data/manifest.jsonl"));
        assert_eq!(corpus.gold, PathBuf::from("/abs/gold.jsonl"));
        assert_eq!(c.systems["A"], PathBuf::from("/data/A.jsonl"));
        let back = RunConfig::parse(&c.to_toml().unwrap(), Path::new("y.toml")).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn errors_carry_line() {
        match RunConfig::parse("seed = 1\nbogus = true\n", Path::new("x.toml")).unwrap_err() {
            Error::ParseLine { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
    }
}
