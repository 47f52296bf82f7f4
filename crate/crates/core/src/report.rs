//! Result tables in CSV, Markdown, and JSON.
//!
//! Rows are ordered by corpus, group, then combination string. Markdown
//! rounds to two decimals; CSV and JSON keep full precision.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{CuiMetricsResult, MetricsResult};
use crate::search::{CuiLevel, ScoredEnsemble, SearchResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Markdown,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            "json" => Ok(Format::Json),
            _ => Err(Error::config(format!("unknown format {s:?} (csv|markdown|json)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    SingleSystems,
    EnsemblePanels,
    Vote,
    Cui,
    Complementarity,
}

/// One scored system, ensemble, or vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub corpus: String,
    pub group: String,
    pub combination: String,
    pub metrics: MetricsResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuiRow {
    pub corpus: String,
    pub level: CuiLevel,
    pub combination: String,
    pub result: CuiMetricsResult,
}

/// Ordered system pair: how `system_b` does where `system_a` errs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompRow {
    pub corpus: String,
    pub group: String,
    pub system_a: String,
    pub system_b: String,
    pub errors_a: u64,
    pub shared_errors: u64,
    pub comp_rate: f64,
    pub restricted: MetricsResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", content = "rows", rename_all = "snake_case")]
pub enum Table {
    SingleSystems(Vec<MetricRow>),
    EnsemblePanels(Vec<SearchResult>),
    Vote(Vec<MetricRow>),
    Cui(Vec<CuiRow>),
    Complementarity(Vec<CompRow>),
}

impl Table {
    pub fn layout(&self) -> Layout {
        match self {
            Table::SingleSystems(_) => Layout::SingleSystems,
            Table::EnsemblePanels(_) => Layout::EnsemblePanels,
            Table::Vote(_) => Layout::Vote,
            Table::Cui(_) => Layout::Cui,
            Table::Complementarity(_) => Layout::Complementarity,
        }
    }

    fn sorted(&self) -> Table {
        let key = |r: &MetricRow| (r.corpus.clone(), r.group.clone(), r.combination.clone());
        match self {
            Table::SingleSystems(v) => {
                let mut v = v.clone();
                v.sort_by_key(key);
                Table::SingleSystems(v)
            }
            Table::Vote(v) => {
                let mut v = v.clone();
                v.sort_by_key(key);
                Table::Vote(v)
            }
            Table::EnsemblePanels(v) => {
                let mut v = v.clone();
                v.sort_by(|a, b| (&a.corpus, &a.group).cmp(&(&b.corpus, &b.group)));
                Table::EnsemblePanels(v)
            }
            Table::Cui(v) => {
                let mut v = v.clone();
                v.sort_by(|a, b| {
                    (&a.corpus, a.level as u8, &a.combination).cmp(&(&b.corpus, b.level as u8, &b.combination))
                });
                Table::Cui(v)
            }
            Table::Complementarity(v) => {
                let mut v = v.clone();
                v.sort_by(|a, b| {
                    (&a.corpus, &a.group, &a.system_a, &a.system_b).cmp(&(&b.corpus, &b.group, &b.system_a, &b.system_b))
                });
                Table::Complementarity(v)
            }
        }
    }
}

pub const CSV_COLUMNS: [&str; 17] = [
    "corpus", "group", "combination", "p", "r", "f1", "p_lo", "p_hi", "r_lo", "r_hi", "f1_lo", "f1_hi", "tp", "fp",
    "fn", "n_gold", "n_pred",
];

pub fn emit_table(table: &Table, format: Format) -> Result<String> {
    let table = table.sorted();
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&table).map_err(|e| Error::Validation(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => csv_text(&table),
        Format::Markdown => Ok(markdown(&table)),
    }
}

fn metric_rows(table: &Table) -> Vec<MetricRow> {
    match table {
        Table::SingleSystems(v) | Table::Vote(v) => v.clone(),
        Table::EnsemblePanels(results) => {
            let mut rows: BTreeMap<(String, String, String), MetricRow> = BTreeMap::new();
            for r in results {
                let listed = r
                    .top_f1
                    .iter()
                    .chain(&r.top_precision)
                    .chain(&r.top_recall)
                    .chain(&r.pareto)
                    .chain(&r.beating_all_singles)
                    .chain(&r.singles);
                for e in listed {
                    rows.entry((r.corpus.clone(), r.group.clone(), e.expression.clone()))
                        .or_insert_with(|| MetricRow {
                            corpus: r.corpus.clone(),
                            group: r.group.clone(),
                            combination: e.expression.clone(),
                            metrics: e.metrics,
                        });
                }
            }
            rows.into_values().collect()
        }
        Table::Cui(_) | Table::Complementarity(_) => Vec::new(),
    }
}

fn csv_text(table: &Table) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Validation(format!("csv: {e}"));
    if let Table::Cui(rows) = table {
        w.write_record(["corpus", "level", "combination", "macro_p", "macro_r", "macro_f1", "n_labels"])
            .map_err(err)?;
        for r in rows {
            let level = match r.level {
                CuiLevel::Doc => "doc",
                CuiLevel::Mention => "mention",
            };
            w.write_record([
                r.corpus.clone(),
                level.to_string(),
                r.combination.clone(),
                r.result.macro_precision.to_string(),
                r.result.macro_recall.to_string(),
                r.result.macro_f1.to_string(),
                r.result.per_label.len().to_string(),
            ])
            .map_err(err)?;
        }
    } else if let Table::Complementarity(rows) = table {
        w.write_record([
            "corpus", "group", "system_a", "system_b", "errors_a", "shared_errors", "comp_rate", "p", "r", "f1", "tp",
            "fp", "fn",
        ])
        .map_err(err)?;
        for r in rows {
            let m = &r.restricted;
            w.write_record([
                r.corpus.clone(),
                r.group.clone(),
                r.system_a.clone(),
                r.system_b.clone(),
                r.errors_a.to_string(),
                r.shared_errors.to_string(),
                r.comp_rate.to_string(),
                m.precision.to_string(),
                m.recall.to_string(),
                m.f1.to_string(),
                m.tp.to_string(),
                m.fp.to_string(),
                m.fn_.to_string(),
            ])
            .map_err(err)?;
        }
    } else {
        w.write_record(CSV_COLUMNS).map_err(err)?;
        for r in metric_rows(table) {
            let m = &r.metrics;
            w.write_record([
                r.corpus,
                r.group,
                r.combination,
                m.precision.to_string(),
                m.recall.to_string(),
                m.f1.to_string(),
                m.ci_precision.0.to_string(),
                m.ci_precision.1.to_string(),
                m.ci_recall.0.to_string(),
                m.ci_recall.1.to_string(),
                m.ci_f1.0.to_string(),
                m.ci_f1.1.to_string(),
                m.tp.to_string(),
                m.fp.to_string(),
                m.fn_.to_string(),
                m.n_gold.to_string(),
                m.n_pred.to_string(),
            ])
            .map_err(err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Validation(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Validation(e.to_string()))
}

fn num(x: f64) -> String {
    format!("{x:.2}")
}

/// p, r, F1 rendered `n/a` where the denominator is zero.
fn prf_cells(m: &MetricsResult) -> [String; 3] {
    let p = if m.n_pred == 0 { "n/a".into() } else { num(m.precision) };
    let r = if m.n_gold == 0 { "n/a".into() } else { num(m.recall) };
    let f = if m.n_pred == 0 && m.n_gold == 0 { "n/a".into() } else { num(m.f1) };
    [p, r, f]
}

fn md_row(cells: &[String]) -> String {
    let cells: Vec<String> = cells.iter().map(|c| c.replace('|', "\\|")).collect();
    format!("| {} |\n", cells.join(" | "))
}

fn md_header(cols: &[&str]) -> String {
    let mut s = md_row(&cols.iter().map(|c| c.to_string()).collect::<Vec<_>>());
    s.push_str(&md_row(&cols.iter().map(|_| "---".to_string()).collect::<Vec<_>>()));
    s
}

fn markdown(table: &Table) -> String {
    let mut s = String::new();
    match table {
        Table::SingleSystems(rows) | Table::Vote(rows) => {
            let label = if table.layout() == Layout::Vote { "Voters" } else { "System" };
            s.push_str(&md_header(&["Corpus", "Group", label, "n", "p", "r", "F1", "F1 95% CI", "Flag"]));
            for r in rows {
                let m = &r.metrics;
                let [p, rc, f] = prf_cells(m);
                s.push_str(&md_row(&[
                    r.corpus.clone(),
                    r.group.clone(),
                    r.combination.clone(),
                    m.n_gold.to_string(),
                    p,
                    rc,
                    f,
                    format!("({}, {})", num(m.ci_f1.0), num(m.ci_f1.1)),
                    if m.degenerate { "degenerate".into() } else { String::new() },
                ]));
            }
        }
        Table::EnsemblePanels(results) => {
            s.push_str(&md_header(&[
                "Corpus",
                "Group",
                "Rank",
                "Highest F1-score",
                "p",
                "r",
                "F1",
                "Highest precision",
                "p",
                "r",
                "F1",
                "Highest recall",
                "p",
                "r",
                "F1",
            ]));
            for res in results {
                let k = res.top_f1.len().max(res.top_precision.len()).max(res.top_recall.len());
                for i in 0..k {
                    let mut cells = vec![res.corpus.clone(), res.group.clone(), (i + 1).to_string()];
                    for panel in [&res.top_f1, &res.top_precision, &res.top_recall] {
                        cells.extend(panel_cells(panel.get(i)));
                    }
                    s.push_str(&md_row(&cells));
                }
                let _ = writeln!(
                    s,
                    "\n{} / {}: {} of {} ensembles evaluated; {} beat every single system.\n",
                    res.corpus,
                    res.group,
                    res.evaluated,
                    res.space_size,
                    res.beating_all_singles.len()
                );
            }
        }
        Table::Cui(rows) => {
            s.push_str(&md_header(&["Corpus", "Level", "Combination", "Labels", "Macro p", "Macro r", "Macro F1"]));
            for r in rows {
                let level = match r.level {
                    CuiLevel::Doc => "doc",
                    CuiLevel::Mention => "mention",
                };
                s.push_str(&md_row(&[
                    r.corpus.clone(),
                    level.into(),
                    r.combination.clone(),
                    r.result.per_label.len().to_string(),
                    num(r.result.macro_precision),
                    num(r.result.macro_recall),
                    num(r.result.macro_f1),
                ]));
            }
        }
        Table::Complementarity(rows) => {
            s.push_str(&md_header(&[
                "Corpus", "Group", "A", "B", "Errors of A", "Shared", "Comp. rate %", "p", "r", "F1",
            ]));
            for r in rows {
                let [p, rc, f] = prf_cells(&r.restricted);
                s.push_str(&md_row(&[
                    r.corpus.clone(),
                    r.group.clone(),
                    r.system_a.clone(),
                    r.system_b.clone(),
                    r.errors_a.to_string(),
                    r.shared_errors.to_string(),
                    num(r.comp_rate),
                    p,
                    rc,
                    f,
                ]));
            }
        }
    }
    s
}

fn panel_cells(e: Option<&ScoredEnsemble>) -> [String; 4] {
    match e {
        Some(e) => {
            let [p, r, f] = prf_cells(&e.metrics);
            [e.expression.clone(), p, r, f]
        }
        None => Default::default(),
    }
}
