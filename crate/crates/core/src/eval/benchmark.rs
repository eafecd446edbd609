//! Full method × visibility × level runs and their reports.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::query::QueryLevel;

use super::{Cell, Engine, EpisodeResult, LoadedScenario, Method, Visibility};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelCells {
    pub level1: Cell,
    pub level2: Cell,
    pub level3: Cell,
    pub total: Cell,
}

impl LevelCells {
    fn add(&mut self, level: QueryLevel, success: bool) {
        match level {
            QueryLevel::L1 => self.level1.add(success),
            QueryLevel::L2 => self.level2.add(success),
            QueryLevel::L3 => self.level3.add(success),
        }
        self.total.add(success);
    }

    pub fn get(&self, level: QueryLevel) -> Cell {
        match level {
            QueryLevel::L1 => self.level1,
            QueryLevel::L2 => self.level2,
            QueryLevel::L3 => self.level3,
        }
    }

    fn cells(&self) -> [Cell; 4] {
        [self.level1, self.level2, self.level3, self.total]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub method: Method,
    pub visibility: Visibility,
    pub top1: LevelCells,
    /// Absent for methods without a shortlist.
    pub top5: Option<LevelCells>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    /// Hard checks fail the run; advisory ones are reported only.
    pub hard: bool,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub table: Vec<TableRow>,
    pub checks: Vec<InvariantCheck>,
    pub episodes: Vec<EpisodeResult>,
}

impl BenchmarkReport {
    pub fn row(&self, method: Method, visibility: Visibility) -> Option<&TableRow> {
        self.table
            .iter()
            .find(|r| r.method == method && r.visibility == visibility)
    }

    pub fn hard_failures(&self) -> Vec<&InvariantCheck> {
        self.checks.iter().filter(|c| c.hard && !c.passed).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|s| s + "\n")
            .map_err(|e| Error::parse("report", e))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::parse("report csv", e);
        w.write_record([
            "method",
            "visibility",
            "top1_level1",
            "top1_level2",
            "top1_level3",
            "top1_total",
            "top5_level1",
            "top5_level2",
            "top5_level3",
            "top5_total",
        ])
        .map_err(csv_err)?;
        for row in &self.table {
            let mut rec = vec![row.method.to_string(), row.visibility.to_string()];
            rec.extend(row.top1.cells().iter().map(Cell::to_string));
            match &row.top5 {
                Some(t5) => rec.extend(t5.cells().iter().map(Cell::to_string)),
                None => rec.extend(std::iter::repeat_n("-".to_string(), 4)),
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::parse("report csv", e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Runs every method under every visibility on every scenario and level.
/// Episodes run in parallel; results keep a fixed order.
pub fn run_benchmark(
    engine: &Engine,
    suite: &[LoadedScenario],
    methods: &[Method],
    visibilities: &[Visibility],
) -> Result<BenchmarkReport> {
    if suite.is_empty() {
        return Err(Error::EmptyInput("scenario suite"));
    }
    if methods.is_empty() || visibilities.is_empty() {
        return Err(Error::Config(
            "at least one method and one visibility are required".into(),
        ));
    }
    let mut specs = Vec::new();
    for &m in methods {
        for &v in visibilities {
            for (i, _) in suite.iter().enumerate() {
                for level in QueryLevel::ALL {
                    specs.push((m, v, i, level));
                }
            }
        }
    }
    let episodes: Vec<EpisodeResult> = specs
        .par_iter()
        .map(|&(m, v, i, level)| engine.run_episode(&suite[i], level, m, Some(v)))
        .collect();
    let table = tabulate(methods, visibilities, &episodes);
    let noiseless = engine.config.ssl.noise_std_deg == 0.0;
    let checks = check_invariants(&table, &episodes, noiseless);
    Ok(BenchmarkReport {
        table,
        checks,
        episodes,
    })
}

fn tabulate(methods: &[Method], visibilities: &[Visibility], episodes: &[EpisodeResult]) -> Vec<TableRow> {
    let mut rows = Vec::new();
    for &m in methods {
        for &v in visibilities {
            let mut top1 = LevelCells::default();
            let mut top5 = LevelCells::default();
            for e in episodes
                .iter()
                .filter(|e| e.method == m && e.visible == (v == Visibility::Visible))
            {
                if e.not_applicable {
                    continue;
                }
                top1.add(e.level, e.success_top1);
                top5.add(e.level, e.success_top5);
            }
            rows.push(TableRow {
                method: m,
                visibility: v,
                top1,
                top5: m.has_shortlist().then_some(top5),
            });
        }
    }
    rows
}

fn check(name: &str, hard: bool, failures: Vec<String>) -> InvariantCheck {
    InvariantCheck {
        name: name.into(),
        hard,
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            "ok".into()
        } else {
            let more = failures.len().saturating_sub(5);
            let mut d = failures.into_iter().take(5).collect::<Vec<_>>().join("; ");
            if more > 0 {
                d.push_str(&format!("; and {more} more"));
            }
            d
        },
    }
}

fn check_invariants(table: &[TableRow], episodes: &[EpisodeResult], noiseless_ssl: bool) -> Vec<InvariantCheck> {
    let mut checks = Vec::new();

    let mut bad = Vec::new();
    for e in episodes.iter().filter(|e| e.success_top1 && !e.success_top5) {
        bad.push(format!(
            "{} L{} {} {}",
            e.scenario_id,
            e.level.number(),
            e.method,
            vis(e.visible)
        ));
    }
    for r in table {
        if let Some(t5) = &r.top5 {
            for (a, b) in r.top1.cells().iter().zip(t5.cells()) {
                if a.successes > b.successes {
                    bad.push(format!("{} {}: top1 {a} exceeds top5 {b}", r.method, r.visibility));
                }
            }
        }
    }
    checks.push(check("top5_at_least_top1", true, bad));

    let mut bad = Vec::new();
    for r in table {
        let mut cells = r.top1.cells().to_vec();
        cells.extend(r.top5.iter().flat_map(|t| t.cells()));
        for c in cells {
            if c.successes > c.n || c.rate().is_some_and(|x| !(0.0..=1.0).contains(&x)) {
                bad.push(format!("{} {}: {c}", r.method, r.visibility));
            }
        }
        let expected = episodes
            .iter()
            .filter(|e| e.method == r.method && e.visible == (r.visibility == Visibility::Visible) && !e.not_applicable)
            .count();
        let levels: usize = [r.top1.level1, r.top1.level2, r.top1.level3].iter().map(|c| c.n).sum();
        if r.top1.total.n != expected || levels != expected {
            bad.push(format!(
                "{} {}: table counts {} / {levels}, records {expected}",
                r.method, r.visibility, r.top1.total.n
            ));
        }
    }
    checks.push(check("counts_reconcile", true, bad));

    let budget: Vec<String> = episodes
        .iter()
        .filter(|e| e.transcript.as_ref().is_some_and(|t| t.exchanges.len() > 1))
        .map(|e| format!("{} L{} {}", e.scenario_id, e.level.number(), e.method))
        .collect();
    checks.push(check("question_budget", true, budget));

    let closure: Vec<String> = episodes
        .iter()
        .filter(|e| e.method.has_shortlist() && !e.not_applicable && e.error.is_none())
        .filter(|e| {
            e.final_id
                .as_ref()
                .is_none_or(|f| !e.shortlist.iter().any(|i| &i.object_id == f))
        })
        .map(|e| format!("{} L{} {}", e.scenario_id, e.level.number(), e.method))
        .collect();
    checks.push(check("shortlist_closure", true, closure));

    if noiseless_ssl {
        // Key: (method, scenario, level) -> outcome under each visibility.
        type Outcome<'a> = (&'a Option<String>, bool, bool, Vec<&'a str>);
        let mut by_key: BTreeMap<(Method, &str, u8), [Option<Outcome>; 2]> = BTreeMap::new();
        for e in episodes.iter().filter(|e| e.ssl) {
            let slot = &mut by_key
                .entry((e.method, e.scenario_id.as_str(), e.level.number()))
                .or_default()[usize::from(!e.visible)];
            *slot = Some((
                &e.final_id,
                e.success_top1,
                e.success_top5,
                e.shortlist.iter().map(|i| i.object_id.as_str()).collect(),
            ));
        }
        let mut bad = Vec::new();
        let mut compared = 0;
        for ((m, s, l), [a, b]) in &by_key {
            if let (Some(a), Some(b)) = (a, b) {
                compared += 1;
                if a != b {
                    bad.push(format!("{m} {s} L{l}: visible {:?} vs hidden {:?}", a.0, b.0));
                }
            }
        }
        if compared > 0 {
            checks.push(check("visibility_equivalence", true, bad));
        }
    }

    for &v in &Visibility::BOTH {
        let find = |m: Method| table.iter().find(|r| r.method == m && r.visibility == v);
        if let (Some(qa), Some(no_qa)) = (find(Method::Miel), find(Method::MielNoQa)) {
            let (a, b) = (qa.top1.total, no_qa.top1.total);
            let fail = a.rate() < b.rate();
            checks.push(check(
                &format!("qa_monotonicity_{v}"),
                false,
                if fail {
                    vec![format!("miel {a} < miel-no-qa {b}")]
                } else {
                    vec![]
                },
            ));
        }
        if let Some(r) = find(Method::Miel) {
            let (l1, l2, l3) = (r.top1.level1.rate(), r.top1.level2.rate(), r.top1.level3.rate());
            let fail = l1 < l2 || l2 < l3;
            checks.push(check(
                &format!("level_monotonicity_{v}"),
                false,
                if fail {
                    vec![format!(
                        "miel top1 L1 {} L2 {} L3 {}",
                        r.top1.level1, r.top1.level2, r.top1.level3
                    )]
                } else {
                    vec![]
                },
            ));
        }
    }

    let errors: Vec<String> = episodes
        .iter()
        .filter_map(|e| {
            e.error
                .as_ref()
                .map(|err| format!("{} L{} {}: {err}", e.scenario_id, e.level.number(), e.method))
        })
        .collect();
    checks.push(check("episodes_without_errors", false, errors));
    checks
}

fn vis(visible: bool) -> &'static str {
    if visible {
        "visible"
    } else {
        "hidden"
    }
}

/// Writes `report.json` and `report.csv` under `out_dir`.
pub fn write_report(report: &BenchmarkReport, out_dir: impl AsRef<Path>) -> Result<()> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = dir.join("report.json");
    std::fs::write(&json, report.to_json()?).map_err(|e| Error::io(&json, e))?;
    let csv = dir.join("report.csv");
    std::fs::write(&csv, report.to_csv()?).map_err(|e| Error::io(&csv, e))
}
