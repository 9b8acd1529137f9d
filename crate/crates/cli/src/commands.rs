//! One function per subcommand.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use anyhow::{Context, Result};
use chrono::{Duration, NaiveDate};
use fedenv_core::bounds::{
    verify_head_lower_bound, verify_theorem1, verify_theorem2, verify_theorem3, BoundsReport,
};
use fedenv_core::fedsim::{
    experiment_cdf, experiment_subsampling, experiment_tradeoff, truth_quantiles, write_metrics_csv,
    ClientRecord, CostFunction, ExperimentConfig, MetricsRow, QUANTILE_LEVELS,
};
use fedenv_core::ingest::{filter_synchronized, load_csv};
use fedenv_core::signal::{synth_power_law, SmoothnessParams, TailMode};
use fedenv_core::{Execution, Scheme, SolveStatus};
use serde::Serialize;

use crate::config::{Settings, Subcommand};
use crate::output::{sha256_hex, DatasetInfo, OutputDir, RunRecord};

/// What a finished run reports back to the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub row_failures: usize,
    pub notes: Vec<String>,
}

struct Run<'a> {
    settings: &'a Settings,
    out: OutputDir,
    dataset: Option<DatasetInfo>,
    failures: usize,
    notes: Vec<String>,
}

impl Run<'_> {
    fn exec(&self) -> Execution {
        if self.settings.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }

    fn config(&self, cost: CostFunction, n: usize, schemes: Vec<Scheme>) -> ExperimentConfig {
        let s = self.settings;
        let mut cfg = ExperimentConfig::new(cost, s.l_values.clone(), n);
        cfg.subsample_s = s.s_values.clone();
        cfg.schemes = schemes;
        cfg.seed = s.seed;
        cfg.analytics_target = s.analytics_target.into();
        cfg
    }

    fn metrics(&mut self, name: &str, rows: &[MetricsRow]) -> Result<()> {
        for r in rows {
            if r.status != SolveStatus::Optimal {
                self.failures += 1;
            }
            if let Some(note) = &r.note {
                self.notes
                    .push(format!("{name}: L={} S={} {}: {note}", r.bandwidth, r.stride, r.scheme));
            }
        }
        let mut csv = Vec::new();
        write_metrics_csv(rows, &mut csv)?;
        self.out.write(&format!("{name}.csv"), &csv)?;
        self.out.write_json(&format!("{name}.json"), &rows)
    }

    fn finish(self) -> Result<Outcome> {
        let s = self.settings;
        let outcome = Outcome {
            row_failures: self.failures,
            notes: self.notes.clone(),
        };
        let record = RunRecord {
            settings: serde_json::to_value(s)?,
            seed: s.seed,
            dataset: self.dataset,
            outputs: BTreeMap::new(),
            row_failures: self.failures,
            notes: self.notes,
        };
        self.out.finish(s.subcommand.name(), record)?;
        Ok(outcome)
    }
}

pub fn execute(settings: &Settings) -> Result<Outcome> {
    let mut run = Run {
        settings,
        out: OutputDir::create(&settings.output_dir)?,
        dataset: None,
        failures: 0,
        notes: Vec::new(),
    };
    match settings.subcommand {
        Subcommand::Tradeoff => tradeoff(&mut run)?,
        Subcommand::Cdf => cdf(&mut run)?,
        Subcommand::Quantiles => quantiles(&mut run)?,
        Subcommand::Subsample => subsample(&mut run)?,
        Subcommand::VerifyBounds => verify_bounds(&mut run)?,
        Subcommand::Synth => synth(&mut run)?,
    }
    run.finish()
}

fn load_clients(run: &mut Run) -> Result<Vec<ClientRecord>> {
    let s = run.settings;
    let path = s.dataset.as_ref().context("no dataset given")?;
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let report = load_csv(path, &s.columns)?;
    let users: BTreeSet<&str> = report.readings.iter().map(|r| r.user_id.as_str()).collect();
    let synced = filter_synchronized(&report.readings, s.min_days)?;
    if let Some(first) = report.skipped.first() {
        run.notes.push(format!(
            "{} malformed rows skipped; first at line {}: {}",
            report.skipped.len(),
            first.line,
            first.reason
        ));
    }
    run.dataset = Some(DatasetInfo {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
        rows_loaded: report.readings.len(),
        rows_skipped: report.skipped.len(),
        users_seen: users.len(),
        users_retained: synced.signals.len(),
        window_start: synced.window_start.format("%Y-%m-%d %H:%M:%S").to_string(),
        hours: synced.hours,
    });
    Ok(synced.into_clients())
}

fn tradeoff(run: &mut Run) -> Result<()> {
    let clients = load_clients(run)?;
    let n = clients[0].signal.len();
    for cost in run.settings.cost.costs() {
        let rows = experiment_tradeoff(&clients, &run.config(cost, n, vec![cost.scheme()]), run.exec())?;
        run.metrics(&format!("tradeoff_{}", cost.tag()), &rows)?;
    }
    let cfg = run.config(CostFunction::L2, n, vec![Scheme::Naive, Scheme::MseBaseline]);
    let rows = experiment_tradeoff(&clients, &cfg, run.exec())?;
    run.metrics("tradeoff_baseline", &rows)
}

fn subsample(run: &mut Run) -> Result<()> {
    let clients = load_clients(run)?;
    let n = clients[0].signal.len();
    for cost in run.settings.cost.costs() {
        let cfg = run.config(cost, n, vec![cost.scheme()]);
        let rows = experiment_subsampling(&clients, &cfg, run.exec())?;
        run.metrics(&format!("subsample_{}", cost.tag()), &rows)?;
    }
    Ok(())
}

fn sci(x: f64) -> String {
    format!("{x:.10e}")
}

fn cdf(run: &mut Run) -> Result<()> {
    let clients = load_clients(run)?;
    let n = clients[0].signal.len();
    for cost in run.settings.cost.costs() {
        let cfg = run.config(cost, n, vec![cost.scheme(), Scheme::Naive]);
        let curves = experiment_cdf(&clients, &cfg, run.settings.cdf_points, run.exec())?;
        let mut text = String::from("series,L,status,x,cdf\n");
        for c in &curves {
            let l = c.bandwidth.map(|l| l.to_string()).unwrap_or_default();
            if c.status != SolveStatus::Optimal {
                run.failures += 1;
                writeln!(text, "{},{l},{},,", c.series, c.status)?;
                continue;
            }
            for (x, y) in c.x.iter().zip(&c.cdf) {
                writeln!(text, "{},{l},{},{},{}", c.series, c.status, sci(*x), sci(*y))?;
            }
        }
        run.out.write(&format!("cdf_{}.csv", cost.tag()), text.as_bytes())?;
    }
    Ok(())
}

fn quantiles(run: &mut Run) -> Result<()> {
    let clients = load_clients(run)?;
    let n = clients[0].signal.len();
    let target = run.settings.analytics_target.into();
    let actual = truth_quantiles(&clients, target)?;
    let mut ls = run.settings.l_values.clone();
    ls.sort_unstable();
    ls.dedup();
    for cost in run.settings.cost.costs() {
        let envelope = cost.scheme();
        let cfg = run.config(cost, n, vec![envelope, Scheme::Naive]);
        let rows = experiment_tradeoff(&clients, &cfg, run.exec())?;
        for r in &rows {
            if r.status != SolveStatus::Optimal {
                run.failures += 1;
            }
            if let Some(note) = &r.note {
                run.notes.push(format!("quantiles_{}: L={} {}: {note}", cost.tag(), r.bandwidth, r.scheme));
            }
        }
        // rows come as (L, scheme) pairs in sorted L order
        let column = |scheme: Scheme, qi: usize| -> Vec<String> {
            rows.iter()
                .filter(|r| r.scheme == scheme)
                .map(|r| r.quantiles.map(|q| sci(q[qi])).unwrap_or_default())
                .collect()
        };
        let mut header = vec!["quantile".to_string(), "actual".into(), "cost".into()];
        header.extend(ls.iter().map(|l| format!("envelope_L{l}")));
        header.extend(ls.iter().map(|l| format!("naive_L{l}")));
        let mut text = header.join(",") + "\n";
        for (qi, level) in QUANTILE_LEVELS.iter().enumerate() {
            let mut cells = vec![format!("{}%", (level * 100.0).round()), sci(actual[qi]), cost.tag().to_uppercase()];
            cells.extend(column(envelope, qi));
            cells.extend(column(Scheme::Naive, qi));
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        run.out.write(&format!("quantiles_{}.csv", cost.tag()), text.as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CaseSummary {
    theorem: String,
    case: String,
    records: usize,
    failed: usize,
    min_slack: f64,
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    summary: Vec<CaseSummary>,
    records: &'a BoundsReport,
}

fn verify_bounds(run: &mut Run) -> Result<()> {
    let s = run.settings;
    let exec = run.exec();
    let mut report = BoundsReport::default();
    for &p in &s.p_values {
        report.extend(verify_theorem1(s.trials, p, &s.l_values, s.seed, exec)?);
        report.extend(verify_theorem2(s.trials, p, &s.l_values, s.seed, exec)?);
        report.extend(verify_theorem3(s.trials, p, s.l_values[0], &s.s_values, s.seed, exec)?);
        report.extend(verify_head_lower_bound(s.trials, p, &s.l_values, s.seed, exec)?);
    }
    let mut cases: BTreeMap<(String, String), CaseSummary> = BTreeMap::new();
    for r in &report.records {
        let entry = cases
            .entry((r.theorem.clone(), r.case.clone()))
            .or_insert_with(|| CaseSummary {
                theorem: r.theorem.clone(),
                case: r.case.clone(),
                records: 0,
                failed: 0,
                min_slack: f64::INFINITY,
            });
        entry.records += 1;
        entry.failed += usize::from(!r.pass);
        entry.min_slack = entry.min_slack.min(r.slack);
    }
    let summary: Vec<CaseSummary> = cases.into_values().collect();
    for c in summary.iter().filter(|c| c.failed > 0) {
        run.notes
            .push(format!("{} {}: {} of {} checks failed", c.theorem, c.case, c.failed, c.records));
    }
    run.out.write_json("verify_bounds.json", &VerifyOutput {
        summary,
        records: &report,
    })
}

/// Hourly readings `100 max(0, f(t) - dc)` of power-law series, written in
/// the default ingest layout. Dropout users miss one hour mid-window.
fn synth(run: &mut Run) -> Result<()> {
    let s = run.settings;
    let n = s.days * 24;
    let p = s.p_values[0];
    let params = SmoothnessParams::new(1.0, p, 0.0)?;
    let start = NaiveDate::from_ymd_opt(2014, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .context("bad start date")?;
    let cols = &s.columns;
    let mut text = format!("{},{},{}\n", cols.timestamp, cols.user, cols.value);
    for u in 0..s.clients + s.dropouts {
        let series = synth_power_law(&params, TailMode::Signed, (n / 4).max(1), s.seed.wrapping_add(u as u64));
        let values = series.sample(n);
        let id = format!("user{u:03}");
        let gap = (u >= s.clients).then_some(n / 2);
        for (j, v) in values.values().iter().enumerate() {
            if Some(j) == gap {
                continue;
            }
            let t = start + Duration::hours(j as i64);
            let energy = 100.0 * (v - series.dc()).max(0.0);
            writeln!(text, "{},{id},{energy:.4}", t.format("%Y-%m-%d %H:%M:%S"))?;
        }
    }
    run.out.write("synth_dataset.csv", text.as_bytes())
}
