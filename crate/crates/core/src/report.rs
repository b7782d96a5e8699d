//! Aggregation of attack and CPM results into one table per audited model.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::cpm::CpmResult;
use crate::threshold::AttackResult;
use crate::{Error, Result};

/// Fixed row order; other metric names follow in input order.
pub const METRIC_ORDER: [&str; 7] = ["msp", "ent", "ce", "me", "relaxloss", "mixup", "cpm"];

#[derive(Debug, Clone)]
pub enum MetricResult {
    Attack(AttackResult),
    Cpm(CpmResult),
}

impl MetricResult {
    pub fn name(&self) -> &str {
        match self {
            MetricResult::Attack(a) => &a.score_name,
            MetricResult::Cpm(_) => "cpm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub metric: String,
    pub evaluation_advantage_percent: f64,
    pub evaluation_advantage: f64,
    pub selection_advantage: f64,
    /// Fitted threshold for score attacks; absent for CPM.
    #[serde(default, with = "crate::serde_ext::extended_f64_opt")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationPoint {
    pub k: usize,
    pub advantage_percent: f64,
    pub final_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub model_tag: String,
    pub rows: Vec<ReportRow>,
    #[serde(default)]
    pub ablation: Option<Vec<AblationPoint>>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

fn rank(metric: &str) -> usize {
    METRIC_ORDER.iter().position(|m| *m == metric).unwrap_or(METRIC_ORDER.len())
}

fn row(result: &MetricResult) -> ReportRow {
    match result {
        MetricResult::Attack(a) => ReportRow {
            metric: a.score_name.clone(),
            evaluation_advantage_percent: 100.0 * a.evaluation_advantage,
            evaluation_advantage: a.evaluation_advantage,
            selection_advantage: a.selection_advantage,
            threshold: Some(a.tau),
        },
        MetricResult::Cpm(c) => ReportRow {
            metric: "cpm".to_string(),
            evaluation_advantage_percent: 100.0 * c.evaluation_advantage,
            evaluation_advantage: c.evaluation_advantage,
            selection_advantage: c.selection_advantage,
            threshold: None,
        },
    }
}

pub fn build_report(results: &[MetricResult], model_tag: &str) -> Result<AuditReport> {
    if results.is_empty() {
        return Err(Error::Empty("report results"));
    }
    let mut rows: Vec<ReportRow> = Vec::with_capacity(results.len());
    for r in results {
        if rows.iter().any(|x| x.metric == r.name()) {
            return Err(Error::DuplicateMetric(r.name().to_string()));
        }
        rows.push(row(r));
    }
    rows.sort_by_key(|r| rank(&r.metric));
    Ok(AuditReport {
        model_tag: model_tag.to_string(),
        rows,
        ablation: None,
        metadata: BTreeMap::new(),
    })
}

impl AuditReport {
    /// Adds rows for new metrics, keeping the fixed order.
    pub fn merge_rows(&mut self, results: &[MetricResult]) -> Result<()> {
        for r in results {
            if self.rows.iter().any(|x| x.metric == r.name()) {
                return Err(Error::DuplicateMetric(r.name().to_string()));
            }
            self.rows.push(row(r));
        }
        self.rows.sort_by_key(|r| rank(&r.metric));
        Ok(())
    }

    pub fn with_ablation(mut self, points: &[(usize, CpmResult)]) -> Self {
        self.ablation = Some(
            points
                .iter()
                .map(|(k, r)| AblationPoint {
                    k: *k,
                    advantage_percent: 100.0 * r.evaluation_advantage,
                    final_objective: r.final_objective,
                })
                .collect(),
        );
        self
    }

    pub fn row(&self, metric: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }
}

/// Two-decimal rendering with `-0.00` folded into `0.00`.
pub fn format_percent(value: f64) -> String {
    let rounded = libm::round(value * 100.0) / 100.0;
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded:.2}")
}

pub fn render_csv(report: &AuditReport) -> String {
    let mut out = String::from("metric,advantage_percent\n");
    for r in &report.rows {
        let _ = writeln!(out, "{},{}", r.metric, format_percent(r.evaluation_advantage_percent));
    }
    out
}

pub fn render_ablation_csv(points: &[AblationPoint]) -> String {
    let mut out = String::from("k,advantage_percent\n");
    for p in points {
        let _ = writeln!(out, "{},{}", p.k, format_percent(p.advantage_percent));
    }
    out
}

pub fn render_markdown(report: &AuditReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Membership inference audit: {}\n", report.model_tag);
    out.push_str("| metric | advantage (%) |\n|:--|--:|\n");
    for r in &report.rows {
        let _ = writeln!(out, "| {} | {} |", r.metric, format_percent(r.evaluation_advantage_percent));
    }
    if let Some(points) = &report.ablation {
        out.push_str("\n## Facet-count ablation\n\n| K | advantage (%) |\n|--:|--:|\n");
        for p in points {
            let _ = writeln!(out, "| {} | {} |", p.k, format_percent(p.advantage_percent));
        }
    }
    if !report.metadata.is_empty() {
        out.push_str("\n## Run metadata\n\n");
        for (k, v) in &report.metadata {
            let _ = writeln!(out, "- {k}: `{v}`");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn attack(name: &str, adv: f64) -> MetricResult {
        MetricResult::Attack(AttackResult {
            score_name: name.to_string(),
            tau: 0.5,
            selection_advantage: adv,
            evaluation_advantage: adv,
        })
    }

    #[test]
    fn single_ce_row_in_percent() {
        let r = build_report(&[attack("ce", 0.2845)], "vanilla").unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].metric, "ce");
        assert!((r.rows[0].evaluation_advantage_percent - 28.45).abs() <= 1e-9);
        assert_eq!(render_csv(&r), "metric,advantage_percent\nce,28.45\n");
    }

    #[test]
    fn rows_follow_fixed_order() {
        let r = build_report(&[attack("me", 0.1), attack("custom", 0.0), attack("msp", 0.3), attack("ce", 0.2)], "m").unwrap();
        let names: Vec<&str> = r.rows.iter().map(|x| x.metric.as_str()).collect();
        assert_eq!(names, vec!["msp", "ce", "me", "custom"]);
    }

    #[test]
    fn duplicates_and_empty_input_are_rejected() {
        assert!(matches!(
            build_report(&[attack("ce", 0.1), attack("ce", 0.2)], "m"),
            Err(Error::DuplicateMetric(_))
        ));
        assert!(build_report(&[], "m").is_err());
        let mut r = build_report(&[attack("ce", 0.1)], "m").unwrap();
        assert!(r.merge_rows(&[attack("ce", 0.3)]).is_err());
        r.merge_rows(&[attack("msp", 0.3)]).unwrap();
        assert_eq!(r.rows[0].metric, "msp");
    }

    #[test]
    fn percent_formatting() {
        assert_eq!(format_percent(28.449999999999996), "28.45");
        assert_eq!(format_percent(-0.001), "0.00");
        assert_eq!(format_percent(-12.5), "-12.50");
        assert_eq!(format_percent(100.0), "100.00");
    }
}
