use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use super::{
    evaluate_genrm, false_positive_rate, AuditCategory, AuditConfig, AuditError, AuditMetrics, AuditRecord, FprEntry,
    Rate,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    /// Metrics over regular records; absent when there are none.
    pub genrm: Option<AuditMetrics>,
    /// Rates over abnormal records, by category.
    pub false_positive_rate: BTreeMap<AuditCategory, FprEntry>,
    pub fp_threshold: f64,
    pub notes: Vec<String>,
}

/// Regular records feed the reliability metrics, abnormal ones the
/// false-positive rates.
pub fn audit_report(records: &[AuditRecord], cfg: &AuditConfig) -> Result<AuditReport, AuditError> {
    if records.is_empty() {
        return Err(AuditError::EmptyAuditSet);
    }
    let (regular, abnormal): (Vec<AuditRecord>, Vec<AuditRecord>) =
        records.iter().cloned().partition(|r| !r.category.is_abnormal());
    let genrm = if regular.is_empty() { None } else { Some(evaluate_genrm(&regular, cfg)?) };
    let fpr = if abnormal.is_empty() { BTreeMap::new() } else { false_positive_rate(&abnormal, cfg)? };
    let mut notes = Vec::new();
    if !fpr.is_empty() {
        notes.push(format!(
            "false positive: label credit 0 and engine score >= {} (partial credit counts)",
            cfg.fp_threshold
        ));
    }
    if genrm.is_some() {
        notes.push("execution accuracy is per criterion; execution_record_acc is per record".into());
    }
    Ok(AuditReport { genrm, false_positive_rate: fpr, fp_threshold: cfg.fp_threshold, notes })
}

fn pct(rate: &Rate) -> String {
    rate.percent().map_or_else(|| String::from("-"), |p| format!("{p:.1}"))
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells.zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let mut s = parts.join(" | ");
        s.push('\n');
        s
    };
    let mut out = line(&mut header.iter().copied());
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&rule.join("-+-"));
    out.push('\n');
    for row in rows {
        out.push_str(&line(&mut row.iter().map(String::as_str)));
    }
    out
}

/// Aligned plain-text rendering: one reliability row, then one
/// `Average (Arguments / Credit)` row per abnormal category.
pub fn render_table(report: &AuditReport) -> String {
    let mut out = String::new();
    if let Some(m) = &report.genrm {
        let header =
            ["Records", "Schema", "Criterion", "Execution", "Argument", "Credit", "Criterion-level", "Sample-level"];
        let row = alloc::vec![
            format!("{}", m.records),
            pct(&m.schema_acc),
            pct(&m.criterion_acc),
            pct(&m.execution_acc),
            pct(&m.argument_acc),
            pct(&m.credit_acc),
            pct(&m.criterion_level_acc),
            pct(&m.sample_level_acc),
        ];
        out.push_str(&table(&header, &[row]));
    }
    if !report.false_positive_rate.is_empty() {
        if !out.is_empty() {
            out.push('\n');
        }
        let rows: Vec<Vec<String>> = report
            .false_positive_rate
            .iter()
            .map(|(cat, e)| {
                alloc::vec![
                    String::from(cat.label()),
                    format!("{} ({} / {})", pct(&e.average), pct(&e.arguments), pct(&e.credit)),
                ]
            })
            .collect();
        out.push_str(&table(&["Category", "FPR Average (Arguments / Credit)"], &rows));
    }
    for n in &report.notes {
        out.push_str("note: ");
        out.push_str(n);
        out.push('\n');
    }
    out
}
