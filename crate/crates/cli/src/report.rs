//! Campaign report model and its JSON and text renderings.
//!
//! The JSON form goes through `serde_json::Value`, whose maps are ordered by
//! key, and every finding list is sorted by [`CampaignReport::finalize`]. Two
//! runs over the same inputs therefore produce identical bytes. Wall-clock
//! data only appears when timing was requested.

use std::collections::BTreeMap;

use diffharness::asmdiff::AsmDiffReport;
use diffharness::combiner::Skipped;
use diffharness::corpus::Partition;
use diffharness::execdiff::DiffReport;
use diffharness::reducer::ReduceSummary;
use diffharness::toolchain::Status;
use serde::{Deserialize, Serialize};

use crate::config::CampaignConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CrashFinding {
    pub path: String,
    pub tool: String,
    pub cell: String,
    pub status: Status,
    pub diagnostics: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MatrixFinding {
    pub file: String,
    pub tool: String,
    pub cell: String,
    pub status: Status,
    pub baseline: Option<Status>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsmFinding {
    pub a: String,
    pub b: String,
    pub report: AsmDiffReport,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FileError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSummary {
    pub output_dir: String,
    pub files: usize,
    pub cases: usize,
    pub annotated: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombineSummary {
    pub output_dir: String,
    pub units: Vec<String>,
    pub skipped: Vec<Skipped>,
    pub collisions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

/// Counts derived from the detail lists; never set by hand.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub files: usize,
    pub both_accept: usize,
    pub both_reject: usize,
    pub ref_only_accept: usize,
    pub subject_only_accept: usize,
    pub crash_hits: usize,
    pub matrix_discrepancies: usize,
    pub execdiff_checked: usize,
    pub execdiff_mismatches: usize,
    pub quarantined: usize,
    pub asmdiff_compared: usize,
    pub asmdiff_differences: usize,
    pub errors: usize,
    pub findings: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub command: String,
    pub config: Option<CampaignConfig>,
    pub tool_versions: BTreeMap<String, Option<String>>,
    pub counts: Counts,
    pub files: Vec<String>,
    /// Status histogram per tool, keyed by status name.
    pub verdicts: BTreeMap<String, BTreeMap<String, usize>>,
    pub partition: Option<Partition>,
    pub crash_hits: Vec<CrashFinding>,
    pub matrix_discrepancies: Vec<MatrixFinding>,
    pub execdiff_checked: Vec<String>,
    pub execdiff_mismatches: Vec<DiffReport>,
    pub quarantined: Vec<String>,
    pub captured: Vec<String>,
    pub asmdiff_compared: Vec<String>,
    pub asmdiff_differences: Vec<AsmFinding>,
    pub generated: Option<GenSummary>,
    pub combined: Option<CombineSummary>,
    pub reduction: Option<ReduceSummary>,
    pub errors: Vec<FileError>,
    pub timing: Option<Timing>,
}

impl CampaignReport {
    pub fn new(command: &str) -> Self {
        CampaignReport {
            command: command.to_string(),
            ..Default::default()
        }
    }

    /// Sorts every list and recomputes `counts`.
    pub fn finalize(&mut self) {
        self.files.sort();
        self.crash_hits.sort();
        self.matrix_discrepancies.sort();
        self.execdiff_checked.sort();
        self.execdiff_mismatches
            .sort_by(|a, b| (&a.file, &a.cell).cmp(&(&b.file, &b.cell)));
        self.quarantined.sort();
        self.captured.sort();
        self.asmdiff_compared.sort();
        self.asmdiff_differences.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));
        self.errors.sort();
        if let Some(c) = &mut self.combined {
            c.collisions.sort();
            c.collisions.dedup();
        }
        let p = self.partition.clone().unwrap_or_default();
        let mut c = Counts {
            files: self.files.len(),
            both_accept: p.both_accept.len(),
            both_reject: p.both_reject.len(),
            ref_only_accept: p.ref_only_accept.len(),
            subject_only_accept: p.subject_only_accept.len(),
            crash_hits: self.crash_hits.len(),
            matrix_discrepancies: self.matrix_discrepancies.len(),
            execdiff_checked: self.execdiff_checked.len(),
            execdiff_mismatches: self.execdiff_mismatches.len(),
            quarantined: self.quarantined.len(),
            asmdiff_compared: self.asmdiff_compared.len(),
            asmdiff_differences: self.asmdiff_differences.len(),
            errors: self.errors.len(),
            findings: 0,
        };
        let collisions = self.combined.as_ref().map_or(0, |c| c.collisions.len());
        c.findings = c.ref_only_accept
            + c.subject_only_accept
            + c.crash_hits
            + c.matrix_discrepancies
            + c.execdiff_mismatches
            + c.asmdiff_differences
            + c.errors
            + collisions;
        self.counts = c;
    }

    pub fn has_findings(&self) -> bool {
        self.counts.findings > 0
    }
}

pub fn render_report(report: &CampaignReport, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let value = serde_json::to_value(report).expect("report serializes");
            let mut out = serde_json::to_string_pretty(&value).expect("value serializes");
            out.push('\n');
            out.into_bytes()
        }
        Format::Text => render_text(report).into_bytes(),
    }
}

fn render_text(r: &CampaignReport) -> String {
    let c = &r.counts;
    let mut rows: Vec<(&str, usize)> = vec![("files", c.files)];
    if r.partition.is_some() {
        rows.extend([
            ("both accept", c.both_accept),
            ("both reject", c.both_reject),
            ("reference-only accept", c.ref_only_accept),
            ("subject-only accept", c.subject_only_accept),
        ]);
    }
    rows.extend([
        ("crash hits", c.crash_hits),
        ("matrix discrepancies", c.matrix_discrepancies),
        ("execdiff checked", c.execdiff_checked),
        ("execdiff mismatches", c.execdiff_mismatches),
        ("quarantined", c.quarantined),
        ("asmdiff compared", c.asmdiff_compared),
        ("asmdiff differences", c.asmdiff_differences),
        ("errors", c.errors),
        ("findings", c.findings),
    ]);
    let mut out = format!("command: {}\n", r.command);
    for (label, n) in rows {
        out.push_str(&format!("{label}: {n}\n"));
    }
    if let Some(g) = &r.generated {
        out.push_str(&format!(
            "generated: {} files, {} cases in {}\n",
            g.files, g.cases, g.output_dir
        ));
    }
    if let Some(cmb) = &r.combined {
        out.push_str(&format!(
            "combined: {} units, {} skipped, {} collisions\n",
            cmb.units.len(),
            cmb.skipped.len(),
            cmb.collisions.len()
        ));
    }
    if let Some(red) = &r.reduction {
        out.push_str(&format!(
            "reduced: {} -> {} units ({} -> {} bytes), {} test runs{}\n",
            red.original_units,
            red.reduced_units,
            red.original_bytes,
            red.reduced_bytes,
            red.calls,
            if red.minimal { "" } else { ", not minimal" }
        ));
    }
    for h in &r.crash_hits {
        out.push_str(&format!("  {} {} [{}] {}\n", h.status, h.path, h.cell, h.tool));
    }
    for d in &r.matrix_discrepancies {
        out.push_str(&format!("  discrepancy {} [{}] {}\n", d.file, d.cell, d.status));
    }
    for m in &r.execdiff_mismatches {
        let line = m.first_diff_line.map(|l| format!(" line {l}")).unwrap_or_default();
        out.push_str(&format!("  {:?} {} [{}]{line}\n", m.verdict, m.file, m.cell));
    }
    for a in &r.asmdiff_differences {
        out.push_str(&format!(
            "  {:?} {} vs {} at {:?}\n",
            a.report.verdict, a.a, a.b, a.report.first_diff_offset
        ));
    }
    for e in &r.errors {
        out.push_str(&format!("  error {}: {}\n", e.path, e.message));
    }
    if let Some(t) = &r.timing {
        out.push_str(&format!("wall time: {:.2}s\n", t.wall_seconds));
    }
    out
}
