//! Score tables: normalization, improvement verdicts and CSV/Markdown output.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};

use crate::iqa::zscore;

/// Which metric produced a score. Higher is better for every metric.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricId {
    Psnr,
    Ssim,
    Nrq,
    /// Score computed by an outside tool (for example a learned IQA model)
    /// and fed into the report layer.
    External(String),
}

impl MetricId {
    pub fn parse(s: &str) -> Option<MetricId> {
        match s {
            "psnr" => Some(MetricId::Psnr),
            "ssim" => Some(MetricId::Ssim),
            "nrq" => Some(MetricId::Nrq),
            _ => None,
        }
    }

    /// Machine identifier used in CSV and JSON output.
    pub fn id(&self) -> &str {
        match self {
            MetricId::Psnr => "psnr",
            MetricId::Ssim => "ssim",
            MetricId::Nrq => "nrq",
            MetricId::External(name) => name,
        }
    }

    /// Row label used in Markdown tables.
    pub fn display_name(&self) -> &str {
        match self {
            MetricId::Psnr => "PSNR",
            MetricId::Ssim => "SSIM",
            MetricId::Nrq => "NRQ",
            MetricId::External(name) => name,
        }
    }

    pub fn is_full_reference(&self) -> bool {
        matches!(self, MetricId::Psnr | MetricId::Ssim)
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// One cell of the metric x scene x variant grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricScore {
    pub metric: MetricId,
    pub scene: String,
    pub variant: String,
    /// Finite, or `+inf` for PSNR of identical images.
    pub raw: f64,
    pub normalized: Option<f64>,
}

impl MetricScore {
    pub fn new(metric: MetricId, scene: &str, variant: &str, raw: f64) -> Self {
        MetricScore {
            metric,
            scene: scene.to_owned(),
            variant: variant.to_owned(),
            raw,
            normalized: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Improved,
    Regressed,
    Tied,
}

impl Verdict {
    pub fn classify(delta: f64, tie_epsilon: f64) -> Verdict {
        if delta > tie_epsilon {
            Verdict::Improved
        } else if delta < -tie_epsilon {
            Verdict::Regressed
        } else {
            Verdict::Tied
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Improved => "improved",
            Verdict::Regressed => "regressed",
            Verdict::Tied => "tied",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Raw-score difference of a variant against the baseline (first) variant.
#[derive(Clone, Debug, PartialEq)]
pub struct Delta {
    pub metric: MetricId,
    pub scene: String,
    pub variant: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerdictCell {
    pub metric: MetricId,
    pub scene: String,
    pub variant: String,
    pub verdict: Verdict,
}

/// Verdict grid plus, per metric, how many scenes improved in every
/// non-baseline variant.
#[derive(Clone, Debug, PartialEq)]
pub struct VerdictGrid {
    pub cells: Vec<VerdictCell>,
    pub improved_counts: Vec<(MetricId, usize)>,
    pub scene_count: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Provenance {
    pub tool_version: String,
    /// Echo of the experiment configuration text.
    pub config: String,
    pub seeds: Vec<(String, u64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReportError {
    Empty,
    MissingCell {
        metric: MetricId,
        scene: String,
        variant: String,
    },
    DuplicateCell {
        metric: MetricId,
        scene: String,
        variant: String,
    },
    NegativeEpsilon,
}

impl fmt::Display for ReportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportError::Empty => f.write_str("report has no cells"),
            ReportError::MissingCell {
                metric,
                scene,
                variant,
            } => write!(f, "missing cell {metric}/{scene}/{variant}"),
            ReportError::DuplicateCell {
                metric,
                scene,
                variant,
            } => write!(f, "duplicate cell {metric}/{scene}/{variant}"),
            ReportError::NegativeEpsilon => f.write_str("tie_epsilon must be >= 0"),
        }
    }
}

impl core::error::Error for ReportError {}

/// Complete metric x scene x variant score grid with deltas and verdicts.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub cells: Vec<MetricScore>,
    pub deltas: Vec<Delta>,
    pub verdicts: Vec<VerdictCell>,
    pub provenance: Provenance,
}

fn push_unique<T: PartialEq + Clone>(list: &mut Vec<T>, item: &T) {
    if !list.contains(item) {
        list.push(item.clone());
    }
}

/// Difference that treats equal infinities as a tie.
fn difference(test: f64, baseline: f64) -> f64 {
    if test == baseline {
        0.0
    } else {
        test - baseline
    }
}

/// Z-normalizes each metric's finite raw scores as one population and stores
/// the result in `normalized`. Non-finite scores stay unnormalized.
pub fn normalize_rows(cells: &mut [MetricScore]) {
    let mut metrics: Vec<MetricId> = Vec::new();
    for c in cells.iter() {
        push_unique(&mut metrics, &c.metric);
    }
    for m in metrics {
        let idx: Vec<usize> = (0..cells.len())
            .filter(|&i| cells[i].metric == m && cells[i].raw.is_finite())
            .collect();
        let raw: Vec<f64> = idx.iter().map(|&i| cells[i].raw).collect();
        if let Ok(z) = zscore(&raw) {
            for (&i, v) in idx.iter().zip(z) {
                cells[i].normalized = Some(v);
            }
        }
    }
}

impl Report {
    /// Checks grid completeness and derives deltas and verdicts. The first
    /// variant to appear is the baseline.
    pub fn build(
        cells: Vec<MetricScore>,
        tie_epsilon: f64,
        provenance: Provenance,
    ) -> Result<Report, ReportError> {
        if cells.is_empty() {
            return Err(ReportError::Empty);
        }
        if !(tie_epsilon >= 0.0) {
            return Err(ReportError::NegativeEpsilon);
        }
        let mut report = Report {
            cells,
            deltas: Vec::new(),
            verdicts: Vec::new(),
            provenance,
        };
        let (metrics, scenes, variants) = report.axes();
        for m in &metrics {
            for s in &scenes {
                for v in &variants {
                    let n = report
                        .cells
                        .iter()
                        .filter(|c| &c.metric == m && &c.scene == s && &c.variant == v)
                        .count();
                    let key = (m.clone(), s.clone(), v.clone());
                    match n {
                        1 => {}
                        0 => {
                            return Err(ReportError::MissingCell {
                                metric: key.0,
                                scene: key.1,
                                variant: key.2,
                            })
                        }
                        _ => {
                            return Err(ReportError::DuplicateCell {
                                metric: key.0,
                                scene: key.1,
                                variant: key.2,
                            })
                        }
                    }
                }
            }
        }
        for m in &metrics {
            for s in &scenes {
                let baseline = report.raw(m, s, &variants[0]);
                for v in &variants[1..] {
                    report.deltas.push(Delta {
                        metric: m.clone(),
                        scene: s.clone(),
                        variant: v.clone(),
                        value: difference(report.raw(m, s, v), baseline),
                    });
                }
            }
        }
        report.verdicts = rank_verdict(&report, tie_epsilon).cells;
        Ok(report)
    }

    /// Metric, scene and variant axes in first-appearance order.
    pub fn axes(&self) -> (Vec<MetricId>, Vec<String>, Vec<String>) {
        let (mut metrics, mut scenes, mut variants) = (Vec::new(), Vec::new(), Vec::new());
        for c in &self.cells {
            push_unique(&mut metrics, &c.metric);
            push_unique(&mut scenes, &c.scene);
            push_unique(&mut variants, &c.variant);
        }
        (metrics, scenes, variants)
    }

    pub fn cell(&self, metric: &MetricId, scene: &str, variant: &str) -> Option<&MetricScore> {
        self.cells
            .iter()
            .find(|c| &c.metric == metric && c.scene == scene && c.variant == variant)
    }

    fn raw(&self, metric: &MetricId, scene: &str, variant: &str) -> f64 {
        self.cell(metric, scene, variant)
            .expect("grid checked complete")
            .raw
    }

    pub fn verdict(&self, metric: &MetricId, scene: &str, variant: &str) -> Option<Verdict> {
        self.verdicts
            .iter()
            .find(|v| &v.metric == metric && v.scene == scene && v.variant == variant)
            .map(|v| v.verdict)
    }
}

/// Classifies every delta of `report` against `tie_epsilon`.
pub fn rank_verdict(report: &Report, tie_epsilon: f64) -> VerdictGrid {
    let (metrics, scenes, _) = report.axes();
    let cells: Vec<VerdictCell> = report
        .deltas
        .iter()
        .map(|d| VerdictCell {
            metric: d.metric.clone(),
            scene: d.scene.clone(),
            variant: d.variant.clone(),
            verdict: Verdict::classify(d.value, tie_epsilon),
        })
        .collect();
    let improved_counts = metrics
        .into_iter()
        .map(|m| {
            let count = scenes
                .iter()
                .filter(|s| {
                    let mut row = cells.iter().filter(|c| c.metric == m && &c.scene == *s);
                    let mut any = false;
                    let all = row.all(|c| {
                        any = true;
                        c.verdict == Verdict::Improved
                    });
                    any && all
                })
                .count();
            (m, count)
        })
        .collect();
    VerdictGrid {
        cells,
        improved_counts,
        scene_count: scenes.len(),
    }
}

/// Four fractional digits; infinities as `inf` / `-inf`.
pub fn format_score(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub const CSV_HEADER: &str = "metric,scene,variant,raw,normalized,verdict";

/// One row per cell, sorted by (metric, scene, variant). Baseline rows carry
/// the verdict `baseline`.
pub fn emit_csv(report: &Report) -> String {
    let (_, _, variants) = report.axes();
    let mut rows: Vec<&MetricScore> = report.cells.iter().collect();
    rows.sort_by(|a, b| {
        (a.metric.id(), &a.scene, &a.variant).cmp(&(b.metric.id(), &b.scene, &b.variant))
    });
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in rows {
        let verdict = if variants.first() == Some(&c.variant) {
            "baseline"
        } else {
            report
                .verdict(&c.metric, &c.scene, &c.variant)
                .map_or("", Verdict::as_str)
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            csv_field(c.metric.id()),
            csv_field(&c.scene),
            csv_field(&c.variant),
            format_score(c.raw),
            c.normalized.map(format_score).unwrap_or_default(),
            verdict
        );
    }
    out
}

fn group_title(variant: &str) -> String {
    let mut chars = variant.chars();
    match chars.next() {
        Some(first) => format!("{}{} Rendering", first.to_uppercase(), chars.as_str()),
        None => "Rendering".into(),
    }
}

fn md_row(out: &mut String, cells: &[String]) {
    out.push('|');
    for c in cells {
        let _ = write!(out, " {} |", c.replace('|', "\\|"));
    }
    out.push('\n');
}

/// Markdown report.
///
/// With at most two variants: a score table laid out with metrics as rows and
/// one column group per variant (one column per scene), followed by a verdict
/// table. Scores show the normalized value when present, otherwise raw. With
/// more than two variants the score table falls back to long format (one row
/// per cell).
pub fn emit_markdown(report: &Report) -> String {
    let (metrics, scenes, variants) = report.axes();
    let mut out = String::new();
    let shown = |c: &MetricScore| format_score(c.normalized.unwrap_or(c.raw));

    if variants.len() <= 2 {
        let mut header = alloc::vec![String::from("Algorithm")];
        for v in &variants {
            header.push(group_title(v));
            header.extend(core::iter::repeat_n(String::new(), scenes.len() - 1));
        }
        md_row(&mut out, &header);
        let mut rule = alloc::vec![String::from(":--")];
        rule.extend(core::iter::repeat_n(String::from("--:"), header.len() - 1));
        md_row(&mut out, &rule);
        let mut sub = alloc::vec![String::new()];
        for _ in &variants {
            sub.extend(scenes.iter().cloned());
        }
        md_row(&mut out, &sub);
        for m in &metrics {
            let mut row = alloc::vec![m.display_name().to_owned()];
            for v in &variants {
                for s in &scenes {
                    row.push(report.cell(m, s, v).map(shown).unwrap_or_default());
                }
            }
            md_row(&mut out, &row);
        }
    } else {
        md_row(
            &mut out,
            &["Metric", "Scene", "Variant", "Raw", "Normalized", "Verdict"].map(String::from),
        );
        md_row(
            &mut out,
            &[":--", ":--", ":--", "--:", "--:", ":--"].map(String::from),
        );
        for m in &metrics {
            for s in &scenes {
                for (k, v) in variants.iter().enumerate() {
                    let c = report.cell(m, s, v).expect("grid checked complete");
                    let verdict = if k == 0 {
                        "baseline"
                    } else {
                        report.verdict(m, s, v).map_or("", Verdict::as_str)
                    };
                    md_row(
                        &mut out,
                        &[
                            m.display_name().to_owned(),
                            s.clone(),
                            v.clone(),
                            format_score(c.raw),
                            c.normalized.map(format_score).unwrap_or_default(),
                            verdict.to_owned(),
                        ],
                    );
                }
            }
        }
    }

    if variants.len() >= 2 {
        out.push('\n');
        for v in &variants[1..] {
            let mut header = alloc::vec![format!("Verdict ({} vs {})", v, variants[0])];
            header.extend(scenes.iter().cloned());
            header.push("Improved".into());
            md_row(&mut out, &header);
            let mut rule = alloc::vec![String::from(":--")];
            rule.extend(core::iter::repeat_n(String::from(":--"), scenes.len()));
            rule.push("--:".into());
            md_row(&mut out, &rule);
            for m in &metrics {
                let mut row = alloc::vec![m.display_name().to_owned()];
                let mut improved = 0;
                for s in &scenes {
                    let verdict = report
                        .verdicts
                        .iter()
                        .find(|c| &c.metric == m && &c.scene == s && &c.variant == v)
                        .map(|c| c.verdict);
                    if verdict == Some(Verdict::Improved) {
                        improved += 1;
                    }
                    row.push(verdict.map_or("", Verdict::as_str).to_owned());
                }
                row.push(format!("{improved}/{}", scenes.len()));
                md_row(&mut out, &row);
            }
        }
    }
    out
}
