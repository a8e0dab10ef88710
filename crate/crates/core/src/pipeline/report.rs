use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use serde::{Serialize, Serializer};

use super::gate::{aggregate, gate_from, Aggregation, Decision, GateOutcome};
use super::model::Model;
use crate::error::{Error, Result};
use crate::image::LabelMap;
use crate::io::{self, Manifest, ManifestEntry, Split};
use crate::metrics::{accuracy, cohens_kappa, confusion, dice, hd95, mean_abs_rank_error, mean_dice, ConfusionMatrix};
use crate::ordinal::RankLabel;
use crate::phantom::{reference_segment, LV, MYO, RV};

const LABEL_NAMES: [(u8, &str); 3] = [(LV, "LV"), (MYO, "MYO"), (RV, "RV")];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub samples: usize,
    pub accuracy: f64,
    pub kappa: f64,
    pub mean_abs_rank_error: f64,
    pub confusion: ConfusionMatrix,
}

pub fn evaluate(preds: &[RankLabel], truth: &[RankLabel], num_classes: usize) -> Result<ClassificationReport> {
    let cm = confusion(preds, truth, num_classes)?;
    Ok(ClassificationReport {
        samples: preds.len(),
        accuracy: accuracy(preds, truth)?,
        kappa: cohens_kappa(&cm)?,
        mean_abs_rank_error: mean_abs_rank_error(preds, truth)?,
        confusion: cm,
    })
}

/// Left-aligned first column, right-aligned others, two-space gutters.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                s.push_str(&format!("{cell:<w$}"));
            } else {
                s.push_str(&format!("  {cell:>w$}"));
            }
        }
        s.trim_end().to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

/// One row per method: accuracy, kappa and mean absolute rank error.
pub fn classification_table(rows: &[(&str, &ClassificationReport)]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, r)| {
            vec![
                name.to_string(),
                format!("{:.3}", r.accuracy),
                format!("{:.3}", r.kappa),
                format!("{:.3}", r.mean_abs_rank_error),
            ]
        })
        .collect();
    render_table(&["Method", "Accuracy", "Kappa", "MAE"], &body)
}

/// Source of severity grades.
#[derive(Debug, Clone, Copy)]
pub enum Grader<'a> {
    Model { model: &'a Model, aggregation: Aggregation },
    /// Reads the true label from the manifest.
    Oracle,
}

impl Grader<'_> {
    pub fn name(&self) -> String {
        match self {
            Grader::Model { model, .. } => model.config.head.to_string(),
            Grader::Oracle => "oracle".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifiedImage {
    pub id: String,
    pub truth: RankLabel,
    pub slice_predictions: Vec<RankLabel>,
    pub severity: RankLabel,
}

fn selected(manifest: &Manifest, split: Option<Split>) -> impl Iterator<Item = &ManifestEntry> {
    manifest
        .entries()
        .iter()
        .filter(move |e| split.is_none_or(|s| e.split == s))
}

/// Grades every image of `split` (all images when `None`), in manifest order.
pub fn classify_manifest(grader: Grader<'_>, manifest: &Manifest, split: Option<Split>) -> Result<Vec<ClassifiedImage>> {
    selected(manifest, split)
        .map(|entry| {
            let (slices, severity) = match grader {
                Grader::Oracle => (vec![entry.severity], entry.severity),
                Grader::Model { model, aggregation } => {
                    let images = io::read_tensor(&manifest.image_path(entry))?.to_image_slices()?;
                    let preds = model.predict_slices(&images)?;
                    let agg = aggregate(&preds, aggregation)?;
                    (preds, agg)
                }
            };
            Ok(ClassifiedImage {
                id: entry.path.clone(),
                truth: entry.severity,
                slice_predictions: slices,
                severity,
            })
        })
        .collect()
}

/// How kept images get segmented.
#[derive(Debug, Clone, PartialEq)]
pub enum Segmenter {
    Reference,
    /// `program args... <image.ogt> <mask.ogt>`; must exit 0 and write a
    /// `uint8` mask of the image's shape.
    External { program: String, args: Vec<String> },
}

impl Segmenter {
    /// Splits a command line on whitespace.
    pub fn external(command: &str) -> Result<Self> {
        let mut parts = command.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| Error::Config("empty segmenter command".into()))?;
        Ok(Segmenter::External {
            program,
            args: parts.collect(),
        })
    }

    fn name(&self) -> String {
        match self {
            Segmenter::Reference => "reference".into(),
            Segmenter::External { program, args } => {
                std::iter::once(program.as_str()).chain(args.iter().map(String::as_str)).collect::<Vec<_>>().join(" ")
            }
        }
    }

    fn segment(&self, image_path: &Path, scratch: &Path) -> Result<Vec<LabelMap>> {
        let stored = io::read_tensor(image_path)?;
        let slices = stored.to_image_slices()?;
        match self {
            Segmenter::Reference => Ok(slices.iter().map(reference_segment).collect()),
            Segmenter::External { program, args } => {
                let input = scratch.join("image.ogt");
                let output = scratch.join("mask.ogt");
                io::write_tensor(&input, &stored)?;
                let _ = std::fs::remove_file(&output);
                let result = Command::new(program)
                    .args(args)
                    .arg(&input)
                    .arg(&output)
                    .output()
                    .map_err(|e| Error::Segmenter(format!("cannot start {program}: {e}")))?;
                if !result.status.success() {
                    let stderr = String::from_utf8_lossy(&result.stderr);
                    return Err(Error::Segmenter(format!(
                        "{program} exited with {}: {}",
                        result.status,
                        stderr.trim()
                    )));
                }
                let masks = io::read_tensor(&output)
                    .and_then(|t| t.to_label_slices())
                    .map_err(|e| Error::Segmenter(format!("unusable mask from {program}: {e}")))?;
                if masks.len() != slices.len() || masks.iter().zip(&slices).any(|(m, s)| !m.same_shape(s)) {
                    return Err(Error::Segmenter(format!("{program} returned a mask of the wrong shape")));
                }
                Ok(masks)
            }
        }
    }
}

fn undefined_marker<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_f64(*x),
        None => s.serialize_str("undefined"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelScores {
    pub dice: f64,
    /// Undefined when either mask lacks the label.
    #[serde(serialize_with = "undefined_marker")]
    pub hd95: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageRecord {
    pub id: String,
    pub split: Split,
    pub truth: RankLabel,
    pub slice_predictions: Vec<RankLabel>,
    pub severity: RankLabel,
    pub decision: Decision,
    /// Per label; slice scores are averaged for multi-slice images.
    pub segmentation: Option<BTreeMap<String, LabelScores>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelSummary {
    #[serde(serialize_with = "undefined_marker")]
    pub mean_dice: Option<f64>,
    #[serde(serialize_with = "undefined_marker")]
    pub mean_hd95: Option<f64>,
    pub hd95_undefined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetSummary {
    pub images: usize,
    pub segmented: usize,
    pub failed: usize,
    pub labels: BTreeMap<String, LabelSummary>,
    #[serde(serialize_with = "undefined_marker")]
    pub mean_dice: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counts {
    pub total: usize,
    pub kept: usize,
    pub rejected: usize,
    pub segmentation_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateReport {
    pub grader: String,
    pub aggregation: Aggregation,
    pub segmenter: String,
    pub gating: bool,
    pub reject_from: RankLabel,
    pub split: String,
    pub counts: Counts,
    pub classification: ClassificationReport,
    /// `kept` covers images passing the gate, `all` every graded image.
    pub segmentation: BTreeMap<String, SubsetSummary>,
    pub images: Vec<ImageRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// `None` runs every manifest entry.
    pub split: Option<Split>,
    pub gating: bool,
    /// Lowest rejected level; `None` rejects only level `K`.
    pub reject_from: Option<usize>,
    pub spacing: [f64; 2],
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            split: Some(Split::Test),
            gating: true,
            reject_from: None,
            spacing: [1.0, 1.0],
        }
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    mean_dice(&v).ok()
}

fn score_slices(pred: &[LabelMap], truth: &[LabelMap], spacing: [f64; 2]) -> Result<BTreeMap<String, LabelScores>> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!("{} predicted vs {} true mask slices", pred.len(), truth.len())));
    }
    let mut out = BTreeMap::new();
    for (label, name) in LABEL_NAMES {
        let mut d = Vec::with_capacity(pred.len());
        let mut h = Vec::new();
        for (p, t) in pred.iter().zip(truth) {
            d.push(dice(p, t, label)?);
            if let Some(v) = hd95(p, t, label, spacing)? {
                h.push(v);
            }
        }
        out.insert(
            name.to_string(),
            LabelScores {
                dice: mean_dice(&d)?,
                hd95: mean_of(h.into_iter()),
            },
        );
    }
    Ok(out)
}

fn summarize<'a>(records: impl Iterator<Item = &'a ImageRecord>) -> SubsetSummary {
    let records: Vec<&ImageRecord> = records.collect();
    let scored: Vec<&BTreeMap<String, LabelScores>> = records.iter().filter_map(|r| r.segmentation.as_ref()).collect();
    let mut labels = BTreeMap::new();
    let mut label_means = Vec::new();
    for (_, name) in LABEL_NAMES {
        let mean_d = mean_of(scored.iter().map(|s| s[name].dice));
        let mean_h = mean_of(scored.iter().filter_map(|s| s[name].hd95));
        let undefined = scored.iter().filter(|s| s[name].hd95.is_none()).count();
        if let Some(m) = mean_d {
            label_means.push(m);
        }
        labels.insert(
            name.to_string(),
            LabelSummary {
                mean_dice: mean_d,
                mean_hd95: mean_h,
                hd95_undefined: undefined,
            },
        );
    }
    SubsetSummary {
        images: records.len(),
        segmented: scored.len(),
        failed: records.iter().filter(|r| r.error.is_some()).count(),
        labels,
        mean_dice: mean_dice(&label_means).ok(),
    }
}

/// Grade, gate, segment, and score every selected image. Segmentation runs
/// on rejected images too so that gated and ungated quality can be compared;
/// a failing external segmenter is recorded per image and the run goes on.
pub fn run_pipeline(
    grader: Grader<'_>,
    manifest: &Manifest,
    segmenter: &Segmenter,
    opts: &RunOptions,
) -> Result<GateReport> {
    let num_classes = match grader {
        Grader::Model { model, .. } => model.num_classes(),
        Grader::Oracle => crate::phantom::NUM_SEVERITIES,
    };
    let reject_from = RankLabel::new(opts.reject_from.unwrap_or(num_classes), num_classes)?;
    let graded = classify_manifest(grader, manifest, opts.split)?;
    if graded.is_empty() {
        return Err(Error::InvalidArgument("no manifest entries selected".into()));
    }
    let severities: Vec<RankLabel> = graded.iter().map(|g| g.severity).collect();
    let truth: Vec<RankLabel> = graded.iter().map(|g| g.truth).collect();
    let gate = if opts.gating {
        gate_from(&severities, reject_from)
    } else {
        GateOutcome {
            keep: (0..graded.len()).collect(),
            reject: Vec::new(),
        }
    };

    let scratch = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let entries: Vec<&ManifestEntry> = selected(manifest, opts.split).collect();
    let mut images = Vec::with_capacity(graded.len());
    for (i, (g, entry)) in graded.into_iter().zip(entries).enumerate() {
        let truth_masks = io::read_tensor(&manifest.mask_path(entry))?.to_label_slices()?;
        let (segmentation, error) = match segmenter.segment(&manifest.image_path(entry), scratch.path()) {
            Ok(pred) => (Some(score_slices(&pred, &truth_masks, opts.spacing)?), None),
            Err(e @ Error::Segmenter(_)) => {
                log::warn!("{}: {e}", g.id);
                (None, Some(e.to_string()))
            }
            Err(e) => return Err(e),
        };
        images.push(ImageRecord {
            id: g.id,
            split: entry.split,
            truth: g.truth,
            slice_predictions: g.slice_predictions,
            severity: g.severity,
            decision: gate.decision(i),
            segmentation,
            error,
        });
    }

    let mut segmentation = BTreeMap::new();
    segmentation.insert("all".to_string(), summarize(images.iter()));
    segmentation.insert(
        "kept".to_string(),
        summarize(images.iter().filter(|r| r.decision == Decision::Keep)),
    );
    Ok(GateReport {
        grader: grader.name(),
        aggregation: match grader {
            Grader::Model { aggregation, .. } => aggregation,
            Grader::Oracle => Aggregation::default(),
        },
        segmenter: segmenter.name(),
        gating: opts.gating,
        reject_from,
        split: opts.split.map_or("all".to_string(), |s| s.to_string()),
        counts: Counts {
            total: images.len(),
            kept: gate.keep.len(),
            rejected: gate.reject.len(),
            segmentation_failures: images.iter().filter(|r| r.error.is_some()).count(),
        },
        classification: evaluate(&severities, &truth, num_classes)?,
        segmentation,
        images,
    })
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or("undef".to_string(), |x| format!("{x:.digits$}"))
}

/// Dice and HD95 per label for the kept and all-image subsets.
pub fn segmentation_table(report: &GateReport) -> String {
    let mut rows = Vec::new();
    for subset in ["kept", "all"] {
        let s = &report.segmentation[subset];
        let mut row = vec![subset.to_string(), s.images.to_string()];
        for (_, name) in LABEL_NAMES {
            row.push(opt(s.labels[name].mean_dice, 4));
        }
        row.push(opt(s.mean_dice, 4));
        for (_, name) in LABEL_NAMES {
            row.push(opt(s.labels[name].mean_hd95, 2));
        }
        rows.push(row);
    }
    render_table(
        &[
            "Subset", "Images", "LV Dice", "MYO Dice", "RV Dice", "Mean Dice", "LV HD95", "MYO HD95", "RV HD95",
        ],
        &rows,
    )
}

/// Both tables plus gate counts.
pub fn render_report(report: &GateReport) -> String {
    let mut out = classification_table(&[(report.grader.as_str(), &report.classification)]);
    out.push('\n');
    out.push_str(&segmentation_table(report));
    out.push_str(&format!(
        "\nkept {}  rejected {}  segmentation failures {}\n",
        report.counts.kept, report.counts.rejected, report.counts.segmentation_failures
    ));
    out
}

/// Image ids of a gate outcome, for the `gate` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateLists {
    pub reject_from: RankLabel,
    pub keep: Vec<String>,
    pub reject: Vec<String>,
}

pub fn gate_lists(graded: &[ClassifiedImage], reject_from: RankLabel) -> GateLists {
    let severities: Vec<RankLabel> = graded.iter().map(|g| g.severity).collect();
    let g = gate_from(&severities, reject_from);
    GateLists {
        reject_from,
        keep: g.keep.iter().map(|&i| graded[i].id.clone()).collect(),
        reject: g.reject.iter().map(|&i| graded[i].id.clone()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(v: &[usize]) -> Vec<RankLabel> {
        v.iter().map(|&x| RankLabel::new(x, 3).unwrap()).collect()
    }

    #[test]
    fn evaluate_examples() {
        let t = l(&[1, 2, 3, 1]);
        let r = evaluate(&t, &t, 3).unwrap();
        assert_eq!((r.accuracy, r.kappa, r.mean_abs_rank_error), (1.0, 1.0, 0.0));
        let truth = l(&[1, 2, 3, 1, 2, 3]);
        let r = evaluate(&l(&[2; 6]), &truth, 3).unwrap();
        assert!((r.accuracy - 1.0 / 3.0).abs() < 1e-15 && r.kappa.abs() < 1e-15);
        assert!(evaluate(&l(&[1]), &truth, 3).is_err());
    }

    #[test]
    fn table_rendering() {
        let r = ClassificationReport {
            samples: 40,
            accuracy: 0.675,
            kappa: 0.451,
            mean_abs_rank_error: 0.4,
            confusion: ConfusionMatrix::zeros(3),
        };
        let t = classification_table(&[("CORAL", &r)]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "Method  Accuracy  Kappa    MAE");
        assert_eq!(lines[2], "CORAL      0.675  0.451  0.400");
    }
}
