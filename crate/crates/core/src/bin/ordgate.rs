use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::LevelFilter;

use ordgate::io::{self, load_manifest, Manifest, Split};
use ordgate::ordinal::{HeadKind, RankLabel};
use ordgate::phantom::{reference_segment, write_dataset, DatasetSpec, MANIFEST_NAME, NUM_SEVERITIES};
use ordgate::pipeline::{
    classification_table, classify_manifest, evaluate, gate_lists, gradient_check_suite, render_report,
    run_pipeline, train_from_manifest, Aggregation, ClassificationReport, Grader, Model, RunOptions, Segmenter,
    TrainConfig, GRADCHECK_TOLERANCE, TRAIN_LOG_FILE,
};
use ordgate::{Error, Result};

#[derive(Parser)]
#[command(name = "ordgate", version, about = "Ordinal motion-severity grading and segmentation quality gate")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic phantom dataset with manifest.
    Synth(SynthArgs),
    /// Train a severity classifier.
    Train(TrainArgs),
    /// Grade images and print per-image severities.
    Classify(GradeArgs),
    /// Grade images and split them into keep / reject lists.
    Gate(GateArgs),
    /// Grade, gate, segment and score: the full pipeline.
    Run(RunArgs),
    /// Classification metrics for one or more trained models.
    Eval(EvalArgs),
    /// Finite-difference check of all training losses.
    Gradcheck(GradcheckArgs),
    /// Reference segmenter on one image file (external-segmenter protocol).
    #[command(hide = true)]
    Segment { input: PathBuf, output: PathBuf },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// Dataset config as JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_per_class: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Model directory to create.
    #[arg(long)]
    out: PathBuf,
    /// Training config as JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_head)]
    head: Option<HeadKind>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct Selection {
    #[arg(long)]
    manifest: PathBuf,
    /// train, val, test or all.
    #[arg(long, default_value = "test", value_parser = parse_split)]
    split: SplitChoice,
    #[arg(long, default_value = "majority", value_parser = parse_aggregation)]
    aggregation: Aggregation,
}

#[derive(Args)]
struct GradeArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    sel: Selection,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GateArgs {
    #[command(flatten)]
    grade: GradeArgs,
    /// Lowest rejected severity (default: the most severe level).
    #[arg(long)]
    reject_from: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, required_unless_present = "oracle")]
    model: Option<PathBuf>,
    /// Grade with the manifest's true labels instead of a model.
    #[arg(long, conflicts_with = "model")]
    oracle: bool,
    #[command(flatten)]
    sel: Selection,
    /// External segmenter command; receives `<image.ogt> <mask.ogt>`.
    #[arg(long)]
    segmenter_cmd: Option<String>,
    /// Segment and score every image, ignoring grades.
    #[arg(long)]
    no_gate: bool,
    #[arg(long)]
    reject_from: Option<usize>,
    /// Directory for report.json and report.txt.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Model directory; repeat to compare heads.
    #[arg(long, required = true)]
    model: Vec<PathBuf>,
    #[command(flatten)]
    sel: Selection,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 100)]
    seeds: u64,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy)]
struct SplitChoice(Option<Split>);

fn parse_split(s: &str) -> std::result::Result<SplitChoice, String> {
    if s == "all" {
        Ok(SplitChoice(None))
    } else {
        s.parse().map(|s| SplitChoice(Some(s)))
    }
}

fn parse_head(s: &str) -> std::result::Result<HeadKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_aggregation(s: &str) -> std::result::Result<Aggregation, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn emit_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => io::write_canonical_json(path, value),
        None => {
            print!("{}", io::to_canonical_json(value)?);
            Ok(())
        }
    }
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut spec = match &a.config {
        Some(p) => serde_json::from_str(&io::read_to_string(p)?)
            .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
        None => DatasetSpec::new(100, 0),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    if let Some(n) = a.n_per_class {
        spec.n_per_class = n;
    }
    io::create_dir_all(&a.out)?;
    let manifest = write_dataset(&a.out, &spec)?;
    println!("wrote {} images to {}", manifest.len(), a.out.join(MANIFEST_NAME).display());
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => TrainConfig::load(p)?,
        None => TrainConfig::default(),
    };
    if let Some(h) = a.head {
        cfg.head = h;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    cfg.validate()?;
    let manifest = load_manifest(&a.manifest, cfg.num_classes)?;
    let (model, log) = train_from_manifest(&cfg, &manifest)?;
    io::create_dir_all(&a.out)?;
    model.save(&a.out)?;
    io::write_canonical_json(&a.out.join(TRAIN_LOG_FILE), &log)?;
    if let Some(last) = log.epochs.last() {
        println!(
            "trained {} for {} epochs: train loss {:.6}{}",
            cfg.head,
            log.epochs.len(),
            last.train_loss,
            last.val_loss.map_or(String::new(), |v| format!(", val loss {v:.6}"))
        );
    }
    Ok(())
}

fn load_model_and_manifest(model: &Path, manifest: &Path) -> Result<(Model, Manifest)> {
    let model = Model::load(model)?;
    let manifest = load_manifest(manifest, model.num_classes())?;
    Ok((model, manifest))
}

fn classify(a: GradeArgs) -> Result<()> {
    let (model, manifest) = load_model_and_manifest(&a.model, &a.sel.manifest)?;
    let grader = Grader::Model {
        model: &model,
        aggregation: a.sel.aggregation,
    };
    let graded = classify_manifest(grader, &manifest, a.sel.split.0)?;
    emit_json(&graded, a.out.as_deref())
}

fn gate(a: GateArgs) -> Result<()> {
    let (model, manifest) = load_model_and_manifest(&a.grade.model, &a.grade.sel.manifest)?;
    let k = model.num_classes();
    let reject_from = RankLabel::new(a.reject_from.unwrap_or(k), k).map_err(|e| Error::Config(e.to_string()))?;
    let grader = Grader::Model {
        model: &model,
        aggregation: a.grade.sel.aggregation,
    };
    let graded = classify_manifest(grader, &manifest, a.grade.sel.split.0)?;
    emit_json(&gate_lists(&graded, reject_from), a.grade.out.as_deref())
}

fn run(a: RunArgs) -> Result<()> {
    let model = a.model.as_deref().map(Model::load).transpose()?;
    let k = model.as_ref().map_or(NUM_SEVERITIES, Model::num_classes);
    if let Some(r) = a.reject_from {
        RankLabel::new(r, k).map_err(|e| Error::Config(e.to_string()))?;
    }
    let manifest = load_manifest(&a.sel.manifest, k)?;
    let grader = match &model {
        Some(m) => Grader::Model {
            model: m,
            aggregation: a.sel.aggregation,
        },
        None => Grader::Oracle,
    };
    let segmenter = match &a.segmenter_cmd {
        Some(cmd) => Segmenter::external(cmd)?,
        None => Segmenter::Reference,
    };
    let opts = RunOptions {
        split: a.sel.split.0,
        gating: !a.no_gate,
        reject_from: a.reject_from,
        ..RunOptions::default()
    };
    let report = run_pipeline(grader, &manifest, &segmenter, &opts)?;
    let text = render_report(&report);
    if let Some(dir) = &a.out {
        io::create_dir_all(dir)?;
        io::write_canonical_json(&dir.join("report.json"), &report)?;
        io::write_atomic(&dir.join("report.txt"), text.as_bytes())?;
    }
    print!("{text}");
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let mut rows: Vec<(String, ClassificationReport)> = Vec::new();
    for path in &a.model {
        let (model, manifest) = load_model_and_manifest(path, &a.sel.manifest)?;
        let grader = Grader::Model {
            model: &model,
            aggregation: a.sel.aggregation,
        };
        let graded = classify_manifest(grader, &manifest, a.sel.split.0)?;
        let preds: Vec<RankLabel> = graded.iter().map(|g| g.severity).collect();
        let truth: Vec<RankLabel> = graded.iter().map(|g| g.truth).collect();
        rows.push((model.config.head.to_string(), evaluate(&preds, &truth, model.num_classes())?));
    }
    let table = classification_table(&rows.iter().map(|(n, r)| (n.as_str(), r)).collect::<Vec<_>>());
    if let Some(dir) = &a.out {
        io::create_dir_all(dir)?;
        let json: std::collections::BTreeMap<&str, &ClassificationReport> =
            rows.iter().map(|(n, r)| (n.as_str(), r)).collect();
        io::write_canonical_json(&dir.join("eval.json"), &json)?;
        io::write_atomic(&dir.join("eval.txt"), table.as_bytes())?;
    }
    print!("{table}");
    Ok(())
}

fn gradcheck(a: GradcheckArgs) -> Result<()> {
    let results = gradient_check_suite(a.seed..a.seed + a.seeds)?;
    let mut worst = 0.0f64;
    for r in &results {
        println!(
            "{:<8} max rel error {:.3e} (seed {}, {} values per seed)",
            r.head.name(),
            r.max_rel_error,
            r.worst_seed,
            r.checked_values / a.seeds.max(1) as usize
        );
        worst = worst.max(r.max_rel_error);
    }
    if worst > GRADCHECK_TOLERANCE {
        return Err(Error::Numerical(format!(
            "gradient mismatch {worst:.3e} exceeds {GRADCHECK_TOLERANCE:e}"
        )));
    }
    Ok(())
}

fn segment(input: &Path, output: &Path) -> Result<()> {
    let masks: Vec<_> = io::read_tensor(input)?
        .to_image_slices()?
        .iter()
        .map(reference_segment)
        .collect();
    let (h, w) = masks[0].dims();
    let data: Vec<u8> = masks.iter().flat_map(|m| m.as_slice().iter().copied()).collect();
    let dims = if masks.len() == 1 { vec![h, w] } else { vec![masks.len(), h, w] };
    io::write_tensor(output, &io::StoredTensor::new(dims, io::TensorData::U8(data))?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    let result = match cli.command {
        Cmd::Synth(a) => synth(a),
        Cmd::Train(a) => train(a),
        Cmd::Classify(a) => classify(a),
        Cmd::Gate(a) => gate(a),
        Cmd::Run(a) => run(a),
        Cmd::Eval(a) => eval(a),
        Cmd::Gradcheck(a) => gradcheck(a),
        Cmd::Segment { input, output } => segment(&input, &output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.category().exit_code() as u8)
        }
    }
}
