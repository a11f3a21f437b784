use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use detdiag::compare::write_comparison;
use detdiag::config::{threads_from_env, worker_pool, ConfigFile};
use detdiag::output::write_analysis;
use detdiag::overlay::{write_overlays, DEFAULT_SCORE_THRESHOLD};
use detdiag::synth::{generate, write_synthetic, Profile, SynthConfig};
use detdiag::{analyze, build_overlays, compare, load_dataset, load_detections, AnalysisReport, ApMode, Error};

/// Detector error diagnosis: false-positive taxonomy, normalized AP and
/// sensitivity to object characteristics.
#[derive(Parser, Debug)]
#[command(name = "detdiag", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analyze one detector and write report.json, CSV tables and SVG charts.
    Analyze {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        det: PathBuf,
        #[arg(long)]
        taxonomy: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: AnalysisArgs,
    },
    /// Analyze two detectors under one configuration and report B - A deltas.
    Compare {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long = "det-a")]
        det_a: PathBuf,
        #[arg(long = "det-b")]
        det_b: PathBuf,
        #[arg(long)]
        taxonomy: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: AnalysisArgs,
    },
    /// Draw ground truth (red) and false positives above a score threshold
    /// (green) over each image, one SVG per image.
    Fpviz {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        det: PathBuf,
        #[arg(long)]
        taxonomy: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Only false positives scored strictly above this are drawn [default: 0.3]
        #[arg(long = "score-threshold")]
        score_threshold: Option<f64>,
        #[command(flatten)]
        opts: AnalysisArgs,
    },
    /// Write a seeded synthetic dataset, detections, taxonomy and manifest.
    Synth {
        #[arg(long)]
        seed: u64,
        /// perfect, jittered, confused or noisy-bg
        #[arg(long)]
        profile: Profile,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        images: Option<usize>,
        #[arg(long)]
        categories: Option<usize>,
        #[arg(long = "objects-per-image")]
        objects_per_image: Option<usize>,
    },
}

#[derive(Args, Debug, Default)]
struct AnalysisArgs {
    /// JSON file with any of the options below; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// IOU needed for a true positive [default: 0.5]
    #[arg(long = "tp-iou")]
    tp_iou: Option<f64>,
    /// Reference positive count for normalized AP [default: positives per category, rounded up]
    #[arg(long = "n-ref")]
    n_ref: Option<f64>,
    /// Quantile cuts for size and aspect-ratio bins [default: 0.1,0.3,0.7,0.9]
    #[arg(long, value_delimiter = ',')]
    cuts: Option<Vec<f64>>,
    /// envelope or 11point [default: envelope]
    #[arg(long = "ap-mode")]
    ap_mode: Option<ApMode>,
    /// Prefix sizes of the overall false-positive distribution
    #[arg(long, value_delimiter = ',')]
    schedule: Option<Vec<usize>>,
    /// Leave duplicate detections out of the false-positive statistics
    #[arg(long = "exclude-duplicates")]
    exclude_duplicates: bool,
}

impl AnalysisArgs {
    fn resolve(&self, score_threshold: Option<f64>) -> Result<ConfigFile, Error> {
        let flags = ConfigFile {
            tp_iou: self.tp_iou,
            n_ref: self.n_ref,
            cuts: self.cuts.clone(),
            ap_mode: self.ap_mode,
            schedule: self.schedule.clone(),
            exclude_duplicates: self.exclude_duplicates.then_some(true),
            score_threshold,
        };
        match &self.config {
            Some(path) => Ok(flags.or(ConfigFile::load(path)?)),
            None => Ok(flags),
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
}

fn print_summary(report: &AnalysisReport) {
    println!("detector: {}", report.detector);
    println!("{:<16} {:>6} {:>6} {:>8} {:>8}", "category", "pos", "fp", "AP", "APn");
    for c in &report.categories {
        println!(
            "{:<16} {:>6} {:>6} {:>8} {:>8}",
            c.category,
            c.positives,
            c.fp,
            fmt_opt(c.ap),
            fmt_opt(c.normalized_ap)
        );
    }
    let o = &report.overall.fp_counts;
    println!("false positives: Loc {} Sim {} Oth {} BG {}", o.loc, o.sim, o.oth, o.bg);
    for row in &report.sensitivity {
        println!(
            "sensitivity {:<5} max {:.4} min {:.4} spread {:.4}",
            row.characteristic.name(),
            row.max,
            row.min,
            row.sensitivity
        );
    }
}

fn run_analyze(gt: &Path, det: &Path, taxonomy: &Path, out: &Path, opts: &AnalysisArgs) -> Result<(), Error> {
    let cfg = opts.resolve(None)?.analysis_config();
    let ds = load_dataset(gt, taxonomy)?;
    let dets = load_detections(det, &ds)?;
    let analysis = analyze(&ds, &dets, &cfg)?;
    write_analysis(out, &analysis)?;
    print_summary(&analysis.report);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Analyze {
            gt,
            det,
            taxonomy,
            out,
            opts,
        } => run_analyze(&gt, &det, &taxonomy, &out, &opts),
        Command::Compare {
            gt,
            det_a,
            det_b,
            taxonomy,
            out,
            opts,
        } => {
            let cfg = opts.resolve(None)?.analysis_config();
            let ds = load_dataset(&gt, &taxonomy)?;
            let a = load_detections(&det_a, &ds)?;
            let b = load_detections(&det_b, &ds)?;
            let cmp = compare(&ds, &a, &b, &cfg)?;
            write_comparison(&out, &cmp)?;
            let d = &cmp.report.deltas;
            println!("false positives (B - A): {}", d.overall.fp);
            println!("initial Loc fraction (B - A): {}", fmt_opt(d.overall.initial_loc_fraction));
            for s in &d.sensitivity {
                println!("sensitivity {:<5} (B - A): {}", s.characteristic.name(), fmt_opt(s.sensitivity));
            }
            Ok(())
        }
        Command::Fpviz {
            gt,
            det,
            taxonomy,
            out,
            score_threshold,
            opts,
        } => {
            let resolved = opts.resolve(score_threshold)?;
            let threshold = resolved.score_threshold.unwrap_or(DEFAULT_SCORE_THRESHOLD);
            let ds = load_dataset(&gt, &taxonomy)?;
            let dets = load_detections(&det, &ds)?;
            let analysis = analyze(&ds, &dets, &resolved.analysis_config())?;
            let overlays = build_overlays(&ds, &dets, &analysis.fp_records, threshold);
            let written = write_overlays(&out, &overlays)?;
            let boxes: usize = overlays.iter().map(|o| o.false_positives.len()).sum();
            println!(
                "{} overlays, {boxes} false positives with score > {threshold}",
                written.len()
            );
            Ok(())
        }
        Command::Synth {
            seed,
            profile,
            out,
            images,
            categories,
            objects_per_image,
        } => {
            let base = SynthConfig::for_profile(profile);
            let cfg = SynthConfig {
                images: images.unwrap_or(base.images),
                categories: categories.unwrap_or(base.categories),
                objects_per_image: objects_per_image.unwrap_or(base.objects_per_image),
                ..base
            };
            let synth = generate(seed, Some(profile), &cfg)?;
            write_synthetic(&out, &synth)?;
            println!(
                "{} images, {} objects, {} detections written to {}",
                synth.dataset.images().len(),
                synth.dataset.objects().len(),
                synth.detections.len(),
                out.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = threads_from_env()
        .and_then(worker_pool)
        .and_then(|pool| pool.install(|| run(cli)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
