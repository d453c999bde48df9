use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use vesselseg::dataset_io::{load_image, load_truth, save_artifacts, save_gray_png, save_mask_png, scan_dataset, DatasetKind};
use vesselseg::evaluation::{comparison_table, confusion, metrics_for};
use vesselseg::pipeline::{grayscale, segment};
use vesselseg::{Error, RunConfig};

#[derive(Parser)]
#[command(name = "vesselseg", version, about = "Retinal vessel enhancement, segmentation and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enhance one image and write the result as PNG.
    Enhance {
        input: PathBuf,
        /// Output PNG path.
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Segment one image; optionally score it against a truth mask.
    Segment {
        input: PathBuf,
        /// Output directory for the mask and, with --stages, every stage.
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Run one or more methods over a dataset and write CSV/JSON reports.
    Evaluate {
        /// drive, stare or custom (images/ + truth/).
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        root: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
    },
}

#[derive(Args)]
struct ParamArgs {
    /// Flat `key = value` config file; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Enhancement method: suace, clahe, ln or lum.
    #[arg(long)]
    method: Option<String>,
    /// Comma-separated method list (evaluate).
    #[arg(long)]
    methods: Option<String>,
    /// SUACE Gaussian sigma in pixels.
    #[arg(long)]
    sigma: Option<String>,
    /// SUACE window width on the 0-255 scale.
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    a1: Option<String>,
    #[arg(long)]
    h: Option<String>,
    #[arg(long)]
    v: Option<String>,
    #[arg(long)]
    a2: Option<String>,
    /// Base seed for the randomized line search.
    #[arg(long)]
    seed: Option<String>,
    /// Also write every intermediate stage.
    #[arg(long)]
    stages: bool,
}

impl ParamArgs {
    fn resolve(&self) -> vesselseg::Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let flags = [
            ("methods", &self.methods),
            ("method", &self.method),
            ("sigma", &self.sigma),
            ("d", &self.d),
            ("a1", &self.a1),
            ("h", &self.h),
            ("v", &self.v),
            ("a2", &self.a2),
            ("seed", &self.seed),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if self.stages {
            cfg.stages = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn create_dir(dir: &Path) -> vesselseg::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })
}

fn stem(path: &Path) -> String {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("image");
    name.split('.').next().unwrap_or(name).to_string()
}

fn run(cli: Cli) -> vesselseg::Result<()> {
    match cli.command {
        Command::Enhance { input, out, params } => {
            let cfg = params.resolve()?;
            let method = cfg.methods[0];
            let img = load_image(&input)?;
            let gray = grayscale(&img, &cfg.lab_weights)?;
            let start = Instant::now();
            let enhanced = cfg.enhancer(method).apply(&gray)?;
            let elapsed = start.elapsed();
            save_gray_png(&enhanced, &out)?;
            println!(
                "{} {}x{} in {:.2} ms -> {}",
                method.label(),
                gray.width(),
                gray.height(),
                elapsed.as_secs_f64() * 1e3,
                out.display()
            );
        }
        Command::Segment { input, out, truth, params } => {
            let cfg = params.resolve()?;
            let method = cfg.methods[0];
            let img = load_image(&input)?;
            let truth = truth.map(load_truth).transpose()?;
            let start = Instant::now();
            let result = segment(&img, &cfg.pipeline(method))?;
            let elapsed = start.elapsed();
            create_dir(&out)?;
            let id = stem(&input);
            if cfg.stages {
                save_artifacts(&result.artifacts(&id, &img, truth.as_ref())?, &out)?;
            } else {
                save_mask_png(&result.mask, out.join(format!("{id}_mask.png")))?;
            }
            println!(
                "{id}: {} threshold {:.4}, {} vessel pixels, {:.1} ms",
                method.label(),
                result.threshold,
                result.mask.count(),
                elapsed.as_secs_f64() * 1e3
            );
            if let Some(t) = &truth {
                let m = metrics_for(id, confusion(&result.mask, t)?)?;
                println!("TPR {:.4}  FPR {:.4}  ACC {:.4}", m.tpr, m.fpr, m.acc);
            }
        }
        Command::Evaluate { kind, root, out, params } => {
            let mut cfg = params.resolve()?;
            if let Some(k) = kind {
                cfg.kind = Some(k.parse()?);
            }
            if let Some(r) = root {
                cfg.root = Some(r);
            }
            if let Some(o) = out {
                cfg.out = Some(o);
            }
            let kind: DatasetKind = cfg.kind.ok_or_else(|| Error::Parameter("--kind is required".into()))?;
            let root = cfg.root.clone().ok_or_else(|| Error::Parameter("--root is required".into()))?;
            let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("results"));
            let scan = scan_dataset(&root, kind)?;
            for w in &scan.warnings {
                eprintln!("warning: {w}");
            }
            create_dir(&out)?;
            let mut reports = Vec::new();
            for &method in &cfg.methods {
                let stages_dir = cfg.stages.then(|| out.join(format!("stages_{}", method.as_str())));
                let report = vesselseg::evaluate_dataset(&scan.items, method, &cfg, stages_dir.as_deref())?;
                let (csv, json) = report.write(&out, &format!("{}_{}", kind.name(), method.as_str()))?;
                eprintln!("wrote {} and {}", csv.display(), json.display());
                reports.push(report);
            }
            print!("{}", comparison_table(&reports));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_parameter_error() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
