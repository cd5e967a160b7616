//! `hadain` — hierarchical AdaIN color correction from the command line.
//!
//! Four subcommands: `correct` (run the corrector), `simulate` (make a
//! synthetic color-shifted image with ground truth), `evaluate` (metric
//! report for an image pair), and `sweep` (the (L, gamma) ablation
//! harness). Exit codes: 0 success, 1 runtime/data error, 2 usage or
//! config error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hadain_core::error::Error;
use hadain_core::grid::make_grid;
use hadain_core::hadain::finest_patch_edge;
use hadain_core::io::{load_image, save_image};
use hadain_core::metrics::metric_report;
use hadain_core::shift::{apply_shift, random_spec, RetouchLabel, ShiftKind};
use hadain_core::sweep::{load_corpus, run_sweep_on, results_to_table, write_results, SweepPlan};
use hadain_core::{hadain_correct, hadain_describe, HAdaInConfig};

#[derive(Parser)]
#[command(name = "hadain", version, about = "Hierarchical AdaIN color correction toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Correct the colors of a generated image to match a reference.
    Correct(CorrectArgs),
    /// Apply a seeded synthetic color shift to an image.
    Simulate(SimulateArgs),
    /// Write a JSON metric report comparing two images.
    Evaluate(EvaluateArgs),
    /// Run an (L, gamma) ablation sweep from a JSON plan.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct CorrectArgs {
    /// Image whose colors are trusted (the statistics source).
    #[arg(long)]
    reference: PathBuf,
    /// Image to correct.
    #[arg(long)]
    generated: PathBuf,
    /// Output path (.ppm or .png).
    #[arg(long)]
    out: PathBuf,
    /// Hierarchical level L.
    #[arg(long, default_value_t = 30)]
    levels: u32,
    /// Overlapping ratio gamma in [0, 1).
    #[arg(long, default_value_t = 0.7)]
    overlap: f64,
    /// Degenerate-sigma threshold.
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    /// Skip the final clamp to [0, 1].
    #[arg(long)]
    no_clamp: bool,
    /// Shorthand for --levels 1 --overlap 0 (plain global AdaIN).
    #[arg(long)]
    adain_only: bool,
    /// Optional JSON metric report comparing corrected vs reference.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, env = "HADAIN_THREADS")]
    threads: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Global,
    Block,
    Smooth,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    seed: u64,
    /// Shift strength in (0, 1].
    #[arg(long)]
    magnitude: f64,
    /// Shifted image output path.
    #[arg(long)]
    out: PathBuf,
    /// Where to write the ShiftSpec JSON.
    #[arg(long)]
    spec_out: PathBuf,
    /// Block grid / lattice rows for block and smooth kinds.
    #[arg(long, default_value_t = 4)]
    field_rows: usize,
    /// Block grid / lattice cols for block and smooth kinds.
    #[arg(long, default_value_t = 4)]
    field_cols: usize,
    /// Retouching-degree metadata "e,f,s", each 0..=3 (recorded in the
    /// spec JSON, never interpreted).
    #[arg(long, value_parser = parse_label)]
    label: Option<RetouchLabel>,
}

fn parse_label(s: &str) -> Result<RetouchLabel, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated degrees, got {s:?}"));
    }
    let mut degrees = [0u8; 3];
    for (d, p) in degrees.iter_mut().zip(&parts) {
        *d = p.trim().parse().map_err(|e| format!("bad degree {p:?}: {e}"))?;
    }
    let label = RetouchLabel(degrees);
    label.validate().map_err(|e| e.to_string())?;
    Ok(label)
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Include seam_score measured against this level's patch grid.
    #[arg(long)]
    grid_level: Option<u32>,
    #[arg(long, default_value_t = 0.0)]
    grid_overlap: f64,
    /// Report output path (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep plan JSON.
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Also write per-cell patch grid geometry to grids.json.
    #[arg(long)]
    dump_grids: bool,
    #[arg(long, env = "HADAIN_THREADS")]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn init_threads(threads: Option<usize>) -> Result<(), Error> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Correct(args) => cmd_correct(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn cmd_correct(args: CorrectArgs) -> Result<(), Error> {
    init_threads(args.threads)?;
    let cfg = if args.adain_only {
        HAdaInConfig {
            levels: 1,
            gamma: 0.0,
            eps: args.eps,
            clamp_output: !args.no_clamp,
        }
    } else {
        HAdaInConfig {
            levels: args.levels,
            gamma: args.overlap,
            eps: args.eps,
            clamp_output: !args.no_clamp,
        }
    };
    cfg.validate()?;
    let reference = load_image(&args.reference)?;
    let generated = load_image(&args.generated)?;
    let edge = finest_patch_edge(&cfg, reference.height(), reference.width())?;
    if edge < 4 {
        eprintln!(
            "warning: finest level patches are only {edge}px on a side; \
             near-pixel patches copy reference content instead of correcting color"
        );
    }
    let corrected = hadain_correct(&reference, &generated, &cfg)?;
    save_image(&corrected, &args.out)?;
    if let Some(report_path) = args.report {
        let report = metric_report(&corrected, &reference, None)?;
        let json = serde_json::to_string_pretty(&report).expect("serializable report");
        std::fs::write(&report_path, json).map_err(|e| Error::Io {
            path: report_path,
            source: e,
        })?;
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let kind = match args.kind {
        KindArg::Global => ShiftKind::GlobalAffine,
        KindArg::Block => ShiftKind::BlockAffine {
            rows: args.field_rows,
            cols: args.field_cols,
        },
        KindArg::Smooth => ShiftKind::SmoothField {
            rows: args.field_rows,
            cols: args.field_cols,
        },
    };
    let mut spec = random_spec(kind, args.seed, args.magnitude)?;
    spec.retouch_label = args.label;
    let input = load_image(&args.input)?;
    let shifted = apply_shift(&input, &spec)?;
    save_image(&shifted, &args.out)?;
    let json = serde_json::to_string_pretty(&spec).expect("serializable spec");
    std::fs::write(&args.spec_out, json).map_err(|e| Error::Io {
        path: args.spec_out,
        source: e,
    })?;
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), Error> {
    let a = load_image(&args.a)?;
    let b = load_image(&args.b)?;
    let grid = match args.grid_level {
        Some(level) => Some(make_grid(a.height(), a.width(), level, args.grid_overlap)?),
        None => None,
    };
    let report = metric_report(&a, &b, grid.as_ref())?;
    let json = serde_json::to_string_pretty(&report).expect("serializable report");
    std::fs::write(&args.out, json).map_err(|e| Error::Io {
        path: args.out,
        source: e,
    })?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Error> {
    init_threads(args.threads)?;
    let plan_text = std::fs::read_to_string(&args.plan).map_err(|e| Error::Io {
        path: args.plan.clone(),
        source: e,
    })?;
    let plan: SweepPlan = serde_json::from_str(&plan_text)
        .map_err(|e| Error::Config(format!("bad sweep plan {}: {e}", args.plan.display())))?;
    let entries = load_corpus(&plan.corpus)?;
    let results = run_sweep_on(&plan, &entries)?;
    write_results(&results, &args.out_dir)?;
    if args.dump_grids {
        let (h, w) = (entries[0].reference.height(), entries[0].reference.width());
        let dump: Vec<serde_json::Value> = plan
            .resolved_cells()?
            .into_iter()
            .map(|(level, gamma)| {
                let cfg = HAdaInConfig {
                    levels: level,
                    gamma,
                    eps: plan.eps,
                    clamp_output: true,
                };
                hadain_describe(&cfg, h, w).map(|report| {
                    serde_json::json!({
                        "level": level,
                        "gamma": gamma,
                        "grids": report.levels,
                    })
                })
            })
            .collect::<Result<_, _>>()?;
        let path = args.out_dir.join("grids.json");
        let json = serde_json::to_string_pretty(&dump).expect("serializable dump");
        std::fs::write(&path, json).map_err(|e| Error::Io { path, source: e })?;
    }
    print!("{}", results_to_table(&results));
    Ok(())
}
