use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use keygrasp_core::codec::ScaleRefine;
use keygrasp_core::geometry::KeypointKind;
use keygrasp_core::io::{RunConfig, Split};
use keygrasp_core::pipeline::{self, PipelineError};
use keygrasp_core::pnp::PnpMethod;

#[derive(Parser, Debug)]
#[command(name = "keygrasp", version, about = "Synthetic keypoint grasp datasets, decoding and evaluation")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Keypoint layout: box, tetrahedron or tail.
    #[arg(long, global = true)]
    template: Option<KeypointKind>,
    /// ippe, p3p or epnp.
    #[arg(long = "pnp-method", global = true)]
    pnp_method: Option<PnpMethod>,
    /// 1 = (1 cm, 20°), 2 = (2 cm, 30°), 3 = (3 cm, 45°).
    #[arg(long = "threshold-level", global = true)]
    threshold_level: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Single,
    Multi,
    All,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Refine {
    Projective,
    Norm,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate scenes, render frames and write label maps.
    Generate(GenerateArgs),
    /// Decode label maps into ranked grasp files.
    Decode(DecodeArgs),
    /// Score grasp files against a dataset's ground truth.
    Evaluate(EvaluateArgs),
    /// Write a dataset's ground truth as grasp files.
    Truth(TruthArgs),
    /// Compare keypoint layouts and PnP solvers under pixel noise.
    Ablate(AblateArgs),
    /// Metrics of the noisy oracle detector across noise levels.
    Sweep(SweepArgs),
    /// Re-render one camera of a stored scene.
    Render(RenderArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    out: PathBuf,
    /// Number of scenes of the selected mode.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, value_enum, default_value = "all")]
    mode: Mode,
    #[arg(long)]
    cameras: Option<usize>,
    #[arg(long)]
    width: Option<u32>,
    #[arg(long)]
    height: Option<u32>,
    /// Print the frame plan without writing anything.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    /// A dataset root or a single frame directory.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long, value_enum)]
    scale_refine: Option<Refine>,
    #[arg(long)]
    overlay: bool,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// train, test_single or test_multi; all frames when omitted.
    #[arg(long)]
    split: Option<Split>,
}

#[derive(Args, Debug)]
struct TruthArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AblateArgs {
    #[arg(long)]
    out: PathBuf,
    /// Trials per cell.
    #[arg(long)]
    count: Option<usize>,
    /// Pixel noise levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    sigma: Vec<f64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    out: PathBuf,
    /// Number of single-object scenes.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    sigma: Vec<f64>,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, default_value_t = 0)]
    camera: usize,
    #[arg(long)]
    out: PathBuf,
}

fn load_config(cli: &Cli) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.template {
        cfg.decode.template = t;
    }
    if let Some(m) = cli.pnp_method {
        cfg.decode.method = m;
    }
    if cli.threshold_level.is_some() {
        cfg.threshold_level = cli.threshold_level;
    }
    match &cli.command {
        Command::Generate(a) => {
            let d = &mut cfg.dataset;
            match a.mode {
                Mode::Single => {
                    d.multi_scenes = 0;
                    d.single_scenes = a.count.unwrap_or(d.single_scenes);
                }
                Mode::Multi => {
                    d.single_scenes = 0;
                    d.multi_scenes = a.count.unwrap_or(d.multi_scenes);
                }
                Mode::All => {
                    if let Some(n) = a.count {
                        d.single_scenes = n;
                        d.multi_scenes = n;
                    }
                }
            }
            d.cameras_per_scene = a.cameras.unwrap_or(d.cameras_per_scene);
            let image = cfg.image;
            cfg.image = image.resized(a.width.unwrap_or(image.width), a.height.unwrap_or(image.height));
        }
        Command::Decode(a) => {
            cfg.decode.threshold = a.threshold.unwrap_or(cfg.decode.threshold);
            cfg.decode.top_k = a.top_k.unwrap_or(cfg.decode.top_k);
            if let Some(r) = a.scale_refine {
                cfg.decode.scale_refine = Some(match r {
                    Refine::Projective => ScaleRefine::Projective,
                    Refine::Norm => ScaleRefine::Norm,
                });
            }
        }
        Command::Ablate(a) => {
            cfg.ablation.trials = a.count.unwrap_or(cfg.ablation.trials);
            if !a.sigma.is_empty() {
                cfg.ablation.sigmas = a.sigma.clone();
            }
        }
        Command::Sweep(a) => {
            cfg.sweep_scenes = a.count.unwrap_or(cfg.sweep_scenes);
            if !a.sigma.is_empty() {
                cfg.sweep_sigmas = a.sigma.clone();
            }
        }
        Command::Evaluate(_) | Command::Truth(_) | Command::Render(_) => {}
    }
    cfg.validate().map_err(PipelineError::Config)?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Generate(a) => {
            let m = pipeline::cmd_generate(&cfg, &a.out, a.dry_run)?;
            println!(
                "frames: train {} / test_single {} / test_multi {} (total {})",
                m.counts.train,
                m.counts.test_single,
                m.counts.test_multi,
                m.counts.total()
            );
            if !a.dry_run {
                println!("wrote {} files under {}", m.files.len() + 1, a.out.display());
            }
        }
        Command::Decode(a) => {
            let s = pipeline::cmd_decode(&cfg, &a.input, &a.out, a.overlay)?;
            println!(
                "decoded {} frames: {} grasps, {} PnP failures, {} orientation rejects",
                s.frames, s.candidates, s.pnp_failures, s.orientation_rejects
            );
        }
        Command::Evaluate(a) => {
            let r = pipeline::cmd_evaluate(&cfg, &a.predictions, &a.dataset, a.split, &a.out)?;
            print!("{}", r.to_table());
        }
        Command::Truth(a) => {
            let n = pipeline::cmd_export_truth(&a.dataset, &a.out)?;
            println!("wrote ground truth for {n} frames");
        }
        Command::Ablate(a) => print!("{}", pipeline::cmd_ablate(&cfg, &a.out)?.to_table()),
        Command::Sweep(a) => print!("{}", pipeline::cmd_sweep(&cfg, &a.out)?.to_table()),
        Command::Render(a) => {
            let (w, h) = pipeline::cmd_render(&cfg, &a.scene, a.camera, &a.out)?;
            println!("rendered {w}x{h}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
