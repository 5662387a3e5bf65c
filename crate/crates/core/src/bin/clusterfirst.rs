use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use clusterfirst::packing::CompositeImage;
use clusterfirst::pipeline::{compare_fullframe, Pipeline};
use clusterfirst::scene::render_camera_frame;
use clusterfirst::scheduler::LatencyTable;
use clusterfirst::viz::frame_overlay_svg;
use clusterfirst::{PipelineConfig, Scene};

#[derive(Parser)]
#[command(version, about = "LiDAR-cluster-first, camera-inference-later pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline on one scene file, or on every scene in a directory.
    Run {
        #[arg(long)]
        scene: PathBuf,
        /// Pipeline config (JSON). Defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write `<frame>.json` reports here instead of printing them.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write composite PPMs, the camera frame and an SVG overlay.
        #[arg(long, requires = "out")]
        viz: bool,
    },
    /// Mean simulated cost against full-frame inference over a scene directory.
    Compare {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Check a latency table CSV for monotonicity.
    ValidateTable {
        #[arg(long)]
        table: PathBuf,
    },
}

fn load_pipeline(config: Option<&Path>) -> anyhow::Result<Pipeline> {
    let cfg = match config {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("config {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    Ok(Pipeline::new(cfg)?)
}

fn scene_files(path: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .with_context(|| format!("reading {}", path.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no scene files in {}", path.display());
    }
    Ok(files)
}

fn load_scenes(path: &Path) -> anyhow::Result<Vec<(String, Scene)>> {
    scene_files(path)?
        .into_iter()
        .map(|f| {
            let id = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let scene = Scene::load(&f).with_context(|| format!("scene {}", f.display()))?;
            Ok((id, scene))
        })
        .collect()
}

/// Prints a line to stdout; a closed pipe ends output quietly.
fn emit(text: &str) -> anyhow::Result<()> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        r => Ok(r?),
    }
}

fn write_viz(dir: &Path, id: &str, scene: &Scene, run: &clusterfirst::FrameRun) -> anyhow::Result<()> {
    let frame = scene.camera.frame();
    render_camera_frame(&scene.ground_truth(), &scene.camera).write_ppm(dir.join(format!("{id}_frame.ppm")))?;
    for (c, r) in run.plan.kept.iter().zip(&run.rasters) {
        r.write_ppm(dir.join(composite_name(id, c)))?;
    }
    std::fs::write(dir.join(format!("{id}_overlay.svg")), frame_overlay_svg(run, frame))?;
    Ok(())
}

fn composite_name(id: &str, c: &CompositeImage) -> String {
    format!("{id}_composite{}_{}_{}.ppm", c.index, c.priority, c.side)
}

fn run(scene: &Path, config: Option<&Path>, out: Option<&Path>, viz: bool) -> anyhow::Result<()> {
    let pipeline = load_pipeline(config)?;
    let scenes = load_scenes(scene)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    let runs = scenes
        .par_iter()
        .map(|(id, s)| pipeline.run_frame(id, s).with_context(|| format!("frame {id}")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    for ((id, s), r) in scenes.iter().zip(&runs) {
        let json = serde_json::to_string_pretty(&r.report)?;
        match out {
            Some(dir) => {
                std::fs::write(dir.join(format!("{id}.json")), json)?;
                if viz {
                    write_viz(dir, id, s, r)?;
                }
            }
            None => emit(&json)?,
        }
    }
    Ok(())
}

fn validate_table(path: &Path) -> anyhow::Result<bool> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let table = LatencyTable::parse_csv(file)?;
    let problems = table.monotonicity_violations();
    for p in &problems {
        eprintln!("violation: {p}");
    }
    emit(&format!(
        "{}: {} sizes x {} batches, {}",
        path.display(),
        table.sizes().len(),
        table.batches().len(),
        if problems.is_empty() { "monotone" } else { "NOT monotone" }
    ))?;
    Ok(problems.is_empty())
}

fn main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scene, config, out, viz } => run(&scene, config.as_deref(), out.as_deref(), viz)?,
        Command::Compare { scenes, config } => {
            let pipeline = load_pipeline(config.as_deref())?;
            let report = compare_fullframe(&pipeline, &load_scenes(&scenes)?)?;
            emit(&serde_json::to_string_pretty(&report)?)?;
        }
        Command::ValidateTable { table } => {
            if !validate_table(&table)? {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
