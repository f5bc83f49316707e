//! Command-line front end. Each subcommand is a thin wrapper over the library;
//! the binary maps error categories to exit codes (0 ok, 2 bad config or
//! schedule, 3 runtime failure, 4 broken invariant).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::ablation::{run_ablation_to_dir, ExperimentConfig};
use crate::error::{Error, Result};
use crate::grid::{AxisTopology, SampleGrid};
use crate::io;
use crate::plan::{audit, nearest_input_view_by_index, plan_alternating, SweepParams};
use crate::schedule::NoiseSchedule;
use crate::skeleton::{
    project_skeleton, rasterize_skeleton, triangulate_skeleton, RasterStyle, Skeleton3D,
    SkeletonTopology, DEFAULT_CONF_THRESHOLD,
};
use crate::toy::{gold_run, SceneParams, ToyScene};

#[derive(Parser)]
#[command(name = "gridsweep", version, about = "Sliding-window grid denoising toolkit")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an alternating spatial/temporal plan and print it with its audit.
    Plan(PlanArgs),
    /// Run the scheduling-strategy ablation and write metrics, summary and plot.
    Ablate(AblateArgs),
    /// Write the 6-channel Plücker ray map of one camera.
    Plucker(PluckerArgs),
    /// Skeleton operations: triangulate, project, render.
    #[command(subcommand)]
    Skeleton(SkeletonCommand),
    /// Majority-vote three binary masks into one.
    VoteMasks(VoteMasksArgs),
    /// Run the full-grid gold denoiser on a toy scene and save the result.
    Gold(GoldArgs),
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long, default_value_t = 12)]
    views: usize,
    #[arg(long, default_value_t = 1)]
    frames: usize,
    /// Conditioning input views, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0usize, 3, 6, 9])]
    inputs: Vec<usize>,
    /// Total per-sample step budget D.
    #[arg(long, default_value_t = 24)]
    steps: usize,
    #[arg(long, default_value_t = 6)]
    spatial_window: usize,
    #[arg(long, default_value_t = 2)]
    spatial_stride: usize,
    #[arg(long, default_value_t = 2)]
    spatial_steps: usize,
    #[arg(long, default_value_t = 1)]
    temporal_window: usize,
    #[arg(long, default_value_t = 1)]
    temporal_stride: usize,
    #[arg(long, default_value_t = 6)]
    temporal_steps: usize,
    /// Write the plan JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    /// Experiment config JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Scene seeds, comma separated (overrides the config's list).
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
}

#[derive(Args)]
struct PluckerArgs {
    /// Camera list JSON.
    #[arg(long)]
    cameras: PathBuf,
    /// Index into the camera list.
    #[arg(long, default_value_t = 0)]
    view: usize,
    /// Output base path; writes <out>.f32 and <out>.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum SkeletonCommand {
    /// Triangulate per-view 2D keypoints into a 3D skeleton.
    Triangulate(TriangulateArgs),
    /// Project a 3D skeleton into one camera.
    Project(ProjectArgs),
    /// Rasterize one view's 2D skeleton into an RGBA PNG.
    Render(RenderArgs),
}

#[derive(Args)]
struct TriangulateArgs {
    #[arg(long)]
    cameras: PathBuf,
    /// Keypoints JSON: one joint list per view, `[[{u,v,conf}, ...], ...]`.
    #[arg(long)]
    keypoints: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CONF_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long)]
    cameras: PathBuf,
    #[arg(long, default_value_t = 0)]
    view: usize,
    /// 3D skeleton JSON as written by `skeleton triangulate`.
    #[arg(long)]
    skeleton: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    /// Keypoints JSON, same format as `triangulate`.
    #[arg(long)]
    keypoints: PathBuf,
    /// Which view's joints to draw.
    #[arg(long, default_value_t = 0)]
    view: usize,
    #[arg(long, default_value_t = 512)]
    width: usize,
    #[arg(long, default_value_t = 512)]
    height: usize,
    #[arg(long, default_value_t = 2.0)]
    thickness: f64,
    #[arg(long, default_value_t = 3.0)]
    joint_radius: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VoteMasksArgs {
    /// Exactly three binary PNG masks.
    #[arg(num_args = 3)]
    masks: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GoldArgs {
    #[arg(long, default_value_t = 12)]
    views: usize,
    #[arg(long, default_value_t = 1)]
    frames: usize,
    #[arg(long, default_value_t = 8)]
    latent_dim: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 5.0)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_values_t = [0usize, 3, 6, 9])]
    inputs: Vec<usize>,
    #[arg(long, default_value_t = 24)]
    steps: usize,
    /// Directory for the denoised grid snapshot.
    #[arg(long)]
    out: PathBuf,
}

pub fn run() -> Result<()> {
    run_with(Cli::parse())
}

fn run_with(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Plan(args) => cmd_plan(args),
        Command::Ablate(args) => cmd_ablate(args),
        Command::Plucker(args) => cmd_plucker(args),
        Command::Skeleton(cmd) => match cmd {
            SkeletonCommand::Triangulate(args) => cmd_triangulate(args),
            SkeletonCommand::Project(args) => cmd_project(args),
            SkeletonCommand::Render(args) => cmd_render(args),
        },
        Command::VoteMasks(args) => cmd_vote_masks(args),
        Command::Gold(args) => cmd_gold(args),
    }
}

fn cmd_plan(args: PlanArgs) -> Result<()> {
    let schedule = NoiseSchedule::geometric(args.steps, 10.0, 0.01)?;
    let grid = SampleGrid::init(args.views, args.frames, &args.inputs, 1, 0, &schedule)?;
    let inputs = args.inputs.clone();
    let views = args.views;
    let nearest = move |v: usize| {
        nearest_input_view_by_index(views, AxisTopology::Circular, &inputs, v)
            .expect("inputs are non-empty")
    };
    let plan = plan_alternating(
        &grid,
        &SweepParams::new(args.spatial_window, args.spatial_stride, args.spatial_steps),
        &SweepParams::new(args.temporal_window, args.temporal_stride, args.temporal_steps),
        args.steps,
        &nearest,
    )?;
    let report = audit(&plan, &grid);
    let out = serde_json::json!({ "plan": plan, "audit": report, "audit_passes": report.passes() });
    let text = serde_json::to_string_pretty(&out)?;
    match args.out {
        Some(path) => std::fs::write(path, text)?,
        None => println!("{text}"),
    }
    if !report.passes() {
        return Err(Error::Scheduling("plan fails its step-budget audit".into()));
    }
    Ok(())
}

fn cmd_ablate(args: AblateArgs) -> Result<()> {
    let mut config = match args.config {
        Some(path) => ExperimentConfig::from_file(&path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
    if let Some(seeds) = args.seeds {
        config.scene.seeds = seeds;
    }
    let dir = args.out.unwrap_or_else(|| PathBuf::from(&config.output_dir));
    let output = run_ablation_to_dir(&config, &dir)?;
    for s in &output.summary.strategies {
        println!(
            "{:<12} mse_to_gold {:.6e} (+/- {:.2e})",
            s.strategy, s.mean_mse_to_gold, s.std_mse_to_gold
        );
    }
    println!(
        "sliding vs multigroup: {} wins, {} losses, p = {:.3e}, ordering {}",
        output.summary.sliding_wins_vs_multigroup,
        output.summary.sliding_losses_vs_multigroup,
        output.summary.sign_test_p_value,
        if output.summary.ordering_holds { "holds" } else { "violated" },
    );
    Ok(())
}

fn cmd_plucker(args: PluckerArgs) -> Result<()> {
    let cameras = io::load_cameras(&args.cameras)?;
    let cam = cameras
        .get(args.view)
        .ok_or_else(|| Error::Config(format!("view {} out of range ({} cameras)", args.view, cameras.len())))?;
    let map = crate::camera::plucker_embed(cam);
    io::save_channel_map(&map, &args.out)?;
    println!("wrote {}x{}x6 map to {}", map.height, map.width, args.out.display());
    Ok(())
}

fn cmd_triangulate(args: TriangulateArgs) -> Result<()> {
    let cameras = io::load_cameras(&args.cameras)?;
    let views = io::load_keypoints(&args.keypoints)?;
    let skel = triangulate_skeleton(&views, &cameras, args.threshold)?;
    std::fs::write(&args.out, serde_json::to_string_pretty(&skel)?)?;
    let valid = skel.joints.iter().filter(|j| j.point().is_some()).count();
    println!("{valid}/{} joints triangulated", skel.joints.len());
    Ok(())
}

fn cmd_project(args: ProjectArgs) -> Result<()> {
    let cameras = io::load_cameras(&args.cameras)?;
    let cam = cameras
        .get(args.view)
        .ok_or_else(|| Error::Config(format!("view {} out of range ({} cameras)", args.view, cameras.len())))?;
    let skel: Skeleton3D = serde_json::from_str(&std::fs::read_to_string(&args.skeleton)?)?;
    let projected = project_skeleton(cam, &skel);
    std::fs::write(&args.out, serde_json::to_string_pretty(&projected.joints)?)?;
    Ok(())
}

fn cmd_render(args: RenderArgs) -> Result<()> {
    let views = io::load_keypoints(&args.keypoints)?;
    let skel = views
        .get(args.view)
        .ok_or_else(|| Error::Config(format!("view {} out of range ({} views)", args.view, views.len())))?;
    let topology = match skel.joints.len() {
        17 => SkeletonTopology::coco17(),
        n => return Err(Error::Config(format!("no built-in topology for {n} joints"))),
    };
    let style = RasterStyle { thickness: args.thickness, joint_radius: args.joint_radius };
    let img = rasterize_skeleton(skel, &topology, args.height, args.width, &style)?;
    io::save_png_rgba(&img, &args.out)?;
    Ok(())
}

fn cmd_vote_masks(args: VoteMasksArgs) -> Result<()> {
    let loaded: Vec<(usize, usize, Vec<u8>)> =
        args.masks.iter().map(|p| io::load_binary_mask(p)).collect::<Result<_>>()?;
    let (w, h) = (loaded[0].0, loaded[0].1);
    if loaded.iter().any(|(mw, mh, _)| (*mw, *mh) != (w, h)) {
        return Err(Error::Config("mask dimensions differ".into()));
    }
    let voted = crate::metrics::vote_masks(&loaded[0].2, &loaded[1].2, &loaded[2].2)?;
    io::save_binary_mask(w, h, &voted, &args.out)?;
    Ok(())
}

fn cmd_gold(args: GoldArgs) -> Result<()> {
    let scene = ToyScene::generate(SceneParams {
        views: args.views,
        frames: args.frames,
        latent_dim: args.latent_dim,
        alpha: args.alpha,
        beta: args.beta,
        seed: args.seed,
    })?;
    let schedule = NoiseSchedule::geometric(args.steps, 10.0, 0.01)?;
    let mut grid = scene.make_grid(&args.inputs, args.seed.wrapping_add(0x5EED), &schedule)?;
    gold_run(&scene, &mut grid, &schedule)?;
    io::save_grid(&grid, &schedule, &args.out)?;
    let truth: Vec<f64> = grid
        .target_ids()
        .iter()
        .flat_map(|id| scene.ground_truth[scene.site(*id)].clone())
        .collect();
    let err = crate::metrics::mse(&grid.target_latents_flat(), &truth)?;
    println!("gold run saved to {}; mse to ground truth {err:.6e}", args.out.display());
    Ok(())
}
