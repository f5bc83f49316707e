//! The toy-world ablation: gold run versus sliding-iterative, multi-group,
//! and median-filter denoising from identical initial noise, with metrics,
//! CSV/JSON emission, and a bar-plot image.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::camera::circle_rig;
use crate::engine::{run_plan, GuidanceConfig};
use crate::error::{Error, Result};
use crate::grid::SampleGrid;
use crate::metrics::{
    mse, psnr, sign_test_p, temporal_jitter, MetricsRecord, METRICS_CSV_HEADER,
};
use crate::parallel::{execute_parallel, ExecutionOptions};
use crate::plan::{
    nearest_input_view, plan_alternating, plan_median, plan_multigroup, Axis, SweepParams,
};
use crate::schedule::NoiseSchedule;
use crate::toy::{gold_run, GaussianPosteriorDenoiser, SceneParams, ToyScene};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub views: usize,
    pub frames: usize,
    pub latent_dim: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seeds: Vec<u64>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self { views: 12, frames: 1, latent_dim: 8, alpha: 1.0, beta: 5.0, seeds: (0..50).collect() }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleConfig {
    pub steps: usize,
    pub sigma_max: f64,
    pub sigma_min: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { steps: 24, sigma_max: 10.0, sigma_min: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct SlidingConfig {
    pub spatial: SweepParams,
    pub temporal: SweepParams,
}

impl Default for SlidingConfig {
    fn default() -> Self {
        // Satisfies 2*P*W/S = D/2 = 12 per phase for the default D = 24.
        Self { spatial: SweepParams::new(6, 2, 2), temporal: SweepParams::new(1, 1, 6) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub scene: SceneConfig,
    pub input_views: Vec<usize>,
    pub schedule: ScheduleConfig,
    pub sliding: SlidingConfig,
    pub group_size: usize,
    pub median_window: usize,
    pub median_overlap: usize,
    pub guidance_scale: f64,
    pub workers: usize,
    pub output_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scene: SceneConfig::default(),
            // Clustered inputs leave the 8 targets as one coupled chain, so
            // window placement actually matters. Evenly spaced inputs would
            // separate the ring into blocks and every strategy would be exact.
            input_views: vec![0, 1, 2, 3],
            schedule: ScheduleConfig::default(),
            sliding: SlidingConfig::default(),
            group_size: 2,
            median_window: 4,
            median_overlap: 2,
            guidance_scale: 1.0,
            workers: 1,
            output_dir: "ablation_out".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scene.seeds.is_empty() {
            return Err(Error::Config("seed list must be non-empty".into()));
        }
        if self.input_views.is_empty() {
            return Err(Error::Config("input_views must be non-empty".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        if self.guidance_scale < 0.0 {
            return Err(Error::Config("guidance scale must be >= 0".into()));
        }
        // schedule and sweep params validated by their constructors
        NoiseSchedule::geometric(self.schedule.steps, self.schedule.sigma_max, self.schedule.sigma_min)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: String,
    pub mean_mse_to_gold: f64,
    pub std_mse_to_gold: f64,
    pub mean_mse_to_ground_truth: f64,
    pub std_mse_to_ground_truth: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationSummary {
    pub strategies: Vec<StrategySummary>,
    pub sliding_wins_vs_multigroup: usize,
    pub sliding_losses_vs_multigroup: usize,
    pub sign_test_p_value: f64,
    pub ordering_holds: bool,
    pub mean_overlap_variance: f64,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct AblationOutput {
    pub records: Vec<MetricsRecord>,
    pub summary: AblationSummary,
    /// Per (strategy, seed) wall time in microseconds. Kept out of the
    /// metrics CSV so the CSV stays byte-identical across runs and worker
    /// counts.
    pub timings_micros: Vec<(String, u64, u64)>,
}

fn gt_targets(scene: &ToyScene, grid: &SampleGrid) -> Vec<f64> {
    grid.target_ids()
        .iter()
        .flat_map(|id| scene.ground_truth[scene.site(*id)].clone())
        .collect()
}

fn record(
    strategy: &str,
    seed: u64,
    grid: &SampleGrid,
    gold: &[f64],
    truth: &[f64],
    peak: f64,
    overlap_variance: Option<f64>,
) -> Result<MetricsRecord> {
    let flat = grid.target_latents_flat();
    Ok(MetricsRecord {
        strategy: strategy.to_string(),
        seed,
        mse_to_gold: mse(&flat, gold)?,
        mse_to_ground_truth: mse(&flat, truth)?,
        psnr: psnr(&flat, truth, peak)?,
        temporal_jitter: temporal_jitter(grid),
        overlap_variance,
    })
}

pub fn run_ablation(config: &ExperimentConfig) -> Result<AblationOutput> {
    config.validate()?;
    let schedule = NoiseSchedule::geometric(
        config.schedule.steps,
        config.schedule.sigma_max,
        config.schedule.sigma_min,
    )?;
    let total_steps = schedule.steps();
    let cameras = circle_rig(config.scene.views, 3.0, 0.5, 64, 64)?;
    let nearest = |v: usize| {
        nearest_input_view(&cameras, &config.input_views, v).expect("rig covers all views")
    };
    let guidance = GuidanceConfig { scale: config.guidance_scale, train_drop_prob: 0.1 };

    let mut records = Vec::new();
    let mut timings = Vec::new();
    let mut wins = 0usize;
    let mut losses = 0usize;
    let mut overlap_acc = 0.0;

    for &seed in &config.scene.seeds {
        let scene = ToyScene::generate(SceneParams {
            views: config.scene.views,
            frames: config.scene.frames,
            latent_dim: config.scene.latent_dim,
            alpha: config.scene.alpha,
            beta: config.scene.beta,
            seed,
        })?;
        let denoiser = GaussianPosteriorDenoiser { scene: &scene };
        let grid0 = scene.make_grid(&config.input_views, seed.wrapping_add(0x5EED), &schedule)?;
        let truth = gt_targets(&scene, &grid0);
        let peak = {
            let lo = truth.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = truth.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo { hi - lo } else { 1.0 }
        };

        // gold reference
        let start = std::time::Instant::now();
        let mut gold_grid = grid0.clone();
        gold_run(&scene, &mut gold_grid, &schedule)?;
        timings.push(("gold".to_string(), seed, start.elapsed().as_micros() as u64));
        let gold = gold_grid.target_latents_flat();
        records.push(record("gold", seed, &gold_grid, &gold, &truth, peak, None)?);

        // sliding iterative, parallel executor
        let start = std::time::Instant::now();
        let plan = plan_alternating(
            &grid0,
            &config.sliding.spatial,
            &config.sliding.temporal,
            total_steps,
            &nearest,
        )?;
        let mut sliding_grid = grid0.clone();
        execute_parallel(
            &mut sliding_grid,
            &plan,
            &denoiser,
            &guidance,
            &schedule,
            &ExecutionOptions::with_workers(config.workers),
        )?;
        timings.push(("sliding".to_string(), seed, start.elapsed().as_micros() as u64));
        let sliding_rec = record("sliding", seed, &sliding_grid, &gold, &truth, peak, None)?;

        // multi-group baseline
        let start = std::time::Instant::now();
        let plan = plan_multigroup(&grid0, Axis::Spatial, config.group_size, total_steps, &nearest)?;
        let mut group_grid = grid0.clone();
        run_plan(&mut group_grid, &plan, &denoiser, &guidance, &schedule)?;
        timings.push(("multigroup".to_string(), seed, start.elapsed().as_micros() as u64));
        let group_rec = record("multigroup", seed, &group_grid, &gold, &truth, peak, None)?;

        // median-filter baseline
        let start = std::time::Instant::now();
        let (plan, merge) = plan_median(
            &grid0,
            Axis::Spatial,
            config.median_window,
            config.median_overlap,
            total_steps,
            &nearest,
        )?;
        let (median_grid, stats) =
            crate::engine::run_median(&grid0, &plan, &merge, &denoiser, &guidance, &schedule)?;
        timings.push(("median".to_string(), seed, start.elapsed().as_micros() as u64));
        let median_rec =
            record("median", seed, &median_grid, &gold, &truth, peak, Some(stats.overlap_variance))?;
        overlap_acc += stats.overlap_variance;

        if sliding_rec.mse_to_gold < group_rec.mse_to_gold {
            wins += 1;
        } else if sliding_rec.mse_to_gold > group_rec.mse_to_gold {
            losses += 1;
        }
        records.push(sliding_rec);
        records.push(group_rec);
        records.push(median_rec);
    }

    let summarize = |name: &str| -> StrategySummary {
        let rows: Vec<&MetricsRecord> = records.iter().filter(|r| r.strategy == name).collect();
        let n = rows.len() as f64;
        let stat = |f: &dyn Fn(&MetricsRecord) -> f64| -> (f64, f64) {
            let mean = rows.iter().map(|r| f(r)).sum::<f64>() / n;
            let var = rows.iter().map(|r| (f(r) - mean).powi(2)).sum::<f64>() / n;
            (mean, var.sqrt())
        };
        let (mg, sg) = stat(&|r| r.mse_to_gold);
        let (mt, st) = stat(&|r| r.mse_to_ground_truth);
        StrategySummary {
            strategy: name.to_string(),
            mean_mse_to_gold: mg,
            std_mse_to_gold: sg,
            mean_mse_to_ground_truth: mt,
            std_mse_to_ground_truth: st,
        }
    };
    let strategies: Vec<StrategySummary> =
        ["gold", "sliding", "multigroup", "median"].iter().map(|s| summarize(s)).collect();
    let ordering_holds = strategies[1].mean_mse_to_gold < strategies[2].mean_mse_to_gold;
    let summary = AblationSummary {
        strategies,
        sliding_wins_vs_multigroup: wins,
        sliding_losses_vs_multigroup: losses,
        sign_test_p_value: sign_test_p(wins, losses),
        ordering_holds,
        mean_overlap_variance: overlap_acc / config.scene.seeds.len() as f64,
        seeds: config.scene.seeds.clone(),
    };
    Ok(AblationOutput { records, summary, timings_micros: timings })
}

pub fn metrics_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::from(METRICS_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    out
}

/// Runs the ablation and writes `metrics.csv`, `summary.json`, `plot.png`,
/// `plot.json` and `timings.json` into the configured output directory.
pub fn run_ablation_to_dir(config: &ExperimentConfig, dir: &Path) -> Result<AblationOutput> {
    let output = run_ablation(config)?;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("metrics.csv"), metrics_csv(&output.records))?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&output.summary)?)?;
    fs::write(dir.join("timings.json"), serde_json::to_string_pretty(&output.timings_micros)?)?;
    write_bar_plot(&output.summary, dir)?;
    Ok(output)
}

/// Bar plot of mean MSE-to-gold per windowed strategy, plus a JSON legend
/// mapping bar order to strategy names.
fn write_bar_plot(summary: &AblationSummary, dir: &Path) -> Result<()> {
    const W: u32 = 480;
    const H: u32 = 320;
    const MARGIN: u32 = 30;
    let bars: Vec<(&str, f64, [u8; 3])> = summary
        .strategies
        .iter()
        .filter(|s| s.strategy != "gold")
        .map(|s| {
            let color = match s.strategy.as_str() {
                "sliding" => [46, 134, 193],
                "multigroup" => [203, 67, 53],
                _ => [40, 180, 99],
            };
            (s.strategy.as_str(), s.mean_mse_to_gold, color)
        })
        .collect();
    let max = bars.iter().map(|b| b.1).fold(f64::MIN_POSITIVE, f64::max);
    let mut img = image::RgbaImage::from_pixel(W, H, image::Rgba([255, 255, 255, 255]));
    let plot_h = H - 2 * MARGIN;
    let slot = (W - 2 * MARGIN) / bars.len() as u32;
    for (i, (_, value, color)) in bars.iter().enumerate() {
        let bar_h = ((value / max) * plot_h as f64).round() as u32;
        let x0 = MARGIN + i as u32 * slot + slot / 6;
        let x1 = MARGIN + (i as u32 + 1) * slot - slot / 6;
        for x in x0..x1 {
            for y in (H - MARGIN - bar_h)..(H - MARGIN) {
                img.put_pixel(x, y, image::Rgba([color[0], color[1], color[2], 255]));
            }
        }
    }
    // axis line
    for x in MARGIN..(W - MARGIN) {
        img.put_pixel(x, H - MARGIN, image::Rgba([0, 0, 0, 255]));
    }
    img.save(dir.join("plot.png"))?;
    let legend: Vec<serde_json::Value> = bars
        .iter()
        .map(|(name, value, _)| serde_json::json!({ "strategy": name, "mean_mse_to_gold": value }))
        .collect();
    fs::write(dir.join("plot.json"), serde_json::to_string_pretty(&legend)?)?;
    Ok(())
}
