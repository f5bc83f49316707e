//! Runs the scheduling-strategy ablation on the Gaussian toy world: a gold
//! full-grid run versus sliding-iterative, multi-group, and median-filter
//! denoising from identical initial noise. Writes metrics.csv, summary.json
//! and a bar plot under target/example_out/ablation.

use std::path::Path;

use gridsweep::ablation::{run_ablation_to_dir, ExperimentConfig, SceneConfig};

fn main() -> gridsweep::Result<()> {
    let config = ExperimentConfig {
        scene: SceneConfig { seeds: (0..20).collect(), ..SceneConfig::default() },
        ..ExperimentConfig::default()
    };
    let dir = Path::new("target/example_out/ablation");
    let output = run_ablation_to_dir(&config, dir)?;

    println!("strategy       mean MSE to gold    mean MSE to truth");
    for s in &output.summary.strategies {
        println!(
            "{:<12}   {:>14.6e}     {:>14.6e}",
            s.strategy, s.mean_mse_to_gold, s.mean_mse_to_ground_truth
        );
    }
    println!(
        "sliding vs multigroup: {} wins / {} losses, sign test p = {:.2e}",
        output.summary.sliding_wins_vs_multigroup,
        output.summary.sliding_losses_vs_multigroup,
        output.summary.sign_test_p_value,
    );
    println!("median overlap variance: {:.3e}", output.summary.mean_overlap_variance);
    println!("wrote metrics, summary, and plot to {}", dir.display());
    Ok(())
}
