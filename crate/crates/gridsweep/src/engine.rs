//! Plan execution: feeds window members through a black-box denoiser with
//! classifier-free guidance and advances each steppable member one schedule
//! index per update.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Role, SampleGrid, SampleId};
use crate::plan::{audit, DenoisePlan, MedianMerge, WindowPlacement};
use crate::schedule::{sampler_step, NoiseSchedule};

/// One window member as the denoiser sees it: its id, current latent, its own
/// sigma (members may sit at different noise levels), and whether it receives
/// steps or rides along as context.
#[derive(Debug, Clone)]
pub struct WindowMember {
    pub id: SampleId,
    pub latent: Vec<f64>,
    pub sigma: f64,
    pub steppable: bool,
}

#[derive(Debug, Clone)]
pub struct ContextSample {
    pub id: SampleId,
    pub latent: Vec<f64>,
}

/// The denoiser's view of one window. `conditioned = false` is the dropped-
/// conditions branch for classifier-free guidance: the denoiser must ignore
/// the context samples and any conditioning embeddings.
#[derive(Debug, Clone)]
pub struct DenoiseRequest {
    pub members: Vec<WindowMember>,
    pub context: Vec<ContextSample>,
    pub conditioned: bool,
}

/// The model stand-in: takes a window with per-member sigmas and returns one
/// `x0_hat` per steppable member, in member order.
pub trait Denoiser: Sync {
    fn predict(&self, request: &DenoiseRequest) -> Result<Vec<Vec<f64>>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceConfig {
    /// Classifier-free guidance scale g.
    pub scale: f64,
    /// The training-time condition dropout probability. Carried in configs
    /// for completeness; unused at inference.
    pub train_drop_prob: f64,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self { scale: 3.0, train_drop_prob: 0.1 }
    }
}

impl GuidanceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scale < 0.0 {
            return Err(Error::Config(format!("guidance scale must be >= 0, got {}", self.scale)));
        }
        Ok(())
    }
}

/// `x0_uncond + g * (x0_cond - x0_uncond)`. The endpoints g = 1 and g = 0
/// return the corresponding branch bitwise.
pub fn cfg_combine(x0_cond: &[f64], x0_uncond: &[f64], scale: f64) -> Result<Vec<f64>> {
    if x0_cond.len() != x0_uncond.len() {
        return Err(Error::Shape(format!(
            "cfg branches differ in dimension: {} vs {}",
            x0_cond.len(),
            x0_uncond.len()
        )));
    }
    if scale == 1.0 {
        return Ok(x0_cond.to_vec());
    }
    if scale == 0.0 {
        return Ok(x0_uncond.to_vec());
    }
    Ok(x0_cond
        .iter()
        .zip(x0_uncond)
        .map(|(c, u)| u + scale * (c - u))
        .collect())
}

fn build_request(
    grid: &SampleGrid,
    placement: &WindowPlacement,
    schedule: &NoiseSchedule,
    conditioned: bool,
) -> DenoiseRequest {
    let members = placement
        .members
        .iter()
        .zip(&placement.steppable)
        .map(|(&id, &steppable)| {
            let state = grid.state(id);
            WindowMember {
                id,
                latent: state.latent.clone(),
                sigma: schedule.sigma(state.step_index),
                steppable,
            }
        })
        .collect();
    let context = if conditioned {
        placement
            .context_inputs
            .iter()
            .map(|&id| ContextSample { id, latent: grid.state(id).latent.clone() })
            .collect()
    } else {
        Vec::new()
    };
    DenoiseRequest { members, context, conditioned }
}

/// Executes a slice of placements in order, mutating the grid in place. Each
/// placement runs P iterations of: predict (conditional and, when the scale
/// requires it, unconditional), combine, one sampler step per steppable
/// member.
pub fn run_placements(
    grid: &mut SampleGrid,
    placements: &[WindowPlacement],
    denoiser: &dyn Denoiser,
    guidance: &GuidanceConfig,
    schedule: &NoiseSchedule,
) -> Result<()> {
    guidance.validate()?;
    let total = schedule.steps();
    for placement in placements {
        for &id in &placement.context_inputs {
            if grid.state(id).role != Role::Input {
                return Err(Error::Contract(format!(
                    "context sample {id:?} is not a conditioning input"
                )));
            }
        }
        let steppable_count = placement.steppable.iter().filter(|&&s| s).count();
        for _ in 0..placement.steps {
            let x0 = if guidance.scale == 1.0 {
                let request = build_request(grid, placement, schedule, true);
                denoiser.predict(&request)?
            } else if guidance.scale == 0.0 {
                let request = build_request(grid, placement, schedule, false);
                denoiser.predict(&request)?
            } else {
                let cond = denoiser.predict(&build_request(grid, placement, schedule, true))?;
                let uncond = denoiser.predict(&build_request(grid, placement, schedule, false))?;
                if cond.len() != uncond.len() {
                    return Err(Error::Contract(format!(
                        "cfg branches returned {} vs {} outputs",
                        cond.len(),
                        uncond.len()
                    )));
                }
                cond.iter()
                    .zip(&uncond)
                    .map(|(c, u)| cfg_combine(c, u, guidance.scale))
                    .collect::<Result<Vec<_>>>()?
            };
            if x0.len() != steppable_count {
                return Err(Error::Contract(format!(
                    "denoiser returned {} outputs for {} steppable members",
                    x0.len(),
                    steppable_count
                )));
            }
            let mut out = x0.into_iter();
            for (&id, &steppable) in placement.members.iter().zip(&placement.steppable) {
                if !steppable {
                    continue;
                }
                let x0_hat = out.next().expect("length checked above");
                let state = grid.state(id);
                let k = state.step_index;
                if k >= total {
                    return Err(Error::Contract(format!(
                        "plan corruption: sample {id:?} already at step {k} of {total}"
                    )));
                }
                let next =
                    sampler_step(&state.latent, &x0_hat, schedule.sigma(k), schedule.sigma(k + 1))?;
                let state = grid.state_mut(id);
                state.latent = next;
                state.step_index = k + 1;
            }
        }
    }
    Ok(())
}

/// Executes a full plan serially after checking its audit; on success every
/// target sample sits at sigma 0.
pub fn run_plan(
    grid: &mut SampleGrid,
    plan: &DenoisePlan,
    denoiser: &dyn Denoiser,
    guidance: &GuidanceConfig,
    schedule: &NoiseSchedule,
) -> Result<()> {
    if plan.total_steps != schedule.steps() {
        return Err(Error::Config(format!(
            "plan budget D = {} does not match schedule steps {}",
            plan.total_steps,
            schedule.steps()
        )));
    }
    let report = audit(plan, grid);
    if !report.passes() {
        return Err(Error::Scheduling(format!(
            "plan fails audit: {} deficient, {} excessive, {} inputs stepped",
            report.deficient.len(),
            report.excessive.len(),
            report.inputs_stepped.len()
        )));
    }
    run_placements(grid, &plan.placements, denoiser, guidance, schedule)
}

/// Spread statistics of the overlapping windows in a median-filter run.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct MedianStats {
    /// Mean elementwise variance across window outputs at samples covered by
    /// more than one window.
    pub overlap_variance: f64,
    pub overlapped_samples: usize,
}

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite latents"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Runs each median-filter window independently from the same initial grid,
/// then merges overlapping samples by elementwise median of the window
/// outputs. Returns the merged grid and overlap-spread statistics.
pub fn run_median(
    initial: &SampleGrid,
    plan: &DenoisePlan,
    merge: &MedianMerge,
    denoiser: &dyn Denoiser,
    guidance: &GuidanceConfig,
    schedule: &NoiseSchedule,
) -> Result<(SampleGrid, MedianStats)> {
    let mut window_outputs: Vec<std::collections::BTreeMap<SampleId, Vec<f64>>> = Vec::new();
    for placement in &plan.placements {
        let mut scratch = initial.clone();
        run_placements(
            &mut scratch,
            std::slice::from_ref(placement),
            denoiser,
            guidance,
            schedule,
        )?;
        let outputs = placement
            .members
            .iter()
            .zip(&placement.steppable)
            .filter(|(_, &st)| st)
            .map(|(&id, _)| (id, scratch.state(id).latent.clone()))
            .collect();
        window_outputs.push(outputs);
    }

    let mut merged = initial.clone();
    let mut variance_sum = 0.0;
    let mut variance_terms = 0usize;
    let mut overlapped = 0usize;
    for (&id, windows) in &merge.windows_of {
        let latents: Vec<&Vec<f64>> =
            windows.iter().map(|&w| &window_outputs[w][&id]).collect();
        if latents.len() > 1 {
            overlapped += 1;
            let dim = latents[0].len();
            for d in 0..dim {
                let column: Vec<f64> = latents.iter().map(|l| l[d]).collect();
                let mean = column.iter().sum::<f64>() / column.len() as f64;
                variance_sum +=
                    column.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / column.len() as f64;
                variance_terms += 1;
            }
        }
        let dim = latents[0].len();
        let merged_latent: Vec<f64> = (0..dim)
            .map(|d| {
                let mut column: Vec<f64> = latents.iter().map(|l| l[d]).collect();
                median_of(&mut column)
            })
            .collect();
        let state = merged.state_mut(id);
        state.latent = merged_latent;
        state.step_index = schedule.steps();
    }
    let stats = MedianStats {
        overlap_variance: if variance_terms > 0 { variance_sum / variance_terms as f64 } else { 0.0 },
        overlapped_samples: overlapped,
    };
    Ok((merged, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisTopology;
    use crate::plan::{
        nearest_input_view_by_index, plan_alternating, plan_multigroup, plan_median, Axis,
        SweepParams,
    };

    /// Member-local denoiser: x0_hat depends only on the member's own latent
    /// and sigma.
    struct ShrinkDenoiser;

    impl Denoiser for ShrinkDenoiser {
        fn predict(&self, request: &DenoiseRequest) -> Result<Vec<Vec<f64>>> {
            Ok(request
                .members
                .iter()
                .filter(|m| m.steppable)
                .map(|m| m.latent.iter().map(|v| 0.25 * v).collect())
                .collect())
        }
    }

    /// Returns the current latent as x0_hat.
    struct IdentityDenoiser;

    impl Denoiser for IdentityDenoiser {
        fn predict(&self, request: &DenoiseRequest) -> Result<Vec<Vec<f64>>> {
            Ok(request
                .members
                .iter()
                .filter(|m| m.steppable)
                .map(|m| m.latent.clone())
                .collect())
        }
    }

    fn setup() -> (SampleGrid, NoiseSchedule) {
        let schedule = NoiseSchedule::geometric(24, 10.0, 0.01).unwrap();
        let grid = SampleGrid::init(12, 1, &[0, 3, 6, 9], 4, 17, &schedule).unwrap();
        (grid, schedule)
    }

    fn sliding(grid: &SampleGrid) -> DenoisePlan {
        let inputs: Vec<usize> = grid.input_views.iter().copied().collect();
        let views = grid.views;
        let nearest = move |v: usize| {
            nearest_input_view_by_index(views, AxisTopology::Circular, &inputs, v).unwrap()
        };
        plan_alternating(
            grid,
            &SweepParams::new(6, 2, 2),
            &SweepParams::new(1, 1, 6),
            24,
            &nearest,
        )
        .unwrap()
    }

    #[test]
    fn cfg_identities() {
        let c = vec![1.0, 2.0];
        let u = vec![0.0, -2.0];
        assert_eq!(cfg_combine(&c, &u, 1.0).unwrap(), c);
        assert_eq!(cfg_combine(&c, &u, 0.0).unwrap(), u);
        assert_eq!(cfg_combine(&[1.0, 2.0], &[0.0, 0.0], 3.0).unwrap(), vec![3.0, 6.0]);
        assert!(cfg_combine(&[1.0], &[1.0, 2.0], 2.0).is_err());
    }

    #[test]
    fn identity_denoiser_preserves_latents() {
        let (grid0, schedule) = setup();
        let mut grid = grid0.clone();
        let plan = sliding(&grid);
        let guidance = GuidanceConfig { scale: 1.0, train_drop_prob: 0.1 };
        run_plan(&mut grid, &plan, &IdentityDenoiser, &guidance, &schedule).unwrap();
        for id in grid.target_ids() {
            assert_eq!(grid.state(id).step_index, 24);
            assert_eq!(grid.state(id).latent, grid0.state(id).latent);
        }
    }

    #[test]
    fn strategies_agree_under_member_local_denoiser() {
        let (grid0, schedule) = setup();
        let guidance = GuidanceConfig { scale: 3.0, train_drop_prob: 0.1 };

        let mut sliding_grid = grid0.clone();
        run_plan(&mut sliding_grid, &sliding(&grid0), &ShrinkDenoiser, &guidance, &schedule)
            .unwrap();

        let mut group_grid = grid0.clone();
        let group_plan = plan_multigroup(&grid0, Axis::Spatial, 4, 24, &|_| 0).unwrap();
        run_plan(&mut group_grid, &group_plan, &ShrinkDenoiser, &guidance, &schedule).unwrap();

        let (median_plan, merge) = plan_median(&grid0, Axis::Spatial, 4, 2, 24, &|_| 0).unwrap();
        let (median_grid, stats) =
            run_median(&grid0, &median_plan, &merge, &ShrinkDenoiser, &guidance, &schedule)
                .unwrap();

        for id in grid0.target_ids() {
            assert_eq!(sliding_grid.state(id).latent, group_grid.state(id).latent);
            assert_eq!(sliding_grid.state(id).latent, median_grid.state(id).latent);
        }
        assert_eq!(stats.overlap_variance, 0.0);
        assert_eq!(stats.overlapped_samples, 8);
    }

    #[test]
    fn output_count_mismatch_is_contract_violation() {
        struct Broken;
        impl Denoiser for Broken {
            fn predict(&self, _request: &DenoiseRequest) -> Result<Vec<Vec<f64>>> {
                Ok(vec![])
            }
        }
        let (mut grid, schedule) = setup();
        let plan = sliding(&grid);
        let err = run_plan(&mut grid, &plan, &Broken, &GuidanceConfig::default(), &schedule)
            .unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn median_of_three() {
        assert_eq!(median_of(&mut [9.0, 1.0, 2.0]), 2.0);
        assert_eq!(median_of(&mut [4.0, 1.0]), 2.5);
        assert_eq!(median_of(&mut [7.0]), 7.0);
    }
}
