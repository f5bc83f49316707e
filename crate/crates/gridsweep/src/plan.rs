//! Denoising plans: sliding window sweeps with alternating spatial/temporal
//! phases, plus the multi-group and median-filter baselines, and the audit
//! that checks the step-budget identity `D = 2 * P * W / S` per sample.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::grid::{AxisTopology, Role, SampleGrid, SampleId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Spatial,
    Temporal,
}

/// One window position: `members` in window order, a per-member flag saying
/// whether the member receives denoising steps or only provides context, the
/// step count P, and the clean conditioning samples joined to the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowPlacement {
    pub axis: Axis,
    pub line: usize,
    pub members: Vec<SampleId>,
    pub steppable: Vec<bool>,
    pub steps: usize,
    pub context_inputs: Vec<SampleId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoisePlan {
    pub placements: Vec<WindowPlacement>,
    /// Total per-sample step budget D.
    pub total_steps: usize,
    /// Index separating spatial placements (prefix) from temporal ones.
    pub phase_split: usize,
}

/// Sweep parameters for one axis: window length, stride, steps per placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepParams {
    pub window: usize,
    pub stride: usize,
    pub steps: usize,
}

impl SweepParams {
    pub fn new(window: usize, stride: usize, steps: usize) -> Self {
        Self { window, stride, steps }
    }

    /// The per-sample budget of one bidirectional sweep, `2 * P * W / S`.
    pub fn budget(&self) -> usize {
        2 * self.steps * self.window / self.stride
    }
}

fn validate_sweep(len: usize, topology: AxisTopology, p: &SweepParams) -> Result<()> {
    let SweepParams { window, stride, steps } = *p;
    if window == 0 || stride == 0 || steps == 0 {
        return Err(Error::Config("window, stride and steps must be >= 1".into()));
    }
    if stride > window {
        return Err(Error::Config(format!("stride {stride} exceeds window {window}")));
    }
    if window % stride != 0 {
        return Err(Error::Config(format!("stride {stride} must divide window {window}")));
    }
    if window > len {
        return Err(Error::Config(format!("window {window} exceeds line length {len}")));
    }
    if topology == AxisTopology::Circular && len % stride != 0 {
        return Err(Error::Config(format!(
            "stride {stride} must divide circular line length {len}"
        )));
    }
    Ok(())
}

/// Sliding sweep over one line of samples: a forward sweep, then a reverse
/// sweep, plus boundary compensation for linear topology so every sample
/// accrues exactly `2 * P * W / S` steps. Context inputs are attached by the
/// caller.
pub fn plan_line_sweeps(
    line: &[SampleId],
    topology: AxisTopology,
    params: &SweepParams,
    axis: Axis,
    line_index: usize,
) -> Result<Vec<WindowPlacement>> {
    let len = line.len();
    validate_sweep(len, topology, params)?;
    let SweepParams { window, stride, steps } = *params;
    let budget = params.budget();

    let placement = |start: usize| -> WindowPlacement {
        let members: Vec<SampleId> = (0..window)
            .map(|i| line[(start + i) % len])
            .collect();
        WindowPlacement {
            axis,
            line: line_index,
            steppable: vec![true; members.len()],
            members,
            steps,
            context_inputs: Vec::new(),
        }
    };

    let mut placements = Vec::new();
    match topology {
        AxisTopology::Circular => {
            let starts: Vec<usize> = (0..len).step_by(stride).collect();
            for &s in &starts {
                placements.push(placement(s));
            }
            for &s in starts.iter().rev() {
                placements.push(placement(s));
            }
        }
        AxisTopology::Linear => {
            // Aligned starts only; any tail the stride misses is brought up to
            // budget by the compensation pass, which never overshoots.
            let last = len - window;
            let starts: Vec<usize> = (0..=last).step_by(stride).collect();
            for &s in &starts {
                placements.push(placement(s));
            }
            for &s in starts.iter().rev() {
                placements.push(placement(s));
            }
            compensate_linear(&mut placements, line, params, budget, axis, line_index)?;
        }
    }
    Ok(placements)
}

/// Appends compensation placements until every sample on the line reaches the
/// uniform budget. Each placement is the window clamped to contain the
/// maximal-deficit sample; members already at budget join as context only.
fn compensate_linear(
    placements: &mut Vec<WindowPlacement>,
    line: &[SampleId],
    params: &SweepParams,
    budget: usize,
    axis: Axis,
    line_index: usize,
) -> Result<()> {
    let len = line.len();
    let window = params.window;
    let mut counts = vec![0usize; len];
    for p in placements.iter() {
        for (m, &st) in p.members.iter().zip(&p.steppable) {
            if st {
                let pos = line.iter().position(|id| id == m).unwrap();
                counts[pos] += p.steps;
            }
        }
    }
    let mut guard = 0;
    loop {
        let (pos, &count) = counts
            .iter()
            .enumerate()
            .max_by_key(|(i, &c)| (budget.saturating_sub(c), std::cmp::Reverse(*i)))
            .unwrap();
        if count >= budget {
            break;
        }
        guard += 1;
        if guard > 4 * len {
            return Err(Error::Scheduling("linear compensation failed to converge".into()));
        }
        let start = pos.min(len - window);
        let members: Vec<SampleId> = (start..start + window).map(|i| line[i]).collect();
        let deficits: Vec<usize> =
            (start..start + window).map(|i| budget.saturating_sub(counts[i])).collect();
        let steppable: Vec<bool> = deficits.iter().map(|&d| d > 0).collect();
        let step_count = deficits.iter().filter(|&&d| d > 0).min().copied().unwrap();
        for (i, d) in deficits.iter().enumerate() {
            if *d > 0 {
                counts[start + i] += step_count;
            }
        }
        placements.push(WindowPlacement {
            axis,
            line: line_index,
            members,
            steppable,
            steps: step_count,
            context_inputs: Vec::new(),
        });
    }
    Ok(())
}

/// Per-sample accrued step counts for a plan. Passes iff every target sample
/// accrues exactly D and every input accrues zero. Failures are data, not
/// errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub expected: usize,
    /// Not serialized: JSON map keys must be strings.
    #[serde(skip)]
    pub per_sample: BTreeMap<SampleId, usize>,
    pub deficient: Vec<SampleId>,
    pub excessive: Vec<SampleId>,
    pub inputs_stepped: Vec<SampleId>,
}

impl AuditReport {
    pub fn passes(&self) -> bool {
        self.deficient.is_empty() && self.excessive.is_empty() && self.inputs_stepped.is_empty()
    }
}

pub fn audit(plan: &DenoisePlan, grid: &SampleGrid) -> AuditReport {
    let mut per_sample: BTreeMap<SampleId, usize> = grid.ids().map(|id| (id, 0)).collect();
    for p in &plan.placements {
        for (m, &st) in p.members.iter().zip(&p.steppable) {
            if st {
                *per_sample.get_mut(m).expect("member inside grid") += p.steps;
            }
        }
    }
    let mut deficient = Vec::new();
    let mut excessive = Vec::new();
    let mut inputs_stepped = Vec::new();
    for (&id, &count) in &per_sample {
        match grid.state(id).role {
            Role::Target => {
                if count < plan.total_steps {
                    deficient.push(id);
                } else if count > plan.total_steps {
                    excessive.push(id);
                }
            }
            Role::Input => {
                if count > 0 {
                    inputs_stepped.push(id);
                }
            }
        }
    }
    AuditReport { expected: plan.total_steps, per_sample, deficient, excessive, inputs_stepped }
}

/// Closest input view to a target view by Euclidean distance between camera
/// centers; ties break to the lowest index.
pub fn nearest_input_view(
    cameras: &[Camera],
    input_views: &[usize],
    target_view: usize,
) -> Result<usize> {
    if input_views.is_empty() {
        return Err(Error::Config("no input views".into()));
    }
    for &v in input_views.iter().chain(std::iter::once(&target_view)) {
        if v >= cameras.len() {
            return Err(Error::Config(format!("missing camera for view {v}")));
        }
    }
    let target_center = cameras[target_view].center();
    let mut best = input_views[0];
    let mut best_dist = f64::INFINITY;
    for &v in input_views {
        let dist = (cameras[v].center() - target_center).norm();
        if dist < best_dist || (dist == best_dist && v < best) {
            best_dist = dist;
            best = v;
        }
    }
    Ok(best)
}

/// Index-based fallback when no cameras exist: nearest input view by circular
/// (or linear) index distance, ties to the lowest index.
pub fn nearest_input_view_by_index(
    view_count: usize,
    topology: AxisTopology,
    input_views: &[usize],
    target_view: usize,
) -> Result<usize> {
    if input_views.is_empty() {
        return Err(Error::Config("no input views".into()));
    }
    let dist = |a: usize, b: usize| -> usize {
        let d = a.abs_diff(b);
        match topology {
            AxisTopology::Circular => d.min(view_count - d),
            AxisTopology::Linear => d,
        }
    };
    let mut sorted = input_views.to_vec();
    sorted.sort_unstable();
    Ok(*sorted
        .iter()
        .min_by_key(|&&v| (dist(v, target_view), v))
        .unwrap())
}

/// The full alternating schedule: for each timestamp, a spatial sweep over target
/// views conditioned on the inputs at that time (first D/2 steps); then for
/// each target view, a temporal sweep over its frames conditioned on the
/// matching frames of its nearest input view (remaining D/2 steps).
/// `nearest` maps each target view to its conditioning input view.
pub fn plan_alternating(
    grid: &SampleGrid,
    spatial: &SweepParams,
    temporal: &SweepParams,
    total_steps: usize,
    nearest: &dyn Fn(usize) -> usize,
) -> Result<DenoisePlan> {
    if grid.input_views.is_empty() {
        return Err(Error::Config("alternating plan needs at least one input view".into()));
    }
    if total_steps % 2 != 0 {
        return Err(Error::Config(format!("D must be even, got {total_steps}")));
    }
    let half = total_steps / 2;
    if spatial.budget() != half {
        return Err(Error::Config(format!(
            "spatial budget 2*P*W/S = {} must equal D/2 = {half} \
             (choose W, S, P with 2*{}*{}/{} = {half})",
            spatial.budget(),
            spatial.steps,
            spatial.window,
            spatial.stride,
        )));
    }
    if temporal.budget() != half {
        return Err(Error::Config(format!(
            "temporal budget 2*P*W/S = {} must equal D/2 = {half}",
            temporal.budget()
        )));
    }
    let targets = grid.target_views();

    let mut placements = Vec::new();
    // spatial phase: line per timestamp, over target views
    for t in 0..grid.frames {
        let line: Vec<SampleId> = targets.iter().map(|&v| SampleId::new(v, t)).collect();
        let context: Vec<SampleId> =
            grid.input_views.iter().map(|&v| SampleId::new(v, t)).collect();
        let mut sweeps = plan_line_sweeps(&line, grid.spatial_topology, spatial, Axis::Spatial, t)?;
        for p in &mut sweeps {
            p.context_inputs = context.clone();
        }
        placements.append(&mut sweeps);
    }
    let phase_split = placements.len();
    // temporal phase: line per target view, over frames
    for &v in &targets {
        let line: Vec<SampleId> = (0..grid.frames).map(|t| SampleId::new(v, t)).collect();
        let reference = nearest(v);
        if !grid.input_views.contains(&reference) {
            return Err(Error::Config(format!(
                "nearest view {reference} for target {v} is not an input view"
            )));
        }
        let mut sweeps =
            plan_line_sweeps(&line, grid.temporal_topology, temporal, Axis::Temporal, v)?;
        for p in &mut sweeps {
            p.context_inputs =
                p.members.iter().map(|m| SampleId::new(reference, m.time)).collect();
        }
        placements.append(&mut sweeps);
    }
    Ok(DenoisePlan { placements, total_steps, phase_split })
}

/// Baseline: disjoint consecutive groups along each line, each group fully
/// denoised in one isolated placement of D steps.
pub fn plan_multigroup(
    grid: &SampleGrid,
    axis: Axis,
    group_size: usize,
    total_steps: usize,
    nearest: &dyn Fn(usize) -> usize,
) -> Result<DenoisePlan> {
    if group_size == 0 {
        return Err(Error::Config("group size must be >= 1".into()));
    }
    let mut placements = Vec::new();
    for (line_index, line, context_of) in axis_lines(grid, axis, nearest) {
        for chunk in line.chunks(group_size) {
            placements.push(WindowPlacement {
                axis,
                line: line_index,
                members: chunk.to_vec(),
                steppable: vec![true; chunk.len()],
                steps: total_steps,
                context_inputs: context_of(chunk),
            });
        }
    }
    let phase_split = if axis == Axis::Spatial { placements.len() } else { 0 };
    Ok(DenoisePlan { placements, total_steps, phase_split })
}

/// How to merge overlapping median-filter windows: for each sample, the
/// placement indices whose windows contain it. Overlapping samples take the
/// elementwise median of the window outputs (mean of the two central values
/// for even counts).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MedianMerge {
    pub windows_of: BTreeMap<SampleId, Vec<usize>>,
}

/// Baseline: overlapping windows at stride `W - overlap`, each fully denoised
/// independently, merged by elementwise median.
pub fn plan_median(
    grid: &SampleGrid,
    axis: Axis,
    window: usize,
    overlap: usize,
    total_steps: usize,
    nearest: &dyn Fn(usize) -> usize,
) -> Result<(DenoisePlan, MedianMerge)> {
    if overlap >= window {
        return Err(Error::Config(format!("overlap {overlap} must be < window {window}")));
    }
    let stride = window - overlap;
    let topology = match axis {
        Axis::Spatial => grid.spatial_topology,
        Axis::Temporal => grid.temporal_topology,
    };
    let mut placements = Vec::new();
    let mut windows_of: BTreeMap<SampleId, Vec<usize>> = BTreeMap::new();
    for (line_index, line, context_of) in axis_lines(grid, axis, nearest) {
        let len = line.len();
        let w = window.min(len);
        let starts: Vec<usize> = match topology {
            AxisTopology::Circular => (0..len).step_by(stride).collect(),
            AxisTopology::Linear => {
                let last = len.saturating_sub(w);
                let mut s: Vec<usize> = (0..=last).step_by(stride).collect();
                if *s.last().unwrap() != last {
                    s.push(last);
                }
                s
            }
        };
        for start in starts {
            let members: Vec<SampleId> = (0..w).map(|i| line[(start + i) % len]).collect();
            let index = placements.len();
            for m in &members {
                windows_of.entry(*m).or_default().push(index);
            }
            placements.push(WindowPlacement {
                axis,
                line: line_index,
                steppable: vec![true; members.len()],
                context_inputs: context_of(&members),
                members,
                steps: total_steps,
            });
        }
    }
    let phase_split = if axis == Axis::Spatial { placements.len() } else { 0 };
    Ok((DenoisePlan { placements, total_steps, phase_split }, MedianMerge { windows_of }))
}

type ContextFn<'a> = Box<dyn Fn(&[SampleId]) -> Vec<SampleId> + 'a>;

/// Lines of target samples along an axis with the matching context rule:
/// spatial lines condition on the inputs of their timestamp, temporal lines
/// on the nearest input view at the members' times.
fn axis_lines<'a>(
    grid: &'a SampleGrid,
    axis: Axis,
    nearest: &'a dyn Fn(usize) -> usize,
) -> Vec<(usize, Vec<SampleId>, ContextFn<'a>)> {
    let targets = grid.target_views();
    match axis {
        Axis::Spatial => (0..grid.frames)
            .map(|t| {
                let line: Vec<SampleId> = targets.iter().map(|&v| SampleId::new(v, t)).collect();
                let ctx: ContextFn<'a> = Box::new(move |_members| {
                    grid.input_views.iter().map(|&v| SampleId::new(v, t)).collect()
                });
                (t, line, ctx)
            })
            .collect(),
        Axis::Temporal => targets
            .iter()
            .map(|&v| {
                let line: Vec<SampleId> = (0..grid.frames).map(|t| SampleId::new(v, t)).collect();
                let ctx: ContextFn<'a> = Box::new(move |members: &[SampleId]| {
                    let reference = nearest(v);
                    members.iter().map(|m| SampleId::new(reference, m.time)).collect()
                });
                (v, line, ctx)
            })
            .collect(),
    }
}
