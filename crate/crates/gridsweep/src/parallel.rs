//! Deterministic fork-join execution of a plan: workers own disjoint grid
//! lines, a barrier separates the spatial and temporal phases, and the result
//! is bitwise-identical to a serial run for any worker count.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{run_placements, Denoiser, GuidanceConfig};
use crate::error::{Error, Result};
use crate::grid::{SampleGrid, SampleId};
use crate::plan::{audit, Axis, DenoisePlan, WindowPlacement};
use crate::schedule::NoiseSchedule;

/// Which lines each worker owns within one phase. Lines are assigned
/// round-robin by ascending line index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinePartition {
    pub phase: Axis,
    pub assignments: Vec<Vec<usize>>,
}

fn phase_lines(plan: &DenoisePlan, phase: Axis) -> Vec<usize> {
    let mut lines: Vec<usize> = plan
        .placements
        .iter()
        .filter(|p| p.axis == phase)
        .map(|p| p.line)
        .collect();
    lines.sort_unstable();
    lines.dedup();
    lines
}

pub fn partition_lines(plan: &DenoisePlan, workers: usize) -> Result<(LinePartition, LinePartition)> {
    if workers == 0 {
        return Err(Error::Config("worker count must be >= 1".into()));
    }
    let split = |phase: Axis| {
        let mut assignments = vec![Vec::new(); workers];
        for (i, line) in phase_lines(plan, phase).into_iter().enumerate() {
            assignments[i % workers].push(line);
        }
        LinePartition { phase, assignments }
    };
    Ok((split(Axis::Spatial), split(Axis::Temporal)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineTrace {
    pub phase: Axis,
    pub line: usize,
    pub worker: usize,
    pub placements: usize,
    pub samples_written: Vec<SampleId>,
    pub elapsed_micros: u64,
}

/// Per-line timing plus the writer audit the determinism tests rely on.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub workers: usize,
    pub lines: Vec<LineTrace>,
}

impl ExecutionTrace {
    /// Map from sample to its writers, one entry per phase. Each sample must
    /// be written by exactly one worker per phase.
    pub fn writers(&self) -> BTreeMap<(Axis, SampleId), Vec<usize>> {
        let mut map: BTreeMap<(Axis, SampleId), Vec<usize>> = BTreeMap::new();
        for line in &self.lines {
            for &id in &line.samples_written {
                map.entry((line.phase, id)).or_default().push(line.worker);
            }
        }
        map
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExecutionOptions {
    pub workers: usize,
    /// Test hook: disabling the phase barrier lets the temporal phase read
    /// pre-spatial state, which must be detectable as output divergence.
    pub phase_barrier: bool,
}

impl ExecutionOptions {
    pub fn with_workers(workers: usize) -> Self {
        Self { workers, phase_barrier: true }
    }
}

struct LineResult {
    line: usize,
    worker: usize,
    placements: usize,
    updates: Vec<(SampleId, crate::grid::SampleState)>,
    elapsed_micros: u64,
}

fn run_phase(
    grid: &SampleGrid,
    plan: &DenoisePlan,
    phase: Axis,
    partition: &LinePartition,
    denoiser: &dyn Denoiser,
    guidance: &GuidanceConfig,
    schedule: &NoiseSchedule,
) -> Result<Vec<LineResult>> {
    // Placements grouped per line, preserving plan order within each line.
    let mut per_line: BTreeMap<usize, Vec<&WindowPlacement>> = BTreeMap::new();
    for p in plan.placements.iter().filter(|p| p.axis == phase) {
        per_line.entry(p.line).or_default().push(p);
    }

    let results: Vec<std::result::Result<Vec<LineResult>, (usize, Error)>> =
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for (worker, lines) in partition.assignments.iter().enumerate() {
                let per_line = &per_line;
                let handle = scope.spawn(move || {
                    let mut results = Vec::new();
                    for &line in lines {
                        let start = std::time::Instant::now();
                        let placements = per_line.get(&line).cloned().unwrap_or_default();
                        // Worker-local snapshot: reads of other lines see
                        // phase-start state, writes stay private until merge.
                        let mut local = grid.clone();
                        let owned: Vec<WindowPlacement> =
                            placements.iter().map(|&p| p.clone()).collect();
                        run_placements(&mut local, &owned, denoiser, guidance, schedule)
                            .map_err(|e| (line, e))?;
                        let mut written: BTreeMap<SampleId, ()> = BTreeMap::new();
                        for p in &owned {
                            for (m, &st) in p.members.iter().zip(&p.steppable) {
                                if st {
                                    written.insert(*m, ());
                                }
                            }
                        }
                        let updates = written
                            .keys()
                            .map(|&id| (id, local.state(id).clone()))
                            .collect();
                        results.push(LineResult {
                            line,
                            worker,
                            placements: owned.len(),
                            updates,
                            elapsed_micros: start.elapsed().as_micros() as u64,
                        });
                    }
                    Ok(results)
                });
                handles.push(handle);
            }
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });

    let mut all = Vec::new();
    for r in results {
        match r {
            Ok(mut v) => all.append(&mut v),
            Err((line, e)) => {
                return Err(Error::Contract(format!("worker failed on line {line}: {e}")));
            }
        }
    }
    // deterministic merge order
    all.sort_by_key(|r| r.line);
    Ok(all)
}

fn merge(grid: &mut SampleGrid, results: &[LineResult], trace: &mut ExecutionTrace, phase: Axis) -> Result<()> {
    let mut seen: BTreeMap<SampleId, usize> = BTreeMap::new();
    for r in results {
        for (id, state) in &r.updates {
            if let Some(prev) = seen.insert(*id, r.worker) {
                return Err(Error::Contract(format!(
                    "sample {id:?} written by workers {prev} and {} in one phase",
                    r.worker
                )));
            }
            *grid.state_mut(*id) = state.clone();
        }
        trace.lines.push(LineTrace {
            phase,
            line: r.line,
            worker: r.worker,
            placements: r.placements,
            samples_written: r.updates.iter().map(|(id, _)| *id).collect(),
            elapsed_micros: r.elapsed_micros,
        });
    }
    Ok(())
}

/// Runs the plan's spatial phase, merges (the barrier), then the temporal
/// phase. The final grid is bitwise-equal to `run_plan` on one thread.
pub fn execute_parallel(
    grid: &mut SampleGrid,
    plan: &DenoisePlan,
    denoiser: &dyn Denoiser,
    guidance: &GuidanceConfig,
    schedule: &NoiseSchedule,
    options: &ExecutionOptions,
) -> Result<ExecutionTrace> {
    let report = audit(plan, grid);
    if !report.passes() {
        return Err(Error::Scheduling(format!(
            "plan fails audit: {} deficient samples",
            report.deficient.len()
        )));
    }
    let (spatial, temporal) = partition_lines(plan, options.workers)?;
    let mut trace = ExecutionTrace { workers: options.workers, lines: Vec::new() };

    if options.phase_barrier {
        let results = run_phase(grid, plan, Axis::Spatial, &spatial, denoiser, guidance, schedule)?;
        merge(grid, &results, &mut trace, Axis::Spatial)?;
        let results =
            run_phase(grid, plan, Axis::Temporal, &temporal, denoiser, guidance, schedule)?;
        merge(grid, &results, &mut trace, Axis::Temporal)?;
    } else {
        // barrier removed: both phases read the same pre-spatial snapshot
        let snapshot = grid.clone();
        let spatial_results =
            run_phase(&snapshot, plan, Axis::Spatial, &spatial, denoiser, guidance, schedule)?;
        let temporal_results =
            run_phase(&snapshot, plan, Axis::Temporal, &temporal, denoiser, guidance, schedule)?;
        merge(grid, &spatial_results, &mut trace, Axis::Spatial)?;
        for r in &temporal_results {
            for (id, state) in &r.updates {
                *grid.state_mut(*id) = state.clone();
            }
        }
    }
    Ok(trace)
}
