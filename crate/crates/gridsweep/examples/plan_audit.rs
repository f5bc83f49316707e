//! Builds an alternating spatial/temporal denoising plan for a 16-view by
//! 8-frame grid and audits it against the step-budget identity D = 2PW/S.

use gridsweep::grid::{AxisTopology, SampleGrid};
use gridsweep::plan::{audit, nearest_input_view_by_index, plan_alternating, SweepParams};
use gridsweep::schedule::NoiseSchedule;

fn main() -> gridsweep::Result<()> {
    let schedule = NoiseSchedule::geometric(24, 10.0, 0.01)?;
    let inputs = [0usize, 4, 8, 12];
    let grid = SampleGrid::init(16, 8, &inputs, 4, 0, &schedule)?;

    let nearest =
        |v: usize| nearest_input_view_by_index(16, AxisTopology::Circular, &inputs, v).unwrap();
    let plan = plan_alternating(
        &grid,
        &SweepParams::new(6, 2, 2), // spatial: 2*2*6/2 = 12 = D/2
        &SweepParams::new(4, 2, 3), // temporal: 2*3*4/2 = 12 = D/2
        schedule.steps(),
        &nearest,
    )?;

    let spatial = plan.placements[..plan.phase_split].len();
    let temporal = plan.placements.len() - spatial;
    println!("plan: {spatial} spatial + {temporal} temporal placements, D = {}", plan.total_steps);
    for (label, start) in [("spatial", 0), ("temporal", plan.phase_split)] {
        let p = &plan.placements[start];
        println!(
            "  first {label} placement: line {}, window {:?}, {} steps, {} context inputs",
            p.line,
            p.members.iter().map(|m| (m.view, m.time)).collect::<Vec<_>>(),
            p.steps,
            p.context_inputs.len(),
        );
    }

    let report = audit(&plan, &grid);
    println!(
        "audit: expected {} steps per target, deficient {}, excessive {}, inputs stepped {}",
        report.expected,
        report.deficient.len(),
        report.excessive.len(),
        report.inputs_stepped.len(),
    );
    assert!(report.passes());
    println!("audit passes: every target accrues exactly D steps");

    // the same sweep parameters fail fast when the budget identity breaks
    let bad = plan_alternating(
        &grid,
        &SweepParams::new(4, 2, 2),
        &SweepParams::new(4, 2, 3),
        schedule.steps(),
        &nearest,
    );
    println!("mismatched budget rejected: {}", bad.unwrap_err());
    Ok(())
}
