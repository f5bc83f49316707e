//! Randomized property tests for the schedule, the sampler, and plan audits.

use proptest::prelude::*;

use gridsweep::grid::{AxisTopology, SampleGrid, SampleId};
use gridsweep::plan::{plan_line_sweeps, Axis, SweepParams};
use gridsweep::schedule::{sampler_step, NoiseSchedule};

fn paired_vecs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..6).prop_flat_map(|n| {
        (
            prop::collection::vec(-10.0f64..10.0, n),
            prop::collection::vec(-10.0f64..10.0, n),
        )
    })
}

fn schedule_strategy() -> impl Strategy<Value = NoiseSchedule> {
    (1usize..=16, 0.5f64..50.0, 1e-4f64..0.1).prop_map(|(half, sigma_max, sigma_min)| {
        NoiseSchedule::geometric(2 * half, sigma_max, sigma_min).unwrap()
    })
}

proptest! {
    #[test]
    fn schedule_strictly_decreasing_with_zero_terminal(schedule in schedule_strategy()) {
        let d = schedule.steps();
        for k in 0..d {
            prop_assert!(schedule.sigma(k) > schedule.sigma(k + 1), "k = {k}");
        }
        prop_assert_eq!(schedule.sigma(d), 0.0);
        prop_assert!(schedule.sigma(0) > 0.0);
    }

    #[test]
    fn circular_budget_identity(
        (len, stride_idx, window_mult, steps) in
            (2usize..=48, 0usize..8, 1usize..=8, 1usize..=4)
    ) {
        let divisors: Vec<usize> = (1..=len).filter(|s| len % s == 0).collect();
        let stride = divisors[stride_idx % divisors.len()];
        let window = (stride * window_mult).min(len / stride * stride).max(stride);
        prop_assume!(window <= len && window % stride == 0);
        let params = SweepParams::new(window, stride, steps);
        let line: Vec<SampleId> = (0..len).map(|v| SampleId::new(v, 0)).collect();
        let placements =
            plan_line_sweeps(&line, AxisTopology::Circular, &params, Axis::Spatial, 0).unwrap();
        let mut counts = vec![0usize; len];
        for p in &placements {
            for (m, &st) in p.members.iter().zip(&p.steppable) {
                if st {
                    counts[m.view] += p.steps;
                }
            }
        }
        let budget = 2 * steps * window / stride;
        prop_assert!(counts.iter().all(|&c| c == budget));
    }

    #[test]
    fn sampler_substep_composition(
        (x, x0) in paired_vecs(),
        (hi, mid, lo) in (1.0f64..10.0, 0.2f64..0.9, 0.01f64..0.15),
    ) {
        // one step hi -> lo equals hi -> mid -> lo when x0_hat is held fixed:
        // both scale the residual by lo/hi
        let direct = sampler_step(&x, &x0, hi, lo).unwrap();
        let via_mid = sampler_step(&sampler_step(&x, &x0, hi, mid * hi).unwrap(), &x0, mid * hi, lo).unwrap();
        for (a, b) in direct.iter().zip(&via_mid) {
            prop_assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn sampler_terminal_is_exact(
        (x, x0) in paired_vecs(),
        sigma in 0.001f64..10.0,
    ) {
        let out = sampler_step(&x, &x0, sigma, 0.0).unwrap();
        prop_assert_eq!(out, x0);
    }

    #[test]
    fn grid_init_deterministic(
        views in 2usize..=8,
        frames in 1usize..=4,
        seed in any::<u64>(),
    ) {
        let schedule = NoiseSchedule::geometric(8, 10.0, 0.01).unwrap();
        let a = SampleGrid::init(views, frames, &[0], 3, seed, &schedule).unwrap();
        let b = SampleGrid::init(views, frames, &[0], 3, seed, &schedule).unwrap();
        prop_assert_eq!(a, b);
    }
}
