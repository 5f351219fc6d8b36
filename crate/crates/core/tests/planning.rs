use std::path::Path;

use proptest::prelude::*;

use uavsec::channel;
use uavsec::convex_core;
use uavsec::planner::{self, PlanOptions};
use uavsec::power_alloc::{self, PowerSchedule, SlotGains};
use uavsec::traj_sca::{self, ScaOptions};
use uavsec::{ColludeMode, Point2, Scenario, Scheme};

fn short_horizon() -> Scenario {
    Scenario {
        t_s: 2.5,
        ..Scenario::reference(20)
    }
}

#[test]
fn shipped_scenario_is_the_reference_instance() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/reference.txt");
    let s = Scenario::load(path).unwrap();
    let r = Scenario::reference(100);
    assert_eq!(s.gr_positions, r.gr_positions);
    assert_eq!(s.eav_positions, r.eav_positions);
    for (a, b) in [
        (s.beta0, r.beta0),
        (s.sigma2, r.sigma2),
        (s.p_ave, r.p_ave),
        (s.p_peak, r.p_peak),
        (s.p_static, r.p_static),
    ] {
        assert!((a - b).abs() <= 1e-12 * b, "{a} vs {b}");
    }
    assert_eq!((s.n_slots, s.z_min, s.z_max, s.t_s), (100, 150.0, 250.0, 0.5));
    assert_eq!(s.min_slots(), 81);
}

#[test]
fn leakage_peaks_at_closest_approach() {
    let s = Scenario::reference(100);
    let traj = planner::fly_hover_fly_init(&s);
    let g = power_alloc::slot_gains(&s, &traj, ColludeMode::NonColluding);
    let argmax = (0..g.len()).max_by(|&a, &b| g.b[a].total_cmp(&g.b[b])).unwrap();
    let closest = (1..=s.n_slots)
        .min_by(|&a, &b| {
            let d = |n: usize| {
                s.eav_positions
                    .iter()
                    .map(|w| {
                        let (dx, dy) = (traj.q[n].x - w.x, traj.q[n].y - w.y);
                        dx * dx + dy * dy + traj.z[n] * traj.z[n]
                    })
                    .fold(f64::INFINITY, f64::min)
            };
            d(a).total_cmp(&d(b))
        })
        .unwrap();
    assert_eq!(argmax + 1, closest);
}

#[test]
fn one_eavesdropper_makes_the_modes_agree() {
    let s = Scenario {
        eav_positions: vec![Point2::new(0.0, 180.0)],
        ..short_horizon()
    };
    let traj = planner::fly_hover_fly_init(&s);
    let p = PowerSchedule::constant(s.n_slots, s.p_ave);
    let solver = ScaOptions::default().solver;
    let values: Vec<f64> = ColludeMode::ALL
        .iter()
        .map(|&mode| {
            let sub = traj_sca::build_subproblem(&s, &traj, &p, mode, true).unwrap();
            convex_core::solve(&sub.program, &solver).unwrap().objective_value
        })
        .collect();
    assert!((values[0] - values[1]).abs() <= 1e-6, "{values:?}");
}

#[test]
fn plans_dominate_their_starting_points_and_repeat_exactly() {
    let s = short_horizon();
    let opts = PlanOptions::default();
    for mode in ColludeMode::ALL {
        let plan = |scheme| planner::plan(&s, mode, scheme, &opts).unwrap();
        let (full, flat, adaptive, constant) = (
            plan(Scheme::Full3d),
            plan(Scheme::FixedAlt2D),
            plan(Scheme::FhfAdaptive),
            plan(Scheme::FhfConstant),
        );
        assert!(adaptive.avg_rate >= constant.avg_rate - 1e-9);
        assert!(flat.avg_rate >= adaptive.avg_rate - 1e-6);
        assert!(full.avg_rate >= adaptive.avg_rate - 1e-6);
        let init = planner::fly_hover_fly_init(&s);
        let start = traj_sca::average_secrecy_rate(&s, &init, &PowerSchedule::constant(s.n_slots, s.p_ave), mode);
        assert!(full.avg_rate >= start - 1e-6);

        for r in [&full, &flat, &adaptive, &constant] {
            assert!(r.power.is_feasible(s.p_ave, s.p_peak), "{}", r.scheme);
            for (n, (&p, &rate)) in r.power.p.iter().zip(&r.per_slot_rate).enumerate() {
                if p == 0.0 {
                    assert_eq!(rate, 0.0);
                }
                let direct = channel::secrecy_rate(&s, r.trajectory.q[n + 1], r.trajectory.z[n + 1], p, mode);
                assert!((direct - rate).abs() <= 1e-12);
            }
        }

        let again = planner::plan(&s, mode, Scheme::Full3d, &opts).unwrap();
        assert_eq!(again.trajectory, full.trajectory);
        assert_eq!(again.power, full.power);
    }
}

fn gains(n: usize) -> impl Strategy<Value = SlotGains> {
    (
        prop::collection::vec(1e-6f64..1e-2, n),
        prop::collection::vec(1e-6f64..1e-2, n),
    )
        .prop_map(|(a, b)| SlotGains { a, b })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kkt_power_beats_uniform_power_on_active_slots(
        g in (1usize..12).prop_flat_map(gains),
        p_ave in 10.0f64..2000.0,
        peak_mult in 1.0f64..6.0,
    ) {
        let p_peak = p_ave * peak_mult;
        let sched = power_alloc::kkt_power(&g, p_ave, p_peak).unwrap();
        prop_assert!(sched.is_feasible(p_ave, p_peak));
        let active = power_alloc::active_slots(&g);
        let uniform: Vec<f64> = (0..g.len())
            .map(|n| if active.contains(&n) { p_ave } else { 0.0 })
            .collect();
        prop_assert!(g.sum_rate(&sched.p) >= g.sum_rate(&uniform) - 1e-9);
        for (n, &p) in sched.p.iter().enumerate() {
            if !active.contains(&n) {
                prop_assert_eq!(p, 0.0);
            }
        }
    }
}
