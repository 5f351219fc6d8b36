//! Mobile planning: fly-hover-fly initialization, alternating power and
//! trajectory optimization, and the benchmark schemes.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::channel::ColludeMode;
use crate::geom::Point2;
use crate::power_alloc::{self, PowerError, PowerSchedule};
use crate::scenario::{validate_trajectory, Scenario, TrajectoryViolation};
use crate::traj_sca::{self, ScaError, ScaOptions, ScaTraceEntry, Trajectory};

/// Interior altitude of the fixed-altitude benchmark (m).
pub const FIXED_ALTITUDE: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Joint 3D trajectory and power optimization.
    Full3d,
    /// Horizontal trajectory and power, altitude held at 200 m.
    FixedAlt2D,
    /// Fly-hover-fly path with optimized power.
    FhfAdaptive,
    /// Fly-hover-fly path with `p_ave` in every slot.
    FhfConstant,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Full3d,
        Scheme::FixedAlt2D,
        Scheme::FhfAdaptive,
        Scheme::FhfConstant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Full3d => "full3d",
            Scheme::FixedAlt2D => "2d",
            Scheme::FhfAdaptive => "fhf-adaptive",
            Scheme::FhfConstant => "fhf-constant",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown scheme `{s}`"))
    }
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("initial trajectory is infeasible: {0}")]
    Infeasible(TrajectoryViolation),
    #[error(transparent)]
    Power(#[from] PowerError),
    #[error("outer iteration {outer}: {source}")]
    Sca {
        outer: usize,
        #[source]
        source: ScaError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOptions {
    pub max_outer: usize,
    pub rel_tol: f64,
    pub sca: ScaOptions,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            max_outer: 20,
            rel_tol: 1e-4,
            sca: ScaOptions::default(),
        }
    }
}

/// Average rate after each outer iteration plus the SCA rounds that produced
/// it. Entry 0 is the initial trajectory with its optimized power.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord {
    pub avg_rate: f64,
    pub sca: Vec<ScaTraceEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub trajectory: Trajectory,
    pub power: PowerSchedule,
    /// Clamped secrecy rate of slots `1..=N`.
    pub per_slot_rate: Vec<f64>,
    pub avg_rate: f64,
    pub mode: ColludeMode,
    pub scheme: Scheme,
    pub outer_iterations: usize,
    pub history: Vec<OuterRecord>,
}

/// GR minimizing the summed distance to all GRs (lowest index on ties).
pub fn medoid_gr(s: &Scenario) -> Point2 {
    let mut best = (f64::INFINITY, s.gr_positions[0]);
    for &w in &s.gr_positions {
        let total: f64 = s.gr_positions.iter().map(|&v| w.dist(v)).sum();
        if total < best.0 {
            best = (total, w);
        }
    }
    best.1
}

/// Straight flight at full speed towards the central GR, hover there for as
/// long as the remaining time allows, then straight flight at full speed to
/// the destination. Altitude moves towards `z_end` at full vertical speed.
pub fn fly_hover_fly_init(s: &Scenario) -> Trajectory {
    let hover = medoid_gr(s);
    fly_hover_fly_towards(s, hover)
}

fn fly_hover_fly_towards(s: &Scenario, hover: Point2) -> Trajectory {
    let last = s.n_slots + 1;
    let v = s.v_step();
    let d1 = s.q_start.dist(hover);
    let outbound = |n: usize| -> Point2 {
        if d1 == 0.0 {
            s.q_start
        } else {
            s.q_start.lerp(hover, (n as f64 * v / d1).min(1.0))
        }
    };
    // Leaving later never helps reachability, so the feasible set of
    // departure slots is a prefix.
    let mut tau = 0;
    while tau < last {
        let next = outbound(tau + 1);
        if next.dist(s.q_end) <= (last - tau - 1) as f64 * v * (1.0 + 1e-12) {
            tau += 1;
        } else {
            break;
        }
    }
    let turn = outbound(tau);
    let d2 = turn.dist(s.q_end);
    let mut q = Vec::with_capacity(last + 1);
    for n in 0..=last {
        if n <= tau {
            q.push(outbound(n));
        } else if d2 == 0.0 {
            q.push(s.q_end);
        } else {
            let frac = ((last - n) as f64 * v / d2).min(1.0);
            q.push(s.q_end.lerp(turn, frac));
        }
    }
    q[0] = s.q_start;
    q[last] = s.q_end;

    let dz = s.z_end - s.z_start;
    let z = (0..=last)
        .map(|n| {
            if n == last {
                return s.z_end;
            }
            let t = n as f64;
            let moved = dz.clamp(-t * s.v_down_step(), t * s.v_up_step());
            (s.z_start + moved).clamp(s.z_min, s.z_max)
        })
        .collect();
    Trajectory { q, z }
}

fn finish(
    s: &Scenario,
    mode: ColludeMode,
    scheme: Scheme,
    trajectory: Trajectory,
    power: PowerSchedule,
    outer_iterations: usize,
    history: Vec<OuterRecord>,
) -> PlanResult {
    let per_slot_rate = traj_sca::slot_rates(s, &trajectory, &power, mode, true);
    let avg_rate = if per_slot_rate.is_empty() {
        0.0
    } else {
        per_slot_rate.iter().sum::<f64>() / per_slot_rate.len() as f64
    };
    PlanResult {
        trajectory,
        power,
        per_slot_rate,
        avg_rate,
        mode,
        scheme,
        outer_iterations,
        history,
    }
}

fn optimal_power(s: &Scenario, traj: &Trajectory, mode: ColludeMode) -> Result<PowerSchedule, PlanError> {
    let gains = power_alloc::slot_gains(s, traj, mode);
    Ok(power_alloc::kkt_power(&gains, s.p_ave, s.p_peak)?)
}

/// Alternates optimal power for the current path with SCA trajectory rounds
/// for that power, keeping the best iterate.
pub fn alternate(
    s: &Scenario,
    mode: ColludeMode,
    traj_init: &Trajectory,
    opts: &PlanOptions,
) -> Result<PlanResult, PlanError> {
    alternate_scheme(s, mode, traj_init, opts, Scheme::Full3d)
}

fn alternate_scheme(
    s: &Scenario,
    mode: ColludeMode,
    traj_init: &Trajectory,
    opts: &PlanOptions,
    scheme: Scheme,
) -> Result<PlanResult, PlanError> {
    validate_trajectory(s, traj_init).map_err(PlanError::Infeasible)?;
    let mut traj = traj_init.clone();
    let mut power = optimal_power(s, &traj, mode)?;
    let mut avg = traj_sca::average_secrecy_rate(s, &traj, &power, mode);
    let mut history = vec![OuterRecord {
        avg_rate: avg,
        sca: Vec::new(),
    }];
    let mut best = (traj.clone(), power.clone(), avg);
    let mut outer = 0;
    while outer < opts.max_outer {
        outer += 1;
        let out = traj_sca::sca_optimize_traj(s, &power, &traj, mode, &opts.sca)
            .map_err(|source| PlanError::Sca { outer, source })?;
        traj = out.trajectory;
        power = optimal_power(s, &traj, mode)?;
        let next = traj_sca::average_secrecy_rate(s, &traj, &power, mode);
        history.push(OuterRecord {
            avg_rate: next,
            sca: out.trace,
        });
        if next > best.2 {
            best = (traj.clone(), power.clone(), next);
        }
        let gain = next - avg;
        avg = next;
        if gain < opts.rel_tol * avg.abs().max(1e-12) {
            break;
        }
    }
    let (traj, power, _) = best;
    Ok(finish(s, mode, scheme, traj, power, outer, history))
}

/// Fly-hover-fly path with its interior altitude held at the fixed
/// benchmark altitude.
pub fn fixed_altitude_init(s: &Scenario) -> Trajectory {
    let mut t = fly_hover_fly_init(s);
    let z = FIXED_ALTITUDE.clamp(s.z_min, s.z_max);
    let last = t.z.len() - 1;
    for v in &mut t.z[1..last] {
        *v = z;
    }
    t
}

pub fn plan_benchmark(
    s: &Scenario,
    mode: ColludeMode,
    scheme: Scheme,
    opts: &PlanOptions,
) -> Result<PlanResult, PlanError> {
    match scheme {
        Scheme::Full3d => alternate(s, mode, &fly_hover_fly_init(s), opts),
        Scheme::FixedAlt2D => {
            let init = fixed_altitude_init(s);
            let opts = PlanOptions {
                sca: ScaOptions {
                    optimize_altitude: false,
                    ..opts.sca.clone()
                },
                ..opts.clone()
            };
            alternate_scheme(s, mode, &init, &opts, Scheme::FixedAlt2D)
        }
        Scheme::FhfAdaptive => {
            let traj = fly_hover_fly_init(s);
            let power = optimal_power(s, &traj, mode)?;
            Ok(finish(s, mode, scheme, traj, power, 0, Vec::new()))
        }
        Scheme::FhfConstant => {
            let traj = fly_hover_fly_init(s);
            let power = PowerSchedule::constant(s.n_slots, s.p_ave);
            Ok(finish(s, mode, scheme, traj, power, 0, Vec::new()))
        }
    }
}

/// Same as [`plan_benchmark`]; every scheme including the full design.
pub fn plan(s: &Scenario, mode: ColludeMode, scheme: Scheme, opts: &PlanOptions) -> Result<PlanResult, PlanError> {
    plan_benchmark(s, mode, scheme, opts)
}
