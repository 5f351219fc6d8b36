//! Optimal per-slot transmit power for a fixed trajectory.
//!
//! For per-mW gains `a[n]` (legitimate, after combining) and `b[n]`
//! (effective eavesdropper), the schedule maximizes
//! `Σ_n log2(1 + a p) − log2(1 + b p)` subject to `0 ≤ p[n] ≤ p_peak` and
//! `mean(p) ≤ p_ave`. Power is only spent where `a > b`; there the optimum is
//! a water-filling level set by a single dual variable found by bisection.

use std::f64::consts::LN_2;

use thiserror::Error;

use crate::channel::{self, ColludeMode};
use crate::scenario::Scenario;
use crate::traj_sca::Trajectory;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowerError {
    #[error("average power budget {p_ave} exceeds peak power {p_peak}")]
    InvalidBudget { p_ave: f64, p_peak: f64 },
    #[error("gain vectors have different lengths ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
}

/// Per-slot transmit powers in mW, one entry per slot `1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSchedule {
    pub p: Vec<f64>,
}

impl PowerSchedule {
    pub fn constant(n: usize, p: f64) -> Self {
        Self { p: vec![p; n] }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.p.is_empty() {
            0.0
        } else {
            self.p.iter().sum::<f64>() / self.p.len() as f64
        }
    }

    /// Peak and average constraints, with `1e-9` slack on the average.
    pub fn is_feasible(&self, p_ave: f64, p_peak: f64) -> bool {
        self.p.iter().all(|&p| (0.0..=p_peak).contains(&p)) && self.mean() <= p_ave + 1e-9
    }
}

/// Per-slot legitimate and eavesdropper gains (per mW).
#[derive(Debug, Clone, PartialEq)]
pub struct SlotGains {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl SlotGains {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Unclamped rate of slot `n` at power `p`.
    pub fn slot_rate(&self, n: usize, p: f64) -> f64 {
        channel::rate_from_gains(self.a[n], self.b[n], p)
    }

    /// `Σ_n log2(1 + a p) − log2(1 + b p)`.
    pub fn sum_rate(&self, power: &[f64]) -> f64 {
        power
            .iter()
            .enumerate()
            .map(|(n, &p)| self.slot_rate(n, p))
            .sum()
    }
}

/// Gains at the interior waypoints `1..=N` of a trajectory.
pub fn slot_gains(s: &Scenario, traj: &Trajectory, mode: ColludeMode) -> SlotGains {
    let n = traj.n_slots();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for i in 1..=n {
        let (q, z) = (traj.q[i], traj.z[i]);
        a.push(channel::legit_gain(s, q, z));
        b.push(channel::eav_gain(s, q, z, mode));
    }
    SlotGains { a, b }
}

/// Slots where transmitting can yield a positive secrecy rate (`a > b`).
pub fn active_slots(g: &SlotGains) -> Vec<usize> {
    (0..g.len()).filter(|&n| g.a[n] > g.b[n]).collect()
}

/// Unconstrained-by-peak maximizer of one slot's Lagrangian for multiplier
/// `nu`: the nonnegative root of `a/(1+ap) − b/(1+bp) = nu·ln 2`.
pub fn water_level(a: f64, b: f64, nu: f64) -> f64 {
    let lam = nu * LN_2;
    let gap = a - b;
    if gap <= 0.0 {
        return 0.0;
    }
    let c = 1.0 - gap / lam;
    if c >= 0.0 {
        return 0.0;
    }
    // Rationalized quadratic root; well defined for b = 0, where it reduces
    // to 1/lam − 1/a.
    let disc = gap * gap + 4.0 * a * b * gap / lam;
    -2.0 * c / ((a + b) + disc.sqrt())
}

/// Optimal schedule together with the multiplier of the average-power
/// constraint (zero when the budget is slack).
#[derive(Debug, Clone, PartialEq)]
pub struct KktSolution {
    pub schedule: PowerSchedule,
    pub nu: f64,
}

const BUDGET_REL_TOL: f64 = 1e-12;
const MAX_BISECTIONS: usize = 200;

pub fn kkt_power(g: &SlotGains, p_ave: f64, p_peak: f64) -> Result<PowerSchedule, PowerError> {
    kkt_power_with_dual(g, p_ave, p_peak).map(|k| k.schedule)
}

pub fn kkt_power_with_dual(
    g: &SlotGains,
    p_ave: f64,
    p_peak: f64,
) -> Result<KktSolution, PowerError> {
    if p_ave > p_peak {
        return Err(PowerError::InvalidBudget { p_ave, p_peak });
    }
    if g.a.len() != g.b.len() {
        return Err(PowerError::LengthMismatch {
            a: g.a.len(),
            b: g.b.len(),
        });
    }
    let n = g.len();
    let active = active_slots(g);
    let budget = n as f64 * p_ave;
    let mut p = vec![0.0; n];

    if active.len() as f64 * p_peak <= budget {
        for &i in &active {
            p[i] = p_peak;
        }
        return Ok(KktSolution {
            schedule: PowerSchedule { p },
            nu: 0.0,
        });
    }

    let total = |nu: f64| -> f64 {
        active
            .iter()
            .map(|&i| water_level(g.a[i], g.b[i], nu).min(p_peak))
            .sum()
    };

    let mut lo = 1e-18;
    let mut hi = 1.0;
    while total(hi) > budget {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = (lo * hi).sqrt();
        if !(mid > lo && mid < hi) {
            break;
        }
        let t = total(mid);
        if t > budget {
            lo = mid;
        } else {
            hi = mid;
            if budget - t <= BUDGET_REL_TOL * budget {
                break;
            }
        }
    }
    // The upper end of the bracket always satisfies the budget.
    for &i in &active {
        p[i] = water_level(g.a[i], g.b[i], hi).min(p_peak);
    }
    Ok(KktSolution {
        schedule: PowerSchedule { p },
        nu: hi,
    })
}
