//! Trajectory optimization for a fixed power schedule by successive convex
//! approximation.
//!
//! The per-slot rate is rewritten in terms of distance proxies: `zeta[k]`
//! upper-bounds the distance to GR `k` raised to `alpha`, `eta[j]`
//! lower-bounds the distance to eavesdropper `j` raised to `alpha`. The
//! legitimate log term is convex in `zeta` and is replaced by its tangent
//! plane at the current iterate; the eavesdropper distance is replaced by its
//! tangent plane in `(q, z)`. Both replacements under-estimate the true rate
//! and are tight at the expansion point, so every round is an ascent step.

use std::f64::consts::LN_2;
use std::sync::Arc;

use thiserror::Error;

use crate::channel::{self, ColludeMode};
use crate::convex_core::{
    self, Affine, ConcaveProgram, FnOracle, Local, Oracle, SolveStatus, SolverError,
    SolverSettings,
};
use crate::geom::Point2;
use crate::power_alloc::PowerSchedule;
use crate::scenario::{validate_trajectory, Scenario, TrajectoryViolation};

/// Waypoints `0..=N+1`; the first and last are the fixed mission endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub q: Vec<Point2>,
    pub z: Vec<f64>,
}

impl Trajectory {
    pub fn n_slots(&self) -> usize {
        self.q.len().saturating_sub(2)
    }

    /// Uniformly spaced straight line between the scenario endpoints with a
    /// constant interior altitude (endpoints keep their own altitudes).
    pub fn straight_line(s: &Scenario, z: f64) -> Trajectory {
        let last = s.n_slots + 1;
        let mut q: Vec<Point2> = (0..=last)
            .map(|n| s.q_start.lerp(s.q_end, n as f64 / last as f64))
            .collect();
        q[0] = s.q_start;
        q[last] = s.q_end;
        let mut zs = vec![z; last + 1];
        zs[0] = s.z_start;
        zs[last] = s.z_end;
        Trajectory { q, z: zs }
    }
}

#[derive(Debug, Error)]
pub enum ScaError {
    #[error("expansion trajectory is infeasible: {0}")]
    InfeasibleExpansion(TrajectoryViolation),
    #[error("power schedule has {got} slots, trajectory has {expected}")]
    PowerLength { expected: usize, got: usize },
    #[error("SCA iteration {iteration}: {source}")]
    Solver {
        iteration: usize,
        #[source]
        source: SolverError,
    },
    #[error("SCA iteration {iteration}: interior-point solver failed to make progress")]
    NumericFailure { iteration: usize },
}

/// Tangent-plane under-estimator of `(‖q − w‖² + z²)^(alpha/2)` at `(q0, z0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistLowerBound {
    pub q0: Point2,
    pub z0: f64,
    /// Function value at the expansion point.
    pub value0: f64,
    /// Gradient with respect to `(x, y, z)`.
    pub grad: [f64; 3],
}

impl DistLowerBound {
    pub fn eval(&self, q: Point2, z: f64) -> f64 {
        self.value0
            + self.grad[0] * (q.x - self.q0.x)
            + self.grad[1] * (q.y - self.q0.y)
            + self.grad[2] * (z - self.z0)
    }
}

/// `(‖q − w‖² + z²)^(alpha/2)`.
pub fn dist_alpha(q: Point2, z: f64, w: Point2, alpha: f64) -> f64 {
    let d_sq = channel::dist_sq(q, z, w);
    if alpha == 2.0 {
        d_sq
    } else {
        d_sq.powf(0.5 * alpha)
    }
}

pub fn eav_dist_lb(q0: Point2, z0: f64, w: Point2, alpha: f64) -> DistLowerBound {
    let d_sq = channel::dist_sq(q0, z0, w);
    let value0 = dist_alpha(q0, z0, w, alpha);
    // d/dv (d²)^(α/2) = α (d²)^(α/2 − 1) (v − w)
    let f = alpha * value0 / d_sq;
    DistLowerBound {
        q0,
        z0,
        value0,
        grad: [f * (q0.x - w.x), f * (q0.y - w.y), f * z0],
    }
}

/// Received SNR per unit `1/distance^alpha` at power `p`.
#[inline]
pub fn snr_scale(s: &Scenario, p: f64) -> f64 {
    s.beta0 * p / s.sigma2
}

/// Rate of one slot written in proxy coordinates:
/// `log2(1 + Σ c/zeta_k) − log2(1 + eavesdropper term)`, where the
/// eavesdropper term is `c/eta_j` for a single index or `Σ_j c/eta_j`.
pub fn proxy_rate(c: f64, zeta: &[f64], eta: &[f64], eav: Option<usize>) -> f64 {
    let legit: f64 = zeta.iter().map(|z| c / z).sum();
    let leak = match eav {
        Some(j) => c / eta[j],
        None => eta.iter().map(|e| c / e).sum(),
    };
    channel::log2_1p(legit) - channel::log2_1p(leak)
}

/// Concave surrogate of [`proxy_rate`]: the legitimate term is linearized
/// at `zeta_m`.
pub fn rate_lb_value(c: f64, zeta: &[f64], eta: &[f64], zeta_m: &[f64], eav: Option<usize>) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    let leak = match eav {
        Some(j) => c / eta[j],
        None => eta.iter().map(|e| c / e).sum(),
    };
    legit_tangent(c, zeta_m).eval(zeta) - channel::log2_1p(leak)
}

/// Tangent plane of `log2(1 + Σ c/zeta_k)` at `zeta_m`.
#[derive(Debug, Clone, PartialEq)]
struct LegitTangent {
    value0: f64,
    zeta_m: Vec<f64>,
    /// Partial derivatives (all non-positive).
    slope: Vec<f64>,
}

impl LegitTangent {
    fn eval(&self, zeta: &[f64]) -> f64 {
        self.value0
            + self
                .slope
                .iter()
                .zip(zeta.iter().zip(&self.zeta_m))
                .map(|(s, (z, zm))| s * (z - zm))
                .sum::<f64>()
    }
}

fn legit_tangent(c: f64, zeta_m: &[f64]) -> LegitTangent {
    let sum: f64 = zeta_m.iter().map(|z| c / z).sum();
    let kappa = 1.0 / (LN_2 * (1.0 + sum));
    LegitTangent {
        value0: channel::log2_1p(sum),
        zeta_m: zeta_m.to_vec(),
        slope: zeta_m.iter().map(|z| -kappa * c / (z * z)).collect(),
    }
}

/// Per-slot rates of a trajectory under a power schedule. With `clamp` the
/// secrecy rate is clipped at zero; otherwise slots with zero power count as
/// zero and the rest are unclamped.
pub fn slot_rates(
    s: &Scenario,
    traj: &Trajectory,
    p: &PowerSchedule,
    mode: ColludeMode,
    clamp: bool,
) -> Vec<f64> {
    (1..=traj.n_slots())
        .map(|n| {
            let pn = p.p[n - 1];
            if pn == 0.0 {
                0.0
            } else {
                channel::secrecy_rate_with(s, traj.q[n], traj.z[n], pn, mode, clamp)
            }
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// The objective the SCA rounds ascend: mean unclamped rate over slots with
/// positive power.
pub fn fixed_power_objective(s: &Scenario, traj: &Trajectory, p: &PowerSchedule, mode: ColludeMode) -> f64 {
    mean(&slot_rates(s, traj, p, mode, false))
}

/// Mean clamped secrecy rate.
pub fn average_secrecy_rate(s: &Scenario, traj: &Trajectory, p: &PowerSchedule, mode: ColludeMode) -> f64 {
    mean(&slot_rates(s, traj, p, mode, true))
}

/// Position of each optimization variable inside the flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub n_slots: usize,
    pub k: usize,
    pub j: usize,
    pub free_q: bool,
    pub free_z: bool,
    pub slack: bool,
    pub block: usize,
    /// Expansion waypoints `0..=N+1`; frozen coordinates keep these values.
    fixed: Trajectory,
}

impl Layout {
    pub fn dim(&self) -> usize {
        self.n_slots * self.block
    }

    /// Variable offset of interior slot `n` (1-based waypoint index).
    fn base(&self, n: usize) -> usize {
        (n - 1) * self.block
    }

    fn interior(&self, n: usize) -> bool {
        n >= 1 && n <= self.n_slots
    }

    /// Index of the x coordinate of waypoint `n`, if it is a variable.
    pub fn ix(&self, n: usize) -> Option<usize> {
        (self.free_q && self.interior(n)).then(|| self.base(n))
    }

    pub fn iy(&self, n: usize) -> Option<usize> {
        (self.free_q && self.interior(n)).then(|| self.base(n) + 1)
    }

    pub fn iz(&self, n: usize) -> Option<usize> {
        (self.free_z && self.interior(n)).then(|| self.base(n) + if self.free_q { 2 } else { 0 })
    }

    fn coords(&self) -> usize {
        2 * usize::from(self.free_q) + usize::from(self.free_z)
    }

    pub fn ir(&self, n: usize) -> Option<usize> {
        self.slack.then(|| self.base(n) + self.coords())
    }

    pub fn izeta(&self, n: usize, k: usize) -> usize {
        self.base(n) + self.coords() + usize::from(self.slack) + k
    }

    pub fn ieta(&self, n: usize, j: usize) -> usize {
        self.base(n) + self.coords() + usize::from(self.slack) + self.k + j
    }

    /// Waypoint `n` (0..=N+1) read from `x`, falling back to frozen values.
    pub fn position(&self, x: &[f64], n: usize) -> (Point2, f64) {
        if n == 0 || n == self.n_slots + 1 {
            return (self.fixed.q[n], self.fixed.z[n]);
        }
        let q = match (self.ix(n), self.iy(n)) {
            (Some(i), Some(j)) => Point2::new(x[i], x[j]),
            _ => self.fixed.q[n],
        };
        let z = self.iz(n).map_or(self.fixed.z[n], |i| x[i]);
        (q, z)
    }

    /// Free coordinate indices of waypoint `n` paired with the axis they
    /// encode (0 = x, 1 = y, 2 = z).
    fn free_coords(&self, n: usize) -> Vec<(usize, usize)> {
        if n == 0 || n == self.n_slots + 1 {
            return Vec::new();
        }
        let mut v = Vec::with_capacity(3);
        if let (Some(i), Some(j)) = (self.ix(n), self.iy(n)) {
            v.push((i, 0));
            v.push((j, 1));
        }
        if let Some(i) = self.iz(n) {
            v.push((i, 2));
        }
        v
    }

    pub fn trajectory(&self, x: &[f64]) -> Trajectory {
        let mut t = self.fixed.clone();
        for n in 1..=self.n_slots {
            let (q, z) = self.position(x, n);
            t.q[n] = q;
            t.z[n] = z;
        }
        t
    }
}

/// One convex subproblem together with the data needed to read its solution.
pub struct Subproblem {
    pub program: ConcaveProgram,
    pub layout: Arc<Layout>,
}

impl Subproblem {
    pub fn trajectory_from(&self, x: &[f64]) -> Trajectory {
        self.layout.trajectory(x)
    }
}

/// Interior margin used to make the start point strictly feasible.
const START_SHIFT: f64 = 1e-3;
const PROXY_MARGIN: f64 = 1e-6;

/// A strictly feasible reference path: straight horizontal line at uniform
/// speed and an altitude profile that heads for mid-range at a fraction of
/// the vertical speed limits. Coordinates without a strict interior are
/// reported as frozen.
fn interior_reference(s: &Scenario, optimize_altitude: bool) -> (Option<Vec<Point2>>, Option<Vec<f64>>) {
    let n = s.n_slots;
    let last = n + 1;
    let segs = last as f64;

    let horiz = s.q_start.dist(s.q_end);
    let q_ref = (horiz < segs * s.v_step() * (1.0 - 1e-9)).then(|| {
        (0..=last)
            .map(|i| s.q_start.lerp(s.q_end, i as f64 / segs))
            .collect()
    });

    let dz = s.z_end - s.z_start;
    let need = if dz >= 0.0 {
        dz / (segs * s.v_up_step())
    } else {
        -dz / (segs * s.v_down_step())
    };
    let z_ref = (optimize_altitude && s.z_max > s.z_min && need < 1.0 - 1e-9).then(|| {
        let rho = 0.5f64.max(0.5 * (1.0 + need));
        let (up, down) = (rho * s.v_up_step(), rho * s.v_down_step());
        let mid = 0.5 * (s.z_min + s.z_max);
        (0..=last)
            .map(|i| {
                if i == 0 {
                    return s.z_start;
                }
                if i == last {
                    return s.z_end;
                }
                let (a, b) = (i as f64, (last - i) as f64);
                let lo = s.z_min.max(s.z_start - a * down).max(s.z_end - b * up);
                let hi = s.z_max.min(s.z_start + a * up).min(s.z_end + b * down);
                mid.clamp(lo, hi)
            })
            .collect()
    });
    (q_ref, z_ref)
}

/// Upper box for `zeta`: a multiple of the largest distance^alpha reachable
/// in slot `n`. Only matters for slots without power, where nothing else
/// bounds `zeta` from above.
fn zeta_cap(s: &Scenario, n: usize, w: Point2) -> f64 {
    let reach = s.q_start.dist(w) + n as f64 * s.v_step();
    let far = reach * reach + s.z_max * s.z_max;
    4.0 * if s.alpha == 2.0 { far } else { far.powf(0.5 * s.alpha) }
}

/// Lower box for `eta`: half of the smallest possible distance^alpha.
pub fn eta_floor(s: &Scenario) -> f64 {
    0.5 * s.z_min.powf(s.alpha)
}

pub fn build_subproblem(
    s: &Scenario,
    traj_m: &Trajectory,
    p: &PowerSchedule,
    mode: ColludeMode,
    optimize_altitude: bool,
) -> Result<Subproblem, ScaError> {
    validate_trajectory(s, traj_m).map_err(ScaError::InfeasibleExpansion)?;
    let n_slots = s.n_slots;
    if p.len() != n_slots {
        return Err(ScaError::PowerLength {
            expected: n_slots,
            got: p.len(),
        });
    }
    let (k_gr, j_eav) = (s.num_grs(), s.num_eavs());
    let (q_ref, z_ref) = interior_reference(s, optimize_altitude);
    let slack = mode == ColludeMode::NonColluding;
    let free_q = q_ref.is_some();
    let free_z = z_ref.is_some();
    let block = 2 * usize::from(free_q) + usize::from(free_z) + usize::from(slack) + k_gr + j_eav;
    let layout = Arc::new(Layout {
        n_slots,
        k: k_gr,
        j: j_eav,
        free_q,
        free_z,
        slack,
        block,
        fixed: traj_m.clone(),
    });
    let dim = layout.dim();
    let alpha = s.alpha;
    let inv_n = 1.0 / n_slots as f64;

    // Start point: expansion trajectory nudged towards the interior path.
    let mut x0 = vec![0.0; dim];
    for n in 1..=n_slots {
        if let (Some(i), Some(j), Some(r)) = (layout.ix(n), layout.iy(n), &q_ref) {
            let q = traj_m.q[n].lerp(r[n], START_SHIFT);
            x0[i] = q.x;
            x0[j] = q.y;
        }
        if let (Some(i), Some(r)) = (layout.iz(n), &z_ref) {
            x0[i] = traj_m.z[n] + START_SHIFT * (r[n] - traj_m.z[n]);
        }
    }

    let mut lower = vec![None; dim];
    let mut upper = vec![None; dim];
    let mut constraints: Vec<Oracle> = Vec::new();
    let floor = eta_floor(s);

    // Objective pieces for the colluding model, per slot.
    let mut tangents = Vec::with_capacity(n_slots);

    for n in 1..=n_slots {
        let (qm, zm) = (traj_m.q[n], traj_m.z[n]);
        let (q0, z0) = layout.position(&x0, n);
        let c = snr_scale(s, p.p[n - 1]);
        let coords = layout.free_coords(n);

        if let Some(i) = layout.iz(n) {
            lower[i] = Some(s.z_min);
            upper[i] = Some(s.z_max);
        }

        // zeta_k ≥ distance^alpha to GR k.
        let zeta_m: Vec<f64> = s
            .gr_positions
            .iter()
            .map(|&w| dist_alpha(qm, zm, w, alpha))
            .collect();
        for (k, &w) in s.gr_positions.iter().enumerate() {
            let iz = layout.izeta(n, k);
            x0[iz] = dist_alpha(q0, z0, w, alpha) * (1.0 + PROXY_MARGIN);
            upper[iz] = Some(zeta_cap(s, n, w));
            constraints.push(zeta_constraint(layout.clone(), n, w, iz, alpha, coords.clone()));
        }

        // eta_j ≤ tangent plane of distance^alpha to eavesdropper j.
        for (j, &w) in s.eav_positions.iter().enumerate() {
            let ie = layout.ieta(n, j);
            let lb = eav_dist_lb(qm, zm, w, alpha);
            x0[ie] = lb.eval(q0, z0) * (1.0 - PROXY_MARGIN);
            lower[ie] = Some(floor);
            let v0 = [qm.x, qm.y, zm];
            let mut constant = -lb.value0;
            let mut coeffs = vec![(ie, 1.0)];
            for &(idx, axis) in &coords {
                constant += lb.grad[axis] * v0[axis];
                coeffs.push((idx, -lb.grad[axis]));
            }
            constraints.push(Arc::new(Affine { constant, coeffs }));
        }

        let tangent = legit_tangent(c, &zeta_m);
        if let Some(ir) = layout.ir(n) {
            let zeta0: Vec<f64> = (0..k_gr).map(|k| x0[layout.izeta(n, k)]).collect();
            let eta0: Vec<f64> = (0..j_eav).map(|j| x0[layout.ieta(n, j)]).collect();
            let r0 = (0..j_eav)
                .map(|j| rate_lb_value(c, &zeta0, &eta0, &zeta_m, Some(j)))
                .fold(f64::INFINITY, f64::min);
            x0[ir] = r0 - PROXY_MARGIN * (1.0 + r0.abs());
            for j in 0..j_eav {
                constraints.push(rate_slack_constraint(
                    &layout,
                    n,
                    j,
                    c,
                    &tangent,
                ));
            }
        }
        tangents.push((c, tangent));
    }

    // Mobility and vertical speed between consecutive waypoints.
    for n in 0..=n_slots {
        if free_q {
            constraints.push(mobility_constraint(layout.clone(), n, s.v_step()));
        }
        if free_z {
            let (a, b) = (layout.iz(n), layout.iz(n + 1));
            let za = if a.is_none() { traj_m.z[n] } else { 0.0 };
            let zb = if b.is_none() { traj_m.z[n + 1] } else { 0.0 };
            // z[n+1] − z[n] − V_up ≤ 0 and z[n] − z[n+1] − V_down ≤ 0
            let mut up = vec![];
            let mut down = vec![];
            if let Some(i) = b {
                up.push((i, 1.0));
                down.push((i, -1.0));
            }
            if let Some(i) = a {
                up.push((i, -1.0));
                down.push((i, 1.0));
            }
            constraints.push(Arc::new(Affine {
                constant: zb - za - s.v_up_step(),
                coeffs: up,
            }));
            constraints.push(Arc::new(Affine {
                constant: za - zb - s.v_down_step(),
                coeffs: down,
            }));
        }
    }

    let objective: Oracle = if slack {
        Arc::new(Affine {
            constant: 0.0,
            coeffs: (1..=n_slots)
                .map(|n| (layout.ir(n).expect("slack variable"), inv_n))
                .collect(),
        })
    } else {
        colluding_objective(layout.clone(), tangents, inv_n)
    };

    let mut program = ConcaveProgram::new(dim, objective, x0);
    program.constraints = constraints;
    program.lower = lower;
    program.upper = upper;
    Ok(Subproblem { program, layout })
}

fn zeta_constraint(
    layout: Arc<Layout>,
    n: usize,
    w: Point2,
    iz: usize,
    alpha: f64,
    coords: Vec<(usize, usize)>,
) -> Oracle {
    Arc::new(FnOracle::new(move |x: &[f64], want_hess: bool| {
        let (q, z) = layout.position(x, n);
        let d = [q.x - w.x, q.y - w.y, z];
        let d_sq = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        let half = 0.5 * alpha;
        let val = if alpha == 2.0 { d_sq } else { d_sq.powf(half) };
        // g(D) = D^(α/2): g' = (α/2) D^(α/2−1), g'' = (α/2)(α/2−1) D^(α/2−2)
        let g1 = half * val / d_sq;
        let g2 = half * (half - 1.0) * val / (d_sq * d_sq);
        let mut grad = Vec::with_capacity(coords.len() + 1);
        for &(i, axis) in &coords {
            grad.push((i, g1 * 2.0 * d[axis]));
        }
        grad.push((iz, -1.0));
        let mut hess = Vec::new();
        if want_hess {
            for (a, &(i, ai)) in coords.iter().enumerate() {
                for &(j, aj) in &coords[a..] {
                    let mut h = g2 * 4.0 * d[ai] * d[aj];
                    if i == j {
                        h += 2.0 * g1;
                    }
                    hess.push((i.min(j), i.max(j), h));
                }
            }
        }
        Local {
            value: val - x[iz],
            grad,
            hess,
        }
    }))
}

fn rate_slack_constraint(layout: &Layout, n: usize, j: usize, c: f64, tangent: &LegitTangent) -> Oracle {
    let ir = layout.ir(n).expect("slack variable");
    let zeta_idx: Vec<usize> = (0..layout.k).map(|k| layout.izeta(n, k)).collect();
    let ie = layout.ieta(n, j);
    let tangent = tangent.clone();
    // r − tangent(zeta) + log2(1 + c/eta_j) ≤ 0
    Arc::new(FnOracle::new(move |x: &[f64], want_hess: bool| {
        let zeta: Vec<f64> = zeta_idx.iter().map(|&i| x[i]).collect();
        let eta = x[ie];
        let mut grad = Vec::with_capacity(zeta_idx.len() + 2);
        grad.push((ir, 1.0));
        if c == 0.0 {
            return Local {
                value: x[ir],
                grad,
                hess: Vec::new(),
            };
        }
        for (k, &i) in zeta_idx.iter().enumerate() {
            grad.push((i, -tangent.slope[k]));
        }
        let leak = c / eta;
        grad.push((ie, -c / (LN_2 * eta * (eta + c))));
        let hess = if want_hess {
            vec![(ie, ie, (1.0 / (eta * eta) - 1.0 / ((eta + c) * (eta + c))) / LN_2)]
        } else {
            Vec::new()
        };
        Local {
            value: x[ir] - tangent.eval(&zeta) + channel::log2_1p(leak),
            grad,
            hess,
        }
    }))
}

fn mobility_constraint(layout: Arc<Layout>, n: usize, v: f64) -> Oracle {
    let limit = v * v;
    Arc::new(FnOracle::new(move |x: &[f64], want_hess: bool| {
        let (qa, _) = layout.position(x, n);
        let (qb, _) = layout.position(x, n + 1);
        let d = qb - qa;
        let mut grad = Vec::with_capacity(4);
        let mut hess = Vec::new();
        let a = layout.ix(n).zip(layout.iy(n));
        let b = layout.ix(n + 1).zip(layout.iy(n + 1));
        if let Some((ix, iy)) = a {
            grad.push((ix, -2.0 * d.x));
            grad.push((iy, -2.0 * d.y));
            if want_hess {
                hess.push((ix, ix, 2.0));
                hess.push((iy, iy, 2.0));
            }
        }
        if let Some((ix, iy)) = b {
            grad.push((ix, 2.0 * d.x));
            grad.push((iy, 2.0 * d.y));
            if want_hess {
                hess.push((ix, ix, 2.0));
                hess.push((iy, iy, 2.0));
            }
        }
        if let (Some((ax, ay)), Some((bx, by)), true) = (a, b, want_hess) {
            hess.push((ax.min(bx), ax.max(bx), -2.0));
            hess.push((ay.min(by), ay.max(by), -2.0));
        }
        Local {
            value: d.norm_sq() - limit,
            grad,
            hess,
        }
    }))
}

/// `(1/N) Σ_n [tangent_n(zeta) − log2(1 + Σ_j c_n/eta_j)]`.
fn colluding_objective(layout: Arc<Layout>, tangents: Vec<(f64, LegitTangent)>, inv_n: f64) -> Oracle {
    Arc::new(FnOracle::new(move |x: &[f64], want_hess: bool| {
        let mut value = 0.0;
        let mut grad = Vec::new();
        let mut hess = Vec::new();
        for (slot, (c, tangent)) in tangents.iter().enumerate() {
            let n = slot + 1;
            let c = *c;
            if c == 0.0 {
                continue;
            }
            let zeta: Vec<f64> = (0..layout.k).map(|k| x[layout.izeta(n, k)]).collect();
            for k in 0..layout.k {
                grad.push((layout.izeta(n, k), inv_n * tangent.slope[k]));
            }
            let eta_idx: Vec<usize> = (0..layout.j).map(|j| layout.ieta(n, j)).collect();
            let sum: f64 = eta_idx.iter().map(|&i| c / x[i]).sum();
            let one_s = 1.0 + sum;
            value += tangent.eval(&zeta) - channel::log2_1p(sum);
            let u: Vec<f64> = eta_idx.iter().map(|&i| c / (x[i] * x[i])).collect();
            for (a, &i) in eta_idx.iter().enumerate() {
                grad.push((i, inv_n * u[a] / (one_s * LN_2)));
            }
            if want_hess {
                for (a, &i) in eta_idx.iter().enumerate() {
                    for (b, &j) in eta_idx.iter().enumerate().skip(a) {
                        let mut h = u[a] * u[b] / (one_s * one_s);
                        if a == b {
                            h -= 2.0 * c / (x[i] * x[i] * x[i] * one_s);
                        }
                        hess.push((i.min(j), i.max(j), inv_n * h / LN_2));
                    }
                }
            }
        }
        Local {
            value: inv_n * value,
            grad,
            hess,
        }
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaOptions {
    pub max_iters: usize,
    pub rel_tol: f64,
    /// When false the interior altitudes stay at their initial values.
    pub optimize_altitude: bool,
    pub solver: SolverSettings,
}

impl Default for ScaOptions {
    fn default() -> Self {
        Self {
            max_iters: 50,
            rel_tol: 1e-4,
            optimize_altitude: true,
            solver: SolverSettings {
                tol: 1e-7,
                ..SolverSettings::default()
            },
        }
    }
}

/// One SCA round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaTraceEntry {
    pub iter: usize,
    /// [`fixed_power_objective`] of the round's output trajectory.
    pub true_avg_rate: f64,
    pub surrogate_value: f64,
    pub solver_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaOutcome {
    /// Best trajectory seen, including the initial one.
    pub trajectory: Trajectory,
    pub objective: f64,
    pub initial_objective: f64,
    pub trace: Vec<ScaTraceEntry>,
}

pub fn sca_optimize_traj(
    s: &Scenario,
    p: &PowerSchedule,
    traj_init: &Trajectory,
    mode: ColludeMode,
    opts: &ScaOptions,
) -> Result<ScaOutcome, ScaError> {
    validate_trajectory(s, traj_init).map_err(ScaError::InfeasibleExpansion)?;
    let initial_objective = fixed_power_objective(s, traj_init, p, mode);
    let mut outcome = ScaOutcome {
        trajectory: traj_init.clone(),
        objective: initial_objective,
        initial_objective,
        trace: Vec::new(),
    };
    // Nothing depends on the trajectory when no power is transmitted.
    if p.p.iter().all(|&v| v == 0.0) {
        return Ok(outcome);
    }
    let mut current = traj_init.clone();
    let mut current_obj = initial_objective;
    for iter in 1..=opts.max_iters {
        let sub = build_subproblem(s, &current, p, mode, opts.optimize_altitude)?;
        let report = convex_core::solve(&sub.program, &opts.solver)
            .map_err(|source| ScaError::Solver { iteration: iter, source })?;
        if report.status == SolveStatus::NumericFailure {
            return Err(ScaError::NumericFailure { iteration: iter });
        }
        let next = sub.trajectory_from(&report.x_star);
        let next_obj = fixed_power_objective(s, &next, p, mode);
        outcome.trace.push(ScaTraceEntry {
            iter,
            true_avg_rate: next_obj,
            surrogate_value: report.objective_value,
            solver_iters: report.barrier_iterations,
        });
        if next_obj > outcome.objective {
            outcome.objective = next_obj;
            outcome.trajectory = next.clone();
        }
        let gain = next_obj - current_obj;
        current = next;
        current_obj = next_obj;
        if gain < opts.rel_tol * current_obj.abs().max(1e-12) {
            break;
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lower_bound_is_tight_and_quadratic_gap_for_alpha_two() {
        let w = Point2::new(-50.0, 180.0);
        let (q0, z0) = (Point2::new(10.0, 250.0), 190.0);
        let lb = eav_dist_lb(q0, z0, w, 2.0);
        let at = dist_alpha(q0, z0, w, 2.0);
        assert!((lb.eval(q0, z0) - at).abs() <= 1e-9 * at);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let dq = Point2::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
            let dz: f64 = rng.gen_range(-30.0..30.0);
            let gap = dist_alpha(q0 + dq, z0 + dz, w, 2.0) - lb.eval(q0 + dq, z0 + dz);
            let expect = dq.norm_sq() + dz * dz;
            assert!((gap - expect).abs() <= 1e-8 * (1.0 + expect));
        }
    }

    #[test]
    fn surrogate_is_tight_and_zero_without_power() {
        let zeta_m = [4.0e4, 5.5e4, 9.0e4];
        let eta = [3.0e4, 4.1e4];
        let c = 1e5;
        for eav in [Some(0), Some(1), None] {
            let lb = rate_lb_value(c, &zeta_m, &eta, &zeta_m, eav);
            let truth = proxy_rate(c, &zeta_m, &eta, eav);
            assert!((lb - truth).abs() <= 1e-12 * truth.abs().max(1.0));
            assert_eq!(rate_lb_value(0.0, &[1.0, 2.0, 3.0], &eta, &zeta_m, eav), 0.0);
        }
    }

    #[test]
    fn subproblem_dimensions_for_reference_setup() {
        let s = Scenario::reference(20);
        let s = Scenario {
            q_start: Point2::new(-100.0, 250.0),
            q_end: Point2::new(100.0, 250.0),
            ..s
        };
        let traj = Trajectory::straight_line(&s, 200.0);
        let p = PowerSchedule::constant(20, s.p_ave);
        let nc = build_subproblem(&s, &traj, &p, ColludeMode::NonColluding, true).unwrap();
        assert_eq!(nc.program.dim, 20 * 9);
        let c = build_subproblem(&s, &traj, &p, ColludeMode::Colluding, true).unwrap();
        assert_eq!(c.program.dim, 20 * 8);
    }

    #[test]
    fn start_point_is_strictly_feasible_and_reads_back() {
        let s = Scenario {
            q_start: Point2::new(-100.0, 250.0),
            q_end: Point2::new(100.0, 250.0),
            ..Scenario::reference(20)
        };
        let traj = Trajectory::straight_line(&s, 200.0);
        let p = PowerSchedule::constant(20, s.p_ave);
        for mode in ColludeMode::ALL {
            let sub = build_subproblem(&s, &traj, &p, mode, true).unwrap();
            assert!(sub.program.max_violation(&sub.program.x0) < 0.0);
            let back = sub.trajectory_from(&sub.program.x0);
            for n in 0..traj.q.len() {
                assert!(back.q[n].dist(traj.q[n]) < 1.0);
                assert!((back.z[n] - traj.z[n]).abs() < 1.0);
            }
        }
    }

    #[test]
    fn tight_horizontal_budget_freezes_positions() {
        // 1025 m with 82 segments of 12.5 m leaves no slack.
        let s = Scenario::reference(81);
        let traj = Trajectory::straight_line(&s, 200.0);
        let p = PowerSchedule::constant(81, s.p_ave);
        let sub = build_subproblem(&s, &traj, &p, ColludeMode::Colluding, true).unwrap();
        assert!(!sub.layout.free_q);
        assert!(sub.layout.free_z);
        assert_eq!(sub.program.dim, 81 * 6);
    }

    #[test]
    fn single_gr_without_leakage_hovers_over_receiver() {
        // Eavesdropper very far away: the rate is driven by the GR distance,
        // so interior slots should sit above the GR at minimum altitude.
        let s = Scenario {
            gr_positions: vec![Point2::new(0.0, 0.0)],
            eav_positions: vec![Point2::new(1e5, 1e5)],
            q_start: Point2::new(-50.0, 0.0),
            q_end: Point2::new(50.0, 0.0),
            z_start: 150.0,
            z_end: 150.0,
            ..Scenario::reference(16)
        };
        let traj = Trajectory::straight_line(&s, 150.0);
        let p = PowerSchedule::constant(16, s.p_ave);
        let out = sca_optimize_traj(&s, &p, &traj, ColludeMode::NonColluding, &ScaOptions::default()).unwrap();
        let t = &out.trajectory;
        // Slots far enough from both endpoints can reach the GR.
        for n in 5..=12 {
            assert!(t.q[n].norm() < 1.0, "slot {n}: {}", t.q[n]);
            assert!((t.z[n] - s.z_min).abs() < 1.0, "slot {n}: z={}", t.z[n]);
        }
        assert!(validate_trajectory(&s, t).is_ok());
    }
}
