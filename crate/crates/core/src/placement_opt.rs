//! Optimal quasi-stationary placement.
//!
//! For a fixed horizontal position the best altitude is found by scanning the
//! altitude derivative of the unclamped rate, refining every local maximum by
//! bisection and comparing against the interval ends. Power is either the
//! full budget or zero, depending on the sign of the rate at that altitude.
//! The horizontal position comes from a multi-resolution grid search.

use std::cmp::Ordering;

use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{self, ColludeMode, Placement};
use crate::geom::Point2;
use crate::scenario::Scenario;

/// Number of altitude samples used to bracket stationary points.
pub const ALTITUDE_SCAN_POINTS: usize = 512;
/// Bisection stops once the bracket is at most this wide (m).
pub const ALTITUDE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlacementError {
    #[error("search region is empty or not finite")]
    EmptyRegion,
    #[error("coarse step must be positive, got {0}")]
    BadStep(f64),
}

/// Axis-aligned horizontal search box (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    /// Bounding box of all ground nodes grown by `margin` on every side.
    pub fn around_nodes(s: &Scenario, margin: f64) -> Self {
        let mut r = Region::new(
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for p in s.gr_positions.iter().chain(&s.eav_positions) {
            r.x_min = r.x_min.min(p.x);
            r.x_max = r.x_max.max(p.x);
            r.y_min = r.y_min.min(p.y);
            r.y_max = r.y_max.max(p.y);
        }
        Region::new(
            r.x_min - margin,
            r.x_max + margin,
            r.y_min - margin,
            r.y_max + margin,
        )
    }

    pub fn is_valid(&self) -> bool {
        [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite())
            && self.x_min <= self.x_max
            && self.y_min <= self.y_max
    }

    pub fn contains(&self, q: Point2) -> bool {
        (self.x_min..=self.x_max).contains(&q.x) && (self.y_min..=self.y_max).contains(&q.y)
    }

    /// Grid `min + i·step` along both axes, staying inside the box.
    pub fn grid(&self, step: f64) -> Vec<Point2> {
        let nx = ((self.x_max - self.x_min) / step + 1e-9).floor() as usize;
        let ny = ((self.y_max - self.y_min) / step + 1e-9).floor() as usize;
        let mut pts = Vec::with_capacity((nx + 1) * (ny + 1));
        for i in 0..=nx {
            for j in 0..=ny {
                pts.push(Point2::new(
                    self.x_min + i as f64 * step,
                    self.y_min + j as f64 * step,
                ));
            }
        }
        pts
    }
}

/// Best altitude in `[z_min, z_max]` for transmit power `p`, maximizing the
/// unclamped rate. Ties go to the lower altitude.
pub fn altitude_opt(s: &Scenario, q: Point2, p: f64, mode: ColludeMode) -> f64 {
    let (lo, hi) = (s.z_min, s.z_max);
    if hi <= lo {
        return lo;
    }
    let rate = |z: f64| channel::secrecy_rate_unclamped(s, q, z, p, mode);
    let slope = |z: f64| channel::rate_dz(s, q, z, p, mode);

    let m = ALTITUDE_SCAN_POINTS;
    let zs: Vec<f64> = (0..m)
        .map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64)
        .collect();
    let ds: Vec<f64> = zs.iter().map(|&z| slope(z)).collect();

    let mut candidates = vec![lo, hi];
    for i in 0..m - 1 {
        if ds[i] > 0.0 && ds[i + 1] <= 0.0 {
            candidates.push(bisect_decreasing_slope(&slope, zs[i], zs[i + 1]));
        }
    }
    let mut best = (lo, rate(lo));
    for &z in &candidates[1..] {
        let r = rate(z);
        if r > best.1 || (r == best.1 && z < best.0) {
            best = (z, r);
        }
    }
    best.0
}

/// Locates a sign change of `slope` from positive at `a` to non-positive at
/// `b`, returning the midpoint of the final bracket.
pub fn bisect_decreasing_slope(slope: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    while b - a > ALTITUDE_TOL {
        let mid = 0.5 * (a + b);
        if slope(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

pub fn altitude_opt_noncolluding(s: &Scenario, q: Point2) -> f64 {
    altitude_opt(s, q, s.p_static, ColludeMode::NonColluding)
}

pub fn altitude_opt_colluding(s: &Scenario, q: Point2) -> f64 {
    altitude_opt(s, q, s.p_static, ColludeMode::Colluding)
}

/// On/off power rule: full power if the rate at the candidate altitude is
/// positive, otherwise silence (altitude pinned to `z_min`).
pub fn power_threshold(s: &Scenario, q: Point2, z_candidate: f64, mode: ColludeMode) -> (f64, f64) {
    if channel::secrecy_rate_unclamped(s, q, z_candidate, s.p_static, mode) > 0.0 {
        (s.p_static, z_candidate)
    } else {
        (0.0, s.z_min)
    }
}

/// Optimal placement and rate for a fixed horizontal position.
pub fn best_at(s: &Scenario, q: Point2, mode: ColludeMode) -> (Placement, f64) {
    let z = altitude_opt(s, q, s.p_static, mode);
    let (p, z) = power_threshold(s, q, z, mode);
    let pl = Placement::new(q, z, p);
    (pl, channel::placement_rate(s, &pl, mode))
}

/// One grid sample of a field map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub x: f64,
    pub y: f64,
    pub z_star: f64,
    pub p_star: f64,
    pub rate: f64,
}

pub fn field_map(s: &Scenario, mode: ColludeMode, region: Region, step: f64) -> Result<Vec<FieldSample>, PlacementError> {
    check(region, step)?;
    Ok(region
        .grid(step)
        .into_par_iter()
        .map(|q| {
            let (pl, rate) = best_at(s, q, mode);
            FieldSample {
                x: q.x,
                y: q.y,
                z_star: pl.z,
                p_star: pl.p,
                rate,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticSolution {
    pub placement: Placement,
    pub rate: f64,
    pub mode: ColludeMode,
    /// Field samples, when requested.
    pub altitude_profile: Option<Vec<FieldSample>>,
    /// `(step, best rate)` after each resolution level.
    pub levels: Vec<(f64, f64)>,
}

/// Higher rate first, then lexicographically smallest `(x, y)`.
fn better(a: &(Placement, f64), b: &(Placement, f64)) -> Ordering {
    b.1.total_cmp(&a.1)
        .then(a.0.q.x.total_cmp(&b.0.q.x))
        .then(a.0.q.y.total_cmp(&b.0.q.y))
}

fn best_of(s: &Scenario, mode: ColludeMode, pts: Vec<Point2>) -> (Placement, f64) {
    pts.into_par_iter()
        .map(|q| best_at(s, q, mode))
        .min_by(better)
        .expect("non-empty grid")
}

fn check(region: Region, step: f64) -> Result<(), PlacementError> {
    if !region.is_valid() {
        return Err(PlacementError::EmptyRegion);
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(PlacementError::BadStep(step));
    }
    Ok(())
}

/// Finest grid step of the multi-resolution search (m).
pub const FINEST_STEP: f64 = 0.5;

pub fn solve_static(
    s: &Scenario,
    mode: ColludeMode,
    region: Region,
    coarse_step: f64,
) -> Result<StaticSolution, PlacementError> {
    check(region, coarse_step)?;
    let mut step = coarse_step;
    let mut best = best_of(s, mode, region.grid(step));
    let mut levels = vec![(step, best.1)];
    while step > FINEST_STEP {
        let fine = step / 10.0;
        let center = best.0.q;
        let mut pts = Vec::with_capacity(21 * 21);
        for i in -10i32..=10 {
            for j in -10i32..=10 {
                let q = Point2::new(center.x + i as f64 * fine, center.y + j as f64 * fine);
                if region.contains(q) {
                    pts.push(q);
                }
            }
        }
        let cand = best_of(s, mode, pts);
        if better(&cand, &best) == Ordering::Less {
            best = cand;
        }
        step = fine;
        levels.push((step, best.1));
    }
    Ok(StaticSolution {
        placement: best.0,
        rate: best.1,
        mode,
        altitude_profile: None,
        levels,
    })
}
