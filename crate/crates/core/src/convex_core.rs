//! Log-barrier interior-point solver for smooth concave maximization.
//!
//! Maximizes a concave `f` subject to convex `c_i(x) ≤ 0` and optional box
//! bounds. Each centering step maximizes `t·f(x) + Σ log(−c_i(x))`; `t` grows
//! by `mu` until the duality-gap bound `m/t` drops below the tolerance.
//!
//! Centering uses damped Newton steps when every oracle supplies second
//! derivatives, solved with a banded Cholesky factorization (the trajectory
//! subproblems couple only neighbouring slots). Otherwise it falls back to
//! gradient ascent with the same backtracking line search.

use std::sync::Arc;

use thiserror::Error;

/// Value and sparse derivatives of a scalar function at a point.
///
/// `hess` lists upper-triangle entries `(i, j, v)` with `i ≤ j`; repeated
/// entries are summed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Local {
    pub value: f64,
    pub grad: Vec<(usize, f64)>,
    pub hess: Vec<(usize, usize, f64)>,
}

/// A smooth function oracle. Returning a non-finite value marks `x` as
/// outside the function's domain.
pub trait SmoothFn: Send + Sync {
    fn eval(&self, x: &[f64], want_hess: bool) -> Local;

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x, false).value
    }

    /// Whether `eval` fills `hess` when asked.
    fn has_hessian(&self) -> bool {
        true
    }
}

/// `constant + Σ coeff·x[idx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub constant: f64,
    pub coeffs: Vec<(usize, f64)>,
}

impl SmoothFn for Affine {
    fn eval(&self, x: &[f64], _want_hess: bool) -> Local {
        Local {
            value: self.value(x),
            grad: self.coeffs.clone(),
            hess: Vec::new(),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
    }
}

/// Oracle backed by a closure.
pub struct FnOracle<F> {
    f: F,
    hessian: bool,
}

impl<F> FnOracle<F>
where
    F: Fn(&[f64], bool) -> Local + Send + Sync,
{
    /// The closure must fill `hess` whenever its second argument is true.
    pub fn new(f: F) -> Self {
        Self { f, hessian: true }
    }

    /// Oracle that only provides values and gradients.
    pub fn first_order(f: F) -> Self {
        Self { f, hessian: false }
    }
}

impl<F> SmoothFn for FnOracle<F>
where
    F: Fn(&[f64], bool) -> Local + Send + Sync,
{
    fn eval(&self, x: &[f64], want_hess: bool) -> Local {
        (self.f)(x, want_hess && self.hessian)
    }

    fn has_hessian(&self) -> bool {
        self.hessian
    }
}

pub type Oracle = Arc<dyn SmoothFn>;

/// `maximize objective(x)` s.t. `c(x) ≤ 0` for every constraint and
/// `lower ≤ x ≤ upper` where given.
#[derive(Clone)]
pub struct ConcaveProgram {
    pub dim: usize,
    pub objective: Oracle,
    pub constraints: Vec<Oracle>,
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
    pub x0: Vec<f64>,
}

impl ConcaveProgram {
    pub fn new(dim: usize, objective: Oracle, x0: Vec<f64>) -> Self {
        Self {
            dim,
            objective,
            constraints: Vec::new(),
            lower: vec![None; dim],
            upper: vec![None; dim],
            x0,
        }
    }

    /// Number of inequality constraints, counting finite box bounds.
    pub fn num_inequalities(&self) -> usize {
        self.constraints.len()
            + self.lower.iter().filter(|b| b.is_some()).count()
            + self.upper.iter().filter(|b| b.is_some()).count()
    }

    /// Largest constraint value at `x`, including box bounds written as
    /// `l − x ≤ 0` and `x − u ≤ 0`. `-inf` when there are no constraints.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for c in &self.constraints {
            let v = c.value(x);
            worst = worst.max(if v.is_nan() { f64::INFINITY } else { v });
        }
        for i in 0..self.dim {
            if let Some(l) = self.lower[i] {
                worst = worst.max(l - x[i]);
            }
            if let Some(u) = self.upper[i] {
                worst = worst.max(x[i] - u);
            }
        }
        worst
    }

    fn strictly_feasible(&self, x: &[f64]) -> bool {
        if x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        for i in 0..self.dim {
            if self.lower[i].is_some_and(|l| x[i] <= l) || self.upper[i].is_some_and(|u| x[i] >= u)
            {
                return false;
            }
        }
        self.constraints.iter().all(|c| c.value(x) < 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Newton,
    GradientAscent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    /// Target duality-gap bound `m/t`.
    pub tol: f64,
    pub max_inner: usize,
    pub t0: f64,
    pub mu: f64,
    /// Newton is used only if every oracle provides Hessians.
    pub method: Method,
    pub trace: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_inner: 10_000,
            t0: 1.0,
            mu: 10.0,
            method: Method::Newton,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    IterationLimit,
    NumericFailure,
}

/// One inner iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub t: f64,
    pub barrier_value: f64,
    pub objective: f64,
    pub max_constraint: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub x_star: Vec<f64>,
    pub objective_value: f64,
    /// Duality-gap bound `m/t` plus the residual centering error.
    pub kkt_residual: f64,
    /// Total inner (centering) iterations.
    pub barrier_iterations: usize,
    pub outer_iterations: usize,
    pub status: SolveStatus,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("start point is not strictly feasible (max constraint value {0})")]
    InfeasibleStart(f64),
    #[error("start point has {got} entries, program dimension is {dim}")]
    DimensionMismatch { dim: usize, got: usize },
}

const ARMIJO_SLOPE: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const MIN_STEP: f64 = 1e-14;
/// Centering stops once half the squared Newton decrement is below this.
const CENTERING_TOL: f64 = 1e-10;
/// Newton decrements below this multiple of `eps·|barrier|` are rounding
/// noise: the predicted gain cannot be resolved in the barrier value.
const DECREMENT_NOISE: f64 = 1e3;

pub fn solve(prog: &ConcaveProgram, settings: &SolverSettings) -> Result<SolverReport, SolverError> {
    if prog.x0.len() != prog.dim
        || prog.lower.len() != prog.dim
        || prog.upper.len() != prog.dim
    {
        return Err(SolverError::DimensionMismatch {
            dim: prog.dim,
            got: prog.x0.len(),
        });
    }
    if !prog.strictly_feasible(&prog.x0) {
        return Err(SolverError::InfeasibleStart(prog.max_violation(&prog.x0)));
    }
    let newton = settings.method == Method::Newton
        && prog.objective.has_hessian()
        && prog.constraints.iter().all(|c| c.has_hessian());
    let mut state = Barrier {
        prog,
        x: prog.x0.clone(),
        t: settings.t0,
        trace: Vec::new(),
        record: settings.trace,
        inner: 0,
        last_step: 1.0,
    };
    let m = prog.num_inequalities() as f64;
    let mut outer = 0;
    loop {
        outer += 1;
        let centered = if newton {
            state.center_newton(settings.max_inner)
        } else {
            state.center_gradient(settings.max_inner, 0.1 * settings.tol)
        };
        let status = match centered {
            Centering::Done(residual) => {
                let gap = m / state.t;
                if gap + residual <= settings.tol {
                    Some((SolveStatus::Converged, gap + residual))
                } else {
                    None
                }
            }
            Centering::IterationLimit(residual) => {
                Some((SolveStatus::IterationLimit, m / state.t + residual))
            }
            Centering::Stalled(residual) => {
                Some((SolveStatus::NumericFailure, m / state.t + residual))
            }
        };
        if let Some((status, kkt_residual)) = status {
            let objective_value = prog.objective.value(&state.x);
            return Ok(SolverReport {
                x_star: state.x,
                objective_value,
                kkt_residual,
                barrier_iterations: state.inner,
                outer_iterations: outer,
                status,
                trace: state.trace,
            });
        }
        state.t *= settings.mu;
    }
}

enum Centering {
    Done(f64),
    IterationLimit(f64),
    Stalled(f64),
}

struct Barrier<'a> {
    prog: &'a ConcaveProgram,
    x: Vec<f64>,
    t: f64,
    trace: Vec<TraceEntry>,
    record: bool,
    inner: usize,
    last_step: f64,
}

impl Barrier<'_> {
    /// Barrier value, or `None` outside the strict interior.
    fn value(&self, x: &[f64]) -> Option<f64> {
        let p = self.prog;
        let mut acc = 0.0;
        for i in 0..p.dim {
            if let Some(l) = p.lower[i] {
                let s = x[i] - l;
                if !(s > 0.0) {
                    return None;
                }
                acc += s.ln();
            }
            if let Some(u) = p.upper[i] {
                let s = u - x[i];
                if !(s > 0.0) {
                    return None;
                }
                acc += s.ln();
            }
        }
        for c in &p.constraints {
            let v = c.value(x);
            if !(v < 0.0) {
                return None;
            }
            acc += (-v).ln();
        }
        let f = p.objective.value(x);
        if !f.is_finite() {
            return None;
        }
        let total = self.t * f + acc;
        total.is_finite().then_some(total)
    }

    /// Gradient of the barrier function and, if requested, its negated
    /// Hessian in banded lower storage.
    fn derivatives(&self, x: &[f64], want_hess: bool) -> (Vec<f64>, Option<Band>) {
        let p = self.prog;
        let n = p.dim;
        let mut grad = vec![0.0; n];
        let obj = p.objective.eval(x, want_hess);
        for &(i, g) in &obj.grad {
            grad[i] += self.t * g;
        }
        let cons: Vec<Local> = p.constraints.iter().map(|c| c.eval(x, want_hess)).collect();
        for c in &cons {
            let inv = 1.0 / (-c.value);
            for &(i, g) in &c.grad {
                grad[i] -= g * inv;
            }
        }
        let mut diag_box = vec![0.0; n];
        for i in 0..n {
            if let Some(l) = p.lower[i] {
                let s = x[i] - l;
                grad[i] += 1.0 / s;
                diag_box[i] += 1.0 / (s * s);
            }
            if let Some(u) = p.upper[i] {
                let s = u - x[i];
                grad[i] -= 1.0 / s;
                diag_box[i] += 1.0 / (s * s);
            }
        }
        if !want_hess {
            return (grad, None);
        }

        let mut bw = 0;
        for &(i, j, _) in &obj.hess {
            bw = bw.max(i.abs_diff(j));
        }
        for c in &cons {
            let (mut lo, mut hi) = (usize::MAX, 0);
            for &(i, _) in &c.grad {
                lo = lo.min(i);
                hi = hi.max(i);
            }
            if lo <= hi {
                bw = bw.max(hi - lo);
            }
            for &(i, j, _) in &c.hess {
                bw = bw.max(i.abs_diff(j));
            }
        }
        let mut band = Band::new(n, bw);
        for &(i, j, h) in &obj.hess {
            band.add(i, j, -self.t * h);
        }
        for c in &cons {
            let inv = 1.0 / (-c.value);
            for &(i, j, h) in &c.hess {
                band.add(i, j, h * inv);
            }
            let inv2 = inv * inv;
            for (a, &(i, gi)) in c.grad.iter().enumerate() {
                for &(j, gj) in &c.grad[a..] {
                    band.add(i, j, gi * gj * inv2);
                }
            }
        }
        for (i, d) in diag_box.into_iter().enumerate() {
            band.add(i, i, d);
        }
        (grad, Some(band))
    }

    fn push_trace(&mut self, value: f64, step: f64) {
        if self.record {
            self.trace.push(TraceEntry {
                t: self.t,
                barrier_value: value,
                objective: self.prog.objective.value(&self.x),
                max_constraint: self.prog.max_violation(&self.x),
                step,
            });
        }
    }

    /// Backtracking along `dir` from `self.x`, starting at `step`. Accepts
    /// the first feasible point that satisfies the Armijo condition up to
    /// rounding noise in the barrier value.
    fn line_search(&self, phi: f64, dir: &[f64], slope: f64, mut step: f64) -> Option<(Vec<f64>, f64, f64)> {
        let noise = 8.0 * f64::EPSILON * phi.abs().max(1.0);
        let mut trial = vec![0.0; self.x.len()];
        while step >= MIN_STEP {
            for i in 0..trial.len() {
                trial[i] = self.x[i] + step * dir[i];
            }
            if let Some(v) = self.value(&trial) {
                if v >= phi + ARMIJO_SLOPE * step * slope - noise {
                    return Some((trial, v, step));
                }
            }
            step *= SHRINK;
        }
        None
    }

    fn center_newton(&mut self, max_inner: usize) -> Centering {
        let mut phi = self.value(&self.x).expect("iterate left the interior");
        loop {
            let (grad, band) = self.derivatives(&self.x, true);
            let dir = band.expect("hessian requested").solve_pd(&grad);
            let decrement: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
            let residual = decrement.max(0.0) / self.t;
            let floor = (2.0 * CENTERING_TOL).max(DECREMENT_NOISE * f64::EPSILON * phi.abs());
            if decrement <= floor {
                return Centering::Done(residual);
            }
            if self.inner >= max_inner {
                return Centering::IterationLimit(residual);
            }
            self.inner += 1;
            match self.line_search(phi, &dir, decrement, 1.0) {
                Some((x, v, step)) => {
                    self.x = x;
                    phi = v;
                    self.push_trace(v, step);
                }
                None => {
                    // Decrement too small to resolve in floating point.
                    if decrement <= 1e-6 {
                        return Centering::Done(residual);
                    }
                    return Centering::Stalled(residual);
                }
            }
        }
    }

    fn directional_slope(&self, x: &[f64], dir: &[f64]) -> f64 {
        let (grad, _) = self.derivatives(x, false);
        grad.iter().zip(dir).map(|(g, d)| g * d).sum()
    }

    /// Gradient ascent with a line search driven by the sign of the
    /// directional derivative. The barrier is concave along the ray, so any
    /// step with positive slope at its end point increases the barrier value;
    /// unlike value comparisons this stays reliable when the increase is
    /// below rounding noise.
    fn center_gradient(&mut self, max_inner: usize, tol: f64) -> Centering {
        loop {
            let (grad, _) = self.derivatives(&self.x, false);
            let slope0: f64 = grad.iter().map(|g| g * g).sum();
            let residual = slope0.sqrt() / self.t;
            if residual <= tol {
                return Centering::Done(residual);
            }
            if self.inner >= max_inner {
                return Centering::IterationLimit(residual);
            }
            self.inner += 1;
            let x0 = self.x.clone();
            let g_max = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            let x_max = x0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            // Smallest step that still moves some coordinate.
            let min_step = f64::EPSILON * (1.0 + x_max) / g_max;
            let point = |s: f64| -> Vec<f64> { x0.iter().zip(&grad).map(|(x, g)| x + s * g).collect() };
            // Bracket: slope positive at `lo`, non-positive or infeasible at `hi`.
            let mut lo = 0.0;
            let mut hi = (self.last_step * 4.0).max(min_step);
            loop {
                let trial = point(hi);
                if self.value(&trial).is_none() || self.directional_slope(&trial, &grad) <= 0.0 {
                    break;
                }
                lo = hi;
                hi *= 2.0;
                if hi > 1e12 {
                    break;
                }
            }
            for _ in 0..60 {
                if lo > 0.0 && hi - lo <= 0.25 * lo {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if mid < min_step {
                    break;
                }
                let trial = point(mid);
                let feasible = self.value(&trial).is_some();
                let slope = if feasible { self.directional_slope(&trial, &grad) } else { f64::NAN };
                if feasible && slope > 0.0 {
                    lo = mid;
                    if slope <= 0.1 * slope0 {
                        break;
                    }
                } else {
                    hi = mid;
                }
            }
            if lo == 0.0 {
                return Centering::Stalled(residual);
            }
            self.x = point(lo);
            self.last_step = lo;
            let v = self.value(&self.x).unwrap_or(f64::NAN);
            self.push_trace(v, lo);
        }
    }
}

/// Symmetric band matrix, lower storage: `data[i*(bw+1) + d] = A[i][i-d]`.
struct Band {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl Band {
    fn new(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        r * (self.bw + 1) + (r - c)
    }

    #[inline]
    fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// Solves `A x = b` for positive (semi)definite `A` using a Jacobi-scaled
    /// band Cholesky factorization, adding diagonal regularization until the
    /// factorization succeeds.
    fn solve_pd(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let w = self.bw + 1;
        let scale: Vec<f64> = (0..n)
            .map(|i| {
                let d = self.data[i * w];
                if d > 0.0 && d.is_finite() {
                    1.0 / d.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let mut scaled = self.data.clone();
        for i in 0..n {
            for d in 0..w.min(i + 1) {
                scaled[i * w + d] *= scale[i] * scale[i - d];
            }
        }
        let mut reg = 0.0;
        loop {
            let mut l = scaled.clone();
            if reg > 0.0 {
                for i in 0..n {
                    l[i * w] += reg;
                }
            }
            if band_cholesky(&mut l, n, self.bw) {
                let mut y: Vec<f64> = (0..n).map(|i| b[i] * scale[i]).collect();
                band_solve(&l, n, self.bw, &mut y);
                for i in 0..n {
                    y[i] *= scale[i];
                }
                return y;
            }
            reg = if reg == 0.0 { 1e-12 } else { reg * 100.0 };
        }
    }
}

fn band_cholesky(a: &mut [f64], n: usize, bw: usize) -> bool {
    let w = bw + 1;
    for j in 0..n {
        let k0 = j.saturating_sub(bw);
        let mut s = a[j * w];
        for k in k0..j {
            let v = a[j * w + (j - k)];
            s -= v * v;
        }
        if !(s > 0.0) || !s.is_finite() {
            return false;
        }
        let ljj = s.sqrt();
        a[j * w] = ljj;
        for i in (j + 1)..n.min(j + bw + 1) {
            let k0 = i.saturating_sub(bw);
            let mut s = a[i * w + (i - j)];
            for k in k0..j {
                s -= a[i * w + (i - k)] * a[j * w + (j - k)];
            }
            a[i * w + (i - j)] = s / ljj;
        }
    }
    true
}

fn band_solve(l: &[f64], n: usize, bw: usize, y: &mut [f64]) {
    let w = bw + 1;
    for i in 0..n {
        let mut s = y[i];
        for k in i.saturating_sub(bw)..i {
            s -= l[i * w + (i - k)] * y[k];
        }
        y[i] = s / l[i * w];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n.min(i + bw + 1) {
            s -= l[k * w + (k - i)] * y[k];
        }
        y[i] = s / l[i * w];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(center: Vec<f64>) -> Oracle {
        Arc::new(FnOracle::new(move |x: &[f64], h: bool| Local {
            value: -x.iter().zip(&center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>(),
            grad: x
                .iter()
                .zip(&center)
                .enumerate()
                .map(|(i, (a, c))| (i, -2.0 * (a - c)))
                .collect(),
            hess: if h {
                (0..x.len()).map(|i| (i, i, -2.0)).collect()
            } else {
                Vec::new()
            },
        }))
    }

    fn log_utility(first_order: bool) -> Oracle {
        let f = |x: &[f64], h: bool| Local {
            value: x[0].ln_1p() + x[1].ln_1p(),
            grad: vec![(0, 1.0 / (1.0 + x[0])), (1, 1.0 / (1.0 + x[1]))],
            hess: if h {
                vec![
                    (0, 0, -1.0 / ((1.0 + x[0]) * (1.0 + x[0]))),
                    (1, 1, -1.0 / ((1.0 + x[1]) * (1.0 + x[1]))),
                ]
            } else {
                Vec::new()
            },
        };
        if first_order {
            Arc::new(FnOracle::first_order(f))
        } else {
            Arc::new(FnOracle::new(f))
        }
    }

    fn budget_program(first_order: bool) -> ConcaveProgram {
        let mut p = ConcaveProgram::new(2, log_utility(first_order), vec![0.2, 0.3]);
        p.constraints.push(Arc::new(Affine {
            constant: -1.0,
            coeffs: vec![(0, 1.0), (1, 1.0)],
        }));
        p.lower = vec![Some(0.0), Some(0.0)];
        p
    }

    #[test]
    fn unconstrained_quadratic() {
        let c = vec![1.5, -2.0, 3.25];
        let prog = ConcaveProgram::new(3, quad(c.clone()), vec![0.0; 3]);
        for method in [Method::Newton, Method::GradientAscent] {
            let r = solve(&prog, &SolverSettings { method, ..Default::default() }).unwrap();
            assert_eq!(r.status, SolveStatus::Converged);
            for (a, b) in r.x_star.iter().zip(&c) {
                assert!((a - b).abs() < 1e-6, "{method:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn linear_objective_hits_box_bound() {
        let obj: Oracle = Arc::new(Affine {
            constant: 0.0,
            coeffs: vec![(0, 1.0)],
        });
        let mut prog = ConcaveProgram::new(1, obj, vec![1.0]);
        prog.lower = vec![Some(0.0)];
        prog.upper = vec![Some(2.0)];
        for method in [Method::Newton, Method::GradientAscent] {
            let r = solve(&prog, &SolverSettings { method, ..Default::default() }).unwrap();
            assert_eq!(r.status, SolveStatus::Converged, "{method:?}");
            assert!((r.x_star[0] - 2.0).abs() <= 1e-6, "{method:?}: {}", r.x_star[0]);
            assert!(r.kkt_residual <= 1e-6);
        }
    }

    #[test]
    fn log_utility_with_budget_matches_grid_oracle() {
        // Dense grid on the simplex edge and interior at step 1e-3.
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for i in 0..=1000 {
            for j in 0..=(1000 - i) {
                let (a, b) = (i as f64 * 1e-3, j as f64 * 1e-3);
                let v = a.ln_1p() + b.ln_1p();
                if v > best.0 {
                    best = (v, a, b);
                }
            }
        }
        assert!((best.1 - 0.5).abs() < 1e-9 && (best.2 - 0.5).abs() < 1e-9);
        for first_order in [false, true] {
            let prog = budget_program(first_order);
            let r = solve(&prog, &SolverSettings { trace: true, ..Default::default() }).unwrap();
            assert_eq!(r.status, SolveStatus::Converged);
            assert!((r.x_star[0] - 0.5).abs() < 1e-4 && (r.x_star[1] - 0.5).abs() < 1e-4);
            let f_opt = 2.0 * 1.5f64.ln();
            assert!((r.objective_value - f_opt).abs() <= 1e-6 * (1.0 + f_opt));
            assert!(prog.max_violation(&r.x_star) <= 1e-8);
            // Interior invariant and per-centering ascent.
            let mut prev: Option<TraceEntry> = None;
            for e in &r.trace {
                assert!(e.max_constraint < 0.0);
                if let Some(p) = prev {
                    if p.t == e.t {
                        assert!(e.barrier_value >= p.barrier_value - 1e-12 * p.barrier_value.abs().max(1.0));
                    }
                }
                prev = Some(*e);
            }
        }
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let mut prog = budget_program(false);
        prog.x0 = vec![0.7, 0.7];
        assert!(matches!(solve(&prog, &SolverSettings::default()), Err(SolverError::InfeasibleStart(_))));
        prog.x0 = vec![0.0, 0.5];
        assert!(matches!(solve(&prog, &SolverSettings::default()), Err(SolverError::InfeasibleStart(_))));
    }

    #[test]
    fn iteration_limit_is_reported() {
        let prog = budget_program(true);
        let r = solve(&prog, &SolverSettings { max_inner: 3, ..Default::default() }).unwrap();
        assert_eq!(r.status, SolveStatus::IterationLimit);
        assert_eq!(r.barrier_iterations, 3);
    }

    #[test]
    fn band_solver_matches_dense_solution() {
        // Tridiagonal-plus-second-band SPD system.
        let n = 9;
        let bw = 2;
        let mut band = Band::new(n, bw);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            band.add(i, i, 6.0 + i as f64);
            dense[i][i] = 6.0 + i as f64;
            if i + 1 < n {
                band.add(i, i + 1, -1.5);
                dense[i][i + 1] = -1.5;
                dense[i + 1][i] = -1.5;
            }
            if i + 2 < n {
                band.add(i + 2, i, 0.5);
                dense[i][i + 2] = 0.5;
                dense[i + 2][i] = 0.5;
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 1.0).collect();
        let x = band.solve_pd(&b);
        for i in 0..n {
            let ax: f64 = (0..n).map(|j| dense[i][j] * x[j]).sum();
            assert!((ax - b[i]).abs() < 1e-12);
        }
    }
}
