//! Problem instances and the scenario file format.
//!
//! All quantities are stored in linear units: meters, seconds, milliwatts and
//! dimensionless power gains. Logarithmic inputs (`*_dbm`, `*_db` keys) are
//! converted once while parsing.
//!
//! The file format is flat UTF-8 `key = value`, one key per line, `#` starts a
//! comment. Coordinates are written `x,y`; lists of coordinates are
//! semicolon separated:
//!
//! ```text
//! gr_positions = -100,300; 0,300; 100,300
//! eav_positions = -50,180; 0,180
//! alpha = 2
//! beta0_db = -30
//! sigma2_dbm = -80
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;

use thiserror::Error;

use crate::geom::Point2;
use crate::traj_sca::Trajectory;

/// Absolute tolerance (meters) used when checking trajectory constraints.
pub const TRAJECTORY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("infeasible scenario: {0}")]
    Infeasible(String),
}

/// Immutable problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub gr_positions: Vec<Point2>,
    pub eav_positions: Vec<Point2>,
    pub alpha: f64,
    /// Reference channel power gain at 1 m (linear).
    pub beta0: f64,
    /// Receiver noise power in mW.
    pub sigma2: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// Maximum transmit power of the quasi-stationary UAV, mW.
    pub p_static: f64,
    pub p_ave: f64,
    pub p_peak: f64,
    /// Maximum horizontal speed, m/s.
    pub v_h: f64,
    pub v_up: f64,
    pub v_down: f64,
    /// Slot duration, s.
    pub t_s: f64,
    pub n_slots: usize,
    pub q_start: Point2,
    pub q_end: Point2,
    pub z_start: f64,
    pub z_end: f64,
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl Scenario {
    /// The evaluation setup used throughout the experiments: three GRs on a
    /// line, two eavesdroppers in front of them, 30 dBm power budget.
    pub fn reference(n_slots: usize) -> Scenario {
        let p = db_to_linear(30.0);
        Scenario {
            gr_positions: vec![
                Point2::new(-100.0, 300.0),
                Point2::new(0.0, 300.0),
                Point2::new(100.0, 300.0),
            ],
            eav_positions: vec![Point2::new(-50.0, 180.0), Point2::new(0.0, 180.0)],
            alpha: 2.0,
            beta0: db_to_linear(-30.0),
            sigma2: db_to_linear(-80.0),
            z_min: 150.0,
            z_max: 250.0,
            p_static: p,
            p_ave: p,
            p_peak: 4.0 * p,
            v_h: 25.0,
            v_up: 4.0,
            v_down: 6.0,
            t_s: 0.5,
            n_slots,
            q_start: Point2::new(-305.0, 800.0),
            q_end: Point2::new(-80.0, -200.0),
            z_start: 200.0,
            z_end: 200.0,
        }
    }

    pub fn num_grs(&self) -> usize {
        self.gr_positions.len()
    }

    pub fn num_eavs(&self) -> usize {
        self.eav_positions.len()
    }

    /// Maximum horizontal displacement per slot.
    pub fn v_step(&self) -> f64 {
        self.v_h * self.t_s
    }

    pub fn v_up_step(&self) -> f64 {
        self.v_up * self.t_s
    }

    pub fn v_down_step(&self) -> f64 {
        self.v_down * self.t_s
    }

    /// Mission duration `N * t_s`.
    pub fn duration(&self) -> f64 {
        self.n_slots as f64 * self.t_s
    }

    /// Same instance with a different slot count, revalidated.
    pub fn with_slots(&self, n_slots: usize) -> Result<Scenario, ScenarioError> {
        let mut s = self.clone();
        s.n_slots = n_slots;
        s.validate()?;
        Ok(s)
    }

    /// Smallest slot count for which both endpoints are mutually reachable.
    pub fn min_slots(&self) -> usize {
        let horiz = self.q_start.dist(self.q_end) / self.v_step();
        let dz = self.z_end - self.z_start;
        let vert = if dz >= 0.0 {
            dz / self.v_up_step()
        } else {
            -dz / self.v_down_step()
        };
        // (N + 1) segments must cover the larger requirement.
        let segs = horiz.max(vert);
        let mut n = (segs.ceil() as usize).saturating_sub(1);
        while (n as f64 + 1.0) < segs * (1.0 - 1e-12) {
            n += 1;
        }
        n.max(1)
    }

    /// Checks every invariant of the instance.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |msg: &str| Err(ScenarioError::Invalid(msg.to_string()));
        if self.gr_positions.is_empty() {
            return invalid("K ≥ 1");
        }
        if self.eav_positions.is_empty() {
            return invalid("J ≥ 1");
        }
        let all_finite = self
            .gr_positions
            .iter()
            .chain(&self.eav_positions)
            .chain([&self.q_start, &self.q_end])
            .all(|p| p.is_finite());
        if !all_finite {
            return invalid("positions must be finite");
        }
        let scalars = [
            self.alpha,
            self.beta0,
            self.sigma2,
            self.z_min,
            self.z_max,
            self.p_static,
            self.p_ave,
            self.p_peak,
            self.v_h,
            self.v_up,
            self.v_down,
            self.t_s,
            self.z_start,
            self.z_end,
        ];
        if scalars.iter().any(|v| !v.is_finite()) {
            return invalid("all numeric fields must be finite");
        }
        if !(2.0..=4.0).contains(&self.alpha) {
            return invalid("2 ≤ alpha ≤ 4");
        }
        if self.z_min <= 0.0 {
            return invalid("0 < z_min");
        }
        if self.z_min > self.z_max {
            return invalid("z_min ≤ z_max");
        }
        if !(self.z_min..=self.z_max).contains(&self.z_start) {
            return invalid("z_min ≤ z_start ≤ z_max");
        }
        if !(self.z_min..=self.z_max).contains(&self.z_end) {
            return invalid("z_min ≤ z_end ≤ z_max");
        }
        if self.p_ave <= 0.0 {
            return invalid("0 < p_ave");
        }
        if self.p_ave > self.p_peak {
            return invalid("p_ave ≤ p_peak");
        }
        if self.p_static <= 0.0 {
            return invalid("p_static > 0");
        }
        if self.sigma2 <= 0.0 {
            return invalid("sigma2 > 0");
        }
        if self.beta0 <= 0.0 {
            return invalid("beta0 > 0");
        }
        if self.v_h <= 0.0 || self.v_up <= 0.0 || self.v_down <= 0.0 {
            return invalid("speeds must be positive");
        }
        if self.t_s <= 0.0 {
            return invalid("t_s > 0");
        }
        if self.n_slots == 0 {
            return invalid("n_slots ≥ 1");
        }

        let segs = self.n_slots as f64 + 1.0;
        let horiz = self.q_start.dist(self.q_end);
        if horiz > segs * self.v_step() * (1.0 + 1e-12) {
            return Err(ScenarioError::Infeasible(format!(
                "‖q_end − q_start‖ = {horiz} exceeds (N+1)·v_h·t_s = {}",
                segs * self.v_step()
            )));
        }
        let dz = self.z_end - self.z_start;
        if dz > segs * self.v_up_step() * (1.0 + 1e-12) {
            return Err(ScenarioError::Infeasible(format!(
                "ascent {dz} exceeds (N+1)·v_up·t_s = {}",
                segs * self.v_up_step()
            )));
        }
        if -dz > segs * self.v_down_step() * (1.0 + 1e-12) {
            return Err(ScenarioError::Infeasible(format!(
                "descent {} exceeds (N+1)·v_down·t_s = {}",
                -dz,
                segs * self.v_down_step()
            )));
        }
        Ok(())
    }

    /// Loads and validates a scenario file.
    pub fn load(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Scenario::parse(&text)
    }

    /// Parses and validates the key/value text format.
    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ScenarioError::Parse {
                line: line_no,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(ScenarioError::Parse {
                    line: line_no,
                    msg: format!("unknown key `{key}`"),
                });
            }
            if entries.contains_key(&key) {
                return Err(ScenarioError::Parse {
                    line: line_no,
                    msg: format!("duplicate key `{key}`"),
                });
            }
            entries.insert(key, (line_no, value.trim().to_string()));
        }

        let fields = Fields { entries };
        let scenario = Scenario {
            gr_positions: fields.points("gr_positions")?,
            eav_positions: fields.points("eav_positions")?,
            alpha: fields.scalar("alpha")?,
            beta0: fields.linear_or_log("beta0", "beta0_db")?,
            sigma2: fields.linear_or_log("sigma2", "sigma2_dbm")?,
            z_min: fields.scalar("z_min")?,
            z_max: fields.scalar("z_max")?,
            p_static: fields.linear_or_log("p_static", "p_static_dbm")?,
            p_ave: fields.linear_or_log("p_ave", "p_ave_dbm")?,
            p_peak: fields.linear_or_log("p_peak", "p_peak_dbm")?,
            v_h: fields.scalar("v_h")?,
            v_up: fields.scalar("v_up")?,
            v_down: fields.scalar("v_down")?,
            t_s: fields.scalar("t_s")?,
            n_slots: fields.count("n_slots")?,
            q_start: fields.point("q_start")?,
            q_end: fields.point("q_end")?,
            z_start: fields.scalar("z_start")?,
            z_end: fields.scalar("z_end")?,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Serializes with linear keys; `parse(to_file_string())` reproduces the
    /// instance exactly.
    pub fn to_file_string(&self) -> String {
        let pts = |v: &[Point2]| {
            v.iter()
                .map(|p| format!("{},{}", p.x, p.y))
                .collect::<Vec<_>>()
                .join("; ")
        };
        let mut out = String::new();
        let _ = writeln!(out, "gr_positions = {}", pts(&self.gr_positions));
        let _ = writeln!(out, "eav_positions = {}", pts(&self.eav_positions));
        for (key, value) in [
            ("alpha", self.alpha),
            ("beta0", self.beta0),
            ("sigma2", self.sigma2),
            ("z_min", self.z_min),
            ("z_max", self.z_max),
            ("p_static", self.p_static),
            ("p_ave", self.p_ave),
            ("p_peak", self.p_peak),
            ("v_h", self.v_h),
            ("v_up", self.v_up),
            ("v_down", self.v_down),
            ("t_s", self.t_s),
        ] {
            let _ = writeln!(out, "{key} = {value}");
        }
        let _ = writeln!(out, "n_slots = {}", self.n_slots);
        let _ = writeln!(out, "q_start = {},{}", self.q_start.x, self.q_start.y);
        let _ = writeln!(out, "q_end = {},{}", self.q_end.x, self.q_end.y);
        let _ = writeln!(out, "z_start = {}", self.z_start);
        let _ = writeln!(out, "z_end = {}", self.z_end);
        out
    }
}

const KNOWN_KEYS: &[&str] = &[
    "gr_positions",
    "eav_positions",
    "alpha",
    "beta0",
    "beta0_db",
    "sigma2",
    "sigma2_dbm",
    "z_min",
    "z_max",
    "p_static",
    "p_static_dbm",
    "p_ave",
    "p_ave_dbm",
    "p_peak",
    "p_peak_dbm",
    "v_h",
    "v_up",
    "v_down",
    "t_s",
    "n_slots",
    "q_start",
    "q_end",
    "z_start",
    "z_end",
];

struct Fields {
    entries: BTreeMap<String, (usize, String)>,
}

impl Fields {
    fn raw(&self, key: &str) -> Result<(usize, &str), ScenarioError> {
        self.entries
            .get(key)
            .map(|(line, v)| (*line, v.as_str()))
            .ok_or_else(|| ScenarioError::Parse {
                line: 0,
                msg: format!("missing key `{key}`"),
            })
    }

    fn scalar(&self, key: &str) -> Result<f64, ScenarioError> {
        let (line, v) = self.raw(key)?;
        parse_f64(v, line, key)
    }

    fn count(&self, key: &str) -> Result<usize, ScenarioError> {
        let (line, v) = self.raw(key)?;
        v.parse::<usize>().map_err(|e| ScenarioError::Parse {
            line,
            msg: format!("`{key}`: {e}"),
        })
    }

    fn linear_or_log(&self, linear: &str, log: &str) -> Result<f64, ScenarioError> {
        match (self.entries.contains_key(linear), self.entries.contains_key(log)) {
            (true, true) => {
                let (line, _) = self.raw(log)?;
                Err(ScenarioError::Parse {
                    line,
                    msg: format!("both `{linear}` and `{log}` given"),
                })
            }
            (true, false) => self.scalar(linear),
            (false, true) => self.scalar(log).map(db_to_linear),
            (false, false) => Err(ScenarioError::Parse {
                line: 0,
                msg: format!("missing key `{linear}` (or `{log}`)"),
            }),
        }
    }

    fn point(&self, key: &str) -> Result<Point2, ScenarioError> {
        let (line, v) = self.raw(key)?;
        parse_point(v, line, key)
    }

    fn points(&self, key: &str) -> Result<Vec<Point2>, ScenarioError> {
        let (line, v) = self.raw(key)?;
        v.split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_point(s, line, key))
            .collect()
    }
}

fn parse_f64(v: &str, line: usize, key: &str) -> Result<f64, ScenarioError> {
    v.trim().parse::<f64>().map_err(|e| ScenarioError::Parse {
        line,
        msg: format!("`{key}`: cannot parse `{v}`: {e}"),
    })
}

fn parse_point(v: &str, line: usize, key: &str) -> Result<Point2, ScenarioError> {
    let (x, y) = v.split_once(',').ok_or_else(|| ScenarioError::Parse {
        line,
        msg: format!("`{key}`: expected `x,y`, got `{v}`"),
    })?;
    Ok(Point2::new(parse_f64(x, line, key)?, parse_f64(y, line, key)?))
}

/// First constraint a trajectory violates.
#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryViolation {
    WrongLength { expected: usize, got: usize },
    NonFinite { n: usize },
    Endpoint { n: usize },
    HorizontalStep { n: usize, step: f64, limit: f64 },
    Ascent { n: usize, climb: f64, limit: f64 },
    Descent { n: usize, drop: f64, limit: f64 },
    Altitude { n: usize, z: f64 },
}

impl fmt::Display for TrajectoryViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::WrongLength { expected, got } => {
                write!(f, "expected {expected} waypoints, got {got}")
            }
            Self::NonFinite { n } => write!(f, "waypoint n={n} is not finite"),
            Self::Endpoint { n } => write!(f, "waypoint n={n} differs from the scenario endpoint"),
            Self::HorizontalStep { n, step, limit } => {
                write!(f, "horizontal step n={n} exceeds V ({step} > {limit})")
            }
            Self::Ascent { n, climb, limit } => {
                write!(f, "ascent at step n={n} exceeds V_up ({climb} > {limit})")
            }
            Self::Descent { n, drop, limit } => {
                write!(f, "descent at step n={n} exceeds V_down ({drop} > {limit})")
            }
            Self::Altitude { n, z } => write!(f, "altitude z[{n}] = {z} outside [z_min, z_max]"),
        }
    }
}

impl std::error::Error for TrajectoryViolation {}

/// Checks mobility, vertical-speed and altitude constraints and the fixed
/// endpoints. Step `n` is the move from waypoint `n` to `n + 1`.
pub fn validate_trajectory(s: &Scenario, traj: &Trajectory) -> Result<(), TrajectoryViolation> {
    let expected = s.n_slots + 2;
    if traj.q.len() != expected || traj.z.len() != expected {
        return Err(TrajectoryViolation::WrongLength {
            expected,
            got: traj.q.len().min(traj.z.len()),
        });
    }
    for n in 0..expected {
        if !traj.q[n].is_finite() || !traj.z[n].is_finite() {
            return Err(TrajectoryViolation::NonFinite { n });
        }
    }
    let last = expected - 1;
    if traj.q[0] != s.q_start || traj.z[0] != s.z_start {
        return Err(TrajectoryViolation::Endpoint { n: 0 });
    }
    if traj.q[last] != s.q_end || traj.z[last] != s.z_end {
        return Err(TrajectoryViolation::Endpoint { n: last });
    }
    let (v, v_up, v_down) = (s.v_step(), s.v_up_step(), s.v_down_step());
    for n in 0..last {
        let step = traj.q[n + 1].dist(traj.q[n]);
        if step > v + TRAJECTORY_TOL {
            return Err(TrajectoryViolation::HorizontalStep { n, step, limit: v });
        }
        let dz = traj.z[n + 1] - traj.z[n];
        if dz > v_up + TRAJECTORY_TOL {
            return Err(TrajectoryViolation::Ascent {
                n,
                climb: dz,
                limit: v_up,
            });
        }
        if -dz > v_down + TRAJECTORY_TOL {
            return Err(TrajectoryViolation::Descent {
                n,
                drop: -dz,
                limit: v_down,
            });
        }
    }
    for n in 1..last {
        let z = traj.z[n];
        if z < s.z_min - TRAJECTORY_TOL || z > s.z_max + TRAJECTORY_TOL {
            return Err(TrajectoryViolation::Altitude { n, z });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE_FILE: &str = "\
# evaluation setup
gr_positions = -100,300; 0,300; 100,300
eav_positions = -50,180; 0,180
alpha = 2
beta0_db = -30
sigma2_dbm = -80
z_min = 150
z_max = 250
p_static_dbm = 30
p_ave_dbm = 30
p_peak = 4000
v_h = 25
v_up = 4
v_down = 6
t_s = 0.5
n_slots = 100
q_start = -305,800
q_end = -80,-200
z_start = 200
z_end = 200
";

    #[test]
    fn parses_reference_file_in_linear_units() {
        let s = Scenario::parse(REFERENCE_FILE).unwrap();
        assert_eq!(s.num_grs(), 3);
        assert_eq!(s.num_eavs(), 2);
        assert!((s.beta0 - 1e-3).abs() < 1e-18);
        assert!((s.sigma2 - 1e-8).abs() < 1e-22);
        assert!((s.p_ave - 1000.0).abs() < 1e-9);
        assert_eq!(s.alpha, 2.0);
        let r = Scenario::reference(100);
        assert_eq!(s.gr_positions, r.gr_positions);
        assert_eq!(s.q_end, r.q_end);
    }

    #[test]
    fn inverted_altitude_bounds_are_rejected() {
        let text = REFERENCE_FILE
            .replace("z_min = 150", "z_min = 300")
            .replace("z_start = 200", "z_start = 260")
            .replace("z_end = 200", "z_end = 260");
        match Scenario::parse(&text) {
            Err(ScenarioError::Invalid(msg)) => assert!(msg.contains("z_min ≤ z_max"), "{msg}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unreachable_endpoint_is_infeasible() {
        let text = REFERENCE_FILE
            .replace("q_start = -305,800", "q_start = 0,0")
            .replace("q_end = -80,-200", "q_end = 10000,0")
            .replace("n_slots = 100", "n_slots = 10");
        assert!(matches!(
            Scenario::parse(&text),
            Err(ScenarioError::Infeasible(_))
        ));
    }

    #[test]
    fn linear_and_log_keys_are_exclusive() {
        let text = format!("{REFERENCE_FILE}p_ave = 1000\n");
        assert!(matches!(
            Scenario::parse(&text),
            Err(ScenarioError::Parse { .. })
        ));
    }

    #[test]
    fn unknown_and_missing_keys() {
        let text = format!("{REFERENCE_FILE}colour = blue\n");
        assert!(matches!(Scenario::parse(&text), Err(ScenarioError::Parse { .. })));
        let text = REFERENCE_FILE.replace("alpha = 2\n", "");
        assert!(matches!(Scenario::parse(&text), Err(ScenarioError::Parse { .. })));
    }

    #[test]
    fn minimum_slot_count_for_reference_geometry() {
        // 1025 m at 12.5 m per step needs 82 segments.
        let s = Scenario::reference(100);
        assert_eq!(s.min_slots(), 81);
        assert!(s.with_slots(81).is_ok());
        assert!(matches!(s.with_slots(80), Err(ScenarioError::Infeasible(_))));
    }

    fn straight(s: &Scenario, z: f64) -> Trajectory {
        let last = s.n_slots + 1;
        let q = (0..=last)
            .map(|n| s.q_start.lerp(s.q_end, n as f64 / last as f64))
            .collect::<Vec<_>>();
        let mut zs = vec![z; last + 1];
        zs[0] = s.z_start;
        zs[last] = s.z_end;
        let mut q = q;
        q[last] = s.q_end;
        Trajectory { q, z: zs }
    }

    #[test]
    fn straight_line_is_feasible() {
        let s = Scenario::reference(100);
        assert_eq!(validate_trajectory(&s, &straight(&s, 200.0)), Ok(()));
    }

    #[test]
    fn oversized_horizontal_step_is_reported() {
        let s = Scenario {
            q_start: Point2::new(0.0, 0.0),
            q_end: Point2::new(0.0, 0.0),
            n_slots: 4,
            ..Scenario::reference(4)
        };
        let mut t = straight(&s, 200.0);
        t.q[2] = Point2::new(13.0, 0.0);
        t.q[3] = Point2::new(6.0, 0.0);
        let err = validate_trajectory(&s, &t).unwrap_err();
        assert!(matches!(err, TrajectoryViolation::HorizontalStep { n: 1, .. }));
        assert!(err.to_string().contains("horizontal step n=1 exceeds V"));
    }

    #[test]
    fn oversized_ascent_is_reported() {
        let s = Scenario {
            q_start: Point2::new(0.0, 0.0),
            q_end: Point2::new(0.0, 0.0),
            ..Scenario::reference(4)
        };
        assert_eq!(s.v_up_step(), 2.0);
        let mut t = straight(&s, 200.0);
        t.z[2] = 202.1;
        t.z[3] = 200.0;
        assert!(matches!(
            validate_trajectory(&s, &t),
            Err(TrajectoryViolation::Ascent { n: 1, .. })
        ));
    }

    #[test]
    fn moved_endpoint_is_reported() {
        let s = Scenario::reference(100);
        let mut t = straight(&s, 200.0);
        t.q[0].x += 1e-9;
        assert_eq!(
            validate_trajectory(&s, &t),
            Err(TrajectoryViolation::Endpoint { n: 0 })
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn coord() -> impl Strategy<Value = f64> {
            prop_oneof![
                (-1000i32..1000).prop_map(f64::from),
                -1000.0f64..1000.0,
            ]
        }

        proptest! {
            #[test]
            fn file_round_trip_is_exact(
                grs in prop::collection::vec((coord(), coord()), 1..5),
                eavs in prop::collection::vec((coord(), coord()), 1..4),
                alpha in 2.0f64..=4.0,
                beta_db in -60.0f64..0.0,
                sigma_db in -110.0f64..-60.0,
                z_min in 10.0f64..200.0,
                z_span in 0.0f64..200.0,
                frac in 0.0f64..1.0,
                p_ave in 1.0f64..5000.0,
                peak_factor in 1.0f64..8.0,
            ) {
                let z_max = z_min + z_span;
                let base = Scenario::reference(200);
                let s = Scenario {
                    gr_positions: grs.iter().map(|&(x, y)| Point2::new(x, y)).collect(),
                    eav_positions: eavs.iter().map(|&(x, y)| Point2::new(x, y)).collect(),
                    alpha,
                    beta0: db_to_linear(beta_db),
                    sigma2: db_to_linear(sigma_db),
                    z_min,
                    z_max,
                    p_ave,
                    p_peak: p_ave * peak_factor,
                    z_start: z_min + frac * z_span,
                    z_end: z_min + frac * z_span,
                    ..base
                };
                prop_assume!(s.validate().is_ok());
                let text = s.to_file_string();
                let back = Scenario::parse(&text).unwrap();
                prop_assert_eq!(&back, &s);
                prop_assert_eq!(Scenario::parse(&back.to_file_string()).unwrap(), s);
            }
        }
    }
}
