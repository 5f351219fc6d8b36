//! Line-of-sight channel model, combined SNRs and secrecy rates.

use std::f64::consts::LN_2;

use crate::geom::Point2;
use crate::scenario::Scenario;

/// One quasi-stationary decision: horizontal position, altitude (m) and
/// transmit power (mW).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub q: Point2,
    pub z: f64,
    pub p: f64,
}

impl Placement {
    pub fn new(q: Point2, z: f64, p: f64) -> Self {
        Self { q, z, p }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ColludeMode {
    NonColluding,
    Colluding,
}

impl ColludeMode {
    pub const ALL: [ColludeMode; 2] = [ColludeMode::NonColluding, ColludeMode::Colluding];

    pub fn name(self) -> &'static str {
        match self {
            ColludeMode::NonColluding => "noncolluding",
            ColludeMode::Colluding => "colluding",
        }
    }
}

impl std::fmt::Display for ColludeMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// `log2(1 + x)`, accurate for small `x`.
#[inline]
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// Squared 3D distance between the UAV at `(q, z)` and a ground node `w`.
#[inline]
pub fn dist_sq(q: Point2, z: f64, w: Point2) -> f64 {
    q.dist_sq(w) + z * z
}

/// `d^alpha` given the squared distance `d^2`.
#[inline]
pub fn dist_pow(s: &Scenario, d_sq: f64) -> f64 {
    if s.alpha == 2.0 {
        d_sq
    } else {
        d_sq.powf(0.5 * s.alpha)
    }
}

/// Channel-power-to-noise ratio per mW of transmit power.
pub fn link_gain(s: &Scenario, q: Point2, z: f64, w: Point2) -> f64 {
    s.beta0 / (s.sigma2 * dist_pow(s, dist_sq(q, z, w)))
}

/// Sum of GR gains per mW (SNR after maximal ratio combining at unit power).
pub fn legit_gain(s: &Scenario, q: Point2, z: f64) -> f64 {
    s.gr_positions.iter().map(|&w| link_gain(s, q, z, w)).sum()
}

/// Effective eavesdropper gain per mW: strongest eavesdropper or the sum.
pub fn eav_gain(s: &Scenario, q: Point2, z: f64, mode: ColludeMode) -> f64 {
    let gains = s.eav_positions.iter().map(|&w| link_gain(s, q, z, w));
    match mode {
        ColludeMode::NonColluding => gains.fold(0.0, f64::max),
        ColludeMode::Colluding => gains.sum(),
    }
}

pub fn legit_snr(s: &Scenario, q: Point2, z: f64, p: f64) -> f64 {
    legit_gain(s, q, z) * p
}

pub fn eav_snr(s: &Scenario, q: Point2, z: f64, p: f64, mode: ColludeMode) -> f64 {
    eav_gain(s, q, z, mode) * p
}

/// Rate difference for per-mW gains `a` (legitimate) and `b` (eavesdropper).
#[inline]
pub fn rate_from_gains(a: f64, b: f64, p: f64) -> f64 {
    // ln((1+ap)/(1+bp)) written to stay accurate when a ≈ b.
    if p == 0.0 {
        return 0.0;
    }
    ((a - b) * p / (1.0 + b * p)).ln_1p() / LN_2
}

/// Secrecy rate in bps/Hz. With `clamp == false` this is the unclamped rate
/// difference, which may be negative.
pub fn secrecy_rate_with(
    s: &Scenario,
    q: Point2,
    z: f64,
    p: f64,
    mode: ColludeMode,
    clamp: bool,
) -> f64 {
    let r = rate_from_gains(legit_gain(s, q, z), eav_gain(s, q, z, mode), p);
    if clamp {
        r.max(0.0)
    } else {
        r
    }
}

pub fn secrecy_rate(s: &Scenario, q: Point2, z: f64, p: f64, mode: ColludeMode) -> f64 {
    secrecy_rate_with(s, q, z, p, mode, true)
}

pub fn secrecy_rate_unclamped(s: &Scenario, q: Point2, z: f64, p: f64, mode: ColludeMode) -> f64 {
    secrecy_rate_with(s, q, z, p, mode, false)
}

pub fn placement_rate(s: &Scenario, pl: &Placement, mode: ColludeMode) -> f64 {
    secrecy_rate(s, pl.q, pl.z, pl.p, mode)
}

/// Gain and its altitude derivative for one link.
#[inline]
fn gain_and_dz(s: &Scenario, q: Point2, z: f64, w: Point2) -> (f64, f64) {
    let d_sq = dist_sq(q, z, w);
    let g = s.beta0 / (s.sigma2 * dist_pow(s, d_sq));
    (g, -s.alpha * z * g / d_sq)
}

/// Altitude derivative of the unclamped secrecy rate at fixed `(q, p)`.
///
/// For non-colluding eavesdroppers the derivative follows the currently
/// strongest eavesdropper; at an exact tie the larger one-sided slope of the
/// envelope (the right derivative) is used.
pub fn rate_dz(s: &Scenario, q: Point2, z: f64, p: f64, mode: ColludeMode) -> f64 {
    let (mut a, mut da) = (0.0, 0.0);
    for &w in &s.gr_positions {
        let (g, dg) = gain_and_dz(s, q, z, w);
        a += g;
        da += dg;
    }
    let (mut b, mut db) = (0.0, 0.0);
    match mode {
        ColludeMode::Colluding => {
            for &w in &s.eav_positions {
                let (g, dg) = gain_and_dz(s, q, z, w);
                b += g;
                db += dg;
            }
        }
        ColludeMode::NonColluding => {
            let mut first = true;
            for &w in &s.eav_positions {
                let (g, dg) = gain_and_dz(s, q, z, w);
                if first || g > b || (g == b && dg > db) {
                    b = g;
                    db = dg;
                    first = false;
                }
            }
        }
    }
    (p * da / (1.0 + p * a) - p * db / (1.0 + p * b)) / LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(gr: Point2, eav: Point2) -> Scenario {
        Scenario {
            gr_positions: vec![gr],
            eav_positions: vec![eav],
            ..Scenario::reference(100)
        }
    }

    #[test]
    fn link_gain_examples() {
        let s = Scenario::reference(100);
        let w = Point2::new(0.0, 300.0);
        let g = link_gain(&s, w, 150.0, w);
        assert!((g - 1e-3 / (1e-8 * 22500.0)).abs() < 1e-12);
        assert!((g - 4.4444444444).abs() < 1e-9);
        let g2 = link_gain(&s, w, 300.0, w);
        assert!((g2 - g / 4.0).abs() < 1e-12);
        let s4 = Scenario { alpha: 4.0, ..s };
        assert!((link_gain(&s4, w, 10.0, w) - 10.0).abs() < 1e-9);
    }

    #[test]
    fn snr_combining() {
        let s = single(Point2::new(0.0, 300.0), Point2::new(0.0, 180.0));
        let q = Point2::new(0.0, 300.0);
        assert_eq!(legit_snr(&s, q, 150.0, 0.0), 0.0);
        assert!((legit_snr(&s, q, 150.0, 1000.0) - 4444.444444).abs() < 1e-5);
        let s2 = Scenario {
            gr_positions: vec![q, q],
            ..s.clone()
        };
        let g = link_gain(&s2, q, 150.0, q);
        assert_eq!(legit_snr(&s2, q, 150.0, 7.0), 2.0 * g * 7.0);
        for mode in ColludeMode::ALL {
            assert_eq!(
                eav_snr(&s, q, 150.0, 3.0, ColludeMode::NonColluding),
                eav_snr(&s, q, 150.0, 3.0, mode)
            );
            assert_eq!(eav_snr(&s, q, 150.0, 0.0, mode), 0.0);
        }
    }

    #[test]
    fn max_versus_sum() {
        // Gains 3 and 1 per mW at unit power: place the UAV so that the
        // squared distances are in ratio 1:3.
        let s = Scenario {
            alpha: 2.0,
            beta0: 1.0,
            sigma2: 1.0,
            eav_positions: vec![Point2::new(0.0, 0.0), Point2::new(2.0f64.sqrt() / 3f64.sqrt(), 0.0)],
            ..Scenario::reference(100)
        };
        let q = Point2::new(0.0, 0.0);
        let z = 1.0 / 3f64.sqrt();
        let nc = eav_snr(&s, q, z, 1.0, ColludeMode::NonColluding);
        let c = eav_snr(&s, q, z, 1.0, ColludeMode::Colluding);
        assert!((nc - 3.0).abs() < 1e-12);
        assert!((c - 4.0).abs() < 1e-12);
    }

    #[test]
    fn secrecy_rate_reference_value() {
        let s = single(Point2::new(0.0, 300.0), Point2::new(0.0, 180.0));
        let q = Point2::new(0.0, 300.0);
        // g_b = 1e5/22500, g_e = 1e5/(120^2 + 150^2) = 1e5/36900.
        let gb: f64 = 1e5 / 22500.0;
        let ge = 1e5 / 36900.0;
        let expected = ((1.0 + gb * 1000.0) / (1.0 + ge * 1000.0)).log2();
        let r = secrecy_rate(&s, q, 150.0, 1000.0, ColludeMode::NonColluding);
        assert!((r - expected).abs() < 1e-12);
        assert!((r - 0.713488128).abs() < 1e-9, "{r}");
        assert_eq!(secrecy_rate(&s, q, 150.0, 0.0, ColludeMode::Colluding), 0.0);
    }

    #[test]
    fn equidistant_nodes_give_zero_rate() {
        let s = single(Point2::new(-50.0, 0.0), Point2::new(50.0, 0.0));
        for p in [0.0, 1.0, 1000.0, 1e6] {
            let r = secrecy_rate_unclamped(&s, Point2::new(0.0, 17.0), 150.0, p, ColludeMode::Colluding);
            assert_eq!(r, 0.0);
        }
    }

    #[test]
    fn unclamped_rate_can_be_negative() {
        let s = single(Point2::new(0.0, 300.0), Point2::new(0.0, 180.0));
        let q = Point2::new(0.0, 180.0);
        let r = secrecy_rate_unclamped(&s, q, 150.0, 1000.0, ColludeMode::NonColluding);
        assert!(r < 0.0);
        assert_eq!(secrecy_rate(&s, q, 150.0, 1000.0, ColludeMode::NonColluding), 0.0);
    }

    #[test]
    fn altitude_derivative_matches_central_differences() {
        let s = Scenario::reference(100);
        let h = 1e-4;
        for &(x, y) in &[(0.0, 240.0), (-25.0, 200.0), (80.0, 400.0), (-300.0, 0.0)] {
            let q = Point2::new(x, y);
            for mode in ColludeMode::ALL {
                for z in [150.0, 171.3, 200.0, 249.0] {
                    let fd = (secrecy_rate_unclamped(&s, q, z + h, 1000.0, mode)
                        - secrecy_rate_unclamped(&s, q, z - h, 1000.0, mode))
                        / (2.0 * h);
                    let an = rate_dz(&s, q, z, 1000.0, mode);
                    assert!(
                        (fd - an).abs() <= 1e-5 * an.abs().max(1e-6),
                        "({x},{y}) z={z} {mode}: fd={fd} analytic={an}"
                    );
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pt() -> impl Strategy<Value = Point2> {
            (-600.0f64..600.0, -600.0f64..600.0).prop_map(|(x, y)| Point2::new(x, y))
        }

        proptest! {
            #[test]
            fn noncolluding_dominates_colluding(q in pt(), z in 1.0f64..500.0, p in 0.0f64..1e4) {
                let s = Scenario::reference(100);
                let nc = secrecy_rate(&s, q, z, p, ColludeMode::NonColluding);
                let c = secrecy_rate(&s, q, z, p, ColludeMode::Colluding);
                prop_assert!(nc >= c);
                prop_assert!(c >= 0.0);
            }

            #[test]
            fn unclamped_matches_clamped_when_nonnegative(q in pt(), z in 1.0f64..500.0, p in 0.0f64..1e4) {
                let s = Scenario::reference(100);
                for mode in ColludeMode::ALL {
                    let u = secrecy_rate_unclamped(&s, q, z, p, mode);
                    if u >= 0.0 {
                        prop_assert_eq!(u, secrecy_rate(&s, q, z, p, mode));
                    }
                }
            }

            #[test]
            fn gain_decreases_with_altitude(q in pt(), w in pt(), z in 1.0f64..500.0, dz in 1e-3f64..100.0, alpha in 2.0f64..=4.0) {
                let s = Scenario { alpha, ..Scenario::reference(100) };
                prop_assert!(link_gain(&s, q, z + dz, w) < link_gain(&s, q, z, w));
            }

            #[test]
            fn common_scaling_of_beta_and_noise_is_invisible(q in pt(), z in 1.0f64..500.0, p in 0.0f64..1e4, k in 0i32..8) {
                let s = Scenario::reference(100);
                let f = 2f64.powi(k - 4);
                let scaled = Scenario { beta0: s.beta0 * f, sigma2: s.sigma2 * f, ..s.clone() };
                for mode in ColludeMode::ALL {
                    prop_assert_eq!(
                        secrecy_rate(&s, q, z, p, mode),
                        secrecy_rate(&scaled, q, z, p, mode)
                    );
                }
            }
        }
    }
}
