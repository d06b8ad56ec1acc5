//! Fiber-channel model without an eavesdropper: per-photon-number yields and
//! error rates, and the mixture observables (gain, QBER) any photon-number
//! distribution produces at a given distance.
//!
//! Transmittance is `η = 10^(−kL/10)·η_Bob`; an n-photon pulse is detected
//! with probability `η_n = 1 − (1 − η)^n` and yields `S_n = S₀ + η_n`
//! (background counts add, coincidences neglected). Its error rate is
//! `e_n = (S₀/2 + e_det·η_n)/(S₀ + η_n)`: dark counts are random, real
//! detections err with the misalignment probability.

use crate::error::{Error, Result};
use crate::photon_stats::PhotonDistribution;

/// Fiber and detector constants. Defaults: 0.2 dB/km loss, ideal receiver,
/// background rate 8×10⁻⁷ per pulse, misalignment 1.35%.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    k_db_per_km: f64,
    eta_bob: f64,
    s0: f64,
    e_det: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            k_db_per_km: 0.2,
            eta_bob: 1.0,
            s0: 8e-7,
            e_det: 0.0135,
        }
    }
}

impl ChannelParams {
    pub fn new(k_db_per_km: f64, eta_bob: f64, s0: f64, e_det: f64) -> Result<Self> {
        if !(k_db_per_km >= 0.0 && k_db_per_km.is_finite()) {
            return Err(Error::InvalidParam {
                name: "k_db_per_km",
                value: k_db_per_km,
                constraint: "finite and >= 0",
            });
        }
        if !(eta_bob > 0.0 && eta_bob <= 1.0) {
            return Err(Error::InvalidParam {
                name: "eta_bob",
                value: eta_bob,
                constraint: "in (0, 1]",
            });
        }
        if !(0.0..1.0).contains(&s0) {
            return Err(Error::InvalidParam {
                name: "s0",
                value: s0,
                constraint: "in [0, 1)",
            });
        }
        if !(0.0..0.5).contains(&e_det) {
            return Err(Error::InvalidParam {
                name: "e_det",
                value: e_det,
                constraint: "in [0, 0.5)",
            });
        }
        Ok(Self {
            k_db_per_km,
            eta_bob,
            s0,
            e_det,
        })
    }

    pub fn k_db_per_km(&self) -> f64 {
        self.k_db_per_km
    }

    pub fn eta_bob(&self) -> f64 {
        self.eta_bob
    }

    /// Background (dark-count) rate per pulse; also the yield of vacuum
    /// pulses, and hence what a vacuum-intensity measurement reports.
    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn e_det(&self) -> f64 {
        self.e_det
    }
}

fn eta_at(params: &ChannelParams, length_km: f64) -> f64 {
    10f64.powf(-params.k_db_per_km * length_km / 10.0) * params.eta_bob
}

/// Overall transmittance η ∈ (0, 1] at the given fiber length.
pub fn transmittance(params: &ChannelParams, length_km: f64) -> Result<f64> {
    if !(length_km >= 0.0) {
        return Err(Error::NegativeLength(length_km));
    }
    Ok(eta_at(params, length_km))
}

/// S_n for a precomputed transmittance; shared so the per-n accessor and
/// the mixture sum agree bit-for-bit.
fn yield_at(eta: f64, s0: f64, n: usize) -> f64 {
    let eta_n = 1.0 - (1.0 - eta).powi(n as i32);
    (s0 + eta_n).min(1.0)
}

fn error_at(eta: f64, s0: f64, e_det: f64, n: usize) -> f64 {
    let eta_n = 1.0 - (1.0 - eta).powi(n as i32);
    let denom = s0 + eta_n;
    if denom == 0.0 {
        // No background and no detections: by convention errors are random.
        return 0.5;
    }
    (s0 / 2.0 + e_det * eta_n) / denom
}

/// Counting rate S_n = S₀ + 1 − (1 − η)^n of an n-photon pulse, clamped
/// to ≤ 1. Length must be non-negative.
pub fn yield_n(params: &ChannelParams, length_km: f64, n: usize) -> f64 {
    debug_assert!(length_km >= 0.0);
    yield_at(eta_at(params, length_km), params.s0, n)
}

/// Error rate e_n = (S₀/2 + e_det·η_n)/(S₀ + η_n) of an n-photon pulse;
/// equals 1/2 at n = 0 (dark counts carry no signal).
pub fn error_n(params: &ChannelParams, length_km: f64, n: usize) -> f64 {
    debug_assert!(length_km >= 0.0);
    error_at(eta_at(params, length_km), params.s0, params.e_det, n)
}

/// Gain and QBER for one source intensity at one distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityObservation {
    gain: f64,
    qber: f64,
    error_gain: f64,
}

impl IntensityObservation {
    /// Build from the two mixture sums; gain must be positive so the QBER
    /// is defined.
    pub fn new(gain: f64, error_gain: f64) -> Result<Self> {
        if !(gain > 0.0 && gain <= 1.0) {
            return Err(Error::ZeroGain);
        }
        if !(0.0..=gain).contains(&error_gain) {
            return Err(Error::InvalidParam {
                name: "error_gain",
                value: error_gain,
                constraint: "in [0, gain]",
            });
        }
        Ok(Self {
            gain,
            qber: error_gain / gain,
            error_gain,
        })
    }

    /// S_ν: counts per emitted pulse.
    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// E_ν: errors per count.
    pub fn qber(&self) -> f64 {
        self.qber
    }

    /// E_ν·S_ν: errors per emitted pulse (the product the bounds consume).
    pub fn error_gain(&self) -> f64 {
        self.error_gain
    }
}

/// Observables of one distribution at one distance: gain = Σ P_n·S_n,
/// error_gain = Σ e_n·P_n·S_n, QBER their ratio. Sums truncate at the
/// distribution's own cutoff (tail ≤ 1e-9, far below the background rate).
pub fn observe(
    dist: &PhotonDistribution,
    params: &ChannelParams,
    length_km: f64,
) -> Result<IntensityObservation> {
    let eta = transmittance(params, length_km)?;
    let mut gain = 0.0;
    let mut error_gain = 0.0;
    for (n, &p) in dist.probs().iter().enumerate() {
        let s_n = yield_at(eta, params.s0, n);
        let e_n = error_at(eta, params.s0, params.e_det, n);
        gain += p * s_n;
        error_gain += p * e_n * s_n;
    }
    IntensityObservation::new(gain, error_gain)
}

/// The first `max_n + 1` pairs (S_n, e_n) — the per-photon-number truth the
/// decoy bounds are judged against.
pub fn true_fock_stats(
    params: &ChannelParams,
    length_km: f64,
    max_n: usize,
) -> Vec<(f64, f64)> {
    debug_assert!(length_km >= 0.0);
    let eta = eta_at(params, length_km);
    (0..=max_n)
        .map(|n| {
            (
                yield_at(eta, params.s0, n),
                error_at(eta, params.s0, params.e_det, n),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photon_stats::{poisson_distribution, PhotonDistribution};

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!((a - b).abs() <= tol, "{what}: {a} vs {b}");
    }

    #[test]
    fn transmittance_follows_the_decibel_law() {
        let p = ChannelParams::default();
        assert_eq!(transmittance(&p, 0.0).unwrap(), 1.0);
        assert_close(transmittance(&p, 50.0).unwrap(), 0.1, 1e-15, "10 dB");
        assert_close(transmittance(&p, 100.0).unwrap(), 0.01, 1e-16, "20 dB");
        assert!(matches!(
            transmittance(&p, -1.0),
            Err(Error::NegativeLength(_))
        ));
    }

    #[test]
    fn param_ranges_are_enforced() {
        assert!(ChannelParams::new(-0.1, 1.0, 8e-7, 0.0135).is_err());
        assert!(ChannelParams::new(0.2, 0.0, 8e-7, 0.0135).is_err());
        assert!(ChannelParams::new(0.2, 1.1, 8e-7, 0.0135).is_err());
        assert!(ChannelParams::new(0.2, 1.0, 1.0, 0.0135).is_err());
        assert!(ChannelParams::new(0.2, 1.0, 8e-7, 0.5).is_err());
        assert!(ChannelParams::new(0.2, 1.0, 8e-7, 0.0135).is_ok());
    }

    #[test]
    fn vacuum_yield_is_the_background_rate() {
        let p = ChannelParams::default();
        assert_eq!(yield_n(&p, 77.0, 0), 8e-7);
        assert_eq!(error_n(&p, 77.0, 0), 0.5);
    }

    #[test]
    fn single_photon_yield_at_ten_db() {
        let p = ChannelParams::default();
        assert_close(yield_n(&p, 50.0, 1), 8e-7 + 0.1, 1e-15, "S_1 at 50 km");
    }

    #[test]
    fn lossless_multiphoton_yield_saturates() {
        let p = ChannelParams::default();
        for n in 1..6 {
            assert_eq!(yield_n(&p, 0.0, n), 1.0);
        }
    }

    #[test]
    fn single_photon_error_at_zero_distance() {
        let p = ChannelParams::default();
        // (S₀/2 + e_det)/(S₀ + 1), frozen from 50-digit evaluation.
        assert_close(
            error_n(&p, 0.0, 1),
            0.01350038919968864,
            1e-15,
            "e_1 at L = 0",
        );
    }

    #[test]
    fn perfect_apparatus_has_error_free_photons() {
        let p = ChannelParams::new(0.2, 1.0, 0.0, 0.0).unwrap();
        for n in 1..5 {
            assert_eq!(error_n(&p, 30.0, n), 0.0);
        }
        // Vacuum still errs randomly by convention.
        assert_eq!(error_n(&p, 30.0, 0), 0.5);
    }

    #[test]
    fn yields_grow_and_errors_shrink_with_photon_number() {
        let p = ChannelParams::default();
        for &l in &[0.0, 40.0, 120.0] {
            for n in 1..30 {
                assert!(yield_n(&p, l, n + 1) >= yield_n(&p, l, n));
                assert!(error_n(&p, l, n + 1) <= error_n(&p, l, n));
            }
        }
    }

    #[test]
    fn observing_vacuum_gives_dark_counts_only() {
        let vacuum = PhotonDistribution::new(vec![1.0]).unwrap();
        let obs = observe(&vacuum, &ChannelParams::default(), 25.0).unwrap();
        assert_eq!(obs.gain(), 8e-7);
        assert_eq!(obs.qber(), 0.5);
    }

    #[test]
    fn observation_on_point_mass_equals_fock_truth() {
        let p = ChannelParams::default();
        for n in 1..5 {
            let mut probs = vec![0.0; n + 1];
            probs[n] = 1.0;
            let dist = PhotonDistribution::new(probs).unwrap();
            let obs = observe(&dist, &p, 60.0).unwrap();
            let truth = true_fock_stats(&p, 60.0, n);
            assert_eq!(obs.gain(), truth[n].0);
            // QBER goes through a product-then-divide, so allow rounding.
            assert!((obs.qber() - truth[n].1).abs() <= 1e-15);
        }
    }

    #[test]
    fn ideal_poisson_gain_has_exponential_closed_form() {
        let p = ChannelParams::new(0.2, 1.0, 0.0, 0.0).unwrap();
        for &(mean, l) in &[(0.3, 20.0), (0.6, 50.0), (1.0, 80.0)] {
            let dist = poisson_distribution(mean, 0).unwrap();
            let obs = observe(&dist, &p, l).unwrap();
            let eta = transmittance(&p, l).unwrap();
            let expect = 1.0 - (-eta * mean).exp();
            assert_close(obs.gain(), expect, 1e-12, "1 − e^{−ημ}");
        }
    }

    #[test]
    fn gain_falls_and_qber_rises_with_distance() {
        let p = ChannelParams::default();
        let dist = poisson_distribution(0.5, 0).unwrap();
        let mut prev = observe(&dist, &p, 0.0).unwrap();
        for l in (20..=200).step_by(20) {
            let cur = observe(&dist, &p, l as f64).unwrap();
            assert!(cur.gain() < prev.gain(), "gain must fall by {l} km");
            assert!(cur.qber() > prev.qber(), "qber must rise by {l} km");
            prev = cur;
        }
    }

    #[test]
    fn mixtures_observe_linearly() {
        let p = ChannelParams::default();
        let a = poisson_distribution(0.2, 12).unwrap();
        let b = poisson_distribution(0.6, 12).unwrap();
        let mix = PhotonDistribution::new(
            (0..=12).map(|n| 0.5 * a.prob(n) + 0.5 * b.prob(n)).collect(),
        )
        .unwrap();
        let (oa, ob, om) = (
            observe(&a, &p, 70.0).unwrap(),
            observe(&b, &p, 70.0).unwrap(),
            observe(&mix, &p, 70.0).unwrap(),
        );
        let gain_avg = 0.5 * (oa.gain() + ob.gain());
        let err_avg = 0.5 * (oa.error_gain() + ob.error_gain());
        assert!((om.gain() - gain_avg).abs() <= 1e-12 * gain_avg);
        assert!((om.error_gain() - err_avg).abs() <= 1e-12 * err_avg);
    }

    #[test]
    fn error_gain_product_is_consistent() {
        let obs = IntensityObservation::new(0.25, 0.01).unwrap();
        assert_close(
            obs.error_gain(),
            obs.gain() * obs.qber(),
            1e-12 * obs.error_gain(),
            "product identity",
        );
        assert!(IntensityObservation::new(0.0, 0.0).is_err());
        assert!(IntensityObservation::new(0.2, 0.3).is_err());
    }
}
