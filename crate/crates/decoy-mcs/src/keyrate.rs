//! Secret-key rate of decoy-state BB84 and the secure-distance search.
//!
//! The asymptotic rate combines the decoy-state bounds with the measured
//! signal gain and QBER:
//!
//! ```text
//! R = q · { −S_ν′ f H₂(E_ν′) + P₁(ν′) S₁ᴸ [1 − H₂(e₁ᵁ)] }
//! ```
//!
//! where q is the basis-sift factor and f the error-correction
//! inefficiency. The secure distance is the largest channel length at which
//! R stays positive, located by a coarse kilometre scan followed by
//! bisection.

use crate::bounds::{
    e1_upper_2int, e1_upper_3int, s1_lower_2int, s1_lower_3int, DecoyEstimate,
};
use crate::channel::{observe, ChannelParams, IntensityObservation};
use crate::error::{Error, Result};
use crate::photon_stats::{PhotonDistribution, Source};

/// Hard ceiling of the coarse kilometre scan; beyond this every source and
/// protocol in the toolkit has long gone insecure.
pub const SCAN_CEILING_KM: f64 = 300.0;

/// Bisection stops when the secure/insecure bracket is this narrow (km).
const DISTANCE_RESOLUTION_KM: f64 = 0.01;

/// Which decoy-state estimation chain the rate uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Decoy + signal only; the background rate is bounded, not measured.
    TwoIntensity,
    /// Vacuum + decoy + signal; the background rate is measured.
    ThreeIntensity,
}

/// Rate-formula constants. `q` is the sifting factor, `f_ec` the error
/// correction inefficiency relative to the Shannon limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    q: f64,
    f_ec: f64,
    protocol: Protocol,
}

impl ProtocolConfig {
    pub fn new(protocol: Protocol) -> Self {
        ProtocolConfig {
            q: 0.5,
            f_ec: 1.2,
            protocol,
        }
    }

    pub fn with_q(mut self, q: f64) -> Result<Self> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::InvalidParam {
                name: "q",
                value: q,
                constraint: "0 < q <= 1",
            });
        }
        self.q = q;
        Ok(self)
    }

    pub fn with_f_ec(mut self, f_ec: f64) -> Result<Self> {
        if !(f_ec >= 1.0 && f_ec.is_finite()) {
            return Err(Error::InvalidParam {
                name: "f_ec",
                value: f_ec,
                constraint: "f_ec >= 1",
            });
        }
        self.f_ec = f_ec;
        Ok(self)
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn f_ec(&self) -> f64 {
        self.f_ec
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }
}

/// Binary Shannon entropy in bits; H₂(0) = H₂(1) = 0 by continuity.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::EntropyDomain(x));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// One evaluated channel length.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyRatePoint {
    pub length_km: f64,
    /// The raw rate, possibly negative (insecure).
    pub rate: f64,
    /// `max(rate, 0)` — what a key-vs-distance plot shows.
    pub rate_clamped: f64,
    /// The decoy estimate behind the rate; `None` when the estimation
    /// premises failed and the point is declared insecure outright.
    pub estimate: Option<DecoyEstimate>,
    /// Signal-intensity gain and error statistics at this length.
    pub signal_obs: IntensityObservation,
}

/// The rate formula itself, once every ingredient is on the table.
/// An undefined error bound (`None`) is priced at the worst case ½.
pub fn key_rate(
    config: &ProtocolConfig,
    signal_obs: &IntensityObservation,
    p1_signal: f64,
    estimate: &DecoyEstimate,
) -> f64 {
    let e1 = estimate.e1_upper.unwrap_or(0.5);
    // H₂ over these clamped arguments cannot leave its domain.
    let h_e1 = binary_entropy(e1).expect("e1 bound out of range");
    let h_qber = binary_entropy(signal_obs.qber().min(1.0)).expect("QBER out of range");
    let privacy = p1_signal * estimate.s1_lower * (1.0 - h_e1);
    let correction = signal_obs.gain() * config.f_ec * h_qber;
    config.q * (privacy - correction)
}

/// A decoy/signal pair frozen into photon-number distributions, ready to be
/// swept over channel lengths without recomputing the sources.
#[derive(Debug, Clone)]
pub struct PreparedPair {
    decoy: PhotonDistribution,
    signal: PhotonDistribution,
}

impl PreparedPair {
    /// Builds both distributions and enforces that the decoy is strictly
    /// weaker than the signal in mean photon number.
    pub fn new(decoy: &Source, signal: &Source) -> Result<Self> {
        let (md, ms) = (decoy.mean_photon_number(), signal.mean_photon_number());
        if md >= ms {
            return Err(Error::MeanOrdering {
                decoy: md,
                signal: ms,
            });
        }
        Ok(PreparedPair {
            decoy: decoy.distribution()?,
            signal: signal.distribution()?,
        })
    }

    pub fn decoy(&self) -> &PhotonDistribution {
        &self.decoy
    }

    pub fn signal(&self) -> &PhotonDistribution {
        &self.signal
    }

    /// Full pipeline at one length: simulate both intensities, run the
    /// decoy estimation for the configured protocol, price the key.
    pub fn evaluate(
        &self,
        channel: &ChannelParams,
        config: &ProtocolConfig,
        length_km: f64,
    ) -> Result<KeyRatePoint> {
        let decoy_obs = observe(&self.decoy, channel, length_km)?;
        let signal_obs = observe(&self.signal, channel, length_km)?;
        evaluate_with_obs(
            &self.decoy,
            &decoy_obs,
            &self.signal,
            &signal_obs,
            channel.s0(),
            config,
            length_km,
        )
    }
}

/// Shared pipeline core, also used by the CLI scan which wants the
/// observations back. A failed estimation premise is not an error: the
/// point is simply insecure (no privacy credit, full correction cost).
pub(crate) fn evaluate_with_obs(
    decoy_dist: &PhotonDistribution,
    decoy_obs: &IntensityObservation,
    signal_dist: &PhotonDistribution,
    signal_obs: &IntensityObservation,
    s0_measured: f64,
    config: &ProtocolConfig,
    length_km: f64,
) -> Result<KeyRatePoint> {
    let estimated = match config.protocol() {
        Protocol::ThreeIntensity => {
            s1_lower_3int(decoy_obs, signal_obs, s0_measured, decoy_dist, signal_dist)
        }
        Protocol::TwoIntensity => {
            s1_lower_2int(decoy_obs, signal_obs, decoy_dist, signal_dist)
        }
    };
    let mut estimate = match estimated {
        Ok(est) => est,
        Err(Error::PremiseViolation { .. }) | Err(Error::InvalidOrdering { .. }) => {
            // No usable single-photon bound: the protocol aborts here.
            let h_qber =
                binary_entropy(signal_obs.qber().min(1.0)).expect("QBER out of range");
            let rate = -config.q() * signal_obs.gain() * config.f_ec() * h_qber;
            return Ok(KeyRatePoint {
                length_km,
                rate,
                rate_clamped: 0.0,
                estimate: None,
                signal_obs: *signal_obs,
            });
        }
        Err(e) => return Err(e),
    };
    if estimate.s1_lower > 0.0 {
        let e1 = match config.protocol() {
            Protocol::ThreeIntensity => {
                e1_upper_3int(signal_obs, s0_measured, signal_dist, estimate.s1_lower)?
            }
            Protocol::TwoIntensity => {
                e1_upper_2int(signal_obs, signal_dist, estimate.s1_lower)?
            }
        };
        estimate.e1_upper = Some(e1);
    }
    let rate = key_rate(config, signal_obs, signal_dist.prob(1), &estimate);
    Ok(KeyRatePoint {
        length_km,
        rate,
        rate_clamped: rate.max(0.0),
        estimate: Some(estimate),
        signal_obs: *signal_obs,
    })
}

/// Convenience wrapper: build the pair and evaluate one length.
pub fn evaluate_point(
    decoy: &Source,
    signal: &Source,
    channel: &ChannelParams,
    config: &ProtocolConfig,
    length_km: f64,
) -> Result<KeyRatePoint> {
    PreparedPair::new(decoy, signal)?.evaluate(channel, config, length_km)
}

/// Generic secure-horizon search over any "is this length secure?"
/// predicate: coarse 1 km scan up to the ceiling, then bisection on the
/// last secure/first insecure bracket.
pub(crate) fn horizon_search<F>(mut secure: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<bool>,
{
    if !secure(0.0)? {
        return Err(Error::NeverSecure);
    }
    let mut last_secure = 0.0_f64;
    let mut first_insecure = None;
    let mut km = 1.0_f64;
    while km <= SCAN_CEILING_KM {
        if secure(km)? {
            if first_insecure.is_some() {
                // Re-entrant security past a dead zone: trust the furthest
                // secure point rather than the first crossing.
                first_insecure = None;
            }
            last_secure = km;
        } else if first_insecure.is_none() {
            first_insecure = Some(km);
        }
        km += 1.0;
    }
    let Some(hi) = first_insecure else {
        return Ok(SCAN_CEILING_KM); // secure through the whole scan
    };
    if hi < last_secure {
        return Ok(last_secure);
    }
    let mut lo = last_secure;
    let mut hi = hi;
    while hi - lo > DISTANCE_RESOLUTION_KM {
        let mid = 0.5 * (lo + hi);
        if secure(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Largest length (km) with a strictly positive key rate for this fixed
/// decoy/signal pair. `NeverSecure` if even a zero-length channel fails.
pub fn secure_distance(
    decoy: &Source,
    signal: &Source,
    channel: &ChannelParams,
    config: &ProtocolConfig,
) -> Result<f64> {
    let pair = PreparedPair::new(decoy, signal)?;
    horizon_search(|km| Ok(pair.evaluate(channel, config, km)?.rate > 0.0))
}
