//! Photon-number statistics for coherent and modified coherent sources.
//!
//! A modified coherent state (MCS) is obtained by applying the squeeze-type
//! unitary `exp(½ζ(â² − â†²))` to a coherent state `|α⟩` (all parameters
//! real). Writing `μ = cosh ζ`, `ν = sinh ζ`, the number-basis amplitudes
//! have the closed form
//!
//! ```text
//! C_n = (n! μ)^(-1/2) (ν/2μ)^(n/2) exp(να²/2μ − α²/2) H_n(α/√(2μν))
//! ```
//!
//! with `H_n` the physicists' Hermite polynomials. The Hermite argument
//! equals `√(c/2)` for `c = α²/(μν)`, so `c = 1` places it at the root of
//! `H₂` (two-photon events cancel) and `c = 3` at the root of `H₃`.

use crate::error::{Error, Result};

pub mod fock;

/// Hard cap on automatic truncation; every source used here has mean photon
/// number well below 1, so mass beyond n ≈ 40 is already negligible.
pub const AUTO_TRUNCATION_CAP: usize = 200;

/// Automatic truncation stops once the remaining tail is below this.
const AUTO_TAIL_TARGET: f64 = 1e-12;

/// A distribution is unusable once its tail exceeds this budget.
const TAIL_BUDGET: f64 = 1e-9;

// ---------------------------------------------------------------------------
// source parameter types
// ---------------------------------------------------------------------------

/// Squeeze magnitude ζ with its derived hyperbolic pair (μ, ν).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeParams {
    zeta: f64,
    mu: f64,
    nu: f64,
}

impl SqueezeParams {
    /// Build from the squeeze magnitude; ζ must be finite and ≥ 0.
    pub fn new(zeta: f64) -> Result<Self> {
        if !(zeta >= 0.0 && zeta.is_finite()) {
            return Err(Error::InvalidParam {
                name: "zeta",
                value: zeta,
                constraint: "finite and >= 0",
            });
        }
        Ok(Self {
            zeta,
            mu: zeta.cosh(),
            nu: zeta.sinh(),
        })
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// μ = cosh ζ ≥ 1.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// ν = sinh ζ ≥ 0.
    pub fn nu(&self) -> f64 {
        self.nu
    }
}

/// One modified-coherent-source setting: input amplitude α plus squeeze
/// parameters, with ν > 0 enforced at construction (ν = 0 degenerates to a
/// plain coherent state — use [`Source::Coherent`] for that).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McsSource {
    alpha: f64,
    squeeze: SqueezeParams,
}

impl McsSource {
    pub fn new(alpha: f64, zeta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParam {
                name: "alpha",
                value: alpha,
                constraint: "finite and >= 0",
            });
        }
        let squeeze = SqueezeParams::new(zeta)?;
        if squeeze.nu() == 0.0 {
            return Err(Error::DegenerateSource);
        }
        Ok(Self { alpha, squeeze })
    }

    /// Build from the cancellation parameter c and squeeze ν, using
    /// α² = c·μ·ν with μ = √(1 + ν²).
    pub fn from_c_nu(c: f64, nu: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParam {
                name: "c",
                value: c,
                constraint: "finite and > 0",
            });
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParam {
                name: "nu",
                value: nu,
                constraint: "finite and > 0",
            });
        }
        let mu = (1.0 + nu * nu).sqrt();
        // Keep the caller's ν bit-exact rather than round-tripping through
        // sinh(asinh ν).
        let squeeze = SqueezeParams {
            zeta: nu.asinh(),
            mu,
            nu,
        };
        Ok(Self {
            alpha: (c * mu * nu).sqrt(),
            squeeze,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn squeeze(&self) -> &SqueezeParams {
        &self.squeeze
    }

    /// The cancellation parameter c = α²/(μν).
    pub fn c(&self) -> f64 {
        self.alpha * self.alpha / (self.squeeze.mu * self.squeeze.nu)
    }

    /// Exact mean photon number, ⟨n⟩ = α²(μ − ν)² + ν².
    ///
    /// Follows from conjugating â through the squeeze unitary
    /// (â ↦ μâ − νâ†); avoids summing the series, which matters inside the
    /// optimizer's bisection loops.
    pub fn mean_photon_number(&self) -> f64 {
        let d = self.squeeze.mu - self.squeeze.nu;
        self.alpha * self.alpha * d * d + self.squeeze.nu * self.squeeze.nu
    }
}

/// A source whose photon-number distribution we can produce: either a plain
/// coherent (Poisson) source or a modified coherent source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    Coherent { mean: f64 },
    Mcs(McsSource),
}

impl Source {
    pub fn coherent(mean: f64) -> Result<Self> {
        if !(mean >= 0.0 && mean.is_finite()) {
            return Err(Error::NegativeMean(mean));
        }
        Ok(Self::Coherent { mean })
    }

    pub fn mean_photon_number(&self) -> f64 {
        match self {
            Self::Coherent { mean } => *mean,
            Self::Mcs(m) => m.mean_photon_number(),
        }
    }

    /// Photon-number distribution with automatic truncation.
    pub fn distribution(&self) -> Result<PhotonDistribution> {
        match self {
            Self::Coherent { mean } => poisson_distribution(*mean, 0),
            Self::Mcs(m) => mcs_distribution(m, 0),
        }
    }
}

// ---------------------------------------------------------------------------
// distributions
// ---------------------------------------------------------------------------

/// Truncated photon-number distribution P₀..P_N with a bounded tail.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
    tail_mass: f64,
}

impl PhotonDistribution {
    /// Validate and wrap raw probabilities: each P_n ∈ [0, 1], total in
    /// [1 − 1e-9, 1 + 1e-12].
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        for (index, &value) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ProbabilityRange { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if !(1.0 - TAIL_BUDGET..=1.0 + 1e-12).contains(&sum) {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self {
            probs,
            tail_mass: 1.0 - sum,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// P_n, zero beyond the truncation.
    pub fn prob(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    /// Index of the last retained component.
    pub fn truncation(&self) -> usize {
        self.probs.len() - 1
    }

    /// 1 − ΣP_n (may be a tiny negative number from rounding).
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }
}

/// Σ n·P_n over the retained components.
pub fn mean_photon_number(dist: &PhotonDistribution) -> f64 {
    dist.probs
        .iter()
        .enumerate()
        .map(|(n, p)| n as f64 * p)
        .sum()
}

/// Poisson photon statistics for a coherent source of the given mean.
///
/// `trunc = 0` requests automatic truncation (smallest N with tail
/// ≤ 1e-12); otherwise exactly `trunc + 1` components are returned and the
/// tail must fit the 1e-9 budget.
pub fn poisson_distribution(mean: f64, trunc: usize) -> Result<PhotonDistribution> {
    if !(mean >= 0.0 && mean.is_finite()) {
        return Err(Error::NegativeMean(mean));
    }
    let mut probs = Vec::new();
    let mut p = (-mean).exp();
    let mut sum = 0.0;
    if trunc == 0 {
        loop {
            probs.push(p);
            sum += p;
            if 1.0 - sum <= AUTO_TAIL_TARGET {
                break;
            }
            if probs.len() > 4096 {
                return Err(Error::TruncationFailure {
                    tail_mass: 1.0 - sum,
                });
            }
            p *= mean / probs.len() as f64;
        }
    } else {
        for n in 0..=trunc {
            probs.push(p);
            sum += p;
            p *= mean / (n + 1) as f64;
        }
        if 1.0 - sum > TAIL_BUDGET {
            return Err(Error::TruncationTail {
                trunc,
                tail_mass: 1.0 - sum,
            });
        }
    }
    PhotonDistribution::new(probs)
}

// ---------------------------------------------------------------------------
// Hermite polynomials
// ---------------------------------------------------------------------------

/// Physicists' Hermite polynomial H_n(x) by the three-term recurrence
/// H_{n+1} = 2x·H_n − 2n·H_{n−1}.
pub fn hermite(n: usize, x: f64) -> f64 {
    let mut h_prev = 0.0;
    let mut h_cur = 1.0;
    for k in 0..n {
        let next = 2.0 * x * h_cur - 2.0 * k as f64 * h_prev;
        h_prev = h_cur;
        h_cur = next;
    }
    h_cur
}

// ---------------------------------------------------------------------------
// modified coherent state amplitudes
// ---------------------------------------------------------------------------

/// Streaming generator of the amplitudes C₀, C₁, … for one source.
///
/// Everything is accumulated in log-magnitude with a tracked sign — ln n!,
/// (n/2)·ln(ν/2μ), the fixed exponential factor, and ln|H_n| via a rescaled
/// recurrence — so n up to [`AUTO_TRUNCATION_CAP`] stays finite even though
/// the bare Hermite values and factorials overflow.
struct AmplitudeLadder {
    x: f64,
    half_ln_ratio: f64,
    ln_prefactor: f64,
    n: usize,
    ln_factorial: f64,
    h_prev: f64,
    h_cur: f64,
    log_scale: f64,
}

impl AmplitudeLadder {
    fn new(source: &McsSource) -> Self {
        let alpha = source.alpha();
        let mu = source.squeeze().mu();
        let nu = source.squeeze().nu();
        Self {
            x: alpha / (2.0 * mu * nu).sqrt(),
            half_ln_ratio: 0.5 * (nu / (2.0 * mu)).ln(),
            ln_prefactor: nu * alpha * alpha / (2.0 * mu) - alpha * alpha / 2.0 - 0.5 * mu.ln(),
            n: 0,
            ln_factorial: 0.0,
            h_prev: 0.0,
            h_cur: 1.0,
            log_scale: 0.0,
        }
    }
}

impl Iterator for AmplitudeLadder {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let n = self.n;
        if n > 0 {
            self.ln_factorial += (n as f64).ln();
        }
        let amplitude = if self.h_cur == 0.0 {
            0.0
        } else {
            let ln_c = -0.5 * self.ln_factorial
                + n as f64 * self.half_ln_ratio
                + self.ln_prefactor
                + self.log_scale
                + self.h_cur.abs().ln();
            self.h_cur.signum() * ln_c.exp()
        };
        // Advance the Hermite recurrence, rescaling both live values when
        // they grow large so the next step cannot overflow.
        let next = 2.0 * self.x * self.h_cur - 2.0 * n as f64 * self.h_prev;
        self.h_prev = self.h_cur;
        self.h_cur = next;
        let m = self.h_cur.abs().max(self.h_prev.abs());
        if m > 1e150 {
            self.h_prev /= m;
            self.h_cur /= m;
            self.log_scale += m.ln();
        }
        self.n += 1;
        Some(amplitude)
    }
}

/// Number-basis amplitude C_n of the modified coherent state.
pub fn mcs_amplitude(source: &McsSource, n: usize) -> f64 {
    AmplitudeLadder::new(source).nth(n).unwrap()
}

/// Photon-number distribution P_n = C_n² of the modified coherent state.
///
/// `trunc = 0` requests automatic truncation: N grows in steps of 10 until
/// the tail drops below 1e-12, capped at [`AUTO_TRUNCATION_CAP`].
pub fn mcs_distribution(source: &McsSource, trunc: usize) -> Result<PhotonDistribution> {
    let mut ladder = AmplitudeLadder::new(source);
    let mut probs = Vec::new();
    let mut sum = 0.0;
    if trunc == 0 {
        for n in 0..=AUTO_TRUNCATION_CAP {
            let c = ladder.next().unwrap();
            probs.push(c * c);
            sum += c * c;
            let boundary = n > 0 && n % 10 == 0;
            if boundary && 1.0 - sum <= AUTO_TAIL_TARGET {
                break;
            }
        }
        if 1.0 - sum > TAIL_BUDGET {
            return Err(Error::TruncationFailure {
                tail_mass: 1.0 - sum,
            });
        }
    } else {
        for _ in 0..=trunc {
            let c = ladder.next().unwrap();
            probs.push(c * c);
            sum += c * c;
        }
        if 1.0 - sum > TAIL_BUDGET {
            return Err(Error::TruncationTail {
                trunc,
                tail_mass: 1.0 - sum,
            });
        }
    }
    PhotonDistribution::new(probs)
}

// ---------------------------------------------------------------------------
// mean inversion
// ---------------------------------------------------------------------------

/// Closed-form mean photon number of the (c, ν) source.
fn mean_at_nu(c: f64, nu: f64) -> f64 {
    let mu = (1.0 + nu * nu).sqrt();
    let d = mu - nu;
    c * mu * nu * d * d + nu * nu
}

/// Find ν such that the MCS with parameters (c, ν) has the requested mean
/// photon number, by bisection on ν ∈ (0, 5].
pub fn nu_for_mean(c: f64, target_mean: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParam {
            name: "c",
            value: c,
            constraint: "finite and > 0",
        });
    }
    const NU_MAX: f64 = 5.0;
    if !(target_mean > 0.0) || target_mean > mean_at_nu(c, NU_MAX) {
        return Err(Error::NoBracket {
            target: target_mean,
        });
    }
    // The mean is monotone increasing in ν at fixed c; cheap sanity check on
    // the bracketing grid before trusting bisection.
    debug_assert!(
        (1..20).all(|k| {
            let nu = NU_MAX * k as f64 / 20.0;
            mean_at_nu(c, nu) < mean_at_nu(c, nu + NU_MAX / 20.0)
        }),
        "mean must increase with nu at fixed c"
    );
    let (mut lo, mut hi) = (0.0, NU_MAX);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if mean_at_nu(c, mid) < target_mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
