//! Independent Fock-basis oracle for the modified-coherent-state statistics.
//!
//! Builds the truncated matrix of the squeeze generator ½ζ(â² − â†²) in the
//! number basis, exponentiates it by scaling-and-squaring with a Taylor
//! series, and applies it to a truncated coherent-state vector. Nothing here
//! shares code with the closed-form amplitude path — that is the point: the
//! two routes agree only if both are right.

use super::PhotonDistribution;
use crate::error::{Error, Result};

/// Dense square matrix, row-major; just enough linear algebra for the
/// oracle (no external solver warranted at dimension ≤ 256).
struct Mat {
    dim: usize,
    a: Vec<f64>,
}

impl Mat {
    fn zeros(dim: usize) -> Self {
        Self {
            dim,
            a: vec![0.0; dim * dim],
        }
    }

    fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.a[i * dim + i] = 1.0;
        }
        m
    }

    fn mul(&self, rhs: &Mat) -> Mat {
        let dim = self.dim;
        let mut out = Mat::zeros(dim);
        for i in 0..dim {
            for k in 0..dim {
                let aik = self.a[i * dim + k];
                if aik == 0.0 {
                    continue;
                }
                let row = &rhs.a[k * dim..(k + 1) * dim];
                let out_row = &mut out.a[i * dim..(i + 1) * dim];
                for (o, &r) in out_row.iter_mut().zip(row) {
                    *o += aik * r;
                }
            }
        }
        out
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let dim = self.dim;
        (0..dim)
            .map(|i| {
                self.a[i * dim..(i + 1) * dim]
                    .iter()
                    .zip(v)
                    .map(|(&m, &x)| m * x)
                    .sum()
            })
            .collect()
    }

    fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    /// Maximum absolute column sum (the induced 1-norm).
    fn norm_1(&self) -> f64 {
        let dim = self.dim;
        (0..dim)
            .map(|j| (0..dim).map(|i| self.a[i * dim + j].abs()).sum())
            .fold(0.0, f64::max)
    }

    /// e^M by scaling-and-squaring: halve until the norm is ≤ 0.5, sum the
    /// Taylor series to machine precision, then square back up.
    fn expm(&self) -> Mat {
        let dim = self.dim;
        let norm = self.norm_1();
        let mut squarings = 0u32;
        while norm / f64::powi(2.0, squarings as i32) > 0.5 {
            squarings += 1;
        }
        let scale = f64::powi(2.0, squarings as i32);
        let mut scaled = Mat::zeros(dim);
        for (s, &x) in scaled.a.iter_mut().zip(&self.a) {
            *s = x / scale;
        }
        let mut result = Mat::identity(dim);
        let mut term = Mat::identity(dim);
        for k in 1..=40 {
            term = term.mul(&scaled);
            let inv_k = 1.0 / k as f64;
            for t in term.a.iter_mut() {
                *t *= inv_k;
            }
            for (r, &t) in result.a.iter_mut().zip(&term.a) {
                *r += t;
            }
            if term.max_abs() < 1e-18 {
                break;
            }
        }
        for _ in 0..squarings {
            result = result.mul(&result);
        }
        result
    }
}

/// Photon statistics of the squeeze unitary applied to |α⟩, computed
/// entirely in a truncated number basis of the given dimension.
///
/// The caller must leave adequate headroom: `dim ≥ 4(α² + ζ) + 20`
/// (empirical margin). Inadequacy that still slips through is caught after
/// the fact — residual mass in the basis tail or lost total mass signals
/// `DimTooSmall`.
pub fn fock_oracle(alpha: f64, zeta: f64, dim: usize) -> Result<PhotonDistribution> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParam {
            name: "alpha",
            value: alpha,
            constraint: "finite and >= 0",
        });
    }
    if !(zeta >= 0.0 && zeta.is_finite()) {
        return Err(Error::InvalidParam {
            name: "zeta",
            value: zeta,
            constraint: "finite and >= 0",
        });
    }
    let required = (4.0 * (alpha * alpha + zeta) + 20.0).ceil() as usize;
    if dim < required {
        return Err(Error::InvalidParam {
            name: "dim",
            value: dim as f64,
            constraint: "dim >= 4(alpha^2 + zeta) + 20",
        });
    }

    // Generator ½ζ(â² − â†²): â²|n+2⟩ = √((n+1)(n+2))|n⟩ gives the upper
    // band, â†² the (negated) lower band; antisymmetric, so the exponential
    // is orthogonal and photon-number parity is preserved.
    let mut gen = Mat::zeros(dim);
    for n in 0..dim - 2 {
        let coupling = 0.5 * zeta * (((n + 1) * (n + 2)) as f64).sqrt();
        gen.a[n * dim + (n + 2)] = coupling;
        gen.a[(n + 2) * dim + n] = -coupling;
    }
    let unitary = gen.expm();

    // Coherent-state vector e^{−α²/2} αⁿ/√(n!).
    let mut coherent = vec![0.0; dim];
    coherent[0] = (-alpha * alpha / 2.0).exp();
    for n in 1..dim {
        coherent[n] = coherent[n - 1] * alpha / (n as f64).sqrt();
    }

    let out = unitary.apply(&coherent);
    let probs: Vec<f64> = out.iter().map(|&w| w * w).collect();

    // Adequacy check. Lost total mass means the coherent vector itself was
    // truncated; mass piled up in the top slice means the squeeze pushed
    // population against the basis wall (which the truncated, still-unitary
    // exponential would silently reflect back).
    let total: f64 = probs.iter().sum();
    let top: f64 = probs[dim.saturating_sub(10)..].iter().sum();
    if 1.0 - total > 1e-9 || top > 1e-9 {
        return Err(Error::DimTooSmall {
            dim,
            tail_mass: (1.0 - total).max(top),
        });
    }
    PhotonDistribution::new(probs)
}
