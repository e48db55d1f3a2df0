//! Basis dependence of the pseudo-photon source.
//!
//! [`fidelity_theta`] evaluates the purification lower bound on the fidelity
//! between the Z-basis and X_theta-basis joint states directly from the
//! exponential sums `S_k`. For `k = 1` that bound sits within machine epsilon
//! of one, so the key-rate pipeline consumes its complement through
//! [`fidelity_theta_complement`], which uses the Fock expansion of `S_k` on
//! the alignment-angle grid (where `S_k(mu e^{i theta}) = e^{i k theta} S_k(mu)`)
//! and never subtracts nearly equal numbers.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::series::{s_k, PhaseConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityReport {
    /// Pseudo-photon index shared by both parties.
    pub k: usize,
    /// `(theta, F^theta_{k,k})` for each alignment angle.
    pub per_theta: Vec<(f64, f64)>,
    /// Uniformly weighted overall fidelity `F_{k,k}`.
    pub overall: f64,
    /// `1 - F_{k,k}`, accurate even when `overall` rounds to one.
    pub overall_complement: f64,
}

/// Alignment angles `theta = 2 pi n / D`, `n = 0 .. D/2`.
pub fn alignment_angles(cfg: &PhaseConfig) -> Vec<f64> {
    let d = cfg.phases();
    (0..d / 2).map(|n| 2.0 * PI * n as f64 / d as f64).collect()
}

fn check(mu: f64, k: usize, cfg: &PhaseConfig) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::domain(format!("fidelity needs mu > 0, got {mu}")));
    }
    if k >= cfg.phases() {
        return Err(Error::domain(format!(
            "pseudo-photon index {k} out of range for D={}",
            cfg.phases()
        )));
    }
    Ok(())
}

/// Lower bound on `F(rho^Z_{k,k}, rho^{X_theta}_{k,k})`:
///
/// `|2 e^{i theta} S_k(mu) + S_k(mu e^{i theta}) - S_k(-mu e^{i theta})|^2
///  / (8 |S_k(mu) S_k(2 mu)|)`, clamped to `[0, 1]`.
pub fn fidelity_theta(mu: f64, k: usize, theta: f64, cfg: &PhaseConfig) -> Result<f64> {
    check(mu, k, cfg)?;
    let ki = k as i64;
    let rot = Complex64::from_polar(1.0, theta);
    let s_mu = s_k(Complex64::new(mu, 0.0), ki, cfg);
    let s_2mu = s_k(Complex64::new(2.0 * mu, 0.0), ki, cfg);
    let denom = (s_mu * s_2mu).norm();
    // The direct sum of D unit-size exponentials cannot resolve values below
    // its own rounding floor.
    let floor = 64.0 * cfg.phases() as f64 * f64::EPSILON * (2.0 * mu).exp();
    if !(denom >= 1e-300) || s_mu.norm() < floor || s_2mu.norm() < floor {
        return Err(Error::DegenerateDenominator { k, mu });
    }
    let num = 2.0 * rot * s_mu + s_k(mu * rot, ki, cfg) - s_k(-mu * rot, ki, cfg);
    Ok((num.norm_sqr() / (8.0 * denom)).clamp(0.0, 1.0))
}

/// Per-party fidelity bound: the joint bound of [`fidelity_theta`] factorizes
/// as the square of the single-party purification bound.
pub fn party_fidelity_theta(mu: f64, k: usize, theta: f64, cfg: &PhaseConfig) -> Result<f64> {
    fidelity_theta(mu, k, theta, cfg).map(f64::sqrt)
}

/// `1 - F^theta_{k,k}` for `theta` on the alignment grid.
///
/// On the grid the bound reduces to `c_k(theta) s_k(mu) / (8 s_k(2 mu))` with
/// `s_k(x) = sum_{n ≡ k} x^n / n!`, `c_k = 4` for even `k` and
/// `8 (1 + cos((k-1) theta))` for odd `k`. The complement is then the ratio
/// `sum (8 * 2^n - c_k) r_n / sum 8 * 2^n r_n` with `r_n = mu^{n-k} / n!`,
/// whose leading numerator term vanishes exactly for `k = 1`.
pub fn fidelity_theta_complement(mu: f64, k: usize, theta: f64, cfg: &PhaseConfig) -> Result<f64> {
    check(mu, k, cfg)?;
    let d = cfg.phases();
    let steps = theta * d as f64 / (2.0 * PI);
    if (steps - steps.round()).abs() > 1e-9 {
        return Err(Error::domain(format!(
            "theta={theta} is not a multiple of 2 pi / {d}"
        )));
    }
    let c = if k.is_multiple_of(2) {
        4.0
    } else {
        8.0 * (1.0 + ((k as f64 - 1.0) * theta).cos())
    };
    // r_m = mu^{mD} / (mD + k)!, generated incrementally
    let mut r = 1.0;
    for i in 1..=k {
        r /= i as f64;
    }
    let mut pow2 = 2f64.powi(k as i32);
    let step2 = 2f64.powi(d as i32);
    let (mut num, mut den) = (0.0, 0.0);
    let mut n = k;
    for m in 0..256 {
        let term_den = 8.0 * pow2 * r;
        let term_num = if k == 1 && m == 0 {
            0.0
        } else {
            (8.0 * pow2 - c) * r
        };
        num += term_num;
        den += term_den;
        if m >= 3 && term_den <= cfg.tol() * 1e-3 * den {
            break;
        }
        for i in 1..=d {
            r *= mu / (n + i) as f64;
        }
        n += d;
        pow2 *= step2;
    }
    Ok((num / den).clamp(0.0, 1.0))
}

/// Overall fidelity `F_{k,k}` under a uniform alignment-angle distribution
/// (weight `2/D` per angle).
pub fn fidelity_overall(mu: f64, k: usize, cfg: &PhaseConfig) -> Result<FidelityReport> {
    let angles = alignment_angles(cfg);
    let weight = 2.0 / cfg.phases() as f64;
    let mut per_theta = Vec::with_capacity(angles.len());
    let mut overall = 0.0;
    let mut complement = 0.0;
    for theta in angles {
        let f = fidelity_theta(mu, k, theta, cfg)?;
        overall += weight * f;
        complement += weight * fidelity_theta_complement(mu, k, theta, cfg)?;
        per_theta.push((theta, f));
    }
    Ok(FidelityReport {
        k,
        per_theta,
        overall: overall.clamp(0.0, 1.0),
        overall_complement: complement.clamp(0.0, 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaBalance {
    /// `Delta_{k,k}` after clamping to `[0, 1/2]`.
    pub value: f64,
    /// Unclamped `(1 - F) / (2 Y)`.
    pub raw: f64,
    /// Set when `raw > 1/2`: the bound no longer applies and no key is
    /// extractable.
    pub clamped: bool,
}

/// Balance parameter `Delta = (1 - F) / (2 Y)` from the complement `1 - F`.
pub fn delta_from_complement(one_minus_f: f64, yield_kk: f64) -> Result<DeltaBalance> {
    if !(yield_kk > 0.0) {
        return Err(Error::domain(format!(
            "balance parameter needs a positive yield, got {yield_kk}"
        )));
    }
    let raw = one_minus_f.max(0.0) / (2.0 * yield_kk);
    Ok(DeltaBalance {
        value: raw.min(0.5),
        raw,
        clamped: raw > 0.5,
    })
}

/// Balance parameter `Delta = (1 - F) / (2 Y)`, clamped to `[0, 1/2]`.
pub fn delta_balance(f_overall: f64, yield_kk: f64) -> Result<DeltaBalance> {
    delta_from_complement(1.0 - f_overall, yield_kk)
}

/// Upper bound on the phase error rate given the X-basis bit error rate
/// and the balance parameter.
pub fn phase_error_bound(e_bit: f64, delta: f64) -> f64 {
    let cross = (delta * (1.0 - delta) * e_bit * (1.0 - e_bit)).max(0.0).sqrt();
    let bound = e_bit
        + 4.0 * delta * (1.0 - delta) * (1.0 - 2.0 * e_bit)
        + 4.0 * (1.0 - 2.0 * delta) * cross;
    bound.min(1.0)
}
