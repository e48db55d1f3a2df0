//! Truncated residue-class series behind every pseudo-photon quantity.
//!
//! A coherent state whose phase is drawn from `D` equally spaced values
//! decomposes into `D` pseudo-photon components. Component `k` collects the
//! Fock terms with photon number `n ≡ k (mod D)`, so every quantity here is a
//! sum of `x^n / n!` restricted to one residue class. Terms are generated
//! incrementally (`t_{m+1} = t_m * x^D / ((n+1)...(n+D))`) so no factorial is
//! ever formed explicitly.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Complex amplitude, e.g. `alpha = mu * e^{i theta}` in [`s_k`].
pub type ComplexValue = Complex64;

pub const DEFAULT_TOL: f64 = 1e-15;

/// Hard cap on the number of series terms; every series in the supported
/// regime (`x <= 4`) terminates far earlier.
const MAX_TERMS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseConfig {
    phases: usize,
    tol: f64,
}

impl PhaseConfig {
    pub fn new(phases: usize) -> Result<Self> {
        Self::with_tolerance(phases, DEFAULT_TOL)
    }

    pub fn with_tolerance(phases: usize, tol: f64) -> Result<Self> {
        if phases < 2 || !phases.is_multiple_of(2) {
            return Err(Error::domain(format!(
                "phase count must be an even integer >= 2, got {phases}"
            )));
        }
        if !(tol > 0.0 && tol < 1e-6) {
            return Err(Error::domain(format!(
                "series tolerance must lie in (0, 1e-6), got {tol}"
            )));
        }
        Ok(Self { phases, tol })
    }

    /// Number of discrete phases `D`.
    pub fn phases(&self) -> usize {
        self.phases
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Discrete phase values `2 pi n / D`, `n = 0..D`.
    pub fn phase_values(&self) -> Vec<f64> {
        (0..self.phases)
            .map(|n| 2.0 * PI * n as f64 / self.phases as f64)
            .collect()
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.phases {
            return Err(Error::domain(format!(
                "pseudo-photon index {k} out of range for D={}",
                self.phases
            )));
        }
        Ok(())
    }
}

fn check_intensity(mu: f64) -> Result<()> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::domain(format!(
            "intensity must be finite and non-negative, got {mu}"
        )));
    }
    Ok(())
}

/// Terms `x^n / n!` for `n = offset, offset + period, ...`.
///
/// With `reduced` set, every term is divided by `x^offset`, which keeps the
/// leading term at `1 / offset!` even when `x^offset` would underflow.
struct ResidueTerms {
    x: f64,
    period: usize,
    n: usize,
    term: f64,
}

impl ResidueTerms {
    fn new(x: f64, period: usize, offset: usize, reduced: bool) -> Self {
        let mut term = 1.0;
        for i in 1..=offset {
            if reduced {
                term /= i as f64;
            } else {
                term *= x / i as f64;
            }
        }
        Self {
            x,
            period,
            n: offset,
            term,
        }
    }
}

impl Iterator for ResidueTerms {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        let out = (self.n, self.term);
        for i in 1..=self.period {
            self.term *= self.x / (self.n + i) as f64;
        }
        self.n += self.period;
        Some(out)
    }
}

fn min_terms(x: f64) -> usize {
    (4.0 * x.max(1.0)).ceil() as usize
}

/// Sums `weight(n) * term` until a weighted term drops below `tol` relative
/// to the partial sum, after at least `min_terms(x)` terms.
fn residue_sum(
    x: f64,
    period: usize,
    offset: usize,
    reduced: bool,
    tol: f64,
    weight: impl Fn(usize) -> f64,
) -> f64 {
    let floor = min_terms(x);
    let mut sum = 0.0;
    for (count, (n, term)) in ResidueTerms::new(x, period, offset, reduced)
        .take(MAX_TERMS)
        .enumerate()
    {
        let contrib = weight(n) * term;
        sum += contrib;
        if count + 1 >= floor && contrib.abs() <= tol * sum.abs() {
            break;
        }
    }
    sum
}

/// Probability `P_k^mu` of the pseudo `k`-photon component.
pub fn pseudo_photon_prob(mu: f64, k: usize, cfg: &PhaseConfig) -> Result<f64> {
    check_intensity(mu)?;
    cfg.check_index(k)?;
    let sum = residue_sum(mu, cfg.phases, k, false, cfg.tol, |_| 1.0);
    Ok(((-mu).exp() * sum).clamp(0.0, 1.0))
}

/// Poisson photon-number probability, the `D -> inf` limit of
/// [`pseudo_photon_prob`].
pub fn poisson_prob(mu: f64, k: usize) -> Result<f64> {
    check_intensity(mu)?;
    let mut p = (-mu).exp();
    for i in 1..=k {
        p *= mu / i as f64;
    }
    Ok(p)
}

/// `S_k(alpha) = sum_n e^{i 2 pi n k / D} exp(alpha e^{-i 2 pi n / D})`.
///
/// `k` is reduced modulo `D`.
pub fn s_k(alpha: ComplexValue, k: i64, cfg: &PhaseConfig) -> ComplexValue {
    let d = cfg.phases as i64;
    let k = k.rem_euclid(d) as f64;
    let d = d as f64;
    (0..cfg.phases)
        .map(|n| {
            let n = n as f64;
            let twist = Complex64::from_polar(1.0, 2.0 * PI * n * k / d);
            let rot = Complex64::from_polar(1.0, -2.0 * PI * n / d);
            twist * (alpha * rot).exp()
        })
        .sum()
}

/// Sums shared by the `mu`/`nu` fidelity: `(A, B, C)` with
/// `A = sum (mu nu)^{mD/2}/(mD)!`, `B = sum mu^{mD}/(mD)!`, `C = sum nu^{mD}/(mD)!`.
fn mu_nu_sums(mu: f64, nu: f64, cfg: &PhaseConfig) -> (f64, f64, f64) {
    let a = residue_sum((mu * nu).sqrt(), cfg.phases, 0, false, cfg.tol, |_| 1.0);
    let b = residue_sum(mu, cfg.phases, 0, false, cfg.tol, |_| 1.0);
    let c = residue_sum(nu, cfg.phases, 0, false, cfg.tol, |_| 1.0);
    (a, b, c)
}

/// Lower bound `F_{mu nu}` on the fidelity between pseudo-photon states of
/// the same index prepared at intensities `mu` and `nu`.
pub fn fidelity_mu_nu(mu: f64, nu: f64, cfg: &PhaseConfig) -> Result<f64> {
    check_intensity(mu)?;
    check_intensity(nu)?;
    let (a, b, c) = mu_nu_sums(mu, nu, cfg);
    Ok((a / (b * c).sqrt()).min(1.0))
}

/// `1 - F_{mu nu}^2`, evaluated without cancellation.
///
/// With `x = mu^D`, `y = nu^D`, `BC - A^2` regroups into the Lagrange form
/// `sum_{a<b} (x^{a/2} y^{b/2} - x^{b/2} y^{a/2})^2 / ((aD)! (bD)!)`, every
/// term non-negative.
pub fn fidelity_mu_nu_complement(mu: f64, nu: f64, cfg: &PhaseConfig) -> Result<f64> {
    check_intensity(mu)?;
    check_intensity(nu)?;
    let d = cfg.phases;
    // Collect enough terms of both residue-zero series (reduced form keeps
    // t_m = x^{mD}/(mD)! directly).
    let collect = |x: f64| -> Vec<f64> {
        let floor = min_terms(x);
        let mut out = Vec::new();
        let mut total = 0.0;
        for (count, (_, t)) in ResidueTerms::new(x, d, 0, false).take(MAX_TERMS).enumerate() {
            out.push(t);
            total += t;
            if count + 1 >= floor && t <= cfg.tol * total * 1e-3 {
                break;
            }
        }
        out
    };
    // sqrt terms: x^{m/2} / sqrt((mD)!) for each series.
    let mu_terms = collect(mu);
    let nu_terms = collect(nu);
    let len = mu_terms.len().max(nu_terms.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0).sqrt();
    let mut gap = 0.0;
    for a in 0..len {
        for b in (a + 1)..len {
            let diff = at(&mu_terms, a) * at(&nu_terms, b) - at(&mu_terms, b) * at(&nu_terms, a);
            gap += diff * diff;
        }
    }
    let (_, b, c) = mu_nu_sums(mu, nu, cfg);
    Ok((gap / (b * c)).clamp(0.0, 1.0))
}

/// Tail `sum_{m>=1} (2mu)^{mD} / (mD+1)!` of the `F_{mu 1}` series.
fn mu_one_tail(mu: f64, cfg: &PhaseConfig) -> f64 {
    // reduced residue-one series at x = 2mu has terms x^{mD}/(mD+1)!; drop m = 0
    residue_sum(2.0 * mu, cfg.phases, 1, true, cfg.tol, |n| if n == 1 { 0.0 } else { 1.0 })
}

/// `F_{mu 1}`: fidelity between the pseudo single-photon state at `2 mu` and
/// the Fock state `|1>`.
pub fn fidelity_mu_one(mu: f64, cfg: &PhaseConfig) -> Result<f64> {
    check_intensity(mu)?;
    Ok(1.0 / (1.0 + mu_one_tail(mu, cfg)).sqrt())
}

/// `1 - F_{mu 1}^2 = tail / (1 + tail)`.
pub fn fidelity_mu_one_complement(mu: f64, cfg: &PhaseConfig) -> Result<f64> {
    check_intensity(mu)?;
    let tail = mu_one_tail(mu, cfg);
    Ok(tail / (1.0 + tail))
}

/// Mean photon number `n_k` of the pseudo `k`-photon state, as the exact
/// series ratio `sum n t_n / sum t_n` over `n ≡ k (mod D)`.
pub fn expected_photon_number(mu: f64, k: usize, cfg: &PhaseConfig) -> Result<f64> {
    check_intensity(mu)?;
    cfg.check_index(k)?;
    // The common factor mu^k cancels; reduced terms avoid its underflow.
    let num = residue_sum(mu, cfg.phases, k, true, cfg.tol, |n| n as f64);
    let den = residue_sum(mu, cfg.phases, k, true, cfg.tol, |_| 1.0);
    Ok(num / den)
}

/// First-order approximation `k + mu^D / ((D+k)!/(D k!) + mu^D/D)`.
///
/// Kept for comparison only; [`expected_photon_number`] is exact.
pub fn expected_photon_number_approx(mu: f64, k: usize, cfg: &PhaseConfig) -> f64 {
    let d = cfg.phases;
    // (D+k)!/k! = (k+1)(k+2)...(k+D)
    let rising: f64 = (1..=d).map(|i| (k + i) as f64).product();
    let mu_d = mu.powi(d as i32);
    k as f64 + mu_d / (rising / d as f64 + mu_d / d as f64)
}

/// Binary Shannon entropy in bits, with `H(0) = H(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("entropy argument {x} outside [0, 1]")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// Photon-number statistics of a phase-randomized source: either `D`
/// discrete phases or the continuous (Poisson) limit.
pub trait PhotonSource {
    /// Probability of the (pseudo) `k`-photon component at intensity `mu`.
    fn photon_prob(&self, mu: f64, k: usize) -> Result<f64>;

    /// Expected photon number of the (pseudo) `k`-photon component.
    fn mean_photon_number(&self, mu: f64, k: usize) -> Result<f64>;
}

impl PhotonSource for PhaseConfig {
    fn photon_prob(&self, mu: f64, k: usize) -> Result<f64> {
        pseudo_photon_prob(mu, k, self)
    }

    fn mean_photon_number(&self, mu: f64, k: usize) -> Result<f64> {
        expected_photon_number(mu, k, self)
    }
}

/// Continuously randomized phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ContinuousPhase;

impl PhotonSource for ContinuousPhase {
    fn photon_prob(&self, mu: f64, k: usize) -> Result<f64> {
        poisson_prob(mu, k)
    }

    fn mean_photon_number(&self, mu: f64, k: usize) -> Result<f64> {
        check_intensity(mu)?;
        Ok(k as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(d: usize) -> PhaseConfig {
        PhaseConfig::new(d).unwrap()
    }

    /// Plain term-by-term oracle: `sum_{n ≡ k mod D} x^n / n!` via lgamma-free
    /// direct products, summed to a fixed large count.
    fn oracle_residue(x: f64, d: usize, k: usize) -> f64 {
        let mut total = 0.0;
        let mut m = 0;
        loop {
            let n = m * d + k;
            if n > 170 {
                break;
            }
            let mut t = 1.0;
            for i in 1..=n {
                t *= x / i as f64;
            }
            total += t;
            m += 1;
        }
        total
    }

    #[test]
    fn phase_config_validation() {
        assert!(PhaseConfig::new(0).is_err());
        assert!(PhaseConfig::new(3).is_err());
        assert!(PhaseConfig::new(2).is_ok());
        assert!(PhaseConfig::with_tolerance(4, 1e-5).is_err());
        assert!(PhaseConfig::with_tolerance(4, 0.0).is_err());
        assert_eq!(cfg(4).phase_values().len(), 4);
    }

    #[test]
    fn pseudo_photon_prob_examples() {
        assert_eq!(pseudo_photon_prob(0.0, 0, &cfg(4)).unwrap(), 1.0);
        assert_eq!(pseudo_photon_prob(0.0, 2, &cfg(4)).unwrap(), 0.0);
        let p = pseudo_photon_prob(0.5, 0, &cfg(2)).unwrap();
        let closed = (-0.5f64).exp() * 0.5f64.cosh();
        let oracle = (-0.5f64).exp() * oracle_residue(0.5, 2, 0);
        assert_relative_eq!(p, closed, max_relative = 1e-14);
        assert_relative_eq!(p, oracle, max_relative = 1e-14);
        assert!((p - 0.683940).abs() < 5e-7);
    }

    #[test]
    fn pseudo_photon_prob_domain_errors() {
        assert!(pseudo_photon_prob(-0.1, 0, &cfg(4)).is_err());
        assert!(pseudo_photon_prob(0.1, 4, &cfg(4)).is_err());
        assert!(pseudo_photon_prob(f64::NAN, 0, &cfg(4)).is_err());
    }

    #[test]
    fn s_k_examples() {
        let c = cfg(6);
        let zero = Complex64::new(0.0, 0.0);
        assert_relative_eq!(s_k(zero, 0, &c).re, 6.0, epsilon = 1e-14);
        assert!(s_k(zero, 3, &c).norm() < 1e-14);
        // Fock expansion oracle at alpha = 0.2, D = 8, k = 1
        let c8 = cfg(8);
        let alpha = Complex64::new(0.2, 0.0);
        let oracle = 8.0 * oracle_residue(0.2, 8, 1);
        let got = s_k(alpha, 1, &c8);
        assert_relative_eq!(got.re, oracle, max_relative = 1e-12);
        assert!(got.im.abs() < 1e-14);
        // modular index
        assert_eq!(s_k(alpha, 9, &c8), s_k(alpha, 1, &c8));
        assert_eq!(s_k(alpha, -7, &c8), s_k(alpha, 1, &c8));
    }

    #[test]
    fn fidelity_mu_nu_examples() {
        assert_relative_eq!(fidelity_mu_nu(0.3, 0.3, &cfg(10)).unwrap(), 1.0, epsilon = 1e-15);
        // nu = 0 leaves only the mu series in the denominator
        let f0 = fidelity_mu_nu(0.2, 0.0, &cfg(4)).unwrap();
        assert_relative_eq!(f0, 1.0 / oracle_residue(0.2, 4, 0).sqrt(), max_relative = 1e-14);
        assert!((1.0 - f0) < 1e-4);
        assert_eq!(fidelity_mu_nu(0.0, 0.0, &cfg(4)).unwrap(), 1.0);
        assert_eq!(
            fidelity_mu_nu(0.4, 0.1, &cfg(6)).unwrap(),
            fidelity_mu_nu(0.1, 0.4, &cfg(6)).unwrap()
        );
        let f4 = fidelity_mu_nu(0.4, 0.1, &cfg(4)).unwrap();
        // oracle: independent series at generous length
        let a = oracle_residue(0.2, 4, 0); // (mu nu)^{1/2} = 0.2
        let b = oracle_residue(0.4, 4, 0);
        let c = oracle_residue(0.1, 4, 0);
        assert_relative_eq!(f4, a / (b * c).sqrt(), max_relative = 1e-12);
        assert!(f4 > 0.0 && f4 < 1.0);
        let mut prev = f4;
        for d in [6, 8, 10, 12] {
            let f = fidelity_mu_nu(0.4, 0.1, &cfg(d)).unwrap();
            assert!(f >= prev);
            prev = f;
        }
        assert!(fidelity_mu_nu(-0.1, 0.1, &cfg(4)).is_err());
    }

    #[test]
    fn fidelity_mu_nu_complement_matches_direct() {
        for d in [2, 4, 6] {
            let c = cfg(d);
            let f = fidelity_mu_nu(0.9, 0.2, &c).unwrap();
            let direct = 1.0 - f * f;
            let comp = fidelity_mu_nu_complement(0.9, 0.2, &c).unwrap();
            assert_relative_eq!(comp, direct, max_relative = 1e-9);
        }
        // where the direct route has lost every digit, the leading term
        // (nu^{D/2} - mu^{D/2})^2 / D! still governs
        let c = cfg(16);
        let comp = fidelity_mu_nu_complement(0.4, 0.1, &c).unwrap();
        let d16: f64 = (1..=16).map(|i| i as f64).product();
        let lead = (0.1f64.powi(8) - 0.4f64.powi(8)).powi(2) / d16;
        assert_relative_eq!(comp, lead, max_relative = 1e-3);
        assert_eq!(fidelity_mu_nu_complement(0.3, 0.3, &c).unwrap(), 0.0);
    }

    #[test]
    fn fidelity_mu_one_examples() {
        assert_eq!(fidelity_mu_one(0.0, &cfg(6)).unwrap(), 1.0);
        let f = fidelity_mu_one(0.25, &cfg(12)).unwrap();
        assert!((1.0 - f).abs() < 1e-7);
        let f2 = fidelity_mu_one(0.5, &cfg(2)).unwrap();
        let closed = 1.0 / 1f64.sinh().sqrt();
        assert_relative_eq!(f2, closed, max_relative = 1e-14);
        assert!((f2 - 0.922452).abs() < 1e-6);
        let comp = fidelity_mu_one_complement(0.5, &cfg(2)).unwrap();
        assert_relative_eq!(comp, 1.0 - f2 * f2, max_relative = 1e-12);
        // first correction term (0.5)^12 / 13!
        let comp12 = fidelity_mu_one_complement(0.25, &cfg(12)).unwrap();
        let f13: f64 = (1..=13).map(|i| i as f64).product();
        assert_relative_eq!(comp12, 0.5f64.powi(12) / f13, max_relative = 1e-6);
    }

    #[test]
    fn expected_photon_number_examples() {
        assert_eq!(expected_photon_number(0.0, 1, &cfg(4)).unwrap(), 1.0);
        assert_eq!(expected_photon_number(0.0, 0, &cfg(4)).unwrap(), 0.0);
        let c = cfg(10);
        let exact = expected_photon_number(0.3, 1, &c).unwrap();
        let approx = expected_photon_number_approx(0.3, 1, &c);
        assert!((exact - 1.0).abs() < 1e-9);
        assert!(exact > 1.0);
        assert!((exact - approx).abs() < 1e-6);
        // against a brute-force mean over the residue class
        let c4 = cfg(4);
        let mut num = 0.0;
        let mut den = 0.0;
        for n in (2..120).step_by(4) {
            let mut t = 1.0;
            for i in 1..=n {
                t *= 0.8 / i as f64;
            }
            num += n as f64 * t;
            den += t;
        }
        assert_relative_eq!(
            expected_photon_number(0.8, 2, &c4).unwrap(),
            num / den,
            max_relative = 1e-13
        );
    }

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.11).unwrap() - 0.499916).abs() < 1e-6);
        assert!(binary_entropy(-0.01).is_err());
        assert!(binary_entropy(1.01).is_err());
    }

    #[test]
    fn normalization_over_grid() {
        for d in (2..=20).step_by(2) {
            let c = cfg(d);
            for i in 0..=10 {
                let mu = i as f64 / 10.0;
                let total: f64 = (0..d).map(|k| pseudo_photon_prob(mu, k, &c).unwrap()).sum();
                assert!((total - 1.0).abs() < 1e-12, "D={d} mu={mu} total={total}");
            }
        }
    }

    #[test]
    fn continuous_limit_is_monotone() {
        for &mu in &[0.05, 0.2, 0.5] {
            for k in 0..=3 {
                let poisson = poisson_prob(mu, k).unwrap();
                let mut prev = f64::INFINITY;
                for d in [4, 8, 12, 16, 20] {
                    let gap = (pseudo_photon_prob(mu, k, &cfg(d)).unwrap() - poisson).abs();
                    assert!(gap <= prev, "mu={mu} k={k} D={d}");
                    prev = gap;
                }
                assert!(prev < 1e-10);
            }
        }
    }

    #[test]
    fn series_terminate_quickly() {
        for d in [2, 4, 20] {
            for &x in &[0.0, 0.5, 2.0, 4.0] {
                let n = ResidueTerms::new(x, d, 0, false)
                    .take_while(|&(_, t)| t > 1e-18)
                    .count();
                assert!(n < 200);
            }
        }
    }

    #[test]
    fn continuous_source_is_poisson() {
        let src = ContinuousPhase;
        assert_relative_eq!(
            src.photon_prob(0.3, 1).unwrap(),
            0.3 * (-0.3f64).exp(),
            max_relative = 1e-15
        );
        assert_eq!(src.mean_photon_number(0.3, 2).unwrap(), 2.0);
    }
}
