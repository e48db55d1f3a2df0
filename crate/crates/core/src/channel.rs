//! Analytic model of the symmetric lossy channel and the untrusted
//! interference node: per-round click probabilities, pairing and sifting
//! statistics, the Z-basis QBER, the pseudo single-photon-pair fraction and
//! the X-basis single-photon-pair yield.
//!
//! Each round carries a 2-bit intensity setting `z = [z_a, z_b]`, each party
//! sending `mu` when its bit is 1 and vacuum otherwise. The four settings are
//! equiprobable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{fidelity_mu_one_complement, PhaseConfig, PhotonSource};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    /// Dark count probability per detector per round.
    #[serde(rename = "p_d")]
    pub dark_count: f64,
    #[serde(rename = "eta_d")]
    pub detector_efficiency: f64,
    #[serde(rename = "e_d")]
    pub misalignment: f64,
    /// Error-correction efficiency `f`.
    #[serde(rename = "f")]
    pub ec_efficiency: f64,
    /// Fiber loss in dB/km.
    #[serde(rename = "alpha_db")]
    pub fiber_loss_db: f64,
    /// Total Alice-Bob distance in km.
    #[serde(rename = "L_km")]
    pub distance_km: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            dark_count: 1.2e-8,
            detector_efficiency: 0.2,
            misalignment: 0.04,
            ec_efficiency: 1.15,
            fiber_loss_db: 0.2,
            distance_km: 0.0,
        }
    }
}

impl ChannelParams {
    pub fn at_distance(self, distance_km: f64) -> Self {
        Self {
            distance_km,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..1e-3).contains(&self.dark_count)
            && self.detector_efficiency > 0.0
            && self.detector_efficiency <= 1.0
            && (0.0..0.5).contains(&self.misalignment)
            && self.ec_efficiency >= 1.0
            && self.fiber_loss_db > 0.0
            && self.distance_km >= 0.0
            && self.distance_km.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid channel parameters {self:?}")))
        }
    }

    /// End-to-end fiber transmittance, detector efficiency excluded.
    pub fn fiber_transmittance(&self) -> f64 {
        10f64.powf(-self.fiber_loss_db * self.distance_km / 10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkBudget {
    /// Single-side transmittance including detector efficiency.
    pub eta_s: f64,
}

/// Each party sits at `L/2` from the measurement node.
pub fn link_budget(ch: &ChannelParams) -> LinkBudget {
    let arm_db = ch.fiber_loss_db * ch.distance_km / 2.0;
    LinkBudget {
        eta_s: ch.detector_efficiency * 10f64.powf(-arm_db / 10.0),
    }
}

/// The four 2-bit settings, indexed `2 * z_a + z_b`.
const SETTINGS: [(u8, u8); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// `[z_i, z_j]` combinations with `z_i xor z_j = 11`.
const SIGNAL_PAIRS: [((u8, u8), (u8, u8)); 4] = [
    ((0, 0), (1, 1)),
    ((0, 1), (1, 0)),
    ((1, 0), (0, 1)),
    ((1, 1), (0, 0)),
];

/// Bit-error subset of [`SIGNAL_PAIRS`].
const ERROR_PAIRS: [((u8, u8), (u8, u8)); 2] = [((0, 0), (1, 1)), ((1, 1), (0, 0))];

/// `Pr(C = 1 | z) = 1 - (1 - 2 p_d) exp(-eta_s mu (z_a + z_b))`.
pub fn click_prob_given_intensity(
    z_a: u8,
    z_b: u8,
    mu: f64,
    lb: &LinkBudget,
    ch: &ChannelParams,
) -> f64 {
    let photons = mu * f64::from(z_a + z_b);
    // 1 - (1-2p)e^{-x} = 2p e^{-x} - expm1(-x)
    let x = lb.eta_s * photons;
    2.0 * ch.dark_count * (-x).exp() - (-x).exp_m1()
}

/// Average click probability `p` over the four equiprobable settings.
pub fn mean_click_prob(mu: f64, lb: &LinkBudget, ch: &ChannelParams) -> f64 {
    SETTINGS
        .iter()
        .map(|&(a, b)| click_prob_given_intensity(a, b, mu, lb, ch))
        .sum::<f64>()
        / 4.0
}

/// `Pr(C = 1 | k)` when the parties emit pseudo `k_a`- and `k_b`-photon
/// states; the exponent is the (non-integer) sum of mean photon numbers.
pub fn click_prob_given_pseudo_photons<S: PhotonSource + ?Sized>(
    k_a: usize,
    k_b: usize,
    mu: f64,
    lb: &LinkBudget,
    ch: &ChannelParams,
    source: &S,
) -> Result<f64> {
    let n = source.mean_photon_number(mu, k_a)? + source.mean_photon_number(mu, k_b)?;
    // (1 - eta)^n = exp(n ln(1 - eta))
    let survive = (n * (-lb.eta_s).ln_1p()).exp();
    Ok(1.0 - (1.0 - 2.0 * ch.dark_count) * survive)
}

/// Average pairing rate per round for click probability `p` and maximal
/// pairing interval `l`.
pub fn pairing_rate(p: f64, l: u64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    let p = p.min(1.0);
    // 1 - (1-p)^l
    let within = -(l as f64 * (-p).ln_1p()).exp_m1();
    if within <= 0.0 {
        return 0.0;
    }
    1.0 / (1.0 / (p * within) + 1.0 / p)
}

fn click_table(mu: f64, lb: &LinkBudget, ch: &ChannelParams) -> [[f64; 2]; 2] {
    let mut t = [[0.0; 2]; 2];
    for &(a, b) in &SETTINGS {
        t[a as usize][b as usize] = click_prob_given_intensity(a, b, mu, lb, ch);
    }
    t
}

/// Two intensity settings `(z_a, z_b)`, one per paired round.
type SettingPair = ((u8, u8), (u8, u8));

fn pair_sum(table: &[[f64; 2]; 2], pairs: &[SettingPair]) -> f64 {
    pairs
        .iter()
        .map(|&((a1, b1), (a2, b2))| table[a1 as usize][b1 as usize] * table[a2 as usize][b2 as usize])
        .sum()
}

/// Fraction `r_s` of clicked pairs that are signal (Z) pairs.
pub fn signal_pair_ratio(mu: f64, lb: &LinkBudget, ch: &ChannelParams) -> f64 {
    let p = mean_click_prob(mu, lb, ch);
    if p <= 0.0 {
        return 0.0;
    }
    let table = click_table(mu, lb, ch);
    pair_sum(&table, &SIGNAL_PAIRS) / (16.0 * p * p)
}

/// Expected Z-basis QBER `E^Z_{mu,mu}` among signal pairs.
pub fn qber_z(mu: f64, lb: &LinkBudget, ch: &ChannelParams) -> f64 {
    let table = click_table(mu, lb, ch);
    let signal = pair_sum(&table, &SIGNAL_PAIRS);
    if signal <= 0.0 {
        return 0.0;
    }
    (pair_sum(&table, &ERROR_PAIRS) / signal).clamp(0.0, 0.5)
}

/// Fraction `q^Z_{1,1}` of signal pairs in which both parties emitted pseudo
/// single photons in the paired modes.
pub fn pseudo_single_pair_fraction<S: PhotonSource + ?Sized>(
    mu: f64,
    lb: &LinkBudget,
    ch: &ChannelParams,
    source: &S,
) -> Result<f64> {
    let p1 = source.photon_prob(mu, 1)?;
    if p1 == 0.0 {
        return Ok(0.0);
    }
    let signal = pair_sum(&click_table(mu, lb, ch), &SIGNAL_PAIRS);
    if signal <= 0.0 {
        return Ok(0.0);
    }
    let mut pseudo = [[0.0; 2]; 2];
    for &(a, b) in &SETTINGS {
        pseudo[a as usize][b as usize] =
            click_prob_given_pseudo_photons(a as usize, b as usize, mu, lb, ch, source)?;
    }
    Ok((p1 * p1 * pair_sum(&pseudo, &SIGNAL_PAIRS) / signal).clamp(0.0, 1.0))
}

/// Vacuum error rate `e_0`.
pub const VACUUM_ERROR: f64 = 0.5;

/// X-basis single-photon-pair yield and bit error rate `(Y_{1,1}, e_{1,1})`
/// for symmetric arms.
pub fn mdi_single_photon_yield_error(lb: &LinkBudget, ch: &ChannelParams) -> (f64, f64) {
    let (ea, eb) = (lb.eta_s, lb.eta_s);
    let pd = ch.dark_count;
    let keep = 1.0 - pd * pd;
    let y11 = keep
        * (ea * eb / 2.0
            + (2.0 * ea + 2.0 * eb - 3.0 * ea * eb) * pd
            + 4.0 * (1.0 - ea) * (1.0 - eb) * pd * pd);
    if y11 <= 0.0 {
        return (0.0, VACUUM_ERROR);
    }
    let ey = VACUUM_ERROR * y11 - (VACUUM_ERROR - ch.misalignment) * keep * ea * eb / 2.0;
    (y11, (ey / y11).clamp(0.0, 0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YieldBracket {
    pub y_lo: f64,
    pub y_hi: f64,
    pub ey_lo: f64,
    pub ey_hi: f64,
}

impl YieldBracket {
    pub fn point(y: f64, ey: f64) -> Self {
        Self {
            y_lo: y,
            y_hi: y,
            ey_lo: ey,
            ey_hi: ey,
        }
    }

    pub fn widen(y: f64, ey: f64, eps: f64) -> Self {
        Self {
            y_lo: (y - eps).clamp(0.0, 1.0),
            y_hi: (y + eps).clamp(0.0, 1.0),
            ey_lo: (ey - eps).clamp(0.0, 1.0),
            ey_hi: (ey + eps).clamp(0.0, 1.0),
        }
    }
}

/// Transfers the single-photon yield and error yield to the pseudo
/// single-photon state at `2 mu`: both move by at most
/// `sqrt(1 - F_{mu 1}^2)`.
pub fn apply_deviation(y11: f64, e11: f64, mu: f64, cfg: &PhaseConfig) -> Result<YieldBracket> {
    let eps = fidelity_mu_one_complement(mu, cfg)?.sqrt();
    Ok(YieldBracket::widen(y11, e11 * y11, eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ContinuousPhase;
    use approx::assert_relative_eq;

    fn table1() -> ChannelParams {
        ChannelParams::default()
    }

    fn lb(eta: f64) -> LinkBudget {
        LinkBudget { eta_s: eta }
    }

    #[test]
    fn defaults_are_table_one() {
        let ch = table1();
        assert_eq!(ch.dark_count, 1.2e-8);
        assert_eq!(ch.ec_efficiency, 1.15);
        assert_eq!(ch.detector_efficiency, 0.2);
        assert_eq!(ch.misalignment, 0.04);
        assert_eq!(ch.fiber_loss_db, 0.2);
        ch.validate().unwrap();
        assert!(ChannelParams { dark_count: 2e-3, ..ch }.validate().is_err());
        assert!(ChannelParams { ec_efficiency: 0.9, ..ch }.validate().is_err());
    }

    #[test]
    fn link_budget_examples() {
        let ch = table1();
        assert_relative_eq!(link_budget(&ch).eta_s, 0.2);
        assert_relative_eq!(link_budget(&ch.at_distance(100.0)).eta_s, 0.02, max_relative = 1e-14);
        let ideal = ChannelParams { detector_efficiency: 1.0, ..ch }.at_distance(200.0);
        assert_relative_eq!(link_budget(&ideal).eta_s, 0.01, max_relative = 1e-14);
    }

    #[test]
    fn click_prob_examples() {
        let ch = table1();
        let b = lb(0.02);
        assert_relative_eq!(
            click_prob_given_intensity(0, 0, 0.3, &b, &ch),
            2.0 * ch.dark_count,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            click_prob_given_intensity(1, 1, 1e6, &lb(1.0), &ch),
            1.0,
            epsilon = 1e-15
        );
        let direct = 1.0 - (1.0 - 2.4e-8) * (-0.002f64).exp();
        let got = click_prob_given_intensity(1, 0, 0.1, &b, &ch);
        assert_relative_eq!(got, direct, max_relative = 1e-12);
        assert!((got - 1.998e-3).abs() < 1e-6);
    }

    #[test]
    fn mean_click_examples() {
        let ch = table1();
        assert_relative_eq!(
            mean_click_prob(0.0, &lb(0.1), &ch),
            2.0 * ch.dark_count,
            max_relative = 1e-12
        );
        let noiseless = ChannelParams { dark_count: 0.0, ..ch };
        let p = mean_click_prob(1e-3, &lb(1e-3), &noiseless);
        assert_relative_eq!(p, 1e-6, max_relative = 1e-5);
    }

    #[test]
    fn pseudo_photon_click_examples() {
        let noiseless = ChannelParams { dark_count: 0.0, ..table1() };
        let c12 = PhaseConfig::new(12).unwrap();
        assert_eq!(
            click_prob_given_pseudo_photons(0, 0, 0.0, &lb(0.3), &noiseless, &c12).unwrap(),
            0.0
        );
        assert_relative_eq!(
            click_prob_given_pseudo_photons(1, 0, 1e-9, &lb(0.3), &noiseless, &c12).unwrap(),
            0.3,
            max_relative = 1e-12
        );
        let ch = table1();
        let got = click_prob_given_pseudo_photons(1, 1, 0.1, &lb(0.02), &ch, &c12).unwrap();
        let n1 = crate::series::expected_photon_number(0.1, 1, &c12).unwrap();
        let expect = 1.0 - (1.0 - 2.4e-8) * 0.98f64.powf(2.0 * n1);
        assert_relative_eq!(got, expect, max_relative = 1e-12);
        assert!((got - (1.0 - 0.98f64 * 0.98)).abs() < 1e-7);
    }

    #[test]
    fn pairing_rate_examples() {
        assert_eq!(pairing_rate(1.0, 1), 0.5);
        assert_relative_eq!(pairing_rate(0.5, 2), 1.0 / (1.0 / 0.375 + 2.0), max_relative = 1e-14);
        assert!((pairing_rate(0.5, 2) - 0.214286).abs() < 1e-6);
        assert_relative_eq!(pairing_rate(0.01, u64::MAX), 0.005, max_relative = 1e-12);
        assert_eq!(pairing_rate(0.0, 10), 0.0);
    }

    #[test]
    fn pairing_rate_monotone_and_bounded() {
        for i in 1..=20 {
            let p = i as f64 / 20.0;
            let mut prev = 0.0;
            for l in [1u64, 2, 5, 10, 100, 1000, 1_000_000] {
                let r = pairing_rate(p, l);
                assert!(r <= p / 2.0 + 1e-15);
                assert!(r >= prev);
                prev = r;
            }
            if i > 1 {
                assert!(pairing_rate(p, 7) >= pairing_rate(p - 0.05, 7));
            }
        }
    }

    #[test]
    fn signal_ratio_examples() {
        let noiseless = ChannelParams { dark_count: 0.0, ..table1() };
        for &(eta, mu) in &[(1e-3, 1.0), (1e-2, 0.05), (1e-4, 0.5)] {
            let rs = signal_pair_ratio(mu, &lb(eta), &noiseless);
            assert!((rs - 0.125).abs() < 0.00125, "eta mu = {}", eta * mu);
        }
        let rs0 = signal_pair_ratio(0.0, &lb(0.1), &table1());
        assert_relative_eq!(rs0, 0.25, max_relative = 1e-12);
    }

    #[test]
    fn qber_examples() {
        let noiseless = ChannelParams { dark_count: 0.0, ..table1() };
        assert_eq!(qber_z(0.2, &lb(0.05), &noiseless), 0.0);
        assert_relative_eq!(qber_z(0.0, &lb(0.05), &table1()), 0.5, max_relative = 1e-12);
        let ch = table1().at_distance(50.0);
        let e = qber_z(0.1, &link_budget(&ch), &ch);
        assert!(e > 0.0 && e < 0.01 * ch.misalignment);
    }

    #[test]
    fn q11_examples() {
        let noiseless = ChannelParams { dark_count: 0.0, ..table1() };
        let c8 = PhaseConfig::new(8).unwrap();
        for &mu in &[1e-3, 1e-4] {
            let q = pseudo_single_pair_fraction(mu, &lb(0.01), &noiseless, &c8).unwrap();
            assert!((q - 1.0).abs() < 3.0 * mu, "mu={mu} q={q}");
        }
        assert_eq!(pseudo_single_pair_fraction(0.0, &lb(0.01), &table1(), &c8).unwrap(), 0.0);
        let ch = table1().at_distance(100.0);
        let b = link_budget(&ch);
        let c12 = PhaseConfig::new(12).unwrap();
        let mut prev = 1.0;
        for i in 0..=9 {
            let mu = 0.05 + 0.05 * i as f64;
            let q = pseudo_single_pair_fraction(mu, &b, &ch, &c12).unwrap();
            assert!(q > 0.0 && q < prev);
            prev = q;
        }
        let cont = pseudo_single_pair_fraction(0.1, &b, &ch, &ContinuousPhase).unwrap();
        let disc = pseudo_single_pair_fraction(0.1, &b, &ch, &c12).unwrap();
        assert_relative_eq!(cont, disc, max_relative = 1e-6);
    }

    /// Second, independent transcription of the single-photon-pair yield and
    /// error formulas for asymmetric arms.
    fn yield_oracle(ea: f64, eb: f64, pd: f64, ed: f64) -> (f64, f64) {
        let y = (1.0 - pd.powi(2))
            * (0.5 * ea * eb + pd * (2.0 * (ea + eb) - 3.0 * ea * eb) + 4.0 * pd.powi(2) * (1.0 - ea) * (1.0 - eb));
        let ey = 0.5 * y - (0.5 - ed) * (1.0 - pd.powi(2)) * 0.5 * ea * eb;
        (y, ey / y)
    }

    #[test]
    fn single_photon_yield_examples() {
        let noiseless = ChannelParams { dark_count: 0.0, ..table1() };
        let (y, e) = mdi_single_photon_yield_error(&lb(0.03), &noiseless);
        assert_relative_eq!(y, 0.03 * 0.03 / 2.0, max_relative = 1e-14);
        assert_relative_eq!(e, 0.04, max_relative = 1e-12);
        let dark = ChannelParams { dark_count: 1e-4, ..table1() };
        let (y0, e0) = mdi_single_photon_yield_error(&lb(0.0), &dark);
        assert_relative_eq!(y0, (1.0 - 1e-8) * 4e-8, max_relative = 1e-12);
        assert_relative_eq!(e0, 0.5, max_relative = 1e-12);
        let ch = table1().at_distance(100.0);
        let b = link_budget(&ch);
        let (y, e) = mdi_single_photon_yield_error(&b, &ch);
        let (yo, eo) = yield_oracle(b.eta_s, b.eta_s, ch.dark_count, ch.misalignment);
        assert_relative_eq!(y, yo, max_relative = 1e-13);
        assert_relative_eq!(e, eo, max_relative = 1e-12);
    }

    #[test]
    fn deviation_examples() {
        let c = PhaseConfig::new(8).unwrap();
        let b = apply_deviation(1e-4, 0.05, 0.0, &c).unwrap();
        assert_eq!(b, YieldBracket::point(1e-4, 5e-6));
        let mut prev = f64::INFINITY;
        for d in (8..=20).step_by(2) {
            let br = apply_deviation(0.5, 0.1, 0.1, &PhaseConfig::new(d).unwrap()).unwrap();
            let eps = br.y_hi - 0.5;
            assert!(eps < prev);
            prev = eps;
        }
        assert!(prev < 1e-12);
        let br = apply_deviation(0.5, 0.1, 0.5, &PhaseConfig::new(2).unwrap()).unwrap();
        assert!((br.y_hi - 0.5 - 0.38613).abs() < 1e-4);
        let clamped = apply_deviation(0.1, 0.5, 0.5, &PhaseConfig::new(2).unwrap()).unwrap();
        assert_eq!(clamped.y_lo, 0.0);
        assert_eq!(clamped.ey_lo, 0.0);
    }
}
