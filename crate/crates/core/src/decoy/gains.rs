use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{fidelity_mu_nu_complement, pseudo_photon_prob, PhaseConfig};

/// Two intensities are the same table key when they agree to this relative
/// precision (summed intensities such as `nu + mu` are computed, not typed).
const KEY_TOL: f64 = 1e-12;

pub(crate) fn same_intensity(a: f64, b: f64) -> bool {
    (a - b).abs() <= KEY_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Vacuum / decoy / signal intensity choice of one party.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyConfig {
    pub mu: f64,
    pub nu: f64,
    pub s0: f64,
    pub s_nu: f64,
    pub s_mu: f64,
    pub cfg: PhaseConfig,
}

impl DecoyConfig {
    pub fn new(mu: f64, nu: f64, s0: f64, s_nu: f64, s_mu: f64, cfg: PhaseConfig) -> Result<Self> {
        if !(nu > 0.0 && nu < mu && mu.is_finite()) {
            return Err(Error::domain(format!(
                "decoy intensities must satisfy 0 < nu < mu, got nu={nu}, mu={mu}"
            )));
        }
        for s in [s0, s_nu, s_mu] {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::domain(format!("selection probability {s} outside (0, 1)")));
            }
        }
        let total = s0 + s_nu + s_mu;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "selection probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { mu, nu, s0, s_nu, s_mu, cfg })
    }

    /// Equal selection probabilities.
    pub fn uniform(mu: f64, nu: f64, cfg: PhaseConfig) -> Result<Self> {
        Self::new(mu, nu, 1.0 / 3.0, 1.0 / 3.0, 1.0 - 2.0 / 3.0, cfg)
    }

    /// Intensities a pair of rounds can sum to: `0, nu, mu, 2nu, nu+mu, 2mu`.
    pub fn summed_intensities(&self) -> [f64; 6] {
        let (m, n) = (self.mu, self.nu);
        [0.0, n, m, 2.0 * n, n + m, 2.0 * m]
    }
}

/// Observed gain `Q` and error gain `QE = Q * E` of one intensity setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainRecord {
    pub mu_a: f64,
    pub mu_b: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "QE")]
    pub qe: f64,
}

/// Gains keyed by the summed intensity pair `(mu_a, mu_b)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GainTable {
    records: Vec<GainRecord>,
}

impl GainTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces the entry for `(mu_a, mu_b)`.
    pub fn insert(&mut self, mu_a: f64, mu_b: f64, q: f64, qe: f64) -> Result<()> {
        let rec = GainRecord { mu_a, mu_b, q, qe };
        check_record(&rec)?;
        match self.position(mu_a, mu_b) {
            Some(i) => self.records[i] = rec,
            None => self.records.push(rec),
        }
        Ok(())
    }

    pub fn remove(&mut self, mu_a: f64, mu_b: f64) -> Option<GainRecord> {
        self.position(mu_a, mu_b).map(|i| self.records.remove(i))
    }

    fn position(&self, mu_a: f64, mu_b: f64) -> Option<usize> {
        self.records
            .iter()
            .position(|r| same_intensity(r.mu_a, mu_a) && same_intensity(r.mu_b, mu_b))
    }

    pub fn get(&self, mu_a: f64, mu_b: f64) -> Option<&GainRecord> {
        self.position(mu_a, mu_b).map(|i| &self.records[i])
    }

    pub fn require(&self, mu_a: f64, mu_b: f64) -> Result<&GainRecord> {
        self.get(mu_a, mu_b).ok_or(Error::MissingGain { mu_a, mu_b })
    }

    pub fn records(&self) -> &[GainRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Alice intensities that have an entry in Bob column `mu_b`, in
    /// insertion order.
    pub fn alice_rows(&self, mu_b: f64) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| same_intensity(r.mu_b, mu_b))
            .map(|r| r.mu_a)
            .collect()
    }

    /// Distinct Bob intensities paired with Alice intensity `mu_a`.
    pub fn bob_columns(&self, mu_a: f64) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| same_intensity(r.mu_a, mu_a))
            .map(|r| r.mu_b)
            .collect()
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn from_reader(reader: impl std::io::Read) -> Result<Self> {
        let mut table = Self::new();
        for rec in csv::Reader::from_reader(reader).deserialize() {
            let rec: GainRecord = rec?;
            table.insert(rec.mu_a, rec.mu_b, rec.q, rec.qe)?;
        }
        Ok(table)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_writer(std::fs::File::create(path)?)
    }

    pub fn to_writer(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for rec in &self.records {
            w.serialize(rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_record(r: &GainRecord) -> Result<()> {
    let unit = |v: f64| (0.0..=1.0).contains(&v);
    if !(r.mu_a >= 0.0 && r.mu_b >= 0.0 && r.mu_a.is_finite() && r.mu_b.is_finite()) {
        return Err(Error::domain(format!(
            "gain key ({}, {}) must be finite non-negative intensities",
            r.mu_a, r.mu_b
        )));
    }
    if !unit(r.q) || !unit(r.qe) || r.qe > r.q {
        return Err(Error::domain(format!(
            "gain entry ({}, {}) needs 0 <= QE <= Q <= 1, got Q={}, QE={}",
            r.mu_a, r.mu_b, r.q, r.qe
        )));
    }
    Ok(())
}

/// `P_{k_a}^{mu_a} P_{k_b}^{mu_b}`.
pub fn prob_k_given_mu_pair(
    k_a: usize,
    k_b: usize,
    mu_a: f64,
    mu_b: f64,
    cfg: &PhaseConfig,
) -> Result<f64> {
    Ok(pseudo_photon_prob(mu_a, k_a, cfg)? * pseudo_photon_prob(mu_b, k_b, cfg)?)
}

/// Deviation slack `sqrt(1 - F_{mu nu}^2)` between the signal and decoy
/// pseudo-photon states.
pub fn epsilon_slack(dc: &DecoyConfig) -> f64 {
    // Intensities are validated on construction, so the series cannot fail.
    fidelity_mu_nu_complement(dc.mu, dc.nu, &dc.cfg)
        .map(f64::sqrt)
        .unwrap_or(1.0)
}

/// Lower bound on the pseudo single-photon-pair share of signal clicks,
/// `(P_1^mu)^2 Y11_lo / Q^{mu,mu}`.
pub fn q11_fraction(y11_lo: f64, gain_signal: f64, mu: f64, cfg: &PhaseConfig) -> Result<f64> {
    if !(gain_signal > 0.0) {
        return Err(Error::domain(format!(
            "signal gain must be positive, got {gain_signal}"
        )));
    }
    let p1 = pseudo_photon_prob(mu, 1, cfg)?;
    Ok((p1 * p1 * y11_lo.max(0.0) / gain_signal).clamp(0.0, 1.0))
}
