//! Forward generation of gain tables from known yields, for checking the
//! estimator.

use rand::Rng;

use super::gains::{prob_k_given_mu_pair, same_intensity, DecoyConfig, GainTable};
use crate::error::{Error, Result};

/// Gains generated from known pseudo-photon yields.
///
/// Every intensity setting `(mu_a, mu_b)` gets its own yields
/// `clamp(Y* + delta)` and error yields `min(clamp(e* Y* + delta'), Y)` with
/// `|delta|, |delta'| <= eps / 2`, so yields of one pseudo-photon pair differ
/// by at most `eps` between settings.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub dc: DecoyConfig,
    pub eps: f64,
    pub intensities: Vec<f64>,
    /// Per setting `(i_a, i_b)`, `D x D` yields in row-major `(k_a, k_b)`.
    yields: Vec<Vec<f64>>,
    error_yields: Vec<Vec<f64>>,
    pub gains: GainTable,
}

impl SyntheticInstance {
    /// Draws base yields and error rates uniformly from `[0, 1]`, then
    /// per-setting deviations, and tabulates the resulting gains for every
    /// pair of `intensities`.
    pub fn generate<R: Rng + ?Sized>(
        dc: DecoyConfig,
        intensities: &[f64],
        eps: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let d = dc.cfg.phases();
        let base_y: Vec<f64> = (0..d * d).map(|_| rng.random::<f64>()).collect();
        let base_e: Vec<f64> = (0..d * d).map(|_| rng.random::<f64>()).collect();
        Self::from_base(dc, intensities, eps, &base_y, &base_e, rng)
    }

    /// As [`generate`](Self::generate) with caller-supplied base yields and
    /// error rates (`D x D`, row-major).
    pub fn from_base<R: Rng + ?Sized>(
        dc: DecoyConfig,
        intensities: &[f64],
        eps: f64,
        base_y: &[f64],
        base_e: &[f64],
        rng: &mut R,
    ) -> Result<Self> {
        let d = dc.cfg.phases();
        if base_y.len() != d * d || base_e.len() != d * d {
            return Err(Error::domain("base yields must be D x D"));
        }
        if !intensities.iter().any(|&m| same_intensity(m, dc.mu)) {
            return Err(Error::domain("intensity list must contain the signal intensity"));
        }
        let half = 0.5 * eps;
        let jitter = |rng: &mut R| {
            if half > 0.0 {
                rng.random_range(-half..=half)
            } else {
                0.0
            }
        };
        let settings = intensities.len() * intensities.len();
        let mut yields = Vec::with_capacity(settings);
        let mut error_yields = Vec::with_capacity(settings);
        for _ in 0..settings {
            let mut y = Vec::with_capacity(d * d);
            let mut ey = Vec::with_capacity(d * d);
            for (&yb, &eb) in base_y.iter().zip(base_e) {
                let yv = (yb + jitter(rng)).clamp(0.0, 1.0);
                let ev = (eb * yb + jitter(rng)).clamp(0.0, 1.0).min(yv);
                y.push(yv);
                ey.push(ev);
            }
            yields.push(y);
            error_yields.push(ey);
        }

        let mut gains = GainTable::new();
        for (ia, &mu_a) in intensities.iter().enumerate() {
            for (ib, &mu_b) in intensities.iter().enumerate() {
                let s = ia * intensities.len() + ib;
                let (mut q, mut qe) = (0.0, 0.0);
                for ka in 0..d {
                    for kb in 0..d {
                        let p = prob_k_given_mu_pair(ka, kb, mu_a, mu_b, &dc.cfg)?;
                        q += p * yields[s][ka * d + kb];
                        qe += p * error_yields[s][ka * d + kb];
                    }
                }
                gains.insert(mu_a, mu_b, q.min(1.0), qe.min(q.min(1.0)))?;
            }
        }
        Ok(Self {
            dc,
            eps,
            intensities: intensities.to_vec(),
            yields,
            error_yields,
            gains,
        })
    }

    fn signal_setting(&self) -> usize {
        let i = self
            .intensities
            .iter()
            .position(|&m| same_intensity(m, self.dc.mu))
            .expect("checked on construction");
        i * self.intensities.len() + i
    }

    /// True `(Y, Y e)` of pair `(k_a, k_b)` at the signal setting.
    pub fn truth(&self, k_a: usize, k_b: usize) -> (f64, f64) {
        let d = self.dc.cfg.phases();
        let s = self.signal_setting();
        (self.yields[s][k_a * d + k_b], self.error_yields[s][k_a * d + k_b])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::PhaseConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_gains_are_consistent() {
        let dc = DecoyConfig::uniform(0.4, 0.1, PhaseConfig::new(4).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let inst =
            SyntheticInstance::generate(dc, &dc.summed_intensities(), 0.01, &mut rng).unwrap();
        assert_eq!(inst.gains.len(), 36);
        for r in inst.gains.records() {
            assert!(r.qe <= r.q && r.q <= 1.0);
        }
        let (y, ey) = inst.truth(1, 1);
        assert!(ey <= y);
    }

    #[test]
    fn needs_signal_intensity() {
        let dc = DecoyConfig::uniform(0.4, 0.1, PhaseConfig::new(4).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!(SyntheticInstance::generate(dc, &[0.0, 0.1], 0.0, &mut rng).is_err());
    }
}
