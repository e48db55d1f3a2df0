//! Round-by-round Monte Carlo of clicks and greedy mode pairing, used to
//! check the analytic pairing rate, signal-pair ratio and Z-basis QBER.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    click_prob_given_intensity, link_budget, mean_click_prob, pairing_rate, qber_z,
    signal_pair_ratio, ChannelParams,
};
use crate::error::{Error, Result};

pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9, seed_from_u64)";

/// Minimum number of rounds for meaningful statistics.
pub const MIN_ROUNDS: u64 = 10_000;

const BATCHES: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_rounds: u64,
    pub seed: u64,
    pub l: u64,
    pub mu: f64,
    #[serde(default)]
    pub ch: ChannelParams,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        self.ch.validate()?;
        if self.n_rounds < MIN_ROUNDS {
            return Err(Error::domain(format!(
                "need at least {MIN_ROUNDS} rounds, got {}",
                self.n_rounds
            )));
        }
        if self.l == 0 {
            return Err(Error::domain("pairing interval must be >= 1"));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::domain(format!("invalid intensity {}", self.mu)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McStats {
    pub n_rounds: u64,
    pub clicks: u64,
    pub pairs: u64,
    pub signal_pairs: u64,
    pub error_pairs: u64,
    pub click_fraction: f64,
    pub click_fraction_stderr: f64,
    pub pairs_per_round: f64,
    pub pairs_per_round_stderr: f64,
    pub signal_pair_fraction: f64,
    pub signal_pair_fraction_stderr: f64,
    pub z_error_fraction: f64,
    pub z_error_fraction_stderr: f64,
    pub rng: String,
    pub seed: u64,
}

/// Standard error of a binomial proportion with add-one smoothing, so it
/// stays positive when no or all trials succeed.
fn smoothed_stderr(successes: u64, trials: u64) -> f64 {
    let p = (successes as f64 + 1.0) / (trials as f64 + 2.0);
    (p * (1.0 - p) / (trials as f64).max(1.0)).sqrt()
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Runs one replica.
///
/// Each round draws both intensity bits uniformly, clicks with
/// `Pr(C | z)`, and offers the click to the pairing rule: a pending click
/// pairs with the next click at most `l` rounds later, otherwise it is
/// dropped and the new click becomes pending.
pub fn simulate(cfg: &McConfig) -> Result<McStats> {
    cfg.validate()?;
    let lb = link_budget(&cfg.ch);
    let mut click_p = [[0.0; 2]; 2];
    for (a, row) in click_p.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            *v = click_prob_given_intensity(a as u8, b as u8, cfg.mu, &lb, &cfg.ch);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let batch_len = cfg.n_rounds.div_ceil(BATCHES);
    let mut batch_pairs = vec![0u64; cfg.n_rounds.div_ceil(batch_len) as usize];
    let (mut clicks, mut pairs, mut signal, mut errors) = (0u64, 0u64, 0u64, 0u64);
    let mut pending: Option<(u64, u8, u8)> = None;
    let mut last_paired: Option<u64> = None;

    for round in 0..cfg.n_rounds {
        let bits: u8 = rng.random();
        let (za, zb) = (bits & 1, (bits >> 1) & 1);
        if rng.random::<f64>() >= click_p[za as usize][zb as usize] {
            continue;
        }
        clicks += 1;
        match pending {
            Some((first, fa, fb)) if round - first <= cfg.l => {
                debug_assert!(last_paired.is_none_or(|r| r < first));
                last_paired = Some(round);
                pairs += 1;
                batch_pairs[(round / batch_len) as usize] += 1;
                let is_signal = (fa ^ za) == 1 && (fb ^ zb) == 1;
                if is_signal {
                    signal += 1;
                    // [00, 11] or [11, 00]
                    if fa == fb {
                        errors += 1;
                    }
                }
                pending = None;
            }
            _ => pending = Some((round, za, zb)),
        }
    }

    // Batch means for the pair rate: pairing correlates neighbouring rounds.
    let n = cfg.n_rounds as f64;
    let pairs_per_round = pairs as f64 / n;
    let nb = batch_pairs.len() as f64;
    let means: Vec<f64> = batch_pairs
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let start = i as u64 * batch_len;
            let len = batch_len.min(cfg.n_rounds - start);
            c as f64 / len as f64
        })
        .collect();
    let avg = means.iter().sum::<f64>() / nb;
    let var = means.iter().map(|m| (m - avg).powi(2)).sum::<f64>() / (nb - 1.0);
    let mut pairs_stderr = (var / nb).sqrt();
    if !(pairs_stderr > 0.0) {
        pairs_stderr = smoothed_stderr(pairs, cfg.n_rounds);
    }

    Ok(McStats {
        n_rounds: cfg.n_rounds,
        clicks,
        pairs,
        signal_pairs: signal,
        error_pairs: errors,
        click_fraction: ratio(clicks, cfg.n_rounds),
        click_fraction_stderr: smoothed_stderr(clicks, cfg.n_rounds),
        pairs_per_round,
        pairs_per_round_stderr: pairs_stderr,
        signal_pair_fraction: ratio(signal, pairs),
        signal_pair_fraction_stderr: smoothed_stderr(signal, pairs),
        z_error_fraction: ratio(errors, signal),
        z_error_fraction_stderr: smoothed_stderr(errors, signal),
        rng: RNG_ALGORITHM.to_string(),
        seed: cfg.seed,
    })
}

/// Analytic counterparts of the simulated statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticStats {
    pub p: f64,
    pub r_p: f64,
    pub r_s: f64,
    pub e_z: f64,
}

impl AnalyticStats {
    pub fn for_config(cfg: &McConfig) -> Self {
        let lb = link_budget(&cfg.ch);
        let p = mean_click_prob(cfg.mu, &lb, &cfg.ch);
        Self {
            p,
            r_p: pairing_rate(p, cfg.l),
            r_s: signal_pair_ratio(cfg.mu, &lb, &cfg.ch),
            e_z: qber_z(cfg.mu, &lb, &cfg.ch),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZScore {
    pub name: &'static str,
    pub empirical: f64,
    pub analytic: f64,
    pub stderr: f64,
    pub z: f64,
    /// `|z| > 3`.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub scores: Vec<ZScore>,
}

impl Comparison {
    pub fn all_within(&self) -> bool {
        self.scores.iter().all(|s| !s.flagged)
    }

    pub fn get(&self, name: &str) -> Option<&ZScore> {
        self.scores.iter().find(|s| s.name == name)
    }
}

fn score(name: &'static str, empirical: f64, analytic: f64, stderr: f64) -> ZScore {
    let gap = empirical - analytic;
    let z = if gap == 0.0 { 0.0 } else { gap / stderr };
    ZScore {
        name,
        empirical,
        analytic,
        stderr,
        z,
        flagged: z.abs() > 3.0,
    }
}

pub fn compare_with_analytic(stats: &McStats, analytic: &AnalyticStats) -> Comparison {
    Comparison {
        scores: vec![
            score("p", stats.click_fraction, analytic.p, stats.click_fraction_stderr),
            score("r_p", stats.pairs_per_round, analytic.r_p, stats.pairs_per_round_stderr),
            score(
                "r_s",
                stats.signal_pair_fraction,
                analytic.r_s,
                stats.signal_pair_fraction_stderr,
            ),
            score("E_z", stats.z_error_fraction, analytic.e_z, stats.z_error_fraction_stderr),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: u64, mu: f64, dist: f64, l: u64) -> McConfig {
        McConfig {
            n_rounds: n,
            seed: 42,
            l,
            mu,
            ch: ChannelParams::default().at_distance(dist),
        }
    }

    #[test]
    fn saturated_clicks_pair_consecutively() {
        let c = McConfig {
            ch: ChannelParams {
                detector_efficiency: 1.0,
                dark_count: 5e-4,
                ..ChannelParams::default()
            },
            ..cfg(100_000, 1e6, 0.0, 1)
        };
        let s = simulate(&c).unwrap();
        // vacuum-vacuum rounds click only on dark counts, so p ~ 3/4
        let a = AnalyticStats::for_config(&c);
        assert!((s.pairs_per_round - a.r_p).abs() < 5.0 * s.pairs_per_round_stderr);
        let all = McConfig { ch: ChannelParams { dark_count: 0.0, ..c.ch }, mu: 0.0, ..c };
        let quiet = simulate(&all).unwrap();
        assert_eq!(quiet.clicks, 0);
        assert_eq!(quiet.pairs, 0);
        assert!(quiet.pairs_per_round_stderr > 0.0);
        assert!(quiet.signal_pair_fraction_stderr > 0.0);
    }

    #[test]
    fn deterministic_for_seed() {
        let c = cfg(200_000, 0.3, 20.0, 50);
        assert_eq!(simulate(&c).unwrap(), simulate(&c).unwrap());
        let other = McConfig { seed: 43, ..c };
        assert_ne!(simulate(&c).unwrap().clicks, simulate(&other).unwrap().clicks);
    }

    #[test]
    fn compare_arithmetic() {
        let s = simulate(&cfg(100_000, 0.2, 10.0, 10)).unwrap();
        let same = AnalyticStats {
            p: s.click_fraction,
            r_p: s.pairs_per_round,
            r_s: s.signal_pair_fraction,
            e_z: s.z_error_fraction,
        };
        assert!(compare_with_analytic(&s, &same).scores.iter().all(|z| z.z == 0.0));
        let z = score("x", 0.52, 0.5, 0.01);
        assert!((z.z - 2.0).abs() < 1e-12 && !z.flagged);
        assert!(score("x", 0.54, 0.5, 0.01).flagged);
    }

    #[test]
    fn rejects_small_runs() {
        assert!(simulate(&cfg(100, 0.1, 10.0, 10)).is_err());
        assert!(simulate(&cfg(20_000, 0.1, 10.0, 0)).is_err());
    }

    #[test]
    fn json_field_names() {
        let s = simulate(&cfg(20_000, 0.2, 10.0, 10)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        for key in ["pairs_per_round", "signal_pair_fraction", "z_error_fraction", "rng"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
