//! Asymptotic key rate of the mode-pairing protocol, intensity optimization,
//! distance sweeps and the repeaterless PLOB bound.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    apply_deviation, link_budget, mdi_single_photon_yield_error, mean_click_prob, pairing_rate,
    pseudo_single_pair_fraction, qber_z, signal_pair_ratio, ChannelParams, YieldBracket,
};
use crate::error::{Error, Result, StageExt};
use crate::fidelity::{delta_from_complement, fidelity_overall, phase_error_bound};
use crate::series::{binary_entropy, poisson_prob, PhaseConfig, PhotonSource};

/// Phase randomization of the source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Randomization {
    Discrete(PhaseConfig),
    /// Continuous phase: Poisson photon statistics, `F_{1,1} = 1` and no
    /// deviation between the pseudo and true single-photon yields.
    Continuous,
}

impl Randomization {
    /// `D` phases, with `0` standing for continuous randomization.
    pub fn from_phases(phases: usize) -> Result<Self> {
        match phases {
            0 => Ok(Self::Continuous),
            d => Ok(Self::Discrete(PhaseConfig::new(d)?)),
        }
    }

    /// Phase count, `0` when continuous.
    pub fn phases(&self) -> usize {
        match self {
            Self::Discrete(cfg) => cfg.phases(),
            Self::Continuous => 0,
        }
    }
}

impl fmt::Display for Randomization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Discrete(cfg) => write!(f, "D={}", cfg.phases()),
            Self::Continuous => f.write_str("continuous"),
        }
    }
}

impl PhotonSource for Randomization {
    fn photon_prob(&self, mu: f64, k: usize) -> Result<f64> {
        match self {
            Self::Discrete(cfg) => cfg.photon_prob(mu, k),
            Self::Continuous => poisson_prob(mu, k),
        }
    }

    fn mean_photon_number(&self, mu: f64, k: usize) -> Result<f64> {
        match self {
            Self::Discrete(cfg) => cfg.mean_photon_number(mu, k),
            Self::Continuous => crate::series::ContinuousPhase.mean_photon_number(mu, k),
        }
    }
}

/// Intermediate quantities of one key-rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Mean click probability per round.
    pub p: f64,
    pub r_p: f64,
    pub r_s: f64,
    pub q11: f64,
    pub e_z: f64,
    pub e_phase: f64,
    /// Overall single-photon-pair fidelity `F_{1,1}`.
    pub f11: f64,
    /// `1 - F_{1,1}`, evaluated without cancellation.
    pub f11_complement: f64,
    pub y11: YieldBracket,
    pub delta: f64,
    pub delta_clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeyRatePoint {
    pub distance_km: f64,
    /// Phase count, `0` for continuous randomization.
    pub phases: usize,
    pub l: u64,
    pub mu: f64,
    /// Secret bits per round, clamped at zero.
    pub key_rate: f64,
    pub plob: f64,
    pub diagnostics: Diagnostics,
}

/// Repeaterless bound `-log2(1 - eta)` with `eta` the end-to-end fiber
/// transmittance. Infinite at zero distance.
pub fn plob_bound(ch: &ChannelParams) -> f64 {
    let eta = ch.fiber_transmittance();
    -(-eta).ln_1p() / std::f64::consts::LN_2
}

/// Key rate at intensity `mu`.
pub fn key_rate(
    mu: f64,
    rand: &Randomization,
    l: u64,
    ch: &ChannelParams,
) -> Result<KeyRatePoint> {
    ch.validate().stage("channel")?;
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::domain(format!("intensity {mu} outside [0, 1]"))).stage("intensity");
    }
    if l == 0 {
        return Err(Error::domain("pairing interval must be >= 1")).stage("pairing_rate");
    }

    let lb = link_budget(ch);
    let p = mean_click_prob(mu, &lb, ch);
    let r_p = pairing_rate(p, l);
    let r_s = signal_pair_ratio(mu, &lb, ch);
    let e_z = qber_z(mu, &lb, ch);
    let q11 = pseudo_single_pair_fraction(mu, &lb, ch, rand).stage("pseudo_single_pair_fraction")?;

    let (y11, e11) = mdi_single_photon_yield_error(&lb, ch);
    let bracket = match rand {
        Randomization::Discrete(cfg) => apply_deviation(y11, e11, mu, cfg).stage("apply_deviation")?,
        Randomization::Continuous => YieldBracket::point(y11, e11 * y11),
    };
    let (f11, f11_complement) = match rand {
        Randomization::Discrete(cfg) if mu > 0.0 => {
            let rep = fidelity_overall(mu, 1, cfg).stage("fidelity_overall")?;
            (rep.overall, rep.overall_complement)
        }
        _ => (1.0, 0.0),
    };

    let mut diag = Diagnostics {
        p,
        r_p,
        r_s,
        q11,
        e_z,
        e_phase: 0.5,
        f11,
        f11_complement,
        y11: bracket,
        delta: 0.0,
        delta_clamped: false,
    };
    let point = |key_rate: f64, diagnostics: Diagnostics| KeyRatePoint {
        distance_km: ch.distance_km,
        phases: rand.phases(),
        l,
        mu,
        key_rate,
        plob: plob_bound(ch),
        diagnostics,
    };

    if q11 <= 0.0 || bracket.y_lo <= 0.0 {
        return Ok(point(0.0, diag));
    }
    let e11_hi = (bracket.ey_hi / bracket.y_lo).min(0.5);
    let delta = delta_from_complement(f11_complement, bracket.y_lo).stage("delta_balance")?;
    diag.delta = delta.value;
    diag.delta_clamped = delta.clamped;
    if delta.clamped {
        return Ok(point(0.0, diag));
    }
    let e_phase = phase_error_bound(e11_hi, delta.value);
    if e_phase >= 0.5 {
        return Ok(point(0.0, diag));
    }
    diag.e_phase = e_phase;

    let h_phase = binary_entropy(e_phase).stage("binary_entropy")?;
    let h_z = binary_entropy(e_z).stage("binary_entropy")?;
    let rate = r_p * r_s * (q11 * (1.0 - h_phase) - ch.ec_efficiency * h_z);
    Ok(point(rate.max(0.0), diag))
}

/// Default intensity grid: 30 log-spaced points on `[0.005, 0.05)` followed
/// by 71 linear points on `[0.05, 0.5]`.
pub fn default_mu_grid() -> Vec<f64> {
    let (a, b) = (0.005f64, 0.05f64);
    let mut grid: Vec<f64> = (0..30)
        .map(|i| a * (b / a).powf(i as f64 / 30.0))
        .collect();
    grid.extend((0..71).map(|i| 0.05 + 0.45 * i as f64 / 70.0));
    grid
}

fn check_mu_grid(mu_grid: &[f64]) -> Result<()> {
    if mu_grid.is_empty() {
        return Err(Error::domain("intensity grid is empty"));
    }
    if let Some(bad) = mu_grid.iter().find(|m| !(0.0..=0.5).contains(*m)) {
        return Err(Error::domain(format!("grid intensity {bad} outside [0, 0.5]")));
    }
    Ok(())
}

/// Best key rate over `mu_grid`; ties go to the smaller intensity.
pub fn optimize_mu(
    rand: &Randomization,
    l: u64,
    ch: &ChannelParams,
    mu_grid: &[f64],
) -> Result<KeyRatePoint> {
    check_mu_grid(mu_grid)?;
    let mut sorted = mu_grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best: Option<KeyRatePoint> = None;
    for mu in sorted {
        let pt = key_rate(mu, rand, l, ch)?;
        if best.is_none_or(|b| pt.key_rate > b.key_rate) {
            best = Some(pt);
        }
    }
    Ok(best.expect("grid is non-empty"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(rename = "distances")]
    pub distances_km: Vec<f64>,
    /// Phase counts; `0` selects continuous randomization.
    #[serde(rename = "D_values")]
    pub phases: Vec<usize>,
    #[serde(rename = "l_values")]
    pub pairing_intervals: Vec<u64>,
    #[serde(default = "default_mu_grid")]
    pub mu_grid: Vec<f64>,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        check_mu_grid(&self.mu_grid)?;
        if let Some(bad) = self.distances_km.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(Error::Config(format!(
                "distance {bad} km: sweep distances must be positive (the PLOB bound diverges at 0)"
            )));
        }
        if self.pairing_intervals.contains(&0) {
            return Err(Error::Config("pairing interval must be >= 1".into()));
        }
        for &d in &self.phases {
            Randomization::from_phases(d)
                .map_err(|e| Error::Config(format!("phase count {d}: {e}")))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.distances_km.len() * self.phases.len() * self.pairing_intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(D, l, L)` jobs in output order.
    fn jobs(&self) -> Vec<(usize, u64, f64)> {
        let mut out = Vec::with_capacity(self.len());
        for &d in &self.phases {
            for &l in &self.pairing_intervals {
                for &dist in &self.distances_km {
                    out.push((d, l, dist));
                }
            }
        }
        out
    }
}

#[derive(Debug)]
pub struct SweepFailure {
    pub phases: usize,
    pub l: u64,
    pub distance_km: f64,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct SweepOutcome {
    /// Successful points ordered by `(D, l, L)` as listed in the grid.
    pub points: Vec<KeyRatePoint>,
    pub failures: Vec<SweepFailure>,
}

/// Evaluates every grid point with [`optimize_mu`] on the current rayon
/// pool. Output order does not depend on scheduling.
pub fn sweep(grid: &SweepGrid, ch: &ChannelParams) -> Result<SweepOutcome> {
    grid.validate()?;
    let results: Vec<_> = grid
        .jobs()
        .into_par_iter()
        .map(|(d, l, dist)| {
            let r = Randomization::from_phases(d)
                .and_then(|rand| optimize_mu(&rand, l, &ch.at_distance(dist), &grid.mu_grid));
            (d, l, dist, r)
        })
        .collect();
    let mut out = SweepOutcome::default();
    for (phases, l, distance_km, r) in results {
        match r {
            Ok(p) => out.points.push(p),
            Err(error) => out.failures.push(SweepFailure {
                phases,
                l,
                distance_km,
                error,
            }),
        }
    }
    Ok(out)
}

/// [`sweep`] on a dedicated pool of `workers` threads.
pub fn sweep_with_workers(
    grid: &SweepGrid,
    ch: &ChannelParams,
    workers: usize,
) -> Result<SweepOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| sweep(grid, ch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table1(dist: f64) -> ChannelParams {
        ChannelParams::default().at_distance(dist)
    }

    fn disc(d: usize) -> Randomization {
        Randomization::from_phases(d).unwrap()
    }

    #[test]
    fn plob_examples() {
        // eta = 0.5 -> 1 bit
        let half = ChannelParams {
            fiber_loss_db: 10.0 * 2f64.log10(),
            ..table1(1.0)
        };
        assert_relative_eq!(plob_bound(&half), 1.0, max_relative = 1e-12);
        assert!((plob_bound(&table1(100.0)) - 0.014500).abs() < 5e-7);
        let far = table1(1000.0);
        let eta = far.fiber_transmittance();
        assert_relative_eq!(plob_bound(&far), eta / std::f64::consts::LN_2, max_relative = 1e-12);
        assert!(plob_bound(&table1(0.0)).is_infinite());
    }

    #[test]
    fn zero_intensity_gives_zero_rate() {
        let pt = key_rate(0.0, &disc(12), 1000, &table1(50.0)).unwrap();
        assert_eq!(pt.key_rate, 0.0);
        assert_eq!(pt.diagnostics.q11, 0.0);
        assert_eq!(pt.diagnostics.f11, 1.0);
    }

    #[test]
    fn positive_rate_at_moderate_distance() {
        let pt = key_rate(0.1, &disc(14), 1_000_000, &table1(100.0)).unwrap();
        assert!(pt.key_rate > 0.0);
        assert!(pt.diagnostics.e_phase < 0.5);
        assert!(pt.diagnostics.q11 > 0.0 && pt.diagnostics.q11 < 1.0);
        assert_eq!(pt.plob, plob_bound(&table1(100.0)));
    }

    #[test]
    fn rate_non_decreasing_in_l() {
        for &dist in &[20.0, 80.0, 150.0] {
            for &mu in &[0.05, 0.15, 0.3] {
                let mut prev = 0.0;
                for &l in &[100u64, 10_000, 1_000_000] {
                    let r = key_rate(mu, &disc(12), l, &table1(dist)).unwrap().key_rate;
                    assert!(r >= prev, "L={dist} mu={mu} l={l}");
                    prev = r;
                }
            }
        }
    }

    #[test]
    fn rate_non_decreasing_in_phase_count() {
        for &dist in &[10.0, 50.0, 100.0, 150.0] {
            let rates: Vec<f64> = [8, 10, 12, 14]
                .iter()
                .map(|&d| key_rate(0.1, &disc(d), 1_000_000, &table1(dist)).unwrap().key_rate)
                .collect();
            if rates.iter().all(|r| *r > 0.0) {
                assert!(rates.windows(2).all(|w| w[1] >= w[0]), "L={dist} {rates:?}");
            }
        }
    }

    #[test]
    fn continuous_limit_sandwich() {
        for &dist in &[10.0, 50.0, 100.0, 150.0] {
            let ch = table1(dist);
            let r20 = key_rate(0.1, &disc(20), 1_000_000, &ch).unwrap().key_rate;
            let rc = key_rate(0.1, &Randomization::Continuous, 1_000_000, &ch).unwrap().key_rate;
            assert!(rc > 0.0);
            assert!((r20 - rc).abs() <= 0.05 * rc, "L={dist}: {r20} vs {rc}");
        }
    }

    #[test]
    fn default_grid_shape() {
        let g = default_mu_grid();
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.005);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!((g[100] - 0.5).abs() < 1e-15);
        assert!(g[29] < 0.05 && g[30] == 0.05);
    }

    #[test]
    fn optimizer_ties_and_single_point() {
        // Far beyond the reach of D = 4 every rate is zero.
        let far = table1(400.0);
        let pt = optimize_mu(&disc(4), 100, &far, &[0.3, 0.1, 0.2]).unwrap();
        assert_eq!(pt.key_rate, 0.0);
        assert_eq!(pt.mu, 0.1);
        let single = optimize_mu(&disc(12), 1000, &table1(50.0), &[0.17]).unwrap();
        assert_eq!(single, key_rate(0.17, &disc(12), 1000, &table1(50.0)).unwrap());
        assert!(optimize_mu(&disc(12), 1000, &far, &[]).is_err());
        assert!(optimize_mu(&disc(12), 1000, &far, &[0.6]).is_err());
    }

    #[test]
    fn coarse_and_fine_grids_agree() {
        let coarse: Vec<f64> = (0..51).map(|i| 0.01 * i as f64).collect();
        let fine: Vec<f64> = (0..501).map(|i| 0.001 * i as f64).collect();
        for &dist in &[30.0, 120.0] {
            let c = optimize_mu(&disc(12), 1_000_000, &table1(dist), &coarse).unwrap();
            let f = optimize_mu(&disc(12), 1_000_000, &table1(dist), &fine).unwrap();
            assert!((c.mu - f.mu).abs() <= 0.01 + 1e-12, "L={dist}: {} vs {}", c.mu, f.mu);
            assert!(f.key_rate >= c.key_rate);
        }
    }

    #[test]
    fn sweep_order_and_edge_cases() {
        let empty = SweepGrid {
            distances_km: vec![],
            phases: vec![12],
            pairing_intervals: vec![1000],
            mu_grid: default_mu_grid(),
        };
        assert!(sweep(&empty, &ChannelParams::default()).unwrap().points.is_empty());

        let one = SweepGrid {
            distances_km: vec![60.0],
            phases: vec![12],
            pairing_intervals: vec![1000],
            mu_grid: vec![0.05, 0.1, 0.2],
        };
        let out = sweep(&one, &ChannelParams::default()).unwrap();
        assert_eq!(out.points.len(), 1);
        let direct = optimize_mu(&disc(12), 1000, &table1(60.0), &one.mu_grid).unwrap();
        assert_eq!(out.points[0], direct);

        let grid = SweepGrid {
            distances_km: vec![100.0, 20.0],
            phases: vec![10, 0],
            pairing_intervals: vec![100, 10],
            mu_grid: vec![0.1, 0.2],
        };
        let out = sweep_with_workers(&grid, &ChannelParams::default(), 3).unwrap();
        let keys: Vec<_> = out.points.iter().map(|p| (p.phases, p.l, p.distance_km)).collect();
        assert_eq!(
            keys,
            vec![
                (10, 100, 100.0),
                (10, 100, 20.0),
                (10, 10, 100.0),
                (10, 10, 20.0),
                (0, 100, 100.0),
                (0, 100, 20.0),
                (0, 10, 100.0),
                (0, 10, 20.0)
            ]
        );
        let again = sweep_with_workers(&grid, &ChannelParams::default(), 1).unwrap();
        assert_eq!(out.points, again.points);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let mut g = SweepGrid {
            distances_km: vec![0.0],
            phases: vec![12],
            pairing_intervals: vec![10],
            mu_grid: vec![0.1],
        };
        assert!(matches!(sweep(&g, &ChannelParams::default()), Err(Error::Config(_))));
        g.distances_km = vec![10.0];
        g.phases = vec![7];
        assert!(sweep(&g, &ChannelParams::default()).is_err());
    }

    #[test]
    fn rate_non_increasing_in_phase_error() {
        // R as a function of e_phase with every other input frozen.
        let pt = key_rate(0.1, &disc(14), 1_000_000, &table1(80.0)).unwrap();
        let d = pt.diagnostics;
        let rate = |e: f64| {
            let r = d.r_p
                * d.r_s
                * (d.q11 * (1.0 - binary_entropy(e).unwrap())
                    - 1.15 * binary_entropy(d.e_z).unwrap());
            r.max(0.0)
        };
        assert_relative_eq!(rate(d.e_phase), pt.key_rate, max_relative = 1e-12);
        let mut prev = f64::INFINITY;
        for i in 0..=50 {
            let r = rate(0.5 * i as f64 / 50.0);
            assert!(r <= prev);
            prev = r;
        }
        assert_eq!(rate(0.5), 0.0);
    }
}
