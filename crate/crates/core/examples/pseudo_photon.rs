//! Pseudo-photon probabilities for a few phase counts next to the Poisson
//! photon-number distribution.
//!
//!     cargo run --example pseudo_photon -- 0.3

use dprmp::series::{expected_photon_number, poisson_prob, pseudo_photon_prob, PhaseConfig};

fn main() -> dprmp::Result<()> {
    let mu: f64 = std::env::args().nth(1).map_or(0.3, |s| s.parse().expect("intensity"));
    println!("mu = {mu}");
    println!("{:>3} {:>14} {:>14} {:>14} {:>14}", "k", "Poisson", "D=4", "D=8", "D=12");
    for k in 0..4 {
        let mut line = format!("{k:>3} {:>14.6e}", poisson_prob(mu, k)?);
        for d in [4, 8, 12] {
            line += &format!(" {:>14.6e}", pseudo_photon_prob(mu, k, &PhaseConfig::new(d)?)?);
        }
        println!("{line}");
    }

    for d in [4, 8, 12] {
        let cfg = PhaseConfig::new(d)?;
        let total: f64 = (0..d).map(|k| pseudo_photon_prob(mu, k, &cfg).unwrap()).sum();
        let n1 = expected_photon_number(mu, 1, &cfg)?;
        println!("D={d:<2} sum P_k - 1 = {:+.1e}, <n> in pseudo 1-photon state = {n1:.6}", total - 1.0);
    }
    Ok(())
}
