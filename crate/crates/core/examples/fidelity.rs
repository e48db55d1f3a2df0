//! Basis dependence of pseudo-photon states: fidelity per alignment angle,
//! overall fidelity and the resulting phase-error penalty.
//!
//!     cargo run --example fidelity -- 12 0.1

use dprmp::fidelity::{
    delta_from_complement, fidelity_overall, phase_error_bound, party_fidelity_theta,
};
use dprmp::series::{fidelity_mu_nu, fidelity_mu_one_complement, PhaseConfig};

fn main() -> dprmp::Result<()> {
    let mut args = std::env::args().skip(1);
    let d: usize = args.next().map_or(12, |s| s.parse().expect("phase count"));
    let mu: f64 = args.next().map_or(0.1, |s| s.parse().expect("intensity"));
    let cfg = PhaseConfig::new(d)?;

    for k in 0..3 {
        let rep = fidelity_overall(mu, k, &cfg)?;
        println!("k={k}: F_kk = {:.12}, 1 - F_kk = {:.3e}", rep.overall, rep.overall_complement);
        for (theta, f) in &rep.per_theta {
            let party = party_fidelity_theta(mu, k, *theta, &cfg)?;
            println!("   theta = {theta:.4}  F = {f:.8}  per party {party:.8}");
        }
    }

    let rep = fidelity_overall(mu, 1, &cfg)?;
    println!();
    println!("{:>10} {:>12} {:>12}", "Y11", "Delta", "e_phase(3%)");
    for y in [1e-2, 1e-4, 1e-6, 1e-8] {
        let b = delta_from_complement(rep.overall_complement, y)?;
        let e = if b.clamped { 1.0 } else { phase_error_bound(0.03, b.value) };
        println!("{y:>10.0e} {:>12.3e} {e:>12.6}", b.raw);
    }

    println!();
    println!("F(mu, mu/3) = {:.12}", fidelity_mu_nu(mu, mu / 3.0, &cfg)?);
    println!("sqrt(1 - F_mu1^2) = {:.3e}", fidelity_mu_one_complement(mu, &cfg)?.sqrt());
    Ok(())
}
