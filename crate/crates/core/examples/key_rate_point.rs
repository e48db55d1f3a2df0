//! One key-rate evaluation with its intermediate quantities, then the
//! intensity optimization at the same distance.
//!
//!     cargo run --example key_rate_point -- 200 12 1000000

use dprmp::channel::ChannelParams;
use dprmp::keyrate::{default_mu_grid, key_rate, optimize_mu, plob_bound, Randomization};

fn main() -> dprmp::Result<()> {
    let mut args = std::env::args().skip(1);
    let dist: f64 = args.next().map_or(200.0, |s| s.parse().expect("distance"));
    let d: usize = args.next().map_or(12, |s| s.parse().expect("phase count, 0 = continuous"));
    let l: u64 = args.next().map_or(1_000_000, |s| s.parse().expect("pairing interval"));

    let ch = ChannelParams::default().at_distance(dist);
    let rand = Randomization::from_phases(d)?;
    println!("{rand}, l = {l}, L = {dist} km, PLOB = {:.4e}", plob_bound(&ch));

    let pt = key_rate(0.1, &rand, l, &ch)?;
    println!("at mu = 0.1: R = {:.4e}", pt.key_rate);
    println!("{:#?}", pt.diagnostics);

    let best = optimize_mu(&rand, l, &ch, &default_mu_grid())?;
    println!(
        "optimum mu = {:.4}: R = {:.4e} ({:.3} x PLOB), e_phase = {:.4}",
        best.mu,
        best.key_rate,
        best.key_rate / best.plob,
        best.diagnostics.e_phase
    );
    Ok(())
}
