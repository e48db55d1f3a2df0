//! Click, pairing and sifting statistics of the symmetric fiber channel.
//!
//!     cargo run --example channel_stats -- 0.2 1000

use dprmp::channel::{
    link_budget, mdi_single_photon_yield_error, mean_click_prob, pairing_rate,
    pseudo_single_pair_fraction, qber_z, signal_pair_ratio, ChannelParams,
};
use dprmp::series::PhaseConfig;

fn main() -> dprmp::Result<()> {
    let mut args = std::env::args().skip(1);
    let mu: f64 = args.next().map_or(0.2, |s| s.parse().expect("intensity"));
    let l: u64 = args.next().map_or(1000, |s| s.parse().expect("pairing interval"));
    let cfg = PhaseConfig::new(12)?;

    println!(
        "{:>6} {:>10} {:>10} {:>10} {:>8} {:>8} {:>10} {:>10} {:>8}",
        "L_km", "eta_s", "p", "r_p", "r_s", "E_z", "q11(D=12)", "Y11", "e11"
    );
    for dist in [0.0, 50.0, 100.0, 200.0, 300.0, 400.0] {
        let ch = ChannelParams::default().at_distance(dist);
        let lb = link_budget(&ch);
        let p = mean_click_prob(mu, &lb, &ch);
        let q11 = pseudo_single_pair_fraction(mu, &lb, &ch, &cfg)?;
        let (y11, e11) = mdi_single_photon_yield_error(&lb, &ch);
        println!(
            "{dist:>6} {:>10.3e} {p:>10.3e} {:>10.3e} {:>8.5} {:>8.5} {q11:>10.5} {y11:>10.3e} {e11:>8.5}",
            lb.eta_s,
            pairing_rate(p, l),
            signal_pair_ratio(mu, &lb, &ch),
            qber_z(mu, &lb, &ch),
        );
    }
    Ok(())
}
