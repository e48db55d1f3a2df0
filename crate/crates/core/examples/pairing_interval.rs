//! Effect of the pairing interval on the optimized key rate at fixed phase
//! count.
//!
//!     cargo run --release --example pairing_interval -- 12

use dprmp::channel::ChannelParams;
use dprmp::keyrate::{default_mu_grid, optimize_mu, Randomization};

fn main() -> dprmp::Result<()> {
    let d: usize = std::env::args().nth(1).map_or(12, |s| s.parse().expect("phase count"));
    let rand = Randomization::from_phases(d)?;
    let ls = [1u64, 100, 10_000, 1_000_000];
    let grid = default_mu_grid();

    print!("{:>6}", "L_km");
    for l in ls {
        print!(" {:>12}", format!("l={l}"));
    }
    println!();
    for dist in [50.0, 150.0, 250.0, 350.0, 400.0] {
        let ch = ChannelParams::default().at_distance(dist);
        print!("{dist:>6}");
        for l in ls {
            print!(" {:>12.4e}", optimize_mu(&rand, l, &ch, &grid)?.key_rate);
        }
        println!();
    }
    Ok(())
}
