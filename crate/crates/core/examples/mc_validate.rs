//! Seeded Monte Carlo of clicks and mode pairing against the analytic
//! pairing rate, signal-pair ratio and QBER.
//!
//!     cargo run --release --example mc_validate -- 2000000

use dprmp::channel::ChannelParams;
use dprmp::mc::{compare_with_analytic, simulate, AnalyticStats, McConfig};

fn main() -> dprmp::Result<()> {
    let n: u64 = std::env::args().nth(1).map_or(2_000_000, |s| s.parse().expect("rounds"));
    for (mu, dist, l) in [(0.1, 50.0, 100), (0.4, 10.0, 10), (0.2, 150.0, 1000)] {
        let cfg = McConfig {
            n_rounds: n,
            seed: 7,
            l,
            mu,
            ch: ChannelParams::default().at_distance(dist),
        };
        let stats = simulate(&cfg)?;
        let cmp = compare_with_analytic(&stats, &AnalyticStats::for_config(&cfg));
        println!("mu={mu} L={dist} km l={l}: {} pairs from {} clicks", stats.pairs, stats.clicks);
        for z in &cmp.scores {
            println!(
                "   {:<4} mc {:.6e} +- {:.1e}  analytic {:.6e}  z {:+.2}{}",
                z.name,
                z.empirical,
                z.stderr,
                z.analytic,
                z.z,
                if z.flagged { "  FLAGGED" } else { "" }
            );
        }
    }
    Ok(())
}
