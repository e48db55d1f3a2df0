//! Decoy-state estimation end to end: forward-generate a gain table from
//! known pseudo-photon yields, round-trip it through CSV, and bracket the
//! yields with the two-stage linear programs.
//!
//!     cargo run --example decoy_estimate -- 8 out/gains.csv

use dprmp::decoy::{epsilon_slack, estimate_pair, DecoyConfig, GainTable, SyntheticInstance};
use dprmp::series::PhaseConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> dprmp::Result<()> {
    let mut args = std::env::args().skip(1);
    let d: usize = args.next().map_or(8, |s| s.parse().expect("phase count"));
    let path = args.next().unwrap_or_else(|| "out/gains.csv".into());

    let dc = DecoyConfig::uniform(0.4, 0.1, PhaseConfig::new(d)?)?;
    let eps = epsilon_slack(&dc);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let inst = SyntheticInstance::generate(dc, &dc.summed_intensities(), eps, &mut rng)?;

    if let Some(dir) = std::path::Path::new(&path).parent() {
        std::fs::create_dir_all(dir)?;
    }
    inst.gains.write_csv(&path)?;
    let gains = GainTable::read_csv(&path)?;
    println!("D={d}, eps = {eps:.3e}, {} gain records in {path}", gains.len());

    println!("{:>5} {:>24} {:>10} {:>24} {:>10}", "pair", "Y bracket", "Y true", "eY bracket", "eY true");
    for (ka, kb) in [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2)] {
        let b = estimate_pair(&gains, &dc, ka, kb, eps)?;
        let (y, ey) = inst.truth(ka, kb);
        println!(
            "({ka},{kb}) [{:>10.6}, {:>10.6}] {y:>10.6} [{:>10.6}, {:>10.6}] {ey:>10.6}",
            b.y.lo, b.y.hi, b.ey.lo, b.ey.hi
        );
    }
    Ok(())
}
