//! Rate-distance curves for several phase counts and the continuous limit,
//! written as CSV with a matching matplotlib script.
//!
//!     cargo run --release --example sweep_fig1 -- out/sweep.csv

use std::path::PathBuf;

use dprmp::channel::ChannelParams;
use dprmp::cli::{emit_plot_script, write_sweep_csv};
use dprmp::keyrate::{default_mu_grid, sweep, SweepGrid};

fn main() -> dprmp::Result<()> {
    let csv = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/sweep.csv".into()));
    let grid = SweepGrid {
        distances_km: (1..=60).map(|i| 10.0 * i as f64).collect(),
        phases: vec![8, 10, 12, 14, 0],
        pairing_intervals: vec![1_000_000],
        mu_grid: default_mu_grid(),
    };
    let out = sweep(&grid, &ChannelParams::default())?;
    for f in &out.failures {
        eprintln!("D={} L={}: {}", f.phases, f.distance_km, f.error);
    }

    if let Some(dir) = csv.parent() {
        std::fs::create_dir_all(dir)?;
    }
    write_sweep_csv(&out.points, std::fs::File::create(&csv)?)?;
    let script = csv.with_extension("py");
    let n = emit_plot_script(&csv, &script)?;
    println!("{} points, {n} curves: {} / {}", out.points.len(), csv.display(), script.display());

    for d in &grid.phases {
        let curve: Vec<_> = out.points.iter().filter(|p| p.phases == *d).collect();
        let reach = curve.iter().filter(|p| p.key_rate > 0.0).map(|p| p.distance_km).fold(0.0, f64::max);
        let above = curve.iter().filter(|p| p.key_rate > p.plob).count();
        println!("D={d:<2} reach {reach} km, above PLOB at {above} distances");
    }
    Ok(())
}
