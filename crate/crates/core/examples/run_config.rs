//! Builds a run configuration from JSON with command-line style overrides
//! and runs it through the same path as the `dprmp run` binary.
//!
//!     cargo run --example run_config

use dprmp::cli::{run_config, RunConfig};

const CONFIG: &str = r#"{
  "mode": "sweep",
  "channel": {"p_d": 1.2e-8, "eta_d": 0.2, "e_d": 0.04, "f": 1.15, "alpha_db": 0.2},
  "grid": {"distances": [50, 100, 200, 300], "D_values": [10], "l_values": [1000]},
  "outputs": {}
}"#;

fn main() -> dprmp::Result<()> {
    let cfg = RunConfig::from_json(CONFIG, &["grid.D_values=[10,0]".into(), "channel.e_d=0.02".into()])?;
    println!("misalignment {}, phase counts {:?}", cfg.channel.misalignment, cfg.grid.as_ref().unwrap().phases);
    let (code, msg) = run_config(&cfg, Some(2))?;
    if let Some(m) = msg {
        eprintln!("{m}");
    }
    println!("exit code {code}");
    Ok(())
}
