//! Config-driven sweep written to CSV, with the quartile summary.
//!
//! cargo run --release --example sweep_to_csv -- [out.csv]

use pathnet::harness::{aggregate, run_scenario, ExperimentConfig};

const CONFIG: &str = "
scenario = fig2_tbar
p = 16
R = 4
r = 2
K = 6
N = 8
grid = 2, 4, 8
reps = 5
seed = 42
methods = vanilla, cluster, multipath
";

fn main() -> pathnet::Result<()> {
    let mut cfg = ExperimentConfig::parse(CONFIG)?;
    cfg.out_path = Some(std::env::args().nth(1).unwrap_or_else(|| "sweep.csv".into()).into());
    let records = run_scenario(&cfg)?;
    for a in aggregate(&records) {
        println!(
            "{:<10} T_bar={:<2} median {:.2e}  IQR [{:.2e}, {:.2e}]",
            a.method, a.sweep_value, a.median, a.q1, a.q3
        );
    }
    println!("wrote {}", cfg.out_path.unwrap().display());
    Ok(())
}
