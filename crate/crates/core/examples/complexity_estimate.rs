//! Monte Carlo Gaussian complexity of norm-bounded linear maps against the
//! closed-form bound, and the DoF-based rate for a supernet.
//!
//! cargo run --release --example complexity_estimate

use pathnet::risk::{dof_bound, gaussian_complexity_linear};
use pathnet::supernet::SupernetConfig;

fn main() -> pathnet::Result<()> {
    for (n, d, p) in [(10, 1, 1), (40, 1, 1), (20, 3, 5), (80, 3, 5)] {
        let est = gaussian_complexity_linear(n, d, p, 1.0, 1.0, 2000, 0)?;
        println!(
            "n={n:>3} d={d} p={p}: estimate {:.4} +- {:.4}, bound {:.4}",
            est.estimate, est.std_error, est.bound
        );
    }
    println!("1-D closed form at n=10: {:.4}", (2.0 / (std::f64::consts::PI * 10.0)).sqrt());

    let cfg = SupernetConfig::hierarchical(32, 8, 2, 40)?;
    for n in [10, 40, 160] {
        println!("dof bound N={n:>3}, T=400: {:.4}", dof_bound(&cfg, 400, n, (40f64).ln())?);
    }
    Ok(())
}
