//! Population-optimal shared representation for a majority and a minority
//! group on orthogonal subspaces, with the two risk bounds.
//!
//! cargo run --release --example fairness_bounds

use pathnet::datagen::sample_fairness_truth;
use pathnet::risk::{fairness_check, tail};

fn main() -> pathnet::Result<()> {
    let (p, r, r1, t0) = (12, 3, 3, 60);
    println!("{:>4} {:>9} {:>9} {:>9} {:>9}", "T1", "R0", "bound0", "R1", "bound1");
    for t1 in [1, 3, 10, 30, 60] {
        let inst = sample_fairness_truth(p, r, r1, t0, t1, 4)?;
        let c = fairness_check(&inst, r)?;
        println!("{t1:>4} {:>9.2e} {:>9.3} {:>9.3} {:>9.3}", c.r0.max(0.0), c.bound0, c.r1, c.bound1);
        assert!(c.majority_ok && c.minority_ok);
    }
    let inst = sample_fairness_truth(p, r, r1, t0, 5, 4)?;
    println!("tail(H1, 2) = {:.4}", tail(&inst.h1(), 2.0)?);
    Ok(())
}
