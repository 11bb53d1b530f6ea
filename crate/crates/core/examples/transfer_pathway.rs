//! Transfer to a new task by searching the pathways of a frozen supernet,
//! and the pathway-swap construction where a perfect source fit transfers badly.
//!
//! cargo run --release --example transfer_pathway

use pathnet::datagen::{sample_adversarial_scenario, sample_hierarchical_truth, sample_task};
use pathnet::rng::{substream, unit_vector};
use pathnet::supernet::Pathway;
use pathnet::transfer::{tlop_fit, transfer_sweep};

fn main() -> pathnet::Result<()> {
    let truth = sample_hierarchical_truth(32, 8, 2, 10, 5, 11)?;
    let net = truth.net();

    // a target on pathway [0, 3] with a fresh head
    let path = Pathway::new(vec![0, 3]);
    let head = unit_vector(&mut substream(5, 0, 0), 2);
    let theta = net.predictor(&path, &head)?;
    for m in [2, 3, 6] {
        let target = sample_task(&theta, m, 0.0, 5, 0);
        let fit = tlop_fit(net, &target)?.with_truth(net, &theta)?;
        println!(
            "M = {m}: picked {:?}, empirical risk {:.1e}, excess {:.2e}",
            fit.pathway.choices(),
            fit.empirical_risk,
            fit.excess_risk.unwrap()
        );
    }

    for pt in transfer_sweep(net, &truth, &[3, 10, 40], 50, 0.1, 2)? {
        println!("sweep M = {:>3}: median excess {:.2e} [{:.2e}, {:.2e}]", pt.m, pt.median, pt.q1, pt.q3);
    }

    let scen = sample_adversarial_scenario(32, 8, 32, 0)?;
    let swapped = transfer_sweep(&scen.swapped.net, &scen.truth, &[200], 100, 0.0, 1)?;
    let honest = transfer_sweep(scen.truth.net(), &scen.truth, &[200], 100, 0.0, 1)?;
    println!(
        "pathway swap: mean excess {:.3} (bias {:.3}) vs true supernet {:.1e}",
        swapped[0].mean, swapped[0].mean_bias, honest[0].mean
    );
    Ok(())
}
