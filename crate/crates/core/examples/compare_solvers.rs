//! Vanilla, cluster and multipath MTL on one planted instance, plus the
//! individually trained baseline and the no-harm comparison.
//!
//! cargo run --release --example compare_solvers -- [N] [sigma]

use pathnet::datagen::{sample_datasets, sample_hierarchical_truth};
use pathnet::risk::{no_harm_check, report, NO_HARM_MARGIN};
use pathnet::solvers::{solve_cluster, solve_individual, solve_multipath, solve_vanilla, SolverOptions};

fn main() -> pathnet::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(10, |s| s.parse().expect("N"));
    let sigma: f64 = args.next().map_or(0.0, |s| s.parse().expect("sigma"));

    let truth = sample_hierarchical_truth(32, 8, 2, 40, 10, 1)?;
    let ids = truth.cluster_ids();
    let bundle = sample_datasets(&truth, &vec![n; truth.num_tasks()], sigma, 1)?;
    let opts = SolverOptions::default();

    let runs = [
        solve_vanilla(&bundle, 8, &opts)?,
        solve_cluster(&bundle, 2, &ids, &opts)?,
        solve_multipath(&bundle, 8, 2, &ids, &opts)?,
    ];
    println!("N = {n}, sigma = {sigma}, T = {}", truth.num_tasks());
    for sol in &runs {
        let rep = report(sol, &truth)?;
        println!(
            "{:<10} excess risk {:.3e}  train loss {:.3e}  rounds {}",
            sol.method.as_str(),
            rep.task_avg,
            sol.final_train_loss,
            sol.iterations_run
        );
    }

    let ind = solve_individual(&bundle)?;
    println!("{:<10} excess risk {:.3e}", "individual", report(&ind, &truth)?.task_avg);
    let nh = no_harm_check(&runs[2], &ind, &truth, 1e-10, NO_HARM_MARGIN)?;
    match nh.violation_fraction {
        Some(f) => println!("no-harm: {:.1}% of tasks worse than individual by > {}", 100.0 * f, nh.margin),
        None => println!("no-harm: {}", nh.note),
    }
    Ok(())
}
