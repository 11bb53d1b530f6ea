//! Unknown pathways: vanilla MTL, K-means on the task vectors, then
//! multipath with the learned clusters.
//!
//! cargo run --release --example cluster_discovery -- [N]

use pathnet::clustering::{cluster_tasks, clustering_accuracy, estimate_task_vectors};
use pathnet::datagen::{correlate_heads, sample_datasets, sample_hierarchical_truth};
use pathnet::risk::report;
use pathnet::solvers::{solve_multipath, solve_vanilla, SolverOptions};

fn main() -> pathnet::Result<()> {
    let n: usize = std::env::args().nth(1).map_or(30, |s| s.parse().expect("N"));
    // smaller than the 128-dim setting so it runs in seconds
    let (p, big_r, r, k, t_bar) = (48, 12, 2, 12, 8);
    let truth = sample_hierarchical_truth(p, big_r, r, k, t_bar, 3)?;
    let truth = correlate_heads(&truth, 0.6, 3)?;
    let ids = truth.cluster_ids();

    let exact = cluster_tasks(&truth.theta_matrix(), k, 0)?;
    println!("K-means on exact task vectors: accuracy {:.3}", clustering_accuracy(&exact.assignments, &ids)?);

    let bundle = sample_datasets(&truth, &vec![n; truth.num_tasks()], 0.0, 3)?;
    let opts = SolverOptions::default();
    let vanilla = solve_vanilla(&bundle, big_r, &opts)?;
    let mut learned = cluster_tasks(&estimate_task_vectors(&vanilla)?, k, 0)?;
    let acc = learned.score(&ids)?;
    println!("N = {n}: vanilla risk {:.3e}, clustering accuracy {acc:.3}", report(&vanilla, &truth)?.task_avg);

    let with_learned = solve_multipath(&bundle, big_r, r, &learned.assignments, &opts)?;
    let with_truth = solve_multipath(&bundle, big_r, r, &ids, &opts)?;
    println!("multipath, learned clusters: {:.3e}", report(&with_learned, &truth)?.task_avg);
    println!("multipath, true clusters:    {:.3e}", report(&with_truth, &truth)?.task_avg);
    Ok(())
}
