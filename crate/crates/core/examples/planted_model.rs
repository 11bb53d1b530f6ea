//! Sample the two-layer planted model, draw datasets and export them.
//!
//! cargo run --release --example planted_model -- [out_dir]

use pathnet::datagen::{correlate_heads, sample_datasets, sample_hierarchical_truth};
use pathnet::supernet::{dof, enumerate_pathways};

fn main() -> pathnet::Result<()> {
    let (p, big_r, r, k, t_bar) = (32, 8, 2, 40, 10);
    let truth = sample_hierarchical_truth(p, big_r, r, k, t_bar, 7)?;
    let cfg = truth.net().config();
    println!("layers {:?}, dims {:?}", cfg.widths(), cfg.dims());
    println!("pathways: {}", enumerate_pathways(cfg, 1_000)?.len());
    println!("tasks: {}, DoF: {}", truth.num_tasks(), dof(cfg, truth.num_tasks()));
    println!("orthonormal modules: {}", truth.net().is_orthonormal(1e-10));

    let ids = truth.cluster_ids();
    let first = &truth.theta()[0];
    let same: f64 = truth.theta()[1].dot(first);
    let other: f64 = truth.theta()[t_bar].dot(first);
    println!("cosine with a cluster mate {same:+.3}, with another cluster {other:+.3} (clusters {} and {})", ids[1], ids[t_bar]);

    let corr = correlate_heads(&truth, 0.6, 7)?;
    let c_same = corr.theta()[1].dot(&corr.theta()[0]);
    println!("after gamma = 0.6 mixing, cluster-mate cosine {c_same:+.3}");

    let bundle = sample_datasets(&truth, &vec![10; truth.num_tasks()], 0.1, 7)?;
    println!("task 0: X {:?}, sigma {}", bundle.tasks[0].x.shape(), bundle.tasks[0].noise_sigma);

    if let Some(dir) = std::env::args().nth(1) {
        bundle.export(&dir)?;
        println!("wrote {dir}");
    }
    Ok(())
}
