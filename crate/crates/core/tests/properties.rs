use pathnet::clustering::clustering_accuracy;
use pathnet::datagen::{sample_datasets, sample_hierarchical_truth, GroundTruth};
use pathnet::harness::{ExperimentConfig, Scenario, SweepRecord};
use pathnet::numerics::{
    clamp_operator_norm, operator_norm, orthonormalize_rows, pinv_least_squares, quantile, quartiles,
    row_space_projector, spectrum,
};
use pathnet::risk::{excess_risk, tail};
use pathnet::rng::{gaussian_matrix, gaussian_vector, substream};
use pathnet::solvers::{solve_cluster, solve_multipath, solve_vanilla, SolverOptions, TraceStep};
use pathnet::supernet::{dof, enumerate_pathways, Supernet, SupernetConfig};
use pathnet::transfer::tlop_fit;
use pathnet::Mat;
use proptest::prelude::*;

fn small_config() -> impl Strategy<Value = (usize, usize, usize, usize, usize)> {
    // (p, R, r, K, T_bar)
    (1usize..=3, 1usize..=3, 2usize..=4).prop_flat_map(|(r, k, t_bar)| {
        (r + 1..=r + 3).prop_flat_map(move |big_r| (big_r..=big_r + 6, Just(big_r), Just(r), Just(k), Just(t_bar)))
    })
}

/// Losses after each non-projection step never rise within one stage.
fn monotone(trace: &[pathnet::solvers::TraceEntry]) -> bool {
    let mut prev: Option<(Option<usize>, f64)> = None;
    for e in trace {
        if matches!(e.step, TraceStep::Projection { .. }) {
            prev = None;
            continue;
        }
        if let Some((cluster, loss)) = prev {
            if cluster == e.cluster && e.loss > loss * (1.0 + 1e-10) + 1e-15 {
                return false;
            }
        }
        prev = Some((e.cluster, e.loss));
    }
    true
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn als_loss_is_monotone((p, big_r, r, k, t_bar) in small_config(), n in 2usize..8, seed in 0u64..1000) {
        let truth = sample_hierarchical_truth(p, big_r, r, k, t_bar, seed).unwrap();
        let bundle = sample_datasets(&truth, &vec![n; truth.num_tasks()], 0.1, seed).unwrap();
        let opts = SolverOptions { max_als_rounds: 15, ..SolverOptions::default() };
        let ids = truth.cluster_ids();
        let mp = solve_multipath(&bundle, big_r, r, &ids, &opts).unwrap();
        prop_assert!(monotone(&mp.trace));
        let van = solve_vanilla(&bundle, big_r, &opts).unwrap();
        prop_assert!(monotone(&van.trace));
        let clu = solve_cluster(&bundle, r, &ids, &opts).unwrap();
        prop_assert!(monotone(&clu.trace));
    }

    #[test]
    fn solvers_are_deterministic((p, big_r, r, k, t_bar) in small_config(), seed in 0u64..1000) {
        let truth = sample_hierarchical_truth(p, big_r, r, k, t_bar, seed).unwrap();
        let bundle = sample_datasets(&truth, &vec![4; truth.num_tasks()], 0.0, seed).unwrap();
        let opts = SolverOptions { max_als_rounds: 5, ..SolverOptions::default() };
        let a = solve_multipath(&bundle, big_r, r, &truth.cluster_ids(), &opts).unwrap();
        let b = solve_multipath(&bundle, big_r, r, &truth.cluster_ids(), &opts).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn truth_and_net_round_trip((p, big_r, r, k, t_bar) in small_config(), seed in any::<u64>()) {
        let truth = sample_hierarchical_truth(p, big_r, r, k, t_bar, seed).unwrap();
        prop_assert_eq!(&GroundTruth::from_json(&truth.to_json().unwrap()).unwrap(), &truth);
        prop_assert_eq!(&Supernet::from_json(&truth.net().to_json().unwrap()).unwrap(), truth.net());
        prop_assert_eq!(sample_hierarchical_truth(p, big_r, r, k, t_bar, seed).unwrap(), truth);
    }

    #[test]
    fn larger_samples_extend_smaller_ones(n in 1usize..10, extra in 1usize..10, sigma in 0.0f64..1.0, seed in any::<u64>()) {
        let truth = sample_hierarchical_truth(6, 3, 1, 2, 2, seed).unwrap();
        let small = sample_datasets(&truth, &vec![n; 4], sigma, seed).unwrap();
        let large = sample_datasets(&truth, &vec![n + extra; 4], sigma, seed).unwrap();
        for (s, l) in small.tasks.iter().zip(&large.tasks) {
            prop_assert_eq!(s, &l.prefix(n));
        }
    }

    #[test]
    fn accuracy_is_relabel_invariant(labels in prop::collection::vec((0usize..5, 0usize..5), 1..40), shift in 1usize..5) {
        let pred: Vec<usize> = labels.iter().map(|l| l.0).collect();
        let truth: Vec<usize> = labels.iter().map(|l| l.1).collect();
        let acc = clustering_accuracy(&pred, &truth).unwrap();
        let relabeled: Vec<usize> = pred.iter().map(|&a| (a + shift) % 5).collect();
        prop_assert_eq!(acc, clustering_accuracy(&relabeled, &truth).unwrap());
        prop_assert_eq!(acc, clustering_accuracy(&truth, &pred).unwrap());
        prop_assert!(acc > 0.0 && acc <= 1.0);
        prop_assert_eq!(clustering_accuracy(&truth, &truth).unwrap(), 1.0);
    }

    #[test]
    fn tail_is_monotone_and_bounded(d in 1usize..8, q1 in -2.0f64..10.0, dq in 0.0f64..5.0, seed in any::<u64>()) {
        let a = gaussian_matrix(&mut substream(seed, 0, 0), d, d);
        let m = &a * a.transpose();
        let lo = tail(&m, q1).unwrap();
        let hi = tail(&m, q1 + dq).unwrap();
        prop_assert!(lo >= 0.0);
        prop_assert!(hi >= lo - 1e-12 * m.trace());
        prop_assert!(hi <= m.trace() * (1.0 + 1e-12));
        prop_assert!((tail(&m, d as f64).unwrap() - m.trace()).abs() <= 1e-10 * m.trace().max(1.0));
    }

    #[test]
    fn spectrum_sums_to_trace(d in 1usize..8, seed in any::<u64>()) {
        let a = gaussian_matrix(&mut substream(seed, 0, 0), d, d + 1);
        let m = &a * a.transpose();
        let s = spectrum(&m).unwrap();
        prop_assert!((s.sum() - m.trace()).abs() <= 1e-10 * m.trace());
        prop_assert!(s.as_slice().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn pinv_matches_normal_equations(n in 6usize..20, d in 1usize..6, seed in any::<u64>()) {
        let mut g = substream(seed, 0, 0);
        let x = gaussian_matrix(&mut g, n, d);
        let y = gaussian_vector(&mut g, n);
        let w = pinv_least_squares(&x, &y).unwrap();
        let normal = (x.transpose() * &x).cholesky().unwrap().solve(&(x.transpose() * &y));
        prop_assert!((w - normal).norm() <= 1e-8 * (1.0 + y.norm()));
    }

    #[test]
    fn pinv_interpolates_when_underdetermined(n in 1usize..5, extra in 1usize..5, seed in any::<u64>()) {
        let mut g = substream(seed, 0, 0);
        let x = gaussian_matrix(&mut g, n, n + extra);
        let y = gaussian_vector(&mut g, n);
        let w = pinv_least_squares(&x, &y).unwrap();
        prop_assert!((&x * &w - &y).norm() <= 1e-8 * (1.0 + y.norm()));
        // minimum norm: no component in the null space of x
        let proj = row_space_projector(&x);
        prop_assert!((&proj * &w - &w).norm() <= 1e-8 * (1.0 + w.norm()));
    }

    #[test]
    fn row_operations_keep_their_contracts(m in 1usize..5, extra in 0usize..5, c in 0.1f64..3.0, seed in any::<u64>()) {
        let b = gaussian_matrix(&mut substream(seed, 0, 0), m, m + extra);
        let (q, r) = orthonormalize_rows(&b);
        prop_assert!((&q * q.transpose() - Mat::identity(m, m)).norm() < 1e-10);
        prop_assert!((r.transpose() * &q - &b).norm() < 1e-10 * (1.0 + b.norm()));
        prop_assert!(operator_norm(&clamp_operator_norm(&b, c)) <= c * (1.0 + 1e-12));
        let proj = row_space_projector(&b);
        prop_assert!((&proj * &proj - &proj).norm() < 1e-10);
    }

    #[test]
    fn quantiles_are_ordered(values in prop::collection::vec(-1e3f64..1e3, 1..50), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(quantile(&values, lo) <= quantile(&values, hi));
        let (q1, med, q3) = quartiles(&values);
        prop_assert!(q1 <= med && med <= q3);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(quantile(&values, 0.0), min);
    }

    #[test]
    fn dof_and_pathway_counts((p, big_r, r, k, _t) in small_config(), tasks in 1usize..500) {
        let cfg = SupernetConfig::hierarchical(p, big_r, r, k).unwrap();
        prop_assert_eq!(dof(&cfg, tasks), (tasks * r + big_r * p + k * r * big_r) as u64);
        prop_assert_eq!(enumerate_pathways(&cfg, 1000).unwrap().len() as u128, cfg.pathway_count());
    }

    #[test]
    fn excess_risk_is_a_squared_distance(d in 1usize..10, seed in any::<u64>()) {
        let mut g = substream(seed, 0, 0);
        let a = gaussian_vector(&mut g, d);
        let b = gaussian_vector(&mut g, d);
        prop_assert!(excess_risk(&a, &b) >= 0.0);
        prop_assert_eq!(excess_risk(&a, &b), excess_risk(&b, &a));
        prop_assert_eq!(excess_risk(&a, &a), 0.0);
    }

    #[test]
    fn tlop_choice_minimizes_empirical_risk(m in 1usize..12, seed in any::<u64>()) {
        let truth = sample_hierarchical_truth(8, 4, 2, 3, 1, seed).unwrap();
        let target = pathnet::datagen::sample_task(&truth.theta()[0], m, 0.3, seed, 0);
        let fit = tlop_fit(truth.net(), &target).unwrap();
        let best = fit.candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        prop_assert!(fit.empirical_risk <= best * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn sweep_records_round_trip(value in 0.0f64..1e4, metric in -1e6f64..1e6, rep in 0usize..100, seed in any::<u64>()) {
        let rec = SweepRecord {
            scenario: "fig2_n".into(),
            method: "multipath".into(),
            sweep_param: "N".into(),
            sweep_value: value,
            rep,
            metric_name: "excess_risk".into(),
            metric_value: metric,
            seed_used: seed,
        };
        let back: SweepRecord = serde_json::from_str(&serde_json::to_string(&rec).unwrap()).unwrap();
        prop_assert_eq!(&back, &rec);
        let fields: Vec<&str> = rec.csv_line().leak().split(',').collect();
        prop_assert_eq!(fields.len(), 8);
        prop_assert_eq!(fields[6].parse::<f64>().unwrap(), metric);
    }

    #[test]
    fn config_text_round_trip(n in 1usize..100, sigma in 0.0f64..2.0, reps in 1usize..50, seed in any::<u64>()) {
        let text = format!("scenario = fig2_k\nN = {n}\nsigma = {sigma}\nreps = {reps}\nseed = {seed}\ngrid = 10, 20\n");
        let cfg = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(cfg.scenario, Scenario::Fig2K);
        prop_assert_eq!((cfg.n, cfg.sigma, cfg.reps, cfg.seed), (n, sigma, reps, seed));
        prop_assert_eq!(cfg.grid, vec![10.0, 20.0]);
    }
}
