use lockthrash_core::mva::{mva_solve, workload_to_model, Center, QueuingModel};
use proptest::prelude::*;

mod common;

/// Normalising constants of a closed product-form network with one delay
/// station, by convolution. Returns throughput at each population.
fn convolution(model: &QueuingModel) -> Vec<f64> {
    let n = model.customers;
    // Delay station: g(k) = Z^k / k!
    let mut g: Vec<f64> = (0..=n)
        .scan(1.0, |acc, k| {
            if k > 0 {
                *acc *= model.think_time / k as f64;
            }
            Some(*acc)
        })
        .collect();
    for c in &model.centers {
        let d = c.visit_ratio * c.service_time;
        for k in 1..=n {
            g[k] += d * g[k - 1];
        }
    }
    (1..=n).map(|k| g[k - 1] / g[k]).collect()
}

fn model() -> impl Strategy<Value = QueuingModel> {
    (
        1usize..9,
        0.0f64..200.0,
        prop::collection::vec((0.01f64..20.0, 0.05f64..1.0), 1..4),
    )
        .prop_map(|(customers, think_time, centers)| QueuingModel {
            customers,
            think_time,
            centers: centers
                .into_iter()
                .map(|(service_time, visit_ratio)| Center { service_time, visit_ratio })
                .collect(),
        })
}

proptest! {
    #[test]
    fn matches_convolution(m in model()) {
        let rows = mva_solve(&m).unwrap();
        for (row, x) in rows.iter().zip(convolution(&m)) {
            prop_assert!((row.throughput - x).abs() <= 1e-9 * x.max(1.0), "{} vs {}", row.throughput, x);
        }
    }

    #[test]
    fn speedup_never_declines(m in model()) {
        let rows = mva_solve(&m).unwrap();
        for w in rows.windows(2) {
            prop_assert!(w[1].throughput >= w[0].throughput * (1.0 - 1e-12));
        }
    }

    #[test]
    fn littles_law(m in model()) {
        for row in mva_solve(&m).unwrap() {
            let q: f64 = row.queue_lengths.iter().sum();
            let residual = q + row.throughput * m.think_time - row.customers as f64;
            prop_assert!(residual.abs() < 1e-9, "{}", residual);
        }
    }

    #[test]
    fn throughput_bounds(m in model()) {
        let demand = m.demand();
        let bottleneck = m.centers.iter().map(|c| c.visit_ratio * c.service_time).fold(0.0, f64::max);
        for row in mva_solve(&m).unwrap() {
            let bound = (row.customers as f64 / (m.think_time + demand)).min(1.0 / bottleneck);
            prop_assert!(row.throughput <= bound * (1.0 + 1e-12));
        }
    }
}

#[test]
fn bundled_workloads_saturate() {
    for (name, w) in common::all_configs() {
        let rows = mva_solve(&workload_to_model(&w, 1, 32)).unwrap();
        for pair in rows.windows(2) {
            assert!(pair[1].speedup >= pair[0].speedup, "{name}");
        }
    }
}

#[test]
fn single_core_simulation_matches_model_cycle() {
    // One core never queues, so its cycle is think time plus body plus the
    // four lock-word accesses.
    for (name, w) in common::all_configs() {
        for latency in [1, 5] {
            let m = workload_to_model(&w, latency, 1);
            let cycle = m.think_time + m.demand() + 4.0 * latency as f64;
            let r = lockthrash_core::run(
                &common::p1(latency),
                &w,
                &lockthrash_core::RunParams::new(1).max_ticks(4_000_000),
            )
            .unwrap();
            let measured = 1.0 / r.aggregate_throughput;
            assert!((measured - cycle).abs() / cycle < 0.02, "{name} lat {latency}: {measured} vs {cycle}");
        }
    }
}
