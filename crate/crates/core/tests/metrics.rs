use proptest::prelude::*;
use retroplan::evalharness::{aggregate_metrics, subsample_stats, BenchmarkRecord};
use retroplan::retrostar::{Termination, Timing};

fn record(routes: usize, time: f64, calls: usize) -> BenchmarkRecord {
    BenchmarkRecord {
        target: format!("C{routes}"),
        smiles: "C".into(),
        solved: routes > 0,
        n_solved_routes: routes,
        model_calls: calls,
        iterations: calls,
        model_errors: 0,
        termination: Termination::Iterations,
        best_cost: None,
        timing: Timing { wall_time_s: time, search_time_s: time, extraction_time_s: 0.0 },
        error: None,
        routes: Vec::new(),
    }
}

fn records() -> impl Strategy<Value = Vec<BenchmarkRecord>> {
    prop::collection::vec((0usize..5, 0.0f64..100.0, 0usize..200).prop_map(|(r, t, c)| record(r, t, c)), 1..30)
}

proptest! {
    #[test]
    fn aggregate_is_linear_over_concatenation(a in records(), b in records()) {
        let (ma, mb) = (aggregate_metrics(&a).unwrap(), aggregate_metrics(&b).unwrap());
        let all: Vec<_> = a.iter().chain(&b).cloned().collect();
        let m = aggregate_metrics(&all).unwrap();
        let (na, nb) = (a.len() as f64, b.len() as f64);
        for ((name, x), ((_, xa), (_, xb))) in m.metrics().into_iter().zip(ma.metrics().into_iter().zip(mb.metrics())) {
            let want = (na * xa + nb * xb) / (na + nb);
            prop_assert!((x - want).abs() <= 1e-9 * want.abs().max(1.0), "{name}: {x} vs {want}");
        }
        prop_assert!((0.0..=100.0).contains(&m.success_rate));
    }

    #[test]
    fn full_population_subsample_is_exact(a in records(), reps in 1usize..20, seed in any::<u64>()) {
        let rep = subsample_stats(&a, a.len(), reps, seed).unwrap();
        let full = aggregate_metrics(&a).unwrap();
        for (name, v) in full.metrics() {
            prop_assert_eq!(rep.metrics[name].std, 0.0);
            prop_assert_eq!(rep.metrics[name].mean, v);
        }
    }

    #[test]
    fn subsample_is_deterministic(a in records(), seed in any::<u64>()) {
        let s = a.len().div_ceil(2);
        let x = serde_json::to_string(&subsample_stats(&a, s, 10, seed).unwrap()).unwrap();
        let y = serde_json::to_string(&subsample_stats(&a, s, 10, seed).unwrap()).unwrap();
        prop_assert_eq!(x, y);
    }
}
