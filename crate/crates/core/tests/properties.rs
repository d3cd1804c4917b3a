//! Property tests for the value-level operations.

use cosmos_core::characterize::lambda_bound;
use cosmos_core::mapper::phi;
use cosmos_core::model::{dominates, mismatch, pareto_filter, span, DesignPoint};
use proptest::prelude::*;

fn latency_points(max_len: usize) -> impl Strategy<Value = Vec<DesignPoint>> {
    prop::collection::vec((0.1f64..1e3, 0.1f64..1e3), 1..max_len)
        .prop_map(|v| v.into_iter().map(|(l, a)| DesignPoint::latency(l, a)).collect())
}

proptest! {
    #[test]
    fn pareto_filter_returns_an_antichain(points in latency_points(40)) {
        let kept = pareto_filter(&points).unwrap();
        for a in &kept {
            for b in &kept {
                prop_assert!(!(a != b && dominates(a, b).unwrap()));
            }
        }
    }

    #[test]
    fn pareto_filter_is_idempotent(points in latency_points(40)) {
        let once = pareto_filter(&points).unwrap();
        let twice = pareto_filter(&once).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn pareto_filter_keeps_exactly_the_undominated(points in latency_points(30)) {
        let kept = pareto_filter(&points).unwrap();
        let survivors = points
            .iter()
            .enumerate()
            .filter(|(i, p)| {
                let dominated =
                    points.iter().enumerate().any(|(j, q)| j != *i && dominates(q, p).unwrap());
                let duplicate_earlier =
                    points[..*i].iter().any(|q| q.perf == p.perf && q.area == p.area);
                !dominated && !duplicate_earlier
            })
            .count();
        prop_assert_eq!(kept.len(), survivors);
        for k in &kept {
            prop_assert!(points.iter().all(|q| !dominates(q, k).unwrap()));
        }
    }

    #[test]
    fn span_is_at_least_unity_and_scale_invariant(
        points in latency_points(30),
        scale in 0.01f64..100.0,
    ) {
        let s = span(&points).unwrap();
        prop_assert!(s.perf >= 1.0);
        prop_assert!(s.area >= 1.0);
        let scaled: Vec<_> = points
            .iter()
            .map(|p| DesignPoint::latency(p.perf * scale, p.area))
            .collect();
        let s2 = span(&scaled).unwrap();
        prop_assert!((s.perf - s2.perf).abs() <= 1e-9 * s.perf);
    }

    #[test]
    fn mismatch_is_nonnegative_and_zero_on_identity(d in 0.001f64..1e6, m in 0.0f64..1e6) {
        prop_assert_eq!(mismatch(d, d).unwrap(), 0.0);
        prop_assert!(mismatch(d, m).unwrap() >= 0.0);
    }

    #[test]
    fn lambda_bound_monotonicity(
        gamma_r in 0u32..8,
        gamma_w in 0u32..8,
        eta in 0u32..8,
        ports_exp in 0u32..4,
        unrolls in 1u32..64,
    ) {
        let ports = 1u32 << ports_exp;
        let h = lambda_bound(gamma_r, gamma_w, eta, ports, unrolls);
        // more ports never need more states
        prop_assert!(lambda_bound(gamma_r, gamma_w, eta, ports * 2, unrolls) <= h);
        // more unrolls never need fewer states
        prop_assert!(lambda_bound(gamma_r, gamma_w, eta, ports, unrolls + 1) >= h);
        // the bound is exactly the ceiling formula
        let expect = (gamma_r as u64 * unrolls as u64).div_ceil(ports as u64) as u32
            + gamma_w.div_ceil(ports)
            + eta;
        prop_assert_eq!(h, expect);
    }

    #[test]
    fn phi_endpoints_and_monotonicity(
        lambda_min in 0.01f64..100.0,
        ratio in 1.01f64..50.0,
        mu_min in 1u32..16,
        span_mu in 1u32..48,
        t in 0.0f64..1.0,
    ) {
        let lambda_max = lambda_min * ratio;
        let mu_max = mu_min + span_mu;
        let at_max = phi(lambda_max, lambda_min, lambda_max, mu_min, mu_max).unwrap();
        let at_min = phi(lambda_min, lambda_min, lambda_max, mu_min, mu_max).unwrap();
        prop_assert!((at_max - mu_min as f64).abs() <= 1e-9 * mu_min as f64);
        prop_assert!((at_min - mu_max as f64).abs() <= 1e-9 * mu_max as f64);
        let inner = lambda_min + t * (lambda_max - lambda_min);
        if inner > lambda_min && inner < lambda_max {
            let v = phi(inner, lambda_min, lambda_max, mu_min, mu_max).unwrap();
            prop_assert!(v >= mu_min as f64 - 1e-9);
            prop_assert!(v <= mu_max as f64 + 1e-9);
        }
    }
}
