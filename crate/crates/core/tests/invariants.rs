use longarm_core::analysis::{loglog_fit, wilson_ci};
use longarm_core::exact::{bk_check, convolve_power, enumerate, EventSpec, TinyGraph};
use longarm_core::gw::{survival_tail, total_progeny_pmf, OffspringDist};
use longarm_core::kernel::{Kernel, KernelSpec};
use longarm_core::lattice::{Point, Shell};
use proptest::prelude::*;

fn kernel_strategy() -> impl Strategy<Value = Kernel> {
    (1usize..=3, 0.3f64..6.0, 1.0f64..3.0)
        .prop_map(|(d, a, l)| Kernel::build(&KernelSpec::canonical(d, a, l).with_tab_radius(32)).unwrap())
}

fn graph_strategy(max_edges: usize) -> impl Strategy<Value = TinyGraph> {
    (3usize..=6)
        .prop_flat_map(move |n| {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
            let m = pairs.len().min(max_edges);
            (Just(n), proptest::sample::subsequence(pairs, 1..=m), proptest::collection::vec(0.0f64..=1.0, m))
        })
        .prop_map(|(n, pairs, probs)| TinyGraph {
            vertices: n,
            edges: pairs.into_iter().zip(probs).map(|((a, b), p)| (a, b, p)).collect(),
        })
}

/// Increasing events built from connections, open sets and thresholds.
fn increasing_event(n: usize, m: usize) -> impl Strategy<Value = EventSpec> {
    let leaf = prop_oneof![
        (0..n, 0..n).prop_map(|(a, b)| EventSpec::Connected([a, b])),
        proptest::collection::vec(0..m, 1..=2).prop_map(EventSpec::Open),
        (1usize..=2, proptest::collection::vec(0..m, 1..=3)).prop_map(|(k, edges)| EventSpec::AtLeast { k, edges }),
    ];
    leaf.prop_recursive(2, 6, 3, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 1..=3).prop_map(EventSpec::Any),
            proptest::collection::vec(inner, 1..=3).prop_map(EventSpec::All),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pmf_is_symmetric(k in kernel_strategy(), x in proptest::collection::vec(-40i64..40, 3)) {
        let d = k.dim();
        let x = &x[..d];
        let p = k.pmf(x);
        let neg: Vec<i64> = x.iter().map(|c| -c).collect();
        prop_assert!((k.pmf(&neg) - p).abs() <= 1e-15 * p.max(1e-300));
        let mut rev = x.to_vec();
        rev.reverse();
        prop_assert!((k.pmf(&rev) - p).abs() <= 1e-15 * p.max(1e-300));
    }

    #[test]
    fn tail_mass_decreases(k in kernel_strategy(), t in 0i64..200) {
        let a = k.tail_mass(t).unwrap();
        let b = k.tail_mass(t + 1).unwrap();
        prop_assert!(b <= a + 1e-15);
        prop_assert!((0.0..=1.0).contains(&a));
        let shell = k.shell_probability(t + 1);
        prop_assert!((a - b - shell).abs() < 1e-12, "{} {}", a - b, shell);
    }

    #[test]
    fn sampled_steps_have_positive_mass(k in kernel_strategy(), seed in 0u64..1000) {
        let mut rng = longarm_core::rng::stream(seed, 0);
        for _ in 0..32 {
            let x = k.sample_step(&mut rng);
            prop_assert!(k.pmf(&x) > 0.0);
        }
    }

    #[test]
    fn progeny_pmf_is_sub_probability(p0 in 0.2f64..0.5) {
        // p0 + p1 + p2 = 1 with p0 = p2 is critical
        let off = OffspringDist::table(vec![p0, 1.0 - 2.0 * p0, p0]).unwrap();
        let pmf = total_progeny_pmf(&off, 400).unwrap();
        let total: f64 = pmf.iter().sum();
        prop_assert!(total <= 1.0 + 1e-12 && total > 0.5);
        prop_assert!(pmf.iter().all(|&x| x >= 0.0));
        let tail = survival_tail(&pmf);
        prop_assert!(tail.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn wilson_interval_brackets_estimate(trials in 1u64..100_000, frac in 0.0f64..=1.0) {
        let hits = ((trials as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_ci(hits, trials, 0.95).unwrap();
        let p = hits as f64 / trials as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
    }

    #[test]
    fn fit_recovers_power_law(slope in -3.0f64..3.0, c in 0.1f64..10.0) {
        let pts: Vec<(f64, f64, f64)> = (0..6).map(|k| {
            let r = 4.0 * 2f64.powi(k);
            (r, c * r.powf(slope), 0.0)
        }).collect();
        let f = loglog_fit(&pts).unwrap();
        prop_assert!((f.slope - slope).abs() < 1e-10);
    }

    #[test]
    fn convolution_power_conserves_mass(n in 0usize..6, r in 1i64..12, alpha in 0.5f64..3.0) {
        let k = Kernel::build(&KernelSpec::canonical(1, alpha, 1.0)).unwrap();
        let f = convolve_power(&k, n, r).unwrap();
        prop_assert!((f.total() + f.mass_outside() - 1.0).abs() < 1e-12);
        for x in 1..=r {
            prop_assert!((f.get(&[x]) - f.get(&[-x])).abs() < 1e-15);
        }
    }

    #[test]
    fn shell_lies_outside_inner_cube(j in 1i64..50, w in 1i64..10, x in proptest::collection::vec(-60i64..60, 2)) {
        let w = w.min(j);
        let s = Shell::new(j, w).unwrap();
        let p = Point::new(&x);
        prop_assert_eq!(s.contains(&p), p.sup_norm() <= j && p.sup_norm() > j - w);
    }

    #[test]
    fn partition_sums_to_one(g in graph_strategy(8), a in 0usize..3, b in 0usize..3) {
        let e = EventSpec::Connected([a, b]);
        let total = enumerate(&g, &e).unwrap() + enumerate(&g, &EventSpec::Not(Box::new(e))).unwrap();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bk_inequality(
        (g, a, b) in graph_strategy(10).prop_flat_map(|g| {
            let (n, m) = (g.vertices, g.edges.len());
            (Just(g), increasing_event(n, m), increasing_event(n, m))
        })
    ) {
        let r = bk_check(&g, &a, &b).unwrap();
        prop_assert!(r.disjoint <= r.product + 1e-12, "{r:?}");
    }
}
