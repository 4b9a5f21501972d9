use proptest::prelude::*;
use samplebench::harness::Band;
use samplebench::metrics::{
    chi_square_marginal, marginal_mean, marginal_variance, mmd_exact, mmd_rff, sliced_wasserstein,
    wasserstein_1d, SwdConfig,
};
use samplebench::report::{from_json_str, to_json_string, ReportDocument};
use samplebench::store::{ess, ess_of_weights, partition, SampleBatch};
use samplebench::targets::{lookup, TargetSpec};
use samplebench::{harness::Role, metrics::Arity, TestStatistic};

fn points(dim: usize, n: std::ops::Range<usize>) -> impl Strategy<Value = SampleBatch> {
    n.prop_flat_map(move |len| prop::collection::vec(-50.0..50.0f64, len * dim))
        .prop_map(move |p| SampleBatch::new(p, dim).unwrap())
}

fn same_size_pair(dim: usize, n: usize) -> impl Strategy<Value = (SampleBatch, SampleBatch)> {
    (
        prop::collection::vec(-10.0..10.0f64, n * dim),
        prop::collection::vec(-10.0..10.0f64, n * dim),
    )
        .prop_map(move |(a, b)| (SampleBatch::new(a, dim).unwrap(), SampleBatch::new(b, dim).unwrap()))
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..100.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn swd_is_symmetric_nonnegative_and_zero_on_self(
        (x, y) in same_size_pair(3, 40),
        seed in any::<u64>(),
        p in prop_oneof![Just(1.0), Just(2.0), 1.0..4.0f64],
    ) {
        let cfg = SwdConfig::new(20, p, seed);
        let xy = sliced_wasserstein(&x, &y, &cfg).unwrap();
        let yx = sliced_wasserstein(&y, &x, &cfg).unwrap();
        prop_assert_eq!(xy.to_bits(), yx.to_bits());
        prop_assert!(xy >= 0.0);
        prop_assert_eq!(sliced_wasserstein(&x, &x, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn swd_triangle_inequality_with_shared_directions(
        (x, y) in same_size_pair(2, 30),
        z in prop::collection::vec(-10.0..10.0f64, 60),
        seed in any::<u64>(),
    ) {
        let z = SampleBatch::new(z, 2).unwrap();
        let cfg = SwdConfig::new(25, 1.0, seed);
        let d = |a: &SampleBatch, b: &SampleBatch| sliced_wasserstein(a, b, &cfg).unwrap();
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-9);
    }

    #[test]
    fn swd_in_one_dimension_matches_exact_transport(
        (x, y) in same_size_pair(1, 25),
        seed in any::<u64>(),
        l in 1usize..40,
    ) {
        let exact = wasserstein_1d(x.points(), y.points(), 1.0).unwrap();
        let sliced = sliced_wasserstein(&x, &y, &SwdConfig::new(l, 1.0, seed)).unwrap();
        prop_assert_eq!(sliced.to_bits(), exact.to_bits());
    }

    #[test]
    fn ess_is_scale_invariant(w in weights(30), e in -20i32..20, c in 0.001..1000.0f64) {
        let base = ess_of_weights(&w).unwrap();
        // Power-of-two factors are exact in binary floating point.
        let pow2: Vec<f64> = w.iter().map(|v| v * 2f64.powi(e)).collect();
        prop_assert_eq!(ess_of_weights(&pow2).unwrap(), base);
        let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
        prop_assert!((ess_of_weights(&scaled).unwrap() - base).abs() <= 1e-12 * base);
        prop_assert!(base >= 1.0 - 1e-12 && base <= w.len() as f64 + 1e-9);
    }

    #[test]
    fn mean_and_variance_ignore_uniform_weight_scale(
        x in points(2, 3..40),
        seed_w in weights(40),
        e in -30i32..30,
        c in 0.001..1000.0f64,
    ) {
        let w: Vec<f64> = seed_w[..x.len()].to_vec();
        let a = x.clone().with_weights(w.clone()).unwrap();
        let b = x.clone().with_weights(w.iter().map(|v| v * 2f64.powi(e)).collect()).unwrap();
        let vals = |b: &SampleBatch| -> Vec<f64> {
            marginal_mean(b).into_iter().chain(marginal_variance(b).unwrap()).map(|m| m.value).collect()
        };
        prop_assert_eq!(vals(&a), vals(&b));
        let s = x.clone().with_weights(w.iter().map(|v| v * c).collect()).unwrap();
        for (u, v) in vals(&a).iter().zip(vals(&s)) {
            prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()), "{} vs {}", u, v);
        }
    }

    #[test]
    fn chi_square_ignores_row_order(
        pts in prop::collection::vec(-3.0..3.0f64, 60),
        w in weights(60),
        perm_seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let t = lookup("Normal-1D").unwrap();
        let b = SampleBatch::new(pts.clone(), 1).unwrap().with_weights(w.clone()).unwrap();
        let mut idx: Vec<usize> = (0..pts.len()).collect();
        idx.shuffle(&mut samplebench::seed::rng(perm_seed));
        let shuffled = SampleBatch::new(idx.iter().map(|&i| pts[i]).collect(), 1)
            .unwrap()
            .with_weights(idx.iter().map(|&i| w[i]).collect())
            .unwrap();
        let a = chi_square_marginal(&b, &t, 10).unwrap()[0].value;
        let c = chi_square_marginal(&shuffled, &t, 10).unwrap()[0].value;
        prop_assert_eq!(a.to_bits(), c.to_bits());
    }

    #[test]
    fn partition_chunks_form_an_ordered_prefix(
        n in 20usize..200,
        m in 1usize..6,
        n_eff in 1usize..20,
        w in weights(200),
    ) {
        let x = SampleBatch::new((0..n).map(|i| i as f64).collect(), 1)
            .unwrap()
            .with_weights(w[..n].to_vec())
            .unwrap();
        match partition(&x, m, n_eff) {
            Ok(chunks) => {
                prop_assert_eq!(chunks.len(), m);
                let joined: Vec<f64> = chunks.iter().flat_map(|c| c.points().to_vec()).collect();
                prop_assert!(joined.len() <= n);
                prop_assert_eq!(&joined[..], &x.points()[..joined.len()]);
                let len = chunks[0].len();
                prop_assert!(chunks.iter().all(|c| c.len() == len));
            }
            Err(samplebench::Error::Capacity { required, available }) => {
                prop_assert_eq!(available, ess(&x));
                prop_assert_eq!(required, (m * n_eff) as f64);
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn mmd_symmetric_and_zero_on_self((x, y) in same_size_pair(2, 15), sigma in 0.1..5.0f64, seed in any::<u64>()) {
        prop_assert_eq!(mmd_exact(&x, &y, sigma).unwrap().to_bits(), mmd_exact(&y, &x, sigma).unwrap().to_bits());
        prop_assert_eq!(mmd_exact(&x, &x, sigma).unwrap(), 0.0);
        prop_assert_eq!(
            mmd_rff(&x, &y, sigma, 64, seed).unwrap().to_bits(),
            mmd_rff(&y, &x, sigma, 64, seed).unwrap().to_bits()
        );
    }

    #[test]
    fn band_is_monotone_in_abs_z(a in -10.0..10.0f64, b in -10.0..10.0f64) {
        if a.abs() <= b.abs() {
            prop_assert!(Band::classify(a) <= Band::classify(b));
        }
    }

    #[test]
    fn report_round_trip_is_lossless(
        r in prop::collection::vec(-1e10..1e10f64, 2..12),
        u in prop::collection::vec(prop_oneof![-1e-300..1e-300f64, -1e100..1e100f64], 2..12),
        seed in any::<u64>(),
    ) {
        let r = TestStatistic::new("T", "swd(p=1,L=50)", Arity::TwoSample, Role::IidReference, r).unwrap();
        let u = TestStatistic::new("T", "swd(p=1,L=50)", Arity::TwoSample, Role::User, u).unwrap();
        let doc = ReportDocument::new("T", "s", seed, 10, vec![r], vec![u]).unwrap();
        prop_assert_eq!(from_json_str(&to_json_string(&doc).unwrap()).unwrap(), doc);
    }
}

fn mixture_direct_log_density(t: &TargetSpec, x: &[f64]) -> f64 {
    use samplebench::targets::TargetKind;
    let TargetKind::MixtureNormalKD { weights, components, .. } = t.kind() else {
        panic!("not a mixture")
    };
    weights
        .iter()
        .zip(components)
        .map(|(w, c)| w * c.log_pdf(x).exp())
        .sum::<f64>()
        .ln()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn mixture_log_density_matches_direct_sum(s in -8.0..8.0f64, e in prop::collection::vec(-1.0..1.0f64, 3)) {
        // Points along the mode axis keep every density term representable.
        let x: Vec<f64> = e.iter().map(|v| s + v).collect();
        let t = lookup("Mixture-Normal-3D-Strongly-Correlated").unwrap();
        let direct = mixture_direct_log_density(&t, &x);
        let got = t.log_density(&x).unwrap();
        prop_assert!((got - direct).abs() <= 1e-12 * direct.abs(), "{} vs {}", got, direct);
    }
}
