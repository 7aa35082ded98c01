use corrinfer::attacks::{
    certain_region, closed_form_interval, empirical_interval, model_less_predict, model_less_predict_with, C3Rule,
    ModelLessCase,
};
use corrinfer::copula::{pearson, sample_copula};
use corrinfer::corrmat::{is_valid, sample_corr_matrix, sample_s2, VALIDITY_TOL};
use corrinfer::{BinSpec, Dataset, Marginal, Scenario, SeedTree, ThresholdRule};
use proptest::prelude::*;

fn rho() -> impl Strategy<Value = f64> {
    -1.0f64..=1.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bins_partition_the_unit_interval(v in rho(), b in 2usize..=10) {
        let spec = BinSpec::new(b).unwrap();
        let k = spec.bin_of(v).unwrap();
        prop_assert!((1..=b).contains(&k));
        prop_assert!(spec.lower(k) <= v + 1e-12 && v <= spec.upper(k) + 1e-12);
    }

    #[test]
    fn s2_samples_are_valid_and_keep_constraints(seed in any::<u64>(), n in 3usize..=8) {
        let mut rng = SeedTree::new(seed).stream();
        let truth = sample_corr_matrix(n, &mut rng);
        let v: Vec<f64> = (0..n - 1).map(|i| truth.get(i, n - 1)).collect();
        let c = sample_s2(n, &v, &mut rng);
        prop_assert!(is_valid(&c, VALIDITY_TOL));
        for (i, &vi) in v.iter().enumerate() {
            prop_assert!((c.get(i, n - 1) - vi).abs() <= 1e-12);
        }
    }

    #[test]
    fn s1_targets_stay_in_closed_form_interval(seed in any::<u64>(), r1 in rho(), r2 in rho()) {
        let mut rng = SeedTree::new(seed).stream();
        let s = Scenario::S1 { n: 3, rho1: r1, rho2: r2 };
        let iv = closed_form_interval(r1, r2);
        let emp = empirical_interval(&s, 200, &mut rng).unwrap();
        prop_assert!(emp.lo >= iv.lo - 1e-9 && emp.hi <= iv.hi + 1e-9);
    }

    #[test]
    fn model_less_agrees_with_certain_region(seed in any::<u64>(), r1 in rho(), r2 in rho()) {
        let spec = BinSpec::new(3).unwrap();
        if let Some(bin) = certain_region(r1, r2, spec).unwrap() {
            let mut rng = SeedTree::new(seed).stream();
            let iv = closed_form_interval(r1, r2);
            prop_assert_eq!(model_less_predict(&iv, spec, &mut rng), bin);
        }
    }

    #[test]
    fn model_less_single_bin_case(lo in -0.99f64..0.99, w in 0.0f64..0.01) {
        let spec = BinSpec::new(5).unwrap();
        let hi = (lo + w).min(1.0);
        prop_assume!(spec.bin_of(lo).unwrap() == spec.bin_of(hi).unwrap());
        let iv = corrinfer::Interval::new(lo, hi).unwrap();
        let mut rng = SeedTree::new(0).stream();
        let (bin, case) = model_less_predict_with(&iv, spec, C3Rule::FullyCovered, &mut rng);
        prop_assert_eq!(case, ModelLessCase::C1);
        prop_assert_eq!(bin, spec.bin_of(lo).unwrap());
    }

    #[test]
    fn marginal_quantiles_invert_the_cdf(u in 0.001f64..0.999, g in 2usize..50) {
        let m = Marginal::uniform(-2.0, 3.0, g).unwrap();
        let x = m.inverse_cdf(u).unwrap();
        prop_assert!((m.cdf(x) - u).abs() < 1e-9);
        prop_assert!((x - (-2.0 + 5.0 * u)).abs() < 1e-9);
    }

    #[test]
    fn dataset_csv_round_trip(seed in any::<u64>(), m in 3usize..40) {
        let mut rng = SeedTree::new(seed).stream();
        let c = sample_corr_matrix(3, &mut rng);
        let margs = vec![Marginal::StandardNormal; 3];
        let data = sample_copula(&c, &margs, m, ThresholdRule::Zero, &mut rng).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.inputs(), data.inputs());
        prop_assert_eq!(back.labels(), data.labels());
    }

    #[test]
    fn pearson_is_symmetric_and_bounded(xs in prop::collection::vec(-5.0f64..5.0, 3..30), shift in -3.0f64..3.0) {
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * x + shift + i as f64).collect();
        if let (Some(a), Some(b)) = (pearson(&xs, &ys), pearson(&ys, &xs)) {
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!(a.abs() <= 1.0 + 1e-12);
        }
    }
}
