use manyshap::{bshap, EngineOptions};
use manyshap_harness::axioms::{check_axiom, Axiom, AxiomCheck, Context, Instance, MethodUnderTest};
use manyshap_harness::generators::{distinct_pair, polynomial, without_feature};
use manyshap_harness::instances::numbered;
use manyshap_harness::oracle;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn oracle_agrees_with_the_engine(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = polynomial(&mut rng, n);
        let (x, b) = distinct_pair(&mut rng, n);
        let engine = bshap(&f, &x, &b, &EngineOptions::exact()).unwrap();
        let brute = oracle::baseline_shapley(&f, &numbered(n), x.values(), b.values());
        for (e, o) in engine.values().iter().zip(&brute) {
            prop_assert!((e - o).abs() <= 1e-9 * (1.0 + o.abs()), "{e} vs {o}");
        }
    }

    #[test]
    fn bshap_passes_dummy_and_efficiency(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dummy = rand::Rng::gen_range(&mut rng, 0..n);
        let f = without_feature(&mut rng, n, dummy);
        let (x, b) = distinct_pair(&mut rng, n);
        let instance = Instance {
            models: vec![f],
            explicands: vec![x],
            context: Context::baseline(b),
            feature: Some(numbered(n)[dummy].clone()),
            ..Instance::default()
        };
        for axiom in [Axiom::Dummy, Axiom::Efficiency] {
            let r = check_axiom(&AxiomCheck::new(axiom, MethodUnderTest::Bshap, instance.clone())).unwrap();
            prop_assert!(r.passed(), "{r:?}");
        }
    }
}
