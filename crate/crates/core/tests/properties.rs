use cayleylab::cayley::{cayley_transform, EigenMargin, TransformKind};
use cayleylab::circuits::{one_time_pad, Architecture, Circuit, PerturbedFamily};
use cayleylab::interp::{
    a_priori_bound, certificate_search, robust_extrapolate, verify_certificate, DataSet, SearchConfig,
};
use cayleylab::numerics::{haar_unitary, CMatrix, Dd, Real, SeededRng, UnitaryMatrix};
use cayleylab::pipelines::{
    exact_circuit_oracle, noisy_circuit_oracle, reduce, reduce_noisy, AdversaryKind, ReductionConfig, ORACLE_STREAM,
};
use cayleylab::rational::DenominatorSpec;
use cayleylab::simulator::{depolarizing_model, noisy_output_prob, output_prob, trajectory_average, NoiseArity};
use proptest::prelude::*;

fn family(n: usize, m: usize, seed: u64) -> PerturbedFamily<Dd> {
    let arch = Architecture::brickwork(n, m).unwrap();
    let master = SeededRng::new(seed, 3);
    let c0 = Circuit::<Dd>::haar_random(arch, &master.derive(10));
    let pad = one_time_pad(&c0, &master.derive(0), &EigenMargin::default()).unwrap();
    PerturbedFamily::new(c0, pad, TransformKind::Cayley).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cayley_stays_unitary(seed in 0u64..10_000, theta in 0.0f64..1.0) {
        let u: UnitaryMatrix<f64> = haar_unitary(4, &mut SeededRng::new(seed, 0));
        let h = cayley_transform(&u, theta).unwrap();
        prop_assert!(h.matrix().unitarity_defect() < 1e-12);
    }

    #[test]
    fn numerator_bounded_by_denominator(seed in 0u64..10_000, theta in 0.0f64..1.0) {
        let fam = family(3, 2, seed);
        let t = Dd::from_f64(theta);
        let q = fam.denominator(t);
        let p = output_prob(&fam.member(t).unwrap()).unwrap() * q;
        prop_assert!(p >= Dd::zero() && p <= q);
        let spec = DenominatorSpec::from_seed(fam.seed());
        prop_assert_eq!(spec.q(Dd::one()), Dd::one());
    }

    #[test]
    fn certificates_verify(seed in 0u64..10_000, d in 1usize..6) {
        let rng = SeededRng::new(seed, 0);
        let mut r = rng.derive(0);
        let coeffs: Vec<f64> = (0..=d).map(|_| r.uniform_in(-1.0, 1.0)).collect();
        let f = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let mut flags = rng.derive(1);
        let ys: Vec<f64> = (0..400).map(|i| {
            let x = 0.5 * i as f64 / 399.0;
            if flags.bernoulli(0.1) { f(x) + 3.0 } else { f(x) }
        }).collect();
        let ds = DataSet::new(0.5, ys, 1e-12, 0.1).unwrap();
        let cert = certificate_search(&ds, d, &SearchConfig::default(), &rng.derive(2)).unwrap();
        prop_assert!(verify_certificate(ds.xs(), ds.ys(), &cert, d));
    }

    #[test]
    fn bound_monotone(d in 1usize..20, de in 0.05f64..0.95, delta in 1e-40f64..1e-3) {
        let c = SearchConfig::default().growth_constant;
        let b = a_priori_bound(delta, d, de, c).unwrap();
        prop_assert!(a_priori_bound(delta, d + 1, de, c).unwrap() >= b);
        prop_assert!(a_priori_bound(delta, d, de * 0.9, c).unwrap() >= b);
        let twice = a_priori_bound(2.0 * delta, d, de, c).unwrap();
        prop_assert!((twice / b - 2.0).abs() < 1e-12);
    }
}

#[test]
fn family_endpoint_is_the_target() {
    let fam = family(3, 3, 5);
    let c1 = fam.member(Dd::one()).unwrap();
    assert_eq!(c1.gates(), fam.base().gates());
    assert_eq!(fam.denominator(Dd::one()), Dd::one());
}

#[test]
fn zero_noise_matches_noiseless() {
    for seed in 0..5 {
        let arch = Architecture::brickwork(3, 2).unwrap();
        let c = Circuit::<f64>::haar_random(arch.clone(), &SeededRng::new(seed, 0));
        for arity in [NoiseArity::OneQubit, NoiseArity::SlotPauli] {
            let noise = depolarizing_model(&arch, 0.0, arity).unwrap();
            assert!((noisy_output_prob(&c, &noise).unwrap() - output_prob(&c).unwrap()).abs() < 1e-14);
        }
    }
}

#[test]
fn full_one_qubit_noise_is_uniform() {
    let arch = Architecture::brickwork(2, 2).unwrap();
    let c = Circuit::<f64>::haar_random(arch.clone(), &SeededRng::new(9, 0));
    let noise = depolarizing_model(&arch, 1.0, NoiseArity::OneQubit).unwrap();
    assert!((noisy_output_prob(&c, &noise).unwrap() - 0.25).abs() < 1e-14);
}

#[test]
fn trajectories_reproduce_density_matrix_for_slot_noise() {
    let arch = Architecture::new(2, vec![vec![0, 1], vec![0, 1]]).unwrap();
    let noise = depolarizing_model(&arch, 0.2, NoiseArity::SlotPauli).unwrap();
    let c = Circuit::<f64>::haar_random(arch, &SeededRng::new(4, 0));
    assert!((trajectory_average(&c, &noise).unwrap() - noisy_output_prob(&c, &noise).unwrap()).abs() < 1e-12);
}

#[test]
fn independent_searches_agree_within_bound() {
    let d = 6;
    let de = 0.5;
    let f = |x: Dd| (0..=d).fold(Dd::zero(), |acc, k| acc * x + Dd::from_f64(if k % 2 == 0 { 0.3 } else { -0.2 }));
    let mut flags = SeededRng::new(11, 0);
    let count = 100 * d * d;
    let ys: Vec<Dd> = (0..count)
        .map(|i| {
            let x = Dd::from_f64(de) * Dd::from_usize(i) / Dd::from_usize(count - 1);
            if flags.bernoulli(0.15) { f(x) + Dd::from_f64(flags.uniform_in(-5.0, 5.0)) } else { f(x) }
        })
        .collect();
    let ds = DataSet::new(Dd::from_f64(de), ys, 1e-28, 0.15).unwrap();
    let cfg = SearchConfig::default();
    let a = robust_extrapolate(&ds, d, 1.0, &cfg, &SeededRng::new(1, 1)).unwrap();
    let b = robust_extrapolate(&ds, d, 1.0, &cfg, &SeededRng::new(2, 1)).unwrap();
    assert!((a.estimate - b.estimate).abs().to_f64() <= 2.0 * a.a_priori_bound);
    assert!((a.estimate - f(Dd::one())).abs().to_f64() < 1e-15);
}

#[test]
fn noisy_reduction_rejects_mismatched_oracle() {
    let arch = Architecture::new(2, vec![vec![0, 1], vec![0, 1]]).unwrap();
    let c0 = Circuit::<Dd>::haar_random(arch.clone(), &SeededRng::new(1, 0));
    let noise = depolarizing_model(&arch, 0.1, NoiseArity::SlotPauli).unwrap();
    let other = depolarizing_model(&arch, 0.2, NoiseArity::SlotPauli).unwrap();
    let kind = AdversaryKind::Offset { shift: 10.0 };
    let rng = SeededRng::new(2, ORACLE_STREAM);
    let cfg = ReductionConfig { grid_size: Some(1600), ..Default::default() };
    let exact = exact_circuit_oracle::<Dd>(0.01, 1e-30, kind, rng.clone()).unwrap();
    assert!(reduce_noisy(&c0, &noise, &exact, &cfg, &rng).is_err());
    let wrong = noisy_circuit_oracle::<Dd>(other, 0.01, 1e-30, kind, rng.clone()).unwrap();
    assert!(reduce_noisy(&c0, &noise, &wrong, &cfg, &rng).is_err());
    let noisy = noisy_circuit_oracle::<Dd>(noise, 0.01, 1e-30, kind, rng.clone()).unwrap();
    assert!(reduce(&c0, &noisy, &cfg, &rng).is_err());
}

#[test]
fn reduction_is_deterministic() {
    let arch = Architecture::new(2, vec![vec![0, 1], vec![0, 1]]).unwrap();
    let master = SeededRng::new(77, 0);
    let c0 = Circuit::<Dd>::haar_random(arch, &master.derive(10));
    let cfg = ReductionConfig { eta: 0.05, grid_size: Some(2000), ..Default::default() };
    let run = || {
        let oracle = exact_circuit_oracle::<Dd>(cfg.eta, cfg.delta, cfg.oracle_kind(16), master.derive(ORACLE_STREAM)).unwrap();
        reduce(&c0, &oracle, &cfg, &master).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.estimate(), b.estimate());
    assert_eq!(a.result.certificate.indices, b.result.certificate.indices);
    assert!(a.rows.iter().any(|r| r.corrupted));
    assert!((a.estimate() - output_prob(&c0).unwrap()).abs().to_f64() < 1e-6);
}

#[test]
fn identity_target_has_unit_probability() {
    let arch = Architecture::brickwork(2, 1).unwrap();
    let c = Circuit::<f64>::identity(arch);
    assert_eq!(output_prob(&c).unwrap(), 1.0);
    assert_eq!(CMatrix::<f64>::identity(2).unitarity_defect(), 0.0);
}
