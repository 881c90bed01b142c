use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use secanta_core::invariants::{mu_norm_sq, rdm};
use secanta_core::linalg::{random_matrix, random_sl, random_unitary, random_vector};
use secanta_core::rank::flattening_lower_bound;
use secanta_core::textfmt::{from_json, to_json};
use secanta_core::varieties::{expected_dim, random_coherent};
use secanta_core::waring::{monomial_rank, Monomial};
use secanta_core::{format_ket, parse_ket, CMatrix, Kind, ProjectiveState, SystemSpec, Tensor, C64};

/// Small specs of every kind with local dimension at most 4.
fn small_spec() -> impl Strategy<Value = SystemSpec> {
    prop_oneof![
        prop::collection::vec(1usize..=3, 2..=3).prop_map(|d| SystemSpec::distinguishable(&d).unwrap()),
        (2usize..=3, 2usize..=3).prop_map(|(n, l)| SystemSpec::bosonic(n, l).unwrap()),
        (4usize..=5, 2usize..=3).prop_map(|(n, l)| SystemSpec::fermionic(n, l).unwrap()),
    ]
}

fn random_state(spec: &SystemSpec, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.basis().len();
    Tensor::from_entries(spec, random_vector(&mut rng, n)).unwrap()
}

/// Local maps for every kind: one per factor, or one shared map.
fn local_maps(spec: &SystemSpec, rng: &mut ChaCha8Rng, make: fn(&mut ChaCha8Rng, usize) -> CMatrix) -> Vec<CMatrix> {
    match spec.kind() {
        Kind::Distinguishable => spec.dims().iter().map(|&d| make(rng, d)).collect(),
        _ => vec![make(rng, spec.dims()[0])],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ket_text_round_trips(spec in small_spec(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Small integer coefficients print exactly.
        let entries: Vec<C64> = (0..spec.basis().len())
            .map(|_| C64::new(rng.random_range(-3i32..=3) as f64, rng.random_range(-2i32..=2) as f64))
            .collect();
        let t = Tensor::from_entries(&spec, entries).unwrap();
        prop_assume!(!t.is_zero());
        let back = parse_ket(&format_ket(&t), &spec).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn json_documents_round_trip(spec in small_spec(), seed in any::<u64>()) {
        let t = random_state(&spec, seed);
        prop_assert_eq!(from_json(&to_json(&t)).unwrap(), t);
    }

    #[test]
    fn packed_norm_is_the_norm_of_the_expansion(spec in small_spec(), seed in any::<u64>()) {
        let t = random_state(&spec, seed);
        assert_relative_eq!(t.norm(), t.expand_full().norm(), max_relative = 1e-12);
    }

    #[test]
    fn local_unitaries_preserve_invariants(spec in small_spec(), seed in any::<u64>()) {
        let t = random_state(&spec, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
        let maps = local_maps(&spec, &mut rng, random_unitary);
        let u = t.transform(&maps).unwrap();
        assert_relative_eq!(u.norm(), t.norm(), max_relative = 1e-10);
        let (p, q) = (ProjectiveState::new(&t).unwrap(), ProjectiveState::new(&u).unwrap());
        assert_relative_eq!(mu_norm_sq(&p), mu_norm_sq(&q), epsilon = 1e-10);
        for (a, b) in rdm(&p).spectra.iter().zip(&rdm(&q).spectra) {
            for (x, y) in a.iter().zip(b) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn flattening_bound_ignores_invertible_maps_and_embeddings(spec in small_spec(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Sums of two or three coherent points keep the flattening ranks small.
        let r = rng.random_range(1..=3usize);
        let mut t = random_coherent(&spec, rng.random());
        for _ in 1..r {
            t = t.add(&random_coherent(&spec, rng.random())).unwrap();
        }
        let base = flattening_lower_bound(&t).unwrap();
        let moved = t.transform(&local_maps(&spec, &mut rng, random_sl)).unwrap();
        prop_assert_eq!(flattening_lower_bound(&moved).unwrap(), base);
        let bigger: Vec<usize> = spec.dims().iter().map(|d| d + 1).collect();
        let target = SystemSpec::new(spec.kind(), spec.particles(), bigger.clone()).unwrap();
        let inj: Vec<CMatrix> = match spec.kind() {
            Kind::Distinguishable => spec.dims().iter().zip(&bigger).map(|(&d, &e)| random_matrix(&mut rng, e, d)).collect(),
            _ => vec![random_matrix(&mut rng, bigger[0], spec.dims()[0])],
        };
        let embedded = t.embed(&target, &inj).unwrap();
        prop_assert_eq!(flattening_lower_bound(&embedded).unwrap(), base);
        prop_assert!(base <= r);
    }

    #[test]
    fn monomial_rank_depends_only_on_sorted_exponents(
        exps in prop::collection::vec(0usize..=4, 1..=5),
        seed in any::<u64>(),
        pad in 0usize..=2,
    ) {
        prop_assume!(exps.iter().any(|&a| a > 0));
        let base = monomial_rank(&Monomial::new(exps.clone()).unwrap()).unwrap();
        let mut shuffled = exps.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        shuffled.extend(std::iter::repeat_n(0, pad));
        prop_assert_eq!(monomial_rank(&Monomial::new(shuffled).unwrap()).unwrap(), base);
        let nz: Vec<usize> = exps.iter().copied().filter(|&a| a > 0).collect();
        let top = *nz.iter().max().unwrap();
        // Between the degree-based lower bound and the product over all exponents.
        prop_assert!(base >= 1);
        prop_assert!(base <= nz.iter().map(|a| a + 1).product::<usize>() / (nz.iter().min().unwrap() + 1));
        prop_assert!(nz.len() == 1 || base >= top.min(2));
    }

    #[test]
    fn expected_dimension_is_monotone_and_capped(spec in small_spec(), r in 1usize..6) {
        let top = spec.ambient_dim() - 1;
        prop_assert!(expected_dim(&spec, r) <= top);
        prop_assert!(expected_dim(&spec, r) <= expected_dim(&spec, r + 1));
        prop_assert_eq!(expected_dim(&spec, 1), spec.coherent_dim().min(top));
    }
}
