use num_bigint::BigUint;
use proptest::prelude::*;
use uclab_core::construction::{build_block_family, materialize, BlockParams};
use uclab_core::metrics::{
    abundance, aod, aod_with_workers, knill_ratio, max_abundance, AbundanceProfile, AodMethod,
};
use uclab_core::setfam::{
    augment_cosingletons, is_union_closed, parse_family, separates_points, serialize_family,
    union_closure, Family, SetBits,
};
use uclab_core::Rational;

fn set_strategy(n: usize) -> impl Strategy<Value = SetBits> {
    prop::collection::vec(any::<bool>(), n).prop_map(move |bits| {
        let mut s = SetBits::empty(n);
        for (i, b) in bits.into_iter().enumerate() {
            if b {
                s.insert_bit(i);
            }
        }
        s
    })
}

/// Generators over a small universe whose closure stays within `cap`.
fn closed_family(max_n: usize, cap: usize) -> impl Strategy<Value = (Vec<SetBits>, Family)> {
    (2..=max_n)
        .prop_flat_map(|n| (Just(n), prop::collection::vec(set_strategy(n), 1..8)))
        .prop_filter_map("closure too large", move |(n, gens)| {
            union_closure(&gens, n, cap).ok().map(|f| (gens, f))
        })
}

fn any_family(max_n: usize) -> impl Strategy<Value = Family> {
    (1..=max_n)
        .prop_flat_map(|n| (Just(n), prop::collection::vec(set_strategy(n), 1..30)))
        .prop_map(|(n, sets)| Family::new(n, sets).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn closure_is_closed_and_idempotent((_gens, f) in closed_family(10, 400)) {
        prop_assert!(is_union_closed(&f));
        let again = union_closure(f.members(), f.universe(), 400).unwrap();
        prop_assert_eq!(again, f);
    }

    #[test]
    fn closure_is_minimal((gens, f) in closed_family(8, 200)) {
        for a in f.iter() {
            if gens.contains(a) {
                continue;
            }
            let rest: Vec<SetBits> = f.iter().filter(|b| *b != a).cloned().collect();
            let g = Family::new(f.universe(), rest).unwrap();
            prop_assert!(!is_union_closed(&g));
        }
        prop_assert!(gens.iter().all(|g| f.contains(g)));
    }

    #[test]
    fn augmentation_separates((_gens, f) in closed_family(9, 300)) {
        let n = f.universe();
        let mut members = f.members().to_vec();
        members.push(SetBits::full(n));
        let with_full = Family::new(n, members).unwrap();
        let aug = augment_cosingletons(&with_full).unwrap();
        prop_assert!(is_union_closed(&aug));
        prop_assert!(separates_points(&aug).separates);
    }

    #[test]
    fn separation_witnesses_are_exact(f in any_family(8)) {
        let rep = separates_points(&f);
        prop_assert_eq!(rep.separates, rep.witness_pairs.is_empty());
        let n = f.universe();
        for i in 1..=n {
            for j in i + 1..=n {
                let split = f.iter().any(|a| a.contains(i) != a.contains(j));
                prop_assert_eq!(!split, rep.witness_pairs.contains(&(i, j)));
            }
        }
    }

    #[test]
    fn text_round_trip(f in any_family(70)) {
        prop_assert_eq!(parse_family(&serialize_family(&f)).unwrap(), f);
    }

    #[test]
    fn double_counting(f in any_family(12)) {
        let profile = AbundanceProfile::of(&f);
        let lhs: Rational = profile.gammas().into_iter().sum();
        let total: u64 = f.iter().map(|a| a.cardinality() as u64).sum();
        prop_assert_eq!(lhs, Rational::new(total, f.size() as u64));
        for x in 1..=f.universe() {
            let g = abundance(&f, x).unwrap();
            prop_assert!(g <= Rational::one());
            prop_assert!((&g * &Rational::from(f.size() as u64)).is_integer());
        }
    }

    #[test]
    fn aod_routes_agree_and_stay_in_range(f in any_family(12)) {
        prop_assume!(f.iter().any(|a| !a.is_empty()));
        let a = aod(&f, AodMethod::GammaWeighted).unwrap();
        let b = aod(&f, AodMethod::Pairwise).unwrap();
        let c = aod_with_workers(&f, AodMethod::Pairwise, 4).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&b, &c);
        prop_assert!(a <= Rational::one());
    }

    #[test]
    fn aod_is_one_when_nonempty_members_coincide(s in set_strategy(9), with_empty in any::<bool>()) {
        prop_assume!(!s.is_empty());
        let mut members = vec![s];
        if with_empty {
            members.push(SetBits::empty(9));
        }
        let f = Family::new(9, members).unwrap();
        let expected = if with_empty { Rational::new(1u32, 2u32) } else { Rational::one() };
        prop_assert_eq!(aod(&f, AodMethod::Pairwise).unwrap(), expected);
    }
}

/// Smallest `γ_max · log2|F|` seen on the union-closed corpus, i.e.
/// `γ_max >= 1 / (c·log2|F|)` with `c = 2`. Attained by `{∅, A}`. The bound
/// only holds up to an unstated constant; this records the observed one.
const KNILL_FLOOR: f64 = 0.5;

#[test]
fn knill_ratio_over_corpus() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut corpus: Vec<Family> = Vec::new();
    for k in 3..=6 {
        for m in 2..=3 {
            for s in 1..=k - 2 {
                let bf = build_block_family(BlockParams::new(k, m, s).unwrap(), None).unwrap();
                corpus.push(materialize(&bf, 100_000).unwrap());
            }
        }
    }
    while corpus.len() < 150 {
        let n = rng.gen_range(2..=12);
        let gens: Vec<SetBits> = (0..rng.gen_range(1..=8))
            .map(|_| {
                SetBits::from_elements(n, (1..=n).filter(|_| rng.gen_bool(0.3))).unwrap()
            })
            .collect();
        if let Ok(f) = union_closure(&gens, n, 2_000) {
            if f.size() >= 2 {
                corpus.push(f);
            }
        }
    }
    let mut min_ratio = f64::INFINITY;
    for f in &corpus {
        let r = knill_ratio(f).unwrap();
        let (_, g) = max_abundance(f);
        assert!(g.to_f64() > 0.0);
        min_ratio = min_ratio.min(r);
    }
    println!("knill ratio: min {min_ratio:.4} over {} families", corpus.len());
    assert!(min_ratio >= KNILL_FLOOR, "min knill ratio {min_ratio}");
}

#[test]
fn block_family_abundance_is_integral() {
    let bf = build_block_family(BlockParams::new(6, 3, 4).unwrap(), None).unwrap();
    let f = materialize(&bf, 1000).unwrap();
    for x in 1..=f.universe() {
        let g = abundance(&f, x).unwrap();
        let scaled = &g * &Rational::from(BigUint::from(f.size()));
        assert!(scaled.is_integer());
    }
}
