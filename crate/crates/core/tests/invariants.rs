use std::collections::BTreeMap;

use epsk1_core::cyclo::{CycloElem, CycloModulus};
use epsk1_core::group::MetabelianGroup;
use epsk1_core::group_ring::GroupRingElem;
use epsk1_core::k1::*;
use epsk1_core::residue::DEFAULT_CAP;
use num_bigint::BigInt;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn flagship() -> MetabelianGroup {
    MetabelianGroup::new(3, 2, 1, 4, 1).unwrap()
}

fn modulus() -> CycloModulus {
    CycloModulus::new(3, 1, 2, 2, 5).unwrap()
}

fn cyclo() -> impl Strategy<Value = CycloElem> {
    let m = modulus();
    let [a, b, c] = m.axis_orders();
    prop::collection::vec(((0..a, 0..b, 0..c), -5i64..6), 0..5).prop_map(move |terms| {
        let terms: Vec<_> = terms.into_iter().map(|((x, y, z), k)| ([x, y, z], BigInt::from(k))).collect();
        CycloElem::from_monomials(m, &terms)
    })
}

fn level_elem(i: u32) -> impl Strategy<Value = GroupRingElem> {
    let g = flagship();
    let ab = g.level_ab(i);
    let orders = ab.orders().to_vec();
    let m = CycloModulus::rational(13, 3).unwrap();
    prop::collection::vec((prop::collection::vec(0u64..1000, orders.len()), -4i64..5), 1..6).prop_map(move |terms| {
        let terms = terms.into_iter().map(|(h, c)| {
            let h: Vec<u64> = h.iter().zip(&orders).map(|(x, o)| x % o).collect();
            (h, CycloElem::from_int(m, c))
        });
        GroupRingElem::from_terms(&ab, 13, 3, terms)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cyclotomic_ring_laws(a in cyclo(), b in cyclo(), c in cyclo()) {
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert!((&a - &a).is_zero());
        if let Some(inv) = a.inverse() {
            prop_assert!((&a * &inv).is_one());
        } else {
            prop_assert!(a.is_zero());
        }
    }

    #[test]
    fn galois_action_is_multiplicative(a in cyclo(), b in cyclo(), t in prop::sample::select(vec![1i64, 7, 11, 13, 17, 19])) {
        let lhs = (&a * &b).galois_apply(t).unwrap();
        let rhs = &a.galois_apply(t).unwrap() * &b.galois_apply(t).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn sigma_lands_in_trace_ideal(x in level_elem(1)) {
        let g = flagship();
        let s = sigma_trace(&g, &x, 1);
        let t = ti_membership(&g, &s, 1);
        prop_assert!(t.member, "{:?}", t.reason);
        let y = t.witness.unwrap();
        prop_assert_eq!(sigma_trace(&g, &y, 1), s);
    }

    #[test]
    fn sigma_is_linear(x in level_elem(1), y in level_elem(1)) {
        let g = flagship();
        prop_assert_eq!(sigma_trace(&g, &x.add(&y), 1), sigma_trace(&g, &x, 1).add(&sigma_trace(&g, &y, 1)));
    }

    #[test]
    fn beta_is_linear_and_satisfies_a(seed in any::<u64>()) {
        let g = flagship();
        let classes = g.conj_classes(DEFAULT_CAP).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_class_elem(&g, 13, 3, classes.len(), &mut rng).unwrap();
        let y = random_class_elem(&g, 13, 3, classes.len(), &mut rng).unwrap();
        let mut coeffs: BTreeMap<usize, CycloElem> = x.coeffs.clone();
        for (k, c) in &y.coeffs {
            let e = coeffs.entry(*k).or_insert_with(|| CycloElem::zero(*c.modulus()));
            *e = &*e + c;
        }
        let sum = ConjClassElem { group: g, lp: (13, 3), coeffs };
        let bx = beta_additive(&x, &classes).unwrap();
        let by = beta_additive(&y, &classes).unwrap();
        let bs = beta_additive(&sum, &classes).unwrap();
        for i in 0..bs.len() {
            prop_assert_eq!(&bs[i], &bx[i].add(&by[i]));
        }
        prop_assert!(check_a1_a2_a3(&g, &bs, None).unwrap().all_pass());
    }
}

fn certified_theta(g: &MetabelianGroup, rng: &mut ChaCha8Rng) -> ThetaTuple {
    loop {
        let th = theta(&random_unit(g, 13, 3, rng).unwrap()).unwrap();
        if th.entries.iter().all(certified) {
            return th;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn integral_log_is_additive(seed in any::<u64>()) {
        const M: u32 = 4;
        let g = flagship();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (certified_theta(&g, &mut rng), certified_theta(&g, &mut rng));
        for form in [LogForm::Ratio, LogForm::Oliver] {
            let la = integral_log_with(&a, M, form).unwrap().values;
            let lb = integral_log_with(&b, M, form).unwrap().values;
            let lab = integral_log_with(&a.mul(&b), M, form).unwrap().values;
            let sum: Vec<_> = la.iter().zip(&lb).map(|(x, y)| x.add(y)).collect();
            prop_assert!(logs_congruent(&lab, &sum, M));
            prop_assert!(check_a1_a2_a3(&g, &lab, Some(M)).unwrap().all_pass());
        }
    }
}
