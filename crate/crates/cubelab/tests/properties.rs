//! Randomized invariants: congruence lattice laws, eq/coeq adjunction, HNF
//! canonicality and box-product symmetries.

use proptest::prelude::*;

use cubelab::abfg::{lattice_join, lattice_meet, IntLattice};
use cubelab::cubes::{box2, grid_index, grid_position};
use cubelab::relcore::{
    coequaliser, join_rel, kernel_pair, meet_rel, EqRel, FinMap, FinSet,
};

fn eqrel_strategy(size: usize) -> impl Strategy<Value = EqRel> {
    prop::collection::vec(0..size, size).prop_map(move |labels| {
        let carrier = FinSet::new(size);
        EqRel::from_pairs(
            carrier,
            (0..size)
                .flat_map(|x| (0..size).map(move |y| (x, y)))
                .filter(|&(x, y)| labels[x] == labels[y]),
        )
        .expect("label partition")
    })
}

fn two_rels() -> impl Strategy<Value = (EqRel, EqRel)> {
    (1usize..=8).prop_flat_map(|size| (eqrel_strategy(size), eqrel_strategy(size)))
}

fn three_rels() -> impl Strategy<Value = (EqRel, EqRel, EqRel)> {
    (1usize..=7).prop_flat_map(|size| {
        (eqrel_strategy(size), eqrel_strategy(size), eqrel_strategy(size))
    })
}

fn lattice_strategy() -> impl Strategy<Value = IntLattice> {
    prop::collection::vec(prop::collection::vec(-4i64..=4, 3), 0..=3)
        .prop_map(|vecs| IntLattice::from_vectors(3, &vecs).expect("rank 3"))
}

proptest! {
    #[test]
    fn eqrel_lattice_laws((r, s) in two_rels()) {
        let meet = meet_rel(&r, &s).unwrap();
        let join = join_rel(&r, &s).unwrap();
        prop_assert_eq!(&meet.blocks, &meet_rel(&s, &r).unwrap().blocks);
        prop_assert_eq!(&join.blocks, &join_rel(&s, &r).unwrap().blocks);
        prop_assert!(meet.leq(&r) && meet.leq(&s));
        prop_assert!(r.leq(&join) && s.leq(&join));
        // absorption
        prop_assert_eq!(&meet_rel(&r, &join).unwrap().blocks, &r.blocks);
        prop_assert_eq!(&join_rel(&r, &meet).unwrap().blocks, &r.blocks);
    }

    #[test]
    fn eqrel_lattice_associativity((r, s, t) in three_rels()) {
        let a = meet_rel(&meet_rel(&r, &s).unwrap(), &t).unwrap();
        let b = meet_rel(&r, &meet_rel(&s, &t).unwrap()).unwrap();
        prop_assert_eq!(&a.blocks, &b.blocks);
        let a = join_rel(&join_rel(&r, &s).unwrap(), &t).unwrap();
        let b = join_rel(&r, &join_rel(&s, &t).unwrap()).unwrap();
        prop_assert_eq!(&a.blocks, &b.blocks);
    }

    #[test]
    fn eq_of_coeq_is_identity(r in (1usize..=8).prop_flat_map(eqrel_strategy)) {
        prop_assert_eq!(&kernel_pair(&coequaliser(&r)).blocks, &r.blocks);
    }

    #[test]
    fn coeq_of_eq_is_identity_up_to_iso(
        (size, cod) in (1usize..=8).prop_flat_map(|s| (Just(s), 1..=s)),
        raw in prop::collection::vec(0usize..8, 8),
    ) {
        let mut table: Vec<usize> = (0..size).map(|x| raw[x] % cod).collect();
        for v in 0..cod {
            table[v % size] = v; // force surjectivity
        }
        let f = FinMap::new(FinSet::new(size), FinSet::new(cod), table).unwrap();
        let g = coequaliser(&kernel_pair(&f));
        prop_assert!(f.equal_up_to_codomain_bijection(&g));
    }

    #[test]
    fn box2_is_symmetric_under_transposition((r, s) in two_rels()) {
        let rs = box2(&r, &s).unwrap();
        let sr = box2(&s, &r).unwrap();
        for &(x, y, t, z) in &rs {
            prop_assert!(sr.contains(&(x, t, y, z)));
        }
        prop_assert_eq!(rs.len(), sr.len());
    }

    #[test]
    fn box2_with_discrete_is_the_relation(r in (1usize..=8).prop_flat_map(eqrel_strategy)) {
        let disc = EqRel::discrete(r.carrier.clone());
        let tuples = box2(&r, &disc).unwrap();
        for &(x, y, t, z) in &tuples {
            prop_assert_eq!(x, y);
            prop_assert_eq!(t, z);
            prop_assert!(r.related(x, t));
        }
        let expected: usize = r.blocks.iter().map(|b| b.len() * b.len()).sum();
        prop_assert_eq!(tuples.len(), expected);
    }

    #[test]
    fn hnf_basis_is_canonical(
        vecs in prop::collection::vec(prop::collection::vec(-4i64..=4, 3), 1..=3),
        coeffs in prop::collection::vec(-2i64..=2, 3),
    ) {
        let l = IntLattice::from_vectors(3, &vecs).unwrap();
        // Append an integer combination of the generators and reverse the
        // order: the canonical basis must not change.
        let combo: Vec<i64> = (0..3)
            .map(|i| vecs.iter().zip(&coeffs).map(|(v, c)| v[i] * c).sum())
            .collect();
        let mut shuffled = vecs.clone();
        shuffled.reverse();
        shuffled.push(combo);
        let l2 = IntLattice::from_vectors(3, &shuffled).unwrap();
        prop_assert_eq!(l, l2);
    }

    #[test]
    fn integer_lattice_laws((a, b) in (lattice_strategy(), lattice_strategy())) {
        let meet = lattice_meet(&a, &b).unwrap();
        let join = lattice_join(&a, &b).unwrap();
        prop_assert_eq!(&meet, &lattice_meet(&b, &a).unwrap());
        prop_assert_eq!(&join, &lattice_join(&b, &a).unwrap());
        prop_assert!(meet.is_sublattice_of(&a) && meet.is_sublattice_of(&b));
        prop_assert!(a.is_sublattice_of(&join) && b.is_sublattice_of(&join));
        prop_assert_eq!(&lattice_meet(&a, &join).unwrap(), &a);
        prop_assert_eq!(&lattice_join(&a, &meet).unwrap(), &a);
    }

    #[test]
    fn grid_positions_round_trip(p in 0usize..81) {
        let e = grid_position(p, 4);
        prop_assert_eq!(grid_index(&e), p);
        prop_assert!(e.iter().all(|&d| d < 3));
    }
}
