use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;

use weil_shintani::characters::frobenius_orbit_count;
use weil_shintani::grouplib::{
    conjugacy_classes, enumerate_group, random_element, twisted_classes, GroupSpec, HeisElem, SpHElem, TwistedElem,
    DEFAULT_ENUMERATION_CAP,
};
use weil_shintani::normmap::NormMap;
use weil_shintani::schrodinger::WeilRep;
use weil_shintani::{Error, Tower};

#[test]
fn semidirect_class_count_is_sum_over_cosets() {
    let t = Tower::build(3, 1, 2).unwrap();
    let g = enumerate_group(&t, GroupSpec::sp(1), 2, DEFAULT_ENUMERATION_CAP).unwrap();
    let untwisted = conjugacy_classes(&t, &g);
    let twisted = twisted_classes(&t, &g, 1);
    assert_eq!(untwisted.len(), 13);
    assert_eq!(twisted.len(), 7);
    let orbits = frobenius_orbit_count(&t, &untwisted).unwrap();
    assert_eq!(orbits, 10);

    let big: Vec<TwistedElem<_>> =
        (0..2).flat_map(|i| g.iter().map(move |x| TwistedElem { i, g: x.clone() })).collect();
    let classes = conjugacy_classes(&t, &big);
    assert_eq!(classes.len(), orbits + twisted.len());
    assert_eq!(classes.len(), 17);
}

#[test]
fn norm_commutes_with_restriction_to_center() {
    let tower = Arc::new(Tower::build(3, 1, 2).unwrap());
    let t = &*tower;
    let nm = NormMap::new(tower.clone(), 1).unwrap();
    let c = nm.config();
    let rep = WeilRep::new(tower.clone(), 1, c.d).unwrap();
    let field = t.elements(2).unwrap().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..30 {
        let s = random_element(t, GroupSpec::sp(1), 2, &mut rng).unwrap();
        let z = field[rng.gen_range(0..field.len())].clone();
        let x = SpHElem { s: s.clone(), h: HeisElem::central(t, 1, z.clone()) };
        let lhs = rep.character(&nm.gyoja_norm(&x).unwrap()).unwrap();

        let mut zn = t.zero();
        for r in 0..c.mu {
            zn = t.add(&zn, &t.frobenius(&z, (c.i * r) as i64));
        }
        let restricted = SpHElem { s: nm.gyoja_norm(&s).unwrap(), h: HeisElem::central(t, 1, zn) };
        let rhs = rep.character(&restricted).unwrap();
        assert_eq!(lhs, rhs, "s={} z={z:?}", s.to_text());
    }
}

#[test]
fn sp4_over_f9_is_too_large_to_enumerate() {
    let t = Tower::build(3, 1, 2).unwrap();
    assert!(matches!(
        enumerate_group(&t, GroupSpec::sp(2), 2, DEFAULT_ENUMERATION_CAP),
        Err(Error::GroupTooLarge { .. })
    ));
}
