use proptest::prelude::*;
use strebel::fixtures::origami;
use strebel::foliation::{analyze, ribbon_topology, Budgets};
use strebel::numeric::Scalar;
use strebel::surface::{geodesic_flow, Surface};

fn perm(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<usize>>()).prop_shuffle()
}

fn small_rational() -> impl Strategy<Value = Scalar> {
    (1i64..6, 1i64..4).prop_map(|(p, q)| Scalar::from_ratio(p, q))
}

prop_compose! {
    fn random_origami()(n in 1usize..8)
        (right in perm(n), up in perm(n),
         widths in prop::collection::vec(small_rational(), 1..4),
         heights in prop::collection::vec(small_rational(), 1..4),
         marks in prop::collection::vec(0usize..8, 0..3))
        -> Option<Surface> {
        let n = right.len();
        let marks: Vec<usize> = marks.into_iter().filter(|&m| m < n).collect();
        origami(&right, &up, &widths, &heights, &marks).ok()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn euler_and_cone_angles(s in random_origami()) {
        let Some(s) = s else { return Ok(()) };
        let chi = s.euler_characteristic();
        let excess: i64 = s.vertices().iter().map(|v| v.cone as i64 - 2).sum();
        prop_assert_eq!(excess, -2 * chi);
        let (g, dec) = analyze(&s, &Budgets::default()).unwrap();
        for t in ribbon_topology(&g) {
            prop_assert_eq!(t.euler, 2 - 2 * t.genus - t.punctures as i64);
            prop_assert!(t.genus >= 0);
        }
        prop_assert!(dec.is_jenkins_strebel());
        let mut total = Scalar::zero();
        for c in &dec.components {
            total += &c.area;
        }
        prop_assert_eq!(total, s.area());
    }

    #[test]
    fn flow_is_a_group_action(s in random_origami(), a in small_rational(), b in small_rational()) {
        let Some(s) = s else { return Ok(()) };
        let ab = geodesic_flow(&geodesic_flow(&s, &a).unwrap(), &b).unwrap();
        prop_assert_eq!(&ab, &geodesic_flow(&s, &(&a * &b)).unwrap());
        prop_assert_eq!(ab.area(), &s.area() * &(&a * &b));
        let (g0, d0) = analyze(&s, &Budgets::default()).unwrap();
        let (g1, d1) = analyze(&ab, &Budgets::default()).unwrap();
        let lens = |g: &strebel::foliation::CriticalGraph| {
            let mut v: Vec<Scalar> = g.edges.iter().map(|e| e.length.clone()).collect();
            v.sort();
            v
        };
        prop_assert_eq!(lens(&g0), lens(&g1));
        prop_assert_eq!(d0.components.len(), d1.components.len());
        let factor = &a * &b;
        for (x, y) in d0.components.iter().zip(&d1.components) {
            prop_assert_eq!(y.modulus().unwrap(), &x.modulus().unwrap() * &factor);
        }
    }

    #[test]
    fn serialization_round_trips(s in random_origami()) {
        let Some(s) = s else { return Ok(()) };
        let back = Surface::from_json(&s.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), s.to_json());
    }
}
