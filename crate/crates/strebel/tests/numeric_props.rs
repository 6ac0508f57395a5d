use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use strebel::numeric::{scalar_cmp, LogRatio, Scalar};

fn rational() -> impl Strategy<Value = BigRational> {
    (-200i64..200, 1i64..50).prop_map(|(n, m)| BigRational::new(BigInt::from(n), BigInt::from(m)))
}

fn scalar_in(d: u64) -> impl Strategy<Value = Scalar> {
    (rational(), rational()).prop_map(move |(a, b)| Scalar::new(a, b, d).unwrap())
}

/// Rationals whose numerator or denominator may overflow machine words.
fn wide_rational() -> impl Strategy<Value = BigRational> {
    (rational(), 0u32..3, 0u32..3).prop_map(|(r, up, down)| {
        let big = BigInt::from(1u8) << 100;
        let scale = |k: u32| (0..k).fold(BigInt::from(1u8), |acc, _| acc * &big);
        r * BigRational::new(scale(up), scale(down))
    })
}

fn field() -> impl Strategy<Value = u64> {
    prop_oneof![Just(2u64), Just(3), Just(5), Just(7), Just(13)]
}

fn triple() -> impl Strategy<Value = (Scalar, Scalar, Scalar)> {
    field().prop_flat_map(|d| (scalar_in(d), scalar_in(d), scalar_in(d)))
}

proptest! {
    #[test]
    fn ring_axioms((x, y, z) in triple()) {
        prop_assert_eq!(&x + &y, &y + &x);
        prop_assert_eq!(&x * &y, &y * &x);
        prop_assert_eq!(&(&x + &y) + &z, &x + &(&y + &z));
        prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
        prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
        if !x.is_zero() {
            prop_assert_eq!(&x * &x.recip(), Scalar::one());
        }
    }

    #[test]
    fn order_is_total_and_translation_invariant((x, y, z) in triple()) {
        let o = scalar_cmp(&x, &y).unwrap();
        prop_assert_eq!(scalar_cmp(&y, &x).unwrap(), o.reverse());
        prop_assert_eq!(scalar_cmp(&(&x + &z), &(&y + &z)).unwrap(), o);
        let fx = x.to_f64();
        let fy = y.to_f64();
        if (fx - fy).abs() > 1e-9 {
            prop_assert_eq!(fx.partial_cmp(&fy).unwrap(), o);
        }
    }

    #[test]
    fn display_round_trips(x in field().prop_flat_map(scalar_in)) {
        let txt = x.to_string();
        let back: Scalar = txt.parse().unwrap();
        prop_assert_eq!(&back, &x);
        prop_assert_eq!(back.to_string(), txt);
    }

    #[test]
    fn decimal_agrees_with_double(x in field().prop_flat_map(scalar_in)) {
        let dec: f64 = x.to_decimal(15).parse().unwrap();
        prop_assert!((dec - x.to_f64()).abs() <= 1e-12 * x.to_f64().abs().max(1.0));
    }

    #[test]
    fn logratio_order_matches_reals(a in 1i64..60, b in 1i64..60, c in 1i64..60, e in 1i64..60, n in 1u32..4, m in 1u32..4) {
        let x = LogRatio::new(Scalar::from_ratio(a, b), n).unwrap();
        let y = LogRatio::new(Scalar::from_ratio(c, e), m).unwrap();
        let fx = x.to_f64();
        let fy = y.to_f64();
        if (fx - fy).abs() > 1e-12 {
            prop_assert_eq!(x.cmp(&y), fx.partial_cmp(&fy).unwrap());
        }
        prop_assert!((x.add(&y).to_f64() - (fx + fy)).abs() < 1e-9);
        prop_assert_eq!(x.sub(&x).cmp(&LogRatio::zero()), Ordering::Equal);
    }

    #[test]
    fn arithmetic_matches_rational_oracle(
        d in field(),
        (a1, b1, a2, b2) in (wide_rational(), wide_rational(), wide_rational(), wide_rational()),
    ) {
        let x = Scalar::new(a1.clone(), b1.clone(), d).unwrap();
        let y = Scalar::new(a2.clone(), b2.clone(), d).unwrap();
        let dd = BigRational::from_integer(BigInt::from(d));
        let sum = &x + &y;
        prop_assert_eq!(sum.rational_part(), &a1 + &a2);
        prop_assert_eq!(sum.surd_part(), &b1 + &b2);
        let prod = &x * &y;
        prop_assert_eq!(prod.rational_part(), &a1 * &a2 + &b1 * &b2 * &dd);
        prop_assert_eq!(prod.surd_part(), &a1 * &b2 + &b1 * &a2);
        if !x.is_zero() {
            let norm = &a1 * &a1 - &b1 * &b1 * &dd;
            let inv = x.recip();
            prop_assert_eq!(inv.rational_part(), &a1 / &norm);
            prop_assert_eq!(inv.surd_part(), -(&b1 / &norm));
        }
        let diff = &x - &y;
        let exact_sign = {
            let (p, q) = (diff.rational_part(), diff.surd_part());
            let lhs = &p * &p;
            let rhs = &q * &q * &dd;
            match (p.is_negative(), q.is_negative()) {
                _ if q.is_zero() => p.cmp(&BigRational::from_integer(BigInt::from(0))),
                _ if p.is_zero() => q.cmp(&BigRational::from_integer(BigInt::from(0))),
                (false, false) => Ordering::Greater,
                (true, true) => Ordering::Less,
                (false, true) => lhs.cmp(&rhs),
                (true, false) => rhs.cmp(&lhs),
            }
        };
        prop_assert_eq!(x.cmp(&y), exact_sign);
        let mut set = std::collections::HashSet::new();
        set.insert(sum.clone());
        prop_assert!(set.contains(&(&(&sum * &y) / &y)));
    }
}
