use proptest::prelude::*;

use sentience::domain::{make_tag, Estimate, RealityBelief};
use sentience::reality::{conflict, fuse, update, FusionPolicy, Percept};

fn belief(mean: Vec<f64>, precision: f64) -> RealityBelief {
    RealityBelief::new().with_estimate("x", Estimate::new(mean, precision).unwrap())
}

fn percept(value: Vec<f64>, r: f64) -> Percept {
    Percept { variable_id: "x".into(), value, tag: make_tag(r, "test", "x").unwrap() }
}

fn mean_and_precision() -> impl Strategy<Value = (Vec<f64>, f64)> {
    (proptest::collection::vec(-1e3f64..1e3, 3), 1e-6f64..1e6)
}

proptest! {
    #[test]
    fn fuse_commutes((m1, p1) in mean_and_precision(), (m2, p2) in mean_and_precision()) {
        prop_assert_eq!(fuse((&m1, p1), (&m2, p2)).unwrap(), fuse((&m2, p2), (&m1, p1)).unwrap());
    }

    #[test]
    fn fuse_adds_precisions((m1, p1) in mean_and_precision(), (m2, p2) in mean_and_precision()) {
        prop_assert_eq!(fuse((&m1, p1), (&m2, p2)).unwrap().1, p1 + p2);
    }

    #[test]
    fn fused_mean_lies_between_inputs((m1, p1) in mean_and_precision(), (m2, p2) in mean_and_precision()) {
        let (m, _) = fuse((&m1, p1), (&m2, p2)).unwrap();
        for ((a, b), f) in m1.iter().zip(&m2).zip(&m) {
            prop_assert!(a.min(*b) <= *f && *f <= a.max(*b));
        }
    }

    #[test]
    fn ignored_percepts_leave_estimates_bit_equal(
        (m, p) in mean_and_precision(),
        v in proptest::collection::vec(-1e3f64..1e3, 3),
        r in 0.0f64..=0.05,
    ) {
        let z = belief(m, p);
        let next = update(&z, &[percept(v, r)], &FusionPolicy::default()).unwrap();
        prop_assert_eq!(&next.estimates, &z.estimates);
        prop_assert_eq!(next.t, z.t + 1);
    }

    #[test]
    fn conflict_is_nonnegative_and_zero_at_mean((m, p) in mean_and_precision(), v in proptest::collection::vec(-1e3f64..1e3, 3)) {
        let z = belief(m.clone(), p);
        prop_assert!(conflict(&z, "x", &v).unwrap() >= 0.0);
        prop_assert_eq!(conflict(&z, "x", &m).unwrap(), 0.0);
    }
}

#[test]
fn fuse_worked_examples() {
    assert_eq!(fuse((&[0.0], 1.0), (&[2.0], 1.0)).unwrap(), (vec![1.0], 2.0));
    let (m, p) = fuse((&[1.0], 4.0), (&[3.0], 1.0)).unwrap();
    assert!((m[0] - 1.4).abs() < 1e-15);
    assert_eq!(p, 5.0);
    let (m, _) = fuse((&[1.0], 1.0), (&[100.0], 1e-12)).unwrap();
    assert!((m[0] - 1.0).abs() < 1e-9);
}

#[test]
fn update_branches() {
    let z = belief(vec![0.0], 1.0);
    let policy = FusionPolicy::default();
    let adopted = update(&z, &[percept(vec![2.0], 0.99)], &policy).unwrap();
    assert_eq!(adopted.get("x").unwrap().mean, vec![2.0]);
    let ignored = update(&z, &[percept(vec![2.0], 0.01)], &policy).unwrap();
    assert_eq!(ignored.estimates, z.estimates);
    let gain2 = FusionPolicy { reliability_to_precision_gain: 2.0, ..policy };
    let fused = update(&z, &[percept(vec![2.0], 0.5)], &gain2).unwrap();
    assert_eq!(fused.get("x").unwrap(), &Estimate::new(vec![1.0], 2.0).unwrap());
}

#[test]
fn conflict_example() {
    let z = belief(vec![0.0], 4.0);
    assert_eq!(conflict(&z, "x", &[1.0]).unwrap(), 2.0);
}
