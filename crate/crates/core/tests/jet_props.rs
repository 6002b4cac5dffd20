use aim_core::Jet;
use proptest::prelude::*;

const X0: f64 = 0.7;

fn jet(c: &[f64]) -> Jet {
    Jet::from_coeffs(c.to_vec(), X0).unwrap()
}

fn abs_jet(a: &Jet) -> Jet {
    jet(&a.coeffs().iter().map(|c| c.abs()).collect::<Vec<_>>())
}

/// Largest coefficient gap, measured against the magnitude the arithmetic
/// actually worked with (`scale` is a jet of absolute values).
fn rel_gap(a: &Jet, b: &Jet, scale: &Jet) -> f64 {
    let s = scale.max_abs().max(1.0);
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (x - y).abs() / s)
        .fold(0.0, f64::max)
}

fn coeffs(order: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, order + 1)
}

fn triple() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (0usize..12).prop_flat_map(|n| (coeffs(n), coeffs(n), coeffs(n)))
}

proptest! {
    #[test]
    fn addition_and_multiplication_commute((a, b, _) in triple()) {
        let (a, b) = (jet(&a), jet(&b));
        prop_assert_eq!(a.checked_add(&b).unwrap(), b.checked_add(&a).unwrap());
        let scale = abs_jet(&a).checked_mul(&abs_jet(&b)).unwrap();
        let gap = rel_gap(&a.checked_mul(&b).unwrap(), &b.checked_mul(&a).unwrap(), &scale);
        prop_assert!(gap <= 1e-13, "gap {gap}");
    }

    #[test]
    fn operations_associate((a, b, c) in triple()) {
        let (a, b, c) = (jet(&a), jet(&b), jet(&c));
        let sum_scale = abs_jet(&a).checked_add(&abs_jet(&b)).unwrap().checked_add(&abs_jet(&c)).unwrap();
        let left = a.checked_add(&b).unwrap().checked_add(&c).unwrap();
        let right = a.checked_add(&b.checked_add(&c).unwrap()).unwrap();
        prop_assert!(rel_gap(&left, &right, &sum_scale) <= 1e-13);

        let prod_scale = abs_jet(&a).checked_mul(&abs_jet(&b)).unwrap().checked_mul(&abs_jet(&c)).unwrap();
        let left = a.checked_mul(&b).unwrap().checked_mul(&c).unwrap();
        let right = a.checked_mul(&b.checked_mul(&c).unwrap()).unwrap();
        let gap = rel_gap(&left, &right, &prod_scale);
        prop_assert!(gap <= 1e-13, "gap {gap}");
    }

    #[test]
    fn multiplication_distributes((a, b, c) in triple()) {
        let (a, b, c) = (jet(&a), jet(&b), jet(&c));
        let left = a.checked_mul(&b.checked_add(&c).unwrap()).unwrap();
        let right = a.checked_mul(&b).unwrap().checked_add(&a.checked_mul(&c).unwrap()).unwrap();
        let scale = abs_jet(&a).checked_mul(&abs_jet(&b).checked_add(&abs_jet(&c)).unwrap()).unwrap();
        let gap = rel_gap(&left, &right, &scale);
        prop_assert!(gap <= 1e-13, "gap {gap}");
    }

    #[test]
    fn leibniz_rule((a, b, _) in (1usize..12).prop_flat_map(|n| (coeffs(n), coeffs(n), Just(())))) {
        let (a, b) = (jet(&a), jet(&b));
        let n = a.order();
        let left = a.checked_mul(&b).unwrap().diff().unwrap();
        let (ta, tb) = (a.truncate(n - 1).unwrap(), b.truncate(n - 1).unwrap());
        let right = a.diff().unwrap().checked_mul(&tb).unwrap()
            .checked_add(&ta.checked_mul(&b.diff().unwrap()).unwrap()).unwrap();
        let scale = abs_jet(&a).checked_mul(&abs_jet(&b)).unwrap().diff().unwrap();
        let gap = rel_gap(&left, &right, &scale);
        prop_assert!(gap <= 1e-12, "gap {gap}");
    }

    #[test]
    fn reciprocal_inverts(
        mut a in (0usize..12).prop_flat_map(coeffs),
        lead in prop_oneof![1e-6..10.0f64, -10.0..-1e-6f64],
    ) {
        a[0] = lead;
        let a = jet(&a);
        let inv = a.recip().unwrap();
        let one = Jet::constant(1.0, a.order(), X0).unwrap();
        let scale = abs_jet(&a).checked_mul(&abs_jet(&inv)).unwrap();
        let gap = rel_gap(&a.checked_mul(&inv).unwrap(), &one, &scale);
        prop_assert!(gap <= 1e-12, "gap {gap}");
    }

    #[test]
    fn polynomial_jet_matches_finite_differences(
        p in prop::collection::vec(-3.0..3.0f64, 1..6),
        x0 in -2.0..2.0f64,
    ) {
        // p(x) = sum p_i x^i, built from the identity jet
        let eval = |x: f64| p.iter().rev().fold(0.0, |acc, &c| acc * x + c);
        let x = Jet::<f64>::identity(4, x0).unwrap();
        let mut poly = Jet::zero(4, x0).unwrap();
        for &c in p.iter().rev() {
            poly = poly.checked_mul(&x).unwrap().checked_add(&Jet::constant(c, 4, x0).unwrap()).unwrap();
        }
        prop_assert!((poly.value() - eval(x0)).abs() <= 1e-12 * (1.0 + eval(x0).abs()));

        let h = 1e-3;
        let fd1 = (eval(x0 + h) - eval(x0 - h)) / (2.0 * h);
        let fd2 = (eval(x0 + h) - 2.0 * eval(x0) + eval(x0 - h)) / (h * h);
        let d1 = poly.derivative(1).unwrap();
        let d2 = poly.derivative(2).unwrap();
        // central differences carry an O(h^2) truncation term
        let size: f64 = p.iter().map(|c| c.abs()).sum::<f64>() * 3f64.powi(5);
        prop_assert!((d1 - fd1).abs() <= 1e-6 * d1.abs().max(size), "{d1} vs {fd1}");
        prop_assert!((d2 - fd2).abs() <= 1e-6 * d2.abs().max(size) * 10.0, "{d2} vs {fd2}");
    }
}

#[test]
fn mismatched_orders_are_errors() {
    let a = jet(&[1.0, 2.0, 3.0]);
    let b = jet(&[1.0, 2.0]);
    assert!(a.checked_add(&b).is_err());
    assert!(a.checked_mul(&b).is_err());
    let c = Jet::from_coeffs(vec![1.0, 2.0, 3.0], 0.0).unwrap();
    assert!(a.checked_mul(&c).is_err());
}
