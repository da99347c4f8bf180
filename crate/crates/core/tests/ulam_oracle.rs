mod common;

use common::{lemp_violations, q, ulam_oracle_failures, LinearMod1};
use decaycert::contraction::{rigorous_matvec, RigorousVector};
use decaycert::dynamics::{linear_mod1, Hole};
use decaycert::ulam::{apply_hole_mask, build_ulam};

#[test]
fn entries_contain_exact_measure_doubling() {
    for k in [8, 16, 32] {
        let (n, bad) = ulam_oracle_failures(2, 1, k);
        assert_eq!(bad, 0, "k = {k}: {bad} of {n} entries miss the exact value");
    }
}

#[test]
fn entries_contain_exact_measure_23_over_5() {
    for k in [8, 16, 32] {
        let (n, bad) = ulam_oracle_failures(23, 5, k);
        assert_eq!(bad, 0, "k = {k}: {bad} of {n} entries miss the exact value");
    }
}

#[test]
fn exact_columns_are_stochastic() {
    let m = LinearMod1::new(23, 5);
    for i in 1..=16 {
        let s = (1..=16).fold(q(0, 1), |s, j| s + m.ulam_entry(16, j, i));
        assert_eq!(s, q(1, 1));
    }
}

#[test]
fn approximation_inequality_on_random_densities() {
    for (k, seed) in [(8, 11), (16, 12)] {
        let (cases, bad, worst) = lemp_violations(k, 100, seed);
        assert_eq!(
            bad, 0,
            "k = {k}: {bad} of {cases} cases, worst ratio {worst}"
        );
        assert!(worst > 0.0);
    }
}

#[test]
fn zero_average_vectors_stay_zero_average() {
    let u = build_ulam(&linear_mod1(&q(23, 5)).unwrap(), 64).unwrap();
    let v: Vec<f64> = (0..64)
        .map(|i| if i % 3 == 0 { 2.0 } else { -1.0 } * (i % 7) as f64)
        .collect();
    let mean = v.iter().sum::<f64>() / 64.0;
    let v: Vec<f64> = v.iter().map(|x| x - mean).collect();
    let s: f64 = v.iter().sum();
    let w = rigorous_matvec(&u, &RigorousVector::exact(v));
    let m = w.mass();
    assert!(
        m.lo() - (s.abs() + 1e-12) <= 0.0 && 0.0 <= m.hi() + (s.abs() + 1e-12),
        "{m:?}"
    );
}

#[test]
fn hole_columns_lose_the_hole_mass() {
    let u = build_ulam(&linear_mod1(&q(23, 5)).unwrap(), 16).unwrap();
    let h = Hole::new(q(7, 16), q(9, 16)).unwrap();
    let open = apply_hole_mask(&u, &h).unwrap();
    assert_eq!(
        open.hole_rows().iter().copied().collect::<Vec<_>>(),
        vec![8, 9]
    );
    let exact = LinearMod1::new(23, 5);
    for i in 1..=16 {
        let kept = (1..=16)
            .filter(|j| *j != 8 && *j != 9)
            .fold(q(0, 1), |s, j| s + exact.ulam_entry(16, j, i));
        assert!(common::contains_q(open.column_sum(i), &kept), "column {i}");
        assert!(open.column_sum(i).hi() <= 1.0);
    }
}
