use decaycert::dynamics::{
    build_map, distortion_excess_integral, iterate_map, BranchSpec, PiecewiseMap,
};
use decaycert::lasota_yorke::ly_lorenz;
use decaycert::parse_expr;
use decaycert::rigor::parse_rational;

fn lorenz4() -> PiecewiseMap {
    let q = |s: &str| parse_rational(s).unwrap();
    let t = build_map(&[
        BranchSpec::exact(
            &q("0"),
            &q("1/2"),
            parse_expr("(109/64)*abs(x - 1/2)^(57/64)").unwrap(),
        ),
        BranchSpec::exact(
            &q("1/2"),
            &q("1"),
            parse_expr("1 - (109/64)*abs(x - 1/2)^(57/64)").unwrap(),
        ),
    ])
    .unwrap();
    iterate_map(&t, 4).unwrap()
}

// Dense sampling of |F''/F'^2| above 300 on 4e7 points per branch, plus the
// jumps of 1/F' at the singular ends.
const INTEGRAL_ORACLE: f64 = 1.26225;

#[test]
fn distortion_integral_matches_sampling() {
    let f = lorenz4();
    assert_eq!(f.branches().len(), 16);
    let (excess, _) = distortion_excess_integral(&f, 300.0).unwrap();
    assert!(excess.lo() <= INTEGRAL_ORACLE, "{excess:?}");
    assert!((excess.hi() - INTEGRAL_ORACLE).abs() < 1e-3, "{excess:?}");
}

#[test]
fn coefficients_are_at_least_as_good_as_published() {
    let ly = ly_lorenz(&lorenz4(), 300.0).unwrap();
    assert_eq!(ly.a.hi(), 1.0);
    assert!(ly.lambda1.hi() <= 0.884, "{:?}", ly.lambda1);
    assert!(ly.b.hi() <= 4049.0, "{:?}", ly.b);
}
