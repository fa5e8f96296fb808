//! Cross-module checks on small systems through the public API.

use std::f64::consts::LN_2;

use num_traits::One;
use stochdyn::archpotential::{closed_form_radial, gs_eval, GreenConfig, RadialLaw};
use stochdyn::dynsys::{exceptional_set, make_map, StochasticSystem};
use stochdyn::exactnum::{rat, BigRat, IntPoly, LogPoint, ProjPointQ};
use stochdyn::heights::{l1_height_control_total, measure_height, weil_height, DiscreteMeasure};
use stochdyn::orbits::{backward_tree, pushforward, well_distributed_stat};
use stochdyn::padicmodel::{classify_place, stationary_segment, PlaceClass};
use stochdyn::stochheight::{scaling_residual, stoch_height, weil_comparison_residual};
use stochdyn::suite::example_system;
use stochdyn::Error;

fn q(s: &str) -> ProjPointQ {
    s.parse().unwrap()
}

fn cubic_digits() -> StochasticSystem {
    let maps = (0..3)
        .map(|j| make_map(&IntPoly::from_i64(&[0, 0, 0, 1 << j]), &IntPoly::from_i64(&[1])).unwrap())
        .collect();
    StochasticSystem::new(maps, vec![rat(1, 3); 3]).unwrap()
}

#[test]
fn rational_tree_levels_are_probability_measures() {
    let s = example_system();
    let tree = backward_tree(&s, &q("1"), 4).unwrap();
    for k in 0..=4 {
        assert!(tree.level(k).unwrap().total_weight().is_one());
    }
    assert_eq!(well_distributed_stat(&tree, 4).unwrap(), rat(1, 256));
}

#[test]
fn pushforward_of_a_rational_measure_moves_height_by_the_degree() {
    // z^2 doubles heights of rational points, hence of their averages
    let s = example_system();
    let m = DiscreteMeasure::new([(q("3/2"), rat(1, 3)), (q("5"), rat(2, 3))]).unwrap();
    let image = pushforward(s.map(0), &m).unwrap();
    assert!((measure_height(&image) - 2.0 * measure_height(&m)).abs() < 1e-12);
}

#[test]
fn heights_scale_and_stay_within_budget() {
    let s = example_system();
    for alpha in ["1", "7/3", "-12/5"] {
        let a = q(alpha);
        assert!(scaling_residual(&s, &a, 1e-3).unwrap() <= 2e-3);
        let (diff, budget) = weil_comparison_residual(&s, &a).unwrap();
        assert!(diff <= budget);
        assert!(stoch_height(&s, &a, 1e-3).unwrap().value >= weil_height(&a) - 1e-9);
    }
    assert!((6.0 * l1_height_control_total(&s).unwrap().total - 3.0 * LN_2).abs() < 1e-12);
}

#[test]
fn digit_system_laws_at_both_kinds_of_place() {
    let s = cubic_digits();
    let e = exceptional_set(&s).unwrap();
    assert_eq!(e.points, vec![q("0"), q("inf")]);
    match closed_form_radial(&s) {
        Some(RadialLaw::LogUniform { lo, hi }) => {
            assert!((lo + LN_2).abs() < 1e-12);
            assert!(hi.abs() < 1e-12);
        }
        other => panic!("unexpected law {other:?}"),
    }
    assert!(matches!(classify_place(&s, 2).unwrap(), PlaceClass::MonomialLike(_)));
    let seg = stationary_segment(&s, 2).unwrap();
    assert!((seg.v_lo + 1.0).abs() < 1e-12 && seg.v_hi.abs() < 1e-12);
    assert!((seg.cdf(-0.5) - 0.5).abs() < 1e-3);
    assert_eq!(classify_place(&s, 3).unwrap(), PlaceClass::GoodReduction);
}

#[test]
fn green_function_vanishes_outside_and_is_negative_inside() {
    let s = cubic_digits();
    let cfg = GreenConfig::for_tolerance(&s, 1e-3).unwrap();
    assert!(gs_eval(&s, LogPoint::new(1.0, 0.3), &cfg).unwrap().abs() < 1e-3);
    assert!(gs_eval(&s, LogPoint::new(-2.0, 0.0), &cfg).unwrap() < -0.1);
}

#[test]
fn invalid_systems_are_rejected() {
    let z2 = make_map(&IntPoly::from_i64(&[0, 0, 1]), &IntPoly::from_i64(&[1])).unwrap();
    assert!(StochasticSystem::new(vec![z2.clone()], vec![BigRat::new(9.into(), 10.into())]).is_err());
    assert_eq!(
        make_map(&IntPoly::from_i64(&[1, 1]), &IntPoly::from_i64(&[1])).unwrap_err(),
        Error::DegreeTooLow(1)
    );
}
