use crate::error::Result;
use crate::exactnum::{quadratic_rational_roots, BigRat, IntPoly, ProjPointQ};

use super::StochasticSystem;

/// Result of the exceptional-set search.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExceptionalSet {
    /// Rational points with finite grand orbit.
    pub points: Vec<ProjPointQ>,
    /// Irreducible quadratics whose (irrational) roots are totally ramified
    /// for the first map; these cannot be tested over Q and are left open.
    pub unresolved: Vec<IntPoly>,
}

/// Totally ramified points of the first map, as rational points plus
/// irreducible quadratics for irrational pairs.
fn total_ramification_candidates(s: &StochasticSystem) -> (Vec<ProjPointQ>, Vec<IntPoly>) {
    let map = s.map(0);
    let d = map.degree();
    let j = map.jacobian();
    let jd = j.degree().expect("jacobian is nonzero");
    let mut points = Vec::new();
    let mut unresolved = Vec::new();
    if 2 * d - 2 - jd == d - 1 {
        points.push(ProjPointQ::infinity());
    }
    for (g, mult) in j.square_free_decomposition() {
        if mult != d - 1 {
            continue;
        }
        // at most two points can absorb multiplicity d - 1 out of 2d - 2
        match g.degree() {
            Some(1) => points.push(ProjPointQ::from_rat(&BigRat::new(-g.coeff(0), g.coeff(1)))),
            Some(2) => match quadratic_rational_roots(&g) {
                Some(rs) => points.extend(rs.iter().map(ProjPointQ::from_rat)),
                None => unresolved.push(g),
            },
            _ => {}
        }
    }
    (points, unresolved)
}

/// The rational points of the exceptional set (at most two).
pub fn exceptional_set(s: &StochasticSystem) -> Result<ExceptionalSet> {
    let (candidates, unresolved) = total_ramification_candidates(s);
    let mut points = Vec::new();
    for c in candidates {
        if s.is_exceptional(&c)? {
            points.push(c);
        }
    }
    points.sort();
    Ok(ExceptionalSet { points, unresolved })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::make_map;
    use crate::exactnum::rat;

    fn p(c: &[i64]) -> IntPoly {
        IntPoly::from_i64(c)
    }

    fn q(s: &str) -> ProjPointQ {
        s.parse().unwrap()
    }

    #[test]
    fn example_system_has_zero_and_infinity() {
        let s = StochasticSystem::new(
            vec![
                make_map(&p(&[0, 0, 1]), &p(&[1])).unwrap(),
                make_map(&p(&[0, 0, 2]), &p(&[1])).unwrap(),
            ],
            vec![rat(1, 2), rat(1, 2)],
        )
        .unwrap();
        let e = exceptional_set(&s).unwrap();
        assert_eq!(e.points, vec![q("0"), q("inf")]);
        assert!(e.unresolved.is_empty());
        assert!(!s.is_exceptional(&q("1")).unwrap());
    }

    #[test]
    fn depth_two_is_not_enough() {
        let s = StochasticSystem::new(
            vec![
                make_map(&p(&[1]), &p(&[0, 0, 1])).unwrap(),
                make_map(&p(&[1, 0, 1]), &p(&[1])).unwrap(),
            ],
            vec![rat(1, 2), rat(1, 2)],
        )
        .unwrap();
        let inf = q("inf");
        for w in s.words(2, 100).unwrap() {
            assert_eq!(s.word_ramification(&w.indices, &inf), w.degree);
        }
        assert!(!s.is_exceptional(&inf).unwrap());
        assert!(exceptional_set(&s).unwrap().points.is_empty());
    }

    #[test]
    fn polynomial_fixes_infinity() {
        let s = StochasticSystem::single(make_map(&p(&[1, 0, 1]), &p(&[1])).unwrap());
        assert_eq!(exceptional_set(&s).unwrap().points, vec![q("inf")]);
    }

    #[test]
    fn irrational_candidates_are_reported() {
        // a Mobius conjugate of z^2 with totally ramified points +-sqrt(2):
        // M(z) = (z - r)/(z + r), phi = M^-1 o sq o M, written over Q
        // phi(z) = (z^2 + 2) / (2z) has critical points +-sqrt(2)
        let s = StochasticSystem::single(make_map(&p(&[2, 0, 1]), &p(&[0, 2])).unwrap());
        let e = exceptional_set(&s).unwrap();
        assert!(e.points.is_empty());
        assert_eq!(e.unresolved, vec![p(&[-2, 0, 1])]);
    }
}
