//! Random backward-orbit measures `Delta_{n,alpha}`: exact weighted trees,
//! unbiased path sampling and well-distributedness statistics.
//!
//! `Delta_{n+1}` is the expected normalized pullback of `Delta_n`: every
//! support point `z` of weight `t`, every map `phi` of probability `nu`
//! and every preimage `w` of multiplicity `e` contributes `t nu e / deg phi`
//! to `w`.

use std::collections::HashMap;
use std::io::Write;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::Rng;

use crate::dynsys::{Monomial, RationalMapQ, StochasticSystem};
use crate::error::{Error, Result};
use crate::exactnum::{rat_to_f64, BigRat, CompensatedSum, LogPoint, ProjPointQ};
use crate::heights::DiscreteMeasure;
use crate::sampling::{run_workers, DEFAULT_WORKERS};
use crate::stochheight::{monomial_atom_stoch_height, stoch_height};

/// Default cap on the number of nodes in one tree.
pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

/// Chordal distance below which numeric support points are identified.
pub const CLUSTER_TOL: f64 = 1e-8;

/// One atom of a backward-orbit measure.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub point: LogPoint,
    /// Exact coordinates when the atom is a rational point.
    pub exact: Option<ProjPointQ>,
    pub weight: BigRat,
    /// Total preimage multiplicity that flowed into this atom.
    pub mult: usize,
    /// Map indices of the backward steps from the root, first step first,
    /// along the first path that reached this atom.
    pub path: Vec<usize>,
}

impl TreeNode {
    pub fn to_complex(&self) -> Complex64 {
        self.point.to_complex()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TreeLevel {
    pub nodes: Vec<TreeNode>,
    /// Number of merges decided by numeric proximity rather than by exact
    /// identity; nonzero values mean distinct algebraic points may have
    /// been identified.
    pub tolerance_merges: usize,
}

impl TreeLevel {
    pub fn total_weight(&self) -> BigRat {
        self.nodes.iter().map(|n| &n.weight).sum()
    }

    pub fn max_weight(&self) -> BigRat {
        self.nodes
            .iter()
            .map(|n| n.weight.clone())
            .max()
            .unwrap_or_else(BigRat::zero)
    }
}

/// The measures `Delta_{0,alpha}, ..., Delta_{n,alpha}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureTree {
    pub alpha: ProjPointQ,
    pub levels: Vec<TreeLevel>,
}

impl MeasureTree {
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, k: usize) -> Result<&TreeLevel> {
        self.levels
            .get(k)
            .ok_or_else(|| Error::InvalidArgument(format!("tree has no level {k}")))
    }
}

/// Preimages of an exact point with exact multiplicities summing to the
/// degree; rational preimages carry their exact coordinates.
pub fn preimages(map: &RationalMapQ, z: &ProjPointQ) -> Result<Vec<(LogPoint, Option<ProjPointQ>, usize)>> {
    Ok(map
        .preimages_exact(z)?
        .into_iter()
        .map(|p| (p.point, p.exact, p.mult))
        .collect())
}

/// Preimages of a numeric point.
pub fn preimages_numeric(map: &RationalMapQ, z: LogPoint) -> Result<Vec<(LogPoint, usize)>> {
    map.preimages_log(z)
}

/// Accumulates the atoms of one level, merging coincident points.
struct LevelBuilder {
    nodes: Vec<TreeNode>,
    by_exact: HashMap<ProjPointQ, usize>,
    grid: HashMap<(i64, i64, i64), Vec<usize>>,
    tolerance_merges: usize,
}

fn sphere_coords(p: LogPoint) -> [f64; 3] {
    // stereographic image on the unit sphere; chordal distance is half the
    // Euclidean distance there
    if p.is_infinity() {
        return [0.0, 0.0, 1.0];
    }
    if p.is_zero() {
        return [0.0, 0.0, -1.0];
    }
    let r = p.abs();
    let (s, c) = p.arg.sin_cos();
    if r.is_infinite() {
        return [0.0, 0.0, 1.0];
    }
    let k = 2.0 * r / (1.0 + r * r);
    [k * c, k * s, (r * r - 1.0) / (r * r + 1.0)]
}

fn cell(x: [f64; 3]) -> (i64, i64, i64) {
    let c = |v: f64| (v / (2.0 * CLUSTER_TOL)).floor() as i64;
    (c(x[0]), c(x[1]), c(x[2]))
}

impl LevelBuilder {
    fn new() -> Self {
        Self {
            nodes: Vec::new(),
            by_exact: HashMap::new(),
            grid: HashMap::new(),
            tolerance_merges: 0,
        }
    }

    fn find_close(&self, p: LogPoint, exact: Option<&ProjPointQ>) -> Option<usize> {
        let (a, b, c) = cell(sphere_coords(p));
        for da in -1..=1 {
            for db in -1..=1 {
                for dc in -1..=1 {
                    let Some(ids) = self.grid.get(&(a + da, b + db, c + dc)) else {
                        continue;
                    };
                    for &i in ids {
                        let n = &self.nodes[i];
                        // never identify points with distinct exact identities
                        if let (Some(x), Some(y)) = (exact, n.exact.as_ref()) {
                            if x != y {
                                continue;
                            }
                        }
                        if n.point.chordal_distance(&p) < CLUSTER_TOL {
                            return Some(i);
                        }
                    }
                }
            }
        }
        None
    }

    fn add(&mut self, point: LogPoint, exact: Option<ProjPointQ>, weight: BigRat, mult: usize, path: &[usize]) {
        let hit = match &exact {
            Some(q) => self.by_exact.get(q).copied(),
            None => None,
        };
        let hit = hit.or_else(|| {
            let i = self.find_close(point, exact.as_ref())?;
            self.tolerance_merges += 1;
            Some(i)
        });
        if let Some(i) = hit {
            let n = &mut self.nodes[i];
            n.weight += weight;
            n.mult += mult;
            if n.exact.is_none() {
                if let Some(q) = exact {
                    n.point = q.to_log_point();
                    self.by_exact.insert(q.clone(), i);
                    n.exact = Some(q);
                }
            }
            return;
        }
        let i = self.nodes.len();
        if let Some(q) = &exact {
            self.by_exact.insert(q.clone(), i);
        }
        self.grid.entry(cell(sphere_coords(point))).or_default().push(i);
        self.nodes.push(TreeNode {
            point,
            exact,
            weight,
            mult,
            path: path.to_vec(),
        });
    }

    fn finish(self) -> TreeLevel {
        TreeLevel {
            nodes: self.nodes,
            tolerance_merges: self.tolerance_merges,
        }
    }
}

/// Exact tree of backward-orbit measures to depth `n`.
pub fn backward_tree(s: &StochasticSystem, alpha: &ProjPointQ, n: usize) -> Result<MeasureTree> {
    backward_tree_with_budget(s, alpha, n, DEFAULT_NODE_BUDGET)
}

pub fn backward_tree_with_budget(
    s: &StochasticSystem,
    alpha: &ProjPointQ,
    n: usize,
    budget: usize,
) -> Result<MeasureTree> {
    let root = TreeNode {
        point: alpha.to_log_point(),
        exact: Some(alpha.clone()),
        weight: BigRat::one(),
        mult: 1,
        path: Vec::new(),
    };
    let mut levels = vec![TreeLevel {
        nodes: vec![root],
        tolerance_merges: 0,
    }];
    let mut total = 1usize;
    let fan_out: usize = s.maps().iter().map(|m| m.degree()).sum();
    for _ in 0..n {
        let prev = levels.last().expect("root level");
        let bound = prev.nodes.len().saturating_mul(fan_out);
        if total.saturating_add(bound) > budget {
            return Err(Error::NodeBudgetExceeded(budget));
        }
        let mut next = LevelBuilder::new();
        let mut path = Vec::new();
        for node in &prev.nodes {
            for (i, (m, nu)) in s.iter().enumerate() {
                let d = BigInt::from(m.degree());
                let pre: Vec<(LogPoint, Option<ProjPointQ>, usize)> = match &node.exact {
                    Some(z) => preimages(m, z)?,
                    None => preimages_numeric(m, node.point)?
                        .into_iter()
                        .map(|(w, e)| (w, None, e))
                        .collect(),
                };
                path.clear();
                path.extend_from_slice(&node.path);
                path.push(i);
                for (w, exact, e) in pre {
                    let weight = &node.weight * nu * BigRat::new(BigInt::from(e), d.clone());
                    next.add(w, exact, weight, e, &path);
                }
            }
        }
        let level = next.finish();
        total += level.nodes.len();
        levels.push(level);
    }
    Ok(MeasureTree {
        alpha: alpha.clone(),
        levels,
    })
}

/// `sum_z Delta_k({z})^2`, exactly.
pub fn well_distributed_stat(tree: &MeasureTree, k: usize) -> Result<BigRat> {
    Ok(tree.level(k)?.nodes.iter().map(|n| &n.weight * &n.weight).sum())
}

/// Probability that a random word of length 3 is totally ramified at a
/// numerically given point, read off the critical points along the orbit.
pub fn sigma3_numeric(s: &StochasticSystem, w: LogPoint) -> f64 {
    fn rec(s: &StochasticSystem, w: LogPoint, n: usize) -> f64 {
        if n == 0 {
            return 1.0;
        }
        s.iter()
            .map(|(m, p)| {
                let e = m.ramification_numeric(w) as f64;
                rat_to_f64(p) * e / m.degree() as f64 * rec(s, m.eval_log(w), n - 1)
            })
            .sum()
    }
    rec(s, w, 3)
}

/// One step of the sup-mass contraction along levels `3(k-1) -> 3k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupMassStep {
    pub k: usize,
    pub sup: BigRat,
    /// `sup Delta_{3k} / sup Delta_{3(k-1)}`.
    pub ratio: f64,
    /// `max sigma_3` over the support of `Delta_{3k}`, which bounds the ratio.
    pub bound: f64,
}

/// Largest atom at levels `3k` and the contraction factors between them.
/// A tree shallower than 3 gives no steps.
pub fn sup_mass_decay(s: &StochasticSystem, tree: &MeasureTree) -> Result<Vec<SupMassStep>> {
    let mut out = Vec::new();
    let mut k = 1;
    while 3 * k <= tree.depth() {
        let prev = tree.levels[3 * (k - 1)].max_weight();
        let level = &tree.levels[3 * k];
        let sup = level.max_weight();
        let mut bound: f64 = 0.0;
        for n in &level.nodes {
            let sig = match &n.exact {
                Some(q) => rat_to_f64(&s.sigma3(q)?),
                None => sigma3_numeric(s, n.point),
            };
            bound = bound.max(sig);
        }
        out.push(SupMassStep {
            k,
            ratio: rat_to_f64(&(&sup / &prev)),
            sup,
            bound,
        });
        k += 1;
    }
    Ok(out)
}

/// Pushforward `phi_* Delta = sum t_i delta_{phi(alpha_i)}`.
pub fn pushforward(map: &RationalMapQ, m: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    DiscreteMeasure::new(m.atoms().iter().map(|(p, w)| (map.eval(p), w.clone())))
}

/// `h_S(Delta_k) = sum_z Delta_k({z}) h_S(z)` for the atoms of one level,
/// each estimated to `tol`. Algebraic atoms need a monomial-like system;
/// rational atoms of general systems use forward orbits.
pub fn tree_stoch_height(s: &StochasticSystem, tree: &MeasureTree, k: usize, tol: f64) -> Result<f64> {
    let level = tree.level(k)?;
    let monomial = s.maps().iter().all(|m| m.monomial().is_some());
    let mut acc = CompensatedSum::new();
    for n in &level.nodes {
        let h = if monomial {
            monomial_atom_stoch_height(s, &tree.alpha, &n.path, tol)?
        } else if let Some(q) = &n.exact {
            stoch_height(s, q, tol)?.value
        } else {
            return Err(Error::UnsupportedStructure(
                "heights of irrational atoms need a monomial-like system".into(),
            ));
        };
        acc.add(rat_to_f64(&n.weight) * h);
    }
    Ok(acc.value())
}

/// Samples of `Delta_{n,alpha}` (or of another pulled-back measure).
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSampleBatch {
    pub points: Vec<LogPoint>,
    pub depth: usize,
    pub seed: u64,
    pub samples: usize,
}

impl OrbitSampleBatch {
    pub fn radii(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.abs()).collect()
    }

    pub fn angles(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.angle()).collect()
    }

    /// CSV with columns `index,re,im,log_abs,depth`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,re,im,log_abs,depth")?;
        for (i, p) in self.points.iter().enumerate() {
            let z = p.to_complex();
            writeln!(out, "{i},{:e},{:e},{:e},{}", z.re, z.im, p.log_abs, self.depth)?;
        }
        Ok(())
    }
}

/// Backward kernel: draw `phi ~ nu`, then a preimage of `z` with
/// probability `e_w(phi) / deg phi`.
pub(crate) struct BackwardKernel<'a> {
    s: &'a StochasticSystem,
    monomials: Vec<Option<Monomial>>,
}

impl<'a> BackwardKernel<'a> {
    pub(crate) fn new(s: &'a StochasticSystem) -> Self {
        Self {
            s,
            monomials: s.maps().iter().map(|m| m.monomial()).collect(),
        }
    }

    pub(crate) fn step<R: Rng + ?Sized>(&self, z: LogPoint, rng: &mut R) -> Result<LogPoint> {
        let i = self.s.sample_map(rng);
        let m = self.s.map(i);
        if let Some(mono) = &self.monomials[i] {
            if z.is_zero() || z.is_infinity() {
                return Ok(mono.preimages_log(z)[0].0);
            }
            return Ok(mono.preimage_branch(z, rng.gen_range(0..mono.degree)));
        }
        let pre = m.preimages_log(z)?;
        let mut pick = rng.gen_range(0..m.degree());
        for (w, e) in &pre {
            if pick < *e {
                return Ok(*w);
            }
            pick -= e;
        }
        Ok(pre.last().expect("a map has preimages").0)
    }

    pub(crate) fn walk<R: Rng + ?Sized>(&self, mut z: LogPoint, n: usize, rng: &mut R) -> Result<LogPoint> {
        for _ in 0..n {
            z = self.step(z, rng)?;
        }
        Ok(z)
    }
}

/// Draws `samples` independent backward paths of length `n` started at
/// points produced by `start`, in parallel with deterministic per-worker
/// streams.
pub(crate) fn sample_paths<F>(
    s: &StochasticSystem,
    start: F,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<OrbitSampleBatch>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> LogPoint + Sync,
{
    if samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    let kernel = BackwardKernel::new(s);
    let chunks = run_workers(seed, samples, DEFAULT_WORKERS, |_, rng, count| {
        (0..count)
            .map(|_| {
                let z0 = start(rng);
                kernel.walk(z0, n, rng)
            })
            .collect::<Result<Vec<_>>>()
    });
    let mut points = Vec::with_capacity(samples);
    for c in chunks {
        points.extend(c?);
    }
    Ok(OrbitSampleBatch {
        points,
        depth: n,
        seed,
        samples,
    })
}

/// Unbiased samples of `Delta_{n,alpha}`.
pub fn backward_sample(
    s: &StochasticSystem,
    alpha: &ProjPointQ,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<OrbitSampleBatch> {
    let z0 = alpha.to_log_point();
    sample_paths(s, |_| z0, n, samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::make_map;
    use crate::exactnum::{rat, IntPoly};
    use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

    fn p(c: &[i64]) -> IntPoly {
        IntPoly::from_i64(c)
    }

    fn q(s: &str) -> ProjPointQ {
        s.parse().unwrap()
    }

    fn square() -> RationalMapQ {
        make_map(&p(&[0, 0, 1]), &p(&[1])).unwrap()
    }

    fn example() -> StochasticSystem {
        StochasticSystem::new(
            vec![square(), make_map(&p(&[0, 0, 2]), &p(&[1])).unwrap()],
            vec![rat(1, 2), rat(1, 2)],
        )
        .unwrap()
    }

    fn sorted_points(v: &[(LogPoint, Option<ProjPointQ>, usize)]) -> Vec<(f64, f64, usize)> {
        let mut out: Vec<(f64, f64, usize)> = v
            .iter()
            .map(|(w, _, e)| {
                let z = w.to_complex();
                (z.re, z.im, *e)
            })
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    #[test]
    fn preimage_examples() {
        let pre = preimages(&square(), &q("4")).unwrap();
        assert_eq!(pre.len(), 2);
        assert!(pre.iter().all(|(_, e, m)| e.is_some() && *m == 1));
        let pts = sorted_points(&pre);
        assert!((pts[0].0 + 2.0).abs() < 1e-12 && (pts[1].0 - 2.0).abs() < 1e-12);

        let two = make_map(&p(&[0, 0, 2]), &p(&[1])).unwrap();
        let pts = sorted_points(&preimages(&two, &q("1")).unwrap());
        assert!((pts[0].0 + FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((pts[1].0 - FRAC_1_SQRT_2).abs() < 1e-12);

        let pre = preimages(&square(), &q("0")).unwrap();
        assert_eq!(pre.len(), 1);
        assert_eq!(pre[0].1, Some(q("0")));
        assert_eq!(pre[0].2, 2);

        // preimage of infinity under 1/z^2 is 0, found homogeneously
        let inv = make_map(&p(&[1]), &p(&[0, 0, 1])).unwrap();
        let pre = preimages(&inv, &ProjPointQ::infinity()).unwrap();
        assert_eq!(pre.len(), 1);
        assert_eq!(pre[0].1, Some(q("0")));
        assert_eq!(pre[0].2, 2);
    }

    #[test]
    fn tree_examples() {
        let s = example();
        let t = backward_tree(&s, &q("1"), 1).unwrap();
        let l1 = &t.levels[1];
        assert_eq!(l1.nodes.len(), 4);
        assert!(l1.nodes.iter().all(|n| n.weight == rat(1, 4)));
        let mut re: Vec<f64> = l1.nodes.iter().map(|n| n.to_complex().re).collect();
        re.sort_by(f64::total_cmp);
        for (x, y) in re.iter().zip([-1.0, -FRAC_1_SQRT_2, FRAC_1_SQRT_2, 1.0]) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(l1.tolerance_merges, 0);

        let t0 = backward_tree(&s, &q("3/2"), 0).unwrap();
        assert_eq!(t0.levels.len(), 1);
        assert_eq!(t0.levels[0].nodes[0].exact, Some(q("3/2")));

        let sq = StochasticSystem::single(square());
        let t = backward_tree(&sq, &q("1"), 2).unwrap();
        let l2 = &t.levels[2];
        assert_eq!(l2.nodes.len(), 4);
        assert!(l2.nodes.iter().all(|n| n.weight == rat(1, 4)));
        assert!(l2.nodes.iter().all(|n| (n.point.log_abs).abs() < 1e-12));
    }

    #[test]
    fn exact_identities_merge_exactly() {
        // both maps send +-1 to 1: the four preimages collapse to two atoms
        let s = StochasticSystem::new(
            vec![square(), make_map(&p(&[1, 0, 0, 0, 1]), &p(&[0, 0, 2])).unwrap()],
            vec![rat(1, 3), rat(2, 3)],
        )
        .unwrap();
        let t = backward_tree(&s, &q("1"), 1).unwrap();
        let l = &t.levels[1];
        assert_eq!(l.nodes.len(), 2);
        assert!(l.nodes.iter().all(|n| n.weight == rat(1, 2) && n.mult == 3));
        assert_eq!(l.tolerance_merges, 0);
    }

    #[test]
    fn mass_conservation_and_support() {
        let s = example();
        let t = backward_tree(&s, &q("1"), 5).unwrap();
        for (k, level) in t.levels.iter().enumerate() {
            assert_eq!(level.total_weight(), BigRat::one(), "level {k}");
            assert!(level.nodes.iter().all(|n| !n.point.is_zero() && !n.point.is_infinity()));
            assert_eq!(level.nodes.len(), 4usize.pow(k as u32));
            for n in &level.nodes {
                if let Some(x) = &n.exact {
                    let a = x.to_complex().unwrap();
                    let b = n.to_complex();
                    assert!((a - b).norm() <= 1e-10 * a.norm());
                }
            }
        }
    }

    #[test]
    fn node_budget() {
        assert!(matches!(
            backward_tree_with_budget(&example(), &q("1"), 6, 1000),
            Err(Error::NodeBudgetExceeded(1000))
        ));
    }

    #[test]
    fn well_distributed_examples() {
        let s = example();
        let t = backward_tree(&s, &q("1"), 6).unwrap();
        assert_eq!(well_distributed_stat(&t, 0).unwrap(), BigRat::one());
        assert_eq!(well_distributed_stat(&t, 1).unwrap(), rat(1, 4));
        let mut prev = BigRat::one();
        for k in 0..=6 {
            let w = well_distributed_stat(&t, k).unwrap();
            assert!(w <= prev);
            prev = w;
        }
        let sq = StochasticSystem::single(square());
        let t = backward_tree(&sq, &q("1"), 4).unwrap();
        for k in 0..=4 {
            assert_eq!(well_distributed_stat(&t, k).unwrap(), rat(1, 1 << k));
        }
        assert!(well_distributed_stat(&t, 5).is_err());
    }

    #[test]
    fn sup_mass_examples() {
        let s = example();
        let t = backward_tree(&s, &q("1"), 6).unwrap();
        let steps = sup_mass_decay(&s, &t).unwrap();
        assert_eq!(steps.len(), 2);
        for st in &steps {
            // every word of length 3 has weight 1/8, and these atoms are unramified
            assert!(st.ratio <= st.bound + 1e-15);
            assert!(st.bound <= 1.0 - 1.0 / 64.0);
        }
        let sq = StochasticSystem::single(square());
        let t = backward_tree(&sq, &q("1"), 6).unwrap();
        let steps = sup_mass_decay(&sq, &t).unwrap();
        assert_eq!(steps[0].sup, rat(1, 8));
        assert_eq!(steps[1].sup, rat(1, 64));
        assert!((steps[1].ratio - 0.125).abs() < 1e-15);
        let t = backward_tree(&sq, &q("1"), 2).unwrap();
        assert!(sup_mass_decay(&sq, &t).unwrap().is_empty());
    }

    #[test]
    fn pushforward_examples() {
        let m = DiscreteMeasure::uniform(vec![q("2"), q("-2")]).unwrap();
        assert_eq!(pushforward(&square(), &m).unwrap(), DiscreteMeasure::dirac(q("4")));
        let two = make_map(&p(&[0, 0, 2]), &p(&[1])).unwrap();
        let d = DiscreteMeasure::dirac(q("1"));
        assert_eq!(pushforward(&two, &d).unwrap(), DiscreteMeasure::dirac(q("2")));
        let m = DiscreteMeasure::uniform(vec![q("1"), q("-1")]).unwrap();
        assert_eq!(pushforward(&square(), &m).unwrap(), DiscreteMeasure::dirac(q("1")));
    }

    #[test]
    fn sampler_matches_tree() {
        let s = example();
        let n = 100_000;
        let b = backward_sample(&s, &q("1"), 1, n, 0).unwrap();
        let t = backward_tree(&s, &q("1"), 1).unwrap();
        for node in &t.levels[1].nodes {
            let hits = b
                .points
                .iter()
                .filter(|z| z.chordal_distance(&node.point) < 1e-9)
                .count();
            let freq = hits as f64 / n as f64;
            assert!((freq - 0.25).abs() < 3.0 / (n as f64).sqrt(), "{freq}");
        }
        // depth 3: 64 atoms of weight 1/64
        let b = backward_sample(&s, &q("1"), 3, n, 1).unwrap();
        let t = backward_tree(&s, &q("1"), 3).unwrap();
        for node in &t.levels[3].nodes {
            let hits = b
                .points
                .iter()
                .filter(|z| z.chordal_distance(&node.point) < 1e-9)
                .count();
            let w = rat_to_f64(&node.weight);
            assert!((hits as f64 / n as f64 - w).abs() < 4.0 / (n as f64).sqrt());
        }
    }

    #[test]
    fn sampler_examples() {
        let sq = StochasticSystem::single(square());
        let b = backward_sample(&sq, &q("1"), 7, 1000, 3).unwrap();
        for z in &b.points {
            assert!(z.log_abs.abs() < 1e-12);
            let k = z.angle() / std::f64::consts::TAU * 128.0;
            assert!((k - k.round()).abs() < 1e-9);
        }
        let b = backward_sample(&example(), &q("0"), 10, 500, 0).unwrap();
        assert!(b.points.iter().all(|z| z.is_zero()));
        let a = backward_sample(&example(), &q("1"), 10, 500, 9).unwrap();
        let c = backward_sample(&example(), &q("1"), 10, 500, 9).unwrap();
        assert_eq!(a, c);
        assert!(backward_sample(&example(), &q("1"), 1, 0, 0).is_err());
    }

    #[test]
    fn sampler_handles_general_maps() {
        // z^2 + 1 and (z^2 + 2) / (2z): preimages via root finding
        let s = StochasticSystem::new(
            vec![
                make_map(&p(&[1, 0, 1]), &p(&[1])).unwrap(),
                make_map(&p(&[2, 0, 1]), &p(&[0, 2])).unwrap(),
            ],
            vec![rat(1, 2), rat(1, 2)],
        )
        .unwrap();
        let b = backward_sample(&s, &q("3"), 6, 200, 5).unwrap();
        assert!(b.points.iter().all(|z| z.log_abs.is_finite()));
        let t = backward_tree(&s, &q("3"), 3).unwrap();
        assert_eq!(t.levels[3].total_weight(), BigRat::one());
    }

    #[test]
    fn csv_export() {
        let b = backward_sample(&example(), &q("1"), 2, 3, 0).unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "index,re,im,log_abs,depth");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,") && lines[1].ends_with(",2"));
    }

    #[test]
    fn tree_heights_of_first_levels() {
        let s = example();
        let t = backward_tree(&s, &q("1"), 1).unwrap();
        let h0 = tree_stoch_height(&s, &t, 0, 1e-7).unwrap();
        assert!((h0 - LN_2 / 2.0).abs() < 1e-6);
        // atoms +-1 and +-2^(-1/2)
        let h1 = tree_stoch_height(&s, &t, 1, 1e-7).unwrap();
        assert!((h1 - 3.0 * LN_2 / 8.0).abs() < 1e-6);
    }
}
