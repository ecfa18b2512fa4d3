//! Isomorphism decisions from the invariants.
//!
//! Two procedures are offered. `classify_same_shape` handles systems that
//! differ only in `k` and the evaluation points, where `ρ(K₀)` and the radius of
//! comparison are complete. `classify_k_contractible` handles arbitrary shapes
//! over K-contractible seeds, where `K₀` and rc are complete once rc ≠ 0 and the
//! trace simplex has to be compared as well when rc = 0. Verdicts are only
//! `Isomorphic` or `NotIsomorphic` when every hypothesis has been checked.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::Ext;
use crate::invariants::{gamma, mdim_upper, radius_of_comparison, CertifiedValue};
use crate::space::SeedSpace;
use crate::supernatural::{k0_of_system, Comparison};
use crate::system::VilladsenSystem;
use crate::traces::{simplex_tag, SimplexTag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Isomorphic,
    NotIsomorphic,
    Undetermined,
}

/// One hypothesis of the invoked theorem, per system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HypothesisFlag {
    pub name: String,
    pub system: String,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct K0Evidence {
    pub left: String,
    pub right: String,
    pub comparison: Comparison,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RcRelation {
    Equal,
    Different,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RcEvidence {
    pub left: CertifiedValue,
    pub right: CertifiedValue,
    pub relation: RcRelation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceEvidence {
    pub left: SimplexTag,
    pub right: SimplexTag,
    pub decidable: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Evidence {
    pub k0: K0Evidence,
    pub rc: RcEvidence,
    /// Absent whenever the theorem makes the trace simplex redundant.
    pub trace: Option<TraceEvidence>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassificationVerdict {
    pub verdict: Verdict,
    pub theorem_used: String,
    pub evidence: Evidence,
    pub hypotheses: Vec<HypothesisFlag>,
    pub reason: String,
}

impl ClassificationVerdict {
    /// A definite verdict never rests on a failed hypothesis.
    pub fn consistent(&self) -> bool {
        self.verdict == Verdict::Undetermined || self.hypotheses.iter().all(|h| h.holds)
    }
}

/// Everything computed about one system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InvariantReport {
    pub system: String,
    pub seed: String,
    pub k0: String,
    pub k0_truncation_stage: usize,
    pub gamma: CertifiedValue,
    pub mdim_upper: CertifiedValue,
    pub rc: CertifiedValue,
    pub simplex_tag: SimplexTag,
    pub solid: bool,
    pub connected: bool,
    pub finite_dimensional: bool,
    pub k_contractible: bool,
}

pub fn invariant_tuple(sys: &VilladsenSystem, depth: usize) -> Result<InvariantReport> {
    let k0 = k0_of_system(sys, depth)?;
    Ok(InvariantReport {
        system: sys.name.clone(),
        seed: sys.seed.name(),
        k0: k0.multiplicity.describe(),
        k0_truncation_stage: k0.multiplicity.truncation_stage,
        gamma: gamma(sys, depth)?,
        mdim_upper: mdim_upper(sys, depth)?,
        rc: radius_of_comparison(sys, depth)?,
        simplex_tag: simplex_tag(sys),
        solid: sys.seed.solid(),
        connected: sys.seed.connected(),
        finite_dimensional: sys.seed.finite_dimensional(),
        k_contractible: sys.seed.k_contractible(),
    })
}

fn rc_relation(a: &CertifiedValue, b: &CertifiedValue) -> RcRelation {
    if let (Some(x), Some(y)) = (&a.exact, &b.exact) {
        return if x == y { RcRelation::Equal } else { RcRelation::Different };
    }
    if a.upper < b.lower || b.upper < a.lower {
        return RcRelation::Different;
    }
    RcRelation::Undetermined
}

/// `Some(true)` for rc = 0, `Some(false)` for rc > 0, `None` if unknown.
fn rc_is_zero(v: &CertifiedValue) -> Option<bool> {
    if let Some(x) = &v.exact {
        return Some(x.is_zero());
    }
    if v.upper.is_zero() {
        Some(true)
    } else if v.lower > Ext::zero() {
        Some(false)
    } else {
        None
    }
}

fn flag(name: &str, sys: &VilladsenSystem, holds: bool) -> HypothesisFlag {
    HypothesisFlag { name: name.into(), system: sys.name.clone(), holds }
}

fn k0_evidence(a: &VilladsenSystem, b: &VilladsenSystem, depth: usize) -> Result<K0Evidence> {
    let ka = k0_of_system(a, depth)?.multiplicity;
    let kb = k0_of_system(b, depth)?.multiplicity;
    Ok(K0Evidence { left: ka.describe(), right: kb.describe(), comparison: ka.compare(&kb, depth) })
}

fn rc_evidence(a: &VilladsenSystem, b: &VilladsenSystem, depth: usize) -> Result<RcEvidence> {
    let left = radius_of_comparison(a, depth)?;
    let right = radius_of_comparison(b, depth)?;
    let mut relation = rc_relation(&left, &right);
    if relation == RcRelation::Undetermined && same_rc_data(a, b) {
        relation = RcRelation::Equal;
    }
    Ok(RcEvidence { left, right, relation })
}

/// rc depends only on the seed, `n₀` and the shapes; equal data give equal values
/// even when neither is known exactly.
fn same_rc_data(a: &VilladsenSystem, b: &VilladsenSystem) -> bool {
    a.seed == b.seed
        && a.n0 == b.n0
        && a.family == b.family
        && a.prefix.len() == b.prefix.len()
        && a.prefix.iter().zip(&b.prefix).all(|(x, y)| x.shape == y.shape)
}

fn failing(flags: &[HypothesisFlag]) -> Option<String> {
    let bad: Vec<String> = flags.iter().filter(|h| !h.holds).map(|h| format!("{} ({})", h.name, h.system)).collect();
    (!bad.is_empty()).then(|| bad.join(", "))
}

/// Both invariants decide: K₀ first, then rc.
fn decide_k0_rc(k0: &K0Evidence, rc: &RcEvidence) -> (Verdict, String) {
    match (&k0.comparison, rc.relation) {
        (Comparison::NotEqual { witness }, _) => {
            (Verdict::NotIsomorphic, format!("K0 differs: prime {witness} has different exponents"))
        }
        (_, RcRelation::Different) => (Verdict::NotIsomorphic, "radius of comparison differs".into()),
        (Comparison::Equal, RcRelation::Equal) => (Verdict::Isomorphic, "K0 and radius of comparison agree".into()),
        (Comparison::Undetermined { bound }, _) => {
            (Verdict::Undetermined, format!("K0 equality undetermined up to bound {bound}"))
        }
        (_, RcRelation::Undetermined) => {
            (Verdict::Undetermined, "radius of comparison is not known exactly for both systems".into())
        }
    }
}

/// Systems with the same seed, `n₀` and multiplicity patterns.
pub fn classify_same_shape(a: &VilladsenSystem, b: &VilladsenSystem, depth: usize) -> Result<ClassificationVerdict> {
    if !a.same_coordinate_shape(b, depth)? {
        return Err(Error::NotApplicable(format!(
            "{} and {} differ in seed, n0, (c_i) or (s_i,j); use classify_k_contractible",
            a.name, b.name
        )));
    }
    let k0 = k0_evidence(a, b, depth)?;
    let rc = rc_evidence(a, b, depth)?;
    let zero = rc_is_zero(&rc.left) == Some(true) && rc_is_zero(&rc.right) == Some(true);
    // common seed, so one set of flags
    let mut hypotheses = vec![flag("connected", a, a.seed.connected())];
    if !zero {
        hypotheses.push(flag("solid", a, a.seed.solid()));
        hypotheses.push(flag("finite-dimensional", a, a.seed.finite_dimensional()));
    }
    let (mut verdict, mut reason) = decide_k0_rc(&k0, &rc);
    if verdict != Verdict::Undetermined {
        if let Some(bad) = failing(&hypotheses) {
            verdict = Verdict::Undetermined;
            reason = format!("hypothesis not met: {bad}");
        }
    }
    Ok(ClassificationVerdict {
        verdict,
        theorem_used: "thm-p".into(),
        evidence: Evidence { k0, rc, trace: None },
        hypotheses,
        reason,
    })
}

/// Seeds that are powers of one K-contractible base: any two cubes, or equal seeds.
fn common_base(x: &SeedSpace, y: &SeedSpace) -> bool {
    matches!((x, y), (SeedSpace::Cube { .. }, SeedSpace::Cube { .. })) || x == y
}

/// Arbitrary shapes over K-contractible, solid, finite-dimensional seeds.
pub fn classify_k_contractible(a: &VilladsenSystem, b: &VilladsenSystem, depth: usize) -> Result<ClassificationVerdict> {
    let mut hypotheses = Vec::new();
    for sys in [a, b] {
        hypotheses.push(flag("K-contractible", sys, sys.seed.k_contractible()));
        hypotheses.push(flag("solid", sys, sys.seed.solid()));
        hypotheses.push(flag("finite-dimensional", sys, sys.seed.finite_dimensional()));
    }
    hypotheses.push(HypothesisFlag {
        name: "common base space".into(),
        system: format!("{}, {}", a.name, b.name),
        holds: common_base(&a.seed, &b.seed),
    });
    let theorem = if a.seed == b.seed { "n-theorm" } else { "diff-prod" };
    let k0 = k0_evidence(a, b, depth)?;
    let rc = rc_evidence(a, b, depth)?;
    let mut trace = None;
    let (mut verdict, mut reason) = match (rc_is_zero(&rc.left), rc_is_zero(&rc.right)) {
        (Some(false), Some(false)) => decide_k0_rc(&k0, &rc),
        (Some(true), Some(true)) => {
            let (ta, tb) = (simplex_tag(a), simplex_tag(b));
            let decidable = (ta == SimplexTag::Singleton && tb == SimplexTag::Singleton)
                || (ta == SimplexTag::BauerOverSeed && tb == SimplexTag::BauerOverSeed && a.seed == b.seed);
            trace = Some(TraceEvidence { left: ta, right: tb, decidable });
            match &k0.comparison {
                Comparison::NotEqual { witness } => {
                    (Verdict::NotIsomorphic, format!("K0 differs: prime {witness} has different exponents"))
                }
                Comparison::Undetermined { bound } => {
                    (Verdict::Undetermined, format!("K0 equality undetermined up to bound {bound}"))
                }
                Comparison::Equal if decidable => {
                    (Verdict::Isomorphic, "rc = 0 on both sides; K0 and trace simplex tags agree".into())
                }
                Comparison::Equal => (
                    Verdict::Undetermined,
                    format!("rc = 0 on both sides and K0 agrees, but trace simplices {ta:?}/{tb:?} cannot be compared"),
                ),
            }
        }
        (Some(x), Some(y)) if x != y => (Verdict::NotIsomorphic, "one radius of comparison is 0 and the other is not".into()),
        _ => (Verdict::Undetermined, "cannot tell whether the radius of comparison vanishes".into()),
    };
    if verdict != Verdict::Undetermined {
        if let Some(bad) = failing(&hypotheses) {
            verdict = Verdict::Undetermined;
            reason = format!("hypothesis not met: {bad}");
        }
    }
    Ok(ClassificationVerdict {
        verdict,
        theorem_used: theorem.into(),
        evidence: Evidence { k0, rc, trace },
        hypotheses,
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;
    use crate::families::{Family, Layout, Runs, Shape};
    use crate::invariants::rc_realization;
    use crate::system::EvalRule;

    fn s2(name: &str, seed: u64) -> VilladsenSystem {
        let mut s = VilladsenSystem::squares(seed);
        s.name = name.into();
        s
    }

    fn sq(name: &str, m: u32, from: u64, layout: Layout) -> VilladsenSystem {
        VilladsenSystem::from_family(name, SeedSpace::Cube { m }, 1, Family::Squares { from, layout }, EvalRule::default())
    }

    fn constant(name: &str, k: u64) -> VilladsenSystem {
        let shape = Shape { s: Runs::uniform(1, 2), k };
        VilladsenSystem::from_family(name, SeedSpace::Cube { m: 1 }, 1, Family::Constant { shape }, EvalRule::default())
    }

    #[test]
    fn same_shape_different_points() {
        let v = classify_same_shape(&s2("E", 1), &s2("F", 2), 30).unwrap();
        assert_eq!(v.verdict, Verdict::Isomorphic);
        assert!(v.consistent());
        assert!(v.hypotheses.iter().any(|h| h.name == "solid"));
        let e = s2("E", 1);
        assert_eq!(classify_same_shape(&e, &e, 30).unwrap().verdict, Verdict::Isomorphic);
    }

    #[test]
    fn same_shape_k0_differs() {
        // n + k = 4 versus n + k = 3 with c = n = 2
        let (a, b) = (constant("K4", 2), constant("K3", 1));
        let v = classify_same_shape(&a, &b, 30).unwrap();
        assert_eq!(v.verdict, Verdict::NotIsomorphic);
        assert_eq!(v.evidence.k0.comparison, Comparison::NotEqual { witness: 2 });
        assert_eq!(classify_same_shape(&b, &a, 30).unwrap().verdict, Verdict::NotIsomorphic);
    }

    #[test]
    fn same_shape_rejects_other_shapes() {
        let err = classify_same_shape(&s2("E", 1), &sq("S4", 4, 4, Layout::Spread), 30).unwrap_err();
        assert!(matches!(err, Error::NotApplicable(_)));
    }

    #[test]
    fn s2_against_s4() {
        let (a, b) = (s2("S2", 1), sq("S4", 4, 4, Layout::Spread));
        let v = classify_k_contractible(&a, &b, 30).unwrap();
        assert_eq!(v.verdict, Verdict::NotIsomorphic);
        assert_eq!(v.evidence.rc.left.exact, Some(Ext::Finite(q(1, 2))));
        assert_eq!(v.evidence.rc.right.exact, Some(Ext::Finite(q(3, 2))));
        assert!(v.evidence.trace.is_none());
        assert_eq!(v.theorem_used, "diff-prod");
        assert_eq!(classify_k_contractible(&b, &a, 30).unwrap().verdict, Verdict::NotIsomorphic);
    }

    #[test]
    fn realization_matches_s4() {
        let a = rc_realization(&Ext::Finite(q(3, 2))).unwrap();
        let b = sq("S4", 4, 4, Layout::Spread);
        let v = classify_k_contractible(&a, &b, 30).unwrap();
        assert_eq!(v.verdict, Verdict::Isomorphic, "{}", v.reason);
        assert!(v.evidence.trace.is_none());
    }

    #[test]
    fn odd_squares_against_s2() {
        let odd = VilladsenSystem::from_family(
            "odd",
            SeedSpace::Cube { m: 2 },
            1,
            Family::OddSquares { from: 3, layout: Layout::Spread },
            EvalRule::default(),
        );
        let v = classify_k_contractible(&odd, &s2("S2", 1), 30).unwrap();
        assert_eq!(v.verdict, Verdict::NotIsomorphic);
        assert_eq!(v.evidence.k0.comparison, Comparison::NotEqual { witness: 2 });
    }

    #[test]
    fn zero_rc_branch_uses_tags() {
        let (a, b) = (sq("G1", 1, 2, Layout::Single), sq("G2", 1, 2, Layout::Single));
        let v = classify_k_contractible(&a, &b, 30).unwrap();
        assert_eq!(v.verdict, Verdict::Isomorphic);
        assert!(v.evidence.trace.as_ref().unwrap().decidable);
        let c = sq("G3", 2, 2, Layout::Single);
        assert_eq!(classify_k_contractible(&a, &c, 30).unwrap().verdict, Verdict::Undetermined);
        let mixed = classify_k_contractible(&a, &s2("S2", 1), 30).unwrap();
        assert_eq!(mixed.verdict, Verdict::NotIsomorphic);
    }

    #[test]
    fn bracketed_rc_with_equal_data() {
        let odd = VilladsenSystem::from_family(
            "odd",
            SeedSpace::Cube { m: 1 },
            1,
            Family::OddSquares { from: 5, layout: Layout::Spread },
            EvalRule::Seeded { seed: 9, denominator: 64 },
        );
        let mut other = odd.clone();
        other.evals = EvalRule::Grid { steps: 5 };
        let v = classify_k_contractible(&odd, &other, 20).unwrap();
        assert!(v.evidence.rc.left.exact.is_none());
        assert_eq!(v.evidence.rc.relation, RcRelation::Equal);
        assert_eq!(v.verdict, Verdict::Isomorphic);
    }

    #[test]
    fn failed_hypothesis_is_undetermined() {
        let h = rc_realization(&Ext::Infinite).unwrap();
        let v = classify_k_contractible(&h, &h, 30).unwrap();
        assert_eq!(v.verdict, Verdict::Undetermined);
        assert!(v.reason.contains("finite-dimensional"));
        assert!(v.consistent());
    }

    #[test]
    fn invariant_tuples() {
        let r = invariant_tuple(&s2("S2", 1), 30).unwrap();
        assert_eq!(r.k0, "all-primes-infinite");
        assert_eq!(r.gamma.exact, Some(Ext::Finite(q(1, 2))));
        assert_eq!(r.mdim_upper.exact, Some(Ext::Finite(q(1, 1))));
        assert_eq!(r.rc.exact, Some(Ext::Finite(q(1, 2))));
        assert_eq!(r.simplex_tag, SimplexTag::Poulsen);
        assert!(r.solid && r.connected && r.finite_dimensional && r.k_contractible);

        let g = invariant_tuple(&sq("G", 1, 2, Layout::Single), 30).unwrap();
        assert_eq!(g.rc.exact, Some(Ext::zero()));
        assert_eq!(g.simplex_tag, SimplexTag::BauerOverSeed);

        let point = VilladsenSystem::from_family(
            "pt",
            SeedSpace::FiniteMetric { distances: vec![vec![q(0, 1)]] },
            1,
            Family::Squares { from: 2, layout: Layout::Spread },
            EvalRule::default(),
        );
        let p = invariant_tuple(&point, 30).unwrap();
        assert_eq!(p.rc.exact, Some(Ext::zero()));
        assert_eq!(p.simplex_tag, SimplexTag::Singleton);
    }
}
