//! Supernatural numbers: formal products `∏ p^{e_p}` with `e_p ∈ ℕ ∪ {∞}`.
//!
//! A number is built from a sequence of positive integer terms. The first
//! terms are stored explicitly; the rest, if any, follow a closed-form
//! [`Family`]. Exponents seen up to a truncation stage are always exact. An
//! exponent is declared infinite only when the family rule proves it, and
//! comparison answers `Undetermined` whenever no proof is available.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{Family, Layout, Runs, Shape};
use crate::primes::{factor, is_prime};
use crate::system::VilladsenSystem;

/// What governs the terms after the explicit prefix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailRule {
    /// The sequence ends with the prefix.
    ExplicitFinite,
    /// Term at 1-based position `q > prefix.len()` is `n + k` of stage `q − offset`.
    Family { family: Family, offset: usize },
}

/// A 1-based sequence of positive integers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermSequence {
    pub prefix: Vec<u64>,
    /// `None`: nothing is known past the prefix.
    pub tail: Option<TailRule>,
}

impl TermSequence {
    pub fn explicit(terms: Vec<u64>) -> Self {
        TermSequence { prefix: terms, tail: Some(TailRule::ExplicitFinite) }
    }

    /// `(t, t, t, …)` for `t >= 2`.
    pub fn constant(t: u64) -> Result<Self> {
        if t < 2 {
            return Err(Error::Invalid("constant term sequence needs t >= 2".into()));
        }
        let shape = Shape { s: Runs::uniform(1, t - 1), k: 1 };
        Ok(TermSequence {
            prefix: vec![],
            tail: Some(TailRule::Family { family: Family::Constant { shape }, offset: 0 }),
        })
    }

    /// `((from + q − 1)², q ≥ 1)`.
    pub fn squares(from: u64) -> Self {
        TermSequence {
            prefix: vec![],
            tail: Some(TailRule::Family { family: Family::Squares { from, layout: Layout::Spread }, offset: 0 }),
        }
    }

    /// `((from + 2(q − 1))², q ≥ 1)` with `from` odd.
    pub fn odd_squares(from: u64) -> Self {
        TermSequence {
            prefix: vec![],
            tail: Some(TailRule::Family { family: Family::OddSquares { from, layout: Layout::Spread }, offset: 0 }),
        }
    }

    /// Term at 1-based position `q`, or `None` past the known range.
    pub fn term(&self, q: usize) -> Result<Option<u64>> {
        if q == 0 {
            return Err(Error::Invalid("term positions are 1-based".into()));
        }
        if q <= self.prefix.len() {
            return Ok(Some(self.prefix[q - 1]));
        }
        match &self.tail {
            Some(TailRule::Family { family, offset }) => {
                let stage = q.checked_sub(*offset).filter(|&s| s >= 1).ok_or_else(|| {
                    Error::Invalid(format!("position {q} precedes the family start"))
                })?;
                Ok(Some(family.shape(stage)?.nk()))
            }
            _ => Ok(None),
        }
    }

    /// Number of known terms, `None` if unbounded.
    pub fn known_len(&self) -> Option<usize> {
        match self.tail {
            Some(TailRule::Family { .. }) => None,
            _ => Some(self.prefix.len()),
        }
    }

    /// A position `q > bound` with `p | term(q)`, found from the family rule.
    /// Only defined for rules that prove `p` occurs infinitely often.
    pub fn exhibit_index(&self, p: u64, bound: usize) -> Option<usize> {
        let Some(TailRule::Family { family, offset }) = &self.tail else {
            return None;
        };
        if !is_prime(p) {
            return None;
        }
        let lo_pos = bound.max(self.prefix.len()) + 1;
        let lo = lo_pos.saturating_sub(*offset).max(1) as u64;
        // smallest stage i >= lo with i ≡ r (mod p)
        let first = |r: u64| -> u64 {
            let r = r % p;
            let base = lo - lo % p + r;
            if base >= lo {
                base
            } else {
                base + p
            }
        };
        let stage = match family {
            Family::Squares { from, .. } => first((p - from % p + 1) % p),
            Family::OddSquares { from, .. } => {
                if p == 2 {
                    return None;
                }
                // from + 2(i − 1) ≡ 0  ⇔  i ≡ 1 − from·2⁻¹ (mod p)
                let inv2 = (p + 1) / 2;
                let t = ((from % p) as u128 * inv2 as u128 % p as u128) as u64;
                first((1 + p - t) % p)
            }
            Family::Constant { shape } => {
                if shape.nk() % p != 0 {
                    return None;
                }
                lo
            }
            Family::Halving { .. } => first(p - 1),
        };
        let q = stage as usize + offset;
        let term = self.term(q).ok()??;
        (term % p == 0).then_some(q)
    }

    /// Eventual exponents as far as the rule proves them.
    fn profile(&self) -> Option<Profile> {
        let tail = self.tail.as_ref()?;
        let mut pf: BTreeMap<u64, u64> = BTreeMap::new();
        for &t in &self.prefix {
            for (p, e) in factor(t) {
                *pf.entry(p).or_default() += e as u64;
            }
        }
        Some(match tail {
            TailRule::ExplicitFinite => Profile::Finite { infinite: BTreeSet::new(), finite: pf },
            TailRule::Family { family, .. } => match family {
                Family::Squares { .. } | Family::Halving { .. } => Profile::Cofinite { finite: BTreeMap::new() },
                Family::OddSquares { .. } => {
                    let e2 = pf.get(&2).copied().unwrap_or(0);
                    Profile::Cofinite { finite: BTreeMap::from([(2, e2)]) }
                }
                Family::Constant { shape } => {
                    let infinite: BTreeSet<u64> = factor(shape.nk()).into_keys().collect();
                    pf.retain(|p, _| !infinite.contains(p));
                    Profile::Finite { infinite, finite: pf }
                }
            },
        })
    }
}

/// Eventual exponent description.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Profile {
    /// Every prime infinite except the listed ones, which have the given finite exponent.
    Cofinite { finite: BTreeMap<u64, u64> },
    /// Listed primes infinite or finite as given; every other prime has exponent 0.
    Finite { infinite: BTreeSet<u64>, finite: BTreeMap<u64, u64> },
}

/// Eventual exponent of a prime: `None` means infinite.
fn eventual(profile: &Profile, p: u64) -> Option<u64> {
    match profile {
        Profile::Cofinite { finite } => finite.get(&p).copied(),
        Profile::Finite { infinite, finite } => {
            if infinite.contains(&p) {
                None
            } else {
                Some(finite.get(&p).copied().unwrap_or(0))
            }
        }
    }
}

/// Smallest prime where two profiles provably disagree, if any.
fn first_difference(a: &Profile, b: &Profile) -> Option<u64> {
    let mut candidates: BTreeSet<u64> = BTreeSet::new();
    for pr in [a, b] {
        match pr {
            Profile::Cofinite { finite } => candidates.extend(finite.keys()),
            Profile::Finite { infinite, finite } => {
                candidates.extend(infinite);
                candidates.extend(finite.keys());
            }
        }
    }
    let listed = candidates.iter().copied().find(|&p| eventual(a, p) != eventual(b, p));
    let mixed = matches!(
        (a, b),
        (Profile::Cofinite { .. }, Profile::Finite { .. }) | (Profile::Finite { .. }, Profile::Cofinite { .. })
    );
    if !mixed {
        return listed;
    }
    // One side is infinite at every unlisted prime, the other is zero there.
    let mut p = 2u64;
    loop {
        if is_prime(p) && !candidates.contains(&p) {
            break;
        }
        p += 1;
    }
    Some(listed.map_or(p, |l| l.min(p)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupernaturalNumber {
    /// Exponents of the product of the first `truncation_stage` terms.
    #[serde(with = "pairs")]
    pub known_exponents: BTreeMap<u64, u64>,
    pub truncation_stage: usize,
    pub terms: TermSequence,
}

mod pairs {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<u64, u64>, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<(u64, u64)> = m.iter().map(|(a, b)| (*a, *b)).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u64, u64>, D::Error> {
        let v: Vec<(u64, u64)> = Vec::deserialize(d)?;
        Ok(v.into_iter().collect())
    }
}

/// Factor the product of the first `depth` terms.
pub fn from_terms(terms: &TermSequence, depth: usize) -> Result<SupernaturalNumber> {
    if depth == 0 {
        return Err(Error::Invalid("depth must be positive".into()));
    }
    let mut known: BTreeMap<u64, u64> = BTreeMap::new();
    let mut reached = depth;
    for q in 1..=depth {
        let t = match terms.term(q) {
            // a generator that overflows u64 truncates the expansion there
            Err(Error::StageBeyondGenerator { .. }) if q > 1 => {
                reached = q - 1;
                break;
            }
            other => other?,
        };
        let t = t.ok_or_else(|| Error::Invalid(format!("term {q} is beyond the known sequence")))?;
        if t == 0 {
            return Err(Error::Invalid(format!("term {q} is zero")));
        }
        for (p, e) in factor(t) {
            *known.entry(p).or_default() += e as u64;
        }
    }
    Ok(SupernaturalNumber { known_exponents: known, truncation_stage: reached, terms: terms.clone() })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Comparison {
    Equal,
    NotEqual { witness: u64 },
    Undetermined { bound: usize },
}

impl SupernaturalNumber {
    /// Recompute at a deeper (or equal) truncation.
    pub fn refresh(&self, depth: usize) -> Result<SupernaturalNumber> {
        from_terms(&self.terms, depth)
    }

    /// Short name of the tail rule.
    pub fn tail_name(&self) -> String {
        match &self.terms.tail {
            None => "unknown".into(),
            Some(TailRule::ExplicitFinite) => "explicit-finite".into(),
            Some(TailRule::Family { family, .. }) => match family {
                Family::Squares { .. } | Family::Halving { .. } => "all-primes-infinite".into(),
                Family::OddSquares { .. } => "odd-primes-infinite".into(),
                Family::Constant { .. } => "constant".into(),
            },
        }
    }

    /// Eventual exponent of `p` when provable: `Some(None)` is infinite.
    pub fn eventual_exponent(&self, p: u64) -> Option<Option<u64>> {
        self.terms.profile().map(|pr| eventual(&pr, p))
    }

    /// Three-valued equality; `bound` caps how far unproven sequences are expanded.
    pub fn compare(&self, other: &SupernaturalNumber, bound: usize) -> Comparison {
        if self.terms == other.terms {
            return Comparison::Equal;
        }
        match (self.terms.profile(), other.terms.profile()) {
            (Some(a), Some(b)) => match first_difference(&a, &b) {
                None => Comparison::Equal,
                Some(p) => Comparison::NotEqual { witness: p },
            },
            (Some(a), None) => lower_bound_witness(&a, other, bound),
            (None, Some(b)) => lower_bound_witness(&b, self, bound),
            (None, None) => Comparison::Undetermined { bound },
        }
    }

    /// Human-readable description of the eventual value.
    pub fn describe(&self) -> String {
        match self.terms.profile() {
            None => {
                let known: Vec<String> =
                    self.known_exponents.iter().map(|(p, e)| format!("{p}^{e}")).collect();
                format!("at least {} (no tail proof)", known.join("·"))
            }
            Some(Profile::Cofinite { finite }) if finite.is_empty() => "all-primes-infinite".into(),
            Some(Profile::Cofinite { finite }) => {
                let ex: Vec<String> = finite.iter().map(|(p, e)| format!("{p}^{e}")).collect();
                format!("every prime infinite except {}", ex.join(", "))
            }
            Some(Profile::Finite { infinite, finite }) => {
                let mut parts: Vec<String> = infinite.iter().map(|p| format!("{p}^inf")).collect();
                parts.extend(finite.iter().filter(|(_, e)| **e > 0).map(|(p, e)| format!("{p}^{e}")));
                if parts.is_empty() {
                    "1".into()
                } else {
                    parts.join("·")
                }
            }
        }
    }
}

fn lower_bound_witness(proved: &Profile, open: &SupernaturalNumber, bound: usize) -> Comparison {
    let depth = match open.terms.known_len() {
        Some(len) => bound.min(len).max(open.truncation_stage.min(len)),
        None => bound,
    };
    let Ok(deep) = open.refresh(depth.max(1)) else {
        return Comparison::Undetermined { bound };
    };
    for (&p, &e) in &deep.known_exponents {
        if let Some(f) = eventual(proved, p) {
            if e > f {
                return Comparison::NotEqual { witness: p };
            }
        }
    }
    Comparison::Undetermined { bound }
}

impl fmt::Display for SupernaturalNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.describe())
    }
}

/// `K₀` of the limit: the supernatural number `n₀ · ∏ (nᵢ + kᵢ)` with unit class 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct K0Description {
    pub multiplicity: SupernaturalNumber,
    pub unit_class: u64,
}

/// Term sequence `(n₀, n₁ + k₁, n₂ + k₂, …)` of a system.
pub fn k0_terms(sys: &VilladsenSystem) -> TermSequence {
    let mut prefix = vec![sys.n0];
    prefix.extend(sys.prefix.iter().map(|st| st.shape.nk()));
    let tail = match &sys.family {
        Some(f) => TailRule::Family { family: f.clone(), offset: 1 },
        None => TailRule::ExplicitFinite,
    };
    TermSequence { prefix, tail: Some(tail) }
}

/// `depth` counts terms, so depth 1 is `n₀` alone.
pub fn k0_of_system(sys: &VilladsenSystem, depth: usize) -> Result<K0Description> {
    let terms = k0_terms(sys);
    let depth = match terms.known_len() {
        Some(len) => depth.min(len),
        None => depth,
    };
    Ok(K0Description { multiplicity: from_terms(&terms, depth.max(1))?, unit_class: 1 })
}

impl K0Description {
    pub fn is_trivial(&self) -> bool {
        self.multiplicity.known_exponents.values().all(|e| e.is_zero())
    }
}
