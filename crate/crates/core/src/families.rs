//! Closed-form stage families.
//!
//! A system is an explicit prefix of stages followed by one of these rules.
//! Each rule generates stage data at any index and, where the algebra allows,
//! gives exact values (or certified brackets) for the infinite tail products
//! the invariants need.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::exact::{qi, Rational};

/// Run-length multiset of multiplicities `s_{i,1..c}`: `(value, count)` pairs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Runs(pub Vec<(u64, u64)>);

impl Runs {
    pub fn uniform(value: u64, count: u64) -> Self {
        Runs(vec![(value, count)])
    }

    /// From an explicit list, merging adjacent equal values.
    pub fn from_list(list: &[u64]) -> Self {
        let mut out: Vec<(u64, u64)> = Vec::new();
        for &v in list {
            match out.last_mut() {
                Some((w, cnt)) if *w == v => *cnt += 1,
                _ => out.push((v, 1)),
            }
        }
        Runs(out)
    }

    /// Number of coordinate projections `c`.
    pub fn c(&self) -> u64 {
        self.0.iter().map(|&(_, k)| k).sum()
    }

    /// `n = Σ s`.
    pub fn n(&self) -> u64 {
        self.0.iter().map(|&(v, k)| v * k).sum()
    }

    /// How many entries have multiplicity one.
    pub fn ones(&self) -> u64 {
        self.0.iter().filter(|&&(v, _)| v == 1).map(|&(_, k)| k).sum()
    }

    /// Expanded list; callers keep `c` small.
    pub fn to_list(&self) -> Vec<u64> {
        self.0
            .iter()
            .flat_map(|&(v, k)| std::iter::repeat(v).take(k as usize))
            .collect()
    }

    /// `(1-based index, multiplicity)` for every entry.
    pub fn indexed(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        let mut idx = 0u64;
        self.0.iter().flat_map(move |&(v, k)| {
            let start = idx;
            idx += k;
            (1..=k).map(move |t| (start + t, v))
        })
    }
}

/// One stage's combinatorial shape (the evaluation points come from the system).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub s: Runs,
    pub k: u64,
}

impl Shape {
    pub fn c(&self) -> u64 {
        self.s.c()
    }
    pub fn n(&self) -> u64 {
        self.s.n()
    }
    /// `n + k`, the size multiplier of the stage.
    pub fn nk(&self) -> u64 {
        self.n() + self.k
    }
}

/// How the `n` coordinate slots of a squares stage are laid out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// `c = n`, every multiplicity 1.
    Spread,
    /// `c = 1` with a single projection of multiplicity `n`.
    Single,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Family {
    /// Stage `i` has `n + k = b²`, `k = 1`, with `b = from + i − 1`.
    Squares { from: u64, layout: Layout },
    /// Stage `i` has `n + k = b²`, `k = 1`, with `b = from + 2(i − 1)`, `from` odd.
    OddSquares { from: u64, layout: Layout },
    /// The same shape at every stage.
    Constant { shape: Shape },
    /// Ratios `n/(n+k) = T_i/T_{i+1}` with `T_i = 1 − (1 − target)/2^{i−1}`, so the
    /// ratios multiply to `target`. Numerator and denominator are scaled by
    /// `(i+1)²`, which puts every prime into infinitely many terms.
    Halving {
        #[serde(with = "crate::exact::serde_q")]
        target: Rational,
    },
}

/// Which per-stage ratio an infinite product runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RatioKind {
    /// `n/(n+k)`
    NOverNk,
    /// `c/(n+k)`
    COverNk,
    /// `c/n`
    COverN,
    /// `#{s = 1}/n`
    OnesOverN,
}

impl RatioKind {
    pub fn of(self, shape: &Shape) -> Rational {
        let (num, den) = match self {
            RatioKind::NOverNk => (shape.n(), shape.nk()),
            RatioKind::COverNk => (shape.c(), shape.nk()),
            RatioKind::COverN => (shape.c(), shape.n()),
            RatioKind::OnesOverN => (shape.s.ones(), shape.n()),
        };
        Rational::new(num.into(), den.into())
    }
}

/// Certified value of an infinite product of factors in (0, 1].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TailBound {
    pub lower: Rational,
    pub upper: Rational,
    pub exact: Option<Rational>,
}

impl TailBound {
    pub fn exact(v: Rational) -> Self {
        TailBound { lower: v.clone(), upper: v.clone(), exact: Some(v) }
    }

    pub fn scale(&self, k: &Rational) -> Self {
        TailBound {
            lower: &self.lower * k,
            upper: &self.upper * k,
            exact: self.exact.as_ref().map(|e| e * k),
        }
    }
}

fn overflow(i: usize) -> Error {
    Error::StageBeyondGenerator { stage: i }
}

impl Family {
    /// Check the family parameters themselves.
    pub fn check(&self) -> Result<(), Error> {
        match self {
            Family::Squares { from, .. } if *from < 2 => {
                Err(Error::Invalid(format!("squares family needs base >= 2, got {from}")))
            }
            Family::OddSquares { from, .. } if *from < 3 || from % 2 == 0 => {
                Err(Error::Invalid(format!("odd squares family needs an odd base >= 3, got {from}")))
            }
            Family::Constant { shape } => {
                if shape.s.0.iter().any(|&(v, k)| v == 0 || k == 0) || shape.s.0.is_empty() {
                    return Err(Error::Invalid("constant family has an empty or zero multiplicity".into()));
                }
                if shape.k == 0 {
                    return Err(Error::Invalid("constant family needs k >= 1".into()));
                }
                Ok(())
            }
            Family::Halving { target } => {
                if *target <= Rational::zero() || *target >= Rational::one() {
                    return Err(Error::Invalid("halving family needs 0 < target < 1".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn square_base(&self, i: usize) -> Option<u64> {
        let step = (i as u64).checked_sub(1)?;
        match self {
            Family::Squares { from, .. } => from.checked_add(step),
            Family::OddSquares { from, .. } => from.checked_add(step.checked_mul(2)?),
            _ => None,
        }
    }

    /// Shape of stage `i` (1-based).
    pub fn shape(&self, i: usize) -> Result<Shape, Error> {
        match self {
            Family::Squares { layout, .. } | Family::OddSquares { layout, .. } => {
                let b = self.square_base(i).ok_or_else(|| overflow(i))?;
                let nk = b.checked_mul(b).ok_or_else(|| overflow(i))?;
                let n = nk - 1;
                let s = match layout {
                    Layout::Spread => Runs::uniform(1, n),
                    Layout::Single => Runs::uniform(n, 1),
                };
                Ok(Shape { s, k: 1 })
            }
            Family::Constant { shape } => Ok(shape.clone()),
            Family::Halving { target } => {
                let (n, nk) = halving_terms(target, i).ok_or_else(|| overflow(i))?;
                Ok(Shape { s: Runs::uniform(1, n), k: nk - n })
            }
        }
    }

    /// Infinite product of `kind` over stages `from_stage, from_stage + 1, …`.
    pub fn tail(&self, kind: RatioKind, from_stage: usize) -> TailBound {
        let zero = || TailBound::exact(Rational::zero());
        let one = || TailBound::exact(Rational::one());
        match self {
            Family::Squares { layout, .. } | Family::OddSquares { layout, .. } => {
                let spread = *layout == Layout::Spread;
                match kind {
                    RatioKind::COverN | RatioKind::OnesOverN => {
                        if spread {
                            one()
                        } else {
                            zero()
                        }
                    }
                    RatioKind::COverNk if !spread => zero(),
                    _ => {
                        let b0 = self.square_base(from_stage).unwrap_or(u64::MAX);
                        let b0 = qi(b0);
                        match self {
                            // prod_{b >= b0} (b^2 - 1)/b^2 = (b0 - 1)/b0
                            Family::Squares { .. } => TailBound::exact((&b0 - Rational::one()) / &b0),
                            // sum_{b odd >= b0} 1/b^2 <= 1/(2(b0 - 1)) by telescoping
                            // against 1/((b-1)(b+1)); the product is at least one minus that.
                            _ => TailBound {
                                lower: Rational::one() - Rational::one() / (qi(2) * (&b0 - Rational::one())),
                                upper: Rational::one() - Rational::one() / (&b0 * &b0),
                                exact: None,
                            },
                        }
                    }
                }
            }
            Family::Constant { shape } => {
                let r = kind.of(shape);
                if r.is_one() {
                    one()
                } else {
                    zero()
                }
            }
            Family::Halving { target } => match kind {
                RatioKind::COverN | RatioKind::OnesOverN => one(),
                // prod_{m >= M} T_m/T_{m+1} = T_M / lim T = T_M
                _ => TailBound::exact(halving_t(target, from_stage)),
            },
        }
    }

    /// Short human-readable tag.
    pub fn tag(&self) -> String {
        match self {
            Family::Squares { from, layout } => format!("squares(from={from},{layout:?})"),
            Family::OddSquares { from, layout } => format!("odd-squares(from={from},{layout:?})"),
            Family::Constant { shape } => format!("constant(c={},n={},k={})", shape.c(), shape.n(), shape.k),
            Family::Halving { target } => format!("halving(target={})", crate::exact::fmt_q(target)),
        }
    }
}

/// `T_m = 1 − (1 − target)/2^{m−1}`.
pub fn halving_t(target: &Rational, m: usize) -> Rational {
    let u = Rational::one() - target;
    let pow = BigInt::one() << (m.saturating_sub(1));
    Rational::one() - u / Rational::from_integer(pow)
}

/// `(n, n + k)` of halving stage `m`: the reduced ratio `T_m/T_{m+1}` scaled by `(m+1)²`.
pub fn halving_terms(target: &Rational, m: usize) -> Option<(u64, u64)> {
    let a = halving_t(target, m) / halving_t(target, m + 1);
    let scale = BigInt::from(m as u64 + 1).pow(2);
    let num: u64 = (a.numer() * &scale).try_into().ok()?;
    let den: u64 = (a.denom() * &scale).try_into().ok()?;
    debug_assert!(num < den);
    Some((num, den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;

    #[test]
    fn runs_counts() {
        let r = Runs::from_list(&[1, 2, 2, 1]);
        assert_eq!(r.c(), 4);
        assert_eq!(r.n(), 6);
        assert_eq!(r.ones(), 2);
        assert_eq!(r.to_list(), vec![1, 2, 2, 1]);
        let idx: Vec<_> = r.indexed().collect();
        assert_eq!(idx, vec![(1, 1), (2, 2), (3, 2), (4, 1)]);
    }

    #[test]
    fn squares_shape_and_tail() {
        let f = Family::Squares { from: 2, layout: Layout::Spread };
        let s1 = f.shape(1).unwrap();
        assert_eq!((s1.c(), s1.n(), s1.k), (3, 3, 1));
        let s3 = f.shape(3).unwrap();
        assert_eq!(s3.nk(), 16);
        // direct partial products approach the closed form from above
        let mut p = Rational::one();
        for i in 5..400 {
            p *= RatioKind::NOverNk.of(&f.shape(i).unwrap());
        }
        let closed = f.tail(RatioKind::NOverNk, 5).exact.unwrap();
        assert_eq!(closed, q(5, 6));
        assert!(p > closed && &p - &closed < q(1, 100));
    }

    #[test]
    fn halving_ratios_multiply_to_target() {
        let t = q(3, 4);
        let f = Family::Halving { target: t.clone() };
        let mut p = Rational::one();
        for m in 1..=20 {
            let sh = f.shape(m).unwrap();
            p *= RatioKind::NOverNk.of(&sh);
            assert_eq!(sh.c(), sh.n());
            assert_eq!(sh.nk() % (m as u64 + 1).pow(2), 0);
        }
        // partial product telescopes to T_1/T_21
        assert_eq!(p, &t / halving_t(&t, 21));
        assert_eq!(f.tail(RatioKind::COverNk, 1).exact.unwrap(), t);
    }

    #[test]
    fn odd_squares_bracket_contains_partial_products() {
        let f = Family::OddSquares { from: 3, layout: Layout::Spread };
        let b = f.tail(RatioKind::NOverNk, 4);
        let mut p = Rational::one();
        for i in 4..300 {
            p *= RatioKind::NOverNk.of(&f.shape(i).unwrap());
        }
        assert!(b.lower < p && p <= b.upper);
    }
}
