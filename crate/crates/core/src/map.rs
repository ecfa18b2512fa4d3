//! Diagonal maps between stages.
//!
//! A map `M_{m_i}(C(X^{d_i})) → M_{m_j}(C(X^{d_j}))` is a multiset of
//! coordinate projections `f ↦ f ∘ π` and point evaluations `f ↦ f(x)`.
//! Composites of long windows have astronomically many entries, so the
//! coordinate part is kept as a product of per-stage factors and the
//! evaluation part collapses to a bare count once it would be too large to
//! list. Every count the invariants need stays exact either way.
//!
//! A coordinate entry is identified by its offset: the position (in
//! `X`-coordinates) of the selected block of `d_i` coordinates inside `X^{d_j}`.
//! With `d_i | d_j` the projection index is `offset / d_i + 1`, which gives the
//! row-major rule `index(b, a) = (b − 1)(d_j/d_i) + a` under composition.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::Runs;
use crate::space::Point;
use crate::system::VilladsenSystem;

/// Largest coordinate product that is ever listed entry by entry.
pub const EXPAND_LIMIT: u64 = 1 << 20;
/// Largest evaluation multiset kept explicitly through a composition.
pub const EVAL_LIMIT: u64 = 1 << 16;

/// One end of a map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageRef {
    pub system: String,
    pub stage: usize,
    /// Matrix size `m`.
    #[serde(serialize_with = "crate::exact::serde_n::serialize")]
    pub size: BigUint,
    /// Power `d` of the seed.
    #[serde(serialize_with = "crate::exact::serde_n::serialize")]
    pub dim: BigUint,
}

impl StageRef {
    pub fn of(sys: &VilladsenSystem, stage: usize) -> Result<Self> {
        let (size, dim) = sys.stage_dims(stage)?;
        Ok(StageRef { system: sys.name.clone(), stage, size, dim })
    }
}

/// A run of consecutive projection indices with a common multiplicity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IndexRun {
    /// First 1-based block index.
    #[serde(serialize_with = "crate::exact::serde_n::serialize")]
    pub start: BigUint,
    #[serde(serialize_with = "crate::exact::serde_n::serialize")]
    pub count: BigUint,
    pub mult: u64,
}

/// Projections from one stage map (or cross map): blocks of `block` coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoordFactor {
    #[serde(serialize_with = "crate::exact::serde_n::serialize")]
    pub block: BigUint,
    pub runs: Vec<IndexRun>,
}

impl CoordFactor {
    pub fn from_runs(block: BigUint, s: &Runs) -> Self {
        let mut runs = Vec::new();
        let mut start = BigUint::one();
        for &(mult, count) in &s.0 {
            runs.push(IndexRun { start: start.clone(), count: count.into(), mult });
            start += count;
        }
        CoordFactor { block, runs }
    }

    pub fn count(&self) -> BigUint {
        self.runs.iter().map(|r| &r.count).sum()
    }

    pub fn total(&self) -> BigUint {
        self.runs.iter().map(|r| &r.count * r.mult).sum()
    }

    pub fn ones(&self) -> BigUint {
        self.runs.iter().filter(|r| r.mult == 1).map(|r| &r.count).sum()
    }

    /// Largest block index used.
    pub fn max_index(&self) -> BigUint {
        self.runs
            .iter()
            .filter(|r| !r.count.is_zero())
            .map(|r| &r.start + &r.count - 1u32)
            .max()
            .unwrap_or_default()
    }

    /// Only called once the whole part is known to be small.
    fn entries(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.runs.iter().flat_map(|r| {
            let a = r.start.to_u64().expect("small run");
            let b = a + r.count.to_u64().expect("small run");
            (a..b).map(move |i| (i, r.mult))
        })
    }
}

/// Product of factors, outermost (target side) first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoordPart {
    pub factors: Vec<CoordFactor>,
}

impl CoordPart {
    /// Number of distinct projections.
    pub fn entry_count(&self) -> BigUint {
        self.factors.iter().map(|f| f.count()).product()
    }

    /// Sum of multiplicities.
    pub fn total(&self) -> BigUint {
        self.factors.iter().map(|f| f.total()).product()
    }

    /// Number of projections of multiplicity exactly one.
    pub fn ones(&self) -> BigUint {
        self.factors.iter().map(|f| f.ones()).product()
    }

    /// Multiplicity value → how many projections carry it.
    pub fn histogram(&self) -> Result<BTreeMap<BigUint, BigUint>> {
        let mut acc: BTreeMap<BigUint, BigUint> = BTreeMap::from([(BigUint::one(), BigUint::one())]);
        for f in &self.factors {
            let mut local: BTreeMap<u64, BigUint> = BTreeMap::new();
            for r in &f.runs {
                *local.entry(r.mult).or_default() += &r.count;
            }
            let mut next = BTreeMap::new();
            for (m, c) in &acc {
                for (lm, lc) in &local {
                    *next.entry(m * lm).or_insert_with(BigUint::zero) += c * lc;
                }
            }
            if next.len() > EXPAND_LIMIT as usize {
                return Err(Error::TooLarge { what: "multiplicity histogram", size: next.len().to_string() });
            }
            acc = next;
        }
        acc.retain(|_, c| !c.is_zero());
        Ok(acc)
    }

    /// Every projection as `offset → multiplicity` (offsets in `X`-coordinates).
    pub fn expand(&self) -> Result<BTreeMap<BigUint, BigUint>> {
        let count = self.entry_count();
        if count > BigUint::from(EXPAND_LIMIT) {
            return Err(Error::TooLarge { what: "coordinate part", size: count.to_string() });
        }
        let mut acc: Vec<(BigUint, BigUint)> = vec![(BigUint::zero(), BigUint::one())];
        for f in &self.factors {
            let mut next = Vec::with_capacity(acc.len() * f.count().to_usize().unwrap_or(0));
            for (off, m) in &acc {
                for (idx, mult) in f.entries() {
                    next.push((off + &f.block * (idx - 1), m * mult));
                }
            }
            acc = next;
        }
        let mut out = BTreeMap::new();
        for (off, m) in acc {
            *out.entry(off).or_insert_with(BigUint::zero) += m;
        }
        Ok(out)
    }

    /// All factors mult 1 and together covering every block of `dim`.
    pub fn is_full_unit_cover(&self, source_dim: &BigUint, target_dim: &BigUint) -> bool {
        self.factors.iter().all(|f| f.runs.iter().all(|r| r.mult == 1))
            && &(self.entry_count() * source_dim) == target_dim
            && self.factors.iter().all(|f| f.runs.len() == 1 && f.runs[0].start.is_one())
    }
}

/// Point-evaluation part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalPart {
    Explicit(BTreeMap<Point, BigUint>),
    /// Only the total multiplicity is tracked.
    Counted(BigUint),
}

impl EvalPart {
    pub fn total(&self) -> BigUint {
        match self {
            EvalPart::Explicit(m) => m.values().sum(),
            EvalPart::Counted(c) => c.clone(),
        }
    }

    pub fn explicit(&self) -> Option<&BTreeMap<Point, BigUint>> {
        match self {
            EvalPart::Explicit(m) => Some(m),
            EvalPart::Counted(_) => None,
        }
    }
}

impl Serialize for EvalPart {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry<'a> {
            point: &'a Point,
            #[serde(serialize_with = "crate::exact::serde_n::serialize")]
            mult: &'a BigUint,
        }
        #[derive(Serialize)]
        #[serde(tag = "form", rename_all = "snake_case")]
        enum Out<'a> {
            Explicit { entries: Vec<Entry<'a>> },
            Counted {
                #[serde(serialize_with = "crate::exact::serde_n::serialize")]
                total: &'a BigUint,
            },
        }
        match self {
            EvalPart::Explicit(m) => Out::Explicit {
                entries: m.iter().map(|(point, mult)| Entry { point, mult }).collect(),
            }
            .serialize(s),
            EvalPart::Counted(c) => Out::Counted { total: c }.serialize(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MapDescriptor {
    pub from: StageRef,
    pub to: StageRef,
    pub coords: CoordPart,
    pub evals: EvalPart,
}

impl MapDescriptor {
    /// Total multiplicity (rank in units of the source size).
    pub fn total(&self) -> BigUint {
        self.coords.total() + self.evals.total()
    }

    /// `m_j / m_i`.
    pub fn expected_total(&self) -> Option<BigUint> {
        let (q, r) = self.to.size.div_rem(&self.from.size);
        r.is_zero().then_some(q)
    }

    pub fn size_law_holds(&self) -> bool {
        self.expected_total().as_ref() == Some(&self.total())
    }

    /// Coordinate entries as `(projection index, multiplicity)`, when `d_i | d_j`
    /// and the part is small enough to list.
    pub fn coord_entries(&self) -> Result<Vec<(BigUint, BigUint)>> {
        let mut out = Vec::new();
        for (off, m) in self.coords.expand()? {
            let (idx, rem) = off.div_rem(&self.from.dim);
            if !rem.is_zero() {
                return Err(Error::Invalid("projection is not block aligned".into()));
            }
            out.push((idx + 1u32, m));
        }
        Ok(out)
    }

    /// Projection indices stay within `d_j / d_i` blocks.
    pub fn indices_in_range(&self) -> bool {
        let Ok(offsets) = self.coords.expand() else {
            return true;
        };
        offsets.keys().all(|off| off + &self.from.dim <= self.to.dim)
    }
}

/// `φ_i`: the connecting map out of stage `i`.
pub fn stage_map(sys: &VilladsenSystem, i: usize) -> Result<MapDescriptor> {
    let shape = sys.shape(i)?;
    let from = StageRef::of(sys, i)?;
    let to = StageRef::of(sys, i + 1)?;
    let coords = CoordPart { factors: vec![CoordFactor::from_runs(from.dim.clone(), &shape.s)] };
    let evals = match sys.eval_points(i)? {
        Some(points) => {
            let mut m: BTreeMap<Point, BigUint> = BTreeMap::new();
            for p in points {
                *m.entry(p).or_insert_with(BigUint::zero) += 1u32;
            }
            EvalPart::Explicit(m)
        }
        None => EvalPart::Counted(BigUint::from(shape.k)),
    };
    Ok(MapDescriptor { from, to, coords, evals })
}

/// `second ∘ first` for `first: i → j`, `second: j → l`.
pub fn compose(first: &MapDescriptor, second: &MapDescriptor) -> Result<MapDescriptor> {
    if first.to != second.from {
        return Err(Error::StageMismatch(format!(
            "{}:{} does not feed {}:{}",
            first.to.system, first.to.stage, second.from.system, second.from.stage
        )));
    }
    let mut factors = second.coords.factors.clone();
    factors.extend(first.coords.factors.iter().cloned());
    let coords = CoordPart { factors };
    let second_total = second.total();
    let evals = match (&first.evals, &second.evals) {
        (EvalPart::Explicit(fe), EvalPart::Explicit(se))
            if first.coords.entry_count() * BigUint::from(se.len()) <= BigUint::from(EVAL_LIMIT) =>
        {
            let mut out: BTreeMap<Point, BigUint> = BTreeMap::new();
            let offsets = first.coords.expand()?;
            let len = first.from.dim.to_u64().ok_or(Error::TooLarge {
                what: "point arity",
                size: first.from.dim.to_string(),
            })?;
            let expected = first.to.dim.to_u64().unwrap_or(u64::MAX);
            for (q, mq) in se {
                if q.arity() != expected {
                    return Err(Error::Arity { expected, found: q.arity() });
                }
                for (off, ma) in &offsets {
                    let off = off.to_u64().expect("offset below arity");
                    let p = q.block(off, len)?;
                    *out.entry(p).or_insert_with(BigUint::zero) += mq * ma;
                }
            }
            for (p, mp) in fe {
                *out.entry(p.clone()).or_insert_with(BigUint::zero) += mp * &second_total;
            }
            EvalPart::Explicit(out)
        }
        _ => EvalPart::Counted(
            second.evals.total() * first.coords.total() + first.evals.total() * &second_total,
        ),
    };
    Ok(MapDescriptor { from: first.from.clone(), to: second.to.clone(), coords, evals })
}

/// `φ_{i,j} = φ_{j−1} ∘ ⋯ ∘ φ_i` for `i < j`.
pub fn composite_map(sys: &VilladsenSystem, i: usize, j: usize) -> Result<MapDescriptor> {
    if i == 0 || j <= i {
        return Err(Error::Invalid(format!("composite map needs 1 <= i < j, got ({i}, {j})")));
    }
    let mut acc = stage_map(sys, i)?;
    for l in i + 1..j {
        acc = compose(&acc, &stage_map(sys, l)?)?;
    }
    Ok(acc)
}
