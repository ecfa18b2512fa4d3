//! Intertwining schedules between two systems.
//!
//! A schedule alternates cross maps `A_{i'} → B_i`, `B_{i'} → A_i`, … so that
//! each round trip `X_{i'_s} → Y → X_{i_{s+1}}` agrees with the system's own
//! connecting map on every trace up to the step budget `δ_s`. Two regimes are
//! covered. `SameShape` pairs share seed, `n₀` and every multiplicity pattern
//! and differ only in `k` and the evaluation points; its cross maps copy the
//! source's coordinate factors. `General` pairs share `K₀` and `γ/n₀` but not
//! the coordinate data; its cross maps use `l = ⌊d^B_i / d^A_{i'}⌋` distinct
//! projections.
//!
//! Every inequality is recorded under its label with exact left and right
//! sides, and [`reverify`] recomputes all of them from the systems alone.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{fmt_q, q, qi, qu, ratio, Ext, Rational};
use crate::families::RatioKind;
use crate::invariants::{gamma, ChainEntry, Relation};
use crate::map::{compose, composite_map, CoordFactor, CoordPart, EvalPart, IndexRun, MapDescriptor, StageRef};
use crate::space::Point;
use crate::supernatural::{k0_of_system, Comparison};
use crate::system::{VilladsenSystem, EXPLICIT_POINT_LIMIT};
use crate::validate::{tail_condition_status, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    SameShape,
    General,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    #[serde(rename = "A->B")]
    AToB,
    #[serde(rename = "B->A")]
    BToA,
}

/// Where the evaluation entries of a cross map come from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum FillPolicy {
    /// Evaluation points of the target system, newest stage first, lifted diagonally
    /// to the source arity; cycled until the rank is filled.
    CycleTarget,
    /// A fixed list, cycled.
    Explicit { points: Vec<Point> },
    /// Record only the count.
    CountOnly,
}

/// Coordinate part of a cross map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CrossCoords {
    /// The source system's own factors over the stage window.
    CopySource,
    /// `l` distinct projections of multiplicity one.
    Distinct { l: BigUint },
}

/// An admissible index pair with its transcript.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClosePair {
    pub i_prime: usize,
    pub i: usize,
    pub checks: Vec<ChainEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScheduleEntry {
    /// 1-based step.
    pub s: usize,
    pub direction: Direction,
    pub i_prime: usize,
    pub i: usize,
    #[serde(with = "crate::exact::serde_q")]
    pub delta: Rational,
    pub cross_map: MapDescriptor,
    pub checks: Vec<ChainEntry>,
}

/// `round_trip = diag{P, R′, Θ′}` against `reference = diag{P, R″, Θ″}` (ranks in
/// units of the source size).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankDecomposition {
    /// How the shared part was found: `structural`, `expanded` or `aligned-cover`.
    pub method: String,
    /// The shared coordinate part, when it is one of the two factorizations.
    pub p: Option<CoordPart>,
    #[serde(serialize_with = "crate::exact::serde_n::serialize")]
    pub p_rank: BigUint,
    #[serde(serialize_with = "crate::exact::serde_n::serialize")]
    pub r_prime: BigUint,
    #[serde(serialize_with = "crate::exact::serde_n::serialize")]
    pub r_dprime: BigUint,
    #[serde(serialize_with = "crate::exact::serde_n::serialize")]
    pub theta_prime: BigUint,
    #[serde(serialize_with = "crate::exact::serde_n::serialize")]
    pub theta_dprime: BigUint,
    /// `rank(R′)/rank(Θ′)`.
    pub ratio: Ext,
    #[serde(with = "crate::exact::serde_q")]
    pub delta: Rational,
    pub verdict: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundTrip {
    pub s: usize,
    pub system: String,
    pub from_stage: usize,
    pub to_stage: usize,
    /// `2(1 − rank P / total) < δ_s`.
    pub trace_bound: ChainEntry,
    pub decomposition: RankDecomposition,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntertwiningSchedule {
    pub a: String,
    pub b: String,
    pub variant: Variant,
    #[serde(with = "crate::exact::serde_qvec")]
    pub deltas: Vec<Rational>,
    pub search_bound: usize,
    pub fill: FillPolicy,
    /// Hypotheses checked before the search, as `label: outcome`.
    pub hypotheses: Vec<String>,
    /// Budget changes and backtracking steps taken during construction.
    pub adjustments: Vec<String>,
    pub notes: Vec<String>,
    pub entries: Vec<ScheduleEntry>,
    pub round_trips: Vec<RoundTrip>,
}

impl IntertwiningSchedule {
    /// Every recorded relation holds on its stored numbers.
    pub fn verified(&self) -> bool {
        self.entries.iter().all(|e| e.checks.iter().all(|c| c.verdict && c.holds()))
            && self.round_trips.iter().all(|r| {
                r.trace_bound.verdict && r.trace_bound.holds() && r.decomposition.verdict
            })
    }
}

/// `(m_l, d_l)` for `l = 1, 2, …` up to `upto` or the generator's limit.
fn sizes(sys: &VilladsenSystem, upto: usize) -> Result<Vec<(BigUint, BigUint)>> {
    let mut out = vec![(BigUint::from(sys.n0), BigUint::one())];
    for l in 1..upto {
        let sh = match sys.shape(l) {
            Ok(sh) => sh,
            Err(Error::StageBeyondGenerator { .. }) => break,
            Err(e) => return Err(e),
        };
        let (m, d) = out.last().cloned().expect("nonempty");
        out.push((m * sh.nk(), d * sh.c()));
    }
    Ok(out)
}

fn closed_tail(sys: &VilladsenSystem, kind: RatioKind, from: usize) -> Result<Rational> {
    sys.tail(kind, from).map(|t| t.lower).ok_or_else(|| {
        Error::Precondition(format!("{} has no closed-form tail product", sys.name))
    })
}

fn q_of(x: &BigUint) -> Rational {
    qu(x)
}

struct PairData<'a> {
    i_prime: usize,
    i: usize,
    m_src: &'a BigUint,
    d_src: &'a BigUint,
    m_tgt: &'a BigUint,
    d_tgt: &'a BigUint,
    /// `n_{i'} ⋯ n_{i−1}` of the source.
    n_window: &'a BigUint,
}

/// Checks of one candidate pair, in search order. Only the first check depends on
/// `i'` alone.
fn pair_checks(
    src: &VilladsenSystem,
    tgt: &VilladsenSystem,
    variant: Variant,
    delta: &Rational,
    p: &PairData,
    only_first: bool,
) -> Result<Vec<ChainEntry>> {
    let one = Rational::one();
    let tail = closed_tail(src, RatioKind::NOverNk, p.i_prime)?;
    let first_name = match variant {
        Variant::SameShape => "small-E-1",
        Variant::General => "small-E-1-n",
    };
    let mut out = vec![ChainEntry::new(first_name, &one - &tail, Relation::Lt, delta.clone())];
    if only_first {
        return Ok(out);
    }
    let rem = p.m_tgt.mod_floor(p.m_src);
    match variant {
        Variant::SameShape => {
            out.push(ChainEntry::new("divide-cond", q_of(&rem), Relation::Eq, Rational::zero()));
            let room = ratio(p.m_tgt, &(p.m_src * p.n_window));
            out.push(ChainEntry::new("enough-room", one, Relation::Lt, room));
        }
        Variant::General => {
            let d2 = delta * delta;
            let cn = closed_tail(src, RatioKind::COverN, p.i_prime)?;
            let left = &one - &cn + &d2 / qi(6) * &cn;
            out.push(ChainEntry::new("small-c-c-ratio", left, Relation::Lt, &d2 / qi(3)));
            let ones = closed_tail(src, RatioKind::OnesOverN, p.i_prime)?;
            out.push(ChainEntry::new("almost-m-1-A", &one - &d2 / qi(12), Relation::Lt, ones));
            out.push(ChainEntry::new("divide-cond-n", q_of(&rem), Relation::Eq, Rational::zero()));
            out.push(ChainEntry::new(
                "small-diff-pre-A-B",
                ratio(p.d_src, p.d_tgt),
                Relation::Lt,
                &d2 / qi(12),
            ));
            let l = p.d_tgt / p.d_src;
            let left = q_of(p.d_tgt) - q_of(&(&l * p.d_src));
            out.push(ChainEntry::new("approx-div-A-B", left, Relation::Lt, q_of(p.d_src)));
            let cn_t = closed_tail(tgt, RatioKind::COverN, p.i)?;
            out.push(ChainEntry::new("pert-B-C", q(1, 2), Relation::Lt, cn_t));
            let ones_t = closed_tail(tgt, RatioKind::OnesOverN, p.i)?;
            out.push(ChainEntry::new("almost-m-1-B", &one - &d2 / qi(12), Relation::Lt, ones_t));
            let room = ratio(&(l * p.m_src), p.m_tgt);
            out.push(ChainEntry::new("enough-room-n", room, Relation::Lt, one));
        }
    }
    Ok(out)
}

fn leading_passes(checks: &[ChainEntry]) -> usize {
    checks.iter().take_while(|c| c.verdict).count()
}

/// Lexicographically smallest admissible `(i', i)` with `i' >= start` and `i <= bound`.
fn search_pair(
    src: &VilladsenSystem,
    tgt: &VilladsenSystem,
    variant: Variant,
    delta: &Rational,
    start: usize,
    bound: usize,
) -> Result<ClosePair> {
    let ss = sizes(src, bound)?;
    let ts = sizes(tgt, bound)?;
    let top = bound.min(ss.len()).min(ts.len());
    let mut best: Option<(usize, usize, usize, ChainEntry)> = None;
    let mut note = |passed: usize, ip: usize, i: usize, failed: &ChainEntry| {
        if best.as_ref().map_or(true, |b| passed > b.0) {
            best = Some((passed, ip, i, failed.clone()));
        }
    };
    for ip in start.max(1)..top {
        let (m_src, d_src) = &ss[ip - 1];
        let probe = PairData {
            i_prime: ip,
            i: ip + 1,
            m_src,
            d_src,
            m_tgt: &ts[ip].0,
            d_tgt: &ts[ip].1,
            n_window: &BigUint::one(),
        };
        let head = pair_checks(src, tgt, variant, delta, &probe, true)?;
        if !head[0].verdict {
            note(0, ip, ip + 1, &head[0]);
            continue;
        }
        let mut n_window = BigUint::one();
        for i in ip + 1..=top {
            n_window *= src.shape(i - 1)?.n();
            let (m_tgt, d_tgt) = &ts[i - 1];
            let data = PairData { i_prime: ip, i, m_src, d_src, m_tgt, d_tgt, n_window: &n_window };
            let checks = pair_checks(src, tgt, variant, delta, &data, false)?;
            let passed = leading_passes(&checks);
            if passed == checks.len() {
                return Ok(ClosePair { i_prime: ip, i, checks });
            }
            note(passed, ip, i, &checks[passed]);
        }
    }
    let limit = if top < bound { format!(" (generator stops at stage {top})") } else { String::new() };
    Err(Error::Infeasible(match best {
        None => format!("no candidate stages in {start}..{bound}{limit}"),
        Some((passed, ip, i, failed)) => format!(
            "no admissible pair within bound {bound}{limit}: furthest candidate ({ip}, {i}) passed {passed} \
             check(s) and failed {}: {} vs {}",
            failed.name,
            fmt_q(&failed.left),
            fmt_q(&failed.right)
        ),
    }))
}

fn detect_variant(a: &VilladsenSystem, b: &VilladsenSystem, depth: usize) -> Result<Variant> {
    Ok(if a.same_coordinate_shape(b, depth)? { Variant::SameShape } else { Variant::General })
}

/// Smallest admissible pair for one step in the given direction.
pub fn find_close_pair(
    a: &VilladsenSystem,
    b: &VilladsenSystem,
    delta: &Rational,
    direction: Direction,
    search_bound: usize,
) -> Result<ClosePair> {
    let variant = detect_variant(a, b, search_bound)?;
    let (src, tgt) = match direction {
        Direction::AToB => (a, b),
        Direction::BToA => (b, a),
    };
    search_pair(src, tgt, variant, delta, 1, search_bound)
}

fn fill_candidates(tgt: &VilladsenSystem, i_tgt: usize, src_dim: &BigUint) -> Vec<Point> {
    let w = tgt.seed.width() as u64;
    let Some(arity) = src_dim.to_u64() else {
        return vec![];
    };
    if arity.saturating_mul(w) > EXPLICIT_POINT_LIMIT {
        return vec![];
    }
    let Ok(dims) = sizes(tgt, i_tgt) else {
        return vec![];
    };
    let mut out = Vec::new();
    for l in (1..=dims.len()).rev() {
        let d = &dims[l - 1].1;
        if !(src_dim % d).is_zero() {
            continue;
        }
        let times = (src_dim / d).to_u64().expect("below arity");
        if let Ok(Some(points)) = tgt.eval_points(l) {
            out.extend(points.iter().map(|p| p.repeat(times)));
        }
    }
    out
}

/// `count` entries drawn cyclically from `points`.
fn cycle_fill(points: &[Point], count: &BigUint) -> EvalPart {
    let len = BigUint::from(points.len());
    let (quot, rem) = count.div_rem(&len);
    let rem = rem.to_usize().expect("below list length");
    let mut out: BTreeMap<Point, BigUint> = BTreeMap::new();
    for (idx, p) in points.iter().enumerate() {
        let mult = if idx < rem { &quot + 1u32 } else { quot.clone() };
        if !mult.is_zero() {
            *out.entry(p.clone()).or_insert_with(BigUint::zero) += mult;
        }
    }
    EvalPart::Explicit(out)
}

/// Cross map from stage `i_src` of `src` to stage `i_tgt` of `tgt`: coordinate
/// projections per `coords`, then point evaluations filling the rank `m_tgt/m_src`.
pub fn build_cross_map(
    src: &VilladsenSystem,
    i_src: usize,
    tgt: &VilladsenSystem,
    i_tgt: usize,
    coords: &CrossCoords,
    fill: &FillPolicy,
) -> Result<MapDescriptor> {
    let from = StageRef::of(src, i_src)?;
    let to = StageRef::of(tgt, i_tgt)?;
    let (rank, r) = to.size.div_rem(&from.size);
    if !r.is_zero() {
        return Err(Error::Precondition(format!(
            "target size {} is not divisible by source size {}",
            to.size, from.size
        )));
    }
    let part = match coords {
        CrossCoords::CopySource => {
            if i_src >= i_tgt {
                return Err(Error::Invalid(format!("copying coordinates needs i' < i, got ({i_src}, {i_tgt})")));
            }
            let (_, d_src_end) = src.stage_dims(i_tgt)?;
            if d_src_end != to.dim {
                return Err(Error::Precondition(format!(
                    "source power {} at stage {i_tgt} differs from target power {}",
                    d_src_end, to.dim
                )));
            }
            let mut factors = Vec::new();
            for l in (i_src..i_tgt).rev() {
                let (_, d) = src.stage_dims(l)?;
                factors.push(CoordFactor::from_runs(d, &src.shape(l)?.s));
            }
            CoordPart { factors }
        }
        CrossCoords::Distinct { l } => {
            if l * &from.dim > to.dim {
                return Err(Error::Precondition(format!(
                    "{l} blocks of {} coordinates do not fit in {}",
                    from.dim, to.dim
                )));
            }
            let runs = if l.is_zero() { vec![] } else { vec![IndexRun { start: BigUint::one(), count: l.clone(), mult: 1 }] };
            CoordPart { factors: vec![CoordFactor { block: from.dim.clone(), runs }] }
        }
    };
    let used = part.total();
    if used > rank {
        return Err(Error::Precondition(format!(
            "not enough room: coordinate rank {used} exceeds m_i/m_i' = {rank}"
        )));
    }
    let count = &rank - &used;
    let evals = if count.is_zero() {
        EvalPart::Explicit(BTreeMap::new())
    } else {
        match fill {
            FillPolicy::CountOnly => EvalPart::Counted(count),
            FillPolicy::Explicit { points } => {
                if points.is_empty() {
                    return Err(Error::Invalid("explicit fill list is empty".into()));
                }
                let expected = from.dim.to_u64().unwrap_or(u64::MAX);
                if let Some(p) = points.iter().find(|p| p.arity() != expected) {
                    return Err(Error::Arity { expected, found: p.arity() });
                }
                cycle_fill(points, &count)
            }
            FillPolicy::CycleTarget => {
                let cands = fill_candidates(tgt, i_tgt, &from.dim);
                if cands.is_empty() {
                    EvalPart::Counted(count)
                } else {
                    cycle_fill(&cands, &count)
                }
            }
        }
    };
    Ok(MapDescriptor { from, to, coords: part, evals })
}

/// Offsets are distinct and block aligned when every block is a multiple of `dim`
/// and each factor's span fits inside one block of the factor outside it.
fn nested_aligned(part: &CoordPart, dim: &BigUint) -> bool {
    if part.factors.iter().any(|f| !(&f.block % dim).is_zero()) {
        return false;
    }
    part.factors.windows(2).all(|w| &w[1].block * w[1].max_index() <= w[0].block)
}

/// Split two maps with the same ends into a shared coordinate part and balanced
/// residuals.
pub fn rank_decompose(round_trip: &MapDescriptor, reference: &MapDescriptor, delta: &Rational) -> Result<RankDecomposition> {
    let same_ends = round_trip.from.size == reference.from.size
        && round_trip.from.dim == reference.from.dim
        && round_trip.to.size == reference.to.size
        && round_trip.to.dim == reference.to.dim;
    if !same_ends {
        return Err(Error::Precondition("maps do not share source and target stages".into()));
    }
    if round_trip.total() != reference.total() {
        return Err(Error::Precondition(format!(
            "total ranks differ: {} vs {}",
            round_trip.total(),
            reference.total()
        )));
    }
    let dim = &reference.from.dim;
    let (method, p, p_rank) = if round_trip.coords == reference.coords {
        ("structural", Some(reference.coords.clone()), reference.coords.total())
    } else if let (Ok(x), Ok(y)) = (round_trip.coords.expand(), reference.coords.expand()) {
        let shared: BigUint = x.iter().filter_map(|(off, m)| y.get(off).map(|n| m.min(n).clone())).sum();
        ("expanded", None, shared)
    } else if reference.coords.is_full_unit_cover(dim, &reference.to.dim) && nested_aligned(&round_trip.coords, dim) {
        ("aligned-cover", None, round_trip.coords.entry_count())
    } else if round_trip.coords.is_full_unit_cover(dim, &round_trip.to.dim) && nested_aligned(&reference.coords, dim) {
        ("aligned-cover", None, reference.coords.entry_count())
    } else {
        return Err(Error::TooLarge {
            what: "coordinate intersection",
            size: round_trip.coords.entry_count().to_string(),
        });
    };
    let c1 = round_trip.coords.total() - &p_rank;
    let c2 = reference.coords.total() - &p_rank;
    let e1 = round_trip.evals.total();
    let e2 = reference.evals.total();
    let t = e1.clone().min(e2.clone());
    let r1 = &c1 + &e1 - &t;
    let r2 = &c2 + &e2 - &t;
    if r1 != r2 {
        return Err(Error::Invalid(format!("rank bookkeeping does not balance: {r1} vs {r2}")));
    }
    let ratio_v = if t.is_zero() {
        if r1.is_zero() {
            Ext::zero()
        } else {
            Ext::Infinite
        }
    } else {
        Ext::Finite(ratio(&r1, &t))
    };
    let verdict = ratio_v < Ext::Finite(delta.clone());
    Ok(RankDecomposition {
        method: method.into(),
        p,
        p_rank,
        r_prime: r1,
        r_dprime: r2,
        theta_prime: e1,
        theta_dprime: e2,
        ratio: ratio_v,
        delta: delta.clone(),
        verdict,
    })
}

fn round_trip(
    x: &VilladsenSystem,
    y: &VilladsenSystem,
    first: &ScheduleEntry,
    second: &ScheduleEntry,
) -> Result<RoundTrip> {
    let mut acc = first.cross_map.clone();
    if second.i_prime > first.i {
        acc = compose(&acc, &composite_map(y, first.i, second.i_prime)?)?;
    }
    acc = compose(&acc, &second.cross_map)?;
    let reference = composite_map(x, first.i_prime, second.i)?;
    let decomposition = rank_decompose(&acc, &reference, &first.delta)?;
    let bound = qi(2) * (Rational::one() - ratio(&decomposition.p_rank, &reference.total()));
    Ok(RoundTrip {
        s: first.s,
        system: x.name.clone(),
        from_stage: first.i_prime,
        to_stage: second.i,
        trace_bound: ChainEntry::new("round-trip trace distance", bound, Relation::Lt, first.delta.clone()),
        decomposition,
    })
}

fn check_deltas(deltas: &[Rational]) -> Result<()> {
    if deltas.is_empty() {
        return Err(Error::Precondition("at least one delta is needed".into()));
    }
    if deltas.iter().any(|d| *d <= Rational::zero()) {
        return Err(Error::Precondition("deltas must be positive".into()));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition("deltas must be strictly decreasing".into()));
    }
    let sum: Rational = deltas.iter().sum();
    if sum >= Rational::one() {
        return Err(Error::Precondition(format!("deltas sum to {} >= 1", fmt_q(&sum))));
    }
    Ok(())
}

/// `lim m^A_i / m^B_i = 1`, certified when both systems follow the same family
/// past their prefixes.
fn close0(a: &VilladsenSystem, b: &VilladsenSystem) -> Result<String> {
    match (&a.family, &b.family) {
        (Some(fa), Some(fb)) if fa == fb => {
            let p = a.prefix.len().max(b.prefix.len()) + 1;
            let (ma, _) = a.stage_dims(p)?;
            let (mb, _) = b.stage_dims(p)?;
            if ma == mb {
                Ok(format!("close-0: m^A_i = m^B_i for i >= {p}"))
            } else {
                Err(Error::Precondition(format!(
                    "close-0 fails: m^A_i/m^B_i = {} for all i >= {p}",
                    fmt_q(&ratio(&ma, &mb))
                )))
            }
        }
        _ => Err(Error::Precondition("close-0 cannot be certified: the tails follow different families".into())),
    }
}

/// `γ_A/n₀^A = γ_B/n₀^B ≠ 0` from closed forms.
fn same_rc(a: &VilladsenSystem, b: &VilladsenSystem, depth: usize) -> Result<String> {
    let ga = gamma(a, depth)?;
    let gb = gamma(b, depth)?;
    let (Some(x), Some(y)) = (ga.exact_finite(), gb.exact_finite()) else {
        return Err(Error::Precondition("same-rc cannot be certified: no exact value of gamma".into()));
    };
    let x = x / qi(a.n0);
    let y = y / qi(b.n0);
    if x != y {
        return Err(Error::Precondition(format!("same-rc fails: {} vs {}", fmt_q(&x), fmt_q(&y))));
    }
    if x.is_zero() {
        return Err(Error::Precondition("same-rc fails: the common value is 0".into()));
    }
    Ok(format!("same-rc: gamma/n0 = {} for both", fmt_q(&x)))
}

/// Shrink the budget so that `δ₁ < k₁/(n₁ + k₁)` and `δ₁ < 1/3`.
fn delta_assumption(a: &VilladsenSystem, deltas: &mut [Rational], log: &mut Vec<String>) -> Result<()> {
    let sh = a.shape(1)?;
    let cap = ratio(&BigUint::from(sh.k), &BigUint::from(sh.nk())).min(q(1, 3));
    if deltas[0] >= cap {
        let f = &cap / (qi(2) * &deltas[0]);
        for d in deltas.iter_mut() {
            *d = &*d * &f;
        }
        log.push(format!("delta-assumption: deltas scaled by {} so that delta_1 < {}", fmt_q(&f), fmt_q(&cap)));
    }
    Ok(())
}

/// Check the hypotheses, pick the regime and the (possibly shrunk) budgets.
fn prepare(
    a: &VilladsenSystem,
    b: &VilladsenSystem,
    deltas: &[Rational],
    search_bound: usize,
) -> Result<(Variant, Vec<Rational>, Vec<String>, Vec<String>)> {
    check_deltas(deltas)?;
    let mut hyps = Vec::new();
    for sys in [a, b] {
        let (status, proof) = tail_condition_status(sys);
        if status != Status::Satisfied {
            return Err(Error::Precondition(format!("rdg-cond not established for {}: {proof}", sys.name)));
        }
        hyps.push(format!("rdg-cond ({}): {proof}", sys.name));
    }
    let ka = k0_of_system(a, search_bound)?;
    let kb = k0_of_system(b, search_bound)?;
    match ka.multiplicity.compare(&kb.multiplicity, search_bound) {
        Comparison::Equal => hyps.push(format!("K0-cond: both {}", ka.multiplicity)),
        Comparison::NotEqual { witness } => {
            return Err(Error::Precondition(format!(
                "K0 supernatural numbers differ: NotEqual witness prime {witness}"
            )))
        }
        Comparison::Undetermined { bound } => {
            return Err(Error::Precondition(format!("K0 equality undetermined up to bound {bound}")))
        }
    }
    let variant = detect_variant(a, b, search_bound)?;
    let mut deltas = deltas.to_vec();
    let mut log = Vec::new();
    match variant {
        Variant::SameShape => hyps.push(close0(a, b)?),
        Variant::General => {
            hyps.push(same_rc(a, b, search_bound)?);
            delta_assumption(a, &mut deltas, &mut log)?;
        }
    }
    Ok((variant, deltas, hyps, log))
}

fn coords_for(variant: Variant, src: &VilladsenSystem, i_src: usize, tgt: &VilladsenSystem, i_tgt: usize) -> Result<CrossCoords> {
    Ok(match variant {
        Variant::SameShape => CrossCoords::CopySource,
        Variant::General => {
            let (_, ds) = src.stage_dims(i_src)?;
            let (_, dt) = tgt.stage_dims(i_tgt)?;
            CrossCoords::Distinct { l: dt / ds }
        }
    })
}

/// Alternating schedule `A → B → A → …`, one entry per budget.
pub fn build_schedule(
    a: &VilladsenSystem,
    b: &VilladsenSystem,
    deltas: &[Rational],
    search_bound: usize,
) -> Result<IntertwiningSchedule> {
    let (variant, deltas, hypotheses, mut adjustments) = prepare(a, b, deltas, search_bound)?;
    let fill = FillPolicy::CycleTarget;
    let mut entries: Vec<ScheduleEntry> = Vec::new();
    let mut trips: Vec<RoundTrip> = Vec::new();
    let mut min_start = vec![1usize; deltas.len()];
    let mut s = 0;
    while s < deltas.len() {
        let (src, tgt, direction) = if s % 2 == 0 { (a, b, Direction::AToB) } else { (b, a, Direction::BToA) };
        let start = min_start[s].max(entries.get(s.wrapping_sub(1)).map_or(1, |e| e.i));
        let pair = search_pair(src, tgt, variant, &deltas[s], start, search_bound)?;
        let coords = coords_for(variant, src, pair.i_prime, tgt, pair.i)?;
        let cross_map = build_cross_map(src, pair.i_prime, tgt, pair.i, &coords, &fill)?;
        entries.truncate(s);
        trips.truncate(s.saturating_sub(1));
        entries.push(ScheduleEntry {
            s: s + 1,
            direction,
            i_prime: pair.i_prime,
            i: pair.i,
            delta: deltas[s].clone(),
            cross_map,
            checks: pair.checks,
        });
        if s > 0 {
            let (x, y) = if (s - 1) % 2 == 0 { (a, b) } else { (b, a) };
            let trip = round_trip(x, y, &entries[s - 1], &entries[s])?;
            if !(trip.trace_bound.verdict && trip.decomposition.verdict) {
                let prev = &entries[s - 1];
                adjustments.push(format!(
                    "round trip {} from stage {} to {} misses its budget ({} vs {}); retrying step {} from i' = {}",
                    prev.s,
                    prev.i_prime,
                    entries[s].i,
                    fmt_q(&trip.trace_bound.left),
                    fmt_q(&prev.delta),
                    prev.s,
                    prev.i_prime + 1
                ));
                min_start[s - 1] = prev.i_prime + 1;
                for m in min_start.iter_mut().skip(s) {
                    *m = 1;
                }
                s -= 1;
                continue;
            }
            trips.push(trip);
        }
        s += 1;
    }
    let notes = vec![
        "evaluation fill points follow the target system's own evaluation sets; they need not be dense, \
         density is restored after composing with the connecting maps"
            .to_string(),
    ];
    Ok(IntertwiningSchedule {
        a: a.name.clone(),
        b: b.name.clone(),
        variant,
        deltas,
        search_bound,
        fill,
        hypotheses,
        adjustments,
        notes,
        entries,
        round_trips: trips,
    })
}

/// Recompute every check, cross map and round trip of `schedule` from the systems
/// alone. Returns the list of discrepancies; empty means the schedule re-verifies.
pub fn reverify(a: &VilladsenSystem, b: &VilladsenSystem, schedule: &IntertwiningSchedule) -> Result<Vec<String>> {
    let mut issues = Vec::new();
    for e in &schedule.entries {
        let (src, tgt) = match e.direction {
            Direction::AToB => (a, b),
            Direction::BToA => (b, a),
        };
        let (m_src, d_src) = src.stage_dims(e.i_prime)?;
        let (m_tgt, d_tgt) = tgt.stage_dims(e.i)?;
        let mut n_window = BigUint::one();
        for l in e.i_prime..e.i {
            n_window *= src.shape(l)?.n();
        }
        let data = PairData {
            i_prime: e.i_prime,
            i: e.i,
            m_src: &m_src,
            d_src: &d_src,
            m_tgt: &m_tgt,
            d_tgt: &d_tgt,
            n_window: &n_window,
        };
        let fresh = pair_checks(src, tgt, schedule.variant, &e.delta, &data, false)?;
        if fresh != e.checks {
            issues.push(format!("step {}: recomputed checks differ from the transcript", e.s));
        }
        for c in &fresh {
            if !c.holds() {
                issues.push(format!("step {}: {} fails ({} vs {})", e.s, c.name, fmt_q(&c.left), fmt_q(&c.right)));
            }
        }
        let coords = coords_for(schedule.variant, src, e.i_prime, tgt, e.i)?;
        let map = build_cross_map(src, e.i_prime, tgt, e.i, &coords, &schedule.fill)?;
        if map != e.cross_map {
            issues.push(format!("step {}: cross map differs on rebuild", e.s));
        }
        if !map.size_law_holds() {
            issues.push(format!("step {}: cross map breaks the size law", e.s));
        }
    }
    for (w, trip) in schedule.entries.windows(2).zip(&schedule.round_trips) {
        let (x, y) = if w[0].direction == Direction::AToB { (a, b) } else { (b, a) };
        let fresh = round_trip(x, y, &w[0], &w[1])?;
        if &fresh != trip {
            issues.push(format!("round trip {}: recomputation differs", trip.s));
        }
        if !fresh.trace_bound.holds() || !fresh.decomposition.verdict {
            issues.push(format!("round trip {}: budget {} missed", trip.s, fmt_q(&trip.decomposition.delta)));
        }
    }
    if schedule.round_trips.len() + 1 != schedule.entries.len() && !schedule.entries.is_empty() {
        issues.push("round trip count does not match the entries".into());
    }
    Ok(issues)
}
