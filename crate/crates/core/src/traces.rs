//! Tracial states at the level of measures on the stages: the pushforwards `θ_i`,
//! the trace-distance estimate, discretization of measures, extreme traces and
//! approximation of arbitrary traces by extreme ones.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::binomial;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{fmt_q, qi, qu, Rational};
use crate::families::{Family, Layout, RatioKind};
use crate::invariants::{ChainEntry, Relation};
use crate::map::{composite_map, EvalPart, MapDescriptor};
use crate::space::Point;
use crate::system::VilladsenSystem;

/// Largest point arity `extreme_trace` and `approximate_by_extreme` will materialize.
pub const ARITY_LIMIT: u64 = 1 << 16;
/// Largest number of splits the exhaustive fallback of [`discretize`] enumerates.
const SPLIT_LIMIT: u64 = 1 << 16;

/// Finitely supported probability measure on `X^d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscreteMeasure {
    atoms: BTreeMap<Point, Rational>,
}

impl DiscreteMeasure {
    /// Repeated support points are merged.
    pub fn new(support: Vec<Point>, weights: Vec<Rational>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::CountMismatch { left: support.len() as u64, right: weights.len() as u64 });
        }
        if support.is_empty() {
            return Err(Error::Invalid("empty support".into()));
        }
        let arity = support[0].arity();
        let width = support[0].width();
        let mut atoms: BTreeMap<Point, Rational> = BTreeMap::new();
        for (p, w) in support.into_iter().zip(weights) {
            if p.arity() != arity || p.width() != width {
                return Err(Error::Arity { expected: arity, found: p.arity() });
            }
            if !w.is_positive() {
                return Err(Error::Invalid(format!("weight {} is not positive", fmt_q(&w))));
            }
            *atoms.entry(p).or_insert_with(Rational::zero) += w;
        }
        let total: Rational = atoms.values().sum();
        if !total.is_one() {
            return Err(Error::Invalid(format!("weights sum to {}", fmt_q(&total))));
        }
        Ok(DiscreteMeasure { atoms })
    }

    pub fn dirac(p: Point) -> Self {
        DiscreteMeasure { atoms: BTreeMap::from([(p, Rational::one())]) }
    }

    pub fn atoms(&self) -> &BTreeMap<Point, Rational> {
        &self.atoms
    }

    pub fn arity(&self) -> u64 {
        self.atoms.keys().next().map(Point::arity).unwrap_or(0)
    }

    pub fn mass(&self) -> Rational {
        self.atoms.values().sum()
    }

    pub fn is_dirac(&self) -> bool {
        self.atoms.len() == 1
    }

    pub fn integrate(&self, f: &SampledFunction) -> Result<Rational> {
        let mut acc = Rational::zero();
        for (p, w) in &self.atoms {
            acc += w * f.eval(p)?;
        }
        Ok(acc)
    }
}

impl Serialize for DiscreteMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Atom<'a> {
            point: &'a Point,
            weight: String,
        }
        let atoms: Vec<Atom> = self.atoms.iter().map(|(point, w)| Atom { point, weight: fmt_q(w) }).collect();
        atoms.serialize(s)
    }
}

/// A test function known through a table of values and a declared Lipschitz modulus.
/// Points missing from the table fall back to `formula` when one is given.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampledFunction {
    pub table: BTreeMap<Point, Rational>,
    pub formula: Option<Affine>,
    pub lipschitz: Rational,
    pub sup_norm: Rational,
}

/// `constant + Σ coeffs[t] · raw[t]` over the raw rationals of a point; missing
/// coefficients are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Affine {
    pub coeffs: Vec<Rational>,
    pub constant: Rational,
}

impl Affine {
    pub fn eval(&self, p: &Point) -> Rational {
        let mut v = self.constant.clone();
        for (c, x) in self.coeffs.iter().zip(p.raw()) {
            v += c * x;
        }
        v
    }
}

impl SampledFunction {
    /// Tabulate `f` on `points`; the sup norm is taken from the table.
    pub fn tabulate<'a>(
        points: impl IntoIterator<Item = &'a Point>,
        lipschitz: Rational,
        f: impl Fn(&Point) -> Rational,
    ) -> Self {
        let table: BTreeMap<Point, Rational> = points.into_iter().map(|p| (p.clone(), f(p))).collect();
        let sup_norm = table.values().map(|v| v.abs()).max().unwrap_or_else(Rational::zero);
        SampledFunction { table, formula: None, lipschitz, sup_norm }
    }

    /// Affine function of the raw coordinates of points in a cube; modulus and sup
    /// norm are the bounds valid on `[0,1]^…` with the sup metric.
    pub fn affine(coeffs: Vec<Rational>, constant: Rational) -> Self {
        let lipschitz: Rational = coeffs.iter().map(|c| c.abs()).sum();
        let sup_norm = constant.abs() + &lipschitz;
        SampledFunction { table: BTreeMap::new(), formula: Some(Affine { coeffs, constant }), lipschitz, sup_norm }
    }

    /// The `t`-th raw coordinate.
    pub fn coordinate(t: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); t + 1];
        coeffs[t] = Rational::one();
        Self::affine(coeffs, Rational::zero())
    }

    pub fn eval(&self, p: &Point) -> Result<Rational> {
        if let Some(v) = self.table.get(p) {
            return Ok(v.clone());
        }
        match &self.formula {
            Some(f) => Ok(f.eval(p)),
            None => Err(Error::MissingSample(p.to_string())),
        }
    }

    /// Largest minus smallest value on `points`.
    fn oscillation<'a>(&self, points: impl IntoIterator<Item = &'a Point>) -> Result<Rational> {
        let mut lo: Option<Rational> = None;
        let mut hi: Option<Rational> = None;
        for p in points {
            let v = self.eval(p)?;
            lo = Some(lo.map_or(v.clone(), |l| l.min(v.clone())));
            hi = Some(hi.map_or(v.clone(), |h| h.max(v)));
        }
        Ok(match (lo, hi) {
            (Some(l), Some(h)) => h - l,
            _ => Rational::zero(),
        })
    }
}

/// `θ_i`: measure on `X^{d_{i+1}}` to measure on `X^{d_i}`.
pub fn theta_pushforward(sys: &VilladsenSystem, i: usize, mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    let shape = sys.shape(i)?;
    let (_, d_i) = sys.stage_dims(i)?;
    let (_, d_next) = sys.stage_dims(i + 1)?;
    if BigUint::from(mu.arity()) != d_next {
        return Err(Error::Arity { expected: d_next.to_u64().unwrap_or(u64::MAX), found: mu.arity() });
    }
    let len = d_i.to_u64().expect("below the arity of mu");
    let n = qi(shape.n());
    let mut atoms: BTreeMap<Point, Rational> = BTreeMap::new();
    for (p, w) in &mu.atoms {
        for (t, s) in shape.s.indexed() {
            let block = p.block((t - 1) * len, len)?;
            *atoms.entry(block).or_insert_with(Rational::zero) += w * qi(s) / &n;
        }
    }
    Ok(DiscreteMeasure { atoms })
}

/// Value at `x ∈ X^{d_j}` of `φ^*(h)` for `φ: i → j`, normalized by the total multiplicity.
pub fn trace_functional(phi: &MapDescriptor, h: &SampledFunction, x: &Point) -> Result<Rational> {
    let expected = phi.to.dim.to_u64().unwrap_or(u64::MAX);
    if x.arity() != expected {
        return Err(Error::Arity { expected, found: x.arity() });
    }
    let len = phi.from.dim.to_u64().expect("source arity below target arity");
    let mut acc = Rational::zero();
    for (off, mult) in phi.coords.expand()? {
        let off = off.to_u64().expect("offset below arity");
        acc += h.eval(&x.block(off, len)?)? * qu(&mult);
    }
    match &phi.evals {
        EvalPart::Explicit(m) => {
            for (p, mult) in m {
                acc += h.eval(p)? * qu(mult);
            }
        }
        EvalPart::Counted(c) if c.is_zero() => {}
        EvalPart::Counted(_) => return Err(Error::MissingSample("evaluation points were not kept".into())),
    }
    Ok(acc / qu(&phi.total()))
}

/// `2(1 − ∏_{l=i}^{i+j−1} n_l/(n_l+k_l))`.
pub fn trace_distance_bound(sys: &VilladsenSystem, i: usize, j: usize) -> Result<Rational> {
    if j == 0 {
        return Ok(Rational::zero());
    }
    Ok(qi(2) * (Rational::one() - sys.partial(RatioKind::NOverNk, i, i + j - 1)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMethod {
    LargestRemainder,
    /// Largest remainder missed the tolerance; an exhaustive search over splits found one.
    Exhaustive,
}

#[derive(Clone, Debug, Serialize)]
pub struct Discretization {
    pub points: Vec<Point>,
    /// Copies of each support point, in support order.
    pub multiplicities: Vec<u64>,
    /// `|μ(f) − (1/n)Σ f(x_t)|` for each test function.
    #[serde(with = "crate::exact::serde_qvec")]
    pub discrepancies: Vec<Rational>,
    /// Every `n` at or above this bound is guaranteed to succeed.
    #[serde(serialize_with = "crate::exact::serde_n::serialize")]
    pub guaranteed_from: BigUint,
    pub method: SplitMethod,
}

/// Smallest `N` with `n ≥ N ⇒` largest remainder meets `eps`: each `|n w_a − m_a| < 1`, and
/// `Σ (w_a − m_a/n) = 0` lets each function be centred, so the error is below
/// `osc(f) · |support| / (2n)`.
pub fn discretization_threshold(mu: &DiscreteMeasure, functions: &[SampledFunction], eps: &Rational) -> Result<BigUint> {
    let mut osc = Rational::zero();
    for f in functions {
        osc = osc.max(f.oscillation(mu.atoms.keys())?);
    }
    let support = qi(mu.atoms.len() as u64);
    let bound = osc * support / (qi(2) * eps);
    Ok(crate::exact::floor_u(&bound) + 1u32)
}

/// Hamilton apportionment of `n` copies along the weights.
pub fn largest_remainder(weights: &[Rational], n: u64) -> Vec<u64> {
    let nq = qi(n);
    let mut out: Vec<u64> = Vec::with_capacity(weights.len());
    let mut rem: Vec<(Rational, usize)> = Vec::with_capacity(weights.len());
    for (a, w) in weights.iter().enumerate() {
        let x = w * &nq;
        let fl = x.floor();
        out.push(fl.to_integer().to_u64().expect("at most n"));
        rem.push((x - fl, a));
    }
    let assigned: u64 = out.iter().sum();
    // ties go to the earlier support point
    rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, a) in rem.iter().take((n - assigned) as usize) {
        out[a] += 1;
    }
    out
}

fn discrepancies(
    mu: &DiscreteMeasure,
    functions: &[SampledFunction],
    mult: &[u64],
    n: u64,
) -> Result<Vec<Rational>> {
    let nq = qi(n);
    functions
        .iter()
        .map(|f| {
            let mut acc = Rational::zero();
            for ((p, w), m) in mu.atoms.iter().zip(mult) {
                acc += (w - qi(*m) / &nq) * f.eval(p)?;
            }
            Ok(acc.abs())
        })
        .collect()
}

/// `n` points whose empirical average is within `eps` of `μ` on every test function.
pub fn discretize(mu: &DiscreteMeasure, functions: &[SampledFunction], n: u64, eps: &Rational) -> Result<Discretization> {
    if n == 0 {
        return Err(Error::Invalid("n must be positive".into()));
    }
    if !eps.is_positive() {
        return Err(Error::Invalid("eps must be positive".into()));
    }
    let guaranteed_from = discretization_threshold(mu, functions, eps)?;
    let weights: Vec<Rational> = mu.atoms.values().cloned().collect();
    let mut mult = largest_remainder(&weights, n);
    let mut disc = discrepancies(mu, functions, &mult, n)?;
    let mut method = SplitMethod::LargestRemainder;
    if disc.iter().any(|d| d >= eps) {
        let splits = binomial(BigUint::from(n) + weights.len() - 1u32, BigUint::from(weights.len() - 1));
        let found = if splits <= BigUint::from(SPLIT_LIMIT) {
            best_split(mu, functions, n, weights.len())?
        } else {
            None
        };
        match found {
            Some((m, d)) if d.iter().all(|x| x < eps) => {
                mult = m;
                disc = d;
                method = SplitMethod::Exhaustive;
            }
            _ => {
                let worst = disc.iter().max().cloned().unwrap_or_default();
                return Err(Error::Infeasible(format!(
                    "n = {n} reaches discrepancy {} against eps {} (n >= {guaranteed_from} suffices)",
                    fmt_q(&worst),
                    fmt_q(eps)
                )));
            }
        }
    }
    let points = mu
        .atoms
        .keys()
        .zip(&mult)
        .flat_map(|(p, &m)| std::iter::repeat(p.clone()).take(m as usize))
        .collect();
    Ok(Discretization { points, multiplicities: mult, discrepancies: disc, guaranteed_from, method })
}

/// Split of `n` minimizing the worst discrepancy.
fn best_split(
    mu: &DiscreteMeasure,
    functions: &[SampledFunction],
    n: u64,
    parts: usize,
) -> Result<Option<(Vec<u64>, Vec<Rational>)>> {
    let mut best: Option<(Vec<u64>, Vec<Rational>, Rational)> = None;
    for m in compositions(n, parts) {
        let d = discrepancies(mu, functions, &m, n)?;
        let worst = d.iter().max().cloned().unwrap_or_default();
        if best.as_ref().map_or(true, |b| worst < b.2) {
            best = Some((m, d, worst));
        }
    }
    Ok(best.map(|(m, d, _)| (m, d)))
}

/// All ways to write `n` as an ordered sum of `parts` nonnegative integers.
pub fn compositions(n: u64, parts: usize) -> Vec<Vec<u64>> {
    if parts == 0 {
        return if n == 0 { vec![vec![]] } else { vec![] };
    }
    if parts == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// `τ_x` on stages `1..=horizon`: pushforwards of `δ_x` below stage `i`, diagonal
/// Dirac measures above it.
pub fn extreme_trace(sys: &VilladsenSystem, i: usize, x: &Point, horizon: usize) -> Result<Vec<DiscreteMeasure>> {
    let (_, d_i) = sys.stage_dims(i)?;
    if BigUint::from(x.arity()) != d_i {
        return Err(Error::Arity { expected: d_i.to_u64().unwrap_or(u64::MAX), found: x.arity() });
    }
    let mut out = vec![DiscreteMeasure::dirac(x.clone())];
    let mut l = i;
    while l > 1 {
        l -= 1;
        let below = theta_pushforward(sys, l, out.last().expect("nonempty"))?;
        out.push(below);
    }
    out.reverse();
    for l in i + 1..=horizon {
        let (_, d_l) = sys.stage_dims(l)?;
        let times = (&d_l / &d_i).to_u64().filter(|t| t * x.arity() <= ARITY_LIMIT).ok_or(Error::TooLarge {
            what: "diagonal point",
            size: d_l.to_string(),
        })?;
        out.push(DiscreteMeasure::dirac(x.repeat(times)));
    }
    out.truncate(horizon.max(1));
    Ok(out)
}

/// `θ_l(μ_{l+1}) = μ_l` for every consecutive pair.
pub fn theta_compatible(sys: &VilladsenSystem, seq: &[DiscreteMeasure]) -> Result<bool> {
    for (l, pair) in seq.windows(2).enumerate() {
        if theta_pushforward(sys, l + 1, &pair[1])? != pair[0] {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtremeApproximation {
    /// Stage whose window starts the concatenation.
    pub base_stage: usize,
    /// Stage `x_μ` lives at.
    pub stage: usize,
    /// `x_1, …, x_C` as points of the input measure's stage; each is repeated
    /// diagonally `block_repeat` times inside `x_μ`.
    pub blocks: Vec<Point>,
    pub block_repeat: u64,
    pub x_mu: Option<Point>,
    pub chain: Vec<ChainEntry>,
}

impl ExtremeApproximation {
    pub fn verified(&self) -> bool {
        self.chain.iter().all(|e| e.verdict && e.holds())
    }
}

/// Which asymptotic threshold failed in [`approximate_by_extreme`].
fn thresholds(sys: &VilladsenSystem, i: usize, third: &Rational) -> Result<(bool, bool)> {
    let cn = sys.tail(RatioKind::COverN, i).ok_or(Error::NotApplicable("finite system".into()))?;
    let ones = sys.tail(RatioKind::OnesOverN, i).ok_or(Error::NotApplicable("finite system".into()))?;
    Ok((Rational::one() - cn.lower < *third, ones.lower > Rational::one() - third))
}

/// Extreme trace within `eps` of the trace that is `μ` at stage `i0` and diagonal above it.
pub fn approximate_by_extreme(
    sys: &VilladsenSystem,
    i0: usize,
    mu: &DiscreteMeasure,
    functions: &[SampledFunction],
    eps: &Rational,
    search_bound: usize,
) -> Result<ExtremeApproximation> {
    let (_, d0) = sys.stage_dims(i0)?;
    if BigUint::from(mu.arity()) != d0 {
        return Err(Error::Arity { expected: d0.to_u64().unwrap_or(u64::MAX), found: mu.arity() });
    }
    let sup = functions.iter().map(|f| f.sup_norm.clone()).max().unwrap_or_else(Rational::zero).max(Rational::one());
    let third = eps / qi(3);
    // thresholds scaled by the sup norm so the ε/3 steps hold for every function
    let scaled = &third / &sup;
    let mut base = None;
    let mut failed = (true, true);
    for i in i0..=search_bound.max(i0) {
        let (cn_ok, ones_ok) = thresholds(sys, i, &scaled)?;
        if cn_ok && ones_ok {
            base = Some(i);
            break;
        }
        failed = (cn_ok, ones_ok);
    }
    let Some(base) = base else {
        let which = match failed {
            (false, false) => "c/n product and multiplicity-one fraction",
            (false, true) => "c/n product",
            _ => "multiplicity-one fraction",
        };
        return Err(Error::Infeasible(format!("{which} threshold unreachable by stage {search_bound}")));
    };
    let (_, d_base) = sys.stage_dims(base)?;
    let block_repeat = (&d_base / &d0).to_u64().ok_or(Error::TooLarge { what: "diagonal point", size: d_base.to_string() })?;
    let need = discretization_threshold(mu, functions, &third)?;
    // grow the window until c_base ⋯ c_{base+j0} reaches the discretization bound
    let mut end = base;
    let mut count = BigUint::from(sys.shape(base)?.c());
    while count < need {
        end += 1;
        count *= sys.shape(end)?.c();
        if count > BigUint::from(ARITY_LIMIT) {
            return Err(Error::TooLarge { what: "discretization window", size: count.to_string() });
        }
    }
    let c = count.to_u64().expect("bounded above");
    let disc = discretize(mu, functions, c, &third)?;
    let phi = composite_map(sys, base, end + 1)?;
    let mults: Vec<BigUint> = phi.coord_entries()?.into_iter().map(|(_, m)| m).collect();
    let n_total = qu(&phi.coords.total());
    let cq = qi(c);
    let mut chain = vec![
        ChainEntry::new("c/n closeness", Rational::one() - &cq / &n_total, Relation::Lt, scaled.clone()),
    ];
    for (f_idx, f) in functions.iter().enumerate() {
        let mu_f = mu.integrate(f)?;
        let vals: Vec<Rational> = disc.points.iter().map(|p| f.eval(p)).collect::<Result<_>>()?;
        let plain: Rational = vals.iter().sum();
        let weighted: Rational = vals.iter().zip(&mults).map(|(v, m)| v * qu(m)).sum();
        let avg_c = &plain / &cq;
        let avg_n = &plain / &n_total;
        let tau_f = &weighted / &n_total;
        let t1 = (&mu_f - &avg_c).abs();
        let t2 = (&avg_c - &avg_n).abs();
        let t3 = (&avg_n - &tau_f).abs();
        let total = (&mu_f - &tau_f).abs();
        let tag = |s: &str| format!("f{f_idx}: {s}");
        chain.push(ChainEntry::new(&tag("discretization"), t1.clone(), Relation::Lt, third.clone()));
        chain.push(ChainEntry::new(&tag("c versus n"), t2.clone(), Relation::Le, third.clone()));
        chain.push(ChainEntry::new(&tag("multiplicity one"), t3.clone(), Relation::Le, third.clone()));
        chain.push(ChainEntry::new(&tag("triangle"), total.clone(), Relation::Le, t1 + t2 + t3));
        chain.push(ChainEntry::new(&tag("distance"), total, Relation::Lt, eps.clone()));
    }
    let arity = c * block_repeat * mu.arity();
    let x_mu = if arity <= ARITY_LIMIT {
        let parts: Vec<Point> = disc.points.iter().map(|p| p.repeat(block_repeat)).collect();
        Some(Point::concat(&parts)?)
    } else {
        None
    };
    Ok(ExtremeApproximation { base_stage: base, stage: end + 1, blocks: disc.points, block_repeat, x_mu, chain })
}

/// Shape of the limit trace simplex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SimplexTag {
    Singleton,
    BauerOverSeed,
    Poulsen,
    Unknown,
}

pub fn simplex_tag(sys: &VilladsenSystem) -> SimplexTag {
    if sys.seed.is_singleton() {
        return SimplexTag::Singleton;
    }
    let Some(family) = &sys.family else {
        return SimplexTag::Unknown;
    };
    let family_single = match family {
        Family::Squares { layout, .. } | Family::OddSquares { layout, .. } => *layout == Layout::Single,
        Family::Constant { shape } => shape.c() == 1,
        Family::Halving { .. } => false,
    };
    if family_single && sys.prefix.iter().all(|st| st.shape.c() == 1) {
        return SimplexTag::BauerOverSeed;
    }
    match family.tail(RatioKind::COverN, sys.prefix.len() + 1).exact {
        Some(v) if v.is_one() => SimplexTag::Poulsen,
        _ => SimplexTag::Unknown,
    }
}
