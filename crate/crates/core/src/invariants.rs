//! γ, mean dimension, radius of comparison, the asymptotic ratios and the
//! lower-bound witness for the radius of comparison.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{floor_u, fmt_q, q, qi, qu, ratio, Ext, Rational};
use crate::families::{Family, Layout, RatioKind};
use crate::map::composite_map;
use crate::space::SeedSpace;
use crate::system::{EvalRule, VilladsenSystem};

/// A real number known only through exact rational bounds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CertifiedValue {
    pub lower: Ext,
    pub upper: Ext,
    pub exact: Option<Ext>,
    /// Last stage folded into the partial product.
    pub truncation_stage: usize,
    pub note: Option<String>,
}

impl CertifiedValue {
    pub fn exactly(v: Ext, truncation_stage: usize) -> Self {
        CertifiedValue { lower: v.clone(), upper: v.clone(), exact: Some(v), truncation_stage, note: None }
    }

    fn map(&self, f: impl Fn(&Ext) -> Ext) -> Self {
        CertifiedValue {
            lower: f(&self.lower),
            upper: f(&self.upper),
            exact: self.exact.as_ref().map(&f),
            truncation_stage: self.truncation_stage,
            note: self.note.clone(),
        }
    }

    pub fn contains(&self, v: &Ext) -> bool {
        &self.lower <= v && v <= &self.upper
    }

    pub fn exact_finite(&self) -> Option<&Rational> {
        self.exact.as_ref().and_then(Ext::finite)
    }
}

/// `∏_{i=1}^{depth} c_i/(n_i+k_i)`, stopping early where the system has no more stages.
fn partial_upto(sys: &VilladsenSystem, kind: RatioKind, depth: usize) -> Result<(Rational, usize)> {
    let mut p = Rational::one();
    let mut last = 0;
    for i in 1..=depth {
        match sys.shape(i) {
            Ok(sh) => p *= kind.of(&sh),
            Err(Error::StageBeyondGenerator { .. }) => break,
            Err(e) => return Err(e),
        }
        last = i;
    }
    Ok((p, last))
}

/// `(m_l, d_l)` for `l = 1..=upto`, cut short where stages stop being generated.
fn dims_available(sys: &VilladsenSystem, upto: usize) -> Result<Vec<(BigUint, BigUint)>> {
    let mut out = vec![(BigUint::from(sys.n0), BigUint::one())];
    for l in 1..upto {
        let sh = match sys.shape(l) {
            Ok(sh) => sh,
            Err(Error::StageBeyondGenerator { .. }) => break,
            Err(e) => return Err(e),
        };
        let (m, d) = &out[l - 1];
        out.push((m * sh.nk(), d * sh.c()));
    }
    Ok(out)
}

/// `γ = lim ∏ c_i/(n_i+k_i)`. The upper end is always the partial product to `depth`.
pub fn gamma(sys: &VilladsenSystem, depth: usize) -> Result<CertifiedValue> {
    let (upper, last) = partial_upto(sys, RatioKind::COverNk, depth)?;
    let Some(whole) = sys.tail(RatioKind::COverNk, 1) else {
        return Ok(CertifiedValue {
            lower: Ext::zero(),
            upper: upper.into(),
            exact: None,
            truncation_stage: last,
            note: Some("bracket loose".into()),
        });
    };
    let mut lower = whole.lower.clone();
    if let Some(rest) = sys.tail(RatioKind::COverNk, last + 1) {
        lower = lower.max(&upper * &rest.lower);
    }
    Ok(CertifiedValue {
        lower: lower.into(),
        upper: upper.into(),
        exact: whole.exact.map(Ext::from),
        truncation_stage: last,
        note: None,
    })
}

/// `dim(X)/n₀ · γ` with `∞ · 0 = 0`.
pub fn mdim_upper(sys: &VilladsenSystem, depth: usize) -> Result<CertifiedValue> {
    let g = gamma(sys, depth)?;
    let factor = sys.seed.dim().scale(&q(1, sys.n0 as i64));
    Ok(g.map(|x| factor.mul(x)))
}

/// Half the mean dimension bound; exact for solid seeds.
pub fn radius_of_comparison(sys: &VilladsenSystem, depth: usize) -> Result<CertifiedValue> {
    let m = mdim_upper(sys, depth)?;
    let mut rc = m.map(|x| x.scale(&q(1, 2)));
    if !sys.seed.solid() {
        rc.lower = Ext::zero();
        rc.exact = None;
        rc.note = Some("upper bound (non-solid seed)".into());
    }
    Ok(rc)
}

/// A system whose radius of comparison is exactly `r`.
pub fn rc_realization(r: &Ext) -> Result<VilladsenSystem> {
    let squares = Family::Squares { from: 2, layout: Layout::Spread };
    let evals = EvalRule::default();
    match r {
        Ext::Infinite => Ok(VilladsenSystem::from_family("rc-inf", SeedSpace::HilbertCube, 1, squares, evals)),
        Ext::Finite(r) if r < &Rational::zero() => {
            Err(Error::Invalid(format!("radius {} is negative", fmt_q(r))))
        }
        Ext::Finite(r) if r.is_zero() => Ok(VilladsenSystem::from_family("rc-0", SeedSpace::Cantor, 1, squares, evals)),
        Ext::Finite(r) => {
            let two_r = qi(2) * r;
            // smallest even integer strictly above 2r
            let mut d = floor_u(&two_r) + 1u32;
            if (&d % 2u32) == BigUint::one() {
                d += 1u32;
            }
            let m: u32 = (&d)
                .try_into()
                .map_err(|_| Error::TooLarge { what: "seed dimension", size: d.to_string() })?;
            let target = two_r / qu(&d);
            Ok(VilladsenSystem::from_family(
                &format!("rc-{}", fmt_q(r)),
                SeedSpace::Cube { m },
                1,
                Family::Halving { target },
                evals,
            ))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AsymptoticChecks {
    /// `∏_{l=i}^{i+j} c_l/n_l`.
    #[serde(with = "crate::exact::serde_q")]
    pub cn_product: Rational,
    /// Share of multiplicity-one coordinate entries in `φ_{i,i+j+1}`.
    #[serde(with = "crate::exact::serde_q")]
    pub mult_one_fraction: Rational,
}

pub fn asymptotic_checks(sys: &VilladsenSystem, i: usize, j: usize) -> Result<AsymptoticChecks> {
    let cn_product = sys.partial(RatioKind::COverN, i, i + j)?;
    let map = composite_map(sys, i, i + j + 1)?;
    let mult_one_fraction = ratio(&map.coords.ones(), &map.coords.total());
    Ok(AsymptoticChecks { cn_product, mult_one_fraction })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
}

/// One inequality `left relation right` of the witness chain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChainEntry {
    pub name: String,
    #[serde(with = "crate::exact::serde_q")]
    pub left: Rational,
    pub relation: Relation,
    #[serde(with = "crate::exact::serde_q")]
    pub right: Rational,
    pub verdict: bool,
}

impl ChainEntry {
    pub fn new(name: &str, left: Rational, relation: Relation, right: Rational) -> Self {
        let verdict = match relation {
            Relation::Lt => left < right,
            Relation::Le => left <= right,
            Relation::Eq => left == right,
        };
        ChainEntry { name: name.into(), left, relation, right, verdict }
    }

    /// Re-evaluate the relation from the stored numbers.
    pub fn holds(&self) -> bool {
        match self.relation {
            Relation::Lt => self.left < self.right,
            Relation::Le => self.left <= self.right,
            Relation::Eq => self.left == self.right,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RcWitness {
    #[serde(with = "crate::exact::serde_q")]
    pub epsilon: Rational,
    /// Stage carrying the sphere.
    pub stage: usize,
    /// Stage where the rank obstruction is evaluated.
    pub rank_stage: usize,
    #[serde(serialize_with = "crate::exact::serde_n::serialize")]
    pub sphere_dim: BigUint,
    /// `c₁⋯c_{i−1}·dim(X)`.
    #[serde(serialize_with = "crate::exact::serde_n::serialize")]
    pub ball_dim: BigUint,
    /// Rank of the trivial projection compared against `p` at the rank stage.
    #[serde(serialize_with = "crate::exact::serde_n::serialize")]
    pub trivial_rank: BigUint,
    #[serde(with = "crate::exact::serde_q")]
    pub trivial_subbundle_rank_bound: Rational,
    pub inequality_chain: Vec<ChainEntry>,
    /// The chain proves `rc ≥ conclusion`.
    #[serde(with = "crate::exact::serde_q")]
    pub conclusion: Rational,
}

impl RcWitness {
    pub fn verified(&self) -> bool {
        self.inequality_chain.iter().all(|e| e.verdict && e.holds())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum WitnessOutcome {
    Found(Box<RcWitness>),
    Inapplicable { reason: String },
    NoAdmissibleStage { searched_to: usize },
}

/// Exact evaluation of the sphere-and-rank argument bounding rc from below.
pub fn rc_lower_witness(sys: &VilladsenSystem, epsilon: &Rational, depth_bound: usize) -> Result<WitnessOutcome> {
    if epsilon <= &Rational::zero() {
        return Err(Error::Invalid("epsilon must be positive".into()));
    }
    if !sys.seed.solid() {
        return Ok(WitnessOutcome::Inapplicable { reason: "seed is not solid".into() });
    }
    let Some(dim) = sys.seed.dim().finite().cloned() else {
        return Ok(WitnessOutcome::Inapplicable {
            reason: "infinite-dimensional seed: spheres of every dimension apply".into(),
        });
    };
    if dim.is_zero() {
        return Ok(WitnessOutcome::Inapplicable { reason: "zero-dimensional seed".into() });
    }
    let g = gamma(sys, depth_bound)?;
    let gamma_lower = g.lower.finite().cloned().unwrap_or_else(Rational::zero);
    if gamma_lower.is_zero() {
        return Ok(WitnessOutcome::Inapplicable { reason: "gamma is not bounded away from 0".into() });
    }
    let dim_int = dim.to_integer().to_biguint().ok_or_else(|| Error::Invalid("negative dimension".into()))?;
    let n0 = qi(sys.n0);
    let target = &gamma_lower / qi(2) * &dim / &n0;
    let dims = dims_available(sys, depth_bound + 1)?;
    // the rank stage is i + 1, so stage i needs one more set of dimensions
    for i in 1..dims.len() {
        let (m_i, d_i) = &dims[i - 1];
        let ball = d_i * &dim_int;
        if ball < BigUint::from(3u32) {
            continue;
        }
        let g_i = ratio(d_i, m_i) * &n0;
        let w1_left = (qu(&ball) - qi(2)) / (qi(2) * qu(m_i));
        let w2_left = &dim / (qi(2) * &n0) * (&g_i - &gamma_lower);
        if !(w1_left > &target - epsilon && &w2_left < epsilon) {
            continue;
        }
        let j = i + 1;
        let (m_j, d_j) = &dims[j - 1];
        let mut d = &ball - 1u32;
        if (&d % 2u32) == BigUint::one() {
            d -= 1u32;
        }
        let p = qu(m_j) / qu(m_i);
        let c = qu(d_j) / qu(d_i);
        let dq = qu(&d);
        let rank_bound = &dq / qi(2) * (&p - &c);
        let eps_mj = epsilon * qu(m_j);
        let r = floor_u(&(qi(2) * &eps_mj)) + 1u32;
        let rq = qu(&r);
        let dtau_p = &dq / (qi(2) * qu(m_i));
        let dtau_r = &rq / qu(m_j);
        let conclusion = &target - qi(4) * epsilon;
        let pre_rank = &dim / qi(2) * (qu(d_i) * &p - qu(d_j));
        let chain = vec![
            ChainEntry::new("sphere dimension lower end", qu(&ball) - qi(2), Relation::Le, dq.clone()),
            ChainEntry::new("sphere dimension upper end", dq.clone(), Relation::Le, qu(&ball) - qi(1)),
            ChainEntry::new("d_tau(p) lower bound", w1_left.clone(), Relation::Le, dtau_p.clone()),
            ChainEntry::new("stage choice: ball term", &target - epsilon, Relation::Lt, w1_left),
            ChainEntry::new("stage choice: gamma gap", w2_left, Relation::Lt, epsilon.clone()),
            ChainEntry::new("trivial sub-bundle rank via sphere", rank_bound.clone(), Relation::Le, pre_rank.clone()),
            ChainEntry::new("trivial sub-bundle rank bound", pre_rank, Relation::Le, eps_mj.clone()),
            ChainEntry::new("d_tau(r) above 2 epsilon", qi(2) * epsilon, Relation::Lt, dtau_r.clone()),
            ChainEntry::new("d_tau(r) below 3 epsilon", dtau_r.clone(), Relation::Lt, qi(3) * epsilon),
            ChainEntry::new("r fits beside the bound", &dtau_r + &conclusion, Relation::Lt, dtau_p),
            ChainEntry::new("rank of r exceeds trivial sub-bundles", rank_bound.clone(), Relation::Lt, rq),
        ];
        return Ok(WitnessOutcome::Found(Box::new(RcWitness {
            epsilon: epsilon.clone(),
            stage: i,
            rank_stage: j,
            sphere_dim: d,
            ball_dim: ball,
            trivial_rank: r,
            trivial_subbundle_rank_bound: rank_bound,
            inequality_chain: chain,
            conclusion,
        })));
    }
    Ok(WitnessOutcome::NoAdmissibleStage { searched_to: dims.len().saturating_sub(1) })
}
