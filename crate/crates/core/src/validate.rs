//! Structural, density and tail-product checks on a system.

use std::collections::BTreeSet;

use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{fmt_q, qi, Rational};
use crate::families::{Family, RatioKind};
use crate::space::{Point, SeedSpace, CANTOR_DIGITS};
use crate::system::VilladsenSystem;

/// Largest box count tested jointly over all coordinates of `X^{d}`.
const FULL_BOX_LIMIT: u64 = 1 << 16;
/// Largest number of projected points gathered per target stage.
const PROJECTED_LIMIT: u64 = 1 << 18;
/// Coordinates inspected by the marginal test.
const MARGINAL_POSITIONS: u64 = 256;

#[derive(Clone, Debug, Serialize)]
pub struct StageCheck {
    pub stage: usize,
    pub c: u64,
    pub n: u64,
    pub k: u64,
    pub issues: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum DensityVerdict {
    /// Every box of side `resolution` meets a projected evaluation point.
    Covered { mode: CoverMode },
    /// A box with no projected point; `position` is set for the marginal test.
    Gap { mode: CoverMode, position: Option<u64>, cell: Vec<u64> },
    Unchecked { reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverMode {
    /// Boxes of `X^{d}` tested jointly.
    Joint,
    /// Each coordinate of `X^{d}` tested separately (the joint box count is too large).
    Marginal,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityCheck {
    pub target_stage: usize,
    pub dim: String,
    pub points_used: u64,
    pub verdict: DensityVerdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailRow {
    pub from: usize,
    /// `∏_{i=from}^{bound} n/(n+k)`.
    #[serde(with = "crate::exact::serde_q")]
    pub partial: Rational,
    /// Closed form or lower bracket of the infinite tail from `from`.
    pub closed_lower: Option<String>,
    pub closed_exact: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Satisfied,
    Violated,
    Unknown,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailCondition {
    pub status: Status,
    pub proof: String,
    pub rows: Vec<TailRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub system: String,
    pub stage_bound: usize,
    #[serde(with = "crate::exact::serde_q")]
    pub density_resolution: Rational,
    pub seed_issue: Option<String>,
    pub stages: Vec<StageCheck>,
    pub density: Vec<DensityCheck>,
    pub tail_condition: TailCondition,
}

impl ValidationReport {
    pub fn structural_ok(&self) -> bool {
        self.seed_issue.is_none() && self.stages.iter().all(|s| s.issues.is_empty())
    }

    pub fn density_ok(&self) -> bool {
        self.density.iter().all(|d| !matches!(d.verdict, DensityVerdict::Gap { .. }))
    }
}

/// Proof sketch for the tail condition `∏_{i ≥ M} n_i/(n_i+k_i) → 1`.
pub fn tail_condition_status(sys: &VilladsenSystem) -> (Status, String) {
    match &sys.family {
        None => (Status::Unknown, "finite system: no tail to control".into()),
        Some(Family::Squares { .. }) => (
            Status::Satisfied,
            "prod_{b>=b0} (b^2-1)/b^2 = (b0-1)/b0, which tends to 1".into(),
        ),
        Some(Family::OddSquares { .. }) => (
            Status::Satisfied,
            "prod_{b odd>=b0} (1-1/b^2) >= 1 - 1/(2(b0-1)), which tends to 1".into(),
        ),
        Some(Family::Halving { .. }) => (
            Status::Satisfied,
            "prod_{m>=M} T_m/T_{m+1} = T_M = 1 - (1-target)/2^(M-1), which tends to 1".into(),
        ),
        Some(Family::Constant { shape }) => (
            Status::Violated,
            format!("constant ratio {}/{} < 1, so every tail product is 0", shape.n(), shape.nk()),
        ),
    }
}

pub fn validate(sys: &VilladsenSystem, stage_bound: usize, density_resolution: &Rational) -> Result<ValidationReport> {
    if density_resolution <= &Rational::zero() {
        return Err(Error::Invalid("density resolution must be positive".into()));
    }
    let bound = match sys.last_stage() {
        Some(last) => stage_bound.min(last),
        None => stage_bound,
    };
    let seed_issue = sys.seed.check().err().map(|e| e.to_string());
    let mut stages = Vec::new();
    if sys.n0 == 0 {
        stages.push(StageCheck { stage: 0, c: 0, n: 0, k: 0, issues: vec!["n0 must be >= 1".into()] });
    }
    for i in 1..=bound {
        let shape = sys.shape(i)?;
        let mut issues = Vec::new();
        if shape.s.0.is_empty() || shape.c() == 0 {
            issues.push("c must be >= 1".into());
        }
        if let Some((t, _)) = shape.s.indexed().find(|&(_, v)| v == 0) {
            issues.push(format!("multiplicity s_{i},{t} is 0"));
        }
        if shape.k == 0 {
            issues.push("k must be >= 1".into());
        }
        if let Some(st) = sys.prefix.get(i - 1) {
            if let Some(pts) = &st.points {
                if pts.len() as u64 != shape.k {
                    issues.push(format!("{} evaluation points listed, k = {}", pts.len(), shape.k));
                }
            }
        }
        match sys.eval_points(i) {
            Ok(Some(pts)) => {
                for p in &pts {
                    if (0..p.arity() as usize).any(|t| !sys.seed.contains(p.coord(t))) {
                        issues.push(format!("evaluation point {p} leaves the seed space"));
                        break;
                    }
                }
            }
            Ok(None) => {}
            Err(e) => issues.push(e.to_string()),
        }
        stages.push(StageCheck { stage: i, c: shape.c(), n: shape.n(), k: shape.k, issues });
    }

    let mut density = Vec::new();
    if seed_issue.is_none() && stages.iter().all(|s| s.issues.is_empty()) {
        for t in 1..=bound {
            density.push(density_at(sys, t, bound, density_resolution)?);
        }
    }

    let (status, proof) = tail_condition_status(sys);
    let mut rows = Vec::new();
    let mut m = 1;
    while m <= bound {
        let partial = sys.partial(RatioKind::NOverNk, m, bound)?;
        let closed = sys.tail(RatioKind::NOverNk, m);
        rows.push(TailRow {
            from: m,
            partial,
            closed_lower: closed.as_ref().map(|c| fmt_q(&c.lower)),
            closed_exact: closed.and_then(|c| c.exact).map(|e| fmt_q(&e)),
        });
        m *= 2;
    }
    Ok(ValidationReport {
        system: sys.name.clone(),
        stage_bound: bound,
        density_resolution: density_resolution.clone(),
        seed_issue,
        stages,
        density,
        tail_condition: TailCondition { status, proof, rows },
    })
}

/// Cells of one coordinate, and the set of cells the seed actually meets.
struct Cells {
    per_axis: u64,
    required: BTreeSet<Vec<u64>>,
}

fn cells(seed: &SeedSpace, resolution: &Rational) -> Option<Cells> {
    let per_axis = (Rational::one() / resolution).ceil().to_integer().to_u64()?.max(1);
    match seed {
        SeedSpace::Cube { m } => {
            let total = per_axis.checked_pow(*m)?;
            if total > FULL_BOX_LIMIT {
                return None;
            }
            let required = (0..total)
                .map(|mut x| {
                    (0..*m)
                        .map(|_| {
                            let c = x % per_axis;
                            x /= per_axis;
                            c
                        })
                        .collect()
                })
                .collect();
            Some(Cells { per_axis, required })
        }
        SeedSpace::Cantor => {
            // a level-L endpoint lies in every cell that meets the set once 3^-L < 1/K
            let mut level = 1u32;
            while 3u64.pow(level) <= per_axis && level < CANTOR_DIGITS {
                level += 1;
            }
            let mut required = BTreeSet::new();
            for bits in 0..(1u64 << level) {
                let mut left = Rational::zero();
                let mut scale = Rational::one();
                for b in 0..level {
                    scale /= qi(3);
                    if bits >> b & 1 == 1 {
                        left += qi(2) * &scale;
                    }
                }
                let right = &left + &scale;
                for v in [left, right] {
                    required.insert(vec![cell_of(&v, per_axis)]);
                }
            }
            Some(Cells { per_axis, required })
        }
        SeedSpace::FiniteMetric { distances } => Some(Cells {
            per_axis: distances.len() as u64,
            required: (0..distances.len() as u64).map(|i| vec![i]).collect(),
        }),
        SeedSpace::HilbertCube => None,
    }
}

fn cell_of(v: &Rational, per_axis: u64) -> u64 {
    let c = (v * qi(per_axis as i64)).floor().to_integer().to_u64().unwrap_or(0);
    c.min(per_axis - 1)
}

fn coord_cell(seed: &SeedSpace, c: &[Rational], per_axis: u64) -> Vec<u64> {
    match seed {
        SeedSpace::FiniteMetric { .. } => vec![c[0].to_integer().to_u64().unwrap_or(0)],
        _ => c.iter().map(|v| cell_of(v, per_axis)).collect(),
    }
}

fn density_at(sys: &VilladsenSystem, t: usize, bound: usize, resolution: &Rational) -> Result<DensityCheck> {
    let (_, d_t) = sys.stage_dims(t)?;
    let dim = d_t.to_string();
    let unchecked = |reason: &str, used| DensityCheck {
        target_stage: t,
        dim: dim.clone(),
        points_used: used,
        verdict: DensityVerdict::Unchecked { reason: reason.into() },
    };
    let Some(cells) = cells(&sys.seed, resolution) else {
        return Ok(unchecked("no box cover for this seed at this resolution", 0));
    };
    let Some(d_t) = d_t.to_u64() else {
        return Ok(unchecked("dimension too large", 0));
    };
    let mut projected: Vec<Point> = Vec::new();
    for j in t..=bound {
        let Some(pts) = sys.eval_points(j)? else {
            continue;
        };
        for p in pts {
            let blocks = p.arity() / d_t;
            for b in 0..blocks {
                if projected.len() as u64 >= PROJECTED_LIMIT {
                    break;
                }
                projected.push(p.block(b * d_t, d_t)?);
            }
        }
    }
    if projected.is_empty() {
        return Ok(unchecked("no explicit evaluation points at or after this stage", 0));
    }
    let used = projected.len() as u64;
    let per_coord = cells.required.len() as u64;
    let joint = per_coord.checked_pow(d_t as u32).filter(|&n| n <= FULL_BOX_LIMIT);
    let verdict = if joint.is_some() {
        let hit: BTreeSet<Vec<u64>> = projected
            .iter()
            .map(|p| (0..d_t as usize).flat_map(|c| coord_cell(&sys.seed, p.coord(c), cells.per_axis)).collect())
            .collect();
        let missing = joint_cells(&cells.required, d_t as usize).into_iter().find(|c| !hit.contains(c));
        match missing {
            None => DensityVerdict::Covered { mode: CoverMode::Joint },
            Some(cell) => DensityVerdict::Gap { mode: CoverMode::Joint, position: None, cell },
        }
    } else {
        let mut gap = None;
        for pos in 0..d_t.min(MARGINAL_POSITIONS) {
            let hit: BTreeSet<Vec<u64>> = projected
                .iter()
                .map(|p| coord_cell(&sys.seed, p.coord(pos as usize), cells.per_axis))
                .collect();
            if let Some(c) = cells.required.iter().find(|c| !hit.contains(*c)) {
                gap = Some((pos, c.clone()));
                break;
            }
        }
        match gap {
            None => DensityVerdict::Covered { mode: CoverMode::Marginal },
            Some((pos, cell)) => DensityVerdict::Gap { mode: CoverMode::Marginal, position: Some(pos), cell },
        }
    };
    Ok(DensityCheck { target_stage: t, dim, points_used: used, verdict })
}

fn joint_cells(required: &BTreeSet<Vec<u64>>, d: usize) -> Vec<Vec<u64>> {
    let mut acc: Vec<Vec<u64>> = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::with_capacity(acc.len() * required.len());
        for a in &acc {
            for r in required {
                let mut v = a.clone();
                v.extend(r);
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;
    use crate::families::{Layout, Runs, Shape};
    use crate::system::{stage, EvalRule};

    #[test]
    fn squares_validate() {
        let s2 = VilladsenSystem::squares(11);
        let rep = validate(&s2, 10, &q(1, 2)).unwrap();
        assert!(rep.structural_ok());
        assert_eq!(rep.tail_condition.status, Status::Satisfied);
        let row = rep.tail_condition.rows.iter().find(|r| r.from == 4).unwrap();
        assert_eq!(row.closed_exact.as_deref(), Some("4/5"));
        // partial from 4 to 10 is (4/5)(12/11)
        assert_eq!(row.partial, q(48, 55));
    }

    #[test]
    fn constant_family_violates_tail_condition() {
        let g = VilladsenSystem::from_family(
            "G",
            SeedSpace::Cube { m: 1 },
            1,
            Family::Constant { shape: Shape { s: Runs::uniform(2, 1), k: 1 } },
            EvalRule::default(),
        );
        let rep = validate(&g, 6, &q(1, 2)).unwrap();
        assert_eq!(rep.tail_condition.status, Status::Violated);
    }

    #[test]
    fn zero_multiplicity_flagged() {
        let sys = VilladsenSystem {
            name: "bad".into(),
            seed: SeedSpace::Cube { m: 1 },
            n0: 1,
            prefix: vec![stage(&[1, 0], 1)],
            family: Some(Family::Squares { from: 2, layout: Layout::Spread }),
            evals: EvalRule::default(),
        };
        let rep = validate(&sys, 3, &q(1, 2)).unwrap();
        assert!(!rep.structural_ok());
        assert!(rep.stages[0].issues[0].contains("s_1,2"));
    }

    #[test]
    fn density_joint_and_marginal() {
        let s2 = VilladsenSystem::squares(5);
        let rep = validate(&s2, 4, &q(1, 2)).unwrap();
        assert_eq!(rep.density[0].verdict, DensityVerdict::Covered { mode: CoverMode::Joint });
        assert!(rep.density.iter().any(|d| matches!(
            d.verdict,
            DensityVerdict::Covered { mode: CoverMode::Marginal } | DensityVerdict::Gap { mode: CoverMode::Marginal, .. }
        )));
        // far too fine for a handful of points
        let fine = validate(&s2, 2, &q(1, 64)).unwrap();
        assert!(!fine.density_ok());
    }
}
