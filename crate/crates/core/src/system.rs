//! Inductive systems: seed space, per-stage shapes and evaluation points.
//!
//! Stage `i` (1-based) carries `X^{d_i}` with matrix size `m_i`, where
//! `m_1 = n₀`, `m_{i+1} = m_i (n_i + k_i)`, `d_1 = 1` and `d_{i+1} = d_i c_i`.

use num_bigint::BigUint;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{qi, Rational};
use crate::families::{Family, Layout, RatioKind, Runs, Shape, TailBound};
use crate::space::{Point, SeedSpace};

/// Largest number of rationals an explicitly generated evaluation point may hold.
pub const EXPLICIT_POINT_LIMIT: u64 = 4096;

/// Explicitly specified stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageData {
    #[serde(flatten)]
    pub shape: Shape,
    /// Explicit evaluation points (each a flat list of rationals); generated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<RawPoint>>,
}

/// A point as written in a system file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RawPoint(#[serde(with = "crate::exact::serde_qvec")] pub Vec<Rational>);

/// How evaluation points are produced when a stage does not list them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum EvalRule {
    /// Pseudo-random rationals with the given denominator, from a ChaCha stream keyed by
    /// `(seed, stage)`.
    Seeded { seed: u64, denominator: u64 },
    /// Grid values `v/steps`, cycling through the grid along the coordinates.
    Grid { steps: u64 },
}

impl Default for EvalRule {
    fn default() -> Self {
        EvalRule::Seeded { seed: 0, denominator: 1 << 16 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VilladsenSystem {
    pub name: String,
    pub seed: SeedSpace,
    pub n0: u64,
    /// Stages `1..=prefix.len()`.
    #[serde(default)]
    pub prefix: Vec<StageData>,
    /// Rule for every stage past the prefix; `None` makes the system finite.
    #[serde(default)]
    pub family: Option<Family>,
    #[serde(default)]
    pub evals: EvalRule,
}

impl VilladsenSystem {
    /// Family-only system with no explicit stages.
    pub fn from_family(name: &str, seed: SeedSpace, n0: u64, family: Family, evals: EvalRule) -> Self {
        VilladsenSystem { name: name.into(), seed, n0, prefix: vec![], family: Some(family), evals }
    }

    /// `n₀ = 1`, `n_i + k_i = (i+1)²`, `c_i = n_i`, every multiplicity 1, on `[0,1]²`.
    pub fn squares(seed_value: u64) -> Self {
        Self::from_family(
            "S2",
            SeedSpace::Cube { m: 2 },
            1,
            Family::Squares { from: 2, layout: Layout::Spread },
            EvalRule::Seeded { seed: seed_value, denominator: 1 << 16 },
        )
    }

    /// Last stage index that has a connecting map, `None` if unbounded.
    pub fn last_stage(&self) -> Option<usize> {
        match self.family {
            Some(_) => None,
            None => Some(self.prefix.len()),
        }
    }

    /// Shape of stage `i`.
    pub fn shape(&self, i: usize) -> Result<Shape> {
        if i == 0 {
            return Err(Error::Invalid("stages are 1-based".into()));
        }
        if i <= self.prefix.len() {
            return Ok(self.prefix[i - 1].shape.clone());
        }
        match &self.family {
            Some(f) => f.shape(i),
            None => Err(Error::StageBeyondGenerator { stage: i }),
        }
    }

    /// `(m_i, d_i)`; valid up to one past the last connecting map.
    pub fn stage_dims(&self, i: usize) -> Result<(BigUint, BigUint)> {
        if i == 0 {
            return Err(Error::Invalid("stages are 1-based".into()));
        }
        let mut m = BigUint::from(self.n0);
        let mut d = BigUint::one();
        for l in 1..i {
            let sh = self.shape(l)?;
            m *= sh.nk();
            d *= sh.c();
        }
        Ok((m, d))
    }

    /// All `(m_l, d_l)` for `l = 1..=i`.
    pub fn dims_upto(&self, i: usize) -> Result<Vec<(BigUint, BigUint)>> {
        let mut out = Vec::with_capacity(i);
        let mut m = BigUint::from(self.n0);
        let mut d = BigUint::one();
        out.push((m.clone(), d.clone()));
        for l in 1..i {
            let sh = self.shape(l)?;
            m *= sh.nk();
            d *= sh.c();
            out.push((m.clone(), d.clone()));
        }
        Ok(out)
    }

    /// Evaluation points of stage `i` as points of `X^{d_i}`; `None` if they are too
    /// large to hold explicitly.
    pub fn eval_points(&self, i: usize) -> Result<Option<Vec<Point>>> {
        let shape = self.shape(i)?;
        let (_, d) = self.stage_dims(i)?;
        let w = self.seed.width();
        if let Some(st) = self.prefix.get(i - 1) {
            if let Some(points) = &st.points {
                return points
                    .iter()
                    .map(|p| {
                        let pt = Point::new(w, p.0.clone())?;
                        if BigUint::from(pt.arity()) != d {
                            return Err(Error::Arity {
                                expected: u64::try_from(&d).unwrap_or(u64::MAX),
                                found: pt.arity(),
                            });
                        }
                        Ok(pt)
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(Some);
            }
        }
        let Ok(d) = u64::try_from(&d) else {
            return Ok(None);
        };
        if d.saturating_mul(w as u64) > EXPLICIT_POINT_LIMIT {
            return Ok(None);
        }
        Ok(Some(self.generate_points(i, shape.k, d)))
    }

    fn generate_points(&self, stage: usize, k: u64, d: u64) -> Vec<Point> {
        let w = self.seed.width();
        match &self.evals {
            EvalRule::Seeded { seed, denominator } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ stage as u64);
                (0..k)
                    .map(|_| {
                        let mut coords = Vec::with_capacity(d as usize * w);
                        for _ in 0..d {
                            coords.extend(self.seed.random_coord(&mut rng, (*denominator).max(1)));
                        }
                        Point::new(w, coords).expect("width divides")
                    })
                    .collect()
            }
            EvalRule::Grid { steps } => {
                let steps = (*steps).max(1);
                (0..k)
                    .map(|t| {
                        let mut coords = Vec::with_capacity(d as usize * w);
                        for p in 0..d {
                            let mut one = Vec::with_capacity(w);
                            for c in 0..w as u64 {
                                let v = (t + stage as u64 + p * (t + 1) + c * 3) % (steps + 1);
                                one.push(Rational::new(v.into(), steps.into()));
                            }
                            coords.extend(self.grid_coord(one));
                        }
                        Point::new(w, coords).expect("width divides")
                    })
                    .collect()
            }
        }
    }

    /// Map a grid vector into the seed (finite metric: index; Cantor: nearest left endpoint).
    fn grid_coord(&self, v: Vec<Rational>) -> Vec<Rational> {
        match &self.seed {
            SeedSpace::FiniteMetric { distances } => {
                let n = distances.len() as i64;
                let idx = (&v[0] * qi(n)).floor().to_integer();
                let idx = idx.min(num_bigint::BigInt::from(n - 1));
                vec![Rational::from_integer(idx)]
            }
            SeedSpace::Cantor => {
                // ternary digits of v with every 1 replaced by 0
                let mut x = v[0].clone();
                let mut out = Rational::from_integer(0.into());
                let mut scale = Rational::one();
                for _ in 0..crate::space::CANTOR_DIGITS {
                    scale /= qi(3);
                    x *= qi(3);
                    let dgt = x.floor();
                    x -= &dgt;
                    if dgt >= qi(2) {
                        out += qi(2) * &scale;
                    }
                }
                vec![out]
            }
            _ => v,
        }
    }

    /// Infinite product of `kind` over stages `from, from + 1, …`: explicit prefix
    /// factors times the family's closed form. `None` for finite systems.
    pub fn tail(&self, kind: RatioKind, from: usize) -> Option<TailBound> {
        let family = self.family.as_ref()?;
        let start = from.max(self.prefix.len() + 1);
        let mut head = Rational::one();
        for i in from..start {
            head *= kind.of(&self.prefix[i - 1].shape);
        }
        Some(family.tail(kind, start).scale(&head))
    }

    /// Finite product of `kind` over stages `from..=to`.
    pub fn partial(&self, kind: RatioKind, from: usize, to: usize) -> Result<Rational> {
        let mut p = Rational::one();
        for i in from..=to {
            p *= kind.of(&self.shape(i)?);
        }
        Ok(p)
    }

    /// Check the whole description for malformed parameters.
    pub fn check(&self) -> Result<()> {
        self.seed.check()?;
        if self.n0 == 0 {
            return Err(Error::Invalid("n0 must be >= 1".into()));
        }
        if let Some(f) = &self.family {
            f.check()?;
        }
        Ok(())
    }

    /// Same combinatorial data except possibly `k` and the evaluation points.
    pub fn same_coordinate_shape(&self, other: &VilladsenSystem, depth: usize) -> Result<bool> {
        if self.seed != other.seed || self.n0 != other.n0 {
            return Ok(false);
        }
        for i in 1..=depth {
            match (self.shape(i), other.shape(i)) {
                (Ok(a), Ok(b)) if a.s == b.s => {}
                (Err(_), Err(_)) => return Ok(true),
                _ => return Ok(false),
            }
        }
        Ok(coordinate_family_key(&self.family) == coordinate_family_key(&other.family))
    }
}

/// Family description with the `k` data dropped, for shape comparison.
fn coordinate_family_key(f: &Option<Family>) -> Option<String> {
    f.as_ref().map(|f| match f {
        Family::Constant { shape } => format!("constant:{:?}", shape.s),
        other => other.tag(),
    })
}

/// Convenience for building explicit stages in code and tests.
pub fn stage(s: &[u64], k: u64) -> StageData {
    StageData { shape: Shape { s: Runs::from_list(s), k }, points: None }
}

/// Pseudo-random generator for tests and instance generation.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random small explicit system for property checks: `stages` stages with
/// parameters bounded by `max_param`, on `[0,1]`.
pub fn random_small_system<R: Rng>(rng: &mut R, stages: usize, max_param: u64) -> VilladsenSystem {
    let prefix = (0..stages)
        .map(|_| {
            let c = rng.gen_range(1..=max_param);
            let s: Vec<u64> = (0..c).map(|_| rng.gen_range(1..=max_param)).collect();
            stage(&s, rng.gen_range(1..=max_param))
        })
        .collect();
    VilladsenSystem {
        name: "random".into(),
        seed: SeedSpace::Cube { m: 1 },
        n0: rng.gen_range(1..=max_param),
        prefix,
        family: None,
        evals: EvalRule::Seeded { seed: rng.gen(), denominator: 1 << 20 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squares_dims() {
        let s2 = VilladsenSystem::squares(1);
        assert_eq!(s2.stage_dims(1).unwrap(), (BigUint::from(1u32), BigUint::from(1u32)));
        assert_eq!(s2.stage_dims(2).unwrap(), (BigUint::from(4u32), BigUint::from(3u32)));
        assert_eq!(s2.stage_dims(3).unwrap(), (BigUint::from(36u32), BigUint::from(24u32)));
        let all = s2.dims_upto(3).unwrap();
        assert_eq!(all[2], s2.stage_dims(3).unwrap());
    }

    #[test]
    fn eval_points_have_stage_arity() {
        let s2 = VilladsenSystem::squares(7);
        for i in 1..=4 {
            let pts = s2.eval_points(i).unwrap().unwrap();
            let (_, d) = s2.stage_dims(i).unwrap();
            assert_eq!(pts.len(), 1);
            assert_eq!(BigUint::from(pts[0].arity()), d);
            assert!(pts[0].raw().chunks(2).all(|c| s2.seed.contains(c)));
        }
        assert!(s2.eval_points(6).unwrap().is_none());
        // deterministic
        assert_eq!(s2.eval_points(3).unwrap(), VilladsenSystem::squares(7).eval_points(3).unwrap());
        assert_ne!(s2.eval_points(3).unwrap(), VilladsenSystem::squares(8).eval_points(3).unwrap());
    }

    #[test]
    fn finite_system_stops() {
        let sys = VilladsenSystem {
            name: "t".into(),
            seed: SeedSpace::Cube { m: 1 },
            n0: 3,
            prefix: vec![],
            family: None,
            evals: EvalRule::default(),
        };
        assert_eq!(sys.stage_dims(1).unwrap().0, BigUint::from(3u32));
        assert!(sys.shape(1).is_err());
    }

    #[test]
    fn grid_points_land_in_seed() {
        for seed in [SeedSpace::Cantor, SeedSpace::Cube { m: 3 }] {
            let sys = VilladsenSystem::from_family(
                "g",
                seed.clone(),
                1,
                Family::Squares { from: 2, layout: Layout::Spread },
                EvalRule::Grid { steps: 5 },
            );
            for p in sys.eval_points(2).unwrap().unwrap() {
                for t in 0..p.arity() as usize {
                    assert!(seed.contains(p.coord(t)));
                }
            }
        }
    }
}
