//! Problem files for the `trace-approx` and `match` commands.

use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Value};

use villadsen::exact::fmt_q;
use villadsen::matching::{marriage_match, EvaluationMultiset};
use villadsen::space::{Point, SeedSpace};
use villadsen::system::RawPoint;
use villadsen::traces::{discretization_threshold, discretize, DiscreteMeasure, SampledFunction};
use villadsen::Rational;

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, String> {
    toml::from_str(text).map_err(|e| format!("{}: {}", path.display(), e.to_string().trim_end()))
}

fn point(width: usize, raw: RawPoint) -> Result<Point, String> {
    Point::new(width, raw.0).map_err(|e| e.to_string())
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct Atom {
    point: RawPoint,
    #[serde(with = "villadsen::exact::serde_q")]
    weight: Rational,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct AffineSpec {
    #[serde(with = "villadsen::exact::serde_qvec")]
    coeffs: Vec<Rational>,
    #[serde(default, with = "villadsen::exact::serde_q")]
    constant: Rational,
}

/// `atoms` of a probability measure, affine test functions, a count and a tolerance.
#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct DiscretizeProblem {
    #[serde(default = "one")]
    width: usize,
    n: u64,
    #[serde(with = "villadsen::exact::serde_q")]
    eps: Rational,
    atoms: Vec<Atom>,
    functions: Vec<AffineSpec>,
}

fn one() -> usize {
    1
}

impl DiscretizeProblem {
    pub fn parse(path: &Path, text: &str) -> Result<Self, String> {
        parse(path, text)
    }

    pub fn solve(self) -> villadsen::Result<Value> {
        let mut support = Vec::new();
        let mut weights = Vec::new();
        for a in self.atoms {
            support.push(point(self.width, a.point).map_err(villadsen::Error::Invalid)?);
            weights.push(a.weight);
        }
        let mu = DiscreteMeasure::new(support, weights)?;
        let fs: Vec<SampledFunction> =
            self.functions.into_iter().map(|f| SampledFunction::affine(f.coeffs, f.constant)).collect();
        let threshold = discretization_threshold(&mu, &fs, &self.eps)?;
        let d = discretize(&mu, &fs, self.n, &self.eps)?;
        Ok(json!({
            "measure": mu,
            "eps": fmt_q(&self.eps),
            "n": self.n,
            "threshold": threshold.to_string(),
            "discretization": d,
        }))
    }
}

/// Two point lists of equal total size in a seed space, and a radius.
#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct MatchProblem {
    seed: SeedSpace,
    #[serde(with = "villadsen::exact::serde_q")]
    radius: Rational,
    xs: Vec<RawPoint>,
    ys: Vec<RawPoint>,
    #[serde(default)]
    xs_mult: Option<Vec<u64>>,
    #[serde(default)]
    ys_mult: Option<Vec<u64>>,
}

impl MatchProblem {
    pub fn parse(path: &Path, text: &str) -> Result<Self, String> {
        let p: MatchProblem = parse(path, text)?;
        p.seed.check().map_err(|e| format!("{}: seed: {e}", path.display()))?;
        Ok(p)
    }

    pub fn solve(self) -> villadsen::Result<Value> {
        let width = self.seed.width();
        let side = |raw: Vec<RawPoint>, mult: Option<Vec<u64>>| -> villadsen::Result<EvaluationMultiset> {
            let pts = raw
                .into_iter()
                .map(|r| point(width, r).map_err(villadsen::Error::Invalid))
                .collect::<villadsen::Result<Vec<_>>>()?;
            match mult {
                Some(m) => EvaluationMultiset::new(pts, m),
                None => Ok(EvaluationMultiset::simple(pts)),
            }
        };
        let xs = side(self.xs, self.xs_mult)?;
        let ys = side(self.ys, self.ys_mult)?;
        let result = marriage_match(&xs, &ys, &self.radius, &self.seed)?;
        Ok(json!({ "seed": self.seed.name(), "radius": fmt_q(&self.radius), "result": result }))
    }
}
