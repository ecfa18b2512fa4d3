//! Seed spaces and points of their finite powers.

use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{fmt_q, q, qi, Ext, Rational};

/// Truncation length used for points of the Hilbert cube.
pub const HILBERT_WIDTH: usize = 6;
/// Ternary digits drawn for generated Cantor-set points.
pub const CANTOR_DIGITS: u32 = 12;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeedSpace {
    /// `[0,1]^m` with the sup metric.
    Cube { m: u32 },
    /// `[0,1]^ℕ` with `Σ 2^{-k}|x_k − y_k|`, points truncated to [`HILBERT_WIDTH`] terms.
    HilbertCube,
    /// The middle-thirds Cantor set inside `[0,1]`.
    Cantor,
    /// Points `0..len` with a distance table.
    FiniteMetric {
        #[serde(with = "table")]
        distances: Vec<Vec<Rational>>,
    },
}

mod table {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = t.iter().map(|r| r.iter().map(fmt_q).collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Rational>>, D::Error> {
        let rows: Vec<Vec<String>> = Vec::deserialize(d)?;
        rows.into_iter()
            .map(|r| {
                r.iter()
                    .map(|x| crate::exact::parse_q(x).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

impl SeedSpace {
    /// Rationals per coordinate of `X`.
    pub fn width(&self) -> usize {
        match self {
            SeedSpace::Cube { m } => *m as usize,
            SeedSpace::HilbertCube => HILBERT_WIDTH,
            SeedSpace::Cantor | SeedSpace::FiniteMetric { .. } => 1,
        }
    }

    pub fn dim(&self) -> Ext {
        match self {
            SeedSpace::Cube { m } => Ext::Finite(qi(*m)),
            SeedSpace::HilbertCube => Ext::Infinite,
            SeedSpace::Cantor | SeedSpace::FiniteMetric { .. } => Ext::zero(),
        }
    }

    /// Contains a Euclidean ball of its own dimension (a point, in dimension 0).
    pub fn solid(&self) -> bool {
        true
    }

    pub fn connected(&self) -> bool {
        match self {
            SeedSpace::Cube { .. } | SeedSpace::HilbertCube => true,
            SeedSpace::Cantor => false,
            SeedSpace::FiniteMetric { distances } => distances.len() == 1,
        }
    }

    /// `K₀(C(X)) = ℤ` and `K₁(C(X)) = 0`.
    pub fn k_contractible(&self) -> bool {
        match self {
            SeedSpace::Cube { .. } | SeedSpace::HilbertCube => true,
            SeedSpace::Cantor => false,
            SeedSpace::FiniteMetric { distances } => distances.len() == 1,
        }
    }

    pub fn finite_dimensional(&self) -> bool {
        !matches!(self, SeedSpace::HilbertCube)
    }

    pub fn is_singleton(&self) -> bool {
        matches!(self, SeedSpace::FiniteMetric { distances } if distances.len() == 1)
    }

    pub fn name(&self) -> String {
        match self {
            SeedSpace::Cube { m } => format!("cube({m})"),
            SeedSpace::HilbertCube => "hilbert_cube".into(),
            SeedSpace::Cantor => "cantor".into(),
            SeedSpace::FiniteMetric { distances } => format!("finite_metric({})", distances.len()),
        }
    }

    /// Structural checks on the space description.
    pub fn check(&self) -> Result<()> {
        match self {
            SeedSpace::Cube { m } if *m == 0 => Err(Error::Invalid("cube exponent must be >= 1".into())),
            SeedSpace::FiniteMetric { distances } => {
                let n = distances.len();
                if n == 0 {
                    return Err(Error::Invalid("finite metric space is empty".into()));
                }
                for (i, row) in distances.iter().enumerate() {
                    if row.len() != n {
                        return Err(Error::Invalid(format!("distance row {i} has {} entries, expected {n}", row.len())));
                    }
                }
                for i in 0..n {
                    if !distances[i][i].is_zero() {
                        return Err(Error::Invalid(format!("distance d({i},{i}) is not zero")));
                    }
                    for j in 0..n {
                        let d = &distances[i][j];
                        if d != &distances[j][i] {
                            return Err(Error::Invalid(format!("distance table not symmetric at ({i},{j})")));
                        }
                        if i != j && !d.is_positive() {
                            return Err(Error::Invalid(format!("distance d({i},{j}) must be positive")));
                        }
                        for k in 0..n {
                            if distances[i][k] > d + &distances[j][k] {
                                return Err(Error::Invalid(format!(
                                    "triangle inequality fails for ({i},{j},{k})"
                                )));
                            }
                        }
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Distance between two single coordinates (each `width` rationals).
    pub fn coord_dist(&self, a: &[Rational], b: &[Rational]) -> Rational {
        match self {
            SeedSpace::Cube { .. } | SeedSpace::Cantor => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .max()
                .unwrap_or_else(Rational::zero),
            SeedSpace::HilbertCube => {
                let mut w = Rational::one();
                let mut acc = Rational::zero();
                for (x, y) in a.iter().zip(b) {
                    w /= qi(2);
                    acc += &w * (x - y).abs();
                }
                acc
            }
            SeedSpace::FiniteMetric { distances } => {
                let i = index_of(&a[0]);
                let j = index_of(&b[0]);
                distances[i][j].clone()
            }
        }
    }

    pub fn diameter(&self) -> Rational {
        match self {
            SeedSpace::Cube { .. } | SeedSpace::Cantor => Rational::one(),
            SeedSpace::HilbertCube => Rational::one() - q(1, 1 << HILBERT_WIDTH),
            SeedSpace::FiniteMetric { distances } => {
                distances.iter().flatten().max().cloned().unwrap_or_else(Rational::zero)
            }
        }
    }

    /// Whether a raw coordinate lies in the space.
    pub fn contains(&self, c: &[Rational]) -> bool {
        if c.len() != self.width() {
            return false;
        }
        let unit = |x: &Rational| !x.is_negative() && x <= &Rational::one();
        match self {
            SeedSpace::Cube { .. } | SeedSpace::HilbertCube => c.iter().all(unit),
            SeedSpace::Cantor => in_cantor(&c[0]),
            SeedSpace::FiniteMetric { distances } => {
                c[0].is_integer() && !c[0].is_negative() && index_of(&c[0]) < distances.len()
            }
        }
    }

    /// One pseudo-random coordinate.
    pub fn random_coord<R: Rng>(&self, rng: &mut R, denominator: u64) -> Vec<Rational> {
        match self {
            SeedSpace::Cube { .. } | SeedSpace::HilbertCube => (0..self.width())
                .map(|_| Rational::new(rng.gen_range(0..=denominator).into(), denominator.into()))
                .collect(),
            SeedSpace::Cantor => {
                let mut v = Rational::zero();
                let mut scale = Rational::one();
                for _ in 0..CANTOR_DIGITS {
                    scale /= qi(3);
                    if rng.gen_bool(0.5) {
                        v += qi(2) * &scale;
                    }
                }
                vec![v]
            }
            SeedSpace::FiniteMetric { distances } => vec![qi(rng.gen_range(0..distances.len()) as i64)],
        }
    }
}

fn index_of(x: &Rational) -> usize {
    use num_traits::ToPrimitive;
    x.to_integer().to_usize().unwrap_or(usize::MAX)
}

/// Membership for finite ternary expansions avoiding the digit 1 (up to 40 digits).
fn in_cantor(x: &Rational) -> bool {
    if x.is_negative() || x > &Rational::one() {
        return false;
    }
    let mut y = x.clone();
    for _ in 0..40 {
        if y.is_zero() || y.is_one() {
            return true;
        }
        y *= qi(3);
        let d = y.floor();
        if d == qi(1) && y != qi(1) {
            return false;
        }
        y -= d;
    }
    true
}

/// A point of `X^d`, stored as `d · width` rationals.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point {
    width: u32,
    coords: Vec<Rational>,
}

impl Point {
    pub fn new(width: usize, coords: Vec<Rational>) -> Result<Self> {
        if width == 0 || coords.len() % width != 0 {
            return Err(Error::Invalid(format!(
                "{} rationals do not split into coordinates of width {width}",
                coords.len()
            )));
        }
        Ok(Point { width: width as u32, coords })
    }

    /// A point of `X` (arity 1).
    pub fn single(coord: Vec<Rational>) -> Self {
        Point { width: coord.len() as u32, coords: coord }
    }

    /// Shorthand for a point of `[0,1]`.
    pub fn scalar(x: Rational) -> Self {
        Point { width: 1, coords: vec![x] }
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    /// Number of `X`-coordinates.
    pub fn arity(&self) -> u64 {
        (self.coords.len() / self.width()) as u64
    }

    pub fn raw(&self) -> &[Rational] {
        &self.coords
    }

    /// The `t`-th coordinate (0-based) as a point of `X`.
    pub fn coord(&self, t: usize) -> &[Rational] {
        let w = self.width();
        &self.coords[t * w..(t + 1) * w]
    }

    /// Sub-point of `len` coordinates starting at coordinate `offset`.
    pub fn block(&self, offset: u64, len: u64) -> Result<Point> {
        if offset + len > self.arity() {
            return Err(Error::Arity { expected: offset + len, found: self.arity() });
        }
        let w = self.width as u64;
        let (a, b) = ((offset * w) as usize, ((offset + len) * w) as usize);
        Ok(Point { width: self.width, coords: self.coords[a..b].to_vec() })
    }

    /// Concatenation `(p₁, …, p_r)`.
    pub fn concat(parts: &[Point]) -> Result<Point> {
        let w = parts.first().map(|p| p.width).unwrap_or(1);
        if parts.iter().any(|p| p.width != w) {
            return Err(Error::Invalid("concatenating points of different widths".into()));
        }
        Ok(Point { width: w, coords: parts.iter().flat_map(|p| p.coords.iter().cloned()).collect() })
    }

    /// `(x, …, x)` with `times` copies.
    pub fn repeat(&self, times: u64) -> Point {
        let mut coords = Vec::with_capacity(self.coords.len() * times as usize);
        for _ in 0..times {
            coords.extend(self.coords.iter().cloned());
        }
        Point { width: self.width, coords }
    }

    /// Sup over coordinates of the seed metric.
    pub fn dist(&self, other: &Point, seed: &SeedSpace) -> Result<Rational> {
        if self.coords.len() != other.coords.len() || self.width != other.width {
            return Err(Error::Arity { expected: self.arity(), found: other.arity() });
        }
        Ok((0..self.arity() as usize)
            .map(|t| seed.coord_dist(self.coord(t), other.coord(t)))
            .max()
            .unwrap_or_else(Rational::zero))
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(fmt_q).collect();
        write!(f, "({})", parts.join(", "))
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::exact::serde_qvec::serialize(&self.coords, s)
    }
}
