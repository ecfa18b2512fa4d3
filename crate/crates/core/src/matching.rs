//! Moving point evaluations around: the `η` modulus, Hall's condition and perfect
//! matchings between evaluation multisets, the bump functions of the uniqueness
//! argument, and division of a point evaluation into `θ₀ ⊕ θ₁^{⊕M}`.

use std::collections::BTreeMap;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{floor_u, fmt_q, qi, Rational};
use crate::space::{Point, SeedSpace};
use crate::traces::SampledFunction;

/// Largest number of cover cells or net points generated.
pub const CELL_LIMIT: u64 = 4096;
/// Largest number of unions `uniqueness_data` builds.
const UNION_LIMIT: usize = 1 << 14;

/// Points of `X` (or `X^d`) with multiplicities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EvaluationMultiset {
    pub points: Vec<Point>,
    pub mults: Vec<u64>,
}

impl EvaluationMultiset {
    pub fn new(points: Vec<Point>, mults: Vec<u64>) -> Result<Self> {
        if points.len() != mults.len() {
            return Err(Error::CountMismatch { left: points.len() as u64, right: mults.len() as u64 });
        }
        if mults.contains(&0) {
            return Err(Error::Invalid("multiplicities must be >= 1".into()));
        }
        Ok(EvaluationMultiset { points, mults })
    }

    /// Each point once.
    pub fn simple(points: Vec<Point>) -> Self {
        let mults = vec![1; points.len()];
        EvaluationMultiset { points, mults }
    }

    pub fn empty() -> Self {
        EvaluationMultiset { points: vec![], mults: vec![] }
    }

    pub fn total(&self) -> u64 {
        self.mults.iter().sum()
    }

    /// The multiset as a list with repetitions.
    pub fn expand(&self) -> Vec<Point> {
        self.points
            .iter()
            .zip(&self.mults)
            .flat_map(|(p, &m)| std::iter::repeat(p.clone()).take(m as usize))
            .collect()
    }

    /// Point → multiplicity, merging repeated entries.
    pub fn counts(&self) -> BTreeMap<Point, u64> {
        let mut out = BTreeMap::new();
        for (p, m) in self.points.iter().zip(&self.mults) {
            *out.entry(p.clone()).or_insert(0) += m;
        }
        out
    }
}

/// `η = eps/(3 max L)`; `diameter` when every modulus vanishes.
pub fn modulus_eta(functions: &[SampledFunction], eps: &Rational, diameter: &Rational) -> Result<Rational> {
    if !eps.is_positive() {
        return Err(Error::Invalid("eps must be positive".into()));
    }
    let l = functions.iter().map(|f| f.lipschitz.clone()).max().unwrap_or_else(Rational::zero);
    if l.is_zero() {
        return Ok(diameter.clone());
    }
    Ok(eps / (qi(3) * l))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum MatchResult {
    /// `pairs[t] = (t, σ(t))` on the expanded lists.
    Matched {
        pairs: Vec<(usize, usize)>,
        #[serde(with = "crate::exact::serde_qvec")]
        displacements: Vec<Rational>,
        #[serde(with = "crate::exact::serde_q")]
        max_displacement: Rational,
    },
    /// Indices of `X̃` in the expanded `xs` and of its radius-neighbourhood in `ys`,
    /// with `|X̃| > |X̃_r ∩ Y|`.
    Violation { subset: Vec<usize>, neighbourhood: Vec<usize> },
}

impl MatchResult {
    pub fn is_matched(&self) -> bool {
        matches!(self, MatchResult::Matched { .. })
    }
}

fn adjacency(xs: &[Point], ys: &[Point], radius: &Rational, seed: &SeedSpace) -> Result<Vec<Vec<usize>>> {
    xs.iter()
        .map(|x| {
            let mut row = Vec::new();
            for (b, y) in ys.iter().enumerate() {
                if &x.dist(y, seed)? < radius {
                    row.push(b);
                }
            }
            Ok(row)
        })
        .collect()
}

/// Maximum bipartite matching by repeated augmenting paths; `mate_x[a] = Some(b)`.
fn max_matching(adj: &[Vec<usize>], right: usize) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    fn augment(a: usize, adj: &[Vec<usize>], seen: &mut [bool], mx: &mut [Option<usize>], my: &mut [Option<usize>]) -> bool {
        for &b in &adj[a] {
            if seen[b] {
                continue;
            }
            seen[b] = true;
            if my[b].map_or(true, |a2| augment(a2, adj, seen, mx, my)) {
                mx[a] = Some(b);
                my[b] = Some(a);
                return true;
            }
        }
        false
    }
    let mut mx = vec![None; adj.len()];
    let mut my = vec![None; right];
    for a in 0..adj.len() {
        let mut seen = vec![false; right];
        augment(a, adj, &mut seen, &mut mx, &mut my);
    }
    (mx, my)
}

/// Perfect matching with every displacement `< radius`, or a Hall violator.
pub fn marriage_match(
    xs: &EvaluationMultiset,
    ys: &EvaluationMultiset,
    radius: &Rational,
    seed: &SeedSpace,
) -> Result<MatchResult> {
    if xs.total() != ys.total() {
        return Err(Error::CountMismatch { left: xs.total(), right: ys.total() });
    }
    let (xl, yl) = (xs.expand(), ys.expand());
    let adj = adjacency(&xl, &yl, radius, seed)?;
    let (mx, my) = max_matching(&adj, yl.len());
    if let Some(free) = mx.iter().position(Option::is_none) {
        // left vertices reachable from a free vertex by alternating paths; all their
        // neighbours are matched back into the set, so the set has one too many
        let mut in_left = vec![false; xl.len()];
        let mut in_right = vec![false; yl.len()];
        let mut stack = vec![free];
        in_left[free] = true;
        while let Some(a) = stack.pop() {
            for &b in &adj[a] {
                if !in_right[b] {
                    in_right[b] = true;
                    let a2 = my[b].expect("maximum matching leaves no augmenting path");
                    if !in_left[a2] {
                        in_left[a2] = true;
                        stack.push(a2);
                    }
                }
            }
        }
        let subset = (0..xl.len()).filter(|&a| in_left[a]).collect();
        let neighbourhood = (0..yl.len()).filter(|&b| in_right[b]).collect();
        return Ok(MatchResult::Violation { subset, neighbourhood });
    }
    let mut pairs = Vec::with_capacity(xl.len());
    let mut displacements = Vec::with_capacity(xl.len());
    for (a, b) in mx.iter().enumerate() {
        let b = b.expect("perfect");
        pairs.push((a, b));
        displacements.push(xl[a].dist(&yl[b], seed)?);
    }
    let max_displacement = displacements.iter().max().cloned().unwrap_or_else(Rational::zero);
    Ok(MatchResult::Matched { pairs, displacements, max_displacement })
}

/// Whether a perfect matching at `radius` exists; the violator on failure.
pub fn hall_check(
    xs: &EvaluationMultiset,
    ys: &EvaluationMultiset,
    radius: &Rational,
    seed: &SeedSpace,
) -> Result<(bool, Option<Vec<usize>>)> {
    Ok(match marriage_match(xs, ys, radius, seed)? {
        MatchResult::Matched { .. } => (true, None),
        MatchResult::Violation { subset, .. } => (false, Some(subset)),
    })
}

/// A finite union `O` of cover cells.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CellUnion {
    pub cells: Vec<usize>,
}

/// Cover cell: a closed box `[lo, lo + side]^m` of a cube, or a single point of a finite metric.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "cell", rename_all = "snake_case")]
pub enum Cell {
    Box {
        #[serde(with = "crate::exact::serde_qvec")]
        lo: Vec<Rational>,
        #[serde(with = "crate::exact::serde_q")]
        side: Rational,
    },
    Atom { index: usize },
}

impl Cell {
    /// Distance from a point of `X` to the cell.
    pub fn dist(&self, x: &[Rational], seed: &SeedSpace) -> Rational {
        match (self, seed) {
            (Cell::Box { lo, side }, _) => lo
                .iter()
                .zip(x)
                .map(|(l, v)| {
                    let hi = l + side;
                    if v < l {
                        l - v
                    } else if v > &hi {
                        v - hi
                    } else {
                        Rational::zero()
                    }
                })
                .max()
                .unwrap_or_else(Rational::zero),
            (Cell::Atom { index }, SeedSpace::FiniteMetric { distances }) => {
                let at = x[0].to_integer().to_usize().unwrap_or(0);
                distances[at][*index].clone()
            }
            (Cell::Atom { .. }, _) => Rational::zero(),
        }
    }
}

/// `h_O` or `g_O`, evaluated exactly from the distance to `O`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Bump {
    pub union: CellUnion,
    pub kind: BumpKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpKind {
    /// `max(1 − dist(x, O)/η, 0)`.
    Ramp,
    /// Tent of height 1 at `dist(x, O) = 3η/2`, vanishing outside `η < dist < 2η`.
    Shell,
}

impl Bump {
    pub fn dist(&self, cells: &[Cell], x: &[Rational], seed: &SeedSpace) -> Rational {
        self.union.cells.iter().map(|&c| cells[c].dist(x, seed)).min().unwrap_or_else(Rational::zero)
    }

    pub fn eval(&self, cells: &[Cell], eta: &Rational, x: &[Rational], seed: &SeedSpace) -> Rational {
        let d = self.dist(cells, x, seed);
        let zero = Rational::zero();
        match self.kind {
            BumpKind::Ramp => (Rational::one() - d / eta).max(zero),
            BumpKind::Shell => {
                let half = eta / qi(2);
                let off = (d - eta * Rational::new(3.into(), 2.into())).abs();
                (Rational::one() - off / half).max(zero)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UniquenessData {
    #[serde(with = "crate::exact::serde_q")]
    pub eta: Rational,
    pub cells: Vec<Cell>,
    /// `H₀`: the `g_O` with `O_η ≠ X`.
    pub h0: Vec<Bump>,
    /// `H₁`: every `h_O`.
    pub h1: Vec<Bump>,
    /// `min Δ(g_O)`; absent when `H₀` is empty.
    pub delta: Option<String>,
    /// Largest union size in the family.
    pub union_cap: usize,
    /// Points where the bump properties were checked.
    pub sample_points: usize,
    pub samples_ok: bool,
}

/// Grid of `(per_axis + 1)^m` points with spacing `1/per_axis`, or every point of a finite metric.
pub fn sample_grid(seed: &SeedSpace, per_axis: u64) -> Result<Vec<Vec<Rational>>> {
    match seed {
        SeedSpace::Cube { m } => {
            let side = per_axis + 1;
            let total = side.checked_pow(*m).filter(|&t| t <= CELL_LIMIT * 16).ok_or(Error::TooLarge {
                what: "sample grid",
                size: format!("{side}^{m}"),
            })?;
            Ok((0..total)
                .map(|mut k| {
                    (0..*m)
                        .map(|_| {
                            let c = k % side;
                            k /= side;
                            Rational::new(c.into(), per_axis.into())
                        })
                        .collect()
                })
                .collect())
        }
        SeedSpace::FiniteMetric { distances } => Ok((0..distances.len()).map(|i| vec![qi(i as u64)]).collect()),
        _ => Err(Error::NotApplicable(format!("no grid for {}", seed.name()))),
    }
}

/// Cover of `X` by cells of diameter at most `resolution`.
pub fn cover(seed: &SeedSpace, resolution: &Rational) -> Result<Vec<Cell>> {
    match seed {
        SeedSpace::Cube { m } => {
            let k = (Rational::one() / resolution).ceil().to_integer().to_u64().unwrap_or(u64::MAX).max(1);
            let side = Rational::new(1.into(), k.into());
            let total = k.checked_pow(*m).filter(|&t| t <= CELL_LIMIT).ok_or(Error::TooLarge {
                what: "cover",
                size: format!("{k}^{m}"),
            })?;
            Ok((0..total)
                .map(|mut idx| {
                    let lo = (0..*m)
                        .map(|_| {
                            let c = idx % k;
                            idx /= k;
                            Rational::new(c.into(), k.into())
                        })
                        .collect();
                    Cell::Box { lo, side: side.clone() }
                })
                .collect())
        }
        SeedSpace::FiniteMetric { distances } => Ok((0..distances.len()).map(|index| Cell::Atom { index }).collect()),
        _ => Err(Error::NotApplicable(format!("bump construction needs a cube or finite metric, got {}", seed.name()))),
    }
}

/// `H₀`, `H₁` and `δ` for the uniqueness argument, with unions capped at `union_cap` cells.
pub fn uniqueness_data(
    seed: &SeedSpace,
    functions: &[SampledFunction],
    eps: &Rational,
    cover_resolution: &Rational,
    union_cap: usize,
    density: &dyn Fn(&Bump, &[Cell], &Rational) -> Rational,
) -> Result<UniquenessData> {
    let eta = modulus_eta(functions, eps, &seed.diameter())?;
    if cover_resolution > &eta {
        return Err(Error::Precondition(format!(
            "cover resolution {} is coarser than eta = {}",
            fmt_q(cover_resolution),
            fmt_q(&eta)
        )));
    }
    let cells = cover(seed, cover_resolution)?;
    let unions = unions_upto(cells.len(), union_cap.max(1))?;
    // half the cover spacing, and fine enough to see the shell between η and 2η
    let per_axis = match seed {
        SeedSpace::Cube { .. } => {
            let k = (Rational::one() / cover_resolution).ceil().to_integer().to_u64().unwrap_or(1);
            (2 * k).max((qi(4) / &eta).ceil().to_integer().to_u64().unwrap_or(1))
        }
        _ => 1,
    };
    let samples = sample_grid(seed, per_axis)?;
    let mut h0 = Vec::new();
    let mut h1 = Vec::new();
    let mut ok = true;
    for u in unions {
        let ramp = Bump { union: u.clone(), kind: BumpKind::Ramp };
        let shell = Bump { union: u, kind: BumpKind::Shell };
        // O_η ≠ X is decided on the sample grid
        let escapes = samples.iter().any(|x| ramp.dist(&cells, x, seed) >= eta);
        for x in &samples {
            let h = ramp.eval(&cells, &eta, x, seed);
            ok &= h >= Rational::zero() && h <= Rational::one();
            if escapes {
                let g = shell.eval(&cells, &eta, x, seed);
                ok &= g >= Rational::zero() && g <= Rational::one();
                ok &= g.is_zero() || ramp.dist(&cells, x, seed) >= eta;
            }
        }
        if escapes {
            h0.push(shell);
        }
        h1.push(ramp);
    }
    let delta = h0.iter().map(|g| density(g, &cells, &eta)).min().map(|d| fmt_q(&d));
    Ok(UniquenessData {
        eta,
        cells,
        h0,
        h1,
        delta,
        union_cap: union_cap.max(1),
        sample_points: samples.len(),
        samples_ok: ok,
    })
}

fn unions_upto(n: usize, cap: usize) -> Result<Vec<CellUnion>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    fn rec(start: usize, n: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<CellUnion>) -> bool {
        for c in start..n {
            cur.push(c);
            out.push(CellUnion { cells: cur.clone() });
            if out.len() > UNION_LIMIT {
                return false;
            }
            if cur.len() < cap && !rec(c + 1, n, cap, cur, out) {
                return false;
            }
            cur.pop();
        }
        true
    }
    if !rec(0, n, cap, &mut current, &mut out) {
        return Err(Error::TooLarge { what: "union family", size: format!("> {UNION_LIMIT}") });
    }
    Ok(out)
}

/// Net point `y_i` with the tent `h_i` of radius `δ₀/2` around it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NetBump {
    pub index: usize,
    pub centre: Point,
    #[serde(with = "crate::exact::serde_q")]
    pub radius: Rational,
}

impl NetBump {
    pub fn eval(&self, x: &Point, seed: &SeedSpace) -> Result<Rational> {
        let d = x.dist(&self.centre, seed)?;
        Ok((Rational::one() - d / &self.radius).max(Rational::zero()))
    }
}

/// `δ`-dense net of `X` and the minimal separation `δ₀` of its points.
pub fn dense_net(seed: &SeedSpace, delta: &Rational) -> Result<(Vec<Point>, Rational)> {
    match seed {
        SeedSpace::Cube { m } => {
            // centres (2j+1)/(2K) are within 1/(2K) < δ of every point
            let k = (floor_u(&(Rational::one() / (qi(2) * delta))) + 1u32)
                .to_u64()
                .filter(|k| k.checked_pow(*m).is_some_and(|t| t <= CELL_LIMIT))
                .ok_or(Error::TooLarge { what: "net", size: format!("1/(2·{})", fmt_q(delta)) })?;
            let total = k.pow(*m);
            let pts = (0..total)
                .map(|mut idx| {
                    let coords = (0..*m)
                        .map(|_| {
                            let c = idx % k;
                            idx /= k;
                            Rational::new((2 * c + 1).into(), (2 * k).into())
                        })
                        .collect();
                    Point::single(coords)
                })
                .collect();
            let sep = if k > 1 { Rational::new(1.into(), k.into()) } else { Rational::one() };
            Ok((pts, sep))
        }
        SeedSpace::FiniteMetric { distances } => {
            let pts: Vec<Point> = (0..distances.len()).map(|i| Point::scalar(qi(i as u64))).collect();
            let mut sep: Option<Rational> = None;
            for (i, row) in distances.iter().enumerate() {
                for d in &row[i + 1..] {
                    sep = Some(sep.map_or(d.clone(), |s| s.min(d.clone())));
                }
            }
            Ok((pts, sep.unwrap_or_else(Rational::one)))
        }
        _ => Err(Error::NotApplicable(format!("no explicit net for {}", seed.name()))),
    }
}

/// `m = M d + r` with `0 ≤ r < M`, per count.
pub fn split_counts(counts: &[u64], m: u64) -> (Vec<u64>, Vec<u64>) {
    counts.iter().map(|&c| (c % m, c / m)).unzip()
}

#[derive(Clone, Debug, Serialize)]
pub struct Division {
    pub net: Vec<Point>,
    #[serde(with = "crate::exact::serde_q")]
    pub delta: Rational,
    #[serde(with = "crate::exact::serde_q")]
    pub delta0: Rational,
    /// The evaluation count must exceed this.
    pub l_bound: u64,
    /// Net index each original point snaps to.
    pub snapped: Vec<usize>,
    pub counts: Vec<u64>,
    pub theta0: EvaluationMultiset,
    pub theta1: EvaluationMultiset,
    pub n0: u64,
    pub n1: u64,
    pub m: u64,
    /// `permutation[t]` is the slot of the reconstruction `θ₀ ⊕ θ₁^{⊕M}` holding point `t`'s image.
    pub permutation: Vec<usize>,
    #[serde(with = "crate::exact::serde_q")]
    pub max_displacement: Rational,
    /// `max_f max_t |f(x_t) − f(σ x_t)|`, which is below `eps`.
    #[serde(with = "crate::exact::serde_q")]
    pub max_function_move: Rational,
}

impl Division {
    /// `θ₀` followed by `M` copies of `θ₁`, as one list.
    pub fn reconstruction(&self) -> Vec<Point> {
        let mut out = self.theta0.expand();
        let one = self.theta1.expand();
        for _ in 0..self.m {
            out.extend(one.iter().cloned());
        }
        out
    }
}

/// Snap `θ` to a net and split it as `θ₀ ⊕ θ₁^{⊕M}` with `n₀ ≤ n₁`.
pub fn divide_point_evaluation(
    seed: &SeedSpace,
    theta: &EvaluationMultiset,
    m: u64,
    density: &dyn Fn(&NetBump) -> Rational,
    functions: &[SampledFunction],
    eps: &Rational,
) -> Result<Division> {
    if m == 0 {
        return Err(Error::Invalid("M must be positive".into()));
    }
    if !eps.is_positive() {
        return Err(Error::Invalid("eps must be positive".into()));
    }
    let max_l = functions.iter().map(|f| f.lipschitz.clone()).max().unwrap_or_else(Rational::zero);
    let delta = if max_l.is_zero() { seed.diameter().max(Rational::one()) } else { eps / max_l };
    let (net, delta0) = dense_net(seed, &delta)?;
    let radius = &delta0 / qi(2);
    let bumps: Vec<NetBump> =
        net.iter().enumerate().map(|(index, c)| NetBump { index, centre: c.clone(), radius: radius.clone() }).collect();
    let min_density = bumps.iter().map(density).min().unwrap_or_else(Rational::one);
    if !min_density.is_positive() {
        return Err(Error::Precondition("density functional must be positive".into()));
    }
    let l_bound = floor_u(&(qi(m * m + m) / &min_density))
        .to_u64()
        .ok_or(Error::TooLarge { what: "L", size: "u64".into() })?;
    let n = theta.total();
    if n <= l_bound {
        return Err(Error::Precondition(format!("{n} evaluation points, need more than L = {l_bound}")));
    }
    let points = theta.expand();
    let nq = qi(n);
    for b in &bumps {
        let mut tr = Rational::zero();
        for x in &points {
            tr += b.eval(x, seed)?;
        }
        tr /= &nq;
        let want = density(b);
        if tr <= want {
            return Err(Error::Precondition(format!(
                "density fails at net point {} ({}): tr = {} <= {}",
                b.index,
                b.centre,
                fmt_q(&tr),
                fmt_q(&want)
            )));
        }
    }
    let mut snapped = Vec::with_capacity(points.len());
    let mut max_displacement = Rational::zero();
    for x in &points {
        let mut best: Option<(Rational, usize)> = None;
        for (j, y) in net.iter().enumerate() {
            let d = x.dist(y, seed)?;
            if best.as_ref().map_or(true, |b| d < b.0) {
                best = Some((d, j));
            }
        }
        let (d, j) = best.ok_or(Error::Invalid("empty net".into()))?;
        if d >= delta {
            return Err(Error::Infeasible(format!("point {x} is {} from the net", fmt_q(&d))));
        }
        max_displacement = max_displacement.max(d);
        snapped.push(j);
    }
    let mut counts = vec![0u64; net.len()];
    for &j in &snapped {
        counts[j] += 1;
    }
    let (r, d) = split_counts(&counts, m);
    let used = |parts: &[u64]| -> EvaluationMultiset {
        let (pts, ms): (Vec<Point>, Vec<u64>) =
            net.iter().zip(parts).filter(|(_, &c)| c > 0).map(|(p, &c)| (p.clone(), c)).unzip();
        EvaluationMultiset { points: pts, mults: ms }
    };
    let theta0 = used(&r);
    let theta1 = used(&d);
    let n0: u64 = r.iter().sum();
    let n1: u64 = d.iter().sum();
    if n0 > n1 {
        return Err(Error::Infeasible(format!("n0 = {n0} exceeds n1 = {n1}")));
    }
    // hand out reconstruction slots by net point, in order
    let mut slots: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut pos = 0usize;
    let net_index: BTreeMap<&Point, usize> = net.iter().enumerate().map(|(j, p)| (p, j)).collect();
    let mut push_list = |ms: &EvaluationMultiset, slots: &mut BTreeMap<usize, Vec<usize>>| {
        for (p, &c) in ms.points.iter().zip(&ms.mults) {
            let j = net_index[p];
            for _ in 0..c {
                slots.entry(j).or_default().push(pos);
                pos += 1;
            }
        }
    };
    push_list(&theta0, &mut slots);
    for _ in 0..m {
        push_list(&theta1, &mut slots);
    }
    let mut permutation = Vec::with_capacity(points.len());
    for &j in &snapped {
        let slot = slots.get_mut(&j).and_then(|v| v.pop()).ok_or(Error::Invalid("slot accounting".into()))?;
        permutation.push(slot);
    }
    let mut max_function_move = Rational::zero();
    for f in functions {
        for (x, &j) in points.iter().zip(&snapped) {
            max_function_move = max_function_move.max((f.eval(x)? - f.eval(&net[j])?).abs());
        }
    }
    Ok(Division {
        net,
        delta,
        delta0,
        l_bound,
        snapped,
        counts,
        theta0,
        theta1,
        n0,
        n1,
        m,
        permutation,
        max_displacement,
        max_function_move,
    })
}
