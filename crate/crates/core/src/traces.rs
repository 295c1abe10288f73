//! Traces of simple closed curves for a fixed base triple: the Vieta
//! recursion over the Farey tree, the 2×2 matrix representation used as an
//! independent oracle, and integer Markoff triples.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::farey::{self, FareyContext, Rational};
use crate::geometry;
use crate::precision::{Field, Precision, Real, Ring};

/// Traces (a, b, c) of three simple closed curves meeting once, with
/// a, b, c > 2 and a² + b² + c² = abc.
#[derive(Clone, Debug)]
pub struct BaseTriple {
    a: Real,
    b: Real,
    c: Real,
    precision: Precision,
    exact: Option<[BigInt; 3]>,
}

impl BaseTriple {
    pub fn new(a: Real, b: Real, c: Real, precision: Precision) -> Result<Self> {
        let (a, b, c) = (
            a.with_precision(precision),
            b.with_precision(precision),
            c.with_precision(precision),
        );
        let two = Real::from_i64(2, precision);
        for (name, x) in [("a", &a), ("b", &b), ("c", &c)] {
            if *x <= two {
                return Err(Error::DegenerateTriple(format!("{name} = {}", x.to_sci(20))));
            }
        }
        let defect = markoff_defect(&a, &b, &c);
        if defect > precision.triple_tolerance() {
            return Err(Error::RelationViolated(defect.to_sci(6)));
        }
        let exact = match (a.to_bigint_exact(), b.to_bigint_exact(), c.to_bigint_exact()) {
            (Some(x), Some(y), Some(z)) if &x * &x + &y * &y + &z * &z == &x * &y * &z => {
                Some([x, y, z])
            }
            _ => None,
        };
        Ok(BaseTriple { a, b, c, precision, exact })
    }

    /// Parses three decimal strings directly at the working precision.
    pub fn parse(a: &str, b: &str, c: &str, precision: Precision) -> Result<Self> {
        BaseTriple::new(
            Real::parse(a, precision)?,
            Real::parse(b, precision)?,
            Real::parse(c, precision)?,
            precision,
        )
    }

    pub fn from_integers(a: i64, b: i64, c: i64, precision: Precision) -> Result<Self> {
        BaseTriple::new(
            Real::from_i64(a, precision),
            Real::from_i64(b, precision),
            Real::from_i64(c, precision),
            precision,
        )
    }

    /// The modular torus (3, 3, 3).
    pub fn modular(precision: Precision) -> Self {
        BaseTriple::from_integers(3, 3, 3, precision).expect("(3,3,3) is a Markoff triple")
    }

    pub fn a(&self) -> &Real {
        &self.a
    }
    pub fn b(&self) -> &Real {
        &self.b
    }
    pub fn c(&self) -> &Real {
        &self.c
    }
    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// Integer traces, when the triple is an integer Markoff–Fricke solution.
    pub fn exact(&self) -> Option<&[BigInt; 3]> {
        self.exact.as_ref()
    }

    /// Seeds (t_{0/1}, t_{1/1}, t_{1/0}) for one sector.
    pub fn seeds(&self, sector: Sector) -> [Real; 3] {
        let [x, y, z] = sector.rotate([&self.a, &self.b, &self.c]);
        [x.clone(), y.clone(), z.clone()]
    }

    pub fn exact_seeds(&self, sector: Sector) -> Option<[BigInt; 3]> {
        let e = self.exact.as_ref()?;
        let [x, y, z] = sector.rotate([&e[0], &e[1], &e[2]]);
        Some([x.clone(), y.clone(), z.clone()])
    }

    /// The same triple with its entries permuted: `perm[i]` is the index of
    /// the original entry placed at position i.
    pub fn permuted(&self, perm: [usize; 3]) -> Result<Self> {
        let v = [&self.a, &self.b, &self.c];
        BaseTriple::new(v[perm[0]].clone(), v[perm[1]].clone(), v[perm[2]].clone(), self.precision)
    }
}

/// |a² + b² + c² - abc| / abc.
pub fn markoff_defect(a: &Real, b: &Real, c: &Real) -> Real {
    let abc = a * b * c;
    ((a * a + b * b + c * c - &abc) / &abc).abs()
}

/// One of the three Farey-tree pieces covering the topograph, named by the
/// pair of base traces at its endpoints 0/1 and 1/1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sector {
    #[serde(rename = "ab")]
    Ab,
    #[serde(rename = "bc")]
    Bc,
    #[serde(rename = "ca")]
    Ca,
}

impl Sector {
    pub const ALL: [Sector; 3] = [Sector::Ab, Sector::Bc, Sector::Ca];

    /// Places (a, b, c) at the sector's (0/1, 1/1, 1/0).
    pub fn rotate<T>(self, [a, b, c]: [T; 3]) -> [T; 3] {
        match self {
            Sector::Ab => [a, b, c],
            Sector::Bc => [b, c, a],
            Sector::Ca => [c, a, b],
        }
    }

    /// Global projective coordinates [p:q] of a sector-local rational, with
    /// a, b, c sitting at 0/1, 1/1, 1/0. Each map is an orientation
    /// preserving element of SL2(Z) permuting the three base vertices.
    pub fn to_projective(self, r: Rational) -> (i64, i64) {
        let (p, q) = (r.p(), r.q());
        match self {
            Sector::Ab => (p, q),
            Sector::Bc => (q, q - p),
            Sector::Ca => (q - p, -p),
        }
    }

    /// Topograph height of a sector-local rational.
    pub fn height(self, r: Rational) -> Result<u64> {
        let (p, q) = self.to_projective(r);
        farey::height(p, q)
    }

    pub fn label(self) -> &'static str {
        match self {
            Sector::Ab => "ab",
            Sector::Bc => "bc",
            Sector::Ca => "ca",
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Sector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ab" => Ok(Sector::Ab),
            "bc" => Ok(Sector::Bc),
            "ca" => Ok(Sector::Ca),
            _ => Err(Error::Parse(format!("unknown sector {s:?} (expected ab, bc or ca)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl std::str::FromStr for Branch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plus" | "+" => Ok(Branch::Plus),
            "minus" | "-" => Ok(Branch::Minus),
            _ => Err(Error::Parse(format!("unknown branch {s:?} (expected plus or minus)"))),
        }
    }
}

/// Solves a² + b² + c² = abc for c: c = (ab ± sqrt(a²b² - 4a² - 4b²)) / 2.
pub fn complete_triple(a: &Real, b: &Real, branch: Branch, precision: Precision) -> Result<BaseTriple> {
    let a = a.with_precision(precision);
    let b = b.with_precision(precision);
    let two = Real::from_i64(2, precision);
    if a <= two || b <= two {
        return Err(Error::DegenerateTriple("a and b must exceed 2".into()));
    }
    let four = Real::from_i64(4, precision);
    let ab = &a * &b;
    let disc = &ab * &ab - &four * (&a * &a + &b * &b);
    if disc.is_negative() {
        return Err(Error::NoHyperbolicTorus);
    }
    let root = disc.sqrt();
    let c = match branch {
        Branch::Plus => (&ab + &root) / &two,
        Branch::Minus => (&ab - &root) / &two,
    };
    BaseTriple::new(a, b, c, precision)
}

/// A curve's trace with its length and height.
#[derive(Clone, Debug)]
pub struct TraceNode {
    pub curve: Rational,
    pub t: Real,
    pub l: Real,
    pub h: u64,
}

/// Traces of one sector, keyed by rational, including the seeds at 0/1,
/// 1/1 and 1/0. Rows are stored in enumeration order.
#[derive(Clone, Debug)]
pub struct TraceTable<T> {
    seeds: [T; 3],
    order: Vec<(Rational, FareyContext)>,
    traces: HashMap<Rational, T>,
}

impl<T: Ring> TraceTable<T> {
    /// Runs the Vieta recursion t = t' t'' - t~ over every p/q in (0, 1) with
    /// q <= max_q.
    pub fn build(seeds: [T; 3], max_q: i64) -> Result<Self> {
        let mut traces = HashMap::new();
        traces.insert(Rational::ZERO, seeds[0].clone());
        traces.insert(Rational::ONE, seeds[1].clone());
        traces.insert(Rational::INFINITY, seeds[2].clone());
        let order = farey::enumerate_sector(max_q);
        for (r, ctx) in &order {
            let t = trace_at(r, ctx, &traces)?;
            traces.insert(*r, t);
        }
        Ok(TraceTable { seeds, order, traces })
    }

    pub fn seeds(&self) -> &[T; 3] {
        &self.seeds
    }

    /// Same table with every trace converted.
    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> TraceTable<U> {
        TraceTable {
            seeds: [f(&self.seeds[0]), f(&self.seeds[1]), f(&self.seeds[2])],
            order: self.order.clone(),
            traces: self.traces.iter().map(|(r, t)| (*r, f(t))).collect(),
        }
    }

    pub fn get(&self, r: Rational) -> Option<&T> {
        self.traces.get(&r)
    }

    /// Interior rationals with their contexts, parents before children.
    pub fn interior(&self) -> &[(Rational, FareyContext)] {
        &self.order
    }

    /// Interior rationals with their traces, in enumeration order.
    pub fn interior_traces(&self) -> impl Iterator<Item = (&Rational, &FareyContext, &T)> {
        self.order.iter().map(move |(r, c)| (r, c, &self.traces[r]))
    }

    /// The three traces of a context: (left, right, opposite).
    pub fn parents(&self, ctx: &FareyContext) -> Option<(&T, &T, &T)> {
        Some((
            self.traces.get(&ctx.left)?,
            self.traces.get(&ctx.right)?,
            self.traces.get(&ctx.opposite)?,
        ))
    }
}

/// Real traces of one sector, computed exactly first when the base triple
/// is integral.
pub fn sector_table(base: &BaseTriple, sector: Sector, max_q: i64) -> Result<TraceTable<Real>> {
    let precision = base.precision();
    match base.exact_seeds(sector) {
        Some(seeds) => Ok(TraceTable::build(seeds, max_q)?.map(|t| Real::from_bigint(t, precision))),
        None => TraceTable::build(base.seeds(sector), max_q),
    }
}

/// One recursion step, t = t' t'' - t~, reading the parents from `memo`.
pub fn trace_at<T: Ring>(r: &Rational, ctx: &FareyContext, memo: &HashMap<Rational, T>) -> Result<T> {
    let get = |x: &Rational| memo.get(x).ok_or(Error::EnumerationOrder(*r));
    let (left, right, opposite) = (get(&ctx.left)?, get(&ctx.right)?, get(&ctx.opposite)?);
    Ok(left.clone() * right.clone() - opposite.clone())
}

/// A [`TraceNode`] for a sector-local rational with its length and height.
pub fn trace_node(sector: Sector, r: Rational, t: &Real) -> Result<TraceNode> {
    Ok(TraceNode {
        curve: r,
        t: t.clone(),
        l: geometry::length_of_trace(t)?,
        h: sector.height(r)?,
    })
}

/// Trace of any r in [0, 1] (or 1/0) by descending the Stern–Brocot tree
/// from the root triangle; independent of any enumeration.
pub fn trace_by_descent<T: Ring>(seeds: &[T; 3], r: Rational) -> Result<T> {
    if r == Rational::ZERO {
        return Ok(seeds[0].clone());
    }
    if r == Rational::ONE {
        return Ok(seeds[1].clone());
    }
    if r.is_infinite() {
        return Ok(seeds[2].clone());
    }
    if !r.is_interior() {
        return Err(Error::Validation(format!("{r} is outside [0, 1]")));
    }
    let (mut left, mut right) = (Rational::ZERO, Rational::ONE);
    let (mut tl, mut tr, mut to) = (seeds[0].clone(), seeds[1].clone(), seeds[2].clone());
    loop {
        let m = farey::mediant(left, right)?;
        let tm = tl.clone() * tr.clone() - to.clone();
        if m == r {
            return Ok(tm);
        }
        if r < m {
            right = m;
            to = std::mem::replace(&mut tr, tm);
        } else {
            left = m;
            to = std::mem::replace(&mut tl, tm);
        }
    }
}

/// The matrix [[u, u - v], [t, t - u]] with v = (1 + u²)/t. Its trace is t.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceMatrix<T> {
    pub u: T,
    pub v: T,
    pub t: T,
}

impl<T: Field> TraceMatrix<T> {
    pub fn from_ut(u: T, t: T) -> Self {
        let one = u.lift(1);
        let v = (one + u.clone() * u.clone()) / t.clone();
        TraceMatrix { u, v, t }
    }

    pub fn entries(&self) -> [[T; 2]; 2] {
        [
            [self.u.clone(), self.u.clone() - self.v.clone()],
            [self.t.clone(), self.t.clone() - self.u.clone()],
        ]
    }

    pub fn trace(&self) -> T {
        let [[a, _], [_, d]] = self.entries();
        a + d
    }

    /// t v - u².
    pub fn determinant(&self) -> T {
        self.t.clone() * self.v.clone() - self.u.clone() * self.u.clone()
    }

    /// M' M'' through the entry recurrences
    /// u = u'u'' + u't'' - v't'', t = t'u'' + t't'' - u't''.
    pub fn compose(&self, right: &Self) -> Self {
        let (l, r) = (self, right);
        let u = l.u.clone() * r.u.clone() + l.u.clone() * r.t.clone() - l.v.clone() * r.t.clone();
        let t = l.t.clone() * r.u.clone() + l.t.clone() * r.t.clone() - l.u.clone() * r.t.clone();
        TraceMatrix::from_ut(u, t)
    }
}

/// Generic 2×2 product, a second route alongside [`TraceMatrix::compose`].
pub fn mat_mul<T: Ring>(x: &[[T; 2]; 2], y: &[[T; 2]; 2]) -> [[T; 2]; 2] {
    let e = |i: usize, j: usize| x[i][0].clone() * y[0][j].clone() + x[i][1].clone() * y[1][j].clone();
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

/// Inverse of a determinant-one 2×2 matrix.
pub fn mat_inv_unimodular<T: Ring>(x: &[[T; 2]; 2]) -> [[T; 2]; 2] {
    let zero = x[0][0].lift(0);
    [
        [x[1][1].clone(), zero.clone() - x[0][1].clone()],
        [zero.clone() - x[1][0].clone(), x[0][0].clone()],
    ]
}

/// tr(X Y X^-1 Y^-1).
pub fn commutator_trace<T: Ring>(x: &[[T; 2]; 2], y: &[[T; 2]; 2]) -> T {
    let m = mat_mul(&mat_mul(x, y), &mat_mul(&mat_inv_unimodular(x), &mat_inv_unimodular(y)));
    m[0][0].clone() + m[1][1].clone()
}

/// Generators M_{0/1}, M_{1/1} and M_{1/0} = M_{0/1} M_{1/1}^{-1} for the
/// seeds (a, b, c) = (t_{0/1}, t_{1/1}, t_{1/0}).
pub fn seed_matrices_from<T: Field>(seeds: &[T; 3], tolerance: impl Fn(&T) -> bool) -> Result<[TraceMatrix<T>; 3]> {
    let [a, b, c] = seeds.clone();
    let m0 = TraceMatrix::from_ut(c.clone() / b.clone(), a.clone());
    let m1 = TraceMatrix::from_ut(a.lift(0), b.clone());
    let m_inf = TraceMatrix::from_ut(c.clone() - a.clone() / b.clone(), c.clone());
    let [e0, e1, ei] = [m0.entries(), m1.entries(), m_inf.entries()];
    for (x, y) in [(&e0, &e1), (&e1, &ei), (&ei, &e0)] {
        let k = commutator_trace(x, y);
        let defect = k.clone() + a.lift(2);
        if !tolerance(&defect) {
            return Err(Error::InconsistentBase(format!("{k:?}")));
        }
    }
    Ok([m0, m1, m_inf])
}

/// Seed matrices at working precision for one sector of `base`.
pub fn seed_matrices(base: &BaseTriple, sector: Sector) -> Result<[TraceMatrix<Real>; 3]> {
    let seeds = base.seeds(sector);
    let scale = seeds.iter().fold(Real::one(base.precision()), |m, x| m.max(x.clone()));
    let tol = base.precision().triple_tolerance() * scale.powi(4);
    seed_matrices_from(&seeds, |d| d.abs() <= tol)
}

/// Exact seed matrices for an integer base triple.
pub fn exact_seed_matrices(base: &BaseTriple, sector: Sector) -> Option<[TraceMatrix<BigRational>; 3]> {
    let seeds = base.exact_seeds(sector)?.map(BigRational::from_integer);
    seed_matrices_from(&seeds, |d| *d == d.lift(0)).ok()
}

/// M_{p/q} for r in [0, 1] ∪ {1/0}, composing down the Stern–Brocot path
/// with the entry recurrences.
pub fn matrix_at<T: Field>(seeds: &[TraceMatrix<T>; 3], r: Rational) -> Result<TraceMatrix<T>> {
    if r == Rational::ZERO {
        return Ok(seeds[0].clone());
    }
    if r == Rational::ONE {
        return Ok(seeds[1].clone());
    }
    if r.is_infinite() {
        return Ok(seeds[2].clone());
    }
    if !r.is_interior() {
        return Err(Error::Validation(format!("{r} is outside [0, 1]")));
    }
    let (mut left, mut right) = (Rational::ZERO, Rational::ONE);
    let (mut ml, mut mr) = (seeds[0].clone(), seeds[1].clone());
    loop {
        let m = farey::mediant(left, right)?;
        let mm = ml.compose(&mr);
        if m == r {
            return Ok(mm);
        }
        if r < m {
            right = m;
            mr = mm;
        } else {
            left = m;
            ml = mm;
        }
    }
}

/// Sorted positive integer solution of x² + y² + z² = 3xyz.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MarkoffTriple {
    pub x: BigUint,
    pub y: BigUint,
    pub z: BigUint,
}

impl MarkoffTriple {
    fn sorted(mut v: [BigUint; 3]) -> Self {
        v.sort();
        let [x, y, z] = v;
        MarkoffTriple { x, y, z }
    }

    pub fn satisfies_equation(&self) -> bool {
        let (x, y, z) = (&self.x, &self.y, &self.z);
        x * x + y * y + z * z == BigUint::from(3u32) * x * y * z
    }
}

impl Ord for MarkoffTriple {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.z, &self.y, &self.x).cmp(&(&other.z, &other.y, &other.x))
    }
}

impl PartialOrd for MarkoffTriple {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// All Markoff triples with largest entry <= max_z, walking the Markoff tree
/// from (1, 1, 1) by Vieta moves. Sorted by (z, y, x).
pub fn enumerate_markoff(max_z: &BigUint) -> Vec<MarkoffTriple> {
    let one = BigUint::one();
    let three = BigUint::from(3u32);
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    let root = MarkoffTriple::sorted([one.clone(), one.clone(), one]);
    if root.z <= *max_z {
        seen.insert(root.clone());
        queue.push_back(root);
    }
    while let Some(m) = queue.pop_front() {
        let v = [m.x.clone(), m.y.clone(), m.z.clone()];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let prod = &three * &v[j] * &v[k];
            // 3yz - x is positive for every Markoff triple
            if prod <= v[i] {
                continue;
            }
            let mut w = v.clone();
            w[i] = prod - &v[i];
            let n = MarkoffTriple::sorted(w);
            if n.z <= *max_z && seen.insert(n.clone()) {
                queue.push_back(n);
            }
        }
    }
    seen.into_iter().collect()
}
