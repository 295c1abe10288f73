//! Farey / Stern–Brocot combinatorics: mediants, parents, heights,
//! neighbour fans and breadth-first enumeration of a sector.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A reduced fraction p/q with q >= 0; 1/0 is the point at infinity.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rational {
    p: i64,
    q: i64,
}

impl Rational {
    pub const ZERO: Rational = Rational { p: 0, q: 1 };
    pub const ONE: Rational = Rational { p: 1, q: 1 };
    pub const INFINITY: Rational = Rational { p: 1, q: 0 };

    /// Builds p/q, normalising the sign so that q >= 0. Fails unless
    /// gcd(|p|, |q|) = 1.
    pub fn new(p: i64, q: i64) -> Result<Self> {
        if p.gcd(&q) != 1 {
            return Err(Error::NotReduced(p, q));
        }
        Ok(Self::normalized(p, q))
    }

    /// Builds p/q after dividing out the gcd.
    pub fn reduced(p: i64, q: i64) -> Result<Self> {
        let g = p.gcd(&q);
        if g == 0 {
            return Err(Error::NotReduced(p, q));
        }
        Ok(Self::normalized(p / g, q / g))
    }

    fn normalized(p: i64, q: i64) -> Self {
        if q < 0 || (q == 0 && p < 0) {
            Rational { p: -p, q: -q }
        } else {
            Rational { p, q }
        }
    }

    pub fn p(self) -> i64 {
        self.p
    }

    pub fn q(self) -> i64 {
        self.q
    }

    pub fn is_infinite(self) -> bool {
        self.q == 0
    }

    /// Whether the rational lies strictly inside (0, 1).
    pub fn is_interior(self) -> bool {
        self.q >= 2 && self.p > 0 && self.p < self.q
    }

    /// Determinant p_other q_self - p_self q_other.
    pub fn determinant(self, other: Rational) -> i128 {
        other.p as i128 * self.q as i128 - self.p as i128 * other.q as i128
    }

    pub fn is_adjacent(self, other: Rational) -> bool {
        self.determinant(other).abs() == 1
    }

    pub fn to_f64(self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        // 1/0 sorts above every finite value
        (self.p as i128 * other.q as i128).cmp(&(other.p as i128 * self.q as i128))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

/// A rational with its two Farey parents and the vertex opposite it across
/// the parents' edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FareyContext {
    pub target: Rational,
    pub left: Rational,
    pub right: Rational,
    pub opposite: Rational,
}

impl FareyContext {
    /// Checks the mediant, adjacency and opposite-vertex invariants.
    pub fn is_consistent(&self) -> bool {
        let (t, l, r, o) = (self.target, self.left, self.right, self.opposite);
        l.determinant(r) == 1
            && t.p == l.p + r.p
            && t.q == l.q + r.q
            && o.is_adjacent(l)
            && o.is_adjacent(r)
            && o != t
    }
}

pub fn mediant(a: Rational, b: Rational) -> Result<Rational> {
    if !a.is_adjacent(b) {
        return Err(Error::NotAdjacent(a, b));
    }
    let p = a.p.checked_add(b.p).ok_or(Error::Overflow("forming a mediant"))?;
    let q = a.q.checked_add(b.q).ok_or(Error::Overflow("forming a mediant"))?;
    // adjacency forces gcd 1
    Ok(Rational::normalized(p, q))
}

/// Modular inverse of `a` modulo `m` (m >= 2, gcd(a, m) = 1), in [1, m).
fn inverse_mod(a: i64, m: i64) -> i64 {
    let g = a.extended_gcd(&m);
    debug_assert_eq!(g.gcd, 1);
    g.x.rem_euclid(m)
}

/// Parents and opposite vertex of an interior rational, via the extended
/// Euclidean algorithm: the left parent's denominator is p^{-1} mod q.
pub fn context_of(r: Rational) -> Result<FareyContext> {
    if !r.is_interior() {
        return Err(Error::RootNode(r));
    }
    let (p, q) = (r.p, r.q);
    let q_left = inverse_mod(p, q);
    let p_left = ((p as i128 * q_left as i128 - 1) / q as i128) as i64;
    let left = Rational::normalized(p_left, q_left);
    let right = Rational::normalized(p - p_left, q - q_left);
    let opposite = Rational::normalized(right.p - left.p, right.q - left.q);
    Ok(FareyContext { target: r, left, right, opposite })
}

/// Topograph height max{|p|, |q|, |p - q|}.
pub fn height(p: i64, q: i64) -> Result<u64> {
    if p.gcd(&q) != 1 {
        return Err(Error::NotReduced(p, q));
    }
    let d = p.checked_sub(q).ok_or(Error::Overflow("computing a height"))?;
    Ok(p.unsigned_abs().max(q.unsigned_abs()).max(d.unsigned_abs()))
}

/// Every reduced p/q in (0, 1) with q <= max_q, breadth first down the
/// Stern–Brocot tree, so parents precede children.
pub fn enumerate_sector(max_q: i64) -> Vec<(Rational, FareyContext)> {
    SectorWalk::new(max_q).collect()
}

/// Lazy breadth-first walk behind [`enumerate_sector`].
pub struct SectorWalk {
    max_q: i64,
    queue: VecDeque<(Rational, Rational, Rational)>,
}

impl SectorWalk {
    pub fn new(max_q: i64) -> Self {
        let mut queue = VecDeque::new();
        queue.push_back((Rational::ZERO, Rational::ONE, Rational::INFINITY));
        SectorWalk { max_q, queue }
    }
}

impl Iterator for SectorWalk {
    type Item = (Rational, FareyContext);

    fn next(&mut self) -> Option<Self::Item> {
        while let Some((left, right, opposite)) = self.queue.pop_front() {
            // q grows down the tree, so a too-deep node ends its subtree
            if left.q + right.q > self.max_q {
                continue;
            }
            let target = Rational::normalized(left.p + right.p, left.q + right.q);
            self.queue.push_back((left, target, right));
            self.queue.push_back((target, right, left));
            return Some((target, FareyContext { target, left, right, opposite }));
        }
        None
    }
}

/// The n-th rational of the fan adjacent to `ctx.target`:
/// |p'' + n p| / |q'' + n q|; n = 0 gives the right parent and n = -1 the
/// left parent.
pub fn neighbor_sequence(ctx: &FareyContext, n: i64) -> Result<Rational> {
    let (t, r) = (ctx.target, ctx.right);
    let p = n
        .checked_mul(t.p)
        .and_then(|x| x.checked_add(r.p))
        .ok_or(Error::Overflow("walking a neighbour fan"))?;
    let q = n
        .checked_mul(t.q)
        .and_then(|x| x.checked_add(r.q))
        .ok_or(Error::Overflow("walking a neighbour fan"))?;
    Ok(Rational::normalized(p.abs(), q.abs()))
}

/// All rationals in [0, 1] with q <= n, in increasing order (the Farey
/// sequence of order n).
pub fn farey_sequence(n: i64) -> Vec<Rational> {
    let mut out = vec![Rational::ZERO];
    let (mut a, mut b, mut c, mut d) = (0i64, 1i64, 1i64, n);
    while c <= n {
        let k = (n + b) / d;
        let (na, nb) = (c, d);
        c = k * c - a;
        d = k * d - b;
        a = na;
        b = nb;
        out.push(Rational::normalized(a, b));
    }
    out
}
