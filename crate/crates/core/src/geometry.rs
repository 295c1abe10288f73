//! Length functions on the trace side: l = 2 arccosh(t/2), the convex
//! function F = l/q with its one-sided derivatives, neighbour traces, the
//! sharpened triangle inequality, the corner function f = u/t and unit-ball
//! points of the length norm.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::{Field, Real};
use crate::traces::TraceMatrix;

fn require_hyperbolic(t: &Real) -> Result<()> {
    if *t <= t.lift(2) {
        return Err(Error::NotHyperbolic(t.to_sci(20)));
    }
    Ok(())
}

/// sqrt(t² - 4), the common denominator e^{l/2} - e^{-l/2}.
fn sinh_half_twice(t: &Real) -> Real {
    ((t - t.lift(2)) * (t + t.lift(2))).sqrt()
}

/// e^{l/2} = (t + sqrt(t² - 4))/2.
pub fn half_length_exp(t: &Real) -> Result<Real> {
    require_hyperbolic(t)?;
    Ok((t + sinh_half_twice(t)) / t.lift(2))
}

/// Geodesic length of a hyperbolic element with trace t.
pub fn length_of_trace(t: &Real) -> Result<Real> {
    require_hyperbolic(t)?;
    let gap = t - t.lift(2);
    let p = t.precision();
    if gap < Real::pow2(-(p.bits() as i64) / 2, p) {
        warn!("trace {} is within 2^-{} of 2; length is ill-conditioned", t.to_sci(12), p.bits() / 2);
    }
    Ok(half_length_exp(t)?.ln() * t.lift(2))
}

/// F(p/q) = l(p/q)/q.
pub fn normalized_length(l: &Real, q: i64) -> Real {
    l / l.lift(q)
}

/// log(t²/(t² - 4)), evaluated as -log(1 - 4/t²).
pub fn log_jump_factor(t: &Real) -> Result<Real> {
    require_hyperbolic(t)?;
    let x = t.lift(4) / (t * t);
    Ok(-(-x).ln_1p())
}

/// t_n for the neighbours x_n of a rational with trace t, given
/// t_{-1} = t_left and t_0 = t_right, from the closed form
/// t_n = A e^{nl/2} + B e^{-nl/2}.
pub fn neighbor_traces(t: &Real, t_left: &Real, t_right: &Real, n: i64) -> Result<Real> {
    let (a, b) = neighbor_coefficients(t, t_left, t_right)?;
    let e = half_length_exp(t)?;
    let (grow, shrink) = if n >= 0 {
        (e.powi(n as u64), (t - &e).powi(n as u64))
    } else {
        let m = n.unsigned_abs();
        ((t - &e).powi(m), e.powi(m))
    };
    Ok(a * grow + b * shrink)
}

/// t_n by iterating t_{n+1} = t t_n - t_{n-1} (or backwards).
pub fn neighbor_traces_iterated(t: &Real, t_left: &Real, t_right: &Real, n: i64) -> Real {
    let (mut prev, mut cur) = (t_left.clone(), t_right.clone());
    if n >= 0 {
        for _ in 0..n {
            let next = t * &cur - &prev;
            prev = std::mem::replace(&mut cur, next);
        }
        cur
    } else {
        for _ in 0..(-n - 1) {
            let before = t * &prev - &cur;
            cur = std::mem::replace(&mut prev, before);
        }
        prev
    }
}

/// (A, B) with A = (t'' e^{l/2} - t')/sqrt(t² - 4), B = (t' - t'' e^{-l/2})/sqrt(t² - 4).
///
/// The direct form of B cancels badly once t' and t'' are large, so B is
/// taken from A B = t²/(t² - 4), which holds because t² + t'² + t''² = t t' t''.
fn neighbor_coefficients(t: &Real, t_left: &Real, t_right: &Real) -> Result<(Real, Real)> {
    let e = half_length_exp(t)?;
    let s = sinh_half_twice(t);
    let a = (t_right * &e - t_left) / &s;
    if !a.is_positive() {
        return Err(Error::LogDomain("neighbour coefficient"));
    }
    let b = t * t / (&s * &s * &a);
    Ok((a, b))
}

/// One-sided derivatives of F at a rational.
#[derive(Clone, Debug)]
pub struct DerivativePair {
    pub left: Real,
    pub right: Real,
}

impl DerivativePair {
    /// right - left.
    pub fn jump(&self) -> Real {
        &self.right - &self.left
    }
}

/// Left and right derivatives of F at p/q, with trace t, from the traces
/// t_left = t(x_{-1}) and t_right = t(x_0) of the bracketing neighbours and
/// the denominator q_right of x_0:
///
/// right = 2q log A - l q'', left = -2q log B - l q''.
///
/// At 0/1 use (t_left, t_right, q_right) = (c, b, 1); at 1/1 use (a, c, 0).
pub fn one_sided_derivatives(
    t: &Real,
    q: i64,
    t_left: &Real,
    t_right: &Real,
    q_right: i64,
) -> Result<DerivativePair> {
    let (a, b) = neighbor_coefficients(t, t_left, t_right)?;
    let l = length_of_trace(t)?;
    let two_q = t.lift(2 * q);
    let shift = &l * t.lift(q_right);
    Ok(DerivativePair {
        left: -(&two_q * b.ln()) - &shift,
        right: &two_q * a.ln() - shift,
    })
}

/// right - left = 2q log(t²/(t² - 4)).
pub fn derivative_jump(t: &Real, q: i64) -> Result<Real> {
    Ok(log_jump_factor(t)? * t.lift(2 * q))
}

/// t^ - t, where t^ = 2 cosh((l' + l'')/2) is the trace a curve of length
/// l' + l'' would have: d = 8/((t - t~) + sqrt((t - t~)² + 16)).
pub fn additive_excess(t: &Real, t_opposite: &Real) -> Real {
    let diff = t - t_opposite;
    let root = (&diff * &diff + t.lift(16)).sqrt();
    t.lift(8) / (diff + root)
}

/// l + 2d/sqrt(t² - 4) - (l' + l''), positive for every Farey triangle;
/// `t` and `l` belong to the mediant, `t_opposite` to the far vertex.
pub fn strengthened_triangle_gap(
    t: &Real,
    t_opposite: &Real,
    l: &Real,
    l_left: &Real,
    l_right: &Real,
) -> Result<Real> {
    require_hyperbolic(t)?;
    let bound = additive_excess(t, t_opposite) * t.lift(2) / sinh_half_twice(t);
    Ok(l + bound - l_left - l_right)
}

/// l + 2/sinh(l) - (l' + l''). Negative already at the root triangle of the
/// modular torus; kept to document that the sharper constant fails.
pub fn sinh_triangle_gap(l: &Real, l_left: &Real, l_right: &Real) -> Real {
    l + l.lift(2) / l.sinh() - l_left - l_right
}

/// f = u/t for a trace matrix.
pub fn corner_ratio<T: Field>(m: &TraceMatrix<T>) -> T {
    m.u.clone() / m.t.clone()
}

/// Jump of f at a rational with trace t: -1 + sqrt(1 - 4/t²), evaluated
/// without cancellation as -(4/t²)/(1 + sqrt(1 - 4/t²)).
pub fn corner_ratio_jump(t: &Real) -> Result<Real> {
    require_hyperbolic(t)?;
    let x = t.lift(4) / (t * t);
    let root = (t.lift(1) - &x).sqrt();
    Ok(-(x / (root + t.lift(1))))
}

/// (1 - sqrt(1 - 4/t²))/2 = 1/(1 + e^l).
pub fn mcshane_term(t: &Real) -> Result<Real> {
    Ok(-corner_ratio_jump(t)? / t.lift(2))
}

/// Boundary point (q/l, p/l) of the length-norm unit ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitBallPoint {
    pub x: f64,
    pub y: f64,
}

/// Unit-ball point for homology class (q, p) of a curve of length l.
pub fn unit_ball_point(p: i64, q: i64, l: &Real) -> Result<(Real, Real)> {
    if !l.is_positive() {
        return Err(Error::Validation("length must be positive".into()));
    }
    Ok((l.lift(q) / l, l.lift(p) / l))
}

impl UnitBallPoint {
    pub fn from_reals(x: &Real, y: &Real) -> Self {
        UnitBallPoint { x: x.to_f64(), y: y.to_f64() }
    }
}
