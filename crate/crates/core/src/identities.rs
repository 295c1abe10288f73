//! Truncated evaluations of the product identity and McShane's identity,
//! per sector and over the whole topograph.

use std::collections::{BTreeMap, HashSet};

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::farey::{self, Rational};
use crate::geometry::{self, DerivativePair};
use crate::precision::{CompensatedSum, Precision, Real};
use crate::traces::{self, BaseTriple, Sector, TraceTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdentityKind {
    Product,
    Mcshane,
}

/// A simple closed curve located in the topograph. Seeds carry
/// `sector: None` and their own global coordinates as `curve`.
#[derive(Clone, Debug)]
pub struct Curve {
    pub sector: Option<Sector>,
    /// Sector-local rational.
    pub curve: Rational,
    /// Global projective coordinates [p:q], normalized to q >= 0.
    pub projective: (i64, i64),
    pub height: u64,
    pub trace: Real,
}

/// One curve's contribution.
#[derive(Clone, Debug)]
pub struct Term {
    pub curve: Curve,
    /// h log(t²/(t² - 4)) for the product, 1/(1 + e^l) for McShane.
    pub value: Real,
}

#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub kind: IdentityKind,
    pub base: BaseTriple,
    pub max_height: u64,
    pub terms_used: usize,
    /// For the product, the logarithm of the partial product.
    pub log_partial: Real,
    pub partial: Real,
    pub target: Real,
    /// |partial - target| / |target|.
    pub residual: Real,
    pub precision_bits: usize,
    pub monotone: bool,
    /// Running value of the accumulated quantity (log-product or sum)
    /// after each height 1..=max_height.
    pub running: Vec<Real>,
    /// Contribution of height max_height + 1, used by [`tail_bound`].
    pub frontier: Real,
    pub terms: Option<Vec<Term>>,
}

/// Global projective coordinates normalized to q > 0, or [1:0].
fn normalize_projective((p, q): (i64, i64)) -> (i64, i64) {
    if q < 0 || (q == 0 && p < 0) {
        (-p, -q)
    } else {
        (p, q)
    }
}

/// Every curve with height <= max_height: the three seeds, then the open
/// interior of each sector. Sorted by (height, sector, p/q).
pub fn curves_to_height(base: &BaseTriple, max_height: u64) -> Result<Vec<Curve>> {
    let max_q = i64::try_from(max_height).map_err(|_| Error::Overflow("converting max height"))?;
    let tables: Vec<(Sector, TraceTable<Real>)> = Sector::ALL
        .par_iter()
        .map(|&s| traces::sector_table(base, s, max_q.max(2)).map(|t| (s, t)))
        .collect::<Result<_>>()?;

    let mut curves = Vec::new();
    let seeds = [
        (Rational::ZERO, base.a().clone()),
        (Rational::ONE, base.b().clone()),
        (Rational::INFINITY, base.c().clone()),
    ];
    for (r, t) in seeds {
        curves.push(Curve { sector: None, curve: r, projective: (r.p(), r.q()), height: 1, trace: t });
    }
    for (sector, table) in &tables {
        for (r, _, t) in table.interior_traces() {
            let height = sector.height(*r)?;
            if height <= max_height {
                curves.push(Curve {
                    sector: Some(*sector),
                    curve: *r,
                    projective: normalize_projective(sector.to_projective(*r)),
                    height,
                    trace: t.clone(),
                });
            }
        }
    }

    let mut seen = HashSet::new();
    for c in &curves {
        if !seen.insert(c.projective) {
            return Err(Error::Assembly(format!(
                "curve {:?} produced twice ({} in {:?})",
                c.projective, c.curve, c.sector
            )));
        }
    }
    curves.sort_by_key(|x| (x.height, x.sector, x.curve));
    Ok(curves)
}

fn evaluate(
    kind: IdentityKind,
    base: &BaseTriple,
    max_height: u64,
    emit_terms: bool,
) -> Result<IdentityReport> {
    if max_height < 1 {
        return Err(Error::Validation("max height must be at least 1".into()));
    }
    let precision = base.precision();
    let curves = curves_to_height(base, max_height + 1)?;

    let value_of = |h: u64, t: &Real| -> Result<Real> {
        match kind {
            IdentityKind::Product => Ok(geometry::log_jump_factor(t)? * t.lift(h as i64)),
            IdentityKind::Mcshane => geometry::mcshane_term(t),
        }
    };
    let values: Vec<Real> = curves
        .par_iter()
        .map(|c| value_of(c.height, &c.trace))
        .collect::<Result<_>>()?;

    let mut sum = CompensatedSum::new(precision);
    let mut frontier = CompensatedSum::new(precision);
    let mut running = Vec::with_capacity(max_height as usize);
    let mut monotone = true;
    let mut level = 1;
    let mut terms = Vec::new();
    let mut terms_used = 0;
    for (curve, v) in curves.into_iter().zip(values) {
        if !v.is_positive() {
            monotone = false;
        }
        if curve.height > max_height {
            frontier.add(&v);
            continue;
        }
        while level < curve.height {
            running.push(sum.value());
            level += 1;
        }
        sum.add(&v);
        terms_used += 1;
        if emit_terms {
            terms.push(Term { curve, value: v });
        }
    }
    running.push(sum.value());
    monotone &= running.windows(2).all(|w| w[1] > w[0]);

    let accumulated = sum.value();
    let (log_partial, partial, target, residual) = match kind {
        IdentityKind::Product => {
            let log_target = [base.a(), base.b(), base.c()]
                .iter()
                .map(|t| geometry::half_length_exp(t).map(|e| e.ln()))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(Real::zero(precision), |acc, x| acc + x);
            let gap = &accumulated - &log_target;
            let residual = (gap.exp() - Real::one(precision)).abs();
            monotone &= !gap.is_positive();
            (accumulated.clone(), accumulated.exp(), log_target.exp(), residual)
        }
        IdentityKind::Mcshane => {
            let target = Real::one(precision) / Real::from_i64(2, precision);
            let residual = (&accumulated - &target).abs() / &target;
            monotone &= accumulated < target;
            (accumulated.clone(), accumulated, target, residual)
        }
    };

    Ok(IdentityReport {
        kind,
        base: base.clone(),
        max_height,
        terms_used,
        log_partial,
        partial,
        target,
        residual,
        precision_bits: precision.bits(),
        monotone,
        running,
        frontier: frontier.value(),
        terms: emit_terms.then_some(terms),
    })
}

/// ∏ (t²/(t² - 4))^h over all curves with height <= max_height, against
/// ∏_{a,b,c} (t + sqrt(t² - 4))/2.
pub fn full_product(base: &BaseTriple, max_height: u64, emit_terms: bool) -> Result<IdentityReport> {
    evaluate(IdentityKind::Product, base, max_height, emit_terms)
}

/// Σ 1/(1 + e^l) over all curves with height <= max_height, against 1/2.
pub fn full_mcshane(base: &BaseTriple, max_height: u64, emit_terms: bool) -> Result<IdentityReport> {
    evaluate(IdentityKind::Mcshane, base, max_height, emit_terms)
}

/// Heuristic bound on what the truncation at `max_height` leaves out, in
/// the same units as `residual`. Level contributions oscillate with the
/// number of curves per height, so the decay rate r is the geometric mean
/// over the last six heights, and the frontier amplitude is the largest
/// level of that window projected forward at rate r. The tail is that
/// amplitude summed as a geometric series, doubled. Not a proof.
pub fn tail_bound(report: &IdentityReport) -> Result<Real> {
    const WINDOW: usize = 6;
    let precision = Precision::new(report.precision_bits)?;
    let mut levels: Vec<Real> = report
        .running
        .iter()
        .scan(Real::zero(precision), |prev, x| {
            let level = x - &*prev;
            *prev = x.clone();
            Some(level)
        })
        .collect();
    levels.push(report.frontier.clone());
    let n = levels.len();
    if n < 3 {
        return Err(Error::Validation("tail bound needs max height >= 2".into()));
    }
    let k = WINDOW.min(n - 1);
    let (first, last) = (&levels[n - 1 - k], &levels[n - 1]);
    if !first.is_positive() || !last.is_positive() {
        return Err(Error::Validation("level contributions must be positive".into()));
    }
    let ratio = ((last / first).ln() / Real::from_i64(k as i64, precision)).exp();
    let one = Real::one(precision);
    if ratio >= one {
        return Err(Error::Validation("level contributions are not decaying".into()));
    }
    let amplitude = (0..=k)
        .map(|j| &levels[n - 1 - j] * ratio.powi(j as u64))
        .fold(Real::zero(precision), Real::max);
    let tail = amplitude / (&one - ratio) * Real::from_i64(2, precision);
    Ok(match report.kind {
        IdentityKind::Product => tail.exp() - one,
        IdentityKind::Mcshane => tail / &report.target,
    })
}

/// Trace with total exponent Σh, for an integer base triple, over curves with
/// height <= max_height; sorted by trace.
pub fn factor_table(base: &BaseTriple, max_height: u64) -> Result<Vec<(BigInt, u64)>> {
    let exact = base
        .exact()
        .ok_or_else(|| Error::Validation("factor table needs an integer base triple".into()))?;
    let max_q = i64::try_from(max_height).map_err(|_| Error::Overflow("converting max height"))?;
    let mut table: BTreeMap<BigInt, u64> = BTreeMap::new();
    for t in exact {
        *table.entry(t.clone()).or_default() += 1;
    }
    for sector in Sector::ALL {
        let seeds = base.exact_seeds(sector).expect("integer base");
        let traces = TraceTable::build(seeds, max_q)?;
        for (r, _, t) in traces.interior_traces() {
            let h = sector.height(*r)?;
            if h <= max_height {
                *table.entry(t.clone()).or_default() += h;
            }
        }
    }
    Ok(table.into_iter().collect())
}

/// Derivatives of F at the two ends of a sector with seeds (a, b, c):
/// 0/1 has neighbours (c, b) and q'' = 1, 1/1 has (a, c) and q'' = 0.
pub fn endpoint_derivatives(seeds: &[Real; 3]) -> Result<(DerivativePair, DerivativePair)> {
    let [a, b, c] = seeds;
    let at_zero = geometry::one_sided_derivatives(a, 1, c, b, 1)?;
    let at_one = geometry::one_sided_derivatives(b, 1, a, c, 0)?;
    Ok((at_zero, at_one))
}

/// Derivatives of F at any rational of [0, 1] in a computed table.
pub fn derivatives_at(table: &TraceTable<Real>, r: Rational) -> Result<DerivativePair> {
    if r == Rational::ZERO {
        return Ok(endpoint_derivatives(table.seeds())?.0);
    }
    if r == Rational::ONE {
        return Ok(endpoint_derivatives(table.seeds())?.1);
    }
    let ctx = farey::context_of(r)?;
    let get = |x: Rational| table.get(x).ok_or(Error::EnumerationOrder(r));
    geometry::one_sided_derivatives(get(r)?, r.q(), get(ctx.left)?, get(ctx.right)?, ctx.right.q())
}

#[derive(Clone, Debug)]
pub struct SectorProduct {
    pub log_partial: Real,
    pub partial: Real,
    /// √(a²-4)√(b²-4) / ((a - c(b - √(b²-4))/2)(b - c(a - √(a²-4))/2)).
    pub target: Real,
    /// exp((λ(1/1) - ρ(0/1))/2) from the computed one-sided derivatives.
    pub derivative_target: Real,
}

/// ∏ (t²/(t² - 4))^q over p/q in (0, 1) with q <= max_q for one sector.
pub fn sector_product(base: &BaseTriple, sector: Sector, max_q: i64) -> Result<SectorProduct> {
    if max_q < 2 {
        return Err(Error::Validation("max q must be at least 2".into()));
    }
    let precision = base.precision();
    let table = traces::sector_table(base, sector, max_q)?;
    let mut sum = CompensatedSum::new(precision);
    for (r, _, t) in table.interior_traces() {
        sum.add(&(geometry::log_jump_factor(t)? * t.lift(r.q())));
    }
    let log_partial = sum.value();

    let [a, b, c] = base.seeds(sector);
    let two = Real::from_i64(2, precision);
    let four = Real::from_i64(4, precision);
    let sa = (&a * &a - &four).sqrt();
    let sb = (&b * &b - &four).sqrt();
    let target = &sa * &sb / ((&a - &c * (&b - &sb) / &two) * (&b - &c * (&a - &sa) / &two));

    let (at_zero, at_one) = endpoint_derivatives(&[a, b, c])?;
    let derivative_target = ((at_one.left - at_zero.right) / two).exp();
    Ok(SectorProduct { partial: log_partial.exp(), log_partial, target, derivative_target })
}

/// One depth of the telescoping check.
#[derive(Clone, Debug)]
pub struct TelescopingRow {
    pub depth: i64,
    /// ρ(0/1) + Σ jumps + Σ (λ(right) - ρ(left)) over consecutive Farey
    /// neighbours of order `depth`.
    pub assembled: Real,
    /// λ(1/1).
    pub target: Real,
    /// |assembled - target| / Σ|terms|.
    pub residual: Real,
}

/// Walks from ρ(0/1) to λ(1/1) across [0, 1] at each Farey order 1..=max_q:
/// the closed-form jumps at rationals of order <= depth plus the computed
/// derivative gaps between consecutive neighbours must land on λ(1/1).
pub fn telescoping_check(base: &BaseTriple, sector: Sector, max_q: i64) -> Result<Vec<TelescopingRow>> {
    let precision = base.precision();
    let table = traces::sector_table(base, sector, max_q.max(2))?;
    let mut derivatives = BTreeMap::new();
    for r in farey::farey_sequence(max_q) {
        derivatives.insert(r, derivatives_at(&table, r)?);
    }
    let start = derivatives[&Rational::ZERO].right.clone();
    let target = derivatives[&Rational::ONE].left.clone();

    let mut rows = Vec::new();
    for depth in 1..=max_q {
        let mut sum = CompensatedSum::new(precision);
        let mut scale = CompensatedSum::new(precision);
        let mut add = |x: Real| {
            scale.add(&x.abs());
            sum.add(&x);
        };
        add(start.clone());
        let sequence = farey::farey_sequence(depth);
        for r in &sequence[1..sequence.len() - 1] {
            add(geometry::derivative_jump(&table.get(*r).expect("in table").clone(), r.q())?);
        }
        for w in sequence.windows(2) {
            add(&derivatives[&w[1]].left - &derivatives[&w[0]].right);
        }
        let assembled = sum.value();
        let residual = (&assembled - &target).abs() / scale.value().max(Real::one(precision));
        rows.push(TelescopingRow { depth, assembled, target: target.clone(), residual });
    }
    Ok(rows)
}

#[derive(Clone, Debug)]
pub struct McShaneSector {
    /// Σ (-1 + sqrt(1 - 4/t²)) over p/q in (0, 1) with q <= max_q.
    pub sum: Real,
    /// c/(ab) plus the half jumps at 0/1 and 1/1.
    pub boundary: Real,
}

impl McShaneSector {
    /// sum + boundary, zero in the limit.
    pub fn relation(&self) -> Real {
        &self.sum + &self.boundary
    }
}

pub fn mcshane_sector_sum(base: &BaseTriple, sector: Sector, max_q: i64) -> Result<McShaneSector> {
    if max_q < 2 {
        return Err(Error::Validation("max q must be at least 2".into()));
    }
    let precision = base.precision();
    let table = traces::sector_table(base, sector, max_q)?;
    let mut sum = CompensatedSum::new(precision);
    for (_, _, t) in table.interior_traces() {
        sum.add(&geometry::corner_ratio_jump(t)?);
    }
    let [a, b, c] = base.seeds(sector);
    let two = Real::from_i64(2, precision);
    let boundary = &c / (&a * &b) + geometry::corner_ratio_jump(&a)? / &two + geometry::corner_ratio_jump(&b)? / &two;
    Ok(McShaneSector { sum: sum.value(), boundary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::relative_difference;
    use crate::traces::{complete_triple, Branch};

    fn p() -> Precision {
        Precision::new(256).unwrap()
    }

    fn close(x: &Real, y: &str, tol: &str) {
        let y = Real::parse(y, p()).unwrap();
        let tol = Real::parse(tol, p()).unwrap();
        assert!((x - &y).abs() < tol, "{} vs {}", x.to_sci(30), y.to_sci(30));
    }

    fn random_like() -> BaseTriple {
        complete_triple(
            &Real::parse("2.59740058623", p()).unwrap(),
            &Real::parse("4.18711171215", p()).unwrap(),
            Branch::Plus,
            p(),
        )
        .unwrap()
    }

    #[test]
    fn modular_target() {
        let report = full_product(&BaseTriple::modular(p()), 1, false).unwrap();
        close(&report.target, "17.9442719100", "1e-10");
        assert!(report.partial < report.target);
        assert_eq!(report.terms_used, 3);
    }

    #[test]
    fn product_max_height_one() {
        let base = random_like();
        let report = full_product(&base, 1, true).unwrap();
        let mut expected = Real::one(p());
        for t in [base.a(), base.b(), base.c()] {
            expected = expected * (t * t) / (t * t - Real::from_i64(4, p()));
        }
        assert!(relative_difference(&report.partial, &expected) < p().identity_tolerance());
        assert!(report.partial < report.target);
    }

    #[test]
    fn modular_sector_closed_form() {
        // 5/(3 - 3(3 - √5)/2)² for a = b = c = 3
        let base = BaseTriple::modular(p());
        let sp = sector_product(&base, Sector::Ab, 2).unwrap();
        let five = Real::from_i64(5, p());
        let three = Real::from_i64(3, p());
        let d = &three - &three * (&three - five.sqrt()) / Real::from_i64(2, p());
        assert!(relative_difference(&sp.target, &(&five / (&d * &d))) < p().identity_tolerance());
        close(&sp.target, "1.45446332708", "1e-11");
        assert!(relative_difference(&sp.target, &sp.derivative_target) < p().identity_tolerance());
        // only 1/2: (36/32)^2
        close(&sp.partial, "1.265625", "1e-60");
    }

    #[test]
    fn sector_closed_form_agrees_for_real_base() {
        let base = random_like();
        for s in Sector::ALL {
            let sp = sector_product(&base, s, 40).unwrap();
            assert!(relative_difference(&sp.target, &sp.derivative_target) < p().identity_tolerance());
            assert!(sp.partial < sp.target);
            assert!(relative_difference(&sp.partial, &sp.target) < Real::parse("1e-6", p()).unwrap());
        }
    }

    #[test]
    fn three_sector_assembly() {
        // product of the base factors and three sector closed forms equals
        // the product of the three (t + sqrt(t² - 4))/2
        let base = random_like();
        let mut lhs = Real::one(p());
        for t in [base.a(), base.b(), base.c()] {
            lhs = lhs * (t * t) / (t * t - Real::from_i64(4, p()));
        }
        for s in Sector::ALL {
            lhs = lhs * sector_product(&base, s, 2).unwrap().target;
        }
        let report = full_product(&base, 1, false).unwrap();
        assert!(relative_difference(&lhs, &report.target) < p().identity_tolerance());
    }

    #[test]
    fn mcshane_examples() {
        let base = BaseTriple::modular(p());
        let report = full_mcshane(&base, 1, false).unwrap();
        close(&report.partial, "0.3819660112501", "1e-12");
        let sector = mcshane_sector_sum(&base, Sector::Ab, 2).unwrap();
        close(&sector.sum, "-0.0571909584", "1e-10");
        let five = Real::from_i64(5, p());
        let expected = Real::one(p()) / Real::from_i64(3, p()) - Real::one(p()) + five.sqrt() / Real::from_i64(3, p());
        assert!(relative_difference(&sector.boundary, &expected) < p().identity_tolerance());
    }

    #[test]
    fn mcshane_relation_shrinks() {
        let base = random_like();
        let mut prev = None;
        for q in [2, 5, 10, 20, 40] {
            let rel = mcshane_sector_sum(&base, Sector::Ca, q).unwrap().relation();
            assert!(rel.is_positive());
            if let Some(p) = prev {
                assert!(rel < p);
            }
            prev = Some(rel);
        }
    }

    #[test]
    fn modular_factor_table() {
        let table = factor_table(&BaseTriple::modular(p()), 7).unwrap();
        let got: Vec<(i64, u64)> = table.iter().map(|(t, e)| (i64::try_from(t).unwrap(), *e)).collect();
        let markoff = [1, 2, 5, 13, 29, 34, 89, 169, 194, 233];
        let exps = [3, 6, 18, 24, 30, 30, 36, 42, 42, 42];
        let want: Vec<(i64, u64)> = markoff.iter().zip(exps).map(|(m, e)| (3 * m, e)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn duplicate_free_assembly() {
        let curves = curves_to_height(&random_like(), 12).unwrap();
        let count: usize = (2..=12).map(|q| (1..q).filter(|p| num_integer::gcd(*p, q) == 1).count()).sum();
        assert_eq!(curves.len(), 3 + 3 * count);
    }

    #[test]
    fn running_is_increasing() {
        let report = full_product(&random_like(), 12, false).unwrap();
        assert!(report.monotone);
        assert_eq!(report.running.len(), 12);
        let report = full_mcshane(&random_like(), 12, true).unwrap();
        assert!(report.monotone);
        assert_eq!(report.terms.unwrap().len(), report.terms_used);
    }

    #[test]
    fn tail_bound_covers_extension() {
        let base = random_like();
        for kind in [IdentityKind::Product, IdentityKind::Mcshane] {
            let short = evaluate(kind, &base, 12, false).unwrap();
            let long = evaluate(kind, &base, 17, false).unwrap();
            let bound = tail_bound(&short).unwrap();
            assert!(&short.residual - &long.residual <= bound, "{kind:?}");
        }
    }

    #[test]
    fn telescoping_small() {
        let rows = telescoping_check(&BaseTriple::modular(p()), Sector::Ab, 6).unwrap();
        assert_eq!(rows.len(), 6);
        for row in rows {
            assert!(row.residual < p().identity_tolerance(), "depth {}", row.depth);
        }
    }

    #[test]
    fn rejects_zero_height() {
        assert!(full_product(&BaseTriple::modular(p()), 0, false).is_err());
    }
}
