//! Command-line front end.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::farey::{self, Rational};
use crate::geometry;
use crate::identities::{self, IdentityReport};
use crate::output::{self, Format, Row, TableRecord};
use crate::precision::{Field, Precision, Real, DEFAULT_PRECISION_BITS};
use crate::traces::{self, BaseTriple, Branch, Sector, TraceMatrix};

#[derive(Debug, Parser)]
#[command(
    name = "markoff-teich",
    version,
    about = "Traces, lengths and identities for simple closed geodesics on a once-punctured torus"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the product of (t²/(t²-4))^h over curves against its closed form.
    VerifyProduct(VerifyArgs),
    /// Check Σ (1 - sqrt(1 - 4/t²))/2 over curves against 1/2.
    VerifyMcshane(VerifyArgs),
    /// Emit F = l/q with one-sided derivatives over one sector.
    #[command(name = "emit-F", alias = "emit-length")]
    EmitLength(SectorArgs),
    /// Emit boundary points (q/l, p/l) of the length-norm unit ball.
    EmitUnitball(UnitBallArgs),
    /// Emit the corner function f = u/t and its jumps over one sector.
    #[command(name = "emit-f", alias = "emit-corner")]
    EmitCorner(SectorArgs),
    /// List Markoff triples x² + y² + z² = 3xyz with z <= max-z.
    Markoff(MarkoffArgs),
}

#[derive(Debug, Args)]
pub struct TripleArgs {
    /// Base triple a,b,c as decimal strings (defaults to 3,3,3).
    #[arg(long, value_name = "A,B,C", conflicts_with = "complete")]
    pub triple: Option<String>,
    /// Complete a,b to a triple by solving for c on the given branch (plus or minus).
    #[arg(long, value_name = "A,B,BRANCH")]
    pub complete: Option<String>,
    /// Working precision in bits.
    #[arg(long, value_name = "BITS", env = "MARKOFF_TEICH_PRECISION", default_value_t = DEFAULT_PRECISION_BITS)]
    pub precision: usize,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file (stdout when absent).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub triple: TripleArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_name = "N", default_value_t = 30)]
    pub max_height: u64,
    /// Relative residual below which the run passes.
    #[arg(long, value_name = "REL", default_value = "1e-6")]
    pub threshold: String,
    /// Include every factor or summand in the output.
    #[arg(long)]
    pub emit_terms: bool,
}

#[derive(Debug, Args)]
pub struct SectorArgs {
    #[command(flatten)]
    pub triple: TripleArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_name = "N", default_value_t = 30)]
    pub max_q: i64,
    #[arg(long, default_value = "ab")]
    pub sector: Sector,
}

#[derive(Debug, Args)]
pub struct UnitBallArgs {
    #[command(flatten)]
    pub triple: TripleArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_name = "N", default_value_t = 30)]
    pub max_height: u64,
    /// Add the antipodal points, covering the whole boundary.
    #[arg(long)]
    pub reflect: bool,
}

#[derive(Debug, Args)]
pub struct MarkoffArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_name = "Z")]
    pub max_z: BigUint,
}

/// How the base triple is given.
#[derive(Clone, Debug, PartialEq)]
pub enum TripleSpec {
    Explicit([String; 3]),
    Complete { a: String, b: String, branch: Branch },
}

impl TripleSpec {
    fn from_args(args: &TripleArgs) -> Result<Self> {
        match (&args.triple, &args.complete) {
            (Some(t), None) => {
                let [a, b, c] = split_three(t)?;
                Ok(TripleSpec::Explicit([a, b, c]))
            }
            (None, Some(t)) => {
                let [a, b, branch] = split_three(t)?;
                Ok(TripleSpec::Complete { a, b, branch: branch.parse()? })
            }
            (None, None) => Ok(TripleSpec::Explicit(["3".into(), "3".into(), "3".into()])),
            (Some(_), Some(_)) => Err(Error::Validation("give either --triple or --complete".into())),
        }
    }

    pub fn resolve(&self, precision: Precision) -> Result<BaseTriple> {
        match self {
            TripleSpec::Explicit([a, b, c]) => BaseTriple::parse(a, b, c, precision),
            TripleSpec::Complete { a, b, branch } => traces::complete_triple(
                &Real::parse(a, precision)?,
                &Real::parse(b, precision)?,
                *branch,
                precision,
            ),
        }
    }
}

fn split_three(s: &str) -> Result<[String; 3]> {
    let parts: Vec<String> = s.split(',').map(|x| x.trim().to_string()).collect();
    <[String; 3]>::try_from(parts).map_err(|_| Error::Parse(format!("expected three comma-separated values in {s:?}")))
}

/// Resolved settings for one run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub triple: TripleSpec,
    pub max_height: u64,
    pub max_q: i64,
    pub precision: Precision,
    pub format: Format,
    pub emit_terms: bool,
    pub sector: Option<Sector>,
    pub threshold: String,
    pub reflect: bool,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    fn new(triple: &TripleArgs, output: &OutputArgs) -> Result<Self> {
        Ok(RunConfig {
            triple: TripleSpec::from_args(triple)?,
            max_height: 30,
            max_q: 30,
            precision: Precision::new(triple.precision)?,
            format: output.format,
            emit_terms: false,
            sector: None,
            threshold: "1e-6".into(),
            reflect: false,
            out: output.out.clone(),
        })
    }

    pub fn base(&self) -> Result<BaseTriple> {
        self.triple.resolve(self.precision)
    }

    fn validate(&self) -> Result<()> {
        if self.max_height < 1 {
            return Err(Error::Validation("--max-height must be at least 1".into()));
        }
        if self.max_q < 1 {
            return Err(Error::Validation("--max-q must be at least 1".into()));
        }
        Ok(())
    }
}

/// Result of a command: the text to write and whether the run passed.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub output: String,
    pub passed: bool,
    /// One-line summary for stderr.
    pub summary: Option<String>,
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::VerifyProduct(args) => cmd_verify_product(&verify_config(&args)?),
        Command::VerifyMcshane(args) => cmd_verify_mcshane(&verify_config(&args)?),
        Command::EmitLength(args) => cmd_emit_length(&sector_config(&args)?),
        Command::EmitCorner(args) => cmd_emit_corner(&sector_config(&args)?),
        Command::EmitUnitball(args) => {
            let mut cfg = RunConfig::new(&args.triple, &args.output)?;
            cfg.max_height = args.max_height;
            cfg.reflect = args.reflect;
            cfg.validate()?;
            cmd_emit_unitball(&cfg)
        }
        Command::Markoff(args) => cmd_markoff(&args.max_z, args.output.format, args.output.out.clone()),
    }
}

fn verify_config(args: &VerifyArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::new(&args.triple, &args.output)?;
    cfg.max_height = args.max_height;
    cfg.threshold = args.threshold.clone();
    cfg.emit_terms = args.emit_terms;
    cfg.validate()?;
    Ok(cfg)
}

fn sector_config(args: &SectorArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::new(&args.triple, &args.output)?;
    cfg.max_q = args.max_q;
    cfg.sector = Some(args.sector);
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_verify_product(cfg: &RunConfig) -> Result<Outcome> {
    let base = cfg.base()?;
    let report = identities::full_product(&base, cfg.max_height, cfg.emit_terms || cfg.format == Format::Csv)?;
    verify_outcome(cfg, &report)
}

pub fn cmd_verify_mcshane(cfg: &RunConfig) -> Result<Outcome> {
    let base = cfg.base()?;
    let report = identities::full_mcshane(&base, cfg.max_height, cfg.emit_terms || cfg.format == Format::Csv)?;
    verify_outcome(cfg, &report)
}

fn verify_outcome(cfg: &RunConfig, report: &IdentityReport) -> Result<Outcome> {
    let threshold = Real::parse(&cfg.threshold, cfg.precision)?;
    let passed = report.monotone && report.residual < threshold;
    let bound = identities::tail_bound(report).ok();
    let rows = match &report.terms {
        Some(terms) => {
            let lengths = terms
                .iter()
                .map(|t| geometry::length_of_trace(&t.curve.trace))
                .collect::<Result<Vec<_>>>()?;
            let mut acc = crate::precision::CompensatedSum::new(cfg.precision);
            let running: Vec<Real> = terms
                .iter()
                .map(|t| {
                    acc.add(&t.value);
                    acc.value()
                })
                .collect();
            Some(output::term_rows(terms, &lengths, &running))
        }
        None => None,
    };
    let summary = format!(
        "{}: max_height={} terms={} partial={} target={} residual={} monotone={} {}",
        match report.kind {
            identities::IdentityKind::Product => "product",
            identities::IdentityKind::Mcshane => "mcshane",
        },
        report.max_height,
        report.terms_used,
        report.partial.to_sci(20),
        report.target.to_sci(20),
        report.residual.to_sci(6),
        report.monotone,
        if passed { "PASS" } else { "FAIL" },
    );
    let text = match cfg.format {
        Format::Json => {
            let terms = if cfg.emit_terms { rows } else { None };
            output::to_json(&output::report_record(report, bound.as_ref(), &cfg.threshold, passed, terms))?
        }
        Format::Csv => output::rows_to_csv(&rows.unwrap_or_default())?,
    };
    Ok(Outcome { output: text, passed, summary: Some(summary), out: cfg.out.clone() })
}

fn table_outcome(cfg: &RunConfig, base: &BaseTriple, kind: &str, rows: Vec<Row>) -> Result<Outcome> {
    let text = match cfg.format {
        Format::Json => output::to_json(&TableRecord {
            schema: output::SCHEMA_VERSION,
            kind: kind.to_string(),
            base: output::triple_record(base.a(), base.b(), base.c()),
            precision_bits: cfg.precision.bits(),
            columns: output::CSV_COLUMNS.iter().map(|s| s.to_string()).collect(),
            rows,
        })?,
        Format::Csv => output::rows_to_csv(&rows)?,
    };
    Ok(Outcome { output: text, passed: true, summary: None, out: cfg.out.clone() })
}

/// Rows (p/q, F) over [0, 1] in one sector, with λ in aux1 and ρ in aux2.
pub fn cmd_emit_length(cfg: &RunConfig) -> Result<Outcome> {
    let base = cfg.base()?;
    let sector = cfg.sector.unwrap_or(Sector::Ab);
    let table = traces::sector_table(&base, sector, cfg.max_q.max(2))?;
    let mut rows = Vec::new();
    for r in farey::farey_sequence(cfg.max_q) {
        let t = table.get(r).ok_or(Error::EnumerationOrder(r))?;
        let l = geometry::length_of_trace(t)?;
        let d = identities::derivatives_at(&table, r)?;
        rows.push(Row {
            curve_p: r.p(),
            curve_q: r.q(),
            sector: sector.label().into(),
            height: sector.height(r)?,
            trace: output::real_string(t),
            length: output::real_string(&l),
            value: output::real_string(&geometry::normalized_length(&l, r.q())),
            aux1: (r != Rational::ZERO).then(|| output::real_string(&d.left)),
            aux2: (r != Rational::ONE).then(|| output::real_string(&d.right)),
        });
    }
    table_outcome(cfg, &base, "F", rows)
}

fn corner_values<T: Field>(
    seeds: &[TraceMatrix<T>; 3],
    rationals: &[Rational],
    to_real: impl Fn(&T) -> Real,
) -> Result<Vec<(Real, Real)>> {
    rationals
        .iter()
        .map(|r| {
            let m = traces::matrix_at(seeds, *r)?;
            Ok((to_real(&m.t), to_real(&geometry::corner_ratio(&m))))
        })
        .collect()
}

/// Rows (p/q, f) over [0, 1] in one sector; aux1 is the jump of f at the
/// rational (half jumps at the two ends, so f(0/1) + Σ aux1 = 0 in the limit).
pub fn cmd_emit_corner(cfg: &RunConfig) -> Result<Outcome> {
    let base = cfg.base()?;
    let precision = cfg.precision;
    let sector = cfg.sector.unwrap_or(Sector::Ab);
    let rationals = farey::farey_sequence(cfg.max_q);
    let values = match traces::exact_seed_matrices(&base, sector) {
        Some(seeds) => corner_values(&seeds, &rationals, |x| Real::from_rational(x, precision))?,
        None => corner_values(&traces::seed_matrices(&base, sector)?, &rationals, Real::clone)?,
    };
    let mut rows = Vec::new();
    for (r, (t, f)) in rationals.iter().zip(values) {
        let mut jump = geometry::corner_ratio_jump(&t)?;
        if !r.is_interior() {
            jump = jump / Real::from_i64(2, precision);
        }
        rows.push(Row {
            curve_p: r.p(),
            curve_q: r.q(),
            sector: sector.label().into(),
            height: sector.height(*r)?,
            trace: output::real_string(&t),
            length: output::real_string(&geometry::length_of_trace(&t)?),
            value: output::real_string(&f),
            aux1: Some(output::real_string(&jump)),
            aux2: None,
        });
    }
    table_outcome(cfg, &base, "f", rows)
}

/// Points (q/l, p/l) for every curve with height <= max_height, in global
/// coordinates; value holds x and aux1 holds y.
pub fn cmd_emit_unitball(cfg: &RunConfig) -> Result<Outcome> {
    let base = cfg.base()?;
    let mut rows = Vec::new();
    for c in identities::curves_to_height(&base, cfg.max_height)? {
        let l = geometry::length_of_trace(&c.trace)?;
        let (p, q) = c.projective;
        let (x, y) = geometry::unit_ball_point(p, q, &l)?;
        let signs: &[i64] = if cfg.reflect { &[1, -1] } else { &[1] };
        for &s in signs {
            let sign = Real::from_i64(s, cfg.precision);
            rows.push(Row {
                curve_p: s * p,
                curve_q: s * q,
                sector: output::sector_label(c.sector),
                height: c.height,
                trace: output::real_string(&c.trace),
                length: output::real_string(&l),
                value: output::real_string(&(&x * &sign)),
                aux1: Some(output::real_string(&(&y * &sign))),
                aux2: None,
            });
        }
    }
    table_outcome(cfg, &base, "unit-ball", rows)
}

pub fn cmd_markoff(max_z: &BigUint, format: Format, out: Option<PathBuf>) -> Result<Outcome> {
    if *max_z < BigUint::from(1u32) {
        return Err(Error::Validation("--max-z must be at least 1".into()));
    }
    let triples = traces::enumerate_markoff(max_z);
    let text = match format {
        Format::Json => output::to_json(&output::markoff_record(&max_z.to_string(), &triples))?,
        Format::Csv => output::markoff_to_csv(&triples)?,
    };
    Ok(Outcome { output: text, passed: true, summary: None, out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("markoff-teich").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn triple_spec_parsing() {
        let cli = parse(&["verify-product", "--complete", "2.5,4.1,plus"]);
        let Command::VerifyProduct(args) = cli.command else { panic!() };
        assert_eq!(
            TripleSpec::from_args(&args.triple).unwrap(),
            TripleSpec::Complete { a: "2.5".into(), b: "4.1".into(), branch: Branch::Plus }
        );
        assert!(split_three("1,2").is_err());
    }

    #[test]
    fn conflicting_triples_rejected() {
        let r = Cli::try_parse_from(["markoff-teich", "verify-product", "--triple", "3,3,3", "--complete", "3,3,plus"]);
        assert!(r.is_err());
    }

    #[test]
    fn aliases() {
        assert!(matches!(parse(&["emit-length"]).command, Command::EmitLength(_)));
        assert!(matches!(parse(&["emit-F"]).command, Command::EmitLength(_)));
        assert!(matches!(parse(&["emit-corner"]).command, Command::EmitCorner(_)));
        assert!(matches!(parse(&["emit-f"]).command, Command::EmitCorner(_)));
    }

    #[test]
    fn low_precision_rejected() {
        let cli = parse(&["verify-mcshane", "--precision", "32"]);
        assert!(matches!(run(cli), Err(Error::Validation(_))));
    }
}
