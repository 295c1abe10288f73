use std::process::{Command, Output};

use markoff_teich::output::{MarkoffRecord, ReportRecord, Row, TableRecord};
use markoff_teich::{Precision, Real};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_markoff-teich"));
    c.env_remove("MARKOFF_TEICH_PRECISION");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

/// Full-precision value of an emitted decimal string.
fn exact(s: &str) -> Real {
    Real::parse(s, Precision::new(256).unwrap()).unwrap()
}

fn table(args: &[&str]) -> TableRecord {
    let o = run(args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    serde_json::from_str(&stdout(&o)).unwrap()
}

#[test]
fn verify_product_modular() {
    let o = run(&["verify-product", "--triple", "3,3,3", "--max-height", "30", "--precision", "256"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rec: ReportRecord = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rec.schema, 1);
    assert!(rec.passed && rec.monotone);
    assert!(rec.target.starts_with("1.79442719099991587856"));
    assert!(num(&rec.residual) < 1e-6);
    assert!(rec.terms.is_none());
    assert!(stderr(&o).contains("PASS"));
}

#[test]
fn verify_product_completed_triple() {
    let o = run(&["verify-product", "--complete", "2.59740058623,4.18711171215,plus", "--threshold", "1e-5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rec: ReportRecord = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(rec.base.c.starts_with("7.73808784943"));
}

#[test]
fn domain_errors_exit_2() {
    let o = run(&["verify-product", "--triple", "2,2,2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("degenerate"));

    let o = run(&["verify-mcshane", "--triple", "3,3,4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("relation"));

    let o = run(&["verify-mcshane", "--complete", "2.1,2.1,plus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no hyperbolic torus"));

    let o = run(&["verify-mcshane", "--triple", "3,3,x"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["verify-mcshane", "--max-height", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn threshold_miss_exits_1() {
    let o = run(&["verify-mcshane", "--max-height", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let rec: ReportRecord = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(!rec.passed);
    assert!(rec.partial.starts_with("3.819660112501051"));
}

#[test]
fn mcshane_modular_passes() {
    let o = run(&["verify-mcshane", "--triple", "3,3,3", "--max-height", "30"]);
    assert_eq!(o.status.code(), Some(0));
    let rec: ReportRecord = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((num(&rec.partial) - 0.5).abs() < 1e-6);
}

#[test]
fn report_round_trip_and_determinism() {
    let args = ["verify-product", "--complete", "3.1,2.7,minus", "--max-height", "8", "--emit-terms"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.stdout, b.stdout);
    let rec: ReportRecord = serde_json::from_str(&stdout(&a)).unwrap();
    let again: ReportRecord = serde_json::from_str(&serde_json::to_string(&rec).unwrap()).unwrap();
    assert_eq!(rec, again);
    let terms = rec.terms.unwrap();
    assert_eq!(terms.len(), rec.terms_used);
    assert!(terms.windows(2).all(|w| w[0].height <= w[1].height));
}

#[test]
fn csv_terms() {
    let o = run(&["verify-product", "--max-height", "3", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "curve_p,curve_q,sector,height,trace,length,value,aux1,aux2");
    // 3 seeds, three 1/2, six of 1/3 and 2/3
    assert_eq!(lines.count(), 12);
}

#[test]
fn emit_length_is_symmetric_for_modular() {
    let rec = table(&["emit-F", "--max-q", "12"]);
    let rows = &rec.rows;
    let first = &rows[0];
    let last = rows.last().unwrap();
    assert_eq!((first.curve_p, first.curve_q), (0, 1));
    assert_eq!((last.curve_p, last.curve_q), (1, 1));
    assert!(first.aux1.is_none() && first.aux2.is_some());
    assert!(last.aux2.is_none() && last.aux1.is_some());
    for (x, y) in rows.iter().zip(rows.iter().rev()) {
        assert_eq!(x.curve_p + y.curve_p, x.curve_q);
        assert_eq!(x.value, y.value);
    }
    // sorted by p/q
    assert!(rows.windows(2).all(|w| w[0].curve_p * w[1].curve_q < w[1].curve_p * w[0].curve_q));
    // λ < ρ at every interior rational, and ρ(x) < λ(y) for neighbours
    for r in &rows[1..rows.len() - 1] {
        assert!(exact(r.aux1.as_ref().unwrap()) < exact(r.aux2.as_ref().unwrap()));
    }
    for w in rows.windows(2) {
        assert!(exact(w[0].aux2.as_ref().unwrap()) < exact(w[1].aux1.as_ref().unwrap()));
    }
}

#[test]
fn emit_length_alias_and_sector() {
    let a = run(&["emit-length", "--sector", "bc", "--complete", "3.1,2.7,plus", "--max-q", "5"]);
    let b = run(&["emit-F", "--sector", "bc", "--complete", "3.1,2.7,plus", "--max-q", "5"]);
    assert_eq!(a.stdout, b.stdout);
    let rec: TableRecord = serde_json::from_str(&stdout(&a)).unwrap();
    assert!(rec.rows.iter().all(|r| r.sector == "bc"));
}

#[test]
fn emit_corner_rows() {
    let rec = table(&["emit-f", "--max-q", "60"]);
    let rows = &rec.rows;
    assert!((num(&rows[0].value) - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(num(&rows.last().unwrap().value), 0.0);
    assert!(rows.iter().all(|r| num(r.aux1.as_ref().unwrap()) < 0.0));
    assert!(rows.windows(2).all(|w| exact(&w[1].value) < exact(&w[0].value)));
    let total: f64 = num(&rows[0].value) + rows.iter().map(|r| num(r.aux1.as_ref().unwrap())).sum::<f64>();
    assert!(total.abs() < 1e-6, "{total}");
    let a = run(&["emit-corner", "--max-q", "60"]);
    assert_eq!(serde_json::from_str::<TableRecord>(&stdout(&a)).unwrap(), rec);
}

#[test]
fn emit_corner_real_base_starts_at_c_over_ab() {
    let rec = table(&["emit-f", "--complete", "2.59740058623,4.18711171215,plus", "--max-q", "4"]);
    let (a, b, c) = (num(&rec.base.a), num(&rec.base.b), num(&rec.base.c));
    assert!((num(&rec.rows[0].value) - c / (a * b)).abs() < 1e-12);
    assert!(num(&rec.rows.last().unwrap().value).abs() < 1e-60);
}

fn points(rows: &[Row]) -> Vec<(f64, f64)> {
    rows.iter().map(|r| (num(&r.value), num(r.aux1.as_ref().unwrap()))).collect()
}

#[test]
fn unit_ball_small() {
    assert_eq!(table(&["emit-unitball", "--max-height", "1"]).rows.len(), 3);
    let rec = table(&["emit-unitball", "--max-height", "1", "--reflect"]);
    assert_eq!(rec.rows.len(), 6);
    let pts = points(&rec.rows);
    assert!((pts[0].0 - 0.5195217303087569).abs() < 1e-12 && pts[0].1 == 0.0);
}

#[test]
fn unit_ball_modular_symmetry() {
    let rec = table(&["emit-unitball", "--max-height", "8", "--reflect"]);
    let pts = points(&rec.rows);
    // (x, y) -> (x - y, x) permutes the classes of a, b, c up to sign
    for &(x, y) in &pts {
        let (u, v) = (x - y, x);
        assert!(pts.iter().any(|&(s, t)| (s - u).abs() < 1e-12 && (t - v).abs() < 1e-12), "({x}, {y})");
    }
}

/// Cross product of (b - a) and (c - a).
fn cross(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

#[test]
fn unit_ball_points_in_convex_position() {
    for args in [
        ["emit-unitball", "--max-height", "7", "--reflect", "--triple", "3,3,3"],
        ["emit-unitball", "--max-height", "7", "--reflect", "--complete", "3.1,2.7,plus"],
    ] {
        let mut pts = points(&table(&args).rows);
        // sort by angle; in convex position every consecutive turn is left
        pts.sort_by(|a, b| a.1.atan2(a.0).partial_cmp(&b.1.atan2(b.0)).unwrap());
        let n = pts.len();
        for i in 0..n {
            let turn = cross(pts[i], pts[(i + 1) % n], pts[(i + 2) % n]);
            assert!(turn > 0.0, "point {:?} is not extreme", pts[(i + 1) % n]);
        }
    }
}

#[test]
fn markoff_command() {
    let o = run(&["markoff", "--max-z", "1"]);
    let rec: MarkoffRecord = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rec.triples, vec![["1".to_string(), "1".to_string(), "1".to_string()]]);

    let o = run(&["markoff", "--max-z", "35", "--format", "csv"]);
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "2,5,29"));
    assert!(text.lines().any(|l| l == "1,13,34"));

    let o = run(&["markoff", "--max-z", "250"]);
    let rec: MarkoffRecord = serde_json::from_str(&stdout(&o)).unwrap();
    let maxima: Vec<&str> = rec.triples.iter().map(|t| t[2].as_str()).collect();
    assert_eq!(maxima, ["1", "2", "5", "13", "29", "34", "89", "169", "194", "233"]);

    let o = run(&["markoff", "--max-z", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn out_file_and_precision_env() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = bin()
        .env("MARKOFF_TEICH_PRECISION", "128")
        .args(["verify-mcshane", "--max-height", "10", "--threshold", "1", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let rec: ReportRecord = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(rec.precision_bits, 128);

    let o = bin()
        .env("MARKOFF_TEICH_PRECISION", "128")
        .args(["verify-mcshane", "--max-height", "2", "--threshold", "1", "--precision", "320"])
        .output()
        .unwrap();
    let rec: ReportRecord = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rec.precision_bits, 320);
}

#[test]
fn decimal_input_is_not_rounded_through_f64() {
    // 3 + 2^-80 is not representable as f64; at 256 bits the relation check
    // must see it and reject the triple.
    let o = run(&["verify-product", "--triple", "3.0000000000000000000000008271806125530276748714,3,3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("relation"));
}
