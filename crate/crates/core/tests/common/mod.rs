#![allow(dead_code)]

use markoff_teich::traces::{complete_triple, BaseTriple, Branch};
use markoff_teich::{Precision, Real};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SEED: u64 = 0x5eed_cafe;

/// Valid base triples from a, b ~ U[2.2, 4.5] with a random branch for c.
/// a and b are rounded to 12 decimals and parsed, so every run sees the
/// same inputs at any precision.
pub fn random_triples(n: usize, seed: u64, precision: Precision) -> Vec<BaseTriple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let a = format!("{:.12}", rng.gen_range(2.2..4.5));
        let b = format!("{:.12}", rng.gen_range(2.2..4.5));
        let branch = if rng.gen_bool(0.5) { Branch::Plus } else { Branch::Minus };
        let (a, b) = (Real::parse(&a, precision).unwrap(), Real::parse(&b, precision).unwrap());
        if let Ok(t) = complete_triple(&a, &b, branch, precision) {
            out.push(t);
        }
    }
    out
}

pub fn prec(bits: usize) -> Precision {
    Precision::new(bits).unwrap()
}

pub fn real(s: &str, p: Precision) -> Real {
    Real::parse(s, p).unwrap()
}
