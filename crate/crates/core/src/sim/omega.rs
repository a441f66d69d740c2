//! Sample paths and adversarial choice sequences.

use rand::distributions::{Distribution, Open01};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::ast::Var;

/// A co-finitely-zero bit stream with a cursor. The explicit prefix holds
/// the support; every position past it reads as 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceSeq {
    bits: Vec<bool>,
    pos: usize,
}

impl ChoiceSeq {
    pub fn new(bits: Vec<bool>) -> ChoiceSeq {
        ChoiceSeq { bits, pos: 0 }
    }

    pub fn zeros() -> ChoiceSeq {
        ChoiceSeq::new(vec![])
    }

    /// Bit at the cursor without advancing.
    pub fn head(&self) -> bool {
        self.bits.get(self.pos).copied().unwrap_or(false)
    }

    /// Number of bits consumed so far.
    pub fn consumed(&self) -> usize {
        self.pos
    }

    pub fn advance(&mut self, n: usize) {
        self.pos += n;
    }

    /// Index of the first zero at or after the cursor, relative to the
    /// cursor: the number of leading ones.
    pub fn nat(&self) -> usize {
        let mut n = 0;
        while self.bits.get(self.pos + n).copied().unwrap_or(false) {
            n += 1;
        }
        n
    }

    /// Bit at absolute position `i` (ignoring the cursor).
    pub fn bit_at(&self, i: usize) -> bool {
        self.bits.get(i).copied().unwrap_or(false)
    }

    pub fn prefix(&self) -> &[bool] {
        &self.bits
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn mix(parts: &[u64]) -> u64 {
    let mut acc = 0x6c62272e07bb0142u64;
    for &p in parts {
        acc = splitmix(acc ^ p);
    }
    acc
}

fn hash_str(s: &str, acc: &mut Vec<u64>) {
    acc.push(s.len() as u64);
    for chunk in s.as_bytes().chunks(8) {
        let mut w = [0u8; 8];
        w[..chunk.len()].copy_from_slice(chunk);
        acc.push(u64::from_le_bytes(w));
    }
}

fn hash_var(v: &Var, acc: &mut Vec<u64>) {
    match v {
        Var::Named(n) => {
            acc.push(1);
            hash_str(n, acc);
        }
        Var::Time(b) => {
            acc.push(2);
            hash_var(b, acc);
        }
        Var::Brownian(b, a) => {
            acc.push(3);
            hash_var(b, acc);
            hash_var(a, acc);
        }
        Var::Slot { owner, index } => {
            acc.push(4);
            acc.push(owner.0);
            acc.push(u64::from(*index));
        }
    }
}

/// One point of the sample space: a master seed from which every random
/// quantity is derived as a pure function of its index. Re-querying an
/// index always returns the same value, and distinct indices are
/// independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplePath {
    seed: u64,
}

impl SamplePath {
    pub fn new(seed: u64) -> SamplePath {
        SamplePath { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The `idx`-th member of the uniform family on [0,1].
    pub fn uniform(&self, idx: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[self.seed, 0x55, idx]));
        Open01.sample(&mut rng)
    }

    /// Standard-normal increment of the Brownian motion associated with
    /// `coord` over grid cell `step`.
    pub fn gaussian(&self, coord: &Var, step: u64) -> f64 {
        let mut parts = vec![self.seed, 0x99];
        hash_var(coord, &mut parts);
        parts.push(step);
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&parts));
        StandardNormal.sample(&mut rng)
    }
}

/// Derives a child seed for sample `k` of a stream rooted at `master`.
pub fn derive_seed(master: u64, stream: u64, k: u64) -> u64 {
    mix(&[master, stream, k])
}

/// Mutable state threaded through a program run: the choice cursor, the
/// position in the uniform-draw family, and a sticky truncation flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunState {
    pub choices: ChoiceSeq,
    pub draws: u64,
    pub truncated: bool,
}

impl RunState {
    pub fn new(choices: ChoiceSeq, draws: u64) -> RunState {
        RunState { choices, draws, truncated: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nat_counts_leading_ones() {
        assert_eq!(ChoiceSeq::new(vec![false]).nat(), 0);
        assert_eq!(ChoiceSeq::new(vec![true, true, false]).nat(), 2);
        assert_eq!(ChoiceSeq::new(vec![true, true]).nat(), 2);
        let mut c = ChoiceSeq::new(vec![true, true, false]);
        c.advance(2);
        assert_eq!(c.nat(), 0);
    }

    #[test]
    fn sample_path_is_a_fixed_point() {
        let w = SamplePath::new(7);
        assert_eq!(w.uniform(3), w.uniform(3));
        let x = Var::named("x");
        assert_eq!(w.gaussian(&x, 10), w.gaussian(&x, 10));
        assert_ne!(w.uniform(0), w.uniform(1));
        assert_ne!(w.gaussian(&x, 0), w.gaussian(&Var::named("y"), 0));
    }

    #[test]
    fn uniforms_live_in_unit_interval() {
        let w = SamplePath::new(12345);
        for i in 0..1000 {
            let u = w.uniform(i);
            assert!(u > 0.0 && u < 1.0);
        }
    }
}
