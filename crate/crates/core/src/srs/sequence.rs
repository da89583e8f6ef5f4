use crate::error::{Error, Result};
use crate::linalg::{unit_root, C64};
use rand::Rng;
use std::f64::consts::TAU;

/// Constant-amplitude root sequence with its cyclic shift already applied.
#[derive(Debug, Clone, PartialEq)]
pub struct SrsSequence {
    pub root: usize,
    pub length: usize,
    pub values: Vec<C64>,
}

fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Zadoff-Chu sequence `x_q(m) = e^{-jπ q m(m+1)/N}` of odd prime length `N`.
pub fn gen_sequence(root: usize, length: usize) -> Result<SrsSequence> {
    if length < 3 || length % 2 == 0 || !is_prime(length) {
        return Err(Error::invalid("length", format!("{length} is not an odd prime")));
    }
    if root == 0 || root >= length {
        return Err(Error::invalid("root", format!("root {root} must lie in 1..{length}")));
    }
    let den = 2 * length;
    let values = (0..length)
        .map(|m| {
            let k = (root as u128 * m as u128 * (m as u128 + 1)) % den as u128;
            unit_root(-(k as i64), den)
        })
        .collect();
    Ok(SrsSequence { root, length, values })
}

/// Root sequence of the largest odd prime `≤ allocation`, cyclically extended.
pub fn gen_sequence_for_allocation(root: usize, allocation: usize) -> Result<SrsSequence> {
    let prime = (3..=allocation).rev().find(|&n| n % 2 == 1 && is_prime(n)).ok_or_else(|| Error::invalid("allocation", "too short for a root sequence"))?;
    let base = gen_sequence(root, prime)?;
    let values = (0..allocation).map(|m| base.values[m % prime]).collect();
    Ok(SrsSequence {
        root,
        length: allocation,
        values,
    })
}

/// Multiplies element `m` by `e^{jαm}`.
pub fn apply_cs(seq: &SrsSequence, alpha: f64) -> SrsSequence {
    let values = seq
        .values
        .iter()
        .enumerate()
        .map(|(m, &x)| {
            if alpha == 0.0 {
                x
            } else {
                x * C64::from_polar(1.0, (alpha * m as f64).rem_euclid(TAU))
            }
        })
        .collect();
    SrsSequence {
        root: seq.root,
        length: seq.length,
        values,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsMode {
    Fixed,
    /// Continuous uniform on `[0, 2π)` per transmission.
    Hopping,
    /// Uniform over `levels` equally spaced values per transmission.
    HoppingDiscrete(usize),
}

/// Cyclic-shift value per transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct CsSchedule {
    pub values: Vec<f64>,
    pub mode: CsMode,
}

impl CsSchedule {
    pub fn fixed(alpha: f64, transmissions: usize) -> Self {
        Self {
            values: vec![alpha.rem_euclid(TAU); transmissions],
            mode: CsMode::Fixed,
        }
    }

    /// Draws the schedule. In fixed mode a single shift is drawn and held.
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, mode: CsMode, transmissions: usize) -> Self {
        let values = match mode {
            CsMode::Fixed => {
                let a = rng.random::<f64>() * TAU;
                vec![a; transmissions]
            }
            CsMode::Hopping => (0..transmissions).map(|_| rng.random::<f64>() * TAU).collect(),
            CsMode::HoppingDiscrete(levels) => (0..transmissions)
                .map(|_| rng.random_range(0..levels.max(1)) as f64 * TAU / levels.max(1) as f64)
                .collect(),
        };
        Self { values, mode }
    }
}
