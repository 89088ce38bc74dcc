//! Brute-force reference: a standalone RPM-1 interpreter run over every
//! candidate program, and masses summed straight from its halting list.

#![allow(dead_code)]

use std::collections::HashMap;

use sumtest_lab::numerics::{BitString, Dyadic};

/// Output and step count if `program` halts on `condition` within `budget`
/// having read exactly its own bits.
pub fn run(program: &[bool], condition: &[bool], budget: u64) -> Option<(Vec<bool>, u64)> {
    let mut out: Vec<bool> = Vec::new();
    let (mut pc, mut read, mut steps) = (0usize, 0usize, 0u64);
    loop {
        let op: Vec<bool> = if *program.get(pc)? {
            program.get(pc..pc + 3)?.to_vec()
        } else {
            program.get(pc..pc + 2)?.to_vec()
        };
        pc += op.len();
        let cost = match op.as_slice() {
            [true, false, true] => out.len() as u64 + 1,
            [true, true, true] => return None,
            [true, true, false] if read >= condition.len() => return None,
            _ => 1,
        };
        steps += cost;
        if steps > budget {
            return None;
        }
        match op.as_slice() {
            [false, b] => out.push(*b),
            [true, false, false] => return (pc == program.len()).then_some((out, steps)),
            [true, false, true] => out.extend(out.clone()),
            [true, true, false] => {
                out.push(condition[read]);
                read += 1;
            }
            _ => unreachable!(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Halt {
    pub program: Vec<bool>,
    pub output: Vec<bool>,
    pub steps: u64,
}

/// Every bitstring of length `<= max_len`, run one at a time.
pub fn domain(max_len: usize, budget: u64, condition: &[bool]) -> Vec<Halt> {
    let mut found = Vec::new();
    for len in 0..=max_len {
        for code in 0u64..(1u64 << len) {
            let program: Vec<bool> = (0..len).rev().map(|i| code >> i & 1 == 1).collect();
            if let Some((output, steps)) = run(&program, condition, budget) {
                found.push(Halt {
                    program,
                    output,
                    steps,
                });
            }
        }
    }
    found
}

/// Stage masses read off a brute-force halting list.
pub struct Masses {
    by_output: HashMap<Vec<bool>, Vec<(usize, u64)>>,
}

impl Masses {
    pub fn new(halts: &[Halt]) -> Self {
        let mut by_output: HashMap<Vec<bool>, Vec<(usize, u64)>> = HashMap::new();
        for h in halts {
            by_output
                .entry(h.output.clone())
                .or_default()
                .push((h.program.len(), h.steps));
        }
        Self { by_output }
    }

    /// Programs of length `<= t` finishing in `<= t` steps.
    pub fn machine(&self, x: &[bool], t: u64) -> Dyadic {
        self.by_output
            .get(x)
            .into_iter()
            .flatten()
            .filter(|(len, steps)| *len as u64 <= t && *steps <= t)
            .map(|(len, _)| Dyadic::pow2_neg(*len as u64))
            .sum()
    }

    /// `machine / 2 + 2^{-2|x|-2}`.
    pub fn mix(&self, x: &[bool], t: u64) -> Dyadic {
        &self.machine(x, t).half() + &Dyadic::pow2_neg(2 * x.len() as u64 + 2)
    }

    /// `sum_{|x| <= t} mix(x, t)`.
    pub fn omega(&self, t: u64) -> Dyadic {
        let base: Dyadic = (0..=t).map(|n| Dyadic::pow2_neg(n + 2)).sum();
        let machine: Dyadic = self
            .by_output
            .iter()
            .filter(|(x, _)| x.len() as u64 <= t)
            .map(|(x, _)| self.machine(x, t))
            .sum();
        &base + &machine.half()
    }
}

/// Bijective binary numeral: `n + 1` in binary without its leading 1.
pub fn numeral(n: u64) -> Vec<bool> {
    let v = n + 1;
    let width = 64 - v.leading_zeros() as usize;
    (0..width - 1).rev().map(|i| v >> i & 1 == 1).collect()
}

pub fn bs(bits: &[bool]) -> BitString {
    BitString::from_bits(bits.to_vec())
}

/// Bit `i` (1-based, weight `2^-i`) of a dyadic in `[0, 1)`.
pub fn fraction_bit(d: &Dyadic, i: u64) -> bool {
    let scale = d.scale();
    if i > scale {
        return false;
    }
    (d.mantissa() >> (scale - i) as usize).bit(0)
}

pub fn leftmost_diff(a: &Dyadic, b: &Dyadic) -> Option<u64> {
    let top = a.scale().max(b.scale());
    (1..=top).find(|&i| fraction_bit(a, i) != fraction_bit(b, i))
}
