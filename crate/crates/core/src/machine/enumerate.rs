//! Exhaustive enumeration of the halting domain by walking the program tree.
//!
//! Programs are read on demand, so every node of the tree is an instruction
//! boundary and every candidate program is visited at most once. Subtrees
//! are independent, which lets the walk fan out across a thread pool; the
//! merged output is sorted, so it is identical for any worker count.

use rayon::prelude::*;
use rayon::ThreadPool;

use super::rpm::{HaltRecord, Opcode, Step, Vm};
use crate::numerics::BitString;

/// A program prefix whose next instruction did not fit in the budget.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TimeoutRecord {
    pub program: BitString,
    pub condition: BitString,
    pub output: BitString,
    pub budget: u64,
    pub consumed: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Enumeration {
    /// Sorted length-then-lexicographic by program.
    pub halts: Vec<HaltRecord>,
    /// Sorted length-then-lexicographic by program prefix.
    pub timeouts: Vec<TimeoutRecord>,
}

struct Node {
    prefix: Vec<bool>,
    vm: Vm,
}

struct Walk<'a> {
    condition: &'a BitString,
    max_len: usize,
    budget: u64,
}

impl Walk<'_> {
    fn expand(&self, node: &Node, out: &mut Enumeration, children: &mut Vec<Node>) {
        for op in Opcode::ALL {
            let enc = op.encoding();
            if node.prefix.len() + enc.len() > self.max_len {
                continue;
            }
            let mut vm = node.vm.clone();
            let step = vm.exec(op, self.condition.bits(), self.budget);
            let mut prefix = node.prefix.clone();
            prefix.extend_from_slice(enc);
            match step {
                Step::Continue => children.push(Node { prefix, vm }),
                Step::Halted => {
                    let consumed = prefix.len();
                    out.halts.push(HaltRecord {
                        program: BitString::from_bits(prefix),
                        condition: self.condition.clone(),
                        output: BitString::from_bits(vm.output),
                        steps: vm.steps,
                        consumed,
                    });
                }
                Step::Diverged => {}
                Step::OutOfTime => {
                    let consumed = prefix.len();
                    out.timeouts.push(TimeoutRecord {
                        program: BitString::from_bits(prefix),
                        condition: self.condition.clone(),
                        output: BitString::from_bits(node.vm.output.clone()),
                        budget: self.budget,
                        consumed,
                    });
                }
            }
        }
    }

    fn explore(&self, node: Node, out: &mut Enumeration) {
        let mut stack = vec![node];
        let mut children = Vec::new();
        while let Some(n) = stack.pop() {
            self.expand(&n, out, &mut children);
            stack.append(&mut children);
        }
    }
}

const FRONTIER_TARGET: usize = 64;

/// Every program of length `<= max_len` that halts within `budget` steps on
/// `condition` having read exactly its own bits, plus the prefixes cut off
/// by the budget. With a pool, subtrees are explored concurrently.
pub fn enumerate_with(
    max_len: usize,
    budget: u64,
    condition: &BitString,
    pool: Option<&ThreadPool>,
) -> Enumeration {
    let walk = Walk {
        condition,
        max_len,
        budget,
    };
    let root = Node {
        prefix: Vec::new(),
        vm: Vm::default(),
    };
    let mut out = Enumeration::default();
    match pool {
        None => walk.explore(root, &mut out),
        Some(pool) => {
            let mut frontier = vec![root];
            while !frontier.is_empty() && frontier.len() < FRONTIER_TARGET {
                let mut next = Vec::new();
                for n in &frontier {
                    walk.expand(n, &mut out, &mut next);
                }
                frontier = next;
            }
            let parts: Vec<Enumeration> = pool.install(|| {
                frontier
                    .into_par_iter()
                    .map(|n| {
                        let mut part = Enumeration::default();
                        walk.explore(n, &mut part);
                        part
                    })
                    .collect()
            });
            for part in parts {
                out.halts.extend(part.halts);
                out.timeouts.extend(part.timeouts);
            }
        }
    }
    out.halts.sort_by(|a, b| a.program.cmp(&b.program));
    out.timeouts.sort_by(|a, b| a.program.cmp(&b.program));
    out
}

/// The halting domain `{p : |p| <= max_len, run(p, condition, budget) halts
/// with consumed = |p|}`, length-then-lexicographic.
pub fn enumerate_halting(max_len: usize, budget: u64, condition: &BitString) -> Vec<HaltRecord> {
    enumerate_with(max_len, budget, condition, None).halts
}

/// Kraft sum `sum 2^-|p|` of a set of records.
pub fn kraft_sum(records: &[HaltRecord]) -> crate::numerics::Dyadic {
    records
        .iter()
        .map(|r| crate::numerics::Dyadic::pow2_neg(r.program.len() as u64))
        .sum()
}

/// Pairs `(a, b)` of distinct programs where `a` is a proper prefix of `b`.
/// Expects input sorted length-then-lexicographic.
pub fn prefix_violations(records: &[HaltRecord]) -> Vec<(BitString, BitString)> {
    let mut lex: Vec<&BitString> = records.iter().map(|r| &r.program).collect();
    lex.sort_by(|a, b| a.bits().cmp(b.bits()));
    // In pure lexicographic order a prefix sorts immediately before the block
    // of its extensions, so adjacent pairs suffice to detect any violation.
    lex.windows(2)
        .filter(|w| w[0].is_prefix_of(w[1]) && w[0] != w[1])
        .map(|w| (w[0].clone(), w[1].clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::rpm::{run, RunOutcome};
    use crate::numerics::{bits, Dyadic};

    fn brute_force(max_len: usize, budget: u64, condition: &BitString) -> Vec<HaltRecord> {
        BitString::all_up_to(max_len)
            .filter_map(|p| match run(&p, condition, budget) {
                RunOutcome::Halted {
                    output,
                    consumed,
                    steps,
                } if consumed == p.len() => Some(HaltRecord {
                    program: p,
                    condition: condition.clone(),
                    output,
                    steps,
                    consumed,
                }),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn small_domains() {
        let d3 = enumerate_halting(3, 10, &bits(""));
        assert_eq!(d3.len(), 1);
        assert_eq!(d3[0].program, bits("100"));
        assert_eq!(d3[0].output, bits(""));
        assert!(enumerate_halting(0, 10, &bits("")).is_empty());
        let d6 = enumerate_halting(6, 10, &bits(""));
        let programs: Vec<String> = d6.iter().map(|r| r.program.to_string()).collect();
        assert_eq!(programs, ["100", "00100", "01100", "101100"]);
        assert_eq!(kraft_sum(&d6), Dyadic::new(13u32.into(), 6));
    }

    #[test]
    fn tree_walk_matches_brute_force() {
        for cond in ["", "0", "1", "01", "110"] {
            let c = bits(cond);
            for budget in [0, 1, 3, 7, 50] {
                assert_eq!(
                    enumerate_halting(12, budget, &c),
                    brute_force(12, budget, &c),
                    "condition {cond:?} budget {budget}"
                );
            }
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        for cond in ["", "10"] {
            let c = bits(cond);
            let seq = enumerate_with(15, 9, &c, None);
            let par = enumerate_with(15, 9, &c, Some(&pool));
            assert_eq!(seq, par);
        }
    }

    #[test]
    fn detects_prefix_violation() {
        let mk = |p: &str| HaltRecord {
            program: bits(p),
            condition: bits(""),
            output: bits(""),
            steps: 1,
            consumed: p.len(),
        };
        assert!(prefix_violations(&[mk("100"), mk("01100")]).is_empty());
        assert_eq!(prefix_violations(&[mk("10"), mk("1011")]).len(), 1);
    }
}
