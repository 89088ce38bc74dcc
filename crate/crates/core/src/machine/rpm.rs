//! The RPM-1 instruction set and single-program execution.

use serde::{Deserialize, Serialize};

use crate::numerics::BitString;

pub const VERSION_ID: &str = "RPM-1";

/// One decoded instruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Opcode {
    /// `0b`: append literal bit `b`.
    Literal(bool),
    /// `100`
    Halt,
    /// `101`: append a copy of the current output.
    Copy,
    /// `110`: append the next unread condition bit.
    ReadCond,
    /// `111`
    Diverge,
}

impl Opcode {
    /// Every opcode in lexicographic order of its encoding.
    pub const ALL: [Opcode; 6] = [
        Opcode::Literal(false),
        Opcode::Literal(true),
        Opcode::Halt,
        Opcode::Copy,
        Opcode::ReadCond,
        Opcode::Diverge,
    ];

    pub fn encoding(self) -> &'static [bool] {
        match self {
            Opcode::Literal(false) => &[false, false],
            Opcode::Literal(true) => &[false, true],
            Opcode::Halt => &[true, false, false],
            Opcode::Copy => &[true, false, true],
            Opcode::ReadCond => &[true, true, false],
            Opcode::Diverge => &[true, true, true],
        }
    }
}

/// Result of running one candidate program.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunOutcome {
    Halted {
        output: BitString,
        consumed: usize,
        steps: u64,
    },
    /// The next instruction would exceed the budget; `steps` were executed.
    OutOfTime {
        steps: u64,
    },
    /// The program tape ran out before HALT.
    NeedsBits {
        consumed: usize,
    },
    Diverged,
}

/// Machine state between instructions.
#[derive(Clone, Debug, Default)]
pub(crate) struct Vm {
    pub output: Vec<bool>,
    pub cond_pos: usize,
    pub steps: u64,
}

pub(crate) enum Step {
    Continue,
    Halted,
    Diverged,
    OutOfTime,
}

impl Vm {
    /// Execute one instruction in place. The state is untouched unless the
    /// result is `Continue` or `Halted`.
    pub fn exec(&mut self, op: Opcode, condition: &[bool], budget: u64) -> Step {
        let cost = match op {
            Opcode::Diverge => return Step::Diverged,
            Opcode::ReadCond if self.cond_pos >= condition.len() => return Step::Diverged,
            Opcode::Copy => self.output.len() as u64 + 1,
            _ => 1,
        };
        if self.steps.saturating_add(cost) > budget {
            return Step::OutOfTime;
        }
        self.steps += cost;
        match op {
            Opcode::Literal(b) => self.output.push(b),
            Opcode::Copy => self.output.extend_from_within(..),
            Opcode::ReadCond => {
                self.output.push(condition[self.cond_pos]);
                self.cond_pos += 1;
            }
            Opcode::Halt => return Step::Halted,
            Opcode::Diverge => unreachable!(),
        }
        Step::Continue
    }
}

/// Decode the opcode starting at `pos`, or `None` if the tape ends first.
fn decode(program: &[bool], pos: usize) -> Option<(Opcode, usize)> {
    let first = *program.get(pos)?;
    if !first {
        let b = *program.get(pos + 1)?;
        return Some((Opcode::Literal(b), 2));
    }
    let b1 = *program.get(pos + 1)?;
    let b2 = *program.get(pos + 2)?;
    let op = match (b1, b2) {
        (false, false) => Opcode::Halt,
        (false, true) => Opcode::Copy,
        (true, false) => Opcode::ReadCond,
        (true, true) => Opcode::Diverge,
    };
    Some((op, 3))
}

/// Run `program` on `condition` for at most `budget` steps.
pub fn run(program: &BitString, condition: &BitString, budget: u64) -> RunOutcome {
    let tape = program.bits();
    let mut vm = Vm::default();
    let mut pos = 0;
    loop {
        let Some((op, width)) = decode(tape, pos) else {
            return RunOutcome::NeedsBits {
                consumed: tape.len(),
            };
        };
        match vm.exec(op, condition.bits(), budget) {
            Step::Continue => pos += width,
            Step::Halted => {
                return RunOutcome::Halted {
                    output: BitString::from_bits(vm.output),
                    consumed: pos + width,
                    steps: vm.steps,
                }
            }
            Step::Diverged => return RunOutcome::Diverged,
            Step::OutOfTime => return RunOutcome::OutOfTime { steps: vm.steps },
        }
    }
}

/// One halting computation whose program was read exactly to its end.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HaltRecord {
    pub program: BitString,
    pub condition: BitString,
    pub output: BitString,
    pub steps: u64,
    pub consumed: usize,
}

impl HaltRecord {
    /// First stage at which this record counts: programs of length `<= t`
    /// run for `<= t` steps.
    pub fn appearance(&self) -> u64 {
        self.steps.max(self.program.len() as u64)
    }

    /// Re-run the program and confirm it reproduces this record.
    pub fn replays(&self) -> bool {
        matches!(
            run(&self.program, &self.condition, self.steps),
            RunOutcome::Halted { ref output, consumed, steps }
                if *output == self.output && consumed == self.consumed && steps == self.steps
        ) && self.consumed == self.program.len()
    }
}
