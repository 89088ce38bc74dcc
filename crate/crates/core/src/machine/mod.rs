//! The reference prefix machine RPM-1.
//!
//! Instructions, decoded from the program tape on demand:
//!
//! | bits | effect                                   | cost            |
//! |------|------------------------------------------|-----------------|
//! | `0b` | append literal bit `b`                   | 1               |
//! | `100`| halt                                     | 1               |
//! | `101`| append a copy of the current output      | `|output| + 1`  |
//! | `110`| append the next condition bit            | 1               |
//! | `111`| diverge                                  |                 |
//!
//! Reading the condition past its end diverges. A program belongs to the
//! halting domain only if it halts having read exactly its own bits, which
//! makes each per-condition domain prefix-free.

pub mod cache;
mod enumerate;
mod index;
mod rpm;

pub use cache::{CacheError, CacheStats, EnumerationCache};
pub use enumerate::{
    enumerate_halting, enumerate_with, kraft_sum, prefix_violations, Enumeration, TimeoutRecord,
};
pub use index::MassIndex;
pub use rpm::{run, HaltRecord, Opcode, RunOutcome, VERSION_ID};
