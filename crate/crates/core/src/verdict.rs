//! Tri-state answers for finite-depth tests.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Witnessed,
    Refuted,
    Unknown,
}

impl Status {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Witnessed => 0,
            Status::Refuted => 1,
            Status::Unknown => 2,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Witnessed => "witnessed",
            Status::Refuted => "refuted",
            Status::Unknown => "unknown-at-depth",
        })
    }
}

/// A one-sided answer. `witness` is present exactly when the status is
/// witnessed; `evidence` describes the distinguishing feature for refuted
/// answers and what was missing for unknown ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict<W> {
    pub status: Status,
    pub witness: Option<W>,
    pub evidence: String,
    pub depth: usize,
}

impl<W> Verdict<W> {
    pub fn witnessed(witness: W, depth: usize, evidence: impl Into<String>) -> Self {
        Verdict { status: Status::Witnessed, witness: Some(witness), evidence: evidence.into(), depth }
    }

    pub fn refuted(depth: usize, evidence: impl Into<String>) -> Self {
        Verdict { status: Status::Refuted, witness: None, evidence: evidence.into(), depth }
    }

    pub fn unknown(depth: usize, evidence: impl Into<String>) -> Self {
        Verdict { status: Status::Unknown, witness: None, evidence: evidence.into(), depth }
    }

    pub fn is_witnessed(&self) -> bool {
        self.status == Status::Witnessed
    }

    pub fn is_refuted(&self) -> bool {
        self.status == Status::Refuted
    }

    pub fn is_unknown(&self) -> bool {
        self.status == Status::Unknown
    }

    pub fn map<V>(self, f: impl FnOnce(W) -> V) -> Verdict<V> {
        Verdict { status: self.status, witness: self.witness.map(f), evidence: self.evidence, depth: self.depth }
    }

    /// Drops the witness, keeping status and evidence.
    pub fn erase(self) -> Verdict<()> {
        Verdict { status: self.status, witness: self.witness.map(|_| ()), evidence: self.evidence, depth: self.depth }
    }
}
