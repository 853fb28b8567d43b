//! Structured outcomes of the identity checks.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::CalcError;
use crate::rational::{Extended, Rational, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
        }
    }
}

/// Which closure or limit operations collapsed to the identity in a check.
pub const CLOSURE_NOTE: &str =
    "weak-* closures and closed convex hulls act as the identity on polyhedral data in finite dimension";
pub const LIMIT_NOTE: &str =
    "intersections over gamma > 0 of budget-(eps + gamma) unions equal the gamma = 0 union for polyhedral data";
pub const SELECTION_NOTE: &str =
    "over finitely many atoms, weak-* and Bochner integrable selections coincide and there is no singular part";
pub const NORM_NOTE: &str = "primal displacement measured in the max-norm, dual shift in the 1-norm";
pub const PROJECTION_NOTE: &str =
    "the normal component is carried exactly by the decomposition instead of projection corrections";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// A verified decomposition of `target`.
    Certificate {
        target: Vector,
        eps1: Rational,
        eps2: Rational,
        ell: Vec<Rational>,
        selections: Vec<Vector>,
        normal: Vector,
    },
    /// A point assembled from sampled selections, with its Fenchel gap.
    Sample { point: Vector, gap: Rational },
    /// An unbounded direction of the left-hand side matched on the right.
    Ray { direction: Vector },
    /// Two constructions found equal.
    SetEquality { left: &'static str, right: &'static str },
    /// Two values found equal at a point.
    ValueMatch { point: Vector, value: Extended },
    /// One step of an approximation run.
    Step {
        index: usize,
        eps: Rational,
        lambda: Rational,
        residual_integral: Rational,
        displacement: Rational,
        normal: Vector,
    },
    /// Differentiability verdicts with the gradient if any.
    Differentiability {
        point: Vector,
        differentiable: bool,
        gradient: Option<Vector>,
    },
}

/// Data that reproduces a failure when fed back to the named check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub description: String,
    pub point: Option<Vector>,
    pub eps: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub check: &'static str,
    pub status: Status,
    pub witnesses: Vec<Witness>,
    pub counterexample: Option<Counterexample>,
    pub notes: Vec<&'static str>,
}

impl CheckReport {
    pub fn new(check: &'static str) -> Self {
        CheckReport {
            check,
            status: Status::Pass,
            witnesses: Vec::new(),
            counterexample: None,
            notes: Vec::new(),
        }
    }

    pub fn with_notes(mut self, notes: &[&'static str]) -> Self {
        self.notes.extend_from_slice(notes);
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Records the first failure; later failures are ignored.
    pub fn fail(&mut self, description: String, point: Option<Vector>, eps: Option<Rational>) {
        if self.status == Status::Pass {
            self.status = Status::Fail;
            self.counterexample = Some(Counterexample {
                description,
                point,
                eps,
            });
        }
    }

    /// Merges a sub-check, keeping its witnesses and first failure.
    pub fn absorb(&mut self, other: CheckReport) {
        self.witnesses.extend(other.witnesses);
        for n in other.notes {
            if !self.notes.contains(&n) {
                self.notes.push(n);
            }
        }
        if let (Status::Fail, Some(c)) = (other.status, other.counterexample) {
            let description = alloc::format!("{}: {}", other.check, c.description);
            self.fail(description, c.point, c.eps);
        }
    }

    /// `Err(TheoremViolation)` for a failing report.
    pub fn into_result(self) -> Result<CheckReport, CalcError> {
        match (&self.status, &self.counterexample) {
            (Status::Fail, Some(c)) => Err(CalcError::TheoremViolation {
                theorem: self.check,
                detail: c.description.clone(),
            }),
            _ => Ok(self),
        }
    }
}
