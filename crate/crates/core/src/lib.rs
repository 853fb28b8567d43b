#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod approx;
pub mod calculus;
mod dd;
pub mod error;
pub mod function;
pub mod integral;
pub mod lp;
pub mod polyhedron;
pub mod rational;
pub mod report;

pub use approx::{ApproxPair, ApproxRun, ApproxStep};
pub use calculus::{
    DecompositionCertificate, EpigraphSumSet, NormalSetCones, RestrictedCheck, Splitting,
};
pub use error::{CalcError, Result};
pub use function::{eps_normal, AffinePiece, EpsSubdiffSet, PolyhedralConvexFunction};
pub use integral::{
    DiscreteMeasureSpace, ErrorAllocation, IntegralInstance, IntegrandFamily, SubspaceRestriction,
};
pub use polyhedron::{Generators, HalfSpace, Polyhedron};
pub use rational::{q, Extended, Rational, Vector};
pub use report::{CheckReport, Counterexample, Status, Witness};
