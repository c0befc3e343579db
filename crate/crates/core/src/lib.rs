//! Certified solving of binary quadratic Diophantine equations
//! `a x² + 2b xy + c y² + 2d x + 2e y + f = 0` with congruence and
//! nonnegativity side conditions, together with succinct, independently
//! checkable certificates of solvability and of equivalence of indefinite
//! binary quadratic forms.

pub mod certify;
pub mod compose;
pub mod error;
pub mod floatp;
pub mod forms;
pub mod frontend;
pub mod matrix;
pub mod numtheory;
pub mod pell;

pub use certify::{EquivCert, InfraCert, RejectReason, Rejection, SearchOptions, SolvCert, SolvProof, VerifyReport};
pub use compose::{BiMat, Chain, ChainStep};
pub use error::{Error, Result};
pub use floatp::{Dyadic, Enclosure, FpFormat, FpNum, Sign};
pub use forms::{Cycle, QForm, RealDet};
pub use frontend::{DioSystem, Outcome, SignCase, SystemClass};
pub use matrix::{Mat2, UniMat};
pub use numtheory::Factorization;
pub use pell::{PellSolution, RecurrencePeriod};
