//! Term-level workbench for distributive laws of monads over Moore behaviour
//! functors: free terms, quotient monads by normal forms, GSOS rule engines,
//! an equation-preservation checker, and coinductive solvers.

pub mod behaviour;
pub mod cfg;
pub mod dsl;
pub mod error;
pub mod gsos;
pub mod poly;
pub mod preservation;
pub mod solver;
pub mod sym;
pub mod terms;
pub mod theories;

pub use behaviour::{relation_lift, Alphabet, Output, OutputKind, Step};
pub use error::{Error, Result};
pub use poly::{Rational, Scalar};
pub use sym::Sym;
pub use terms::{enumerate_terms, substitute, Signature, Term};
pub use theories::{instantiate_scheme, EquationScheme, Equiv, NormalForm, Theory};
pub use gsos::{extend_lambda, morphism_square_check, quotient_lambda, DistLaw, GsosSpec};
pub use preservation::{check_preservation, PreservationReport, Verdict};
pub use solver::{operational_model, unfold, CorecSystem};
pub use cfg::GnfGrammar;
