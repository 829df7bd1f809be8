//! Pointwise verification that a Riemannian metric and a Poisson bivector
//! are compatible in the sense required for noncommutative deformability:
//! the metric contravariant connection must be flat and torsion-free, its
//! metacurvature must vanish, and the bivector must satisfy the volume
//! divergence condition `d(pi _| eps) = 0`.
//!
//! Everything is computed from first principles on a coordinate chart with
//! an exact truncated-Taylor (jet) engine for higher derivatives; every
//! verdict is a scale-free residual compared against a tolerance. The
//! sign conventions used throughout live in [`conventions`]. A guide with
//! worked examples is in the `book/` directory of the repository; its code
//! snippets run as doc-tests.

pub mod catalog;
pub mod chart;
pub mod chartfile;
pub mod check;
pub mod connection;
pub mod conventions;
pub mod divergence;
mod error;
pub mod expr;
pub mod fields;
pub mod forms;
pub mod jet;
pub mod killing;
pub mod metacurvature;
pub mod report;

pub use chart::Chart;
pub use error::{Error, Result};
pub use expr::{parse_expr, ScalarExpr};
pub use fields::{MetricField, PoissonField, VolumeField};
pub use forms::{FormField, FormValue, MultivectorValue, VectorField};
pub use jet::{eval_jet, Jet};
pub use report::{CompatReport, Verdict};

#[cfg(doctest)]
mod book {
    //! Doc-test stubs that keep every code snippet in the mdbook guide
    //! compiling and passing against the current API.
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/expressions-and-jets.md")]
    pub struct ExpressionsAndJets;
    #[doc = include_str!("../../../book/src/charts-and-fields.md")]
    pub struct ChartsAndFields;
    #[doc = include_str!("../../../book/src/conventions.md")]
    pub struct Conventions;
    #[doc = include_str!("../../../book/src/contravariant-connection.md")]
    pub struct ContravariantConnection;
    #[doc = include_str!("../../../book/src/metacurvature.md")]
    pub struct Metacurvature;
    #[doc = include_str!("../../../book/src/divergence.md")]
    pub struct Divergence;
    #[doc = include_str!("../../../book/src/killing.md")]
    pub struct Killing;
    #[doc = include_str!("../../../book/src/catalog.md")]
    pub struct Catalog;
    #[doc = include_str!("../../../book/src/chart-files.md")]
    pub struct ChartFiles;
}
