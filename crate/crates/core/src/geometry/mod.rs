//! Charts and exterior calculus.
//!
//! Interior products follow `i(X_1∧…∧X_m)Ω = i(X_m)…i(X_1)Ω`, and the
//! forms `d^{m-1}x_mu` are always produced as `i(∂_mu) d^m x`.

mod chart;
mod form;
mod section;
mod vector;

pub use chart::{Chart, ChartError, ChartSpec, Coordinate, ExtendedScope, Role};
pub use form::{Form, FormParseError};
pub use section::{prolong_contract, pullback, pullback_map, Section, SectionError};
pub use vector::{dbar, MultiVector, VectorField};
