//! Equivariant toric blowups for monomial ideals.
//!
//! Computes group-stable blowup towers that principalize monomial ideal
//! sheaves, simplify finite collections of monomial ideals, and resolve the
//! indeterminacy of monomial rational maps, together with certificates that a
//! finite group of coordinate permutations lifts to every chart.

pub mod atlas;
pub mod collection;
pub mod error;
pub mod group;
pub mod io;
pub mod map;
pub mod monomial;
pub mod principalize;

pub use atlas::{BlowupStep, BlowupTower, Center, Chart, ChartId, IdealSheaf, Substitution};
pub use collection::{simplify_collection, CollectionOutcome, SimplifyOptions};
pub use error::{Error, Result};
pub use group::{transport_between, transport_tower, ChartMap, GroupAction, GroupElement};
pub use map::{resolve, verify_resolution, RationalMapSpec, ResolvedMap};
pub use monomial::{Monomial, MonomialIdeal};
pub use principalize::{principalize, principalize_sheaf, PrincipalizationRun};
