//! Free scalar quantum fields smeared by test functions.
//!
//! The crate is organised bottom-up:
//!
//! - [`testfn`]: Gaussian packets, grid bumps, contracted envelopes.
//! - [`freefield`]: the mass-shell inner product `(f, g)`, commutators and
//!   1+1 Green functions.
//! - [`wick`]: normal-ordered creation/annihilation polynomials and vacuum
//!   expectation values.
//! - [`fock`]: truncated bosonic Fock spaces over a finite mode basis.
//! - [`interacting`]: the smeared interaction `L[f]` and the first-order
//!   nonlinear field.

pub mod error;
pub mod fock;
pub mod freefield;
pub mod interacting;
pub mod numeric;
pub mod registry;
pub mod spacetime;
pub mod testfn;
pub mod wick;

pub use error::{Error, Result};
pub use fock::{FockMatrix, FockSpec};
pub use interacting::{CenterGrid, Interaction, InteractionSpec, InteractionTerm, LocalOperator, Normalization, PacketFamily, SweepObservable, SweepRow};
pub use freefield::{FreeField, GramTable, MassShellQuadrature, PairingMethod, QuadratureSpec, SingleParticleVector};
pub use registry::{FieldLabel, FnId, ModeLabel, Pairing, Registry};
pub use spacetime::{Boost, SpacetimeDim, SupportBox};
pub use testfn::{
    contract_envelope, BumpFunction, EnvelopeSpec, EnvelopeVariant, GaussianPacket, GaussianSum, Grid, ScaleFunctionalSpec,
    TestFunction,
};
pub use wick::{MonomialKey, OperatorPoly, Wick};

/// Crate version, recorded in result provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
