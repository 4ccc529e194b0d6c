//! Numerical tools for operator spreading and quantum information scrambling.
//!
//! The crate bundles several independent ways of computing out-of-time-ordered
//! correlators and squared commutators (exact diagonalization, Krylov
//! typicality, random-circuit master equations, free-fermion closed forms and
//! MPO/TEBD), plus Haar-ensemble information experiments and the
//! Yoshida–Kitaev decoder.
//!
//! Conventions shared by every module:
//! - qubit site 0 is the most significant bit of a computational-basis index;
//! - entropies and mutual informations are in bits;
//! - randomness always flows from an explicit `u64` seed.

pub mod analysis;
pub mod circuit;
pub mod error;
pub mod fermion;
pub mod field;
pub mod hp;
pub mod info;
pub mod mpo;
pub mod otoc;
pub mod phenom;
pub mod quantum;
pub mod stats;

pub use error::{Error, Result};
pub use field::SpaceTimeField;
pub use quantum::{
    haar_unitary, DenseOperator, DenseState, Pauli, PauliString, Subsystem, C64,
};

/// Version string written into every output's metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
