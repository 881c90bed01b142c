//! Ranks, border ranks and secant varieties of multiparticle quantum states
//! (distinguishable, bosonic and fermionic).

pub mod catalog;
pub mod degenerations;
pub mod error;
pub mod invariants;
pub mod ket;
pub mod linalg;
pub mod rank;
pub mod tensor;
pub mod textfmt;
pub mod varieties;
pub mod waring;

pub use error::{Error, Result};
pub use ket::{format_ket, parse_ket};
pub use linalg::{CMatrix, C64};
pub use tensor::{make_tensor, proj_distance, Kind, ProjectiveState, SystemSpec, Tensor};
