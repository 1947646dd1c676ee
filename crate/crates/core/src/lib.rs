pub mod arith;
pub mod cyclo;
pub mod epsilon;
pub mod error;
pub mod group;
pub mod group_ring;
pub mod k1;
pub mod linalg;
pub mod par;
pub mod reciprocity;
pub mod residue;

pub use cyclo::{CycloElem, CycloModulus};
pub use error::{Error, Result};
