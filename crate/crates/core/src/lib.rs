//! Weil representations of symplectic and Heisenberg groups over finite fields, exact
//! cyclotomic arithmetic, Shintani-type norm maps and character checks.

pub mod characters;
pub mod cyclotomic;
pub mod error;
pub mod fieldtower;
pub mod grouplib;
pub mod normmap;
pub mod schrodinger;
pub mod verify;

pub use cyclotomic::CycNum;
pub use error::{Error, Result};
pub use fieldtower::{FieldElem, Tower};
