pub mod error;
pub mod moo;
pub mod netmodel;
pub mod objectives;
pub mod optimizer;
pub mod powerflow;
pub mod scenario;
pub mod study;

pub use error::{Error, Result};
