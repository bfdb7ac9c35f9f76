pub mod database;
pub mod error;
pub mod graph;
pub mod io;
pub mod pmi;
pub mod prob;
pub mod query;
pub mod seed;
pub mod sip;

pub use error::{Error, Result};
