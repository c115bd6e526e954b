//! Resource theory of quantum coherence: incoherent states and instruments,
//! coherence measures, constructive protocols and a randomized lab that
//! checks the monotonicity conditions numerically.

pub mod channel;
pub mod entropy;
pub mod error;
pub mod io;
pub mod lab;
pub mod linalg;
pub mod measures;
pub mod optimize;
pub mod protocols;
pub mod state;

pub use error::{Error, Result};
