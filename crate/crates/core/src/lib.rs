//! Growth rate, equilibria and resource allocation for logistic populations
//! on leveled stream networks.

pub mod allocation;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod network;
pub mod optimize;
pub mod signs;
pub mod spectral;

pub use allocation::Allocation;
pub use error::{Error, Result};
pub use network::{NodeId, StreamNetwork, ThreeNodeKind};
