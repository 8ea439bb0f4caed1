//! Block-structured complex networks with unitary diagonal blocks, trained by
//! a Cayley-retraction Adam on the Stiefel manifold, plus a fidelity-kernel
//! SVM pipeline and the supporting data/checkpoint plumbing.

pub mod autograd;
pub mod checkpoint;
pub mod config;
pub mod dataio;
pub mod encoder;
pub mod error;
pub mod linalg;
pub mod net;
pub mod optim;
pub mod qkernel;
pub mod train;

pub use error::{Error, Result};
