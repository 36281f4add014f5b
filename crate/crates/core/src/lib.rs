pub mod data;
pub mod dilated;
pub mod equivariant_ops;
pub mod error;
pub mod harmonics;
pub mod network;
pub mod rng;
pub mod scalar;
pub mod signals;
pub mod verify;
