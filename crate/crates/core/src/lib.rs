//! Finite-propagation operator algebras over finite metric spaces.

pub mod colouring;
pub mod families;
pub mod io;
pub mod kazhdan;
pub mod linalg;
pub mod scalar;
pub mod space;
pub mod spectral;
pub mod transalg;
pub mod verify;
