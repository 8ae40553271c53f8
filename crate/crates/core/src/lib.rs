pub mod error;
pub mod failure;
pub mod fixtures;
pub mod lp;
pub mod net;
pub mod oracle;
pub mod prob;
pub mod realize;
pub mod robust;
pub mod scalar;

pub use error::{Error, Result};

/// Double-precision linear program.
pub type LinearProgram = lp::LinearProgram<f64>;
/// Linear program over exact rationals.
pub type ExactLinearProgram = lp::LinearProgram<num_rational::BigRational>;
/// Double-precision reservation matrix.
pub type ReservationMatrix = realize::ReservationMatrix<f64>;
/// Reservation matrix over exact rationals.
pub type ExactReservationMatrix = realize::ReservationMatrix<num_rational::BigRational>;
