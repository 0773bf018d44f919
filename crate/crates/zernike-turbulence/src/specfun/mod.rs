//! Special-function kernels.

mod bessel;
pub(crate) mod cg;
mod factorial;
mod hyp1f1;
mod jacobi;

pub use bessel::bessel_j;
pub use cg::{clebsch_gordan, clebsch_gordan_sq, AngularMomentumTriple};
pub use factorial::{ln_binomial, ln_factorial, ln_gamma_half};
pub use hyp1f1::{hyp1f1_neg, ln_hyp1f1_neg};
pub use jacobi::{jacobi_at_zero, jacobi_at_zero_exact};
