#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

//! Exact and asymptotic computations around the largest prime factor P(n),
//! the Smarandache function S(n) and the count N(x) of `2 ≤ n ≤ x` with
//! `n ∤ P(n)!`.

pub mod asymptotics;
pub mod dickman;
pub mod error;
pub mod integrals;
pub mod quadrature;
pub mod sieve;
pub mod smarandache;
pub mod smooth;
pub mod sum;
pub mod zeta;

pub use dickman::{build_rho_table, DickmanTable};
pub use error::{Category, Error, Result};
pub use quadrature::{Integral, Quadrature};
pub use sieve::{build_sieve, BasePrimes, FactorSieve, Factorization, ScanConfig};
pub use smarandache::{count_n, exact_sums, smarandache, ExactSumsReport};
pub use smooth::{psi_exact, PsiMethod, PsiQuery};
