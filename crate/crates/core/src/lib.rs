//! Numerical laboratory for the 2-D semilinear equation `−Δu = f(u)`:
//! domains, fields, nonlinearities, solvers, critical-point topology and
//! local Pohozaev ledgers.

pub mod field;
pub mod geometry;
pub mod lattice;
pub mod nonlinearity;
pub mod pohozaev;
pub mod quadrature;
pub mod registry;
pub mod solver;
pub mod topology;
pub mod verify;

pub use geometry::{Domain, Point, Vec2};
