//! Bochner-Kähler geometries generated by elements of su(n,1).

pub mod cli;
pub mod cone;
pub mod curvature;
pub mod grading;
pub mod hermitian;
pub mod json;
pub mod linalg;
pub mod numgeom;
pub mod orbits;
pub mod rng;
pub mod sasaki;
pub mod selftest;
pub mod tower;
