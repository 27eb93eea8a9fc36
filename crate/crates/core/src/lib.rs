//! Market equilibria for Arrow-Debreu economies with separable
//! piecewise-linear concave (SPLC) utilities and SPLC production, computed
//! exactly with Lemke's complementary pivot method.

pub mod analysis;
pub mod equilibrium;
pub mod formulation;
pub mod harness;
pub mod lcp;
pub mod model;
pub mod reduction;
