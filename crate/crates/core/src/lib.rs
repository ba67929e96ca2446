//! Reduction of magnetic Hamiltonian control systems on the Heisenberg group.
//!
//! The crate covers the group and its dual algebra, the magnetic
//! Lie–Poisson structures and their coadjoint orbits, the mechanical
//! connection of a right-invariant metric, magnetic cotangent bundles with
//! their momentum maps, controlled Hamiltonian dynamics, and the regular
//! point reduction of those systems together with numerical checks of the
//! reduction theorems.

pub mod connection;
pub mod heisenberg;
pub mod magnetic;
pub mod numerics;
pub mod poisson;
pub mod rch;
pub mod reduction;
pub mod report;
pub mod suite;

pub use heisenberg::{bracket, coad_star, exp, AlgebraElement, CoAlgebraElement, GroupElement, Vec2, DEFAULT_TOL};
pub use magnetic::{ExtendedPhasePoint, MagneticError, MagneticField, PhasePoint, ReductionChart};
pub use numerics::{Method, SweepRng};
pub use poisson::{
    BracketSign, DualFunction, MagneticCocycle, OrbitDescriptor, OrbitFunction, OrbitKind, OrbitPoint, OrbitVector,
    PoissonError,
};
pub use rch::{ControlSubset, FiberMap, Hamiltonian, KineticMetric, ParticleParams, RCHSystem, RchError, Trajectory};
pub use reduction::{
    reduce_system, reduce_system_with, DiffeoSpec, KKSystem, ReduceOptions, ReducedRCHSystem, ReductionError,
};
pub use report::CheckResult;
