//! Spectral-gap and Cheeger lower bounds for convex bodies, certified
//! numerically via Gaussian fitting and free-energy estimation.
//!
//! The pipeline: sample the uniform measure on a convex body by hit-and-run,
//! measure radial moments (E, S, E₂), estimate the free energy of the
//! origin-centered Gaussian conditioned on the body, bound the overlap
//! between the two measures in relative entropy and total variation, and
//! transfer the Gaussian's isoperimetric constants back to the body. Every
//! inequality used along the way is checked against exact 1D references or
//! quadrature oracles at desk scale.

pub mod bounds;
pub mod constants;
pub mod free_energy;
pub mod geometry;
pub mod mcse;
pub mod overlap;
pub mod pipeline;
pub mod quadrature;
pub mod radial;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod schema;

pub use geometry::{ConvexBody, GeometryError, ShapeKind};
pub use report::{Check, CheckStatus};
pub use sampler::{SampleBatch, SamplerConfig, TargetTag};
