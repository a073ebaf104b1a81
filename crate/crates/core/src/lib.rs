//! Classical and weak (barycentric) optimal transport between finitely
//! supported measures on the real line.
//!
//! The weak cost `T̄_θ(ν|μ)` is computed by sampling both measures on a
//! common uniform grid, projecting the source quantiles onto the
//! permutahedron of the target quantiles, and reading off the optimizer.
//! Around that core sit the convex order and majorization tests, Rado and
//! Strassen decompositions, transport-entropy diagnostics, and brute-force
//! oracles used to referee all of it.
//!
//! Every numeric routine is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix `f64`.
//!
//! ```
//! use weakot::{weak_cost, CostFunction, Measure, Refinement};
//!
//! let mu = Measure::uniform(&[0.0, 2.0]).unwrap();
//! let nu = Measure::uniform(&[-1.0, 1.0]).unwrap();
//! let theta = CostFunction::power(2.0).unwrap();
//! let r = weak_cost(&nu, &mu, &theta, Refinement::Auto).unwrap();
//! assert!((r.value - 1.0).abs() < 1e-12);
//! ```

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod costs;
pub mod error;
pub mod inequalities;
pub mod io;
pub mod measures;
pub mod oracle;
pub mod permutahedron;
pub mod scalar;
pub mod weak_transport;

pub use costs::{parse_theta, CostFunction};
pub use error::{Error, Result};
pub use measures::{convex_order, majorize, ConvexOrder, DiscreteMeasure, Majorization, UniformVector};
pub use permutahedron::{project, ProjectionResult};
pub use scalar::Scalar;
pub use weak_transport::{
    classical_cost, optimal_weak_coupling, rado_decompose, strassen_kernel, weak_cost, Refinement,
};

pub type Measure = DiscreteMeasure<f64>;
pub type Cost = CostFunction<f64>;
pub type Projection = ProjectionResult<f64>;
pub type WeakCost = weak_transport::WeakCostResult<f64>;
pub type Coupling = weak_transport::WeakCoupling<f64>;
pub type Kernel = weak_transport::MartingaleKernel<f64>;
pub type Doubly = weak_transport::DoublyStochastic<f64>;
