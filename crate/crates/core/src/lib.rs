//! Numerical laboratory for the stability of the Hardy–Sobolev inequality in
//! cylindrical coordinates.

pub mod acceptance;
pub mod cylinder;
pub mod error;
pub mod euclidean;
pub mod families;
pub mod fit;
pub mod manifold;
pub mod optimize;
pub mod params;
pub mod report;
pub mod scalar;
pub mod search;
pub mod special;
pub mod spectrum;

pub use error::{Error, Result};
pub use params::{CriticalLevels, Params};
pub use scalar::Real;

pub type Params64 = Params<f64>;
pub type Params32 = Params<f32>;

pub type Grid64 = cylinder::Grid<f64>;
pub type Grid32 = cylinder::Grid<f32>;
pub type CylinderField64 = cylinder::CylinderField<f64>;
pub type CylinderField32 = cylinder::CylinderField<f32>;
