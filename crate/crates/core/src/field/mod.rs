//! Discretised functions, weights and the geometric primitives they are
//! integrated over.

mod descriptor;
mod function;
mod grid;
mod region;
mod table;

pub use descriptor::*;
pub use function::{GridFunction, WeightField};
#[allow(unused_imports)]
pub(crate) use function::power_mean;
pub use grid::{BoxDomain, Grid, DEFAULT_RESOLUTION_1D, DEFAULT_RESOLUTION_2D, MAX_DIM};
pub use region::{Cube, CubeId, DyadicCubeSet, Region};
pub use table::{Outside, SampledTable};
