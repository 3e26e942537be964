//! Gaussian paths on dyadic grids and 2D Gaussian fields.

mod circulant;
mod path;

pub use circulant::{
    exponential_covariance, sample_field_2d_circulant, CirculantEmbedding, Field2D, MAX_PADDING,
    CLIPPING_TOLERANCE,
};
pub use path::{
    lognormal_of, sample_brownian_bridge, sample_wiener, sample_wiener_prefix, CellPoint, PathKind,
    SamplePath,
};
