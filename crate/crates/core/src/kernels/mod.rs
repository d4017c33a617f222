//! Step distributions, convolution powers and truncated Green functions.

pub mod convolve;
pub mod green;
pub mod lattice;
pub mod lumped;
pub mod measure;

pub use convolve::{convolve, DistVector, ElementWalk, Weight};
pub use green::{
    first_return_kernel, first_return_kernel_pruned, green_truncated, green_truncated_with, restricted_green,
    spectral_radius_lower, FirstReturn, GreenEstimate, GreenOptions,
};
pub use lattice::lattice_green;
pub use measure::{parse_rational, q, rational_from_f64, standard_measure, Measure, MeasureKind, Q};
