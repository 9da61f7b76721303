//! Point spectrum of the jump-boundary generator from the zeros of its
//! characteristic determinant.

mod contour;
mod determinant;
mod spectrum;

pub use contour::{count_zeros, count_zeros_with, ComplexBox};
pub use determinant::{characteristic_det, CharDeterminant, ScaledDet};
pub use spectrum::{
    auto_re_max, find_spectrum, find_spectrum_with, gap_curve, gap_curve_with, GapPoint, SpectrumReport,
};

pub(crate) use spectrum::gap_at;
