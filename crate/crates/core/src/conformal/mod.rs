//! Möbius group, analytic maps with 3-jets, the Schwarzian derivative and
//! the ellipse/pinch families.

mod ellipse;
mod maps;
mod mobius;
mod point;
mod riemann;
mod schwarzian;

pub use ellipse::{ellipse_boundary, EllipseSpec};
pub use maps::{elongation_map, joukowski_map, pinch_map, AnalyticMap, DirectionField, Jet, Rational};
pub use mobius::{gen_scale_map, MobiusMap};
pub use point::ComplexPoint;
pub use riemann::{unit_ellipse_series, EllipseSeries};
pub use schwarzian::{normal_form, schwarzian, schwarzian_with_sign, POLE_BRANCH_SIGN};

#[cfg(test)]
mod tests;
