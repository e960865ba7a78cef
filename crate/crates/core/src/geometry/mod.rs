//! Coordinate charts, λ-polynomial vector fields, forms, frames and
//! structure constants in five dimensions.

mod chart;
mod field;
mod forms;
mod lambda;

pub use chart::{digit_jet_name, multi_indices, Chart, JetNaming, JetSpace};
pub use field::{commutator, VectorFieldL};
pub use forms::{
    dual_frame, dual_of_matrix, structure_constants, wedge_eval, AdaptedFrame, CoframeField, DualFrame,
    ExteriorForm, FrameField, OneForm, StructureConstants, StructureJet,
};
pub use lambda::{horner, LambdaPoly, MAX_DEGREE};
