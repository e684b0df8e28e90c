//! The two filters run side by side during a cut: one tracks the tool tip
//! and its force model from tip positions, the other tracks tissue and
//! source parameters from isotherm widths.

mod deflection;
mod thermal;

pub use deflection::{deflection_filter_step, DeflectionFilter, DeflectionFilterConfig, ToolMeasurement};
pub use thermal::{thermal_filter_step, ThermalFilter, ThermalFilterConfig, WidthUpdate, DEFAULT_WIDTH_FLOOR};

/// State indices of the deflection filter.
pub mod deflection_index {
    pub use super::deflection::{IDX_C, IDX_D};
}

/// State indices of the thermal filter.
pub mod thermal_index {
    pub use super::thermal::{IDX_C, IDX_LAMBDA, IDX_Q_HAT, IDX_RHO};
}
