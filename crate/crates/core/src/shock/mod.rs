//! Initial conditions, labelled tracking and the observables X(t), 𝒫, ℋ.

mod ic;
mod observables;
mod params;

pub use ic::{
    build_finite_omega, build_reversed_step, build_step, build_shock_ic, build_variant_ics, shock_window, LabeledTracking,
    VariantIcs,
};
pub use observables::{
    compute_ph, max_label_left_of, max_label_right_of, run_shock_replica, second_class_x, second_class_x_pair,
    ObservableRecord, PhValue, CSV_HEADER,
};
pub use params::{c_of_m, ShockParams};
