//! Limits of the rescaled overlaps between singular vectors of `X_t` and of
//! its top-left block.

pub mod characteristic;
pub mod closed_form;
pub mod general;
pub mod inversion;
pub mod normalization;
pub mod resolvent;

pub use characteristic::{characteristic_map, CharacteristicPoint};
pub use closed_form::{mp_kernel_overlaps, mp_overlap_triple, KernelOverlaps, OverlapTriple};
pub use general::{general_kernel_overlaps, general_overlap_triple, DensityScan, GeneralModel};
pub use inversion::{invert_bulk, invert_kernel_u, BulkGuard, KernelCase, ResolventEvaluator};
pub use normalization::{kernel_row_sum, normalization_check};
pub use resolvent::{
    initial_resolvents_from_a, propagate_resolvents, InitialOverlapTables, InitialResolvents, Propagated,
    ResolventValues, TableResolvents,
};
