//! Uplink sounding: root sequences, cyclic-shift hopping, delay-domain
//! power-delay-profile accumulation, tap selection and channel estimation.
//!
//! Delay-domain vectors use the inverse DFT with `1/M` scaling, so a flat
//! all-ones channel maps to a unit impulse at tap 0 and
//! `Σ|ỹᴰ|² = Σ|ỹ|² / M`.

mod estimation;
mod schedule;
mod sequence;
mod simulation;

pub use estimation::{
    accumulate_pdp, cs_shift_taps, despread, estimate_channel, from_delay_domain, mse, receive, select_taps, to_delay_domain,
    ChannelEstimate, DelayProfile, SrsObservation, TapSelection,
};
pub use schedule::{assemble_sounded_channel, resource_schedule, SrsAssignment, SrsResourceMap, SrsSchedule};
pub use sequence::{apply_cs, gen_sequence, gen_sequence_for_allocation, CsMode, CsSchedule, SrsSequence};
pub use simulation::{interference_only_pdp, run_srs_drop, tap_error_count, SrsDropResult, SrsScenario};
