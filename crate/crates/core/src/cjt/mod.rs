//! Multi-TRP evaluation: SINR, throughput metrics, coordination sets,
//! uplink precoder indication and DMRS port multiplexing.

mod drop;
mod metrics;
mod occ;
mod sinr;
mod uplink;

pub use drop::{run_drop, DropLayout, DropScenario, DropSummary, Feedback, LinkChannel, UeResult};
pub use metrics::{coordination_set, rsrp_region, spectral_efficiency, upt, BurstRecord, SE_CAP};
pub use occ::{occ_codes, occ_leakage_sweep, occ_port_estimation, OccConfig, OccEstimate, OccSweepPoint};
pub use sinr::{embed_precoder, sinr, stack_channels, SinrScenario, TransmissionMode};
pub use uplink::{coarse_codebook, coarse_ul_precoder, ul_precoder_weighted_csirs, uplink_sum_rate, UlPrecoder};
