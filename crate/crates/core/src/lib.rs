//! Desk-scale simulation of massive-MIMO CSI acquisition and feedback.
//!
//! Modules:
//! - [`channel`]: seeded clustered multipath channels and their bases.
//! - [`codebook`]: Type-I, eType-II, multi-TRP CJT and Doppler-domain CSI reports.
//! - [`srs`]: uplink sounding with cyclic-shift hopping and delay-domain estimation.
//! - [`prediction`]: Doppler extraction and CSI prediction.
//! - [`cjt`]: SINR/UPT evaluation, coordination sets, uplink precoding, DMRS OCC.
//! - [`beam`]: beam-indication latency simulation.
//! - [`experiment`]: configuration, orchestration and CSV output.

pub mod beam;
pub mod channel;
pub mod cjt;
pub mod codebook;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod prediction;
pub mod srs;
pub mod stats;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
