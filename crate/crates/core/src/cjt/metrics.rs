use crate::error::{Error, Result};

/// Spectral efficiency ceiling, roughly the 256QAM limit.
pub const SE_CAP: f64 = 7.4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstRecord {
    pub size_bits: f64,
    pub duration_s: f64,
}

impl BurstRecord {
    pub fn new(size_bits: f64, duration_s: f64) -> Result<Self> {
        if !(size_bits > 0.0 && size_bits.is_finite()) {
            return Err(Error::invalid("size_bits", "must be positive"));
        }
        if !(duration_s > 0.0 && duration_s.is_finite()) {
            return Err(Error::invalid("duration_s", "must be positive"));
        }
        Ok(Self { size_bits, duration_s })
    }
}

/// User perceived throughput `Σ S_i / Σ T_i`.
pub fn upt(bursts: &[BurstRecord]) -> Result<f64> {
    if bursts.is_empty() {
        return Err(Error::EmptyInput("bursts"));
    }
    let bits: f64 = bursts.iter().map(|b| b.size_bits).sum();
    let time: f64 = bursts.iter().map(|b| b.duration_s).sum();
    if !(time > 0.0) {
        return Err(Error::invalid("duration_s", "total duration must be positive"));
    }
    Ok(bits / time)
}

/// TRPs within `threshold_db` of the strongest (inclusive).
pub fn coordination_set(rsrp_dbm: &[f64], threshold_db: f64) -> Result<Vec<usize>> {
    if rsrp_dbm.is_empty() {
        return Err(Error::EmptyInput("rsrp"));
    }
    let mut serving = 0;
    for (i, &r) in rsrp_dbm.iter().enumerate() {
        if r > rsrp_dbm[serving] {
            serving = i;
        }
    }
    let best = rsrp_dbm[serving];
    Ok((0..rsrp_dbm.len()).filter(|&i| best - rsrp_dbm[i] <= threshold_db).collect())
}

/// Region 1 below 3 dB, 2 in `[3, 10)`, 3 in `[10, 15)`, 4 from 15 dB.
pub fn rsrp_region(gap_db: f64) -> Result<u8> {
    if gap_db.is_nan() || gap_db < 0.0 {
        return Err(Error::invalid("gap_db", format!("{gap_db} must be non-negative")));
    }
    Ok(if gap_db < 3.0 {
        1
    } else if gap_db < 10.0 {
        2
    } else if gap_db < 15.0 {
        3
    } else {
        4
    })
}

pub fn spectral_efficiency(sinr: f64) -> f64 {
    (1.0 + sinr.max(0.0)).log2().min(SE_CAP)
}
