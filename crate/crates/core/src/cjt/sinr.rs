use crate::error::{Error, Result};
use crate::linalg::{fro_sq, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransmissionMode {
    SingleTrp,
    Cjt,
}

impl TransmissionMode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SingleTrp => "single_trp",
            Self::Cjt => "cjt",
        }
    }
}

/// Per-UE channels `n_Rx × (N·n_Tx)` and precoders `(N·n_Tx) × R_u`. In
/// single-TRP mode each precoder is zero outside its serving TRP's rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrScenario {
    pub channels: Vec<CMatrix>,
    pub precoders: Vec<CMatrix>,
    pub mode: TransmissionMode,
    pub noise_power: f64,
}

/// Concatenates per-TRP channels column-wise.
pub fn stack_channels(per_trp: &[CMatrix]) -> Result<CMatrix> {
    let first = per_trp.first().ok_or(Error::EmptyInput("per-TRP channels"))?;
    let rows = first.nrows();
    let cols: usize = per_trp.iter().map(|h| h.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut c = 0;
    for h in per_trp {
        if h.nrows() != rows {
            return Err(Error::dims("stacked channel rows", rows, h.nrows()));
        }
        out.view_mut((0, c), (rows, h.ncols())).copy_from(h);
        c += h.ncols();
    }
    Ok(out)
}

/// Places a single-TRP precoder into the rows of TRP `trp`.
pub fn embed_precoder(local: &CMatrix, trp: usize, trp_count: usize) -> Result<CMatrix> {
    if trp >= trp_count {
        return Err(Error::invalid("trp", format!("{trp} is not below {trp_count}")));
    }
    let p = local.nrows();
    let mut out = CMatrix::zeros(p * trp_count, local.ncols());
    out.view_mut((trp * p, 0), local.shape()).copy_from(local);
    Ok(out)
}

/// `SINR_u = ‖H_u P_u‖² / (Σ_{v≠u} ‖H_u P_v‖² + n)`.
pub fn sinr(scenario: &SinrScenario) -> Result<Vec<f64>> {
    let n = scenario.channels.len();
    if n == 0 {
        return Err(Error::EmptyInput("channels"));
    }
    if scenario.precoders.len() != n {
        return Err(Error::dims("precoders", n, scenario.precoders.len()));
    }
    if !(scenario.noise_power > 0.0) {
        return Err(Error::invalid("noise_power", "must be positive"));
    }
    for (h, p) in scenario.channels.iter().zip(&scenario.precoders) {
        if h.ncols() != p.nrows() {
            return Err(Error::dims("precoder rows", h.ncols(), p.nrows()));
        }
        if p.ncols() > h.nrows().min(h.ncols()) && p.ncols() > 1 {
            return Err(Error::invalid("rank", format!("{} layers exceed channel dimensions", p.ncols())));
        }
    }
    Ok((0..n)
        .map(|u| {
            let h = &scenario.channels[u];
            let signal = fro_sq(&(h * &scenario.precoders[u]));
            let interference: f64 = (0..n).filter(|&v| v != u).map(|v| fro_sq(&(h * &scenario.precoders[v]))).sum();
            signal / (interference + scenario.noise_power)
        })
        .collect())
}
