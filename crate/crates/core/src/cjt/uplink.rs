use crate::error::{Error, Result};
use crate::linalg::{fro_sq, unit_root, CMatrix, CVector, C64};

/// Weighted CSI-RS indication of an uplink precoder.
#[derive(Debug, Clone, PartialEq)]
pub struct UlPrecoder {
    /// Unit-norm downlink weight maximising `‖H w‖²`.
    pub w_dl: CVector,
    /// `H w_dl` as received by the UE.
    pub p_ul_raw: CVector,
    /// `p_ul_raw` scaled to unit norm.
    pub p_ul: CVector,
    /// `‖H w_dl‖²`.
    pub gain: f64,
}

impl UlPrecoder {
    /// Transmit weights for the reciprocal uplink channel `Hᵀ`.
    pub fn uplink_weights(&self) -> CVector {
        self.p_ul.map(|z| z.conj())
    }
}

/// `H` is `n_Rx × n_Tx` (UE antennas by BS antennas).
pub fn ul_precoder_weighted_csirs(h: &CMatrix) -> Result<UlPrecoder> {
    let (n_rx, n_tx) = h.shape();
    if n_rx == 0 || n_tx < n_rx {
        return Err(Error::invalid("H", format!("need n_Tx ≥ n_Rx ≥ 1, got {n_rx} × {n_tx}")));
    }
    if fro_sq(h) == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let svd = h.clone().svd(false, true);
    let (best, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    let v_t = svd.v_t.expect("right singular vectors requested");
    let w_dl: CVector = v_t.row(best).adjoint();
    let p_ul_raw = h * &w_dl;
    let gain = p_ul_raw.norm_squared();
    let p_ul = p_ul_raw.unscale(gain.sqrt());
    Ok(UlPrecoder { w_dl, p_ul_raw, p_ul, gain })
}

/// Unit-norm vectors with first entry 1 and the rest from `{1, j, −1, −j}`.
pub fn coarse_codebook(n: usize) -> Vec<CVector> {
    if n == 0 {
        return Vec::new();
    }
    let count = 4usize.pow(n as u32 - 1);
    let scale = 1.0 / (n as f64).sqrt();
    (0..count)
        .map(|mut code| {
            CVector::from_fn(n, |i, _| {
                if i == 0 {
                    return C64::new(scale, 0.0);
                }
                let d = code % 4;
                code /= 4;
                unit_root(d as i64, 4) * scale
            })
        })
        .collect()
}

/// Best coarse codeword for the uplink channel `g` (`n_BS × n_UE`).
pub fn coarse_ul_precoder(g: &CMatrix) -> CVector {
    let mut best = (f64::NEG_INFINITY, CVector::zeros(g.ncols()));
    for w in coarse_codebook(g.ncols()) {
        let m = (g * &w).norm_squared();
        if m > best.0 {
            best = (m, w);
        }
    }
    best.1
}

/// Sum of `log₂(1 + SINR)` under a linear MMSE receiver.
pub fn uplink_sum_rate(uplink: &[CMatrix], weights: &[CVector], noise_power: f64) -> Result<f64> {
    if uplink.len() != weights.len() {
        return Err(Error::dims("uplink weights", uplink.len(), weights.len()));
    }
    let Some(first) = uplink.first() else {
        return Err(Error::EmptyInput("uplink channels"));
    };
    let n_bs = first.nrows();
    let effective: Vec<CVector> = uplink
        .iter()
        .zip(weights)
        .map(|(g, w)| {
            if g.nrows() != n_bs || g.ncols() != w.len() {
                return Err(Error::dims("uplink channel", n_bs * w.len(), g.nrows() * g.ncols()));
            }
            Ok(g * w)
        })
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for (u, gu) in effective.iter().enumerate() {
        let mut r = CMatrix::identity(n_bs, n_bs) * C64::new(noise_power, 0.0);
        for (v, gv) in effective.iter().enumerate() {
            if v != u {
                r += gv * gv.adjoint();
            }
        }
        let inv = r.try_inverse().ok_or_else(|| Error::invalid("noise_power", "interference covariance is singular"))?;
        let s = (gu.adjoint() * inv * gu)[(0, 0)].re;
        total += (1.0 + s).log2();
    }
    Ok(total)
}
