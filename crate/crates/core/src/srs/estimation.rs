use super::sequence::SrsSequence;
use crate::error::{Error, Result};
use crate::linalg::{complex_normal, C64};
use rand::Rng;
use rustfft::FftPlanner;
use std::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq)]
pub struct SrsObservation {
    pub y: Vec<C64>,
    pub transmission_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayProfile {
    pub pdp: Vec<f64>,
    pub transmissions_accumulated: usize,
    pub noise_floor_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TapSelection {
    pub threshold_factor: f64,
    pub max_taps: usize,
}

impl Default for TapSelection {
    fn default() -> Self {
        Self {
            threshold_factor: 3.0,
            max_taps: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    /// One frequency-domain estimate per transmission.
    pub estimates: Vec<Vec<C64>>,
    /// Normalised squared error against the truth, when supplied.
    pub mse: Option<f64>,
}

/// `y = r∘h + r′∘h′ + w` with `w ~ CN(0, noise_power)`.
pub fn receive<R: Rng + ?Sized>(
    target: &[C64],
    target_seq: &SrsSequence,
    interferer: Option<(&[C64], &SrsSequence)>,
    noise_power: f64,
    transmission_index: usize,
    rng: &mut R,
) -> Result<SrsObservation> {
    let m = target.len();
    if target_seq.values.len() != m {
        return Err(Error::dims("target sequence", m, target_seq.values.len()));
    }
    if let Some((h, s)) = interferer {
        if h.len() != m {
            return Err(Error::dims("interferer channel", m, h.len()));
        }
        if s.values.len() != m {
            return Err(Error::dims("interferer sequence", m, s.values.len()));
        }
    }
    let y = (0..m)
        .map(|i| {
            let mut v = target_seq.values[i] * target[i];
            if let Some((h, s)) = interferer {
                v += s.values[i] * h[i];
            }
            if noise_power > 0.0 {
                v += complex_normal(rng, noise_power);
            }
            v
        })
        .collect();
    Ok(SrsObservation { y, transmission_index })
}

pub fn despread(obs: &SrsObservation, seq: &SrsSequence) -> Result<Vec<C64>> {
    if obs.y.len() != seq.values.len() {
        return Err(Error::dims("despread", seq.values.len(), obs.y.len()));
    }
    Ok(obs.y.iter().zip(&seq.values).map(|(y, r)| y * r.conj()).collect())
}

/// Inverse DFT with `1/M` scaling.
pub fn to_delay_domain(freq: &[C64]) -> Vec<C64> {
    let mut buf = freq.to_vec();
    if buf.is_empty() {
        return buf;
    }
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|z| *z *= scale);
    buf
}

/// Forward DFT, the inverse of [`to_delay_domain`].
pub fn from_delay_domain(delay: &[C64]) -> Vec<C64> {
    let mut buf = delay.to_vec();
    if buf.is_empty() {
        return buf;
    }
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Tap at which a frequency-domain phase ramp `e^{jΔα m}` places a flat
/// channel's impulse after [`to_delay_domain`].
pub fn cs_shift_taps(delta_alpha: f64, length: usize) -> usize {
    let m = length as i64;
    let shift = (length as f64 * delta_alpha.rem_euclid(TAU) / TAU).round() as i64;
    (-shift).rem_euclid(m) as usize
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Averages `|ỹᴰ_n(τ)|²` over transmissions.
pub fn accumulate_pdp(delay_vectors: &[Vec<C64>]) -> Result<DelayProfile> {
    let first = delay_vectors.first().ok_or(Error::EmptyInput("delay vectors"))?;
    let m = first.len();
    if m == 0 {
        return Err(Error::EmptyInput("delay vector"));
    }
    let mut pdp = vec![0.0; m];
    for v in delay_vectors {
        if v.len() != m {
            return Err(Error::dims("delay vector", m, v.len()));
        }
        for (p, z) in pdp.iter_mut().zip(v) {
            *p += z.norm_sqr();
        }
    }
    let n = delay_vectors.len() as f64;
    pdp.iter_mut().for_each(|p| *p /= n);
    let noise_floor_estimate = median(&pdp);
    Ok(DelayProfile {
        pdp,
        transmissions_accumulated: delay_vectors.len(),
        noise_floor_estimate,
    })
}

/// Taps above `threshold_factor ×` the floor, strongest first up to
/// `max_taps`, returned in ascending index order. Values within `1e-12` of
/// the peak's scale are treated as numerical zero.
pub fn select_taps(profile: &DelayProfile, selection: TapSelection) -> Vec<usize> {
    let peak = profile.pdp.iter().cloned().fold(0.0, f64::max);
    let threshold = (selection.threshold_factor * profile.noise_floor_estimate).max(peak * 1e-12);
    let mut taps: Vec<usize> = (0..profile.pdp.len()).filter(|&t| profile.pdp[t] > threshold).collect();
    taps.sort_by(|&a, &b| profile.pdp[b].total_cmp(&profile.pdp[a]).then(a.cmp(&b)));
    taps.truncate(selection.max_taps);
    taps.sort_unstable();
    taps
}

/// Keeps only the selected delay taps of each despread transmission and
/// transforms back.
pub fn estimate_channel(despread: &[Vec<C64>], taps: &[usize], truth: Option<&[Vec<C64>]>) -> Result<ChannelEstimate> {
    let m = despread.first().map_or(0, |v| v.len());
    if let Some(&t) = taps.iter().find(|&&t| t >= m) {
        return Err(Error::invalid("taps", format!("tap {t} outside 0..{m}")));
    }
    let mut keep = vec![false; m];
    taps.iter().for_each(|&t| keep[t] = true);
    let estimates: Vec<Vec<C64>> = despread
        .iter()
        .map(|y| {
            let mut d = to_delay_domain(y);
            d.iter_mut().zip(&keep).filter(|(_, k)| !**k).for_each(|(z, _)| *z = C64::new(0.0, 0.0));
            from_delay_domain(&d)
        })
        .collect();
    let mse = match truth {
        Some(t) => Some(mse(&estimates, t)?),
        None => None,
    };
    Ok(ChannelEstimate { estimates, mse })
}

/// `Σ|ĥ − h|² / Σ|h|²` over all transmissions and subcarriers.
pub fn mse(estimates: &[Vec<C64>], truth: &[Vec<C64>]) -> Result<f64> {
    if estimates.len() != truth.len() {
        return Err(Error::dims("mse transmissions", truth.len(), estimates.len()));
    }
    let mut err = 0.0;
    let mut energy = 0.0;
    for (e, h) in estimates.iter().zip(truth) {
        if e.len() != h.len() {
            return Err(Error::dims("mse subcarriers", h.len(), e.len()));
        }
        err += e.iter().zip(h).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
        energy += h.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    if energy == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(err / energy)
}
