//! Angle-delay Doppler tracking and short-horizon CSI prediction.

use crate::channel::{ArrayConfig, BasisPair, ChannelProcess, ClusterModel, FrequencyGrid};
use crate::codebook::{doppler_compress, DopplerConfig, PrecoderReport};
use crate::error::{Error, Result};
use crate::linalg::{fro_sq, CMatrix, C64};
use rand::Rng;
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionConfig {
    pub snapshots_n: usize,
    /// Gap `Δt` between observed snapshots, in seconds.
    pub slot_gap_dt: f64,
    pub future_m: usize,
    pub pairs_k: usize,
    pub doppler_oversampling: usize,
    /// Optional bound on the Doppler search; must stay below `1/(2Δt)`.
    pub max_doppler_hz: Option<f64>,
}

impl PredictionConfig {
    pub fn new(snapshots_n: usize, slot_gap_dt: f64, future_m: usize) -> Result<Self> {
        let cfg = Self {
            snapshots_n,
            slot_gap_dt,
            future_m,
            pairs_k: 16,
            doppler_oversampling: 8,
            max_doppler_hz: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_max_doppler(mut self, hz: f64) -> Result<Self> {
        self.max_doppler_hz = Some(hz);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.snapshots_n < 2 {
            return Err(Error::invalid("snapshots_N", "at least two snapshots are needed"));
        }
        if self.future_m == 0 {
            return Err(Error::invalid("future_M", "must be positive"));
        }
        if !(self.slot_gap_dt > 0.0 && self.slot_gap_dt.is_finite()) {
            return Err(Error::invalid("slot_gap_dt", "must be positive"));
        }
        if self.pairs_k == 0 {
            return Err(Error::invalid("pairs_K", "must be positive"));
        }
        if self.doppler_oversampling == 0 {
            return Err(Error::invalid("doppler_oversampling", "must be positive"));
        }
        if let Some(v) = self.max_doppler_hz {
            let nyquist = self.nyquist_hz();
            if !(v >= 0.0) || v >= nyquist {
                return Err(Error::invalid("max_doppler_hz", format!("{v} Hz aliases; must be below {nyquist} Hz")));
            }
        }
        Ok(())
    }

    pub fn nyquist_hz(&self) -> f64 {
        0.5 / self.slot_gap_dt
    }

    /// Spacing of the Doppler search grid.
    pub fn doppler_resolution_hz(&self) -> f64 {
        1.0 / (self.snapshots_n * self.doppler_oversampling) as f64 / self.slot_gap_dt
    }
}

/// One angle-delay pair modelled as `α e^{j2πvt}`, with `t = 0` at the last
/// observed snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerTrack {
    /// (spatial basis index, frequency basis index)
    pub pair_index: (usize, usize),
    pub amplitude: C64,
    pub doppler_hz: f64,
}

/// `C = W₁ᴴ H W_f`.
pub fn angle_delay_project(h: &CMatrix, bases: &BasisPair) -> Result<CMatrix> {
    if h.nrows() != bases.ports() {
        return Err(Error::dims("projection rows", bases.ports(), h.nrows()));
    }
    if h.ncols() != bases.units() {
        return Err(Error::dims("projection columns", bases.units(), h.ncols()));
    }
    Ok(bases.spatial.adjoint() * h * &bases.frequency)
}

/// `H = W₁ C W_fᴴ`.
pub fn angle_delay_back_project(c: &CMatrix, bases: &BasisPair) -> CMatrix {
    &bases.spatial * c * bases.frequency.adjoint()
}

fn phasor_sum(series: &[C64], v: f64, dt: f64) -> C64 {
    let last = series.len() as f64 - 1.0;
    series
        .iter()
        .enumerate()
        .map(|(n, &c)| c * C64::from_polar(1.0, -TAU * v * (n as f64 - last) * dt))
        .sum()
}

/// Fits one complex exponential to each of the strongest angle-delay pairs.
pub fn extract_doppler(snapshots: &[CMatrix], bases: &BasisPair, cfg: &PredictionConfig) -> Result<Vec<DopplerTrack>> {
    cfg.validate()?;
    if snapshots.len() != cfg.snapshots_n {
        return Err(Error::dims("snapshots", cfg.snapshots_n, snapshots.len()));
    }
    let coeffs: Vec<CMatrix> = snapshots.iter().map(|h| angle_delay_project(h, bases)).collect::<Result<_>>()?;
    let (rows, cols) = coeffs[0].shape();
    if cfg.pairs_k > rows * cols {
        return Err(Error::invalid("pairs_K", format!("{} exceeds {} pairs", cfg.pairs_k, rows * cols)));
    }
    let n = snapshots.len() as f64;
    let mean_mag: Vec<f64> = (0..rows * cols)
        .map(|i| coeffs.iter().map(|c| c[(i / cols, i % cols)].norm()).sum::<f64>() / n)
        .collect();
    let peak = mean_mag.iter().cloned().fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..rows * cols).filter(|&i| mean_mag[i] > peak * 1e-10).collect();
    order.sort_by(|&a, &b| mean_mag[b].total_cmp(&mean_mag[a]).then(a.cmp(&b)));
    order.truncate(cfg.pairs_k);

    let res = cfg.doppler_resolution_hz();
    let half = (cfg.snapshots_n * cfg.doppler_oversampling) as i64 / 2;
    let limit = cfg.max_doppler_hz.unwrap_or(f64::INFINITY);
    let grid: Vec<f64> = (-half..half).map(|k| k as f64 * res).filter(|v| v.abs() <= limit + 1e-9 * res).collect();
    let dt = cfg.slot_gap_dt;
    Ok(order
        .into_iter()
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            let series: Vec<C64> = coeffs.iter().map(|m| m[(r, c)]).collect();
            let mut best = (0.0f64, -1.0f64);
            for &v in &grid {
                let p = phasor_sum(&series, v, dt).norm_sqr();
                if p > best.1 * (1.0 + 1e-12) || (p >= best.1 * (1.0 - 1e-12) && v.abs() < best.0.abs()) {
                    best = (v, p.max(best.1));
                }
            }
            DopplerTrack {
                pair_index: (r, c),
                amplitude: phasor_sum(&series, best.0, dt) / n,
                doppler_hz: best.0,
            }
        })
        .collect())
}

/// Snapshot at `t` seconds after the last observed one.
pub fn predict_at(tracks: &[DopplerTrack], bases: &BasisPair, t: f64) -> CMatrix {
    let mut c = CMatrix::zeros(bases.spatial.ncols(), bases.frequency.ncols());
    for tr in tracks {
        c[tr.pair_index] += tr.amplitude * C64::from_polar(1.0, TAU * tr.doppler_hz * t);
    }
    angle_delay_back_project(&c, bases)
}

/// Predicted snapshots for future slots `1..=M`.
pub fn predict(tracks: &[DopplerTrack], bases: &BasisPair, cfg: &PredictionConfig) -> Vec<CMatrix> {
    (1..=cfg.future_m).map(|m| predict_at(tracks, bases, m as f64 * cfg.slot_gap_dt)).collect()
}

/// Lays out slots as columns `f · N_slot + s`.
pub fn stack_slots(slots: &[CMatrix]) -> CMatrix {
    let ns = slots.len();
    let (p, nf) = slots.first().map_or((0, 0), |s| s.shape());
    CMatrix::from_fn(p, nf * ns, |r, c| slots[c % ns][(r, c / ns)])
}

pub fn predict_and_compress(
    snapshots: &[CMatrix],
    bases: &BasisPair,
    cfg: &PredictionConfig,
    codebook: &DopplerConfig,
    array: &ArrayConfig,
) -> Result<PrecoderReport> {
    if codebook.slots != cfg.future_m {
        return Err(Error::dims("codebook slots", cfg.future_m, codebook.slots));
    }
    let tracks = extract_doppler(snapshots, bases, cfg)?;
    doppler_compress(&stack_slots(&predict(&tracks, bases, cfg)), codebook, array)
}

/// `‖Ĥ − H‖² / ‖H‖²`.
pub fn nmse(estimate: &CMatrix, truth: &CMatrix) -> Result<f64> {
    if estimate.shape() != truth.shape() {
        return Err(Error::dims("nmse", truth.nrows() * truth.ncols(), estimate.nrows() * estimate.ncols()));
    }
    let e = fro_sq(truth);
    if e == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(fro_sq(&(estimate - truth)) / e)
}

/// Mobility scenario: random paths whose Dopplers are bounded by
/// `normalized_doppler / (M Δt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionScenario {
    pub array: ArrayConfig,
    pub grid: FrequencyGrid,
    pub model: ClusterModel,
    pub config: PredictionConfig,
    /// `f_D · M · Δt`.
    pub normalized_doppler: f64,
}

impl PredictionScenario {
    pub fn max_doppler_hz(&self) -> f64 {
        self.normalized_doppler / (self.config.future_m as f64 * self.config.slot_gap_dt)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionDrop {
    pub nmse_predicted: Vec<f64>,
    pub nmse_stale: Vec<f64>,
}

impl PredictionDrop {
    /// Error energy over all future slots relative to their total energy.
    pub fn aggregate(per_slot: &[f64], energies: &[f64]) -> f64 {
        let e: f64 = energies.iter().sum();
        per_slot.iter().zip(energies).map(|(n, w)| n * w).sum::<f64>() / e
    }
}

/// Draws one channel, observes `N` snapshots and scores prediction against
/// holding the last snapshot for each of the `M` future slots.
pub fn run_prediction_drop<R: Rng + ?Sized>(scenario: &PredictionScenario, rng: &mut R) -> Result<(PredictionDrop, f64, f64)> {
    let cfg = scenario.config;
    let mut model = scenario.model;
    model.max_doppler_hz = scenario.max_doppler_hz();
    if model.max_doppler_hz >= cfg.nyquist_hz() {
        return Err(Error::invalid("normalized_doppler", "path Doppler would alias"));
    }
    let process = ChannelProcess {
        array: scenario.array,
        grid: scenario.grid,
        paths: model.draw(rng, &scenario.array, &scenario.grid),
    };
    let bases = BasisPair::dft(&scenario.array, scenario.grid.units);
    let dt = cfg.slot_gap_dt;
    let observed: Vec<CMatrix> = process.snapshots(0.0, dt, cfg.snapshots_n)?.into_iter().map(|s| s.matrix).collect();
    let t_last = (cfg.snapshots_n - 1) as f64 * dt;
    let tracks = extract_doppler(&observed, &bases, &cfg)?;
    let predicted = predict(&tracks, &bases, &cfg);
    let stale = observed.last().expect("at least two snapshots");
    let mut drop = PredictionDrop {
        nmse_predicted: Vec::with_capacity(cfg.future_m),
        nmse_stale: Vec::with_capacity(cfg.future_m),
    };
    let mut energies = Vec::with_capacity(cfg.future_m);
    for (m, p) in predicted.iter().enumerate() {
        let truth = process.snapshot(t_last + (m + 1) as f64 * dt)?.matrix;
        drop.nmse_predicted.push(nmse(p, &truth)?);
        drop.nmse_stale.push(nmse(stale, &truth)?);
        energies.push(fro_sq(&truth));
    }
    let pred = PredictionDrop::aggregate(&drop.nmse_predicted, &energies);
    let st = PredictionDrop::aggregate(&drop.nmse_stale, &energies);
    Ok((drop, pred, st))
}
