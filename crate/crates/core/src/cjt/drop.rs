use super::metrics::{coordination_set, rsrp_region, spectral_efficiency, upt, BurstRecord};
use super::sinr::{sinr, SinrScenario, TransmissionMode};
use crate::channel::{ArrayConfig, BasisPair, ChannelProcess, ClusterModel, FrequencyGrid};
use crate::codebook::{cjt_compress, etype2_compress, etype2_reconstruct, reconstruct_stacked, type1_quantize, CjtConfig, EType2Config, Type1Config};
use crate::error::{Error, Result};
use crate::linalg::{db_to_linear, fro_sq, hermitian_eigen, linear_to_db, CMatrix, C64};
use rand::Rng;
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feedback {
    Ideal,
    Type1,
    EType2,
    CjtCodebook,
}

impl Feedback {
    pub const ALL: [Feedback; 4] = [Feedback::Ideal, Feedback::Type1, Feedback::EType2, Feedback::CjtCodebook];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Ideal => "ideal",
            Self::Type1 => "type1",
            Self::EType2 => "etype2",
            Self::CjtCodebook => "cjt_codebook",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::invalid("feedback", format!("unknown feedback `{s}`")))
    }
}

/// Parameters from which random drops are generated.
#[derive(Debug, Clone, PartialEq)]
pub struct DropLayout {
    pub trp_positions: Vec<[f64; 2]>,
    pub ue_count: usize,
    /// UEs are dropped uniformly in this rectangle (min corner, max corner).
    pub ue_area: ([f64; 2], [f64; 2]),
    pub tx_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub pathloss_exponent: f64,
    /// Pathloss at 1 m.
    pub pathloss_intercept_db: f64,
    pub shadowing_std_db: f64,
    pub array: ArrayConfig,
    pub ue_antennas: usize,
    pub grid: FrequencyGrid,
    pub model: ClusterModel,
    pub layers: usize,
    pub coordination_threshold_db: f64,
    pub etype2: EType2Config,
    pub burst_bits: f64,
}

impl DropLayout {
    /// Two TRPs 300 m apart with two 4-antenna UEs between them.
    pub fn two_trp() -> Result<Self> {
        let array = ArrayConfig::uniform(2, 4, 2)?;
        let grid = FrequencyGrid::new(8, 30e3 * 12.0 * 4.0, 1)?;
        Ok(Self {
            trp_positions: vec![[0.0, 0.0], [300.0, 0.0]],
            ue_count: 2,
            ue_area: ([75.0, -60.0], [225.0, 60.0]),
            tx_power_dbm: 20.0,
            noise_power_dbm: -95.0,
            pathloss_exponent: 3.7,
            pathloss_intercept_db: 43.3,
            shadowing_std_db: 4.0,
            array,
            ue_antennas: 4,
            grid,
            model: ClusterModel::default(),
            layers: 1,
            coordination_threshold_db: 10.0,
            etype2: EType2Config::from_fraction(4, 8, 0.5, 1, 16, 1)?,
            burst_bits: 0.5e6,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.trp_positions.is_empty() {
            return Err(Error::invalid("trp_positions", "at least one TRP is needed"));
        }
        if self.ue_count == 0 {
            return Err(Error::invalid("ue_count", "at least one UE is needed"));
        }
        if self.ue_antennas == 0 {
            return Err(Error::invalid("ue_antennas", "must be positive"));
        }
        if self.layers == 0 || self.layers > self.ue_antennas {
            return Err(Error::invalid("layers", "must lie in 1..=ue_antennas"));
        }
        if !(self.burst_bits > 0.0) {
            return Err(Error::invalid("burst_bits", "must be positive"));
        }
        if !(self.shadowing_std_db >= 0.0) {
            return Err(Error::invalid("shadowing_std_db", "must be non-negative"));
        }
        self.array.validate()?;
        self.grid.validate()?;
        self.etype2.validate(self.array.polarizations)?;
        if self.etype2.freq_units != self.grid.units {
            return Err(Error::invalid("etype2.freq_units", "must equal the number of frequency units"));
        }
        Ok(())
    }
}

/// Channel between one UE and one TRP.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkChannel {
    pub pathloss_db: f64,
    pub shadowing_db: f64,
    pub rsrp_dbm: f64,
    /// Amplitude scaling relative to unit noise power.
    pub amplitude: f64,
    /// One process per UE receive antenna.
    pub receivers: Vec<ChannelProcess>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropScenario {
    pub trp_positions: Vec<[f64; 2]>,
    pub ue_positions: Vec<[f64; 2]>,
    pub tx_power_dbm: f64,
    pub pathloss_exponent: f64,
    /// Noise power after normalisation; link amplitudes carry the SNR.
    pub noise_power: f64,
    /// `links[ue][trp]`
    pub links: Vec<Vec<LinkChannel>>,
    pub layout: DropLayout,
}

impl DropScenario {
    pub fn random<R: Rng + ?Sized>(layout: &DropLayout, rng: &mut R) -> Result<Self> {
        layout.validate()?;
        let (lo, hi) = layout.ue_area;
        let ue_positions: Vec<[f64; 2]> = (0..layout.ue_count)
            .map(|_| [lo[0] + (hi[0] - lo[0]) * rng.random::<f64>(), lo[1] + (hi[1] - lo[1]) * rng.random::<f64>()])
            .collect();
        let normal = rand_distr::Normal::new(0.0, layout.shadowing_std_db.max(0.0)).map_err(|e| Error::invalid("shadowing_std_db", e.to_string()))?;
        let links = ue_positions
            .iter()
            .map(|ue| {
                layout
                    .trp_positions
                    .iter()
                    .map(|trp| {
                        let d = ((ue[0] - trp[0]).powi(2) + (ue[1] - trp[1]).powi(2)).sqrt().max(1.0);
                        let pathloss_db = layout.pathloss_intercept_db + 10.0 * layout.pathloss_exponent * d.log10();
                        let shadowing_db = rng.sample(normal);
                        let rsrp_dbm = layout.tx_power_dbm - pathloss_db - shadowing_db;
                        let amplitude = db_to_linear(rsrp_dbm - layout.noise_power_dbm).sqrt();
                        let paths = layout.model.draw(rng, &layout.array, &layout.grid);
                        let receivers = (0..layout.ue_antennas)
                            .map(|_| {
                                let paths = paths
                                    .iter()
                                    .map(|p| {
                                        let mut p = *p;
                                        p.gain *= C64::from_polar(1.0, TAU * rng.random::<f64>());
                                        p
                                    })
                                    .collect();
                                ChannelProcess {
                                    array: layout.array,
                                    grid: layout.grid,
                                    paths,
                                }
                            })
                            .collect();
                        LinkChannel {
                            pathloss_db,
                            shadowing_db,
                            rsrp_dbm,
                            amplitude,
                            receivers,
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            trp_positions: layout.trp_positions.clone(),
            ue_positions,
            tx_power_dbm: layout.tx_power_dbm,
            pathloss_exponent: layout.pathloss_exponent,
            noise_power: 1.0,
            links,
            layout: layout.clone(),
        })
    }

    pub fn trp_count(&self) -> usize {
        self.trp_positions.len()
    }

    pub fn ue_count(&self) -> usize {
        self.ue_positions.len()
    }

    /// Per-unit `n_Rx × P` channels of one link at `t = 0`.
    pub fn link_channels(&self, ue: usize, trp: usize) -> Result<Vec<CMatrix>> {
        let link = &self.links[ue][trp];
        let snaps: Vec<CMatrix> = link.receivers.iter().map(|r| r.snapshot(0.0).map(|s| s.matrix)).collect::<Result<_>>()?;
        let units = self.layout.grid.units;
        let p = self.layout.array.ports();
        Ok((0..units)
            .map(|f| CMatrix::from_fn(snaps.len(), p, |r, c| snaps[r][(c, f)] * link.amplitude))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UeResult {
    pub ue: usize,
    pub serving_trp: usize,
    pub coordination_set: Vec<usize>,
    pub rsrp_gap_db: f64,
    pub region: u8,
    /// Linear SINR averaged over frequency units.
    pub sinr: f64,
    pub sinr_db: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropSummary {
    pub mode: TransmissionMode,
    pub feedback: Feedback,
    pub ues: Vec<UeResult>,
    pub upt_bps: f64,
}

/// Rotates each layer so its strongest port is real and positive on every unit.
fn phase_align(v: &mut CMatrix, column: usize, reference_row: usize) {
    let z = v[(reference_row, column)];
    if z.norm() > 0.0 {
        let rot = z.conj() / z.norm();
        v.column_mut(column).iter_mut().for_each(|x| *x *= rot);
    }
}

/// Top right singular directions per unit, phase-aligned across units.
fn eigen_directions(channels: &[CMatrix], layers: usize) -> Vec<CMatrix> {
    let mut out: Vec<CMatrix> = channels
        .iter()
        .map(|h| {
            let (_, vecs) = hermitian_eigen(&(h.adjoint() * h));
            vecs.columns(0, layers).into_owned()
        })
        .collect();
    for l in 0..layers {
        let p = out[0].nrows();
        let power: Vec<f64> = (0..p).map(|r| out.iter().map(|v| v[(r, l)].norm_sqr()).sum()).collect();
        let reference = (0..p).fold(0, |b, r| if power[r] > power[b] { r } else { b });
        out.iter_mut().for_each(|v| phase_align(v, l, reference));
    }
    out
}

/// Layer-major `P × N_f` matrices from per-unit `P × layers` directions.
fn per_layer(dirs: &[CMatrix], layer: usize) -> CMatrix {
    CMatrix::from_fn(dirs[0].nrows(), dirs.len(), |r, f| dirs[f][(r, layer)])
}

fn unit_columns(mut v: CMatrix) -> CMatrix {
    for mut c in v.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c /= C64::new(n, 0.0);
        }
    }
    v
}

struct Csi {
    trps: Vec<usize>,
    /// `directions[unit]`: `(N·P) × layers`, zero outside the transmitting TRPs.
    directions: Vec<CMatrix>,
}

fn stacked_rows(per_trp: &[Vec<CMatrix>], trps: &[usize], trp_count: usize, p: usize, unit: usize) -> CMatrix {
    let rows = per_trp[0][unit].nrows();
    let mut h = CMatrix::zeros(rows, trp_count * p);
    for &n in trps {
        h.view_mut((0, n * p), (rows, p)).copy_from(&per_trp[n][unit]);
    }
    h
}

fn acquire_csi(
    scenario: &DropScenario,
    per_trp: &[Vec<CMatrix>],
    trps: &[usize],
    feedback: Feedback,
) -> Result<Csi> {
    let layout = &scenario.layout;
    let p = layout.array.ports();
    let n = scenario.trp_count();
    let units = layout.grid.units;
    let layers = layout.layers;
    let embed = |local: &[CMatrix], trp: usize, acc: &mut [CMatrix]| {
        for (a, l) in acc.iter_mut().zip(local) {
            a.view_mut((trp * p, 0), (p, l.ncols())).copy_from(l);
        }
    };
    let mut directions = vec![CMatrix::zeros(n * p, layers); units];
    match feedback {
        Feedback::Ideal => {
            let stacked: Vec<CMatrix> = (0..units).map(|f| stacked_rows(per_trp, trps, n, p, f)).collect();
            directions = eigen_directions(&stacked, layers);
        }
        Feedback::Type1 => {
            if layers != 1 {
                return Err(Error::invalid("layers", "type1 feedback is rank 1"));
            }
            let cfg = Type1Config::new(layout.array, 4)?;
            for &t in trps {
                let wide = CMatrix::from_fn(per_trp[t][0].nrows() * units, p, |r, c| {
                    let rows = per_trp[t][0].nrows();
                    per_trp[t][r / rows][(r % rows, c)]
                });
                let sel = type1_quantize(&wide, &cfg)?;
                let w = CMatrix::from_column_slice(p, 1, sel.beamformer.as_slice());
                embed(&vec![w; units], t, &mut directions);
            }
        }
        Feedback::EType2 => {
            for &t in trps {
                let dirs = eigen_directions(&per_trp[t], layers);
                let layer_mats: Vec<CMatrix> = (0..layers).map(|l| per_layer(&dirs, l)).collect();
                let cfg = EType2Config { layers, ..layout.etype2 };
                let report = etype2_compress(&layer_mats, &cfg, &layout.array)?;
                let rec: Vec<CMatrix> = (0..units).map(|f| etype2_reconstruct(&report, f)).collect::<Result<_>>()?;
                embed(&rec, t, &mut directions);
            }
        }
        Feedback::CjtCodebook => {
            let local_stacked: Vec<CMatrix> = (0..units)
                .map(|f| {
                    let full = stacked_rows(per_trp, trps, n, p, f);
                    let mut h = CMatrix::zeros(full.nrows(), trps.len() * p);
                    for (i, &t) in trps.iter().enumerate() {
                        h.view_mut((0, i * p), (full.nrows(), p)).copy_from(&full.columns(t * p, p));
                    }
                    h
                })
                .collect();
            let dirs = eigen_directions(&local_stacked, layers);
            let bases = vec![BasisPair::dft(&layout.array, units); trps.len()];
            let e = layout.etype2;
            let cfg = CjtConfig {
                trp_count: trps.len(),
                array: layout.array,
                per_trp_beams: vec![e.beams_l; trps.len()],
                per_trp_freq: vec![e.delay_dim_z; trps.len()],
                per_trp_top_k: vec![e.top_k; trps.len()],
                joint_frequency_basis: false,
            };
            for l in 0..layers {
                let report = cjt_compress(&per_layer(&dirs, l), &cfg, &bases)?;
                let rec = reconstruct_stacked(&report, &bases, 0, None)?;
                for (f, d) in directions.iter_mut().enumerate() {
                    for (i, &t) in trps.iter().enumerate() {
                        for r in 0..p {
                            d[(t * p + r, l)] = rec[(i * p + r, f)];
                        }
                    }
                }
            }
        }
    }
    for d in &mut directions {
        *d = unit_columns(d.clone());
    }
    Ok(Csi {
        trps: trps.to_vec(),
        directions,
    })
}

/// Regularised block diagonalisation with regularisation `noise`. UE `u`
/// transmits along the top right singular directions of `H_u Π_u`, where
/// `Π_u = I − H̄ᴴ(H̄H̄ᴴ + nI)⁻¹H̄` and `H̄` stacks every other UE's rows.
/// With one row per UE the direction is the RZF column. Columns are unit norm.
fn regularized_bd(effective: &[CMatrix], layers: usize, noise: f64) -> Result<CMatrix> {
    let cols = effective[0].ncols();
    let mut w = CMatrix::zeros(cols, effective.len() * layers);
    for (u, hu) in effective.iter().enumerate() {
        let others: usize = effective.iter().enumerate().filter(|(v, _)| *v != u).map(|(_, e)| e.nrows()).sum();
        let mut a = hu.clone();
        if others > 0 {
            let mut hbar = CMatrix::zeros(others, cols);
            let mut r = 0;
            for e in effective.iter().enumerate().filter(|(v, _)| *v != u).map(|(_, e)| e) {
                hbar.view_mut((r, 0), e.shape()).copy_from(e);
                r += e.nrows();
            }
            let gram = &hbar * hbar.adjoint() + CMatrix::identity(others, others) * C64::new(noise, 0.0);
            let inv = gram.try_inverse().ok_or_else(|| Error::invalid("precoder", "singular regularised Gram matrix"))?;
            a -= hu * hbar.adjoint() * inv * &hbar;
        }
        let (_, vecs) = hermitian_eigen(&(a.adjoint() * &a));
        w.columns_mut(u * layers, layers).copy_from(&vecs.columns(0, layers));
    }
    Ok(unit_columns(w))
}

/// Scales `w` so the most loaded TRP block carries unit power.
fn per_trp_normalize(w: &mut CMatrix, trp_count: usize, p: usize) {
    let worst = (0..trp_count).map(|n| fro_sq(&w.rows(n * p, p).into_owned())).fold(0.0, f64::max);
    if worst > 0.0 {
        *w /= C64::new(worst.sqrt(), 0.0);
    }
}

/// Runs one drop under the given feedback and transmission mode.
pub fn run_drop(scenario: &DropScenario, feedback: Feedback, mode: TransmissionMode) -> Result<DropSummary> {
    let layout = &scenario.layout;
    let n = scenario.trp_count();
    let p = layout.array.ports();
    let units = layout.grid.units;
    let layers = layout.layers;
    let ues = scenario.ue_count();
    let noise = scenario.noise_power;

    let mut meta = Vec::with_capacity(ues);
    for u in 0..ues {
        let rsrp: Vec<f64> = scenario.links[u].iter().map(|l| l.rsrp_dbm).collect();
        let set = coordination_set(&rsrp, layout.coordination_threshold_db)?;
        let serving = (0..n).fold(0, |b, i| if rsrp[i] > rsrp[b] { i } else { b });
        let gap = (0..n).filter(|&i| i != serving).map(|i| rsrp[serving] - rsrp[i]).fold(f64::INFINITY, f64::min);
        let gap = if gap.is_finite() { gap } else { f64::INFINITY };
        meta.push((serving, set, gap, rsrp_region(gap.min(1e9))?));
    }

    let channels: Vec<Vec<Vec<CMatrix>>> = (0..ues).map(|u| (0..n).map(|t| scenario.link_channels(u, t)).collect::<Result<_>>()).collect::<Result<_>>()?;
    let csi: Vec<Csi> = (0..ues)
        .map(|u| {
            let trps = match mode {
                TransmissionMode::SingleTrp => vec![meta[u].0],
                TransmissionMode::Cjt => meta[u].1.clone(),
            };
            acquire_csi(scenario, &channels[u], &trps, feedback)
        })
        .collect::<Result<_>>()?;

    let mut sinr_sum = vec![0.0; ues];
    let mut se_sum = vec![0.0; ues];
    for f in 0..units {
        let full: Vec<CMatrix> = (0..ues).map(|u| stacked_rows(&channels[u], &(0..n).collect::<Vec<_>>(), n, p, f)).collect();
        let effective: Vec<CMatrix> = (0..ues)
            .map(|u| {
                if feedback == Feedback::Ideal {
                    let mut h = full[u].clone();
                    for t in (0..n).filter(|t| !csi[u].trps.contains(t)) {
                        h.columns_mut(t * p, p).fill(C64::new(0.0, 0.0));
                    }
                    return h;
                }
                let v = &csi[u].directions[f];
                let mut e = v.adjoint();
                for l in 0..layers {
                    let gain = (&full[u] * v.column(l)).norm();
                    e.row_mut(l).iter_mut().for_each(|z| *z *= gain);
                }
                e
            })
            .collect();
        let mut precoders = vec![CMatrix::zeros(n * p, layers); ues];
        match mode {
            TransmissionMode::Cjt => {
                let mut w = regularized_bd(&effective, layers, noise)?;
                per_trp_normalize(&mut w, n, p);
                for (u, pu) in precoders.iter_mut().enumerate() {
                    *pu = w.columns(u * layers, layers).into_owned();
                }
            }
            TransmissionMode::SingleTrp => {
                for t in 0..n {
                    let served: Vec<usize> = (0..ues).filter(|&u| meta[u].0 == t).collect();
                    if served.is_empty() {
                        continue;
                    }
                    let local: Vec<CMatrix> = served.iter().map(|&u| effective[u].columns(t * p, p).into_owned()).collect();
                    let mut w = regularized_bd(&local, layers, noise)?;
                    per_trp_normalize(&mut w, 1, p);
                    for (i, &u) in served.iter().enumerate() {
                        precoders[u].view_mut((t * p, 0), (p, layers)).copy_from(&w.columns(i * layers, layers));
                    }
                }
            }
        }
        let s = sinr(&SinrScenario {
            channels: full,
            precoders,
            mode,
            noise_power: noise,
        })?;
        for u in 0..ues {
            sinr_sum[u] += s[u];
            se_sum[u] += spectral_efficiency(s[u]);
        }
    }

    let bandwidth = layout.grid.units as f64 * layout.grid.unit_spacing_hz * layout.grid.subcarriers_per_unit as f64;
    let results: Vec<UeResult> = (0..ues)
        .map(|u| {
            let sinr = sinr_sum[u] / units as f64;
            UeResult {
                ue: u,
                serving_trp: meta[u].0,
                coordination_set: meta[u].1.clone(),
                rsrp_gap_db: meta[u].2,
                region: meta[u].3,
                sinr,
                sinr_db: linear_to_db(sinr),
                se: se_sum[u] / units as f64,
            }
        })
        .collect();
    let bursts: Vec<BurstRecord> = results
        .iter()
        .filter(|r| r.se > 0.0)
        .map(|r| BurstRecord::new(layout.burst_bits, layout.burst_bits / (r.se * bandwidth)))
        .collect::<Result<_>>()?;
    let upt_bps = if bursts.is_empty() { 0.0 } else { upt(&bursts)? };
    Ok(DropSummary {
        mode,
        feedback,
        ues: results,
        upt_bps,
    })
}
