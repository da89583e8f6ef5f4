use crate::error::{Error, Result};
use crate::linalg::{complex_normal, unit_root, CMatrix, C64};
use nalgebra::DMatrix;
use rand::Rng;
use std::f64::consts::TAU;

/// Ports sharing resource elements through frequency-domain cover codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OccConfig {
    pub occ_length: usize,
    /// Ports supported with length-2 codes.
    pub base_ports: usize,
}

impl OccConfig {
    pub fn new(occ_length: usize, base_ports: usize) -> Result<Self> {
        let cfg = Self { occ_length, base_ports };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.occ_length != 2 && self.occ_length != 4 {
            return Err(Error::invalid("occ_length", format!("{} is not 2 or 4", self.occ_length)));
        }
        if self.base_ports == 0 || self.base_ports % 2 != 0 {
            return Err(Error::invalid("base_ports", "must be a positive even count"));
        }
        if self.ports() > 24 {
            return Err(Error::invalid("ports", format!("{} ports exceed 24", self.ports())));
        }
        Ok(())
    }

    pub fn ports(&self) -> usize {
        self.base_ports * self.occ_length / 2
    }

    /// Code-division groups, each on its own resource elements.
    pub fn groups(&self) -> usize {
        self.base_ports / 2
    }

    pub fn group_of(&self, port: usize) -> usize {
        port / self.occ_length
    }

    pub fn code_of(&self, port: usize) -> usize {
        port % self.occ_length
    }
}

/// Row `c` is the length-`L` DFT code `e^{j2πci/L}/√L`.
pub fn occ_codes(length: usize) -> CMatrix {
    let s = 1.0 / (length as f64).sqrt();
    CMatrix::from_fn(length, length, |c, i| unit_root((c * i) as i64, length) * s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccEstimate {
    pub estimates: Vec<Vec<C64>>,
    /// `leakage[(p, q)]`: energy of port `q` in the estimate of port `p`
    /// relative to the energy of port `q`, for `p ≠ q`.
    pub leakage: DMatrix<f64>,
}

impl OccEstimate {
    /// Mean and max over port pairs that share a group.
    pub fn leakage_stats(&self, cfg: &OccConfig) -> (f64, f64) {
        let n = self.leakage.nrows();
        let mut sum = 0.0;
        let mut max = 0.0f64;
        let mut count = 0;
        for p in 0..n {
            for q in 0..n {
                if p != q && cfg.group_of(p) == cfg.group_of(q) {
                    sum += self.leakage[(p, q)];
                    max = max.max(self.leakage[(p, q)]);
                    count += 1;
                }
            }
        }
        (if count > 0 { sum / count as f64 } else { 0.0 }, max)
    }
}

fn decover(y: &[C64], code: usize, length: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); y.len()];
    for (b, block) in y.chunks(length).enumerate() {
        let est: C64 = block.iter().enumerate().map(|(i, &v)| v * unit_root(-((code * i) as i64), length)).sum::<C64>() / length as f64;
        out[b * length..b * length + block.len()].iter_mut().for_each(|z| *z = est);
    }
    out
}

fn cover(h: &[C64], code: usize, length: usize) -> Vec<C64> {
    h.iter().enumerate().map(|(k, &v)| v * unit_root(((code * (k % length)) % length) as i64, length)).collect()
}

/// Superimposes each group's ports with their cover codes and de-covers
/// per block of `L` resource elements. `channels[p]` holds port `p` on its
/// group's resource elements.
pub fn occ_port_estimation(cfg: &OccConfig, channels: &[Vec<C64>]) -> Result<OccEstimate> {
    cfg.validate()?;
    let ports = channels.len();
    if ports > cfg.ports() {
        return Err(Error::invalid("ports", format!("{ports} channels exceed {} ports", cfg.ports())));
    }
    let n_re = channels.first().map_or(0, |h| h.len());
    if n_re == 0 || n_re % cfg.occ_length != 0 {
        return Err(Error::invalid("resource elements", format!("{n_re} is not a positive multiple of {}", cfg.occ_length)));
    }
    if channels.iter().any(|h| h.len() != n_re) {
        return Err(Error::invalid("channels", "all ports need the same length"));
    }
    let l = cfg.occ_length;
    let covered: Vec<Vec<C64>> = (0..ports).map(|p| cover(&channels[p], cfg.code_of(p), l)).collect();
    let mut received = vec![vec![C64::new(0.0, 0.0); n_re]; cfg.groups()];
    for p in 0..ports {
        for (r, v) in received[cfg.group_of(p)].iter_mut().zip(&covered[p]) {
            *r += v;
        }
    }
    let estimates = (0..ports).map(|p| decover(&received[cfg.group_of(p)], cfg.code_of(p), l)).collect();
    let mut leakage = DMatrix::zeros(ports, ports);
    for q in 0..ports {
        let energy: f64 = channels[q].iter().map(|z| z.norm_sqr()).sum();
        if energy == 0.0 {
            continue;
        }
        for p in 0..ports {
            if p != q && cfg.group_of(p) == cfg.group_of(q) {
                let part = decover(&covered[q], cfg.code_of(p), l);
                leakage[(p, q)] = part.iter().map(|z| z.norm_sqr()).sum::<f64>() / energy;
            }
        }
    }
    Ok(OccEstimate { estimates, leakage })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccSweepPoint {
    pub delay_spread_s: f64,
    pub mean_leakage: f64,
    pub max_leakage: f64,
}

/// Leakage against delay spread with common random numbers: each trial
/// fixes path gains and normalised delays, scaled by every spread.
pub fn occ_leakage_sweep<R: Rng + ?Sized>(
    cfg: &OccConfig,
    delay_spreads_s: &[f64],
    re_spacing_hz: f64,
    resource_elements: usize,
    paths: usize,
    trials: usize,
    rng: &mut R,
) -> Result<Vec<OccSweepPoint>> {
    cfg.validate()?;
    if trials == 0 || paths == 0 {
        return Err(Error::invalid("trials", "trials and paths must be positive"));
    }
    let ports = cfg.ports();
    let draws: Vec<Vec<Vec<(C64, f64)>>> = (0..trials)
        .map(|_| (0..ports).map(|_| (0..paths).map(|_| (complex_normal(rng, 1.0 / paths as f64), rng.random::<f64>())).collect()).collect())
        .collect();
    delay_spreads_s
        .iter()
        .map(|&spread| {
            let mut mean = 0.0;
            let mut max = 0.0f64;
            for trial in &draws {
                let channels: Vec<Vec<C64>> = trial
                    .iter()
                    .map(|port| {
                        (0..resource_elements)
                            .map(|k| port.iter().map(|&(g, u)| g * C64::from_polar(1.0, -TAU * k as f64 * re_spacing_hz * u * spread)).sum())
                            .collect()
                    })
                    .collect();
                let est = occ_port_estimation(cfg, &channels)?;
                let (m, x) = est.leakage_stats(cfg);
                mean += m;
                max = max.max(x);
            }
            Ok(OccSweepPoint {
                delay_spread_s: spread,
                mean_leakage: mean / trials as f64,
                max_leakage: max,
            })
        })
        .collect()
}
