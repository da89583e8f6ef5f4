use super::etype2::{common_spatial_selection, layout_of};
use super::{column_powers, compress_block, pick_columns, FrequencyChoice, PrecoderReport, Quantizer, ReportBlock};
use crate::channel::{ArrayConfig, BasisPair};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Multi-TRP coherent joint transmission codebook parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CjtConfig {
    pub trp_count: usize,
    /// Per-TRP array; every TRP has the same layout.
    pub array: ArrayConfig,
    pub per_trp_beams: Vec<usize>,
    pub per_trp_freq: Vec<usize>,
    pub per_trp_top_k: Vec<usize>,
    /// One set of `M` frequency vectors shared by all TRPs.
    pub joint_frequency_basis: bool,
}

impl CjtConfig {
    pub fn ports_per_trp(&self) -> usize {
        self.array.ports()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.trp_count;
        if n == 0 {
            return Err(Error::invalid("trp_count", "need at least one TRP"));
        }
        for (name, len) in [
            ("per_trp_beams", self.per_trp_beams.len()),
            ("per_trp_freq", self.per_trp_freq.len()),
            ("per_trp_top_k", self.per_trp_top_k.len()),
        ] {
            if len != n {
                return Err(Error::invalid(name, format!("length {len} does not match trp_count {n}")));
            }
        }
        for i in 0..n {
            let avail = self.array.polarizations * self.per_trp_beams[i] * self.per_trp_freq[i];
            if self.per_trp_top_k[i] > avail {
                return Err(Error::invalid("per_trp_top_k", format!("TRP {i}: K = {} exceeds {avail}", self.per_trp_top_k[i])));
            }
        }
        if self.joint_frequency_basis && self.per_trp_freq.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::invalid("per_trp_freq", "joint frequency basis requires equal M for all TRPs"));
        }
        Ok(())
    }
}

/// Compresses a stacked `N·P × N_f` channel (or precoder) TRP by TRP.
///
/// Each TRP block is projected on its own bases. In joint mode the `M`
/// frequency columns of the first TRP's frequency basis are chosen once, by
/// greedily adding the column with the largest total projected power across
/// TRPs.
pub fn cjt_compress(h_stacked: &CMatrix, cfg: &CjtConfig, bases: &[BasisPair]) -> Result<PrecoderReport> {
    cfg.validate()?;
    let p = cfg.ports_per_trp();
    let n = cfg.trp_count;
    if h_stacked.nrows() != n * p {
        return Err(Error::dims("cjt_compress rows", n * p, h_stacked.nrows()));
    }
    if bases.len() != n {
        return Err(Error::dims("cjt_compress bases", n, bases.len()));
    }
    let nf = h_stacked.ncols();
    for b in bases {
        if b.ports() != p {
            return Err(Error::dims("cjt_compress basis ports", p, b.ports()));
        }
        if b.units() != nf {
            return Err(Error::dims("cjt_compress basis units", nf, b.units()));
        }
    }
    let blocks: Vec<CMatrix> = (0..n).map(|i| h_stacked.rows(i * p, p).into_owned()).collect();
    let spatial: Vec<Vec<usize>> = (0..n)
        .map(|i| common_spatial_selection(&blocks[i..=i], &bases[i], cfg.per_trp_beams[i], cfg.array.polarizations))
        .collect::<Result<_>>()?;

    let joint = if cfg.joint_frequency_basis {
        let common = &bases[0].frequency;
        let mut power = vec![0.0; nf];
        for i in 0..n {
            let w1 = pick_columns(&bases[i].spatial, &spatial[i]);
            let projected = w1.adjoint() * &blocks[i] * common;
            for (acc, pw) in power.iter_mut().zip(column_powers(&projected)) {
                *acc += pw;
            }
        }
        Some(greedy_columns(&power, cfg.per_trp_freq[0])?)
    } else {
        None
    };

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (freq_basis, choice) = match &joint {
            Some(idx) => (&bases[0].frequency, FrequencyChoice::Fixed(idx)),
            None => (&bases[i].frequency, FrequencyChoice::Strongest(cfg.per_trp_freq[i])),
        };
        let (spatial_indices, frequency_indices, coefficients) =
            compress_block(&blocks[i], &bases[i].spatial, spatial[i].clone(), freq_basis, choice, cfg.per_trp_top_k[i])?;
        out.push(ReportBlock {
            trp: i,
            layer: 0,
            spatial_indices,
            frequency_indices,
            time_indices: Vec::new(),
            coefficients,
        });
    }
    Ok(PrecoderReport {
        layout: layout_of(&cfg.array, nf, 1),
        quantizer: Quantizer::None,
        blocks: out,
    })
}

fn greedy_columns(power: &[f64], count: usize) -> Result<Vec<usize>> {
    if count > power.len() {
        return Err(Error::invalid("per_trp_freq", format!("{count} exceeds {}", power.len())));
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(count);
    for _ in 0..count {
        let mut best: Option<usize> = None;
        for (j, &pw) in power.iter().enumerate() {
            if chosen.contains(&j) {
                continue;
            }
            if best.is_none_or(|b| pw > power[b]) {
                best = Some(j);
            }
        }
        chosen.push(best.expect("count <= len"));
    }
    chosen.sort_unstable();
    Ok(chosen)
}
