use super::{compress_block, reconstruct_block, row_powers, select_spatial, FrequencyChoice, PrecoderReport, Quantizer, ReportBlock, ReportLayout};
use crate::channel::{ArrayConfig, BasisPair};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Frequency-compressed Type-II parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EType2Config {
    /// Beams per polarisation.
    pub beams_l: usize,
    /// Frequency units `F`.
    pub freq_units: usize,
    /// Delay-domain dimension `Z`.
    pub delay_dim_z: usize,
    pub fraction_p: f64,
    /// Frequency units per sub-band `φ`.
    pub units_per_subband: usize,
    pub top_k: usize,
    pub layers: usize,
}

impl EType2Config {
    /// Derives `Z = ⌈p · F / φ⌉`.
    pub fn from_fraction(beams_l: usize, freq_units: usize, fraction_p: f64, units_per_subband: usize, top_k: usize, layers: usize) -> Result<Self> {
        if units_per_subband == 0 {
            return Err(Error::invalid("units_per_subband", "must be at least 1"));
        }
        let z = (fraction_p * freq_units as f64 / units_per_subband as f64).ceil() as usize;
        let cfg = Self {
            beams_l,
            freq_units,
            delay_dim_z: z,
            fraction_p,
            units_per_subband,
            top_k,
            layers,
        };
        cfg.validate(2)?;
        Ok(cfg)
    }

    pub fn validate(&self, polarizations: usize) -> Result<()> {
        if self.layers == 0 || self.layers > 8 {
            return Err(Error::invalid("layers", "between 1 and 8 layers are supported"));
        }
        if self.delay_dim_z == 0 || self.delay_dim_z > self.freq_units {
            return Err(Error::invalid("delay_dim_Z", format!("Z = {} must lie in 1..={}", self.delay_dim_z, self.freq_units)));
        }
        let available = polarizations * self.beams_l * self.delay_dim_z;
        if self.top_k > available {
            return Err(Error::invalid("top_K", format!("{} exceeds {available} available coefficients", self.top_k)));
        }
        Ok(())
    }
}

/// Compresses per-layer precoders (`P × F` each) against DFT bases.
///
/// The `L` beams are common to all layers and both polarisations; the `Z`
/// frequency columns and the `top_K` coefficients are chosen per layer.
pub fn etype2_compress(precoders: &[CMatrix], cfg: &EType2Config, array: &ArrayConfig) -> Result<PrecoderReport> {
    if precoders.is_empty() {
        return Err(Error::EmptyInput("precoders"));
    }
    cfg.validate(array.polarizations)?;
    if precoders.len() > cfg.layers {
        return Err(Error::invalid("layers", format!("{} layers supplied, config allows {}", precoders.len(), cfg.layers)));
    }
    let p = array.ports();
    for v in precoders {
        if v.nrows() != p {
            return Err(Error::dims("etype2_compress ports", p, v.nrows()));
        }
        if v.ncols() != cfg.freq_units {
            return Err(Error::dims("etype2_compress units", cfg.freq_units, v.ncols()));
        }
    }
    let basis = BasisPair::dft(array, cfg.freq_units);
    let spatial_indices = common_spatial_selection(precoders, &basis, cfg.beams_l, array.polarizations)?;
    let blocks = precoders
        .iter()
        .enumerate()
        .map(|(layer, v)| {
            let (spatial_indices, frequency_indices, coefficients) = compress_block(
                v,
                &basis.spatial,
                spatial_indices.clone(),
                &basis.frequency,
                FrequencyChoice::Strongest(cfg.delay_dim_z),
                cfg.top_k,
            )?;
            Ok(ReportBlock {
                trp: 0,
                layer,
                spatial_indices,
                frequency_indices,
                time_indices: Vec::new(),
                coefficients,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PrecoderReport {
        layout: layout_of(array, cfg.freq_units, 1),
        quantizer: Quantizer::None,
        blocks,
    })
}

pub(crate) fn common_spatial_selection(blocks: &[CMatrix], basis: &BasisPair, beams_l: usize, polarizations: usize) -> Result<Vec<usize>> {
    let mut power = vec![0.0; basis.ports()];
    for v in blocks {
        let projected = basis.spatial.adjoint() * v;
        for (acc, pw) in power.iter_mut().zip(row_powers(&projected)) {
            *acc += pw;
        }
    }
    select_spatial(&power, basis.spatial_blocks, beams_l, polarizations)
}

pub(crate) fn layout_of(array: &ArrayConfig, units: usize, slots: usize) -> ReportLayout {
    ReportLayout {
        ports_vertical: array.ports_vertical,
        ports_horizontal: array.ports_horizontal,
        polarizations: array.polarizations,
        units,
        slots,
    }
}

/// `W^(x)`: the `P × layers` beamformer at frequency unit `x`.
pub fn etype2_reconstruct(report: &PrecoderReport, x: usize) -> Result<CMatrix> {
    let l = report.layout;
    if x >= l.units {
        return Err(Error::invalid("x", format!("unit {x} out of range 0..{}", l.units)));
    }
    let array = ArrayConfig::uniform(l.ports_vertical, l.ports_horizontal, l.polarizations)?;
    let basis = BasisPair::dft(&array, l.units);
    let layers = report.blocks.iter().map(|b| b.layer + 1).max().unwrap_or(0);
    let mut out = CMatrix::zeros(l.ports(), layers);
    for block in report.blocks.iter().filter(|b| b.trp == 0) {
        let full = reconstruct_block(block, &basis.spatial, &basis.frequency);
        out.set_column(block.layer, &full.column(x));
    }
    Ok(out)
}
