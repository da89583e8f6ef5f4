//! CSI quantisation and reconstruction.
//!
//! Every compressed report is a set of selected basis columns plus a sparse
//! list of combining coefficients. eType-II, multi-TRP CJT and Doppler-domain
//! reports share the same projection / selection / truncation path in
//! [`compress_block`], so a single-TRP CJT report is bit-identical to the
//! single-layer eType-II report on the same input.

mod cjt;
mod doppler;
mod etype2;
mod report;
mod type1;

pub use cjt::{cjt_compress, CjtConfig};
pub use doppler::{doppler_compress, doppler_reconstruct, DopplerConfig};
pub use etype2::{etype2_compress, etype2_reconstruct, EType2Config};
pub use report::{dequantize_value, quantize_report, Coefficient, PrecoderReport, Quantizer, ReportBlock, ReportLayout};
pub use type1::{type1_codeword, type1_quantize, Type1Config, Type1Selection};

use crate::channel::{BasisPair, ChannelSnapshot};
use crate::error::{Error, Result};
use crate::linalg::{top_k_indices, CMatrix, C64};

/// `r = Σ_{K largest} |c|² / Σ |c|²` for `C = W₁ᴴ H W_f`.
pub fn power_ratio(h: &ChannelSnapshot, basis: &BasisPair, k: usize) -> Result<f64> {
    let m = &h.matrix;
    if m.nrows() != basis.ports() {
        return Err(Error::dims("power_ratio ports", basis.ports(), m.nrows()));
    }
    if m.ncols() != basis.units() {
        return Err(Error::dims("power_ratio units", basis.units(), m.ncols()));
    }
    if k > m.len() {
        return Err(Error::invalid("K", format!("{k} exceeds {} coefficients", m.len())));
    }
    let coeffs = basis.spatial.adjoint() * m * &basis.frequency;
    let mut powers: Vec<f64> = coeffs.iter().map(|c| c.norm_sqr()).collect();
    let total: f64 = powers.iter().sum();
    if !(total > 0.0) {
        return Err(Error::UndefinedRatio);
    }
    if k == powers.len() {
        return Ok(1.0);
    }
    powers.sort_by(|a, b| b.total_cmp(a));
    let kept: f64 = powers[..k].iter().sum();
    Ok((kept / total).min(1.0))
}

/// Power ratio for every `K` in `1..=P·N_f`, computed from one projection.
pub fn power_ratio_curve(h: &ChannelSnapshot, basis: &BasisPair) -> Result<Vec<f64>> {
    let coeffs = basis.spatial.adjoint() * &h.matrix * &basis.frequency;
    let mut powers: Vec<f64> = coeffs.iter().map(|c| c.norm_sqr()).collect();
    let total: f64 = powers.iter().sum();
    if !(total > 0.0) {
        return Err(Error::UndefinedRatio);
    }
    powers.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let n = powers.len();
    Ok(powers
        .iter()
        .enumerate()
        .map(|(i, p)| {
            acc += p;
            if i + 1 == n {
                1.0
            } else {
                (acc / total).min(1.0)
            }
        })
        .collect())
}

/// Picks `per_block` spatial beams. With a polarisation-structured basis the
/// same beam is taken in every block, ranked by power summed over blocks;
/// otherwise `per_block · blocks_wanted` columns are ranked individually.
pub(crate) fn select_spatial(column_power: &[f64], basis_blocks: usize, per_block: usize, blocks_wanted: usize) -> Result<Vec<usize>> {
    let p = column_power.len();
    if basis_blocks > 1 {
        let width = p / basis_blocks;
        if per_block > width {
            return Err(Error::invalid("beams_L", format!("{per_block} beams exceed {width} per polarisation")));
        }
        let paired: Vec<f64> = (0..width)
            .map(|k| (0..basis_blocks).map(|b| column_power[k + b * width]).sum())
            .collect();
        let mut beams = top_k_indices(&paired, per_block);
        beams.sort_unstable();
        Ok((0..basis_blocks).flat_map(|b| beams.iter().map(move |k| k + b * width)).collect())
    } else {
        let count = per_block * blocks_wanted;
        if count > p {
            return Err(Error::invalid("beams_L", format!("{count} columns exceed {p}")));
        }
        let mut cols = top_k_indices(column_power, count);
        cols.sort_unstable();
        Ok(cols)
    }
}

pub(crate) fn row_powers(m: &CMatrix) -> Vec<f64> {
    (0..m.nrows()).map(|r| m.row(r).iter().map(|z| z.norm_sqr()).sum()).collect()
}

pub(crate) fn column_powers(m: &CMatrix) -> Vec<f64> {
    (0..m.ncols()).map(|c| m.column(c).iter().map(|z| z.norm_sqr()).sum()).collect()
}

pub(crate) fn pick_columns(basis: &CMatrix, cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(basis.nrows(), cols.len(), |r, c| basis[(r, cols[c])])
}

/// Keeps the `k` largest-magnitude entries, ties to the lowest `(row, col)`.
/// Returned in row-major order.
pub(crate) fn truncate_top_k(coeffs: &CMatrix, k: usize) -> Result<Vec<Coefficient>> {
    let (rows, cols) = coeffs.shape();
    if k > rows * cols {
        return Err(Error::invalid("top_K", format!("{k} exceeds {} available coefficients", rows * cols)));
    }
    // row-major flattening keeps the lexicographic tie rule
    let flat: Vec<f64> = (0..rows * cols).map(|i| coeffs[(i / cols, i % cols)].norm_sqr()).collect();
    let mut keep = top_k_indices(&flat, k);
    keep.sort_unstable();
    Ok(keep
        .into_iter()
        .map(|i| Coefficient {
            row: i / cols,
            col: i % cols,
            value: coeffs[(i / cols, i % cols)],
        })
        .collect())
}

/// Dense `rows × cols` matrix from a sparse coefficient list.
pub(crate) fn densify(coeffs: &[Coefficient], rows: usize, cols: usize) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols);
    for c in coeffs {
        m[(c.row, c.col)] += c.value;
    }
    m
}

/// Shared space-frequency compression of one `P × N_f` block.
///
/// `spatial` is the TRP's spatial basis; when `frequency_indices` is given the
/// frequency columns are fixed (joint selection), otherwise the `freq_count`
/// strongest are chosen.
pub(crate) fn compress_block(
    block: &CMatrix,
    spatial_basis: &CMatrix,
    spatial_indices: Vec<usize>,
    frequency_basis: &CMatrix,
    frequency: FrequencyChoice<'_>,
    top_k: usize,
) -> Result<(Vec<usize>, Vec<usize>, Vec<Coefficient>)> {
    let w1 = pick_columns(spatial_basis, &spatial_indices);
    let beam_domain = w1.adjoint() * block * frequency_basis;
    let frequency_indices = match frequency {
        FrequencyChoice::Fixed(idx) => idx.to_vec(),
        FrequencyChoice::Strongest(count) => {
            if count > frequency_basis.ncols() {
                return Err(Error::invalid("delay_dim_Z", format!("{count} exceeds {}", frequency_basis.ncols())));
            }
            let mut idx = top_k_indices(&column_powers(&beam_domain), count);
            idx.sort_unstable();
            idx
        }
    };
    let coeffs = CMatrix::from_fn(spatial_indices.len(), frequency_indices.len(), |r, c| {
        beam_domain[(r, frequency_indices[c])]
    });
    let kept = truncate_top_k(&coeffs, top_k)?;
    Ok((spatial_indices, frequency_indices, kept))
}

pub(crate) enum FrequencyChoice<'a> {
    Fixed(&'a [usize]),
    Strongest(usize),
}

/// `W₁,sel · C · W_f,selᴴ` for one report block.
pub fn reconstruct_block(block: &ReportBlock, spatial_basis: &CMatrix, frequency_basis: &CMatrix) -> CMatrix {
    let w1 = pick_columns(spatial_basis, &block.spatial_indices);
    let wf = pick_columns(frequency_basis, &block.frequency_indices);
    let c = densify(&block.coefficients, block.spatial_indices.len(), block.frequency_indices.len());
    w1 * c * wf.adjoint()
}

/// Stacked `N·P × N_f` reconstruction of a multi-TRP report for one layer.
pub fn reconstruct_stacked(report: &PrecoderReport, bases: &[BasisPair], layer: usize, joint_frequency: Option<&CMatrix>) -> Result<CMatrix> {
    let trps = report.blocks.iter().filter(|b| b.layer == layer).count();
    if trps != bases.len() {
        return Err(Error::dims("reconstruct_stacked bases", trps, bases.len()));
    }
    let p = report.layout.ports();
    let nf = report.layout.units;
    let mut out = CMatrix::zeros(p * trps, nf);
    for block in report.blocks.iter().filter(|b| b.layer == layer) {
        let basis = &bases[block.trp];
        let freq = joint_frequency.unwrap_or(&basis.frequency);
        out.view_mut((block.trp * p, 0), (p, nf))
            .copy_from(&reconstruct_block(block, &basis.spatial, freq));
    }
    Ok(out)
}

pub(crate) fn unit(x: f64) -> C64 {
    C64::new(x, 0.0)
}
