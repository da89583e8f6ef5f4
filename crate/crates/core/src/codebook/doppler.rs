use super::etype2::{common_spatial_selection, layout_of};
use super::{densify, pick_columns, truncate_top_k, EType2Config, PrecoderReport, Quantizer, ReportBlock};
use crate::channel::{kron, ArrayConfig, BasisPair};
use crate::error::{Error, Result};
use crate::linalg::{dft_basis_conj, top_k_indices, CMatrix};

/// Space-frequency-time codebook parameters. `etype2.delay_dim_z` is the
/// number `M` of frequency basis vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerConfig {
    pub slots: usize,
    pub time_basis_t: usize,
    pub etype2: EType2Config,
}

impl DopplerConfig {
    pub fn validate(&self, polarizations: usize) -> Result<()> {
        if self.slots == 0 || self.time_basis_t == 0 || self.time_basis_t > self.slots {
            return Err(Error::invalid("time_basis_T", format!("T = {} must lie in 1..={}", self.time_basis_t, self.slots)));
        }
        let e = &self.etype2;
        if e.delay_dim_z == 0 || e.delay_dim_z > e.freq_units {
            return Err(Error::invalid("delay_dim_Z", "M must lie in 1..=N_f"));
        }
        let avail = polarizations * e.beams_l * e.delay_dim_z * self.time_basis_t;
        if e.top_k > avail {
            return Err(Error::invalid("top_K", format!("{} exceeds {avail} available coefficients", e.top_k)));
        }
        Ok(())
    }
}

/// Time-domain DFT basis over `slots`; column `t` is `e^{-j2π s t / N_slot}/√N_slot`
/// so a Doppler phasor `e^{j2π v s Δt}` lands on column `v·N_slot·Δt`.
pub fn time_basis(slots: usize) -> CMatrix {
    dft_basis_conj(slots)
}

/// Compresses predicted CSI `P × (N_f · N_slot)` (column `f · N_slot + s`)
/// into `W₁ W₂ (W_f ⊗ W_D)ᴴ`.
pub fn doppler_compress(predicted: &CMatrix, cfg: &DopplerConfig, array: &ArrayConfig) -> Result<PrecoderReport> {
    cfg.validate(array.polarizations)?;
    let nf = cfg.etype2.freq_units;
    let ns = cfg.slots;
    if predicted.nrows() != array.ports() {
        return Err(Error::dims("doppler_compress ports", array.ports(), predicted.nrows()));
    }
    if predicted.ncols() != nf * ns {
        return Err(Error::dims("doppler_compress columns", nf * ns, predicted.ncols()));
    }
    let basis = BasisPair::dft(array, nf);
    let wd = time_basis(ns);
    let spatial = common_spatial_selection(std::slice::from_ref(predicted), &basis, cfg.etype2.beams_l, array.polarizations)?;
    let w1 = pick_columns(&basis.spatial, &spatial);
    let y = w1.adjoint() * predicted * kron(&basis.frequency, &wd);

    let mut freq_power = vec![0.0; nf];
    let mut time_power = vec![0.0; ns];
    for c in 0..nf * ns {
        let pw: f64 = y.column(c).iter().map(|z| z.norm_sqr()).sum();
        freq_power[c / ns] += pw;
        time_power[c % ns] += pw;
    }
    let mut freq = top_k_indices(&freq_power, cfg.etype2.delay_dim_z);
    freq.sort_unstable();
    let mut time = top_k_indices(&time_power, cfg.time_basis_t);
    time.sort_unstable();
    let t = time.len();
    let coeffs = CMatrix::from_fn(spatial.len(), freq.len() * t, |r, c| y[(r, freq[c / t] * ns + time[c % t])]);
    let kept = truncate_top_k(&coeffs, cfg.etype2.top_k)?;
    Ok(PrecoderReport {
        layout: layout_of(array, nf, ns),
        quantizer: Quantizer::None,
        blocks: vec![ReportBlock {
            trp: 0,
            layer: 0,
            spatial_indices: spatial,
            frequency_indices: freq,
            time_indices: time,
            coefficients: kept,
        }],
    })
}

/// Rebuilds the `P × (N_f · N_slot)` matrix from a Doppler-domain report.
pub fn doppler_reconstruct(report: &PrecoderReport) -> Result<CMatrix> {
    let l = report.layout;
    let array = ArrayConfig::uniform(l.ports_vertical, l.ports_horizontal, l.polarizations)?;
    let basis = BasisPair::dft(&array, l.units);
    let wd = time_basis(l.slots);
    let block = report.blocks.first().ok_or(Error::EmptyInput("report blocks"))?;
    let w1 = pick_columns(&basis.spatial, &block.spatial_indices);
    let wf = pick_columns(&basis.frequency, &block.frequency_indices);
    let wt = pick_columns(&wd, &block.time_indices);
    let c = densify(
        &block.coefficients,
        block.spatial_indices.len(),
        block.frequency_indices.len() * block.time_indices.len(),
    );
    Ok(w1 * c * kron(&wf, &wt).adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{on_grid_path, synthesize_channel, FrequencyGrid};
    use crate::linalg::{random_complex_matrix, C64};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(l: usize, nf: usize, m: usize, slots: usize, t: usize, k: usize) -> DopplerConfig {
        DopplerConfig {
            slots,
            time_basis_t: t,
            etype2: EType2Config {
                beams_l: l,
                freq_units: nf,
                delay_dim_z: m,
                fraction_p: 1.0,
                units_per_subband: 1,
                top_k: k,
                layers: 1,
            },
        }
    }

    /// Lays out per-slot `P × N_f` snapshots as columns `f · N_slot + s`.
    fn interleave(snaps: &[CMatrix]) -> CMatrix {
        let ns = snaps.len();
        let (p, nf) = snaps[0].shape();
        CMatrix::from_fn(p, nf * ns, |r, c| snaps[c % ns][(r, c / ns)])
    }

    #[test]
    fn full_basis_exact() {
        let a = ArrayConfig::uniform(1, 2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_complex_matrix(&mut rng, 4, 3 * 4);
        let r = doppler_compress(&x, &cfg(2, 3, 3, 4, 4, 48), &a).unwrap();
        assert!((doppler_reconstruct(&r).unwrap() - x).norm() < 1e-10);
    }

    #[test]
    fn static_channel_uses_dc_time_column() {
        let a = ArrayConfig::uniform(1, 2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_complex_matrix(&mut rng, 4, 3);
        let x = interleave(&vec![h; 5]);
        let r = doppler_compress(&x, &cfg(2, 3, 3, 5, 1, 12), &a).unwrap();
        assert_eq!(r.blocks[0].time_indices, vec![0]);
        assert!((doppler_reconstruct(&r).unwrap() - x).norm() < 1e-10);
    }

    #[test]
    fn on_grid_doppler_hits_expected_time_column() {
        let a = ArrayConfig::uniform(1, 4, 1).unwrap();
        let grid = FrequencyGrid::new(4, 1e5, 12).unwrap();
        let dt = 1e-3;
        let slots = 8;
        for (v, expect) in [(250.0, 2usize), (-125.0, 7)] {
            let p = on_grid_path(&a, &grid, 1, 2, C64::new(1.0, 0.0), v);
            let snaps: Vec<CMatrix> = (0..slots).map(|s| synthesize_channel(&[p], s as f64 * dt, &a, &grid).unwrap().matrix).collect();
            let r = doppler_compress(&interleave(&snaps), &cfg(1, 4, 1, slots, 1, 1), &a).unwrap();
            assert_eq!(r.blocks[0].time_indices, vec![expect]);
            assert_eq!(r.blocks[0].frequency_indices, vec![2]);
            assert!((doppler_reconstruct(&r).unwrap() - interleave(&snaps)).norm() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_dims() {
        let a = ArrayConfig::uniform(1, 2, 2).unwrap();
        assert!(doppler_compress(&CMatrix::zeros(4, 5), &cfg(1, 3, 3, 2, 1, 1), &a).is_err());
        assert!(cfg(1, 3, 3, 2, 3, 1).validate(2).is_err());
    }
}
