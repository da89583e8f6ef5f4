use super::{unit, Coefficient, PrecoderReport, Quantizer, ReportBlock, ReportLayout};
use crate::channel::ArrayConfig;
use crate::error::{Error, Result};
use crate::linalg::{unit_root, CMatrix, CVector};

/// Single-panel Type-I codebook parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Type1Config {
    pub array: ArrayConfig,
    /// 1 or 4 beams per `W₁` group.
    pub beams_in_group: usize,
    pub oversampling_h: usize,
    pub oversampling_v: usize,
    pub cophase_levels: usize,
}

impl Type1Config {
    pub fn new(array: ArrayConfig, beams_in_group: usize) -> Result<Self> {
        let cfg = Self {
            array,
            beams_in_group,
            oversampling_h: 4,
            oversampling_v: if array.ports_vertical > 1 { 4 } else { 1 },
            cophase_levels: 4,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        if !(self.beams_in_group == 1 || self.beams_in_group == 4) {
            return Err(Error::invalid("beams_in_group", "must be 1 or 4"));
        }
        if self.oversampling_h == 0 || self.oversampling_v == 0 {
            return Err(Error::invalid("oversampling", "must be at least 1"));
        }
        if self.cophase_levels == 0 {
            return Err(Error::invalid("cophase_levels", "must be at least 1"));
        }
        Ok(())
    }

    fn grid_h(&self) -> usize {
        self.oversampling_h * self.array.ports_horizontal
    }

    fn grid_v(&self) -> usize {
        self.oversampling_v * self.array.ports_vertical
    }

    /// `(i1_h, i1_v)` group indices and the beams each group contains.
    pub fn groups(&self) -> Vec<((usize, usize), Vec<(usize, usize)>)> {
        let (gh, gv) = (self.grid_h(), self.grid_v());
        let mut out = Vec::new();
        if self.beams_in_group == 1 {
            for l in 0..gh {
                for m in 0..gv {
                    out.push(((l, m), vec![(l, m)]));
                }
            }
        } else if self.array.ports_vertical > 1 {
            for i1 in 0..gh.div_ceil(2) {
                for i2 in 0..gv.div_ceil(2) {
                    let members = [(0, 0), (1, 0), (0, 1), (1, 1)]
                        .iter()
                        .map(|&(a, b)| ((2 * i1 + a) % gh, (2 * i2 + b) % gv))
                        .collect();
                    out.push(((i1, i2), members));
                }
            }
        } else {
            for i1 in 0..gh.div_ceil(2) {
                let members = (0..4).map(|a| ((2 * i1 + a) % gh, 0)).collect();
                out.push(((i1, 0), members));
            }
        }
        out
    }
}

/// Result of a Type-I search.
#[derive(Debug, Clone, PartialEq)]
pub struct Type1Selection {
    pub group: (usize, usize),
    /// Position of the chosen beam within its group.
    pub member: usize,
    pub beam: (usize, usize),
    pub cophase: usize,
    pub beamformer: CVector,
    pub report: PrecoderReport,
}

/// Unit-norm codeword `[b; φ b]/√2` (or `b` on single-polarised arrays).
pub fn type1_codeword(cfg: &Type1Config, beam: (usize, usize), cophase: usize) -> CVector {
    let a = &cfg.array;
    let block = a.ports_per_polarization();
    let scale = 1.0 / (a.ports() as f64).sqrt();
    let phi = unit_root(cophase as i64, cfg.cophase_levels);
    CVector::from_fn(a.ports(), |idx, _| {
        let pol = idx / block;
        let e = idx % block;
        let v = e / a.ports_horizontal;
        let h = e % a.ports_horizontal;
        let b = unit_root((h * beam.0) as i64, cfg.grid_h()) * unit_root((v * beam.1) as i64, cfg.grid_v()) * scale;
        if pol == 0 {
            b
        } else {
            b * phi
        }
    })
}

/// Exhaustive search of `(W₁, W₂)` maximising `‖H w‖` for a wideband
/// `n_rx × P` channel. Ties go to the first beam / co-phase in index order.
pub fn type1_quantize(h: &CMatrix, cfg: &Type1Config) -> Result<Type1Selection> {
    cfg.validate()?;
    let p = cfg.array.ports();
    if h.ncols() != p {
        return Err(Error::dims("type1_quantize ports", p, h.ncols()));
    }
    let cophases = if cfg.array.polarizations == 2 { cfg.cophase_levels } else { 1 };
    let mut best: Option<(f64, (usize, usize), usize, CVector)> = None;
    for l in 0..cfg.grid_h() {
        for m in 0..cfg.grid_v() {
            for n in 0..cophases {
                let w = type1_codeword(cfg, (l, m), n);
                let metric = (h * &w).norm_squared();
                if best.as_ref().is_none_or(|b| metric > b.0) {
                    best = Some((metric, (l, m), n, w));
                }
            }
        }
    }
    let (_, beam, cophase, beamformer) = best.expect("codebook is non-empty");
    let (group, member) = cfg
        .groups()
        .into_iter()
        .find_map(|(g, members)| members.iter().position(|&b| b == beam).map(|i| (g, i)))
        .expect("every beam belongs to a group");
    let mut coefficients = vec![Coefficient {
        row: 0,
        col: 0,
        value: unit(1.0),
    }];
    if cfg.array.polarizations == 2 {
        coefficients.push(Coefficient {
            row: 1,
            col: 0,
            value: unit_root(cophase as i64, cfg.cophase_levels),
        });
    }
    let report = PrecoderReport {
        layout: ReportLayout {
            ports_vertical: cfg.array.ports_vertical,
            ports_horizontal: cfg.array.ports_horizontal,
            polarizations: cfg.array.polarizations,
            units: 1,
            slots: 1,
        },
        quantizer: Quantizer::None,
        blocks: vec![ReportBlock {
            trp: 0,
            layer: 0,
            spatial_indices: vec![group.0, group.1, member],
            frequency_indices: vec![0],
            time_indices: Vec::new(),
            coefficients,
        }],
    };
    Ok(Type1Selection {
        group,
        member,
        beam,
        cophase,
        beamformer,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_complex_matrix, C64};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Oracle: enumerate group → member → co-phase, independent of the beam loop.
    fn exhaustive(h: &CMatrix, cfg: &Type1Config) -> (f64, CVector) {
        let cophases = if cfg.array.polarizations == 2 { cfg.cophase_levels } else { 1 };
        let mut best = (f64::MIN, CVector::zeros(1));
        for (_, members) in cfg.groups() {
            for beam in members {
                for n in 0..cophases {
                    let w = type1_codeword(cfg, beam, n);
                    let m = (h * &w).norm_squared();
                    if m > best.0 {
                        best = (m, w);
                    }
                }
            }
        }
        best
    }

    #[test]
    fn codeword_channel_is_recovered_exactly() {
        let a = ArrayConfig::uniform(1, 4, 2).unwrap();
        let cfg = Type1Config::new(a, 4).unwrap();
        let w = type1_codeword(&cfg, (5, 0), 0);
        let h = CMatrix::from_row_slice(1, w.len(), w.adjoint().as_slice());
        let sel = type1_quantize(&h, &cfg).unwrap();
        assert_eq!(sel.beam, (5, 0));
        assert_eq!(sel.cophase, 0);
        assert!(((&h * &sel.beamformer).norm() - 1.0).abs() < 1e-12);
        assert!((sel.beamformer.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_exhaustive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for (v, hz, pol, g) in [(1, 2, 2, 1), (1, 2, 2, 4), (2, 2, 2, 4), (1, 4, 2, 4), (2, 2, 1, 4), (1, 8, 1, 1)] {
            let a = ArrayConfig::uniform(v, hz, pol).unwrap();
            let cfg = Type1Config::new(a, g).unwrap();
            for _ in 0..10 {
                let h = random_complex_matrix(&mut rng, 2, a.ports());
                let sel = type1_quantize(&h, &cfg).unwrap();
                let (m, w) = exhaustive(&h, &cfg);
                assert!(((&h * &sel.beamformer).norm_squared() - m).abs() < 1e-12);
                assert!((sel.beamformer - w).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn two_port_cophase_is_argmax() {
        let a = ArrayConfig::uniform(1, 1, 2).unwrap();
        let cfg = Type1Config::new(a, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let h = random_complex_matrix(&mut rng, 1, 2);
            let phases = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)];
            let scores: Vec<f64> = phases.iter().map(|&p| (h[(0, 0)] + h[(0, 1)] * p).norm_sqr()).collect();
            let expect = (0..4).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
            assert_eq!(type1_quantize(&h, &cfg).unwrap().cophase, expect);
        }
    }

    #[test]
    fn rejects_wrong_ports() {
        let a = ArrayConfig::uniform(1, 2, 2).unwrap();
        let cfg = Type1Config::new(a, 1).unwrap();
        assert!(type1_quantize(&CMatrix::zeros(1, 3), &cfg).is_err());
        assert!(Type1Config::new(a, 2).is_err());
    }
}
