//! Seeded clustered multipath channels on a port × frequency-unit × time grid.
//!
//! A channel snapshot at time `t` is the superposition of path clusters, each
//! contributing `gain · e^{j2π·doppler·t} · a(θ) b(τ)ᵀ` where `a` is the array
//! steering vector and `b(τ)[f] = e^{-j2π f Δf τ}` the delay vector across
//! frequency units. Gains are scaled so the ensemble mean of `‖H‖²_F` is
//! `P · N_f`.
//!
//! Port ordering is `pol · (V·H) + v · H + h`. Dual-polarised arrays carry two
//! identically steered blocks with independent per-polarisation gains.

use crate::error::{Error, Result};
use crate::linalg::{complex_normal, dft_basis, hermitian_eigen, CMatrix, CVector, C64};
use rand::Rng;
use std::f64::consts::PI;

/// Planar antenna array layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    pub ports_vertical: usize,
    pub ports_horizontal: usize,
    pub polarizations: usize,
    /// Vertical element spacing in wavelengths.
    pub spacing_v: f64,
    /// Horizontal element spacing in wavelengths.
    pub spacing_h: f64,
}

impl ArrayConfig {
    pub fn new(
        ports_vertical: usize,
        ports_horizontal: usize,
        polarizations: usize,
        spacing_v: f64,
        spacing_h: f64,
    ) -> Result<Self> {
        let cfg = Self {
            ports_vertical,
            ports_horizontal,
            polarizations,
            spacing_v,
            spacing_h,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Half-wavelength spaced array.
    pub fn uniform(ports_vertical: usize, ports_horizontal: usize, polarizations: usize) -> Result<Self> {
        Self::new(ports_vertical, ports_horizontal, polarizations, 0.5, 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ports_vertical == 0 || self.ports_horizontal == 0 {
            return Err(Error::invalid("ports", "array needs at least one element per dimension"));
        }
        if !(self.polarizations == 1 || self.polarizations == 2) {
            return Err(Error::invalid("polarizations", "must be 1 or 2"));
        }
        if !(self.spacing_v > 0.0 && self.spacing_h > 0.0) {
            return Err(Error::invalid("spacing", "element spacing must be positive"));
        }
        Ok(())
    }

    /// Ports per polarisation block.
    pub fn ports_per_polarization(&self) -> usize {
        self.ports_vertical * self.ports_horizontal
    }

    /// Total port count `P`.
    pub fn ports(&self) -> usize {
        self.ports_per_polarization() * self.polarizations
    }
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCluster {
    pub gain: C64,
    pub doppler_hz: f64,
    pub azimuth: f64,
    pub zenith: f64,
    pub delay_s: f64,
    /// Per-polarisation gain multipliers; only the first is used on single-polarised arrays.
    pub polarization_gains: [C64; 2],
}

impl PathCluster {
    pub fn new(gain: C64, doppler_hz: f64, azimuth: f64, zenith: f64, delay_s: f64) -> Self {
        Self {
            gain,
            doppler_hz,
            azimuth,
            zenith,
            delay_s,
            polarization_gains: [C64::new(1.0, 0.0); 2],
        }
    }
}

/// Frequency-domain reporting units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub units: usize,
    pub unit_spacing_hz: f64,
    pub subcarriers_per_unit: usize,
}

impl FrequencyGrid {
    pub fn new(units: usize, unit_spacing_hz: f64, subcarriers_per_unit: usize) -> Result<Self> {
        let g = Self {
            units,
            unit_spacing_hz,
            subcarriers_per_unit,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.units == 0 {
            return Err(Error::invalid("units", "need at least one frequency unit"));
        }
        if !(self.unit_spacing_hz > 0.0) {
            return Err(Error::invalid("unit_spacing_hz", "must be positive"));
        }
        Ok(())
    }

    /// Unambiguous delay range `1/Δf`.
    pub fn max_delay_s(&self) -> f64 {
        1.0 / self.unit_spacing_hz
    }

    /// Delay of tap `k` on the unit DFT grid.
    pub fn tap_delay_s(&self, k: usize) -> f64 {
        k as f64 / (self.units as f64 * self.unit_spacing_hz)
    }
}

/// Channel matrix `P × N_f` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSnapshot {
    pub matrix: CMatrix,
    pub time_s: f64,
}

impl ChannelSnapshot {
    pub fn ports(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn units(&self) -> usize {
        self.matrix.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Dft,
    Eigen,
}

/// Spatial (`P × P`) and frequency (`N_f × N_f`) unitary bases.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisPair {
    pub spatial: CMatrix,
    pub frequency: CMatrix,
    pub kind: BasisKind,
    /// Number of identical polarisation blocks the spatial basis is built from.
    /// Column `k` of block 0 pairs with column `k + P/blocks` of block 1.
    pub spatial_blocks: usize,
}

impl BasisPair {
    /// Block-diagonal 2D-DFT spatial basis and DFT frequency basis.
    pub fn dft(array: &ArrayConfig, units: usize) -> Self {
        let per_pol = kron(&dft_basis(array.ports_vertical), &dft_basis(array.ports_horizontal));
        let block = per_pol.nrows();
        let p = array.ports();
        let mut spatial = CMatrix::zeros(p, p);
        for b in 0..array.polarizations {
            spatial
                .view_mut((b * block, b * block), (block, block))
                .copy_from(&per_pol);
        }
        Self {
            spatial,
            frequency: dft_basis(units),
            kind: BasisKind::Dft,
            spatial_blocks: array.polarizations,
        }
    }

    pub fn ports(&self) -> usize {
        self.spatial.nrows()
    }

    pub fn units(&self) -> usize {
        self.frequency.nrows()
    }

    /// Max deviation from unitarity over both bases.
    pub fn unitary_deviation(&self) -> f64 {
        crate::linalg::unitary_deviation(&self.spatial).max(crate::linalg::unitary_deviation(&self.frequency))
    }
}

/// Kronecker product.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |r, c| a[(r / br, c / bc)] * b[(r % br, c % bc)])
}

/// Unit-norm array response toward `(azimuth, zenith)`.
pub fn steering_vector(azimuth: f64, zenith: f64, array: &ArrayConfig) -> CVector {
    let p = array.ports();
    let block = array.ports_per_polarization();
    let scale = 1.0 / (p as f64).sqrt();
    let u_h = array.spacing_h * azimuth.sin() * zenith.sin();
    let u_v = array.spacing_v * zenith.cos();
    CVector::from_fn(p, |idx, _| {
        let e = idx % block;
        let v = (e / array.ports_horizontal) as f64;
        let h = (e % array.ports_horizontal) as f64;
        C64::from_polar(scale, 2.0 * PI * (h * u_h + v * u_v))
    })
}

/// Frequency response of delay `τ` over the grid units, `e^{-j2π f Δf τ}`.
pub fn delay_vector(delay_s: f64, grid: &FrequencyGrid) -> CVector {
    CVector::from_fn(grid.units, |f, _| {
        C64::from_polar(1.0, -2.0 * PI * f as f64 * grid.unit_spacing_hz * delay_s)
    })
}

/// Sum over paths of `α e^{j2πvt} θ ⊗ τ` at time `t` (seconds).
pub fn synthesize_channel(
    paths: &[PathCluster],
    t: f64,
    array: &ArrayConfig,
    grid: &FrequencyGrid,
) -> Result<ChannelSnapshot> {
    array.validate()?;
    grid.validate()?;
    let p = array.ports();
    let block = array.ports_per_polarization();
    let tau_max = grid.max_delay_s();
    let mut matrix = CMatrix::zeros(p, grid.units);
    for path in paths {
        if !(path.delay_s >= 0.0 && path.delay_s < tau_max) {
            return Err(Error::invalid("delay_s", format!("{} outside [0, {tau_max})", path.delay_s)));
        }
        if !path.gain.is_finite() {
            return Err(Error::invalid("gain", "non-finite path gain"));
        }
        let a = steering_vector(path.azimuth, path.zenith, array);
        let b = delay_vector(path.delay_s, grid);
        let coeff = path.gain * C64::from_polar(1.0, 2.0 * PI * path.doppler_hz * t);
        for r in 0..p {
            let pol = r / block;
            let ar = a[r] * coeff * path.polarization_gains[pol];
            for f in 0..grid.units {
                matrix[(r, f)] += ar * b[f];
            }
        }
    }
    Ok(ChannelSnapshot { matrix, time_s: t })
}

/// Eigenvectors of the accumulated spatial and frequency covariances.
pub fn eigen_basis(samples: &[ChannelSnapshot]) -> Result<BasisPair> {
    let first = samples.first().ok_or(Error::EmptyInput("samples"))?;
    let (p, nf) = first.matrix.shape();
    let mut spatial_cov = CMatrix::zeros(p, p);
    let mut freq_cov = CMatrix::zeros(nf, nf);
    for s in samples {
        if s.matrix.shape() != (p, nf) {
            return Err(Error::dims("eigen_basis samples", p * nf, s.matrix.len()));
        }
        spatial_cov += &s.matrix * s.matrix.adjoint();
        freq_cov += s.matrix.adjoint() * &s.matrix;
    }
    let energy: f64 = (0..p).map(|i| spatial_cov[(i, i)].re).sum();
    if !(energy > 0.0) {
        return Err(Error::EmptyCovariance);
    }
    let (_, spatial) = hermitian_eigen(&spatial_cov);
    let (_, frequency) = hermitian_eigen(&freq_cov);
    Ok(BasisPair {
        spatial,
        frequency,
        kind: BasisKind::Eigen,
        spatial_blocks: 1,
    })
}

/// Parametric channel evolving in time.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProcess {
    pub array: ArrayConfig,
    pub grid: FrequencyGrid,
    pub paths: Vec<PathCluster>,
}

impl ChannelProcess {
    pub fn snapshot(&self, t: f64) -> Result<ChannelSnapshot> {
        synthesize_channel(&self.paths, t, &self.array, &self.grid)
    }

    /// Snapshots at `t0, t0 + dt, …` (`count` of them).
    pub fn snapshots(&self, t0: f64, dt: f64, count: usize) -> Result<Vec<ChannelSnapshot>> {
        (0..count).map(|n| self.snapshot(t0 + n as f64 * dt)).collect()
    }

    /// Largest path Doppler magnitude.
    pub fn max_doppler_hz(&self) -> f64 {
        self.paths.iter().map(|p| p.doppler_hz.abs()).fold(0.0, f64::max)
    }
}

/// Random cluster statistics used as a stand-in for a standardised channel model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterModel {
    pub min_paths: usize,
    pub max_paths: usize,
    /// Azimuths are drawn uniformly in `±sector_half_width`.
    pub sector_half_width: f64,
    pub zenith_center: f64,
    pub zenith_spread: f64,
    /// Delays are drawn uniformly in `[0, delay_fraction · τ_max)`.
    pub delay_fraction: f64,
    /// Per-path Doppler is `max_doppler_hz · cos(φ)` with `φ` uniform.
    pub max_doppler_hz: f64,
}

impl Default for ClusterModel {
    fn default() -> Self {
        Self {
            min_paths: 2,
            max_paths: 8,
            sector_half_width: 60f64.to_radians(),
            zenith_center: PI / 2.0,
            zenith_spread: 10f64.to_radians(),
            delay_fraction: 0.5,
            max_doppler_hz: 0.0,
        }
    }
}

impl ClusterModel {
    /// Independent draw of paths with Rayleigh gains normalised to `E‖H‖² = P·N_f`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, array: &ArrayConfig, grid: &FrequencyGrid) -> Vec<PathCluster> {
        let count = rng.random_range(self.min_paths..=self.max_paths.max(self.min_paths));
        let variance = array.ports() as f64 / count as f64;
        (0..count)
            .map(|_| {
                let mut path = self.draw_geometry(rng, grid);
                path.gain = complex_normal(rng, variance);
                path.polarization_gains = [complex_normal(rng, 1.0), complex_normal(rng, 1.0)];
                if array.polarizations == 1 {
                    path.gain *= path.polarization_gains[0];
                    path.polarization_gains = [C64::new(1.0, 0.0); 2];
                }
                path
            })
            .collect()
    }

    fn draw_geometry<R: Rng + ?Sized>(&self, rng: &mut R, grid: &FrequencyGrid) -> PathCluster {
        let azimuth = rng.random_range(-1.0..=1.0) * self.sector_half_width;
        let zenith = self.zenith_center + rng.random_range(-1.0..=1.0) * self.zenith_spread;
        let delay_s = rng.random::<f64>() * self.delay_fraction * grid.max_delay_s();
        let doppler_hz = self.max_doppler_hz * (2.0 * PI * rng.random::<f64>()).cos();
        PathCluster::new(C64::new(1.0, 0.0), doppler_hz, azimuth, zenith, delay_s)
    }
}

/// Fixed scatterer geometry whose realisations share angles, delays and Dopplers
/// but draw fresh small-scale gains. Drops from one geometry share a covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringGeometry {
    /// Geometry of every sub-path; `gain` holds the sub-path's mean power.
    pub subpaths: Vec<PathCluster>,
}

impl ScatteringGeometry {
    /// `clusters` clusters of `rays` sub-paths each, with exponentially decaying
    /// cluster powers and the given angular / delay spreads around random centres.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        model: &ClusterModel,
        grid: &FrequencyGrid,
        clusters: usize,
        rays: usize,
        angle_spread: f64,
        delay_spread_s: f64,
    ) -> Self {
        let mut subpaths = Vec::with_capacity(clusters * rays);
        let mut total = 0.0;
        for c in 0..clusters {
            let centre = model.draw_geometry(rng, grid);
            let power = (-(c as f64) / 2.0).exp();
            for _ in 0..rays {
                let mut sp = centre;
                sp.azimuth += angle_spread * (rng.random::<f64>() - 0.5) * 2.0;
                sp.zenith += angle_spread * (rng.random::<f64>() - 0.5);
                sp.delay_s = (sp.delay_s + delay_spread_s * rng.random::<f64>()).min(0.999 * grid.max_delay_s());
                sp.doppler_hz = model.max_doppler_hz * (2.0 * PI * rng.random::<f64>()).cos();
                sp.gain = C64::new(power / rays as f64, 0.0);
                total += power / rays as f64;
                subpaths.push(sp);
            }
        }
        for sp in &mut subpaths {
            sp.gain /= total;
        }
        Self { subpaths }
    }

    /// One small-scale fading realisation, normalised to `E‖H‖² = P·N_f`.
    pub fn realize<R: Rng + ?Sized>(&self, rng: &mut R, array: &ArrayConfig) -> Vec<PathCluster> {
        let p = array.ports() as f64;
        self.subpaths
            .iter()
            .map(|sp| {
                let mut path = *sp;
                path.gain = complex_normal(rng, sp.gain.re * p);
                if array.polarizations == 2 {
                    path.polarization_gains = [complex_normal(rng, 1.0), complex_normal(rng, 1.0)];
                }
                path
            })
            .collect()
    }
}

/// On-grid path: azimuth/delay chosen so the path lands exactly on DFT basis
/// column `(beam_h, tap)` of a single-row, half-wavelength array.
pub fn on_grid_path(array: &ArrayConfig, grid: &FrequencyGrid, beam_h: usize, tap: usize, gain: C64, doppler_hz: f64) -> PathCluster {
    let n = array.ports_horizontal as f64;
    let mut u = beam_h as f64 / n;
    if u >= 0.5 {
        u -= 1.0;
    }
    // phase step 2π·spacing_h·sin(az) = 2π·u
    let az = (u / array.spacing_h).clamp(-1.0, 1.0).asin();
    PathCluster::new(gain, doppler_hz, az, PI / 2.0, grid.tap_delay_s(tap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitary_deviation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(units: usize) -> FrequencyGrid {
        FrequencyGrid::new(units, 30e3 * 12.0, 12).unwrap()
    }

    #[test]
    fn single_element_steering_is_one() {
        let a = ArrayConfig::uniform(1, 1, 1).unwrap();
        let v = steering_vector(0.3, 1.1, &a);
        assert_eq!(v.len(), 1);
        assert!((v[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn broadside_steering_is_constant() {
        let a = ArrayConfig::uniform(2, 4, 2).unwrap();
        let v = steering_vector(0.0, PI / 2.0, &a);
        let expect = 1.0 / (a.ports() as f64).sqrt();
        for z in v.iter() {
            assert!((z - C64::new(expect, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn two_element_thirty_degrees() {
        let a = ArrayConfig::new(1, 2, 1, 0.5, 0.5).unwrap();
        let v = steering_vector(30f64.to_radians(), PI / 2.0, &a);
        let s = 1.0 / 2f64.sqrt();
        assert!((v[0] - C64::new(s, 0.0)).norm() < 1e-12);
        assert!((v[1] - C64::new(0.0, s)).norm() < 1e-12);
    }

    #[test]
    fn steering_is_unit_norm() {
        let a = ArrayConfig::new(4, 8, 2, 0.8, 0.5).unwrap();
        for (az, ze) in [(0.1, 0.2), (-1.0, 2.0), (3.0, 1.5)] {
            assert!((steering_vector(az, ze, &a).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_broadside_path_is_constant() {
        let a = ArrayConfig::uniform(2, 2, 1).unwrap();
        let g = grid(5);
        let h = synthesize_channel(&[PathCluster::new(C64::new(1.0, 0.0), 0.0, 0.0, PI / 2.0, 0.0)], 0.0, &a, &g).unwrap();
        for z in h.matrix.iter() {
            assert!((z - C64::new(0.5, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn opposite_paths_cancel() {
        let a = ArrayConfig::uniform(2, 2, 2).unwrap();
        let g = grid(4);
        let p = PathCluster::new(C64::new(1.0, 0.0), 10.0, 0.3, 1.4, 1e-6);
        let mut q = p;
        q.gain = -p.gain;
        let h = synthesize_channel(&[p, q], 0.01, &a, &g).unwrap();
        assert!(h.matrix.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn doppler_half_turn_at_five_ms() {
        let a = ArrayConfig::uniform(1, 4, 1).unwrap();
        let g = grid(3);
        let p = [PathCluster::new(C64::new(0.7, 0.2), 100.0, 0.4, PI / 2.0, 2e-7)];
        let h0 = synthesize_channel(&p, 0.0, &a, &g).unwrap();
        let h1 = synthesize_channel(&p, 5e-3, &a, &g).unwrap();
        assert!((&h1.matrix + &h0.matrix).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn delay_outside_range_rejected() {
        let a = ArrayConfig::uniform(1, 2, 1).unwrap();
        let g = grid(3);
        let p = [PathCluster::new(C64::new(1.0, 0.0), 0.0, 0.0, 1.0, 1.0)];
        assert!(synthesize_channel(&p, 0.0, &a, &g).is_err());
    }

    #[test]
    fn eigen_basis_rank_one() {
        let a = ArrayConfig::uniform(2, 2, 1).unwrap();
        let g = grid(6);
        let paths = [PathCluster::new(C64::new(1.0, 0.5), 0.0, 0.3, 1.2, 3e-7)];
        let s = synthesize_channel(&paths, 0.0, &a, &g).unwrap();
        let basis = eigen_basis(&[s.clone(), s.clone(), s.clone()]).unwrap();
        let col = s.matrix.column(0).normalize();
        let first = basis.spatial.column(0);
        assert!(((first.adjoint() * col)[(0, 0)].norm() - 1.0).abs() < 1e-10);
        assert!(basis.unitary_deviation() < 1e-9);
    }

    #[test]
    fn eigen_basis_scaled_identity() {
        let mut m = CMatrix::zeros(3, 3);
        for i in 0..3 {
            m[(i, i)] = C64::new(2.0, 0.0);
        }
        let s = ChannelSnapshot { matrix: m, time_s: 0.0 };
        let b = eigen_basis(&[s]).unwrap();
        assert!(b.unitary_deviation() < 1e-9);
    }

    #[test]
    fn eigen_basis_rejects_empty() {
        let s = ChannelSnapshot {
            matrix: CMatrix::zeros(3, 2),
            time_s: 0.0,
        };
        assert_eq!(eigen_basis(&[s]).unwrap_err(), Error::EmptyCovariance);
        assert!(eigen_basis(&[]).is_err());
    }

    #[test]
    fn dft_basis_pair_unitary() {
        let a = ArrayConfig::uniform(2, 4, 2).unwrap();
        let b = BasisPair::dft(&a, 13);
        assert!(b.unitary_deviation() < 1e-12);
        assert!(unitary_deviation(&b.spatial) < 1e-12);
    }

    #[test]
    fn on_grid_path_hits_one_dft_coefficient() {
        let a = ArrayConfig::uniform(1, 8, 1).unwrap();
        let g = grid(8);
        let p = on_grid_path(&a, &g, 3, 2, C64::new(1.0, 0.0), 0.0);
        let h = synthesize_channel(&[p], 0.0, &a, &g).unwrap();
        let b = BasisPair::dft(&a, 8);
        let c = b.spatial.adjoint() * &h.matrix * &b.frequency;
        let big = c.iter().filter(|z| z.norm() > 1e-9).count();
        assert_eq!(big, 1);
        assert!((c[(3, 2)].norm_sqr() - 8.0).abs() < 1e-9);
    }

    #[test]
    fn normalisation_matches_ensemble_energy() {
        let a = ArrayConfig::uniform(2, 2, 2).unwrap();
        let g = grid(6);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = ClusterModel::default();
        let drops = 4000;
        let mut acc = 0.0;
        for _ in 0..drops {
            let paths = model.draw(&mut rng, &a, &g);
            acc += crate::linalg::fro_sq(&synthesize_channel(&paths, 0.0, &a, &g).unwrap().matrix);
        }
        let mean = acc / drops as f64;
        let target = (a.ports() * g.units) as f64;
        assert!((mean / target - 1.0).abs() < 0.1, "mean {mean} target {target}");
    }
}
