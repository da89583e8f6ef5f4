//! Beam tracking under mobility with latency- and error-prone beam indication.

use crate::cjt::spectral_efficiency;
use crate::error::{Error, Result};
use crate::linalg::{db_to_linear, linear_to_db};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Gain floor relative to the beam peak.
pub const SIDELOBE_FLOOR_DB: f64 = 20.0;
/// Event-loop resolution.
pub const SUB_STEP_S: f64 = 0.5e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub waypoints: Vec<[f64; 2]>,
    pub speed_mps: f64,
    pub sample_spacing_m: f64,
    pub sample_count: usize,
}

impl Trajectory {
    pub fn validate(&self) -> Result<()> {
        if self.waypoints.is_empty() {
            return Err(Error::invalid("waypoints", "at least one waypoint is needed"));
        }
        if !(self.speed_mps > 0.0) {
            return Err(Error::invalid("speed_mps", "must be positive"));
        }
        if !(self.sample_spacing_m > 0.0) {
            return Err(Error::invalid("sample_spacing_m", "must be positive"));
        }
        if self.sample_count == 0 {
            return Err(Error::invalid("sample_count", "must be positive"));
        }
        Ok(())
    }

    /// Point at arc length `s` along the polyline, clamped to its ends.
    pub fn position_at_distance(&self, s: f64) -> [f64; 2] {
        let mut left = s.max(0.0);
        for w in self.waypoints.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            if left <= len && len > 0.0 {
                let f = left / len;
                return [a[0] + (b[0] - a[0]) * f, a[1] + (b[1] - a[1]) * f];
            }
            left -= len;
        }
        *self.waypoints.last().expect("validated trajectory")
    }

    pub fn position_at_time(&self, t: f64) -> [f64; 2] {
        self.position_at_distance(self.speed_mps * t)
    }

    pub fn duration_s(&self) -> f64 {
        self.sample_count as f64 * self.sample_spacing_m / self.speed_mps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamGrid {
    pub trp_position: [f64; 2],
    pub beam_count: usize,
    /// Azimuths of the beam boresights, radians.
    pub beam_centers: Vec<f64>,
    pub beamwidth: f64,
    pub peak_gain_db: f64,
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

impl BeamGrid {
    /// `beam_count` beams spaced one beamwidth apart across the sector.
    pub fn uniform(trp_position: [f64; 2], beam_count: usize, sector_center: f64, sector_width: f64, peak_gain_db: f64) -> Result<Self> {
        if beam_count == 0 || !(sector_width > 0.0) {
            return Err(Error::invalid("beam grid", "need at least one beam and a positive sector"));
        }
        let beamwidth = sector_width / beam_count as f64;
        let start = sector_center - sector_width / 2.0 + beamwidth / 2.0;
        Ok(Self {
            trp_position,
            beam_count,
            beam_centers: (0..beam_count).map(|i| start + i as f64 * beamwidth).collect(),
            beamwidth,
            peak_gain_db,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.beam_count == 0 || self.beam_centers.len() != self.beam_count {
            return Err(Error::invalid("beam_centers", "must list one centre per beam"));
        }
        if !(self.beamwidth > 0.0) {
            return Err(Error::invalid("beamwidth", "must be positive"));
        }
        Ok(())
    }

    pub fn direction_to(&self, position: [f64; 2]) -> f64 {
        (position[1] - self.trp_position[1]).atan2(position[0] - self.trp_position[0])
    }

    pub fn distance_to(&self, position: [f64; 2]) -> f64 {
        ((position[0] - self.trp_position[0]).powi(2) + (position[1] - self.trp_position[1]).powi(2)).sqrt()
    }

    /// Gaussian main lobe `peak − 12 (Δ/bw)²` dB, floored 20 dB below peak.
    pub fn gain_db(&self, beam: usize, azimuth: f64) -> f64 {
        let d = wrap(azimuth - self.beam_centers[beam]) / self.beamwidth;
        self.peak_gain_db - (12.0 * d * d).min(SIDELOBE_FLOOR_DB)
    }
}

/// Strongest beam of a single grid toward `position`; ties go to the lower index.
pub fn best_beam(position: [f64; 2], grid: &BeamGrid) -> usize {
    let az = grid.direction_to(position);
    let mut best = 0;
    let mut best_gain = grid.gain_db(0, az);
    for b in 1..grid.beam_count {
        let g = grid.gain_db(b, az);
        if g > best_gain + 1e-12 {
            best = b;
            best_gain = g;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub pathloss_intercept_db: f64,
    pub pathloss_exponent: f64,
    /// Whether non-serving TRPs radiate toward randomly scheduled users.
    pub interference: bool,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            tx_power_dbm: 23.0,
            noise_power_dbm: -85.0,
            pathloss_intercept_db: 61.4,
            pathloss_exponent: 2.0,
            interference: true,
        }
    }
}

impl LinkBudget {
    fn rx_dbm(&self, grid: &BeamGrid, beam: usize, position: [f64; 2]) -> f64 {
        let d = grid.distance_to(position).max(1.0);
        self.tx_power_dbm - self.pathloss_intercept_db - 10.0 * self.pathloss_exponent * d.log10() + grid.gain_db(beam, grid.direction_to(position))
    }
}

/// Beam in the union of all grids: (grid, beam).
pub type BeamId = (usize, usize);

/// Best beam over the union of grids by received power; ties go to the lower id.
pub fn best_beam_union(position: [f64; 2], grids: &[BeamGrid], link: &LinkBudget) -> BeamId {
    let mut best = (0, 0);
    let mut best_p = f64::NEG_INFINITY;
    for (g, grid) in grids.iter().enumerate() {
        for b in 0..grid.beam_count {
            let p = link.rx_dbm(grid, b, position);
            if p > best_p + 1e-12 {
                best = (g, b);
                best_p = p;
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mechanism {
    Dci,
    MacCe,
}

impl Mechanism {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Dci => "dci",
            Self::MacCe => "mac_ce",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicationModel {
    pub mechanism: Mechanism,
    pub latency_s: f64,
    pub bler: f64,
    pub application_delay_s: f64,
}

impl IndicationModel {
    pub fn dci() -> Self {
        Self {
            mechanism: Mechanism::Dci,
            latency_s: 0.5e-3,
            bler: 0.01,
            application_delay_s: 0.0,
        }
    }

    pub fn mac_ce() -> Self {
        Self {
            mechanism: Mechanism::MacCe,
            latency_s: 3e-3,
            bler: 0.10,
            application_delay_s: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.latency_s >= 0.0) {
            return Err(Error::invalid("latency_s", "must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.bler) {
            return Err(Error::invalid("bler", "must lie in [0, 1)"));
        }
        if !(self.application_delay_s >= 0.0) {
            return Err(Error::invalid("application_delay_s", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamSample {
    pub sample_index: usize,
    pub position_m: f64,
    /// Applied beam at the end of the sample.
    pub serving: BeamId,
    /// Ideal beam at the end of the sample.
    pub ideal: BeamId,
    pub sinr_db: f64,
    pub se: f64,
    /// SE had the ideal beam been applied at every sub-step.
    pub ideal_se: f64,
}

#[derive(Debug, Clone, Copy)]
enum Pending {
    Success { target: BeamId, effective_at: f64 },
    Retry { at: f64 },
}

fn sinr_of(position: [f64; 2], beam: BeamId, grids: &[BeamGrid], link: &LinkBudget, interferers: &[usize]) -> f64 {
    let signal = db_to_linear(link.rx_dbm(&grids[beam.0], beam.1, position));
    let mut denom = db_to_linear(link.noise_power_dbm);
    if link.interference {
        for (g, grid) in grids.iter().enumerate() {
            if g != beam.0 {
                denom += db_to_linear(link.rx_dbm(grid, interferers[g], position));
            }
        }
    }
    signal / denom
}

/// Tracks the ideal beam through `grids` along `traj`. Sub-steps of
/// [`SUB_STEP_S`] drive the indication state machine; each reported sample
/// averages SE over the sub-steps spanning one `sample_spacing_m`.
pub fn simulate(traj: &Trajectory, grids: &[BeamGrid], model: &IndicationModel, link: &LinkBudget, seed: u64) -> Result<Vec<BeamSample>> {
    traj.validate()?;
    model.validate()?;
    if grids.is_empty() {
        return Err(Error::EmptyInput("beam grids"));
    }
    for g in grids {
        g.validate()?;
    }
    let mut indication_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut schedule_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let sample_time = traj.sample_spacing_m / traj.speed_mps;
    let steps_per_sample = (sample_time / SUB_STEP_S).round().max(1.0) as usize;
    let dt = sample_time / steps_per_sample as f64;
    let eps = dt * 1e-9;

    let mut applied = best_beam_union(traj.position_at_time(0.0), grids, link);
    let mut pending: Option<Pending> = None;
    let mut out = Vec::with_capacity(traj.sample_count);
    for i in 0..traj.sample_count {
        let interferers: Vec<usize> = grids.iter().map(|g| schedule_rng.random_range(0..g.beam_count)).collect();
        let mut se = 0.0;
        let mut ideal_se = 0.0;
        let mut sinr_acc = 0.0;
        let mut ideal = applied;
        for k in 0..steps_per_sample {
            let t = (i * steps_per_sample + k) as f64 * dt;
            let pos = traj.position_at_time(t);
            ideal = best_beam_union(pos, grids, link);
            loop {
                match pending {
                    Some(Pending::Success { target, effective_at }) if effective_at <= t + eps => {
                        applied = target;
                        pending = None;
                    }
                    Some(Pending::Retry { at }) if at <= t + eps => pending = None,
                    Some(_) => break,
                    None if ideal != applied => {
                        let ok = indication_rng.random::<f64>() >= model.bler;
                        pending = Some(if ok {
                            Pending::Success {
                                target: ideal,
                                effective_at: t + model.latency_s + model.application_delay_s,
                            }
                        } else {
                            Pending::Retry {
                                at: t + model.latency_s.max(dt),
                            }
                        });
                    }
                    None => break,
                }
            }
            let s = sinr_of(pos, applied, grids, link, &interferers);
            sinr_acc += s;
            se += spectral_efficiency(s);
            ideal_se += spectral_efficiency(sinr_of(pos, ideal, grids, link, &interferers));
        }
        let n = steps_per_sample as f64;
        out.push(BeamSample {
            sample_index: i,
            position_m: i as f64 * traj.sample_spacing_m,
            serving: applied,
            ideal,
            sinr_db: linear_to_db(sinr_acc / n),
            se: se / n,
            ideal_se: ideal_se / n,
        });
    }
    Ok(out)
}

/// Packaged geometry for [`simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct BeamScenario {
    pub name: String,
    pub trajectory: Trajectory,
    pub grids: Vec<BeamGrid>,
    pub link: LinkBudget,
}

impl BeamScenario {
    /// Highway drive-by: 120 km/h along a straight road past two TRPs set
    /// 8 m back from the lane, sampled every metre for 100 samples.
    pub fn duh() -> Self {
        let sector = 150f64.to_radians();
        let facing = -PI / 2.0;
        Self {
            name: "duh".into(),
            trajectory: Trajectory {
                waypoints: vec![[-50.0, 0.0], [50.0, 0.0]],
                speed_mps: 120.0 / 3.6,
                sample_spacing_m: 1.0,
                sample_count: 100,
            },
            grids: vec![
                BeamGrid::uniform([-5.0, 8.0], 64, facing, sector, 24.0).expect("static preset"),
                BeamGrid::uniform([45.0, 8.0], 64, facing, sector, 24.0).expect("static preset"),
            ],
            link: LinkBudget::default(),
        }
    }

    /// High-speed train: 360 km/h past remote radio heads every 150 m,
    /// 10 m from the track, sampled every 3 m (30 ms) for 100 samples.
    pub fn hst() -> Self {
        let sector = 150f64.to_radians();
        let facing = -PI / 2.0;
        Self {
            name: "hst".into(),
            trajectory: Trajectory {
                waypoints: vec![[-75.0, 0.0], [225.0, 0.0]],
                speed_mps: 100.0,
                sample_spacing_m: 3.0,
                sample_count: 100,
            },
            grids: (0..3)
                .map(|i| BeamGrid::uniform([i as f64 * 150.0 - 75.0 + 37.5, 10.0], 64, facing, sector, 24.0).expect("static preset"))
                .collect(),
            link: LinkBudget::default(),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "duh" => Ok(Self::duh()),
            "hst" => Ok(Self::hst()),
            other => Err(Error::invalid("scenario", format!("unknown preset `{other}`"))),
        }
    }

    pub fn run(&self, model: &IndicationModel, seed: u64) -> Result<Vec<BeamSample>> {
        simulate(&self.trajectory, &self.grids, model, &self.link, seed)
    }
}

pub fn mean_se(samples: &[BeamSample]) -> f64 {
    samples.iter().map(|s| s.se).sum::<f64>() / samples.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> BeamGrid {
        BeamGrid::uniform([0.0, 0.0], 8, 0.0, PI / 2.0, 20.0).unwrap()
    }

    #[test]
    fn boresight_and_ties() {
        let g = grid();
        for b in 0..8 {
            let a = g.beam_centers[b];
            assert_eq!(best_beam([a.cos() * 10.0, a.sin() * 10.0], &g), b);
        }
        let mid = 0.5 * (g.beam_centers[2] + g.beam_centers[3]);
        assert_eq!(best_beam([mid.cos(), mid.sin()], &g), 2);
    }

    #[test]
    fn matches_exhaustive_gain() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let p = [rng.random_range(0.1..10.0), rng.random_range(-10.0..10.0)];
            let az = g.direction_to(p);
            let gains: Vec<f64> = (0..8).map(|b| g.gain_db(b, az)).collect();
            let max = gains.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let expect = gains.iter().position(|&x| x >= max - 1e-12).unwrap();
            assert_eq!(best_beam(p, &g), expect);
        }
    }

    #[test]
    fn gain_shape() {
        let g = grid();
        assert_eq!(g.gain_db(0, g.beam_centers[0]), 20.0);
        assert!((g.gain_db(0, g.beam_centers[0] + g.beamwidth / 2.0) - 17.0).abs() < 1e-12);
        assert_eq!(g.gain_db(0, g.beam_centers[0] + PI), 0.0);
    }

    #[test]
    fn trajectory_walks_polyline() {
        let t = Trajectory {
            waypoints: vec![[0.0, 0.0], [3.0, 0.0], [3.0, 4.0]],
            speed_mps: 1.0,
            sample_spacing_m: 1.0,
            sample_count: 7,
        };
        assert_eq!(t.position_at_distance(1.5), [1.5, 0.0]);
        assert_eq!(t.position_at_distance(5.0), [3.0, 2.0]);
        assert_eq!(t.position_at_distance(50.0), [3.0, 4.0]);
    }

    #[test]
    fn instant_indication_is_ideal() {
        let sc = BeamScenario::duh();
        let m = IndicationModel {
            latency_s: 0.0,
            bler: 0.0,
            ..IndicationModel::dci()
        };
        for s in sc.run(&m, 3).unwrap() {
            assert_eq!(s.serving, s.ideal);
            assert_eq!(s.se, s.ideal_se);
        }
    }

    #[test]
    fn frozen_beam_decays() {
        let sc = BeamScenario::duh();
        let m = IndicationModel {
            latency_s: 1e6,
            bler: 0.0,
            ..IndicationModel::dci()
        };
        let out = sc.run(&m, 3).unwrap();
        assert!(out.iter().all(|s| s.serving == out[0].serving));
        assert!(mean_se(&out) < out.iter().map(|s| s.ideal_se).sum::<f64>() / out.len() as f64);
    }

    #[test]
    fn longer_latency_costs_se() {
        let sc = BeamScenario::duh();
        let run = |latency_s: f64| -> f64 {
            let m = IndicationModel {
                latency_s,
                bler: 0.0,
                ..IndicationModel::dci()
            };
            (0..5).map(|seed| mean_se(&sc.run(&m, seed).unwrap())).sum::<f64>()
        };
        let (fast, slow, frozen) = (run(0.5e-3), run(3e-3), run(1e6));
        assert!(fast > slow && slow > frozen, "{fast} {slow} {frozen}");
    }

    #[test]
    fn lag_bounded_by_one_sample() {
        let sc = BeamScenario::duh();
        let t = &sc.trajectory;
        let sample_time = t.sample_spacing_m / t.speed_mps;
        let sps = (sample_time / SUB_STEP_S).round() as usize;
        let dt = sample_time / sps as f64;
        for latency_s in [0.5e-3, 10e-3] {
            let m = IndicationModel {
                latency_s,
                bler: 0.0,
                ..IndicationModel::dci()
            };
            for s in sc.run(&m, 11).unwrap().iter().skip(1) {
                let last = s.sample_index * sps + sps - 1;
                let window: Vec<BeamId> = (last - sps..=last)
                    .map(|k| best_beam_union(t.position_at_time(k as f64 * dt), &sc.grids, &sc.link))
                    .collect();
                assert!(window.contains(&s.serving), "sample {}", s.sample_index);
            }
        }
    }

    #[test]
    fn se_non_increasing_in_bler() {
        let sc = BeamScenario::duh();
        let run = |bler: f64| -> f64 {
            let m = IndicationModel { bler, ..IndicationModel::mac_ce() };
            (0..10).map(|seed| mean_se(&sc.run(&m, seed).unwrap())).sum::<f64>()
        };
        let v: Vec<f64> = [0.0, 0.1, 0.3, 0.6].iter().map(|&b| run(b)).collect();
        assert!(v.windows(2).all(|w| w[0] >= w[1]), "{v:?}");
    }

    #[test]
    fn deterministic_under_seed() {
        let sc = BeamScenario::hst();
        assert_eq!(sc.run(&IndicationModel::mac_ce(), 9).unwrap(), sc.run(&IndicationModel::mac_ce(), 9).unwrap());
    }

    #[test]
    fn invalid_models() {
        let bad = IndicationModel { bler: 1.0, ..IndicationModel::dci() };
        assert!(bad.validate().is_err());
        assert!(BeamScenario::preset("nope").is_err());
    }
}
