use super::estimation::{accumulate_pdp, despread, estimate_channel, receive, select_taps, to_delay_domain, DelayProfile, TapSelection};
use super::sequence::{apply_cs, gen_sequence, CsMode, CsSchedule, SrsSequence};
use crate::error::{Error, Result};
use crate::linalg::{complex_normal, db_to_linear, unit_root, C64};
use rand::seq::index::sample;
use rand::Rng;
use std::f64::consts::TAU;

/// One target UE sounding against co-channel interferers using other roots.
#[derive(Debug, Clone, PartialEq)]
pub struct SrsScenario {
    pub length: usize,
    pub target_root: usize,
    pub interferer_roots: Vec<usize>,
    pub transmissions: usize,
    pub target_paths: usize,
    pub interferer_paths: usize,
    /// Path delays are drawn on integer taps in `0..max_delay_taps`.
    pub max_delay_taps: usize,
    /// Target and interferer powers relative to unit reference power.
    pub snr_db: f64,
    pub inr_db: f64,
    /// Noise variance; the default of 1 makes the dB fields true SNR and INR.
    pub noise_power: f64,
    pub selection: TapSelection,
    /// Per-path Doppler is drawn from `±max_doppler_hz`; zero keeps the
    /// channel static over the transmissions.
    pub max_doppler_hz: f64,
    pub srs_period_s: f64,
}

impl Default for SrsScenario {
    fn default() -> Self {
        Self {
            length: 139,
            target_root: 1,
            interferer_roots: vec![2],
            transmissions: 256,
            target_paths: 3,
            interferer_paths: 3,
            max_delay_taps: 16,
            snr_db: 10.0,
            inr_db: 10.0,
            noise_power: 1.0,
            selection: TapSelection::default(),
            max_doppler_hz: 0.0,
            srs_period_s: 5e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrsDropResult {
    pub mse: f64,
    pub tap_err_count: usize,
    pub selected: Vec<usize>,
    pub true_taps: Vec<usize>,
    pub profile: DelayProfile,
}

struct TappedChannel {
    taps: Vec<usize>,
    gains: Vec<C64>,
    doppler_hz: Vec<f64>,
}

impl TappedChannel {
    fn draw<R: Rng + ?Sized>(rng: &mut R, paths: usize, max_taps: usize, power: f64, max_doppler: f64) -> Self {
        let mut taps = sample(rng, max_taps, paths.min(max_taps)).into_vec();
        taps.sort_unstable();
        let gains = taps.iter().map(|_| complex_normal(rng, power / paths as f64)).collect();
        let doppler_hz = taps
            .iter()
            .map(|_| if max_doppler > 0.0 { rng.random_range(-max_doppler..=max_doppler) } else { 0.0 })
            .collect();
        Self { taps, gains, doppler_hz }
    }

    fn frequency(&self, m: usize, t: f64) -> Vec<C64> {
        (0..m)
            .map(|f| {
                self.taps
                    .iter()
                    .zip(&self.gains)
                    .zip(&self.doppler_hz)
                    .map(|((&tap, &g), &v)| g * C64::from_polar(1.0, TAU * v * t) * unit_root(-((f * tap) as i64), m))
                    .sum()
            })
            .collect()
    }
}

impl SrsScenario {
    pub fn validate(&self) -> Result<()> {
        if self.transmissions == 0 {
            return Err(Error::invalid("transmissions", "must be positive"));
        }
        if self.max_delay_taps == 0 || self.max_delay_taps > self.length {
            return Err(Error::invalid("max_delay_taps", format!("must lie in 1..={}", self.length)));
        }
        if self.target_paths == 0 || self.target_paths > self.max_delay_taps {
            return Err(Error::invalid("target_paths", "must lie in 1..=max_delay_taps"));
        }
        if self.interferer_paths > self.max_delay_taps {
            return Err(Error::invalid("interferer_paths", "must not exceed max_delay_taps"));
        }
        if self.noise_power < 0.0 || !self.noise_power.is_finite() {
            return Err(Error::invalid("noise_power", "must be finite and non-negative"));
        }
        if self.interferer_roots.iter().any(|&r| r == self.target_root) {
            return Err(Error::invalid("interferer_roots", "must differ from the target root"));
        }
        Ok(())
    }
}

fn cs_for(mode: CsMode, rng: &mut (impl Rng + ?Sized), n: usize) -> CsSchedule {
    CsSchedule::draw(rng, mode, n)
}

fn sounding_run<R: Rng + ?Sized>(
    scenario: &SrsScenario,
    mode: CsMode,
    target: Option<&TappedChannel>,
    interferers: &[TappedChannel],
    noise_power: f64,
    rng: &mut R,
) -> Result<(Vec<Vec<C64>>, Vec<Vec<C64>>)> {
    let m = scenario.length;
    let base = gen_sequence(scenario.target_root, m)?;
    let bases: Vec<SrsSequence> = scenario.interferer_roots.iter().map(|&q| gen_sequence(q, m)).collect::<Result<_>>()?;
    let n = scenario.transmissions;
    let target_cs = cs_for(mode, rng, n);
    let interferer_cs: Vec<CsSchedule> = bases.iter().map(|_| cs_for(mode, rng, n)).collect();
    let zero = vec![C64::new(0.0, 0.0); m];
    let mut despread_all = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for idx in 0..n {
        let t = idx as f64 * scenario.srs_period_s;
        let h = target.map_or_else(|| zero.clone(), |c| c.frequency(m, t));
        let r = apply_cs(&base, target_cs.values[idx]);
        let seqs: Vec<SrsSequence> = bases.iter().zip(&interferer_cs).map(|(b, cs)| apply_cs(b, cs.values[idx])).collect();
        let hs: Vec<Vec<C64>> = interferers.iter().map(|c| c.frequency(m, t)).collect();
        let first = hs.first().zip(seqs.first()).map(|(h, s)| (h.as_slice(), s));
        let mut obs = receive(&h, &r, first, noise_power, idx, rng)?;
        for (hi, si) in hs.iter().zip(&seqs).skip(1) {
            for ((y, s), hv) in obs.y.iter_mut().zip(&si.values).zip(hi) {
                *y += s * hv;
            }
        }
        despread_all.push(despread(&obs, &r)?);
        truth.push(h);
    }
    Ok((despread_all, truth))
}

fn draw_interferers<R: Rng + ?Sized>(scenario: &SrsScenario, rng: &mut R) -> Vec<TappedChannel> {
    let power = db_to_linear(scenario.inr_db);
    scenario
        .interferer_roots
        .iter()
        .filter(|_| scenario.interferer_paths > 0)
        .map(|_| TappedChannel::draw(rng, scenario.interferer_paths, scenario.max_delay_taps, power, scenario.max_doppler_hz))
        .collect()
}

/// Runs one drop: draws target and interferer channels, sounds them
/// `transmissions` times, selects taps and estimates the target channel.
pub fn run_srs_drop<R: Rng + ?Sized>(scenario: &SrsScenario, mode: CsMode, rng: &mut R) -> Result<SrsDropResult> {
    scenario.validate()?;
    let power = db_to_linear(scenario.snr_db);
    let target = TappedChannel::draw(rng, scenario.target_paths, scenario.max_delay_taps, power, scenario.max_doppler_hz);
    let interferers = draw_interferers(scenario, rng);
    let (ys, truth) = sounding_run(scenario, mode, Some(&target), &interferers, scenario.noise_power, rng)?;
    let delay: Vec<Vec<C64>> = ys.iter().map(|y| to_delay_domain(y)).collect();
    let profile = accumulate_pdp(&delay)?;
    let selected = select_taps(&profile, scenario.selection);
    let est = estimate_channel(&ys, &selected, Some(&truth))?;
    let tap_err_count = tap_error_count(&selected, &target.taps);
    Ok(SrsDropResult {
        mse: est.mse.unwrap_or(f64::NAN),
        tap_err_count,
        selected,
        true_taps: target.taps,
        profile,
    })
}

/// PDP of the despread interference alone: no target signal and no noise.
pub fn interference_only_pdp<R: Rng + ?Sized>(scenario: &SrsScenario, mode: CsMode, rng: &mut R) -> Result<DelayProfile> {
    scenario.validate()?;
    let interferers = draw_interferers(scenario, rng);
    let (ys, _) = sounding_run(scenario, mode, None, &interferers, 0.0, rng)?;
    let delay: Vec<Vec<C64>> = ys.iter().map(|y| to_delay_domain(y)).collect();
    accumulate_pdp(&delay)
}

/// Size of the symmetric difference between two tap sets.
pub fn tap_error_count(selected: &[usize], truth: &[usize]) -> usize {
    let missed = truth.iter().filter(|t| !selected.contains(t)).count();
    let extra = selected.iter().filter(|s| !truth.contains(s)).count();
    missed + extra
}
