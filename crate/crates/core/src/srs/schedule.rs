use super::estimation::{despread, receive};
use super::sequence::SrsSequence;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sounding resource configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SrsResourceMap {
    pub ports: usize,
    /// Transmit chains, i.e. ports sounded per symbol.
    pub tx_chains: usize,
    pub symbols: usize,
    pub hop_count: usize,
    /// Number of UEs sharing each hop bandwidth on disjoint pieces.
    pub partial_factor: usize,
}

impl SrsResourceMap {
    /// Antenna switching with the minimum symbol count.
    pub fn switching(tx_chains: usize, ports: usize) -> Self {
        Self {
            ports,
            tx_chains,
            symbols: ports.div_ceil(tx_chains.max(1)),
            hop_count: 1,
            partial_factor: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ports == 0 || self.tx_chains == 0 || self.symbols == 0 || self.hop_count == 0 || self.partial_factor == 0 {
            return Err(Error::invalid("srs resource", "all counts must be positive"));
        }
        if self.tx_chains * self.symbols < self.ports {
            return Err(Error::invalid(
                "symbols",
                format!("{} chains × {} symbols cannot sound {} ports", self.tx_chains, self.symbols, self.ports),
            ));
        }
        Ok(())
    }

    /// Number of band pieces the schedule works with.
    pub fn pieces(&self) -> usize {
        self.hop_count * self.partial_factor
    }

    /// UEs that can sound concurrently within one hop bandwidth.
    pub fn ues_per_bandwidth(&self) -> usize {
        self.partial_factor
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SrsAssignment {
    pub ue: usize,
    /// Sounding occasion, one per (hop, partial repetition).
    pub occasion: usize,
    pub hop: usize,
    pub symbol: usize,
    pub ports: Vec<usize>,
    /// Index of the band piece, out of `hop_count × partial_factor`.
    pub piece: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrsSchedule {
    pub config: SrsResourceMap,
    pub assignments: Vec<SrsAssignment>,
}

impl SrsSchedule {
    pub fn for_ue(&self, ue: usize) -> impl Iterator<Item = &SrsAssignment> {
        self.assignments.iter().filter(move |a| a.ue == ue)
    }

    /// Subcarrier range of `piece` when the band has `subcarriers` entries.
    pub fn piece_range(&self, piece: usize, subcarriers: usize) -> std::ops::Range<usize> {
        let n = self.config.pieces();
        piece * subcarriers / n..(piece + 1) * subcarriers / n
    }
}

/// Antenna-switching, frequency-hopping and partial-band schedule for the
/// `partial_factor` UEs sharing the band.
pub fn resource_schedule(cfg: SrsResourceMap) -> Result<SrsSchedule> {
    cfg.validate()?;
    let k = cfg.partial_factor;
    let mut assignments = Vec::new();
    for ue in 0..k {
        for occasion in 0..cfg.hop_count * k {
            let hop = occasion / k;
            let rep = occasion % k;
            let piece = hop * k + (ue + rep) % k;
            for symbol in 0..cfg.symbols {
                let lo = symbol * cfg.tx_chains;
                let hi = ((symbol + 1) * cfg.tx_chains).min(cfg.ports);
                if lo >= hi {
                    continue;
                }
                assignments.push(SrsAssignment {
                    ue,
                    occasion,
                    hop,
                    symbol,
                    ports: (lo..hi).collect(),
                    piece,
                });
            }
        }
    }
    Ok(SrsSchedule { config: cfg, assignments })
}

/// Sounds `channel` (ports × subcarriers) along the UE's assignments without
/// noise and stitches the despread pieces back together.
pub fn assemble_sounded_channel(schedule: &SrsSchedule, ue: usize, channel: &CMatrix, sequence: &SrsSequence) -> Result<CMatrix> {
    let (ports, m) = channel.shape();
    if ports != schedule.config.ports {
        return Err(Error::dims("sounded ports", schedule.config.ports, ports));
    }
    if sequence.values.len() != m {
        return Err(Error::dims("sequence length", m, sequence.values.len()));
    }
    let mut out = CMatrix::zeros(ports, m);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for a in schedule.for_ue(ue) {
        let range = schedule.piece_range(a.piece, m);
        let seq = SrsSequence {
            root: sequence.root,
            length: range.len(),
            values: sequence.values[range.clone()].to_vec(),
        };
        for &p in &a.ports {
            let h: Vec<C64> = range.clone().map(|c| channel[(p, c)]).collect();
            let obs = receive(&h, &seq, None, 0.0, a.occasion, &mut rng)?;
            for (c, v) in range.clone().zip(despread(&obs, &seq)?) {
                out[(p, c)] = v;
            }
        }
    }
    Ok(out)
}
