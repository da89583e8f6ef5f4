use crate::error::{Error, Result};
use crate::linalg::{unit_root, C64};
use std::fmt::Write as _;

/// One reported combining coefficient at `(row, col)` of the selected-basis grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficient {
    pub row: usize,
    pub col: usize,
    pub value: C64,
}

/// Coefficient quantiser applied to a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quantizer {
    #[default]
    None,
    /// 8 amplitude levels in −1.5 dB steps below the strongest coefficient and 16-PSK phase.
    Amp8Psk16,
}

impl Quantizer {
    pub fn name(self) -> &'static str {
        match self {
            Quantizer::None => "none",
            Quantizer::Amp8Psk16 => "amp8-psk16",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Quantizer::None),
            "amp8-psk16" => Some(Quantizer::Amp8Psk16),
            _ => None,
        }
    }
}

/// Array and grid dimensions a report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportLayout {
    pub ports_vertical: usize,
    pub ports_horizontal: usize,
    pub polarizations: usize,
    pub units: usize,
    /// Number of time slots covered, 1 for space-frequency reports.
    pub slots: usize,
}

impl ReportLayout {
    pub fn ports(&self) -> usize {
        self.ports_vertical * self.ports_horizontal * self.polarizations
    }
}

/// Report for one (TRP, layer) pair.
///
/// Coefficient rows index `spatial_indices`; columns index
/// `frequency_indices`, or `freq · T + time` when `time_indices` is non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBlock {
    pub trp: usize,
    pub layer: usize,
    pub spatial_indices: Vec<usize>,
    pub frequency_indices: Vec<usize>,
    pub time_indices: Vec<usize>,
    pub coefficients: Vec<Coefficient>,
}

/// Quantised CSI feedback.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderReport {
    pub layout: ReportLayout,
    pub quantizer: Quantizer,
    pub blocks: Vec<ReportBlock>,
}

const AMP_LEVELS: i64 = 8;
const AMP_STEP_DB: f64 = -1.5;
const PHASE_LEVELS: usize = 16;

/// Value of the amplitude/phase code `(amp_index, phase_index)`.
pub fn dequantize_value(amp_index: i64, phase_index: i64) -> C64 {
    let amp = 10f64.powf(AMP_STEP_DB * amp_index as f64 / 20.0);
    unit_root(phase_index, PHASE_LEVELS) * amp
}

fn snap(value: C64) -> C64 {
    let mag = value.norm();
    if mag == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let amp_index = ((20.0 * mag.log10()) / AMP_STEP_DB).round().clamp(0.0, (AMP_LEVELS - 1) as f64) as i64;
    let phase_index = (value.arg() * PHASE_LEVELS as f64 / (2.0 * std::f64::consts::PI)).round() as i64;
    dequantize_value(amp_index, phase_index)
}

/// Applies `quantizer` to every coefficient.
///
/// Coefficients of a layer are first normalised by that layer's strongest
/// coefficient (over all TRPs, ties to the first in report order). A report
/// already quantised with the same quantiser is only re-snapped, so the
/// operation is idempotent.
pub fn quantize_report(report: &PrecoderReport, quantizer: Quantizer) -> PrecoderReport {
    let mut out = report.clone();
    out.quantizer = quantizer;
    if quantizer == Quantizer::None {
        return out;
    }
    let already = report.quantizer == quantizer;
    let layers: Vec<usize> = {
        let mut l: Vec<usize> = report.blocks.iter().map(|b| b.layer).collect();
        l.sort_unstable();
        l.dedup();
        l
    };
    for layer in layers {
        let mut reference = C64::new(1.0, 0.0);
        if !already {
            let mut best = 0.0;
            for b in report.blocks.iter().filter(|b| b.layer == layer) {
                for c in &b.coefficients {
                    if c.value.norm() > best {
                        best = c.value.norm();
                        reference = c.value;
                    }
                }
            }
            if best == 0.0 {
                reference = C64::new(1.0, 0.0);
            }
        }
        for b in out.blocks.iter_mut().filter(|b| b.layer == layer) {
            for c in &mut b.coefficients {
                c.value = snap(if already { c.value } else { c.value / reference });
            }
        }
    }
    out
}

const MAGIC: &str = "mimosim-report 1";

fn join(v: &[usize]) -> String {
    v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

impl PrecoderReport {
    /// Line-oriented text form. Coefficient lines are `trp row col re im`.
    /// Floats are written in shortest round-trip form, so parsing is bit-exact.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let l = &self.layout;
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(s, "quantizer {}", self.quantizer.name());
        let _ = writeln!(
            s,
            "layout {} {} {} {} {}",
            l.ports_vertical, l.ports_horizontal, l.polarizations, l.units, l.slots
        );
        for b in &self.blocks {
            let _ = writeln!(s, "block {} {}", b.trp, b.layer);
            let _ = writeln!(s, "spatial {}", join(&b.spatial_indices));
            let _ = writeln!(s, "frequency {}", join(&b.frequency_indices));
            let _ = writeln!(s, "time {}", join(&b.time_indices));
            for c in &b.coefficients {
                let _ = writeln!(s, "{} {} {} {} {}", b.trp, c.row, c.col, c.value.re, c.value.im);
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, reason: &str| Error::ReportParse {
            line,
            reason: reason.to_string(),
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, l)) if l == MAGIC => {}
            Some((n, _)) => return Err(err(n, "missing header")),
            None => return Err(err(0, "empty report")),
        }
        let (n, q) = lines.next().ok_or_else(|| err(0, "missing quantizer"))?;
        let quantizer = q
            .strip_prefix("quantizer ")
            .and_then(Quantizer::parse)
            .ok_or_else(|| err(n, "bad quantizer line"))?;
        let (n, lay) = lines.next().ok_or_else(|| err(0, "missing layout"))?;
        let dims: Vec<usize> = lay
            .strip_prefix("layout ")
            .ok_or_else(|| err(n, "bad layout line"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(n, "bad layout integer")))
            .collect::<Result<_>>()?;
        if dims.len() != 5 {
            return Err(err(n, "layout needs 5 integers"));
        }
        let layout = ReportLayout {
            ports_vertical: dims[0],
            ports_horizontal: dims[1],
            polarizations: dims[2],
            units: dims[3],
            slots: dims[4],
        };
        let mut blocks: Vec<ReportBlock> = Vec::new();
        let parse_list = |n: usize, rest: &str| -> Result<Vec<usize>> {
            rest.split_whitespace()
                .map(|t| t.parse().map_err(|_| err(n, "bad index")))
                .collect()
        };
        for (n, line) in lines {
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "block" => {
                    let v = parse_list(n, rest)?;
                    if v.len() != 2 {
                        return Err(err(n, "block needs trp and layer"));
                    }
                    blocks.push(ReportBlock {
                        trp: v[0],
                        layer: v[1],
                        spatial_indices: Vec::new(),
                        frequency_indices: Vec::new(),
                        time_indices: Vec::new(),
                        coefficients: Vec::new(),
                    });
                }
                "spatial" | "frequency" | "time" => {
                    let b = blocks.last_mut().ok_or_else(|| err(n, "indices before block"))?;
                    let v = parse_list(n, rest)?;
                    match key {
                        "spatial" => b.spatial_indices = v,
                        "frequency" => b.frequency_indices = v,
                        _ => b.time_indices = v,
                    }
                }
                _ => {
                    let b = blocks.last_mut().ok_or_else(|| err(n, "coefficient before block"))?;
                    let t: Vec<&str> = line.split_whitespace().collect();
                    if t.len() != 5 {
                        return Err(err(n, "coefficient line needs 5 fields"));
                    }
                    let trp: usize = t[0].parse().map_err(|_| err(n, "bad trp"))?;
                    if trp != b.trp {
                        return Err(err(n, "coefficient trp does not match block"));
                    }
                    let row = t[1].parse().map_err(|_| err(n, "bad row"))?;
                    let col = t[2].parse().map_err(|_| err(n, "bad col"))?;
                    let re: f64 = t[3].parse().map_err(|_| err(n, "bad real part"))?;
                    let im: f64 = t[4].parse().map_err(|_| err(n, "bad imaginary part"))?;
                    b.coefficients.push(Coefficient {
                        row,
                        col,
                        value: C64::new(re, im),
                    });
                }
            }
        }
        Ok(Self {
            layout,
            quantizer,
            blocks,
        })
    }

    /// Number of nonzero coefficients reported for `trp`.
    pub fn coefficient_count(&self, trp: usize) -> usize {
        self.blocks
            .iter()
            .filter(|b| b.trp == trp)
            .map(|b| b.coefficients.iter().filter(|c| c.value != C64::new(0.0, 0.0)).count())
            .sum()
    }
}
