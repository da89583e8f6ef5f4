//! Python bindings for the `mimosim` simulation library.

use mimosim::channel::{ArrayConfig, BasisPair, ChannelSnapshot};
use mimosim::cjt::BurstRecord;
use mimosim::experiment::{self, ExperimentError};
use mimosim::{CMatrix, Error};
use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn value_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn experiment_err(e: ExperimentError) -> PyErr {
    match e {
        ExperimentError::Io { .. } => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix(rows: &[Vec<Complex64>]) -> PyResult<CMatrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("expected a non-empty rectangular matrix"));
    }
    Ok(CMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

/// Zadoff-Chu root sequence of odd prime `length`.
#[pyfunction]
fn gen_sequence(root: usize, length: usize) -> PyResult<Vec<Complex64>> {
    Ok(mimosim::srs::gen_sequence(root, length).map_err(value_err)?.values)
}

/// Fraction of channel energy in the `k` strongest DFT-basis coefficients.
///
/// `h` is a ports x frequency-units matrix given as a list of rows.
#[pyfunction]
#[pyo3(signature = (h, k, ports_vertical, ports_horizontal, polarizations=2))]
fn power_ratio(h: Vec<Vec<Complex64>>, k: usize, ports_vertical: usize, ports_horizontal: usize, polarizations: usize) -> PyResult<f64> {
    let m = matrix(&h)?;
    let array = ArrayConfig::uniform(ports_vertical, ports_horizontal, polarizations).map_err(value_err)?;
    let basis = BasisPair::dft(&array, m.ncols());
    let snap = ChannelSnapshot { matrix: m, time_s: 0.0 };
    mimosim::codebook::power_ratio(&snap, &basis, k).map_err(value_err)
}

/// `min(log2(1 + sinr), 7.4)`.
#[pyfunction]
fn spectral_efficiency(sinr: f64) -> f64 {
    mimosim::cjt::spectral_efficiency(sinr)
}

/// Total bits over total delivery time.
#[pyfunction]
fn upt(bits: Vec<f64>, durations_s: Vec<f64>) -> PyResult<f64> {
    if bits.len() != durations_s.len() {
        return Err(PyValueError::new_err("bits and durations_s differ in length"));
    }
    let bursts = bits
        .iter()
        .zip(&durations_s)
        .map(|(&b, &d)| BurstRecord::new(b, d))
        .collect::<mimosim::Result<Vec<_>>>()
        .map_err(value_err)?;
    mimosim::cjt::upt(&bursts).map_err(value_err)
}

/// Linearly interpolated empirical quantile.
#[pyfunction]
fn quantile(samples: Vec<f64>, q: f64) -> PyResult<f64> {
    mimosim::stats::quantile(&samples, q).map_err(value_err)
}

/// Seed used for drop `index` of a run with master seed `master`.
#[pyfunction]
fn drop_seed(master: u64, index: u64) -> u64 {
    experiment::drop_seed(master, index)
}

/// Runs an experiment from TOML text and returns the CSV output.
#[pyfunction]
#[pyo3(signature = (config, seed=None, drops=None))]
fn run_experiment(py: Python<'_>, config: &str, seed: Option<u64>, drops: Option<usize>) -> PyResult<String> {
    let mut cfg = experiment::parse_config(config).map_err(experiment_err)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(d) = drops {
        cfg.drops = d;
    }
    py.detach(|| experiment::run(&cfg).and_then(|t| t.to_csv_string())).map_err(experiment_err)
}

#[pymodule]
fn _mimosim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", experiment::TOOL_VERSION)?;
    m.add_function(wrap_pyfunction!(gen_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(power_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_efficiency, m)?)?;
    m.add_function(wrap_pyfunction!(upt, m)?)?;
    m.add_function(wrap_pyfunction!(quantile, m)?)?;
    m.add_function(wrap_pyfunction!(drop_seed, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
