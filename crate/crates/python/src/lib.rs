//! Python bindings for the `mccdma` link-level simulator.

use mccdma::channel::{estimate_spatial_correlation, load_profile, Side, SpatialConfig};
use mccdma::coding::{TurboCode, TurboConfig};
use mccdma::modem::Constellation;
use mccdma::sim::{self, ErrorStats, ResultRow};
use mccdma::spreading::SpreadingMatrix;
use mccdma::stbc::alamouti_encode;
use mccdma::Complex64;
use pyo3::exceptions::{PyTypeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyFloat, PyInt, PyList, PyString};

fn to_py(e: mccdma::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_toml_value(value: &Bound<'_, PyAny>) -> PyResult<toml::Value> {
    if value.is_instance_of::<PyBool>() {
        Ok(toml::Value::Boolean(value.extract()?))
    } else if value.is_instance_of::<PyInt>() {
        Ok(toml::Value::Integer(value.extract()?))
    } else if value.is_instance_of::<PyFloat>() {
        Ok(toml::Value::Float(value.extract()?))
    } else if value.is_instance_of::<PyString>() {
        Ok(toml::Value::String(value.extract()?))
    } else if let Ok(list) = value.cast::<PyList>() {
        list.iter()
            .map(|v| to_toml_value(&v))
            .collect::<PyResult<Vec<_>>>()
            .map(toml::Value::Array)
    } else {
        Err(PyTypeError::new_err(format!(
            "unsupported config value type {}",
            value.get_type().name()?
        )))
    }
}

/// Simulation configuration; keyword arguments override the defaults.
#[pyclass(name = "SimConfig", module = "mccdma_py", from_py_object)]
#[derive(Clone)]
struct PySimConfig {
    inner: sim::SimConfig,
}

impl PySimConfig {
    fn with_overrides(
        base: &sim::SimConfig,
        overrides: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<Self> {
        let mut table: toml::Table =
            toml::from_str(&base.to_toml()).map_err(|e| PyValueError::new_err(e.to_string()))?;
        if let Some(kwargs) = overrides {
            for (key, value) in kwargs.iter() {
                let key: String = key.extract()?;
                let mut value = to_toml_value(&value)?;
                if key == "ebn0_db" || key == "ebn0" {
                    value = float_array(value);
                }
                table.insert(key, value);
            }
        }
        let inner = sim::SimConfig::from_toml(&table.to_string()).map_err(to_py)?;
        Ok(Self { inner })
    }
}

fn float_array(value: toml::Value) -> toml::Value {
    match value {
        toml::Value::Array(items) => {
            toml::Value::Array(items.into_iter().map(float_array).collect())
        }
        toml::Value::Integer(i) => toml::Value::Float(i as f64),
        other => other,
    }
}

#[pymethods]
impl PySimConfig {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        Self::with_overrides(&sim::SimConfig::default(), kwargs)
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let inner = sim::SimConfig::from_toml(text).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = sim::SimConfig::load(path).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Copy of this configuration with some keys replaced.
    #[pyo3(signature = (**kwargs))]
    fn replace(&self, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        Self::with_overrides(&self.inner, kwargs)
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(to_py)
    }

    fn noise_variance(&self, ebn0_db: f64) -> f64 {
        self.inner.noise_variance_for(ebn0_db)
    }

    #[getter]
    fn nt(&self) -> usize {
        self.inner.nt
    }

    #[getter]
    fn nr(&self) -> usize {
        self.inner.nr
    }

    #[getter]
    fn users(&self) -> usize {
        self.inner.users
    }

    #[getter]
    fn lc(&self) -> usize {
        self.inner.lc
    }

    #[getter]
    fn detector(&self) -> String {
        self.inner.detector.to_string()
    }

    #[getter]
    fn chip_mapping(&self) -> String {
        self.inner.chip_mapping.to_string()
    }

    #[getter]
    fn modulation(&self) -> String {
        self.inner.modulation.to_string()
    }

    #[getter]
    fn coding(&self) -> String {
        self.inner.coding.to_string()
    }

    #[getter]
    fn ebn0_db(&self) -> Vec<f64> {
        self.inner.ebn0_db.clone()
    }

    #[getter]
    fn master_seed(&self) -> u64 {
        self.inner.master_seed
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "SimConfig({} {}x{} {} Lc={} users={} {} {})",
            c.detector, c.nt, c.nr, c.chip_mapping, c.lc, c.users, c.modulation, c.coding
        )
    }
}

fn stats_dict<'py>(py: Python<'py>, ebn0_db: f64, s: &ErrorStats) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("ebn0_db", ebn0_db)?;
    d.set_item("bits", s.bits)?;
    d.set_item("bit_errors", s.bit_errors)?;
    d.set_item("ber", s.ber())?;
    d.set_item("frames", s.frames)?;
    d.set_item("frame_errors", s.frame_errors)?;
    d.set_item("fer", s.fer())?;
    d.set_item("user_frame_errors", s.user_frame_errors.clone())?;
    d.set_item("ber_interval", s.ber_interval())?;
    Ok(d)
}

fn row_dict<'py>(py: Python<'py>, r: &ResultRow) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("ebn0_db", r.ebn0_db)?;
    d.set_item("detector", &r.detector)?;
    d.set_item("chip_mapping", &r.chip_mapping)?;
    d.set_item("nt", r.nt)?;
    d.set_item("nr", r.nr)?;
    d.set_item("users", r.users)?;
    d.set_item("lc", r.lc)?;
    d.set_item("modulation", &r.modulation)?;
    d.set_item("coding", &r.coding)?;
    d.set_item("bits", r.bits)?;
    d.set_item("bit_errors", r.bit_errors)?;
    d.set_item("ber", r.ber)?;
    d.set_item("frames", r.frames)?;
    d.set_item("frame_errors", r.frame_errors)?;
    d.set_item("fer", r.fer)?;
    d.set_item("master_seed", r.master_seed)?;
    Ok(d)
}

/// Simulates one Eb/N0 point and returns its error counts.
#[pyfunction]
#[pyo3(signature = (config, ebn0_db, workers = 1))]
fn run_point<'py>(
    py: Python<'py>,
    config: &PySimConfig,
    ebn0_db: f64,
    workers: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config.inner.clone();
    let stats = py
        .detach(|| sim::run_point(&cfg, ebn0_db, workers))
        .map_err(to_py)?;
    stats_dict(py, ebn0_db, &stats)
}

/// Runs every Eb/N0 point of the configuration; one dict per CSV row.
#[pyfunction]
#[pyo3(signature = (config, workers = 1))]
fn sweep<'py>(
    py: Python<'py>,
    config: &PySimConfig,
    workers: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = config.inner.clone();
    let points = py.detach(|| sim::sweep(&cfg, workers)).map_err(to_py)?;
    sim::rows(&cfg, &points)
        .iter()
        .map(|r| row_dict(py, r))
        .collect()
}

/// Sweep results as CSV text.
#[pyfunction]
#[pyo3(signature = (config, workers = 1))]
fn sweep_csv(py: Python<'_>, config: &PySimConfig, workers: usize) -> PyResult<String> {
    let cfg = config.inner.clone();
    let points = py.detach(|| sim::sweep(&cfg, workers)).map_err(to_py)?;
    sim::report::to_csv_string(&sim::rows(&cfg, &points)).map_err(to_py)
}

#[pyfunction]
fn info(config: &PySimConfig) -> PyResult<String> {
    sim::info(&config.inner).map_err(to_py)
}

/// Noise variance per complex dimension for a given Eb/N0.
#[pyfunction]
#[pyo3(signature = (ebn0_db, bits_per_symbol, rate = 1.0))]
fn noise_variance(ebn0_db: f64, bits_per_symbol: usize, rate: f64) -> f64 {
    sim::noise_variance_for(ebn0_db, bits_per_symbol, rate)
}

/// Rows are chips, columns are users.
#[pyfunction]
fn walsh_hadamard(lc: usize, users: usize) -> PyResult<Vec<Vec<f64>>> {
    let c = SpreadingMatrix::walsh_hadamard(lc, users).map_err(to_py)?;
    Ok((0..lc)
        .map(|chip| (0..users).map(|u| c.entry(chip, u)).collect())
        .collect())
}

#[pyfunction]
fn spread(symbols: Vec<Complex64>, lc: usize) -> PyResult<Vec<Complex64>> {
    let c = SpreadingMatrix::walsh_hadamard(lc, symbols.len()).map_err(to_py)?;
    c.spread(&symbols).map_err(to_py)
}

#[pyfunction]
fn despread(chips: Vec<Complex64>, users: usize) -> PyResult<Vec<Complex64>> {
    let c = SpreadingMatrix::walsh_hadamard(chips.len(), users).map_err(to_py)?;
    let mut out = vec![Complex64::default(); users];
    c.despread_all(&chips, &mut out).map_err(to_py)?;
    Ok(out)
}

/// Returns `((ant1_slot1, ant1_slot2), (ant2_slot1, ant2_slot2))`.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn alamouti(
    s1: Vec<Complex64>,
    s2: Vec<Complex64>,
) -> PyResult<(
    (Vec<Complex64>, Vec<Complex64>),
    (Vec<Complex64>, Vec<Complex64>),
)> {
    let [[a0, a1], [b0, b1]] = alamouti_encode(&s1, &s2).map_err(to_py)?.antennas;
    Ok(((a0, a1), (b0, b1)))
}

/// Widened so Python receives `list[int]` and not `bytes`.
fn bit_list(bits: Vec<u8>) -> Vec<u32> {
    bits.into_iter().map(u32::from).collect()
}

fn constellation(name: &str) -> PyResult<Constellation> {
    name.parse().map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (bits, modulation = "qpsk"))]
fn modulate(bits: Vec<u8>, modulation: &str) -> PyResult<Vec<Complex64>> {
    constellation(modulation)?.map_bits(&bits).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (estimates, modulation = "qpsk", rho = 1.0))]
fn demodulate_hard(estimates: Vec<Complex64>, modulation: &str, rho: f64) -> PyResult<Vec<u32>> {
    Ok(bit_list(
        constellation(modulation)?.demap_hard(&estimates, rho),
    ))
}

/// Max-log LLRs, positive for bit 0.
#[pyfunction]
#[pyo3(signature = (estimates, noise_var, modulation = "qpsk", rho = 1.0))]
fn demodulate_soft(
    estimates: Vec<Complex64>,
    noise_var: f64,
    modulation: &str,
    rho: f64,
) -> PyResult<Vec<f64>> {
    constellation(modulation)?
        .demap_soft(&estimates, rho, noise_var)
        .map_err(to_py)
}

/// Rate-1/2 punctured turbo code with 3GPP constituent encoders.
#[pyclass(name = "TurboCode", module = "mccdma_py")]
struct PyTurboCode {
    inner: TurboCode,
}

#[pymethods]
impl PyTurboCode {
    #[new]
    #[pyo3(signature = (block_len, iterations = 6, interleaver_seed = 0, log_map = false))]
    fn new(
        block_len: usize,
        iterations: usize,
        interleaver_seed: u64,
        log_map: bool,
    ) -> PyResult<Self> {
        let cfg = TurboConfig {
            block_len,
            iterations,
            interleaver_seed,
            log_map,
        };
        let inner = TurboCode::new(cfg).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn block_len(&self) -> usize {
        self.inner.block_len()
    }

    #[getter]
    fn codeword_len(&self) -> usize {
        self.inner.codeword_len()
    }

    fn encode(&self, bits: Vec<u8>) -> PyResult<Vec<u32>> {
        self.inner.encode(&bits).map(bit_list).map_err(to_py)
    }

    /// Decodes channel LLRs (positive for bit 0) into information bits.
    fn decode(&self, py: Python<'_>, llrs: Vec<f64>) -> PyResult<Vec<u32>> {
        let out = py.detach(|| self.inner.decode(&llrs)).map_err(to_py)?;
        Ok(bit_list(out.bits))
    }
}

/// RMS delay spread in seconds of a profile file or `bran_e`.
#[pyfunction]
fn rms_delay_spread(profile: &str) -> PyResult<f64> {
    Ok(load_profile(profile).map_err(to_py)?.rms_delay_spread())
}

/// Correlation magnitude between two elements spaced `spacing` wavelengths.
#[pyfunction]
#[pyo3(signature = (profile, spacing, side = "bs", realizations = 256, seed = 1))]
fn spatial_correlation(
    py: Python<'_>,
    profile: &str,
    spacing: f64,
    side: &str,
    realizations: usize,
    seed: u64,
) -> PyResult<f64> {
    let p = load_profile(profile).map_err(to_py)?;
    let side: Side = side.parse().map_err(to_py)?;
    let spatial = SpatialConfig::default();
    py.detach(|| estimate_spatial_correlation(&p, &spatial, spacing, side, realizations, seed))
        .map_err(to_py)
}

#[pymodule]
fn mccdma_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySimConfig>()?;
    m.add_class::<PyTurboCode>()?;
    m.add_function(wrap_pyfunction!(run_point, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_csv, m)?)?;
    m.add_function(wrap_pyfunction!(info, m)?)?;
    m.add_function(wrap_pyfunction!(noise_variance, m)?)?;
    m.add_function(wrap_pyfunction!(walsh_hadamard, m)?)?;
    m.add_function(wrap_pyfunction!(spread, m)?)?;
    m.add_function(wrap_pyfunction!(despread, m)?)?;
    m.add_function(wrap_pyfunction!(alamouti, m)?)?;
    m.add_function(wrap_pyfunction!(modulate, m)?)?;
    m.add_function(wrap_pyfunction!(demodulate_hard, m)?)?;
    m.add_function(wrap_pyfunction!(demodulate_soft, m)?)?;
    m.add_function(wrap_pyfunction!(rms_delay_spread, m)?)?;
    m.add_function(wrap_pyfunction!(spatial_correlation, m)?)?;
    m.add("CSV_HEADER", sim::CSV_HEADER)?;
    Ok(())
}
