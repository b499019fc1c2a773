//! Python bindings for `qdwb`. Symbols and images travel as flat lists in
//! row-major grid order; complex values map to Python `complex`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use qdwb::design::{self, DualPair, FilterBank, Role};
use qdwb::prcheck::{self, Mode};
use qdwb::solver::{self, SolverConfig};
use qdwb::transform::{self, CoefficientPyramid, TransformMode};
use qdwb::{FreqGrid, PartitionMask, C64};

fn err(e: qdwb::Error) -> PyErr {
    match e {
        qdwb::Error::Step { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn grid(n: usize) -> PyResult<FreqGrid> {
    FreqGrid::new(n).map_err(err)
}

fn role_name(r: Role) -> &'static str {
    match r {
        Role::Orth => "orth",
        Role::Frame => "frame",
        Role::BiorthPrimal => "biorth-primal",
        Role::BiorthDual => "biorth-dual",
    }
}

/// Seven sampled symbols on a `2N x 2N` grid.
#[pyclass(name = "FilterBank", module = "qdwb_py", from_py_object)]
#[derive(Clone)]
pub struct PyBank {
    pub inner: FilterBank,
}

#[pymethods]
impl PyBank {
    #[getter]
    fn n(&self) -> usize {
        self.inner.grid.n()
    }

    #[getter]
    fn side(&self) -> usize {
        self.inner.grid.side()
    }

    #[getter]
    fn role(&self) -> &'static str {
        role_name(self.inner.role)
    }

    /// Symbol `j` (0..6) as a flat list of `4N²` complex values.
    fn symbol(&self, j: usize) -> PyResult<Vec<C64>> {
        self.inner
            .m
            .get(j)
            .map(|m| m.values.clone())
            .ok_or_else(|| PyValueError::new_err(format!("symbol index {j} out of range")))
    }

    /// `(ω₁, ω₂)` of a flat grid index.
    fn omega(&self, idx: usize) -> PyResult<(f64, f64)> {
        if idx >= self.inner.grid.len() {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.inner.grid.omega_at(idx))
    }

    fn save(&self, path: &str, provenance: Option<&str>) -> PyResult<()> {
        qdwb::io::write_bank(path.as_ref(), &self.inner, provenance.unwrap_or("python")).map_err(err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyBank {
            inner: qdwb::io::read_bank(path.as_ref()).map_err(err)?.0,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "FilterBank(n={}, role={})",
            self.inner.grid.n(),
            role_name(self.inner.role)
        )
    }
}

/// Multi-level coefficients from `analyze`.
#[pyclass(name = "Pyramid", module = "qdwb_py")]
pub struct PyPyramid {
    pub inner: CoefficientPyramid,
}

#[pymethods]
impl PyPyramid {
    #[getter]
    fn levels(&self) -> usize {
        self.inner.levels.len()
    }

    #[getter]
    fn side(&self) -> usize {
        self.inner.side
    }

    fn count(&self) -> usize {
        self.inner.count()
    }

    fn energy(&self) -> f64 {
        self.inner.energy()
    }

    /// Band `j` (1..6) at `level` (1-based): `(rows, cols, values)`.
    fn band(&self, level: usize, j: usize) -> PyResult<(usize, usize, Vec<C64>)> {
        let b = level
            .checked_sub(1)
            .and_then(|l| self.inner.levels.get(l))
            .and_then(|bands| j.checked_sub(1).and_then(|k| bands.get(k)))
            .ok_or_else(|| PyValueError::new_err("no such band"))?;
        Ok((b.rows, b.cols, b.data.clone()))
    }

    fn lowpass(&self) -> (usize, usize, Vec<C64>) {
        (self.inner.low.rows, self.inner.low.cols, self.inner.low.data.clone())
    }
}

#[pyfunction]
fn shannon_bank(n: usize) -> PyResult<PyBank> {
    let g = grid(n)?;
    Ok(PyBank {
        inner: design::shannon_bank(g, &PartitionMask::new(g)),
    })
}

#[pyfunction]
#[pyo3(signature = (n, eps = std::f64::consts::PI / 8.0))]
fn frame_bank(n: usize, eps: f64) -> PyResult<PyBank> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(PyValueError::new_err("eps must be positive"));
    }
    let g = grid(n)?;
    Ok(PyBank {
        inner: design::smoothed_frame_bank(g, &PartitionMask::new(g), eps),
    })
}

#[pyfunction]
fn dual_inputs(n: usize) -> PyResult<PyBank> {
    Ok(PyBank {
        inner: design::default_dual_inputs(grid(n)?).map_err(err)?,
    })
}

type ReportRow = (String, String, f64, usize, bool);

fn rows(reports: &[prcheck::VerificationReport]) -> Vec<ReportRow> {
    reports
        .iter()
        .flat_map(|r| {
            r.per_shift
                .iter()
                .map(move |s| (r.condition.clone(), s.shift.to_string(), s.max, s.worst, s.max <= r.tol))
        })
        .collect()
}

/// Reconstruction conditions of a single bank: `(condition, shift, max, worst_index, pass)`.
#[pyfunction]
#[pyo3(signature = (bank, mode = "basis", tol = prcheck::TOL_EXACT))]
fn verify(bank: &PyBank, mode: &str, tol: f64) -> PyResult<Vec<ReportRow>> {
    let m = match mode {
        "basis" => Mode::Basis,
        "frame" => Mode::Frame,
        _ => return Err(PyValueError::new_err("mode must be 'basis' or 'frame'")),
    };
    Ok(rows(&[
        prcheck::identity_summation(&bank.inner, tol),
        prcheck::shift_cancellation(&bank.inner, m, tol),
    ]))
}

#[pyfunction]
#[pyo3(signature = (primal, dual, tol = prcheck::TOL_SOLVER))]
fn verify_pair(primal: &PyBank, dual: &PyBank, tol: f64) -> PyResult<Vec<ReportRow>> {
    let pair = DualPair::new(primal.inner.clone(), dual.inner.clone()).map_err(err)?;
    Ok(rows(&prcheck::biorth_conditions(&pair, tol)))
}

/// Completes dual inputs to a biorthogonal pair: `(primal, dual, trace_lines)`.
#[pyfunction]
fn solve_biorth(inputs: &PyBank) -> PyResult<(PyBank, PyBank, Vec<String>)> {
    let cfg = SolverConfig::new(inputs.inner.grid.n());
    let (pair, trace) = solver::run_algorithm1(&inputs.inner, &cfg).map_err(err)?;
    Ok((
        PyBank { inner: pair.primal },
        PyBank { inner: pair.dual },
        trace.lines(),
    ))
}

fn mode_of(mode: &str) -> PyResult<TransformMode> {
    match mode {
        "critical" => Ok(TransformMode::Critical),
        "frame" => Ok(TransformMode::Frame),
        _ => Err(PyValueError::new_err("mode must be 'critical' or 'frame'")),
    }
}

/// Analysis of a square real image given row-major.
#[pyfunction]
#[pyo3(signature = (image, side, bank, levels = 2, mode = "critical"))]
fn analyze(image: Vec<f64>, side: usize, bank: &PyBank, levels: usize, mode: &str) -> PyResult<PyPyramid> {
    if image.len() != side * side {
        return Err(PyValueError::new_err(format!(
            "{} samples for side {side}",
            image.len()
        )));
    }
    let x: Vec<C64> = image.into_iter().map(|v| C64::new(v, 0.0)).collect();
    let inner = transform::analyze(&x, side, &bank.inner, levels, mode_of(mode)?).map_err(err)?;
    Ok(PyPyramid { inner })
}

#[pyfunction]
fn synthesize(pyramid: &PyPyramid, bank: &PyBank) -> PyResult<Vec<C64>> {
    transform::synthesize(&pyramid.inner, &bank.inner).map_err(err)
}

/// One-dimensional spline-pair oracle as a dict of report values.
#[pyfunction]
#[pyo3(signature = (n = 32))]
fn oracle_1d(py: Python<'_>, n: usize) -> PyResult<Py<pyo3::types::PyDict>> {
    let (m0, truth) = solver::spline_pair_1d(n);
    let (_, r) = solver::oracle_1d(&m0, Some(&truth)).map_err(err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("residual", r.residual)?;
    d.set_item("truth_residual", r.truth_residual)?;
    d.set_item("distance", r.distance)?;
    d.set_item("spread", r.spread)?;
    d.set_item("truth_spread", r.truth_spread)?;
    Ok(d.unbind())
}

#[pymodule]
fn qdwb_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBank>()?;
    m.add_class::<PyPyramid>()?;
    m.add_function(wrap_pyfunction!(shannon_bank, m)?)?;
    m.add_function(wrap_pyfunction!(frame_bank, m)?)?;
    m.add_function(wrap_pyfunction!(dual_inputs, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(verify_pair, m)?)?;
    m.add_function(wrap_pyfunction!(solve_biorth, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_1d, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shannon_round_trip_through_wrappers() {
        let b = shannon_bank(8).unwrap();
        assert_eq!(b.side(), 16);
        assert!(verify(&b, "basis", 0.0).unwrap().iter().all(|r| r.4));
        let img: Vec<f64> = (0..256).map(|i| (i % 13) as f64).collect();
        let p = analyze(img.clone(), 16, &b, 2, "critical").unwrap();
        assert_eq!(p.count(), 256);
        let y = synthesize(&p, &b).unwrap();
        assert!(y
            .iter()
            .zip(&img)
            .all(|(a, b)| (a.re - b).abs() < 1e-10 && a.im.abs() < 1e-10));
    }

    #[test]
    fn bad_arguments_are_rejected() {
        assert!(grid(3).is_err());
        let b = shannon_bank(4).unwrap();
        assert!(b.symbol(7).is_err());
        assert!(mode_of("other").is_err());
        assert!(analyze(vec![0.0; 10], 4, &b, 1, "critical").is_err());
    }

    #[test]
    fn solver_wrapper_certifies() {
        let (p, d, trace) = solve_biorth(&dual_inputs(8).unwrap()).unwrap();
        assert!(trace.iter().any(|l| l.starts_with("ranks (6,3)")));
        assert!(verify_pair(&p, &d, 1e-8).unwrap().iter().all(|r| r.4));
    }
}
