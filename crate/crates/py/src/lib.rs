//! Python bindings. Vectors of C² cross the boundary as 4-element lists
//! `[x1, y1, x2, y2]`; reports come back as plain dictionaries.

use std::collections::BTreeMap;

use num_complex::Complex64;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use contact_geom_core::ambient::{self, UnitSpherePoint, C2};
use contact_geom_core::calculus::{refinement_study, Identity, SurfaceAnalysis, DEFAULT_BAND};
use contact_geom_core::catalog::{self, CatalogEntry, EntryInfo};
use contact_geom_core::error::GeomError as CoreError;
use contact_geom_core::flow::{self, FlowConfig, Mode};
use contact_geom_core::report::{fields_csv, AnalysisReport};
use contact_geom_core::samples;
use contact_geom_core::surface::{self, SurfaceGrid};

pyo3::create_exception!(contact_geom, GeomError, PyException);

fn to_py(e: CoreError) -> PyErr {
    GeomError::new_err(e.to_string())
}

fn from_json<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn c2(a: [f64; 4]) -> C2 {
    C2::from_array(a)
}

fn unit(a: [f64; 4]) -> PyResult<UnitSpherePoint> {
    UnitSpherePoint::try_new(c2(a), 1e-9).map_err(to_py)
}

fn sorted_params(params: Option<BTreeMap<String, f64>>) -> Vec<(String, f64)> {
    params.unwrap_or_default().into_iter().collect()
}

/// Hermitian product `z1 conj(w1) + z2 conj(w2)`.
#[pyfunction]
fn hermitian(z: [f64; 4], w: [f64; 4]) -> Complex64 {
    ambient::hermitian(c2(z), c2(w))
}

/// Reeb field `iz` at a point of S³.
#[pyfunction]
fn reeb(z: [f64; 4]) -> PyResult<[f64; 4]> {
    Ok(ambient::reeb(unit(z)?).to_array())
}

/// Canonical frame `(z^⊥, i z^⊥, i z)`.
#[pyfunction]
fn canonical_frame(z: [f64; 4]) -> PyResult<[[f64; 4]; 3]> {
    Ok(ambient::canonical_frame(unit(z)?).vectors().map(C2::to_array))
}

/// Orthogonal projection of a tangent vector onto the contact plane.
#[pyfunction]
fn contact_project(z: [f64; 4], v: [f64; 4]) -> PyResult<[f64; 4]> {
    Ok(ambient::contact_project(unit(z)?, c2(v)).map_err(to_py)?.to_array())
}

/// Adapted frame and contact angle from a point and a tangent basis.
#[pyfunction]
fn adapted_frame<'py>(py: Python<'py>, z: [f64; 4], xu: [f64; 4], xv: [f64; 4]) -> PyResult<Bound<'py, PyAny>> {
    let f = surface::adapted_frame(unit(z)?, c2(xu), c2(xv)).map_err(to_py)?;
    from_json(py, &f)
}

/// A sampled surface in S³.
#[pyclass(name = "Surface", module = "contact_geom")]
struct PySurface {
    grid: SurfaceGrid,
    entry: Option<CatalogEntry>,
}

impl PySurface {
    fn analysis(&self) -> PyResult<SurfaceAnalysis> {
        SurfaceAnalysis::new(&self.grid).map_err(to_py)
    }
}

fn rows(f: &contact_geom_core::grid::ScalarField) -> Vec<Vec<f64>> {
    let (nu, nv) = f.shape();
    (0..nu).map(|i| (0..nv).map(|j| *f.get(i, j)).collect()).collect()
}

#[pymethods]
impl PySurface {
    /// Samples a catalog surface, e.g. `Surface.catalog("rtorus", {"r": 0.9}, 64, 64)`.
    #[staticmethod]
    #[pyo3(signature = (name, params = None, nu = None, nv = None))]
    fn catalog(name: &str, params: Option<BTreeMap<String, f64>>, nu: Option<usize>, nv: Option<usize>) -> PyResult<Self> {
        let entry = catalog::by_name(name, &sorted_params(params)).map_err(to_py)?;
        let grid = entry
            .sample(nu.unwrap_or(entry.grid.u.n), nv.or(nu).unwrap_or(entry.grid.v.n))
            .map_err(to_py)?;
        Ok(PySurface { grid, entry: Some(entry) })
    }

    /// Loads a sample file (native format or an analyzer fields.csv).
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PySurface { grid: samples::load_samples(path).map_err(to_py)?, entry: None })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        samples::write_samples(&self.grid, path).map_err(to_py)
    }

    #[getter]
    fn label(&self) -> String {
        self.grid.label.clone()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.grid.spec.u.n, self.grid.spec.v.n)
    }

    /// Node coordinates `(u, v)` in i-major order.
    fn coords(&self) -> Vec<(f64, f64)> {
        let spec = self.grid.spec;
        (0..spec.len()).map(|k| spec.coords(k / spec.v.n, k % spec.v.n)).collect()
    }

    /// Points as `[x1, y1, x2, y2]` in i-major order.
    fn points(&self) -> Vec<[f64; 4]> {
        self.grid.points().iter().map(|p| p.to_array()).collect()
    }

    /// Contact angle per node as a nested list (NaN where masked).
    fn beta(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&surface::contact_angle_field(&self.grid).map_err(to_py)?.beta))
    }

    fn gaussian_curvature(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&self.analysis()?.k_intrinsic))
    }

    fn mean_curvature(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&self.analysis()?.shape.mean))
    }

    fn area(&self) -> PyResult<f64> {
        flow::area(&self.grid).map_err(to_py)
    }

    fn willmore_energy(&self) -> PyResult<f64> {
        flow::willmore_energy(&self.grid).map_err(to_py)
    }

    /// Summary report as a dictionary.
    #[pyo3(signature = (band = DEFAULT_BAND))]
    fn analyze<'py>(&self, py: Python<'py>, band: f64) -> PyResult<Bound<'py, PyAny>> {
        let a = self.analysis()?;
        from_json(py, &AnalysisReport::build(&self.grid, &a, self.entry.as_ref(), band))
    }

    /// The analyzer's per-node CSV table.
    #[pyo3(signature = (band = DEFAULT_BAND))]
    fn fields_csv(&self, band: f64) -> PyResult<String> {
        Ok(fields_csv(&self.grid, &self.analysis()?, band))
    }

    fn __repr__(&self) -> String {
        format!("Surface({:?}, {}x{})", self.grid.label, self.grid.spec.u.n, self.grid.spec.v.n)
    }
}

/// Identity check across square grids of the given sizes.
#[pyfunction]
#[pyo3(signature = (surface, identity, levels = vec![32, 64, 128], params = None, band = DEFAULT_BAND))]
fn verify<'py>(
    py: Python<'py>,
    surface: &str,
    identity: &str,
    levels: Vec<usize>,
    params: Option<BTreeMap<String, f64>>,
    band: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let identity: Identity = identity.parse().map_err(PyValueError::new_err)?;
    let entry = catalog::by_name(surface, &sorted_params(params)).map_err(to_py)?;
    let grids = levels.iter().map(|&n| entry.sample(n, n)).collect::<Result<Vec<_>, _>>().map_err(to_py)?;
    let (report, _) = refinement_study(&entry.label(), identity, band, grids).map_err(to_py)?;
    from_json(py, &report)
}

/// Energy descent; returns the flow report.
#[pyfunction]
#[pyo3(signature = (surface, params = None, nu = 32, nv = 32, steps = 500, tol = 1e-3, mode = "full"))]
#[allow(clippy::too_many_arguments)]
fn descend<'py>(
    py: Python<'py>,
    surface: &str,
    params: Option<BTreeMap<String, f64>>,
    nu: usize,
    nv: usize,
    steps: usize,
    tol: f64,
    mode: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let mode: Mode = mode.parse().map_err(PyValueError::new_err)?;
    let config = FlowConfig {
        surface: surface.to_string(),
        params: sorted_params(params),
        nu,
        nv,
        max_iterations: steps,
        tol,
        mode,
        ..FlowConfig::default()
    };
    let outcome = py.detach(|| flow::descend(&config)).map_err(to_py)?;
    from_json(py, &outcome.report)
}

#[pyfunction]
fn catalog_list(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    let infos: Vec<EntryInfo> = catalog::list().iter().map(EntryInfo::from).collect();
    from_json(py, &infos)
}

/// Contact angle and curvature identities for surfaces in S³.
#[pymodule]
fn contact_geom(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("GeomError", m.py().get_type::<GeomError>())?;
    m.add_class::<PySurface>()?;
    m.add_function(wrap_pyfunction!(hermitian, m)?)?;
    m.add_function(wrap_pyfunction!(reeb, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_frame, m)?)?;
    m.add_function(wrap_pyfunction!(contact_project, m)?)?;
    m.add_function(wrap_pyfunction!(adapted_frame, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(descend, m)?)?;
    m.add_function(wrap_pyfunction!(catalog_list, m)?)?;
    Ok(())
}
