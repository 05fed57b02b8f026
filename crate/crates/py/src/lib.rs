//! Python bindings: meshes, disk maps, streamline clustering, seed
//! correlation and the synthetic end-to-end pipeline.

use std::path::PathBuf;

use cortex_atlas::connect::{seed_correlation as core_seed_correlation, Seed, TimeSeriesField};
use cortex_atlas::geom::{Vec2, Vec3};
use cortex_atlas::mesh::{self, MeshFormat, RegionId};
use cortex_atlas::param::{self as core_param, AreaCorrectConfig};
use cortex_atlas::pipeline::{self, PipelineConfig};
use cortex_atlas::scene;
use cortex_atlas::tract::{self, StreamlineFormat};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn err(e: cortex_atlas::Error) -> PyErr {
    match e {
        cortex_atlas::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn mesh_format(path: &PathBuf) -> PyResult<MeshFormat> {
    MeshFormat::from_path(path).ok_or_else(|| PyValueError::new_err(format!("unknown mesh extension: {}", path.display())))
}

#[pyclass(name = "Mesh", module = "cortex_atlas")]
struct PyMesh {
    inner: mesh::TriMesh,
}

#[pymethods]
impl PyMesh {
    #[new]
    fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> PyResult<Self> {
        Ok(PyMesh { inner: mesh::TriMesh::new(vertices, faces).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let f = mesh_format(&path)?;
        Ok(PyMesh { inner: mesh::load_mesh(&path, f).map_err(err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let f = mesh_format(&path)?;
        mesh::save_mesh(&self.inner, &path, f).map_err(err)
    }

    /// Returns a labeled copy from a `vertex_id,label_id[,name,r,g,b]` CSV.
    fn with_labels(&self, csv: PathBuf) -> PyResult<Self> {
        Ok(PyMesh { inner: mesh::attach_labels(self.inner.clone(), csv).map_err(err)? })
    }

    /// `(submesh, old_to_new)` with the region's faces deleted.
    fn remove_region(&self, label: RegionId) -> PyResult<(Self, Vec<Option<usize>>)> {
        let r = mesh::remove_region(&self.inner, label).map_err(err)?;
        Ok((PyMesh { inner: r.mesh }, r.vertex_map))
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    #[getter]
    fn face_count(&self) -> usize {
        self.inner.face_count()
    }

    #[getter]
    fn vertices(&self) -> Vec<Vec3> {
        self.inner.vertices().to_vec()
    }

    #[getter]
    fn faces(&self) -> Vec<[usize; 3]> {
        self.inner.faces().to_vec()
    }

    #[getter]
    fn labels(&self) -> Option<Vec<RegionId>> {
        self.inner.labels().map(|l| l.to_vec())
    }

    #[getter]
    fn hemisphere(&self) -> &'static str {
        self.inner.hemisphere().as_str()
    }

    fn total_area(&self) -> f64 {
        self.inner.total_area()
    }

    fn euler_characteristic(&self) -> i64 {
        mesh::euler_characteristic(&self.inner)
    }

    fn boundary_loops(&self) -> Vec<Vec<usize>> {
        mesh::boundary_loops(&self.inner)
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    fn __repr__(&self) -> String {
        format!("Mesh(vertices={}, faces={})", self.inner.vertex_count(), self.inner.face_count())
    }
}

#[pyclass(name = "DiskMap", module = "cortex_atlas")]
struct PyDiskMap {
    inner: core_param::DiskMap,
}

#[pymethods]
impl PyDiskMap {
    #[getter]
    fn uv(&self) -> Vec<Vec2> {
        self.inner.uv.clone()
    }

    #[getter]
    fn boundary(&self) -> Vec<usize> {
        self.inner.boundary.clone()
    }

    fn flipped_faces(&self, mesh: &PyMesh) -> Vec<usize> {
        self.inner.flipped_faces(&mesh.inner)
    }

    /// `(rms_log_rho, max_k, mean_k)` against `mesh`.
    fn distortion(&self, mesh: &PyMesh) -> PyResult<(f64, f64, f64)> {
        let r = core_param::distortion_report(&mesh.inner, &self.inner).map_err(err)?;
        Ok((r.rms_log_rho, r.max_k, r.mean_k))
    }

    fn sample_back(&self, mesh: &PyMesh, u: f64, v: f64) -> PyResult<(usize, [f64; 3], Vec3)> {
        let s = core_param::sample_back(&self.inner, &mesh.inner, [u, v]).map_err(err)?;
        Ok((s.face, s.weights, s.position))
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (text, mesh_id = "mesh"))]
    fn from_json(text: &str, mesh_id: &str) -> PyResult<Self> {
        Ok(PyDiskMap { inner: core_param::DiskMap::from_json(text, mesh_id).map_err(err)? })
    }
}

#[pyfunction]
fn harmonic_disk_map(py: Python<'_>, mesh: &PyMesh) -> PyResult<PyDiskMap> {
    let m = mesh.inner.clone();
    let inner = py.detach(move || core_param::harmonic_disk_map(&m)).map_err(err)?;
    Ok(PyDiskMap { inner })
}

#[pyfunction]
#[pyo3(signature = (map, mesh, max_iters = 500, step = 0.1, tol = 1e-7))]
fn area_correct(py: Python<'_>, map: &PyDiskMap, mesh: &PyMesh, max_iters: usize, step: f64, tol: f64) -> PyResult<PyDiskMap> {
    let cfg = AreaCorrectConfig { max_iters, step, tol, ..AreaCorrectConfig::default() };
    let (d, m) = (map.inner.clone(), mesh.inner.clone());
    let inner = py.detach(move || core_param::area_correct(&d, &m, &cfg)).map_err(err)?;
    Ok(PyDiskMap { inner })
}

#[pyclass(name = "StreamlineSet", module = "cortex_atlas")]
struct PyStreamlineSet {
    inner: tract::StreamlineSet,
}

#[pymethods]
impl PyStreamlineSet {
    #[new]
    fn new(lines: Vec<Vec<Vec3>>) -> PyResult<Self> {
        Ok(PyStreamlineSet { inner: tract::StreamlineSet::new(lines).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (path, format = "text"))]
    fn load(path: PathBuf, format: &str) -> PyResult<Self> {
        let f: StreamlineFormat = format.parse().map_err(err)?;
        Ok(PyStreamlineSet { inner: tract::load_streamlines(&path, f).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __getitem__(&self, i: usize) -> PyResult<Vec<Vec3>> {
        if i >= self.inner.len() {
            return Err(pyo3::exceptions::PyIndexError::new_err(i));
        }
        Ok(self.inner.get(i).to_vec())
    }
}

#[pyclass(name = "Cluster", module = "cortex_atlas", get_all)]
struct PyCluster {
    id: usize,
    members: Vec<usize>,
    centroid: Vec<Vec3>,
}

#[pyfunction]
fn resample(line: Vec<Vec3>, k: usize) -> PyResult<Vec<Vec3>> {
    tract::resample(&line, k).map_err(err)
}

#[pyfunction]
fn mdf(a: Vec<Vec3>, b: Vec<Vec3>) -> PyResult<f64> {
    tract::mdf(&a, &b).map_err(err)
}

/// Greedy MDF clustering; returns `(clusters, skipped_zero_length_ids)`.
#[pyfunction]
#[pyo3(signature = (streamlines, theta = tract::DEFAULT_THETA_MM, k = tract::DEFAULT_K))]
fn quickbundles(py: Python<'_>, streamlines: &PyStreamlineSet, theta: f64, k: usize) -> PyResult<(Vec<PyCluster>, Vec<usize>)> {
    let set = streamlines.inner.clone();
    let qb = py.detach(move || tract::quickbundles(&set, theta, k)).map_err(err)?;
    let clusters = qb
        .clusters
        .into_iter()
        .map(|c| PyCluster { id: c.id, members: c.members, centroid: c.centroid })
        .collect();
    Ok((clusters, qb.skipped))
}

/// Pearson correlation of each row of `series` with a vertex or region seed.
#[pyfunction]
#[pyo3(signature = (series, vertex = None, region = None, labels = None))]
fn seed_correlation(
    series: Vec<Vec<f64>>,
    vertex: Option<usize>,
    region: Option<RegionId>,
    labels: Option<Vec<RegionId>>,
) -> PyResult<Vec<f64>> {
    let seed = match (vertex, region) {
        (Some(v), None) => Seed::Vertex(v),
        (None, Some(r)) => Seed::Region(r),
        _ => return Err(PyValueError::new_err("give exactly one of vertex or region")),
    };
    let ts = TimeSeriesField::new(series).map_err(err)?;
    Ok(core_seed_correlation(&ts, seed, labels.as_deref()).map_err(err)?.values)
}

#[pyclass(name = "Scene", module = "cortex_atlas")]
struct PyScene {
    inner: scene::Scene,
}

#[pymethods]
impl PyScene {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyScene { inner: scene::Scene::load(&path).map_err(err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write(&path).map_err(err)
    }

    /// Rounded, key-sorted document as written by the exporter.
    fn to_json(&self) -> PyResult<String> {
        let bytes = self.inner.to_json_bytes().map_err(err)?;
        Ok(String::from_utf8(bytes).expect("serde_json writes UTF-8"))
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(err)
    }

    #[getter]
    fn mesh_ids(&self) -> Vec<String> {
        self.inner.meshes.iter().map(|m| m.id.clone()).collect()
    }

    #[getter]
    fn total_vertices(&self) -> usize {
        self.inner.total_vertices()
    }

    #[getter]
    fn bundle_count(&self) -> usize {
        self.inner.bundles.len()
    }

    #[getter]
    fn overlay_names(&self) -> Vec<String> {
        self.inner.overlays.iter().map(|o| o.name.clone()).collect()
    }

    /// `(region_a, region_b, bundle_count, streamline_count)` per graph edge.
    fn graph_edges(&self) -> Vec<(RegionId, RegionId, usize, usize)> {
        self.inner
            .graph
            .iter()
            .flat_map(|g| g.edges.iter())
            .map(|e| (e.region_a, e.region_b, e.bundle_count, e.streamline_count))
            .collect()
    }

    /// Member counts of the bundles joining `a` and `b`.
    fn bundles_between(&self, a: RegionId, b: RegionId) -> Vec<usize> {
        self.inner.bundles_between(a, b).iter().map(|b| b.member_count()).collect()
    }
}

/// Whole pipeline on the synthetic two-hemisphere dataset.
#[pyfunction]
#[pyo3(signature = (rings = 12, streamlines = 500, samples = 40, seed = 1, theta = tract::DEFAULT_THETA_MM, scales = vec![1.0]))]
fn run_synthetic(
    py: Python<'_>,
    rings: usize,
    streamlines: usize,
    samples: usize,
    seed: u64,
    theta: f64,
    scales: Vec<f64>,
) -> PyResult<PyScene> {
    let cfg = PipelineConfig {
        theta,
        scales,
        seed: Some(Seed::Vertex(0)),
        channels: vec!["myelin".into()],
        ..PipelineConfig::default()
    };
    let out = py
        .detach(move || pipeline::run(pipeline::synthetic_inputs(rings, streamlines, samples, seed), &cfg))
        .map_err(err)?;
    Ok(PyScene { inner: out.scene })
}

#[pymodule(name = "cortex_atlas")]
fn py_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyDiskMap>()?;
    m.add_class::<PyStreamlineSet>()?;
    m.add_class::<PyCluster>()?;
    m.add_class::<PyScene>()?;
    m.add_function(wrap_pyfunction!(harmonic_disk_map, m)?)?;
    m.add_function(wrap_pyfunction!(area_correct, m)?)?;
    m.add_function(wrap_pyfunction!(resample, m)?)?;
    m.add_function(wrap_pyfunction!(mdf, m)?)?;
    m.add_function(wrap_pyfunction!(quickbundles, m)?)?;
    m.add_function(wrap_pyfunction!(seed_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(run_synthetic, m)?)?;
    m.add("SCENE_VERSION", scene::SCENE_VERSION)?;
    m.add("SCENE_SCHEMA", scene::SCENE_SCHEMA)?;
    Ok(())
}
