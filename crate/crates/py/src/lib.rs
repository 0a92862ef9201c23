//! Python bindings exposing the main sponge-spectra types and operations.

use num_bigint::BigUint;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use sponge_spectra::dimension;
use sponge_spectra::localdim;
use sponge_spectra::measures::{self, ProbVector};
use sponge_spectra::potential::Potential;
use sponge_spectra::spectra::{self, GridSpec, SpectrumCurve, SpectrumKind};
use sponge_spectra::sponge::{Digit, SpongeSpec};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Scalar alphas come as floats, vector alphas as sequences.
#[derive(FromPyObject)]
enum AlphaArg {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl AlphaArg {
    fn into_vec(self) -> Vec<f64> {
        match self {
            AlphaArg::Scalar(x) => vec![x],
            AlphaArg::Vector(v) => v,
        }
    }
}

/// A validated self-affine Sierpinski sponge.
#[pyclass(name = "Sponge", skip_from_py_object)]
#[derive(Clone)]
struct PySponge {
    inner: SpongeSpec,
}

#[pymethods]
impl PySponge {
    #[new]
    fn new(bases: Vec<u32>, digits: Vec<Vec<u32>>) -> PyResult<Self> {
        Ok(PySponge {
            inner: SpongeSpec::new(bases, digits).map_err(err)?,
        })
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn bases(&self) -> Vec<u32> {
        self.inner.bases().to_vec()
    }

    #[getter]
    fn digits(&self) -> Vec<Vec<u32>> {
        self.inner.digits().iter().map(|d| d.coords().to_vec()).collect()
    }

    fn projected_alphabet(&self, k: usize) -> PyResult<Vec<Vec<u32>>> {
        if k < 1 || k > self.inner.d() {
            return Err(err("projection level out of range"));
        }
        Ok(self
            .inner
            .projected_alphabet(k)
            .iter()
            .map(|d| d.coords().to_vec())
            .collect())
    }

    fn packing_dimension(&self) -> f64 {
        dimension::packing_dimension(&self.inner)
    }

    /// Returns `(dimension, maximizing probability vector)`.
    fn hausdorff_dimension(&self) -> (f64, Vec<f64>) {
        let (dim, p) = dimension::hausdorff_dimension(&self.inner);
        (dim, p.probs().to_vec())
    }

    fn mcmullen_closed_form(&self) -> PyResult<f64> {
        dimension::mcmullen_closed_form(&self.inner).map_err(err)
    }

    fn box_dim_estimate(&self, n: u32) -> PyResult<f64> {
        if n == 0 {
            return Err(err("level must be >= 1"));
        }
        Ok(self.inner.box_dim_estimate(n))
    }

    fn approximate_square_count(&self, n: u32) -> PyResult<BigUint> {
        if n == 0 {
            return Err(err("level must be >= 1"));
        }
        Ok(self.inner.approximate_square_count(n))
    }

    fn __repr__(&self) -> String {
        format!(
            "Sponge(bases={:?}, digits={})",
            self.inner.bases(),
            self.inner.digit_count()
        )
    }
}

/// A locally constant potential on the sponge's digits.
#[pyclass(name = "Potential", skip_from_py_object)]
#[derive(Clone)]
struct PyPotential {
    inner: Potential,
}

#[pymethods]
impl PyPotential {
    #[new]
    fn new(sponge: &PySponge, digits: Vec<Vec<u32>>, values: Vec<Vec<f64>>) -> PyResult<Self> {
        if digits.len() != values.len() {
            return Err(err("digits and values must align"));
        }
        let pairs = digits.into_iter().map(Digit).zip(values).collect();
        Ok(PyPotential {
            inner: Potential::new(&sponge.inner, pairs).map_err(err)?,
        })
    }

    #[staticmethod]
    fn scalar(sponge: &PySponge, values: Vec<f64>) -> PyResult<Self> {
        Ok(PyPotential {
            inner: Potential::scalar(&sponge.inner, values).map_err(err)?,
        })
    }

    #[staticmethod]
    fn indicator(sponge: &PySponge, digit: Vec<u32>) -> PyResult<Self> {
        let d = Digit(digit);
        if sponge.inner.digit_index(&d).is_none() {
            return Err(err("digit not in the sponge"));
        }
        Ok(PyPotential {
            inner: Potential::indicator(&sponge.inner, &d),
        })
    }

    #[getter]
    fn arity(&self) -> usize {
        self.inner.arity()
    }

    /// Achievable-average interval for scalar potentials.
    fn domain(&self, sponge: &PySponge) -> PyResult<(f64, f64)> {
        spectra::birkhoff_interval(&sponge.inner, &self.inner).map_err(err)
    }
}

/// A Bernoulli measure given by a probability vector over the digits.
#[pyclass(name = "Measure", skip_from_py_object)]
#[derive(Clone)]
struct PyMeasure {
    inner: ProbVector,
}

#[pymethods]
impl PyMeasure {
    #[new]
    fn new(sponge: &PySponge, probs: Vec<f64>) -> PyResult<Self> {
        Ok(PyMeasure {
            inner: ProbVector::from_aligned(sponge.inner.digits().to_vec(), probs)
                .map_err(err)?,
        })
    }

    #[staticmethod]
    fn uniform(sponge: &PySponge) -> Self {
        PyMeasure {
            inner: ProbVector::uniform(sponge.inner.digits().to_vec()),
        }
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.inner.probs().to_vec()
    }

    fn entropy(&self) -> f64 {
        measures::entropy(&self.inner).nats
    }

    fn marginal(&self, sponge: &PySponge, k: usize) -> PyResult<Vec<f64>> {
        if k < 1 || k > sponge.inner.d() {
            return Err(err("projection level out of range"));
        }
        Ok(measures::marginal(&sponge.inner, &self.inner, k)
            .probs()
            .to_vec())
    }

    fn mean(&self, phi: &PyPotential) -> Vec<f64> {
        measures::potential_mean(&self.inner, &phi.inner)
    }

    fn weighted_entropy(&self, sponge: &PySponge) -> f64 {
        measures::weighted_entropy(&sponge.inner, &self.inner)
    }

    /// Nielsen's dimension of the frequency set of this vector.
    fn nielsen_dimension(&self, sponge: &PySponge) -> f64 {
        dimension::nielsen_dimension(&sponge.inner, &self.inner)
    }
}

fn curve_to_py(py: Python<'_>, curve: &SpectrumCurve) -> PyResult<Py<pyo3::types::PyDict>> {
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("kind", curve.kind.as_str())?;
    dict.set_item("alpha", curve.grid.clone())?;
    dict.set_item("value", curve.values.clone())?;
    dict.set_item("transitions", curve.transitions.clone())?;
    dict.set_item("dropped", curve.dropped.clone())?;
    Ok(dict.unbind())
}

#[pyfunction]
fn packing_spectrum_point(sponge: &PySponge, phi: &PyPotential, alpha: AlphaArg) -> PyResult<f64> {
    spectra::packing_spectrum_point(&sponge.inner, &phi.inner, &alpha.into_vec()).map_err(err)
}

#[pyfunction]
fn hausdorff_spectrum_point(
    sponge: &PySponge,
    phi: &PyPotential,
    alpha: AlphaArg,
) -> PyResult<f64> {
    spectra::hausdorff_spectrum_point(&sponge.inner, &phi.inner, &alpha.into_vec()).map_err(err)
}

#[pyfunction]
fn divergence_spectrum(
    sponge: &PySponge,
    phi: &PyPotential,
    boxes: Vec<(f64, f64)>,
) -> PyResult<f64> {
    spectra::divergence_spectrum(&sponge.inner, &phi.inner, &boxes).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (sponge, phi, kind = "packing", grid = 201))]
fn spectrum_curve(
    py: Python<'_>,
    sponge: &PySponge,
    phi: &PyPotential,
    kind: &str,
    grid: usize,
) -> PyResult<Py<pyo3::types::PyDict>> {
    let kind = match kind {
        "packing" => SpectrumKind::PackingBirkhoff,
        "hausdorff" => SpectrumKind::HausdorffBirkhoff,
        other => return Err(err(format!("unknown spectrum kind {other:?}"))),
    };
    let curve = spectra::spectrum_curve(&sponge.inner, &phi.inner, GridSpec::new(grid), kind)
        .map_err(err)?;
    curve_to_py(py, &curve)
}

#[pyfunction]
fn full_dim_attainment(sponge: &PySponge, phi: &PyPotential) -> Option<Vec<f64>> {
    spectra::full_dim_attainment(&sponge.inner, &phi.inner)
}

/// Local-dimension analysis of a strictly positive Bernoulli measure under
/// the (declared) very strong separation condition.
#[pyclass(name = "LocalDim")]
struct PyLocalDim {
    inner: localdim::LocalDimSetup,
}

#[pymethods]
impl PyLocalDim {
    #[new]
    fn new(sponge: &PySponge, measure: &PyMeasure) -> PyResult<Self> {
        Ok(PyLocalDim {
            inner: localdim::pj_potential(&sponge.inner, &measure.inner).map_err(err)?,
        })
    }

    /// Values of the level potentials P_j per digit (canonical order).
    fn level_potentials(&self) -> Vec<Vec<f64>> {
        self.inner.pj().to_vec()
    }

    fn domain(&self) -> (f64, f64) {
        localdim::localdim_domain(&self.inner)
    }

    fn is_one_dimensional(&self) -> Option<usize> {
        localdim::is_one_dimensional(&self.inner)
    }

    fn local_dim_value(&self, sponge: &PySponge, q: Vec<f64>) -> PyResult<f64> {
        let qv = ProbVector::from_aligned(sponge.inner.digits().to_vec(), q).map_err(err)?;
        Ok(localdim::local_dim_value(&self.inner, &qv))
    }

    fn packing_exact(&self, alpha: f64) -> PyResult<f64> {
        localdim::localdim_packing_exact(&self.inner, alpha).map_err(err)
    }

    fn packing_lower(&self, alpha: f64) -> PyResult<f64> {
        localdim::localdim_packing_lower(&self.inner, alpha).map_err(err)
    }

    fn curve(&self, py: Python<'_>, count: usize) -> PyResult<Py<pyo3::types::PyDict>> {
        let curve = localdim::localdim_curve(&self.inner, count).map_err(err)?;
        curve_to_py(py, &curve)
    }
}

#[pymodule]
fn sponge_spectra_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySponge>()?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PyMeasure>()?;
    m.add_class::<PyLocalDim>()?;
    m.add_function(wrap_pyfunction!(packing_spectrum_point, m)?)?;
    m.add_function(wrap_pyfunction!(hausdorff_spectrum_point, m)?)?;
    m.add_function(wrap_pyfunction!(divergence_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum_curve, m)?)?;
    m.add_function(wrap_pyfunction!(full_dim_attainment, m)?)?;
    Ok(())
}
