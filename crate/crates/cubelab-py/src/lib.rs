//! Python bindings: congruence lattices on finite sets and groups, integer
//! lattices in Z^d, distributivity and cubic-extension checks, 3^n diagrams
//! and the counterexample search. Reports cross the boundary as plain dicts.

use std::sync::Arc;

use num_bigint::BigInt;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList, PyString};
use serde_json::Value;

use cubelab::abfg::{lattice_from_symbolic, lattice_join, lattice_meet, IntLattice};
use cubelab::cubes::{
    build_cube_set, build_sequence_fork, build_sequence_pointed_ab,
    build_sequence_pointed_group, check_distributive, equivalence_theorem_check,
    is_n_cubic_extension, is_n_fold_regular_epi, sequence_to_json, verify_sequence,
    EqRelLattice, SetAmbient, ZLatticeOps,
};
use cubelab::grpalg::{congruence_of, enumerate_normal_subgroups, FinGroup, NormalSubgroup};
use cubelab::relcore::{join_rel, meet_rel, EqRel, FinSet};
use cubelab::report::CheckReport;

fn err(e: cubelab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any().unbind(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any().unbind()
            } else if let Some(u) = n.as_u64() {
                u.into_pyobject(py)?.into_any().unbind()
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any().unbind()
            }
        }
        Value::String(s) => PyString::new(py, s).into_any().unbind(),
        Value::Array(a) => {
            let items: Vec<Py<PyAny>> =
                a.iter().map(|x| json_to_py(py, x)).collect::<PyResult<_>>()?;
            PyList::new(py, items)?.into_any().unbind()
        }
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, val) in o {
                d.set_item(k, json_to_py(py, val)?)?;
            }
            d.into_any().unbind()
        }
    })
}

fn report_to_py(py: Python<'_>, report: &CheckReport) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(report)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn shared_carrier(rels: &[PyEqRel]) -> PyResult<FinSet> {
    let first = rels
        .first()
        .ok_or_else(|| PyValueError::new_err("need at least one relation"))?;
    let carrier = first.inner.carrier.clone();
    if rels.iter().any(|r| !r.inner.carrier.same_carrier(&carrier)) {
        return Err(PyValueError::new_err("relations live on different carriers"));
    }
    Ok(carrier)
}

fn inner_rels(rels: &[PyEqRel]) -> Vec<EqRel> {
    rels.iter().map(|r| r.inner.clone()).collect()
}

/// An equivalence relation on {0, …, size−1}, stored as sorted blocks.
#[pyclass(name = "EqRel", frozen)]
#[derive(Clone)]
struct PyEqRel {
    inner: EqRel,
}

#[pymethods]
impl PyEqRel {
    #[new]
    fn new(size: usize, blocks: Vec<Vec<usize>>) -> PyResult<Self> {
        Ok(PyEqRel { inner: EqRel::from_blocks(FinSet::new(size), blocks).map_err(err)? })
    }

    #[staticmethod]
    fn discrete(size: usize) -> Self {
        PyEqRel { inner: EqRel::discrete(FinSet::new(size)) }
    }

    #[staticmethod]
    fn full(size: usize) -> Self {
        PyEqRel { inner: EqRel::full(FinSet::new(size)) }
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.carrier.size
    }

    #[getter]
    fn blocks(&self) -> Vec<Vec<usize>> {
        self.inner.blocks.clone()
    }

    fn related(&self, x: usize, y: usize) -> bool {
        self.inner.related(x, y)
    }

    fn meet(&self, other: &PyEqRel) -> PyResult<PyEqRel> {
        Ok(PyEqRel { inner: meet_rel(&self.inner, &other.inner).map_err(err)? })
    }

    fn join(&self, other: &PyEqRel) -> PyResult<PyEqRel> {
        Ok(PyEqRel { inner: join_rel(&self.inner, &other.inner).map_err(err)? })
    }

    fn leq(&self, other: &PyEqRel) -> bool {
        self.inner.leq(&other.inner)
    }

    fn __eq__(&self, other: &PyEqRel) -> bool {
        self.inner.carrier.same_carrier(&other.inner.carrier)
            && self.inner.blocks == other.inner.blocks
    }

    fn __repr__(&self) -> String {
        format!("EqRel(size={}, blocks={:?})", self.inner.carrier.size, self.inner.blocks)
    }
}

/// A finite group given by its Cayley table; elements are 0, …, order−1.
#[pyclass(name = "Group", frozen)]
#[derive(Clone)]
struct PyGroup {
    inner: Arc<FinGroup>,
}

#[pymethods]
impl PyGroup {
    #[new]
    #[pyo3(signature = (table, name=None))]
    fn new(table: Vec<Vec<usize>>, name: Option<String>) -> PyResult<Self> {
        Ok(PyGroup { inner: Arc::new(FinGroup::from_table(table, name).map_err(err)?) })
    }

    #[staticmethod]
    fn cyclic(m: usize) -> Self {
        PyGroup { inner: Arc::new(FinGroup::cyclic(m)) }
    }

    #[staticmethod]
    fn dihedral(m: usize) -> Self {
        PyGroup { inner: Arc::new(FinGroup::dihedral(m)) }
    }

    #[staticmethod]
    fn quaternion8() -> Self {
        PyGroup { inner: Arc::new(FinGroup::quaternion8()) }
    }

    #[staticmethod]
    fn symmetric(k: usize) -> Self {
        PyGroup { inner: Arc::new(FinGroup::symmetric(k)) }
    }

    #[staticmethod]
    fn alternating4() -> Self {
        PyGroup { inner: Arc::new(FinGroup::alternating4()) }
    }

    #[staticmethod]
    fn product(a: &PyGroup, b: &PyGroup) -> Self {
        PyGroup { inner: Arc::new(FinGroup::product(&a.inner, &b.inner)) }
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn name(&self) -> Option<String> {
        self.inner.name.clone()
    }

    fn mul(&self, a: usize, b: usize) -> PyResult<usize> {
        if a >= self.inner.order() || b >= self.inner.order() {
            return Err(PyValueError::new_err("element out of range"));
        }
        Ok(self.inner.mul(a, b))
    }

    fn inverse(&self, a: usize) -> PyResult<usize> {
        if a >= self.inner.order() {
            return Err(PyValueError::new_err("element out of range"));
        }
        Ok(self.inner.inv(a))
    }

    /// Element lists of every normal subgroup, smallest first.
    fn normal_subgroups(&self) -> Vec<Vec<usize>> {
        enumerate_normal_subgroups(&self.inner).into_iter().map(|k| k.elements).collect()
    }

    /// The congruence of cosets of a normal subgroup given by its elements.
    fn congruence(&self, elements: Vec<usize>) -> PyResult<PyEqRel> {
        let k = NormalSubgroup::new(self.inner.clone(), elements).map_err(err)?;
        Ok(PyEqRel { inner: congruence_of(&k) })
    }

    fn __repr__(&self) -> String {
        match &self.inner.name {
            Some(n) => format!("Group({n}, order={})", self.inner.order()),
            None => format!("Group(order={})", self.inner.order()),
        }
    }
}

/// A subgroup of Z^d in canonical column-HNF basis.
#[pyclass(name = "IntLattice", frozen)]
#[derive(Clone)]
struct PyLattice {
    inner: IntLattice,
}

#[pymethods]
impl PyLattice {
    #[new]
    fn new(ambient_rank: usize, vectors: Vec<Vec<i64>>) -> PyResult<Self> {
        Ok(PyLattice { inner: IntLattice::from_vectors(ambient_rank, &vectors).map_err(err)? })
    }

    /// Lattice in Z² spanned by symbolic generators over {1, a, a^2} with
    /// 1 ↦ (1,0), a ↦ (0,1), a² ↦ (−1,−1).
    #[staticmethod]
    fn symbolic(generators: Vec<String>) -> PyResult<Self> {
        Ok(PyLattice { inner: lattice_from_symbolic(&generators).map_err(err)? })
    }

    #[getter]
    fn ambient_rank(&self) -> usize {
        self.inner.ambient_rank
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.rank()
    }

    /// Canonical basis as a list of column vectors.
    #[getter]
    fn basis(&self) -> Vec<Vec<BigInt>> {
        (0..self.inner.basis.cols).map(|j| self.inner.basis.col(j)).collect()
    }

    fn contains(&self, v: Vec<BigInt>) -> bool {
        self.inner.contains(&v)
    }

    fn is_sublattice_of(&self, other: &PyLattice) -> bool {
        self.inner.is_sublattice_of(&other.inner)
    }

    fn meet(&self, other: &PyLattice) -> PyResult<PyLattice> {
        Ok(PyLattice { inner: lattice_meet(&self.inner, &other.inner).map_err(err)? })
    }

    fn join(&self, other: &PyLattice) -> PyResult<PyLattice> {
        Ok(PyLattice { inner: lattice_join(&self.inner, &other.inner).map_err(err)? })
    }

    fn __eq__(&self, other: &PyLattice) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        let cols: Vec<Vec<String>> = (0..self.inner.basis.cols)
            .map(|j| self.inner.basis.col(j).iter().map(|x| x.to_string()).collect())
            .collect();
        format!("IntLattice(ambient_rank={}, basis={cols:?})", self.inner.ambient_rank)
    }
}

/// Distributivity of a tuple of congruences, as a report dict.
#[pyfunction]
fn check_distributive_eqrels(py: Python<'_>, rels: Vec<PyEqRel>) -> PyResult<Py<PyAny>> {
    shared_carrier(&rels)?;
    let report = check_distributive(&EqRelLattice, &inner_rels(&rels)).map_err(err)?;
    report_to_py(py, &report)
}

/// Distributivity of a tuple of integer lattices, as a report dict.
#[pyfunction]
fn check_distributive_lattices(py: Python<'_>, lats: Vec<PyLattice>) -> PyResult<Py<PyAny>> {
    let inner: Vec<IntLattice> = lats.iter().map(|l| l.inner.clone()).collect();
    let report = check_distributive(&ZLatticeOps, &inner).map_err(err)?;
    report_to_py(py, &report)
}

/// Whether the quotient cube of the congruence tuple is an n-cubic extension.
#[pyfunction]
fn is_cubic_extension(py: Python<'_>, rels: Vec<PyEqRel>) -> PyResult<Py<PyAny>> {
    let carrier = shared_carrier(&rels)?;
    let built = build_cube_set(&carrier, &inner_rels(&rels)).map_err(err)?;
    let report = is_n_cubic_extension(&SetAmbient, &built.cube).map_err(err)?;
    report_to_py(py, &report)
}

/// Whether every edge of the quotient cube is surjective.
#[pyfunction]
fn is_regular_epi(py: Python<'_>, rels: Vec<PyEqRel>) -> PyResult<Py<PyAny>> {
    let carrier = shared_carrier(&rels)?;
    let built = build_cube_set(&carrier, &inner_rels(&rels)).map_err(err)?;
    let report = is_n_fold_regular_epi(&SetAmbient, &built.cube).map_err(err)?;
    report_to_py(py, &report)
}

/// Independent non-recursive extension check, n ≤ 3.
#[pyfunction]
fn brute_extension_oracle(rels: Vec<PyEqRel>) -> PyResult<bool> {
    let carrier = shared_carrier(&rels)?;
    let built = build_cube_set(&carrier, &inner_rels(&rels)).map_err(err)?;
    cubelab::oracle::brute_extension_oracle(&built.cube).map_err(err)
}

/// All equivalent clauses (extension, distributivity, the binary lattice and
/// box-product identities for triples) with their unanimous verdict.
#[pyfunction]
fn equivalence_clauses(py: Python<'_>, rels: Vec<PyEqRel>) -> PyResult<Py<PyAny>> {
    let carrier = shared_carrier(&rels)?;
    let report = equivalence_theorem_check(&carrier, &inner_rels(&rels)).map_err(err)?;
    report_to_py(py, &report)
}

fn grid_result(py: Python<'_>, seq: cubelab::cubes::NSequence) -> PyResult<Py<PyAny>> {
    let report = verify_sequence(&seq).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("diagram", json_to_py(py, &sequence_to_json(&seq))?)?;
    out.set_item("report", report_to_py(py, &report)?)?;
    Ok(out.into_any().unbind())
}

/// Pointed 3^n grid of a group with a tuple of normal subgroups (each given
/// by its elements). Returns {"diagram": …, "report": …}.
#[pyfunction]
fn pointed_grid(py: Python<'_>, group: &PyGroup, subgroups: Vec<Vec<usize>>) -> PyResult<Py<PyAny>> {
    let subs: Vec<NormalSubgroup> = subgroups
        .into_iter()
        .map(|e| NormalSubgroup::new(group.inner.clone(), e))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    grid_result(py, build_sequence_pointed_group(&group.inner, &subs).map_err(err)?)
}

/// Pointed 3^n grid of sublattices of Z^rank over a base lattice.
#[pyfunction]
#[pyo3(signature = (rank, subs, base=None))]
fn pointed_grid_ab(
    py: Python<'_>,
    rank: usize,
    subs: Vec<PyLattice>,
    base: Option<&PyLattice>,
) -> PyResult<Py<PyAny>> {
    let base = match base {
        Some(b) => b.inner.clone(),
        None => IntLattice::zero(rank),
    };
    let inner: Vec<IntLattice> = subs.iter().map(|l| l.inner.clone()).collect();
    grid_result(py, build_sequence_pointed_ab(rank, &base, &inner).map_err(err)?)
}

/// Denormalised 3^n grid of kernel pairs over a finite carrier.
#[pyfunction]
fn fork_grid(py: Python<'_>, rels: Vec<PyEqRel>) -> PyResult<Py<PyAny>> {
    let carrier = shared_carrier(&rels)?;
    grid_result(py, build_sequence_fork(&carrier, &inner_rels(&rels)).map_err(err)?)
}

/// Run a counterexample search from a JSON spec string; returns the witness
/// list, each entry {"instance": …, "report": …}.
#[pyfunction]
#[pyo3(signature = (spec, seed=None))]
fn search(py: Python<'_>, spec: &str, seed: Option<u64>) -> PyResult<Py<PyAny>> {
    let mut spec: cubelab::oracle::SearchSpec =
        serde_json::from_str(spec).map_err(|e| PyValueError::new_err(e.to_string()))?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let witnesses = cubelab::oracle::search(&spec).map_err(err)?;
    let items: Vec<Py<PyAny>> = witnesses
        .iter()
        .map(|w| {
            let v = serde_json::to_value(w)
                .map_err(|e| PyValueError::new_err(e.to_string()))?;
            json_to_py(py, &v)
        })
        .collect::<PyResult<_>>()?;
    Ok(PyList::new(py, items)?.into_any().unbind())
}

#[pymodule]
fn cubelab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEqRel>()?;
    m.add_class::<PyGroup>()?;
    m.add_class::<PyLattice>()?;
    m.add_function(wrap_pyfunction!(check_distributive_eqrels, m)?)?;
    m.add_function(wrap_pyfunction!(check_distributive_lattices, m)?)?;
    m.add_function(wrap_pyfunction!(is_cubic_extension, m)?)?;
    m.add_function(wrap_pyfunction!(is_regular_epi, m)?)?;
    m.add_function(wrap_pyfunction!(brute_extension_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(equivalence_clauses, m)?)?;
    m.add_function(wrap_pyfunction!(pointed_grid, m)?)?;
    m.add_function(wrap_pyfunction!(pointed_grid_ab, m)?)?;
    m.add_function(wrap_pyfunction!(fork_grid, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    Ok(())
}
