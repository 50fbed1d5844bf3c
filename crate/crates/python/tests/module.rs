use pyo3::prelude::*;
use pyo3::types::PyDict;
use pyo3::wrap_pymodule;

fn run(code: &str) {
    Python::initialize();
    Python::attach(|py| {
        let module = wrap_pymodule!(smplab::smplab)(py);
        let globals = PyDict::new(py);
        globals.set_item("smplab", module).unwrap();
        let code = std::ffi::CString::new(code).unwrap();
        py.run(&code, Some(&globals), None).unwrap_or_else(|e| panic!("{e}"));
    });
}

#[test]
fn submodular_gap_from_python() {
    run("adap, alg, ratio = smplab.submodular_gap('0.05')\nassert ratio >= 1.75 and alg < 1");
}

#[test]
fn exact_value_is_rational_string() {
    run("assert smplab.Instance.submodular_lb('1/2').adap_exact() == '41/32'");
}

#[test]
fn json_round_trip_and_errors() {
    run(r#"
inst = smplab.Instance.random(3, 'matching_rank')
assert smplab.Instance.from_json(inst.to_json()).to_json() == inst.to_json()
try:
    smplab.Instance.random(0, 'nope')
except ValueError as e:
    assert 'unknown valuation kind' in str(e)
else:
    raise AssertionError
"#);
}

#[test]
fn monte_carlo_matches_across_threads() {
    run(r#"
inst = smplab.Instance.random(12)
assert inst.alg_mc(2000, 5, threads=1) == inst.alg_mc(2000, 5, threads=3)
"#);
}

#[test]
fn exact_cap_raises_runtime_error() {
    run(r#"
inst = smplab.Instance.submodular_lb('0.05')
try:
    inst.alg()
except RuntimeError as e:
    assert 'exact mode infeasible' in str(e)
else:
    raise AssertionError
"#);
}
