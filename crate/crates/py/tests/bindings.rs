use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module<F: FnOnce(Python<'_>, &Bound<'_, PyDict>)>(f: F) {
    Python::attach(|py| {
        let m = PyModule::new(py, "pyhemsim").unwrap();
        pyhemsim::pyhemsim(&m).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("hs", m).unwrap();
        f(py, &globals);
    });
}

#[test]
fn scenario_and_runs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    with_module(|py, g| {
        g.set_item("out", dir.path().join("hem")).unwrap();
        py.run(
            c"
scn = hs.Scenario(case=1, seed=2, days=1)
assert scn.n_steps == 144 and len(scn.price) == 144
base = hs.run(scn, 'baseline')
hem = hs.run(scn, 'hem', {'horizon_h': 4.0})
assert base.controller == 'baseline' and len(hem) == 144
rows = {r['metric']: r for r in hs.comparison(base, hem)['rows']}
assert rows['grid_cost']['hem'] <= rows['grid_cost']['baseline']
hem.write(str(out))
back = hs.Ledger.read(str(out))
assert back.column('grid') == hem.column('grid')
assert back.report() == hem.report()
assert abs(hs.deferral_efficiency(12.16, 24.77) - 49.09) < 0.01
",
            Some(g),
            None,
        )
        .unwrap();
    });
}

#[test]
fn bad_input_raises() {
    with_module(|py, g| {
        py.run(
            c"
def raises(exc, f):
    try:
        f()
    except exc:
        return True
    return False

assert raises(ValueError, lambda: hs.Scenario(case=99))
assert raises(ValueError, lambda: hs.Scenario(colour='blue'))
scn = hs.Scenario(days=1)
assert raises(ValueError, lambda: hs.run(scn, 'neural'))
assert raises(ValueError, lambda: hs.run(scn, 'hem', {'soc_min': 0.95}))
assert raises(KeyError, lambda: hs.run(scn, 'baseline').column('nope'))
assert raises(ValueError, lambda: hs.deferral_efficiency(1.0, 0.0))
",
            Some(g),
            None,
        )
        .unwrap();
    });
}
