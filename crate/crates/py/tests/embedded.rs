use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &std::ffi::CStr) {
    Python::attach(|py| {
        let m = pyo3::wrap_pymodule!(pytraitlex::pytraitlex)(py);
        let globals = PyDict::new(py);
        globals.set_item("tl", m).unwrap();
        if let Err(e) = py.run(code, Some(&globals), None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn metrics_and_fusion() {
    run(c"
assert abs(tl.mae([0.2, 0.4], [0.3, 0.5]) - 0.1) < 1e-12
assert tl.marginal_accuracy([0.6], [0.5]) == 1.0
answers = [0] * 25 + [1] * 17 + [2] * 10 + [3] * 48
assert tl.fused_distribution(answers, [0, 1, 0, 1]) == [35.0, 65.0]
try:
    tl.mae([], [])
    raise SystemExit('expected ValueError')
except ValueError:
    pass
");
}

#[test]
fn pdf_model_on_synthetic_store() {
    run(c"
store = tl.synth_corpus(5, 400)
assert len(store) == 400
train = store.subset(list(range(300)))
test = store.subset(list(range(300, 400)))
model = tl.PdfModel.build(train, min_word_freq=50)
r = model.evaluate(test)
assert r['n'] == 100 and r['marginal_accuracy'] >= 0.9, r
sid = test.sample_ids()[0]
p = model.predict(test.adjective_counts(sid))
assert abs(sum(p['phi']) - 1.0) < 1e-9
assert 0.0 <= p['confidence'] <= 10.0
");
}

#[test]
fn learner_round_trip() {
    run(c"
x = [[float(i % 2) * 3 + (i % 5) * 0.1, float(i % 7)] for i in range(40)]
y = [i % 2 for i in range(40)]
m = tl.Model.train(x, y, 'decision_tree')
assert m.algorithm() == 'decision_tree'
assert m.predict(x) == [float(v) for v in y]
folds, mean = tl.cross_validate(x, y, 'knn', k=4)
assert len(folds) == 4 and mean > 0.9
");
}
