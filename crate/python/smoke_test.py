"""Smoke test for the pytraitlex extension module.

Build and install first, for example:

    pip install maturin
    maturin develop --release -m crates/py/Cargo.toml
"""

import os
import tempfile

import pytraitlex as tl


def main():
    print("pytraitlex", tl.version())

    store = tl.synth_corpus(seed=1, n_samples=600)
    train = store.subset(list(range(500)))
    test = store.subset(list(range(500, 600)))
    model = tl.PdfModel.build(train, min_word_freq=100)
    report = model.evaluate(test)
    print("pdf model:", {k: round(v, 4) for k, v in report.items()})
    assert report["marginal_accuracy"] >= 0.9

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "model.json")
        model.save(path)
        again = tl.PdfModel.load(path)
        sid = test.sample_ids()[0]
        counts = test.adjective_counts(sid)
        assert again.predict(counts) == model.predict(counts)

    x = [[float(i % 3 == c) * 2 + (i % 5) * 0.1 for c in range(3)] for i in range(60)]
    y = [i % 3 for i in range(60)]
    folds, mean = tl.cross_validate(x, y, "random_forest_clf", k=5)
    print("random forest 5-fold accuracy:", round(mean, 3))
    assert mean >= 0.9

    fused = tl.fused_distribution([0] * 25 + [1] * 17 + [2] * 10 + [3] * 48, [0, 1, 0, 1])
    assert fused == [35.0, 65.0], fused
    print("fusion (25,17,10,48) ->", fused)

    assert abs(tl.rmse([0.1, 0.5], [0.3, 0.5]) - 0.02 ** 0.5) < 1e-12
    print("ok")


if __name__ == "__main__":
    main()
