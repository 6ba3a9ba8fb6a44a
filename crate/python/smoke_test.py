"""Smoke test for the shiftwell_py extension.

Build and install first:
    maturin build --release -m crates/python/Cargo.toml -o dist && pip install dist/*.whl
"""

import math
import tempfile
from pathlib import Path

import shiftwell_py as sw


def main():
    # entropy of a strictly alternating series: every template matches
    x = [60.0, 80.0] * 50
    assert math.isfinite(sw.sample_entropy(x))
    try:
        sw.sample_entropy([70.0] * 50)
    except sw.ShiftwellError:
        pass
    else:
        raise AssertionError("constant series should fail")

    day = [t < 420 or t >= 1380 for t in range(1440)]
    assert sw.sleep_regularity([day] * 7) == 1.0

    t = sw.welch_t([1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0, 4.0])
    assert t["statistic"] == 0.0 and t["p_value"] == 1.0
    r, p = sw.pearson_r([1.0, 2.0, 3.0, 4.0], [2.0, 4.0, 6.0, 8.1])
    assert r > 0.99 and p < 0.05
    assert [sw.discretize(v, "binary") for v in (50, 51)] == [0, 1]
    assert [sw.discretize(v, "three") for v in (33, 34, 66, 67)] == [0, 1, 1, 2]

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        data = tmp / "data"
        checks = sw.synthesize(str(data), seed=7)
        assert all(c["passed"] for c in checks), [c for c in checks if not c["passed"]]
        sw.run_cli(["features", "--data", str(data)])

        ds = sw.Dataset.load(str(data))
        assert len(ds) == 241, len(ds)
        grid = "[[point]]\nshared_widths = [8]\nbranch_width = 4\nlearning_rate = 0.01\nepochs = 10\n"
        rows = ds.evaluate(["mtml", "baseline"], ["regression"], repetitions=2, folds=3, grid_toml=grid)
        assert len(rows) == 2 * 5 and all(r["metric"] == "mae" for r in rows)

        model = tmp / "model.txt"
        sw.run_cli(["train", "--data", str(data), "--epochs", "20", "--out", str(model)])
        m = sw.Model.load(str(model))
        features = data / "features.csv"
        preds = m.predict(str(features))
        n_days = len(features.read_text().splitlines()) - 1
        assert len(preds) == n_days and set(preds[0]) == {"alertness", "happiness", "energy", "health", "stress"}
        ranked = m.importance(str(features))
        assert len(ranked) == len(m.feature_names())

        try:
            sw.run_cli(["train", "--data", str(tmp / "missing"), "--out", str(model)])
        except sw.DataError:
            pass
        else:
            raise AssertionError("missing data dir should be a DataError")

    print("smoke test ok")


if __name__ == "__main__":
    main()
