import json
import math
import subprocess
import sys

import numpy as np
import pytest

from hyperfaith.cli import main
from hyperfaith.table import default_labels, format_table
from tables import FOUR_VAR, pairwise_independent


@pytest.fixture
def write(tmp_path):
    def _write(name, values, k=None):
        k = k or int(np.log2(len(values)))
        path = tmp_path / name
        path.write_text(format_table(values, default_labels(k)))
        return str(path)

    return _write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_gamma(capsys, write):
    path = write("p.csv", pairwise_independent(1 / 24))
    code, out, _ = run(capsys, "gamma", path)
    assert code == 0
    rows = dict(line.split(",") for line in out.strip().splitlines()[1:])
    assert float(rows["ABC"]) == pytest.approx(4 * math.log(2), abs=1e-12)
    assert float(rows["ABC"]) == pytest.approx(2.77259, abs=1e-5)
    assert len(rows["ABC"].replace(".", "")) >= 10


def test_gamma_uniform_is_zero(capsys, write):
    code, out, _ = run(capsys, "gamma", write("u.csv", [5] * 8))
    rows = [line.split(",") for line in out.strip().splitlines()[2:]]
    assert len(rows) == 7 and all(float(g) == 0 for _, g in rows)


def test_gamma_json(capsys, write):
    path = write("p.csv", [1, 2, 3, 4])
    code, out, _ = run(capsys, "gamma", path, "--format", "json")
    assert code == 0
    assert set(json.loads(out)) == {"", "A", "B", "AB"}


def test_faithful(capsys, write):
    code, out, _ = run(capsys, "faithful", write("d.csv", pairwise_independent(0.05)))
    assert code == 0
    assert out == '[["A","B","C"]]\n'
    code, out, _ = run(capsys, "faithful", write("u.csv", [1] * 8))
    assert out == "[]\n"
    code, out, _ = run(capsys, "faithful", write("f.csv", FOUR_VAR))
    assert json.loads(out) == [["C", "D"], ["A", "B", "C"], ["A", "B", "D"]]
    code, out, _ = run(capsys, "faithful", write("f.csv", FOUR_VAR), "--with-vertices")
    assert json.loads(out)["vertices"] == ["A", "B", "C", "D"]


def test_flat_input(capsys, tmp_path):
    path = tmp_path / "flat.csv"
    path.write_text("0.4,0.1,0.1,0.4\n")
    code, out, _ = run(capsys, "faithful", str(path))
    assert code == 0 and json.loads(out) == [["A", "B"]]


def test_malformed_input(capsys, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("A,B,count\n0,0,1\n0,0,2\n")
    code, _, err = run(capsys, "gamma", str(path))
    assert code != 0
    assert "line 3" in err
    path.write_text("1,2,3\n")
    code, _, err = run(capsys, "faithful", str(path))
    assert code != 0 and "error" in err
    code, _, err = run(capsys, "gamma", str(tmp_path / "missing.csv"))
    assert code != 0


def test_zero_cell_needs_smoothing(capsys, write):
    path = write("z.csv", [0, 3, 4, 5])
    code, _, err = run(capsys, "gamma", path)
    assert code == 1 and "zero cell 00" in err
    assert run(capsys, "gamma", path, "--smoothing")[0] == 0


def test_strong(capsys, write):
    path = write("p.csv", pairwise_independent(1 / 24))
    code, out, _ = run(capsys, "strong", path, "--hypergraph", "ABC", "--lambda", "1")
    rep = json.loads(out)
    assert code == 0 and rep["satisfied"] is True


def test_search(capsys, write):
    counts = np.random.default_rng(0).multinomial(10**5, np.full(8, 1 / 8))
    code, out, _ = run(capsys, "search", write("c.csv", counts))
    assert code == 0
    lines = [json.loads(x) for x in out.strip().splitlines()]
    assert lines[-1]["final"] == [["A"], ["B"], ["C"]]
    assert lines[-1]["completed"] is True
    assert {x["action"] for x in lines[:-1]} <= {"keep", "remove", "defer"}


def test_search_resample_is_seeded(capsys, write):
    path = write("p.csv", np.rint(pairwise_independent(1 / 24) * 1000).astype(int))
    a = run(capsys, "search", path, "--resample", "5000", "--seed", "3")[1]
    b = run(capsys, "search", path, "--resample", "5000", "--seed", "3")[1]
    assert a == b
    assert json.loads(a.strip().splitlines()[-1])["final"] == [["A", "B", "C"]]


def test_search_rejects_fractional_counts(capsys, write):
    code, _, err = run(capsys, "search", write("p.csv", [0.25] * 4))
    assert code == 1 and "integer" in err


def test_lambda_star(capsys):
    code, out, _ = run(capsys, "lambda-star", "--n", "10000", "--orders", "1,2,3,4")
    rows = [line.split(",") for line in out.strip().splitlines()[1:]]
    mults = [float(r[1]) for r in rows[:4]]
    np.testing.assert_allclose(mults, [2, 2**1.5, 4, 2**2.5])
    assert float(rows[0][2]) == pytest.approx(0.39199, abs=1e-5)
    assert rows[-1][0] == "min"


def test_volume_nu_closed(capsys):
    code, out, _ = run(capsys, "volume", "nu", "--lambdas", "0:1:0.5")
    lines = out.strip().splitlines()
    assert lines[0] == "lambda,estimate,std_error,n_samples,method"
    assert [l.split(",")[0] for l in lines[1:]] == ["0", "0.5", "1"]
    assert lines[-1].endswith("closed_form")


def test_volume_seeded_and_written(capsys, tmp_path):
    out_path = tmp_path / "curve.csv"
    argv = ["volume", "two-by-two", "--measure", "phi3", "--lambdas", "0.1,0.2",
            "--samples", "20000", "--seed", "4", "-o", str(out_path)]
    assert run(capsys, *argv)[0] == 0
    first = out_path.read_text()
    assert run(capsys, *argv[:-2], "--threads", "1", "-o", str(out_path))[0] == 0
    assert out_path.read_text() == first


@pytest.mark.parametrize(
    "argv",
    [
        ["volume", "decomposable", "--hypergraph", "ABC,ABD", "--lambda", "0.5", "--samples", "20000"],
        ["volume", "decomposable", "--orders", "1,1,1", "--lambda", "0.5"],
        ["volume", "chain", "--length", "2", "--lambda", "0.5", "--samples", "20000"],
        ["volume", "projected", "--hypergraph", "AB,BC", "--lambda", "0.5", "--samples", "5000"],
        ["volume", "bound", "--orders", "2", "--lambda", "0.2"],
        ["volume", "nu", "--h", "2", "--lambda", "0.5", "--samples", "20000", "--format", "json"],
    ],
)
def test_volume_kinds(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    assert out


def test_volume_errors(capsys):
    assert run(capsys, "volume", "nu")[0] == 1
    code, _, err = run(capsys, "volume", "decomposable", "--hypergraph", "AB,AC,BC", "--lambda", "1")
    assert code == 1 and "decomposable" in err


def test_module_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "hyperfaith", "lambda-star", "--n", "100"],
        capture_output=True, text=True,
    )
    assert res.returncode == 0
    assert res.stdout.startswith("order,multiplier,lambda_star")
