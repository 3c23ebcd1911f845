import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cnrange.cli import main
from cnrange.io import (
    InputError,
    dumps,
    load_matrix,
    load_normal_form,
    load_state,
    matrix_from_json,
    parse_json_bytes,
    round_sig,
    save_matrix,
    save_state,
    write_csv,
)
from cnrange.local import PureState, W_STATE

from conftest import random_complex

finite = st.floats(-1e6, 1e6, allow_nan=False)


@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_matrix_json_roundtrip(tmp_path_factory, rows, cols, data):
    re = data.draw(arrays(float, (rows, cols), elements=finite))
    im = data.draw(arrays(float, (rows, cols), elements=finite))
    M = re + 1j * im
    path = tmp_path_factory.mktemp("m") / "m.json"
    save_matrix(path, M)
    # files carry 12 significant digits
    back = load_matrix(path)
    assert np.all(np.abs(back.real - re) <= 1e-11 * np.abs(re))
    assert np.all(np.abs(back.imag - im) <= 1e-11 * np.abs(im))


def test_matrix_json_is_row_major():
    M = matrix_from_json({"rows": 2, "cols": 2, "data": [[1, 0], [2, 0], [3, 0], [4, 1]]})
    assert np.array_equal(M, np.array([[1, 2], [3, 4 + 1j]]))


@pytest.mark.parametrize("obj", [
    [1, 2],
    {"rows": 2, "cols": 2, "data": [[1, 0]]},
    {"rows": 0, "cols": 2, "data": []},
    {"rows": 1, "cols": 1, "data": [1.0]},
    {"rows": 1, "cols": 1, "data": [["a", 0]]},
])
def test_matrix_json_rejects_bad_objects(obj):
    with pytest.raises(InputError):
        matrix_from_json(obj)


def test_parse_errors_report_byte_offset():
    raw = '{"é": 1,, }'.encode()
    with pytest.raises(InputError, match="byte offset 9"):
        parse_json_bytes(raw)
    with pytest.raises(InputError, match="byte offset 1"):
        parse_json_bytes(b"[\xff]")


def test_state_and_normal_form_files(tmp_path):
    save_state(tmp_path / "w.json", PureState(W_STATE))
    assert np.allclose(load_state(tmp_path / "w.json").amplitudes, W_STATE)
    (tmp_path / "bad.json").write_text('{"n": 2, "amplitudes": [[1, 0]]}')
    with pytest.raises(InputError):
        load_state(tmp_path / "bad.json")
    (tmp_path / "nf.json").write_text('[{"coeff": [1, 0], "string": "z+"}]')
    assert load_normal_form(tmp_path / "nf.json").order_matrix.tolist() == [[0, 1]]
    with pytest.raises(InputError):
        load_matrix(tmp_path / "missing.json")


@given(finite)
def test_round_sig_keeps_twelve_digits(x):
    y = round_sig(x)
    assert y == float(f"{x:.12g}")
    assert abs(y - x) <= 1e-11 * abs(x)


def test_serialisation_of_numpy_types(tmp_path):
    obj = {"z": 1 + 2j, "a": np.arange(3), "b": np.bool_(True), "nan": math.nan}
    assert json.loads(dumps(obj)) == {"z": [1.0, 2.0], "a": [0, 1, 2], "b": True, "nan": None}
    write_csv(tmp_path / "x.csv", ["a", "b"], [(1 / 3, True)])
    assert (tmp_path / "x.csv").read_text() == "a,b\n0.333333333333,true\n"


# --------------------------------------------------------------------------
# command line


@pytest.fixture
def mats(tmp_path):
    rng = np.random.default_rng(0)
    paths = {}
    for name in "ACD":
        paths[name] = str(tmp_path / f"{name}.json")
        save_matrix(paths[name], random_complex(rng, 4))
    paths["E"] = str(tmp_path / "E.json")
    save_matrix(paths["E"], np.diag([1.0, 1.0, 0.0, 0.0]))
    return paths


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_cli_boundary(tmp_path, mats):
    out = tmp_path / "b"
    code = main(["boundary", "--A", mats["A"], "--C", mats["C"], "--m", "16", "--svg",
                 "--restarts", "4", "--threads", "1", "--out", str(out)])
    assert code == 0
    rows = _rows(out / "boundary.csv")
    assert len(rows) == 16 and set(rows[0]) == {"angle", "re", "im", "converged"}
    assert all(r["converged"] == "true" for r in rows)
    rec = json.loads((out / "boundary.json").read_text())
    assert len(rec["points"]) == 16 and len(rec["c_spectrum"]) == 24
    assert (out / "boundary.svg").read_text().startswith("<svg")
    man = json.loads((out / "manifest.json").read_text())
    assert man["command"] == "boundary" and man["seed"] == 0


def test_cli_input_errors_exit_1(tmp_path, mats, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"rows": 2, "cols": 2, "data": [')
    assert main(["boundary", "--A", str(bad), "--C", mats["C"], "--out", str(tmp_path)]) == 1
    assert "byte offset" in capsys.readouterr().err
    assert main(["boundary", "--A", mats["A"], "--C", mats["C"], "--m", "4"]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["entanglement-scan", "--family", "psi9"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 1
    save_matrix(tmp_path / "A3.json", np.eye(3))
    assert main(["radius", "--A", str(tmp_path / "A3.json"), "--C", mats["C"]]) == 1
    assert main(["local-radius", "--A", str(tmp_path / "A3.json"), "--C", str(tmp_path / "A3.json")]) == 1
    assert main(["constrained", "--A", mats["A"], "--C", mats["C"]]) == 1


def test_cli_radius_stdout(tmp_path, mats, capsys):
    save_matrix(tmp_path / "I.json", np.eye(4))
    assert main(["radius", "--A", mats["A"], "--C", str(tmp_path / "I.json"), "--restarts", "2"]) == 0
    rec = json.loads(capsys.readouterr().out)
    A = load_matrix(mats["A"])
    assert rec["radius"] == pytest.approx(abs(np.trace(A)), rel=1e-11)
    out = tmp_path / "r"
    assert main(["local-radius", "--A", mats["A"], "--C", mats["C"], "--restarts", "2",
                 "--out", str(out)]) == 0
    rec = json.loads((out / "radius.json").read_text())
    assert len(rec["factors"]) == 2
    assert (out / "manifest.json").exists()


def test_cli_entanglement_scan(tmp_path):
    out = tmp_path / "e"
    assert main(["entanglement-scan", "--family", "psi3", "--grid", "3", "--restarts", "4",
                 "--out", str(out)]) == 0
    rows = _rows(out / "entanglement.csv")
    assert [float(r["s"]) for r in rows] == [0.0, 0.5, 1.0]
    assert float(rows[0]["delta_sq"]) == pytest.approx(10 / 9, abs=1e-9)
    save_state(tmp_path / "w.json", PureState(W_STATE))
    assert main(["entanglement-scan", "--family", "file", "--state", str(tmp_path / "w.json"),
                 "--out", str(out)]) == 0
    assert main(["entanglement-scan", "--family", "file", "--out", str(out)]) == 1


def test_cli_reversal(tmp_path, capsys):
    Z = np.diag([1.0, -1.0])
    X = np.array([[0, 1], [1, 0]])
    Y = np.array([[0, -1j], [1j, 0]])
    save_matrix(tmp_path / "zz.json", np.kron(Z, Z))
    save_matrix(tmp_path / "heis.json", np.kron(X, X) + np.kron(Y, Y) + np.kron(Z, Z))
    (tmp_path / "nf.json").write_text('[{"coeff": [1, 0], "string": "z+"}]')
    (tmp_path / "nf0.json").write_text('[{"coeff": [1, 0], "string": "zz"}]')
    results = {}
    for name, flag in (("zz", "--H"), ("heis", "--H"), ("nf", "--normal-form"), ("nf0", "--normal-form")):
        assert main(["reversal", flag, str(tmp_path / f"{name}.json"), "--restarts", "10"]) == 0
        results[name] = json.loads(capsys.readouterr().out)
    assert results["zz"]["reversible"] and results["zz"]["method"] == "flow"
    assert not results["heis"]["reversible"] and results["heis"]["witness"]["power"] == 3
    assert results["nf"]["reversible"] and results["nf"]["method"] == "angles"
    assert not results["nf0"]["reversible"] and results["nf0"]["witness"]["zero_row"] == 0
    assert main(["reversal"]) == 1


def test_cli_constrained_and_sampling(tmp_path, mats):
    out = tmp_path / "c"
    code = main(["constrained", "--A", mats["A"], "--C", mats["C"], "--E", mats["E"],
                 "--method", "projected", "--restarts", "3", "--out", str(out)])
    assert code == 0
    rec = json.loads((out / "constrained.json").read_text())
    assert rec["converged"] and rec["constraint_residual"] <= 1e-10
    code = main(["constrained", "--A", mats["A"], "--C", mats["C"], "--D", mats["D"],
                 "--trajectories", "--restarts", "2", "--out", str(out)])
    assert code in (0, 2)
    assert _rows(out / "trajectories.csv")
    assert main(["constrained", "--A", mats["A"], "--C", mats["C"], "--D", mats["D"],
                 "--method", "projected", "--out", str(out)]) == 1
    for extra in ([], ["--local"], ["--E", mats["E"]]):
        assert main(["sample-range", "--A", mats["A"], "--C", mats["C"], "--n", "50", "--svg",
                     "--out", str(out)] + extra) == 0
        assert len(_rows(out / "samples.csv")) == 50


def test_threads_env_variable(tmp_path, mats, monkeypatch):
    monkeypatch.setenv("CNRANGE_THREADS", "two")
    assert main(["radius", "--A", mats["A"], "--C", mats["C"]]) == 1
    monkeypatch.setenv("CNRANGE_THREADS", "2")
    assert main(["radius", "--A", mats["A"], "--C", mats["C"], "--restarts", "2"]) == 0
