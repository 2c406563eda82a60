import json

import pytest

from morse_ainfty.cli import EXIT_FAIL, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, load_report, main, render, table_payload
from morse_ainfty.fixtures import exterior_torus


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def payload(out):
    return load_report(out)


@pytest.mark.parametrize("d,binary,count", [(2, False, 1), (3, True, 2), (3, False, 3), (4, False, 11), (5, True, 14)])
def test_trees_counts(capsys, d, binary, count):
    argv = ["trees", str(d)] + (["--binary"] if binary else [])
    code, out, _ = run(capsys, *argv)
    assert code == EXIT_OK
    assert out.startswith("# morse-ainfty")
    assert len(payload(out)["trees"]) == count


def test_trees_text_and_nonbinary_dexterity(capsys):
    code, out, _ = run(capsys, "trees", "3")
    recs = payload(out)["trees"]
    assert [r["dexterity"] for r in recs if not r["binary"]] == [None]
    code, out, _ = run(capsys, "trees", "3", "--binary", "--format", "text")
    assert code == EXIT_OK and len(out.strip().splitlines()) == 2


@pytest.mark.parametrize("argv", [["trees", "0"], ["trees", "13"], ["signs", "10"], ["sigma-check", "--n", "0"], ["bogus"]])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_USAGE and "error" in err


def test_signs(capsys):
    code, out, _ = run(capsys, "signs", "3")
    rows = payload(out)["rows"]
    assert code == EXIT_OK and len(rows) == 2 and all(r["tau_closed"] == 1 for r in rows)
    code, out, _ = run(capsys, "signs", "2")
    assert payload(out)["rows"] == []
    assert run(capsys, "signs", "7")[0] == EXIT_OK


def test_sigma_check(capsys):
    assert run(capsys, "sigma-check", "--n", "2", "--dmax", "5")[0] == EXIT_OK
    code, out, _ = run(capsys, "sigma-check", "--n", "2", "--dmax", "5", "--degree-shift", "mu")
    assert code == EXIT_FAIL and "violations" in out


def test_output_file(capsys, tmp_path):
    target = tmp_path / "t.json"
    assert run(capsys, "trees", "4", "--binary", "-o", str(target))[0] == EXIT_OK
    assert len(load_report(target.read_text())["trees"]) == 5


# ---------------------------------------------------------------- verify

def _write_table(tmp_path, cs, name="table.json"):
    path = tmp_path / name
    path.write_text(render(table_payload(cs), ["fixture"]))
    return path


def test_verify_fixture_passes(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", str(_write_table(tmp_path, exterior_torus())))
    assert code == EXIT_OK and payload(out)["checked"] > 0


def test_verify_mutant_fails_with_witness(capsys, tmp_path):
    cs = exterior_torus()
    cs.set(2, "a", ("1", "a"), -1)
    code, out, _ = run(capsys, "verify", str(_write_table(tmp_path, cs)))
    assert code == EXIT_FAIL and "first witness" in out


def test_verify_empty_table(capsys, tmp_path):
    path = tmp_path / "empty.json"
    path.write_text(json.dumps({"basis": {"n": 1, "generators": [["x", 0]]}, "coefficients": []}))
    code, out, _ = run(capsys, "verify", str(path))
    assert code == EXIT_OK and payload(out)["checked"] == 0


@pytest.mark.parametrize("text", ["not json", json.dumps({"coefficients": []}), json.dumps([1, 2])])
def test_verify_malformed(capsys, tmp_path, text):
    path = tmp_path / "bad.json"
    path.write_text(text)
    assert run(capsys, "verify", str(path))[0] == EXIT_USAGE


def test_verify_wrong_dimension(capsys, tmp_path):
    assert run(capsys, "verify", str(_write_table(tmp_path, exterior_torus())), "--n", "3")[0] == EXIT_USAGE


# ---------------------------------------------------------------- morse-run

@pytest.fixture(scope="module")
def torus_report(tmp_path_factory):
    first = tmp_path_factory.mktemp("run") / "a.txt"
    second = tmp_path_factory.mktemp("run") / "b.txt"
    codes = [main(["morse-run", "--seed", "1", "--dmax", "2", "-o", str(p)]) for p in (first, second)]
    return codes, first.read_text(), second.read_text(), first


def test_morse_run_torus(torus_report):
    codes, text, again, _ = torus_report
    assert codes == [EXIT_OK, EXIT_OK]
    assert text == again
    rep = load_report(text)
    assert rep["cohomology"]["ranks"] == [1, 2, 1]
    assert rep["relations"]["failed"] == [] and rep["ainfty"]["pass"]
    assert rep["config"]["seed"] == 1


def test_verify_accepts_morse_report(capsys, torus_report):
    assert run(capsys, "verify", str(torus_report[3]))[0] == EXIT_OK


def test_morse_run_circle(capsys):
    code, out, _ = run(capsys, "morse-run", "--manifold", "circle", "--dmax", "2", "--traces")
    rep = payload(out)
    assert code == EXIT_OK and rep["cohomology"]["ranks"] == [1, 1]
    assert rep["traces"] and all("sign" in t for t in rep["traces"])


def test_config_file_and_overrides(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"manifold": "circle", "dmax": 1, "seed": 5}))
    code, out, _ = run(capsys, "morse-run", "--config", str(cfg), "--seed", "7")
    assert code == EXIT_OK and payload(out)["config"]["seed"] == 7


@pytest.mark.parametrize(
    "data",
    [{"colour": "red"}, {"dmax": 4}, {"n": 5}, {"degree_shift": "mu+1"}, {"epsilon": -1.0}, {"amps": [1.0, 0.0]}],
)
def test_bad_config_is_usage_error(capsys, tmp_path, data):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps(data))
    assert run(capsys, "morse-run", "--config", str(cfg))[0] == EXIT_USAGE


@pytest.mark.parametrize("data", [{"max_cond": 1.0}, {"tol_match": 1e-30}])
def test_regularity_failure_exits_3(capsys, tmp_path, data):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"dmax": 2, **data}))
    code, _, err = run(capsys, "morse-run", "--config", str(cfg))
    assert code == EXIT_NUMERIC and "--seed" in err


def test_length_bound_exits_3(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"manifold": "circle", "freqs": [2], "dmax": 3, "seed": 1, "max_length": 0.01}))
    code, _, err = run(capsys, "morse-run", "--config", str(cfg))
    assert code == EXIT_NUMERIC and "internal length" in err
