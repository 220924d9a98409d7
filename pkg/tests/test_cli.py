import json
from fractions import Fraction

import pytest

import main
from main import EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_OK, render, run


def _run(capsys, *argv):
    status = run(list(argv))
    out, err = capsys.readouterr()
    return status, out, err


def test_orbits(capsys):
    status, out, _ = _run(capsys, "orbits", "--n", "3")
    assert status == EXIT_OK
    document = json.loads(out)
    assert document["schema_version"] == "1.0"
    assert document["failures"] == []
    assert [o["partition"] for o in document["orbits"]] == ["(3)", "(2,1)", "(1,1,1)"]
    by_partition = {o["partition"]: o for o in document["orbits"]}
    assert by_partition["(3)"]["c_global"] == "divergent"
    assert by_partition["(2,1)"]["richardson_count"] == 2
    assert document["provenance"] == {"command": "orbits", "arguments": {"command": "orbits", "n": 3}}


def test_output_is_deterministic(capsys):
    _, first, _ = _run(capsys, "richardson", "--partition", "3,1")
    _, second, _ = _run(capsys, "richardson", "--partition", "3,1")
    assert first == second


def test_richardson(capsys):
    status, out, _ = _run(capsys, "richardson", "--partition", "2,2")
    assert status == EXIT_OK
    document = json.loads(out)
    assert document["norm_quotient"] == 2
    assert [f["size"] for f in document["fibers"]] == [2]


def test_invalid_partition(capsys):
    status, out, err = _run(capsys, "richardson", "--partition", "0,1")
    assert status == EXIT_ERROR
    assert out == ""
    assert json.loads(err)["failures"][0]["error"] == "InvalidPartitionException"


def test_invalid_place(capsys):
    status, _, err = _run(capsys, "local-j", "--r", "2", "--d", "1", "--place", "p4")
    assert status == EXIT_ERROR
    assert "InvalidPlaceException" in err


def test_missing_argument_exits_through_argparse(capsys):
    with pytest.raises(SystemExit) as info:
        run(["orbits"])
    assert info.value.code == 2


def test_weights(capsys):
    status, out, _ = _run(capsys, "weights", "--g", "1, 0, 0; 1/2, 1, 0; 0, 3, 2", "--place", "p2", "--partition", "2,1")
    assert status == EXIT_OK
    document = json.loads(out)
    assert document["orthogonal"]
    assert all(wall["agrees"] for wall in document["walls"])
    assert len(document["values"]) == 2


def test_weights_with_a_wrong_size(capsys):
    status, _, _ = _run(capsys, "weights", "--g", "1, 0; 0, 1", "--place", "inf", "--partition", "2,1")
    assert status == EXIT_ERROR


def test_weights_of_a_singular_matrix(capsys):
    status, out, _ = _run(capsys, "weights", "--g", "1, 2, 0; 2, 4, 0; 0, 0, 1", "--place", "p2", "--partition", "2,1")
    assert status == EXIT_ERROR
    assert json.loads(out)["failures"][0]["error"] == "SingularMatrixException"


@pytest.mark.parametrize("error", [ValueError("The valuation of 0 is infinite"), ZeroDivisionError("division by zero")])
def test_arithmetic_errors_during_dispatch(capsys, monkeypatch, error):
    def _raise(args):
        raise error

    monkeypatch.setattr(main, "dispatch", _raise)
    status, out, _ = _run(capsys, "orbits", "--n", "2")
    assert status == EXIT_ERROR
    document = json.loads(out)
    assert document["failures"] == [{"error": type(error).__name__, "message": str(error)}]
    assert document["provenance"]["command"] == "orbits"


def test_local_j(capsys):
    status, out, _ = _run(capsys, "local-j", "--r", "2", "--d", "1", "--place", "p2", "--depth", "8")
    assert status == EXIT_OK
    document = json.loads(out)
    assert document["gl2"]["residual"] < 1e-12
    assert document["c_x"]["exact"] == "2"
    assert "oracle" in document


def test_local_j_real_place(capsys):
    status, out, _ = _run(capsys, "local-j", "--r", "3", "--d", "1", "--place", "inf")
    assert status == EXIT_OK
    assert "oracle" not in json.loads(out)


def test_coefficients(capsys):
    status, out, _ = _run(capsys, "coefficients", "--partition", "2,1", "--S", "inf,2", "--cutoff", "500")
    assert status == EXIT_OK
    document = json.loads(out)
    assert document["S"] == ["inf", "p2"]
    assert len(document["development"]) == 2
    assert document["provenance"]["arguments"]["S"] == ["inf", "p2"]


def test_coefficients_of_a_non_simple_orbit(capsys):
    status, _, _ = _run(capsys, "coefficients", "--partition", "2,2", "--S", "inf")
    assert status == EXIT_ERROR


def test_gm_check(capsys):
    status, out, _ = _run(capsys, "gm-check", "--n", "3", "--trials", "2", "--seed", "5", "--suite", "volume")
    assert status == EXIT_OK
    assert [s["name"] for s in json.loads(out)["suites"]] == ["volume"]


def test_solve_conjugator(capsys):
    status, out, _ = _run(capsys, "solve-conjugator", "--partition", "3,1", "--trials", "3", "--seed", "2")
    assert status == EXIT_OK
    assert json.loads(out)["solved"] == 3


def test_output_file(tmp_path, capsys):
    target = tmp_path / "orbits.json"
    status, out, _ = _run(capsys, "--output", str(target), "orbits", "--n", "2")
    assert status == EXIT_OK
    assert out == ""
    assert json.loads(target.read_text())["n"] == 2


def test_render_uses_full_precision():
    text = render({"x": 0.1, "f": float("inf"), "ratio": Fraction(1, 3)})
    document = json.loads(text)
    assert document["x"] == 0.1
    assert document["f"] == "inf"
    assert document["ratio"] == "1/3"
    assert "0.10000000000000001" in text


def test_exit_codes_are_distinct():
    assert len({EXIT_OK, EXIT_CHECK_FAILED, EXIT_ERROR}) == 3
