"""Command-line behavior: exit codes, JSON payloads, determinism.

Everything runs through ``cli.main`` in-process; one subprocess test
covers the module entry point.
"""

import json
import subprocess
import sys

import pytest

from superhaar import cli


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_integrate_exact_json(capsys):
    code, out, err = run_cli(
        capsys,
        "integrate", "--spec", "u:p=1,q=1", "--monomial", "X[1,1] * Xs[1,1]",
    )
    assert code == 0 and err == ""
    payload = json.loads(out)
    assert payload["spec"] == "u:p=1,q=1"
    assert payload["monomial"] == "X[1,1] * Xs[1,1]"
    assert payload["mode"] == "exact-phase"
    assert payload["estimate"]["re"] == 2.0
    assert payload["estimate"]["re_exact"] == "2"
    assert payload["stderr"] == 0.0


def test_integrate_mc_is_deterministic_per_seed(capsys):
    argv = (
        "integrate", "--spec", "osp:m=1,n=1", "--monomial", "X[1,1]^2",
        "--mode", "mc", "--samples", "64", "--seed", "9",
    )
    code_a, out_a, _ = run_cli(capsys, *argv)
    code_b, out_b, _ = run_cli(capsys, *argv)
    assert code_a == code_b == 0
    assert out_a == out_b
    payload = json.loads(out_a)
    assert payload["mode"] == "monte-carlo"
    assert payload["samples"] == 64
    assert payload["estimate"]["re"] == -0.5


def test_integrate_rejects_bad_monomial(capsys):
    code, out, err = run_cli(
        capsys, "integrate", "--spec", "u:p=1,q=1", "--monomial", "Z[1,1]"
    )
    assert code == 2
    assert out == ""
    assert err.startswith("error:")


def test_integrate_exact_boundary_points_to_sampling(capsys):
    code, _, err = run_cli(
        capsys, "integrate", "--spec", "osp:m=1,n=1", "--monomial", "X[1,1]^2"
    )
    assert code == 2
    assert "sampling mode" in err


@pytest.mark.parametrize(
    "bad",
    ["weird:a=1,b=2", "osp:m=1", "osp:m=x,n=1", "u:m=1,n=1", "osp"],
)
def test_malformed_spec_exits_2(bad):
    with pytest.raises(SystemExit) as exc:
        cli.main(["integrate", "--spec", bad, "--monomial", "X[1,1]"])
    assert exc.value.code == 2


def test_seed_env_fallback(capsys, monkeypatch):
    monkeypatch.delenv("SUPERHAAR_SEED", raising=False)
    _, by_flag, _ = run_cli(
        capsys, "sample", "--spec", "u:p=2,q=1", "--count", "2", "--seed", "5"
    )
    monkeypatch.setenv("SUPERHAAR_SEED", "5")
    _, by_env, _ = run_cli(capsys, "sample", "--spec", "u:p=2,q=1", "--count", "2")
    assert by_flag == by_env
    monkeypatch.delenv("SUPERHAAR_SEED")
    _, out_default, _ = run_cli(capsys, "sample", "--spec", "u:p=2,q=1", "--count", "2")
    assert json.loads(out_default)["seed"] == 0


def test_table_counts_and_cell_shape(capsys):
    code, out, _ = run_cli(capsys, "table", "u11", "--max-exp", "2")
    assert code == 0
    payload = json.loads(out)
    assert payload["table"] == "u11"
    assert payload["cells_total"] == 1296
    assert payload["matches"] == 1270
    assert payload["mismatches"] == 26
    cell = payload["cells"][0]
    assert set(cell) == {"alpha", "beta", "computed", "predicted", "match"}
    assert cell["computed"].keys() == {"re", "im"}


def test_verify_all_u11_is_green_and_exact(capsys):
    code, out, _ = run_cli(
        capsys, "verify", "all", "--spec", "u:p=1,q=1", "--trials", "2"
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["pass"] is True
    anchors = {c["anchor"] for c in payload["checks"]}
    assert "defining-relations" in anchors
    assert "structure-constants" in anchors
    inv = [c for c in payload["checks"] if c["anchor"] == "odd-derivation-annihilation"]
    # the u(1,1) invariance path is fully exact, so it reports a count
    assert inv and "checked" in inv[0]


def test_verify_density_clean_and_corrupt(capsys):
    code, out, _ = run_cli(capsys, "verify", "density", "--spec", "osp:m=1,n=1")
    assert code == 0
    anchors = {c["anchor"] for c in json.loads(out)["checks"]}
    assert anchors == {
        "determinant-derivative",
        "inverse-root-equation",
        "n1-closed-form",
        "solution-space-dimension",
    }

    code, out, _ = run_cli(
        capsys,
        "verify", "density", "--spec", "osp:m=1,n=1", "--corrupt-density",
    )
    assert code == 1
    failed = {c["anchor"] for c in json.loads(out)["checks"] if not c["pass"]}
    assert failed == {"inverse-root-equation", "n1-closed-form"}


def test_verify_charts_suite(capsys):
    code, out, _ = run_cli(
        capsys,
        "verify", "charts", "--spec", "uosp:m=1,n=1", "--trials", "2", "--seed", "3",
    )
    assert code == 0
    checks = json.loads(out)["checks"]
    assert [c["anchor"] for c in checks] == [
        "defining-relations",
        "antipode-inverse",
        "group-law-roundtrip",
    ]
    assert all(c["max_residual"] <= 1e-10 for c in checks)


def test_verify_invariance_mc_path(capsys):
    code, out, _ = run_cli(
        capsys,
        "verify", "invariance", "--spec", "osp:m=1,n=1",
        "--samples", "1500", "--seed", "7",
    )
    assert code == 0
    checks = json.loads(out)["checks"]
    ann = next(c for c in checks if c["anchor"] == "odd-derivation-annihilation")
    assert "worst_sigma" in ann and ann["pass"]


def test_sample_residuals_and_shapes(capsys):
    code, out, _ = run_cli(
        capsys, "sample", "--spec", "uosp:m=2,n=1", "--count", "3", "--seed", "1"
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["count"] == 3
    assert payload["residuals"]["x_factor"] < 1e-10
    assert payload["residuals"]["y_factor"] < 1e-10
    # m = 2 orthogonal block, 2n = 2 symplectic block, entries as [re, im]
    assert len(payload["first_x"]) == 2 and len(payload["first_x"][0]) == 2
    assert len(payload["first_y"]) == 2
    assert len(payload["first_x"][0][0]) == 2


def test_out_flag_writes_file(capsys, tmp_path):
    target = tmp_path / "result.json"
    code, out, _ = run_cli(
        capsys,
        "integrate", "--spec", "u:p=1,q=1", "--monomial", "X[1,1] * Xs[1,1]",
        "--out", str(target),
    )
    assert code == 0
    assert out == ""
    on_disk = json.loads(target.read_text())
    assert on_disk["estimate"]["re_exact"] == "2"


def test_module_entry_point():
    proc = subprocess.run(
        [
            sys.executable, "-m", "superhaar.cli",
            "integrate", "--spec", "u:p=1,q=1", "--monomial", "Xs[2,2] * X[2,2]",
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["estimate"]["re_exact"] == "-2"
