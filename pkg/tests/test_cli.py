"""Manifest parsing, report format, determinism, and CLI exit codes."""
import json

import numpy as np
import pytest

from cartanlab.cli import main
from cartanlab.errors import ManifestError
from cartanlab.manifest import (
    DEFAULT_TOLERANCES,
    load_manifest,
    parse_manifest,
    with_overrides,
)


def _manifest_dict(**over):
    doc = {
        "structures": [
            {"family": "flat", "n": 2},
            {"family": "riemannian_conformal", "n": 2, "c": -1.0},
        ],
        "params": [
            {"label": "flat-gauge", "alpha": 1.0, "beta": 2.0, "c": 0.0},
            {"label": "hyperbolic", "alpha": 1.0, "beta": 1.0, "c": -1.0},
        ],
        "sampling": {"seed": 3, "count": 6, "p_norm": [0.5, 1.5]},
    }
    doc.update(over)
    return doc


def _write(tmp_path, doc, name="m.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


# ---------------------------------------------------------------- parsing


def test_parse_minimal_manifest_fills_defaults():
    m = parse_manifest(json.dumps(_manifest_dict(sampling={"seed": 1})))
    assert [s.label for s in m.structures] == ["flat-2d", "conformal-2d-c-1"]
    assert list(m.param_labels) == ["flat-gauge", "hyperbolic"]
    assert m.sampling.count == 100 and m.sampling.p_norm == (0.5, 2.0)
    assert m.tolerances == dict(DEFAULT_TOLERANCES)
    # echo reproduces the materialized configuration
    assert m.echo["sampling"]["seed"] == 1
    assert set(m.echo["tolerances"]) == set(DEFAULT_TOLERANCES)


def test_parse_rejects_unknown_keys_with_path():
    with pytest.raises(ManifestError, match=r"structures\[1\]"):
        parse_manifest(
            json.dumps(
                _manifest_dict(
                    structures=[
                        {"family": "flat", "n": 2},
                        {"family": "flat", "n": 2, "bogus": 1},
                    ]
                )
            )
        )
    with pytest.raises(ManifestError, match=r"params\[0\]"):
        doc = _manifest_dict()
        doc["params"][0]["velocity"] = 3
        parse_manifest(json.dumps(doc))
    with pytest.raises(ManifestError, match="sampling"):
        parse_manifest(json.dumps(_manifest_dict(sampling={"seed": 1, "n_pts": 4})))


def test_parse_rejects_duplicate_labels():
    doc = _manifest_dict(
        structures=[
            {"family": "flat", "n": 2, "label": "dup"},
            {"family": "flat", "n": 3, "label": "dup"},
        ]
    )
    with pytest.raises(ManifestError, match="duplicate structure label"):
        parse_manifest(json.dumps(doc))
    doc = _manifest_dict()
    doc["params"][1]["label"] = "flat-gauge"
    with pytest.raises(ManifestError, match="duplicate params label"):
        parse_manifest(json.dumps(doc))


def test_parse_rejects_family_foreign_keys():
    doc = _manifest_dict(structures=[{"family": "flat", "n": 2, "c": -1.0}])
    with pytest.raises(ManifestError, match="only applies"):
        parse_manifest(json.dumps(doc))
    doc = _manifest_dict(
        structures=[{"family": "expression", "n": 2, "drift": [0.1, 0.0]}]
    )
    with pytest.raises(ManifestError):
        parse_manifest(json.dumps(doc))


def test_parse_rejects_infeasible_tube():
    # spherical gauge with a large beta: 2*tau exceeds 1/(c*beta^2) inside
    # the sampling shell, so the manifest must be refused up front
    doc = _manifest_dict(
        params=[{"label": "too-hot", "alpha": 1.0, "beta": 4.0, "c": 1.0}]
    )
    with pytest.raises(ManifestError, match="positivity tube"):
        parse_manifest(json.dumps(doc))


def test_parse_rejects_subeps_tolerance():
    doc = _manifest_dict(tolerances={"jet_exact": 1e-20})
    with pytest.raises(ManifestError, match="tolerances"):
        parse_manifest(json.dumps(doc))


def test_parse_rejects_bad_p_norm_and_count():
    with pytest.raises(ManifestError, match="p_norm"):
        parse_manifest(
            json.dumps(_manifest_dict(sampling={"seed": 0, "p_norm": [1.5, 0.5]}))
        )
    with pytest.raises(ManifestError, match="count"):
        parse_manifest(json.dumps(_manifest_dict(sampling={"seed": 0, "count": 0})))


def test_params_reject_c_and_v_together():
    doc = _manifest_dict(
        params=[{"label": "both", "alpha": 1.0, "beta": 1.0, "c": 0.0, "v": "t"}]
    )
    with pytest.raises(ManifestError, match="params"):
        parse_manifest(json.dumps(doc))


def test_expression_family_and_overrides():
    doc = _manifest_dict(
        structures=[
            {
                "family": "expression",
                "label": "aniso",
                "n": 2,
                "k2": "(1 + 0.5*x1*x1) * p2*p2 + p1*p1",
                "constant_curvature": None,
                "x_box": 0.5,
            }
        ]
    )
    m = parse_manifest(json.dumps(doc))
    s = m.structures[0]
    assert s.label == "aniso" and s.dim == 2 and s.x_box == 0.5
    assert s.k2([0.0, 0.0], [1.0, 2.0]) == pytest.approx(5.0)


def test_with_overrides_floors_tolerances():
    m = parse_manifest(json.dumps(_manifest_dict()))
    m2 = with_overrides(m, seed=9, count=3, tol_scale=1e-30)
    assert m2.sampling.seed == 9 and m2.sampling.count == 3
    eps = float(np.finfo(float).eps)
    assert all(tol >= eps for tol in m2.tolerances.values())
    assert m2.echo["sampling"]["seed"] == 9


def test_shipped_default_manifest_parses():
    m = load_manifest("manifests/default.json")
    assert len(m.structures) == 6 and len(m.params) == 4
    assert any(s.dim == 3 for s in m.structures)


# ---------------------------------------------------------------- verify


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, out


def test_verify_report_schema_and_exit_zero(tmp_path, capsys):
    path = _write(tmp_path, _manifest_dict())
    code, out = _run(capsys, ["verify", "--manifest", path, "--points", "4"])
    assert code == 0
    report = json.loads(out)
    assert set(report) == {"summary", "checks", "meta"}
    assert report["meta"]["format"] == "cartanlab-report-v1"
    assert report["meta"]["manifest"]["sampling"]["count"] == 4
    summary = report["summary"]
    records = report["checks"]
    assert summary["total"] == len(records)
    assert summary["passed"] + summary["failed"] == summary["total"]
    assert summary["failed"] == 0
    keys = {"check_id", "anchor", "structure", "point", "residual", "tolerance", "pass"}
    assert all(set(r) == keys for r in records)
    # deterministic ordering: by check id, then structure tag, then point index
    order = [
        (r["check_id"], r["structure"], -1 if r["point"] is None else r["point"]["index"])
        for r in records
    ]
    assert order == sorted(order)
    # both scopes are present: bare structure tags and structure|params tags
    tags = {r["structure"] for r in records}
    assert any("|" in t for t in tags) and any("|" not in t for t in tags)


def test_verify_is_deterministic_byte_for_byte(tmp_path, capsys):
    path = _write(tmp_path, _manifest_dict())
    out1 = tmp_path / "r1.json"
    out2 = tmp_path / "r2.json"
    assert main(["verify", "--manifest", path, "--points", "4", "--out", str(out1)]) == 0
    assert main(["verify", "--manifest", path, "--points", "4", "--out", str(out2)]) == 0
    capsys.readouterr()
    assert out1.read_bytes() == out2.read_bytes()


def test_verify_seed_override_changes_sample_points(tmp_path, capsys):
    path = _write(tmp_path, _manifest_dict())
    _, out_a = _run(capsys, ["verify", "--manifest", path, "--points", "3", "--seed", "1"])
    _, out_b = _run(capsys, ["verify", "--manifest", path, "--points", "3", "--seed", "2"])
    pts_a = [r["point"] for r in json.loads(out_a)["checks"] if r["point"]]
    pts_b = [r["point"] for r in json.loads(out_b)["checks"] if r["point"]]
    assert pts_a != pts_b
    assert json.loads(out_a)["meta"]["manifest"]["sampling"]["seed"] == 1


def test_verify_tol_scale_can_force_failures(tmp_path, capsys):
    doc = _manifest_dict(structures=[{"family": "flat", "n": 2}])
    path = _write(tmp_path, doc)
    code, out = _run(
        capsys,
        ["verify", "--manifest", path, "--points", "3", "--tol-scale", "1e-12"],
    )
    assert code == 1
    report = json.loads(out)
    assert report["summary"]["failed"] > 0
    failed = [r for r in report["checks"] if not r["pass"]]
    assert all(r["residual"] is None or r["residual"] > r["tolerance"] for r in failed)


def test_verify_manifest_errors_exit_two(tmp_path, capsys):
    missing = str(tmp_path / "nope.json")
    assert main(["verify", "--manifest", missing]) == 2
    garbled = tmp_path / "bad.json"
    garbled.write_text("{not json")
    assert main(["verify", "--manifest", str(garbled)]) == 2
    capsys.readouterr()


# ---------------------------------------------------------------- tensor


def test_tensor_flat_metric_spot_value(tmp_path, capsys):
    path = _write(tmp_path, _manifest_dict())
    code, out = _run(
        capsys,
        [
            "tensor",
            "--manifest", path,
            "--structure", "flat-2d",
            "--params", "flat-gauge",
            "--point", "0.1,0.2;0.7,0.4",
            "--objects", "g,G,theta,ricci",
        ],
    )
    assert code == 0
    doc = json.loads(out)
    meta = doc["meta"]
    assert meta["structure"] == "flat-2d" and meta["params"] == "flat-gauge"
    assert meta["format"] == "cartanlab-tensor-v1"
    # flat Hamiltonian, c = 0, beta = 2: horizontal block g/beta = I/2,
    # vertical block beta*g^inv = 2I
    n = 2
    g_down = np.asarray(doc["objects"]["G"]["G_down"])
    g_up_block = np.asarray(doc["objects"]["G"]["G_up"])
    assert np.abs(g_down - 0.5 * np.eye(n)).max() <= 1e-12
    assert np.abs(g_up_block - 2.0 * np.eye(n)).max() <= 1e-12
    theta = np.asarray(doc["objects"]["theta"]["matrix"])
    canon = np.block(
        [[np.zeros((n, n)), -np.eye(n)], [np.eye(n), np.zeros((n, n))]]
    )
    assert np.abs(theta - canon).max() == 0.0
    assert doc["objects"]["ricci"]["lambda_hat"] == pytest.approx(0.0, abs=1e-9)
    g_up = np.asarray(doc["objects"]["g"]["g_up"])
    assert np.abs(g_up - np.eye(n)).max() <= 1e-12
    # every reported object carries a formula anchor
    for obj in doc["objects"].values():
        assert isinstance(obj["anchor"], str) and obj["anchor"]


def test_tensor_rejects_bad_requests(tmp_path, capsys):
    path = _write(tmp_path, _manifest_dict())
    base = ["tensor", "--manifest", path, "--structure", "flat-2d",
            "--params", "flat-gauge"]
    assert main(base + ["--point", "0.1,0.2;0.7", "--objects", "g"]) == 2
    assert main(base + ["--point", "0.1,0.2;0.7,0.4", "--objects", "zeta"]) == 2
    assert main(["tensor", "--manifest", path, "--structure", "missing",
                 "--params", "flat-gauge", "--point", "0;1,1",
                 "--objects", "g"]) == 2
    capsys.readouterr()


def test_tensor_rejects_inadmissible_point(tmp_path, capsys):
    path = _write(tmp_path, _manifest_dict())
    code = main(
        [
            "tensor",
            "--manifest", path,
            "--structure", "conformal-2d-c-1",
            "--params", "hyperbolic",
            "--point", "2.0,2.0;1.0,0.0",
            "--objects", "g",
        ]
    )
    assert code == 2
    capsys.readouterr()
