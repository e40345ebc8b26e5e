import json
import re

import pytest

from tcenter.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def test_field_cases(capsys, tmp_path):
    code, out, _ = run(capsys, "field", "pair_k2", "--json")
    rep = json.loads(out)
    assert code == 0 and rep["case"] == "NF1" and rep["nabla"] == [[0, 0], [0, 0]]
    assert rep["coprime"] is True
    code, out, _ = run(capsys, "field", "circle", "--json")
    assert code == 0 and json.loads(out)["case"] == "NF3"
    code, _, err = run(capsys, "field", write(tmp_path, "src.json", {"F1": "x", "F2": "y"}))
    assert code == 3 and "not a topological center" in err


def test_field_parse_error(capsys, tmp_path):
    code, _, _ = run(capsys, "field", write(tmp_path, "bad.json", {"F1": "x +", "F2": "y"}))
    assert code == 2
    code, _, _ = run(capsys, "field", str(tmp_path / "missing.json"))
    assert code == 2


def test_period_schema(capsys):
    code, out, _ = run(capsys, "period", "circle", "--levels", "1,0.1,0.01")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "level,x,y,theta,residual"
    thetas = [float(r.split(",")[3]) for r in lines[1:]]
    assert max(thetas) - min(thetas) < 1e-8


def test_period_increases_for_nf1(capsys):
    code, out, _ = run(capsys, "period", "pair_k2", "--levels", "1,0.1,0.01,0.001")
    thetas = [float(r.split(",")[3]) for r in out.strip().splitlines()[1:]]
    assert code == 0 and all(a < b for a, b in zip(thetas, thetas[1:]))


def test_flow_csv(capsys):
    code, out, _ = run(capsys, "flow", "rotation", "--z", "1,0", "--t", "1", "--n", "4")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "t,x,y" and len(lines) == 6


def test_numbers_printed_with_17_digits(capsys):
    _, out, _ = run(capsys, "flow", "rotation", "--z", "1,0", "--t", "1", "--n", "1")
    last = out.strip().splitlines()[-1].split(",")
    assert float(last[1]) == pytest.approx(0.5403023058681398, abs=1e-9)
    assert len(re.sub(r"[-.]|e.*", "", last[1]).lstrip("0")) >= 15


def test_shift_recover_roundtrip(capsys):
    code, out, _ = run(capsys, "shift", "recover", "rotation", "varying_shift", "--json")
    rep = json.loads(out)
    assert code == 0 and rep["sup_error"] <= 1e-6


def test_shift_recover_identity(capsys, tmp_path):
    code, _, _ = run(capsys, "--out", str(tmp_path), "shift", "recover", "rotation", "identity")
    rows = (tmp_path / "shift.csv").read_text().strip().splitlines()
    assert code == 0 and rows[0] == "level,angle,lambda"
    assert all(abs(float(r.split(",")[2])) <= 1e-9 for r in rows[1:])


def test_shift_recover_not_orbit_preserving(capsys, tmp_path):
    m = write(tmp_path, "scale.json", [{"kind": "linear", "m": [["2", "0"], ["0", "1"]]}])
    code, _, err = run(capsys, "shift", "recover", "rotation", m)
    assert code == 4 and "not orbit-preserving" in err


def test_deform_report_and_frames(capsys, tmp_path):
    code, _, _ = run(capsys, "--out", str(tmp_path), "deform", "rotation", "varying_shift", "--frames", "3")
    assert code == 0
    rep = json.loads((tmp_path / "deform.json").read_text())
    assert rep["boundary_residual"] <= 1e-10
    assert sorted(p.name for p in tmp_path.glob("frame_*.svg")) == ["frame_000.svg", "frame_001.svg", "frame_002.svg"]


def test_deform_criterion_violation(capsys):
    code, _, _ = run(capsys, "deform", "rotation", "varying_shift", "--lambda-scale", "40")
    assert code == 5


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "--json")
    rep = json.loads(out)
    assert code == 0 and rep["passed"]
    assert all({"name", "value", "bound"} <= set(c) for c in rep["checks"])


def test_bad_config(capsys):
    assert run(capsys, "--tol", "-1", "verify")[0] == 2
    assert run(capsys, "verify", "--tol", "-1")[0] == 2
    assert run(capsys, "--grid", "4x4", "verify")[0] == 2
    assert run(capsys, "nonsense")[0] == 2


def test_plot_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, "--out", str(a), "plot", "circle")[0] == 0
    assert run(capsys, "--out", str(b), "plot", "circle")[0] == 0
    svg = (a / "portrait.svg").read_bytes()
    assert svg == (b / "portrait.svg").read_bytes()
    assert svg.count(b"<polyline") + svg.count(b"<path") == 4


def test_outputs_are_deterministic(capsys, tmp_path):
    outs = []
    for d in ("a", "b"):
        run(capsys, "--out", str(tmp_path / d), "--seed", "3", "shift", "recover", "pair_k2", "constant_shift")
        outs.append((tmp_path / d / "shift.csv").read_bytes())
    assert outs[0] == outs[1]
