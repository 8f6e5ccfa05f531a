import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from nlsgraph import cli

SMALL = """
[scenario]
kind = interval_wave
description = small test window

[interval]
beta = -2
p = 1
half_period = 1.09868
both_ends = true

[window]
lambda_min = 0
lambda_max = 5
t_min = 1.3
t_max = 1.7
n_lambda = 5
n_t = 3

[trace]
lines = 1
scan = 30
step = 0.02
"""


@pytest.fixture
def small(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL)
    return path


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_help_lists_presets(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for name in ("star_b5", "star_b3", "star_b1", "interval_flat", "interval_p3", "interval_p1"):
        assert name in out
    assert cli.DIGITS_ENV in out


def test_missing_config(capsys, tmp_path):
    code, _, err = run(capsys, "sweep", str(tmp_path / "nope.ini"), "-o", str(tmp_path))
    assert code == 2
    assert json.loads(err)["code"] == "config_not_found"


@pytest.mark.parametrize("edit", [("n_t = 3", "n_t = 1"), ("lambda_max = 5", "lambda_max = inf"),
                                  ("kind = interval_wave", "kind = torus"), ("half_period = 1.09868", "")])
def test_invalid_config(capsys, tmp_path, edit):
    path = tmp_path / "bad.ini"
    path.write_text(SMALL.replace(*edit))
    code, _, err = run(capsys, "sweep", str(path), "-o", str(tmp_path))
    assert code == 2
    assert json.loads(err)["code"] == "config_invalid"


def test_index_needs_star(capsys, small, tmp_path):
    code, _, err = run(capsys, "index", str(small), "-o", str(tmp_path))
    assert code == 2
    assert json.loads(err)["code"] == "unsupported_for_kind"


def test_computation_error_exit_1(capsys, tmp_path):
    path = tmp_path / "short.ini"
    # half-periods of phi'' + 2 phi + phi^3 = 0 stay below pi / sqrt(2)
    path.write_text(SMALL.replace("beta = -2", "beta = 2").replace("half_period = 1.09868", "half_period = 3.0"))
    code, _, err = run(capsys, "wave", str(path), "-o", str(tmp_path))
    assert code == 1
    assert json.loads(err)["error"] == "TargetOutOfRange"


def test_wave_export(capsys, tmp_path):
    code, out, _ = run(capsys, "wave", "star_b1", "-o", str(tmp_path))
    assert code == 0
    lengths = json.loads(out)["lengths"]
    assert np.allclose(lengths, (0.575249, 0.262628, 0.573694), atol=2e-3)
    rec = json.loads((tmp_path / "wave.json").read_text())
    assert rec["lengths"] == lengths


def test_sweep_csv_and_determinism(capsys, small, tmp_path, monkeypatch):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert run(capsys, "sweep", str(small), "-o", str(a), "--threads", "1")[0] == 0
    assert run(capsys, "sweep", str(small), "-o", str(b), "--threads", "1")[0] == 0
    assert run(capsys, "sweep", str(small), "-o", str(c), "--threads", "2")[0] == 0
    text = (a / "sweep.csv").read_bytes()
    assert text == (b / "sweep.csv").read_bytes() == (c / "sweep.csv").read_bytes()
    lines = text.decode().splitlines()
    assert lines[0] == "lambda,t,det,intersect_dim"
    assert len(lines) == 1 + 5 * 3
    lam, t, det, dim = lines[6].split(",")
    assert float(lam) == 0.0 and float(t) == 1.5 and dim in ("0", "1", "2")
    # 17 significant digits round-trip exactly
    assert det == format(float(det), ".17g")
    monkeypatch.setenv(cli.DIGITS_ENV, "6")
    assert run(capsys, "sweep", str(small), "-o", str(a))[0] == 0
    det6 = (a / "sweep.csv").read_text().splitlines()[6].split(",")[2]
    assert det6 == format(float(det), ".6g")
    assert abs(float(det6) - float(det)) <= 1e-5 * abs(float(det))
    ET.parse(a / "sweep.svg")


def test_bad_precision_env(capsys, small, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.DIGITS_ENV, "forty")
    code, _, err = run(capsys, "sweep", str(small), "-o", str(tmp_path))
    assert code == 2 and json.loads(err)["code"] == "config_invalid"


def test_curves_output(capsys, small, tmp_path):
    code, out, _ = run(capsys, "curves", str(small), "-o", str(tmp_path))
    assert code == 0
    summary = json.loads(out)
    assert len(summary["curves"]) >= 1
    first = (tmp_path / summary["curves"][0]["file"]).read_text().splitlines()
    assert first[0] == "lambda,t,residual"
    pts = np.array([[float(x) for x in row.split(",")] for row in first[1:]])
    assert np.all(pts[:, 2] < 1e-8)
    root = ET.parse(tmp_path / "curves.svg").getroot()
    assert root.get("viewBox") == "0 0 640 480"
    assert any(el.tag.endswith("polyline") for el in root.iter())


def test_svg_plot_is_well_formed(tmp_path):
    cli.svg_plot(tmp_path / "p.svg", [np.array([[0, 0], [1, 1]]), np.zeros((0, 2))], (0, 1), (0, 1), title="x")
    root = ET.parse(tmp_path / "p.svg").getroot()
    assert sum(el.tag.endswith("polyline") for el in root.iter()) == 1
    assert sum(el.tag.endswith("text") for el in root.iter()) >= 10


def test_verify_json(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "-o", str(tmp_path))
    assert code == 0
    data = json.loads(out)
    assert data["all_pass"] and data["seed"] == 0
    assert set(data["checks"][0]) == {"check_name", "residual", "tolerance", "pass", "seed"}
    assert json.loads((tmp_path / "verify.json").read_text()) == data


def test_index_preset_b1(capsys, tmp_path):
    code, out, _ = run(capsys, "index", "star_b1", "-o", str(tmp_path))
    assert code == 0
    data = json.loads(out)
    assert (data["p_c"], data["q_c"], data["c"], data["verdict"]) == (1, 0, 0, "unstable")
    assert set(data) == {"p_c", "q_c", "tpp", "tpp_err", "c", "bound", "positive_real_eigs", "verdict"}


def test_vk_preset_b5(capsys, tmp_path):
    code, out, _ = run(capsys, "vk", "star_b5", "-o", str(tmp_path))
    assert code == 0
    data = json.loads(out)
    assert data["verdict"] == "spectrally_stable_on_iR" and data["tpp"] < 0
