import csv
import json
import math

import numpy as np

from landau.cli import COUPLE_COLUMNS, SIM_COLUMNS, main


def write_config(path, **overrides):
    cfg = {
        "kernel": {"gamma": -1.0, "eps": 1e-4},
        "particles": {"n": 32, "seed": 0},
        "time": {"dt": 1e-3, "t_end": 1e-3},
        "initial": {"type": "gaussian"},
        "output": {"dir": str(path.parent / "out"), "prefix": "run"},
    }
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return cfg


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_simulate_minimal(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    write_config(cfg_path)
    assert main(["simulate", str(cfg_path)]) == 0
    rows = read_csv(tmp_path / "out" / "run_series.csv")
    assert [*rows[0]] == SIM_COLUMNS
    assert len(rows) == 2  # t = 0 and t = dt
    assert float(rows[0]["t"]) == 0.0
    assert float(rows[1]["t"]) == 1e-3
    manifest = json.loads((tmp_path / "out" / "run_manifest.json").read_text())
    assert manifest["seeds"] == [0]
    assert "series.csv" in manifest["outputs"]


def test_simulate_full_precision_roundtrip(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    write_config(cfg_path)
    main(["simulate", str(cfg_path)])
    rows = read_csv(tmp_path / "out" / "run_series.csv")
    # 17 significant digits round-trip doubles exactly
    m2 = float(rows[0]["m2"])
    assert ("%.17g" % m2) == rows[0]["m2"]
    assert math.isfinite(m2)


def test_simulate_determinism(tmp_path):
    c1 = tmp_path / "a.json"
    write_config(c1)
    main(["simulate", str(c1)])
    first = (tmp_path / "out" / "run_series.csv").read_text()
    main(["simulate", str(c1)])
    assert (tmp_path / "out" / "run_series.csv").read_text() == first


def test_config_errors_exit_1(tmp_path, capsys):
    out_dir = tmp_path / "out"
    bad_dt = tmp_path / "bad_dt.json"
    write_config(bad_dt, time={"dt": 0.0, "t_end": 1.0})
    assert main(["simulate", str(bad_dt)]) == 1
    assert not out_dir.exists()  # no outputs on config error
    assert "config error" in capsys.readouterr().err

    unknown = tmp_path / "unknown.json"
    write_config(unknown, extra_section={"x": 1})
    assert main(["simulate", str(unknown)]) == 1
    assert "extra_section" in capsys.readouterr().err

    bad_gamma = tmp_path / "bad_gamma.json"
    write_config(bad_gamma, kernel={"gamma": 0.5})
    assert main(["simulate", str(bad_gamma)]) == 1

    missing = tmp_path / "nonexistent.json"
    assert main(["simulate", str(missing)]) == 1

    invalid = tmp_path / "invalid.json"
    invalid.write_text("{ not json }")
    assert main(["simulate", str(invalid)]) == 1
    err = capsys.readouterr().err
    assert f"{invalid}:1:" in err  # line-numbered message


def test_simulate_blowup_exit_2(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    write_config(
        cfg_path,
        kernel={"gamma": -2.5, "eps": 1e-300},
        particles={"n": 64, "seed": 0},
        time={"dt": 0.5, "t_end": 5.0},
        initial={"type": "uniform_ball", "center": [0, 0, 0], "radius": 1e-210},
    )
    assert main(["simulate", str(cfg_path)]) == 2
    rows = read_csv(tmp_path / "out" / "run_series.csv")
    assert rows[-1]["flags"] == "blowup"
    assert rows[-1]["m2"] == "nan"


def test_couple_minimal(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    write_config(
        cfg_path,
        time={"dt": 1e-3, "t_end": 0.01},
        initial_b={"type": "gaussian", "mean": [0.01, 0, 0]},
        coupling={"recouple_every": 5, "seeds": [0, 1]},
    )
    assert main(["couple", str(cfg_path)]) == 0
    rows = read_csv(tmp_path / "out" / "run_coupled.csv")
    assert [*rows[0]] == COUPLE_COLUMNS
    assert len(rows) == 11
    report = json.loads((tmp_path / "out" / "run_stability.json").read_text())
    assert report["seeds"] == [0, 1]
    assert report["dominance_ok"] is True
    assert report["trivial"] is False
    assert all(s is None or np.isfinite(s) for s in report["slopes"])


def test_couple_trivial_case(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    write_config(
        cfg_path,
        time={"dt": 1e-3, "t_end": 0.005},
        initial_b={"type": "gaussian"},
        coupling={"init": "common"},
    )
    assert main(["couple", str(cfg_path)]) == 0
    report = json.loads((tmp_path / "out" / "run_stability.json").read_text())
    assert report["trivial"] is True
    assert report["w2sq_initial"] == [0.0]


def test_couple_requires_initial_b(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    write_config(cfg_path)
    assert main(["couple", str(cfg_path)]) == 1


def test_mixture_config(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    write_config(
        cfg_path,
        initial={
            "type": "mixture",
            "weights": [0.5, 0.5],
            "components": [
                {"type": "gaussian", "mean": [-2, 0, 0]},
                {"type": "gaussian", "mean": [2, 0, 0]},
            ],
        },
    )
    assert main(["simulate", str(cfg_path)]) == 0


def test_validate_passes(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_validate_detects_injected_fault(capsys):
    assert main(["validate", "--inject-fault", "b-sign"]) == 3
    captured = capsys.readouterr()
    assert "momentum_conservation" in captured.err


def test_oracle_maxwell(capsys):
    code = main(["oracle", "maxwell",
                 "--sigma0", "2", "0", "0", "0", "1", "0", "0", "0", "1",
                 "--t", "0.5"])
    assert code == 0
    rows = [[float(x) for x in line.split()] for line in capsys.readouterr().out.splitlines()]
    got = np.array(rows)
    iso = (4.0 / 3.0) * np.eye(3)
    expected = iso + np.exp(-3.0) * (np.diag([2.0, 1.0, 1.0]) - iso)
    assert np.max(np.abs(got - expected)) < 1e-15
