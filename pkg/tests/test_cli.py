import csv
import hashlib
import json

import numpy as np
import pytest

from harmonic_otto.cli import SIMULATE_COLUMNS, SWEEP_COLUMNS, fmt, main
from harmonic_otto.config import ConfigError, RunConfig, load_config, parse_config_text


def _run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_config_parsing(tmp_path):
    text = "# fig 1\nomega_h = 2.5\nT_h=6   # hotter\n\nadiabat_mode = exact\n"
    assert parse_config_text(text) == {"omega_h": 2.5, "T_h": 6.0, "adiabat_mode": "exact"}
    p = tmp_path / "run.cfg"
    p.write_text(text)
    cfg = load_config(str(p), ["T_h=7"])
    assert cfg.omega_h == 2.5 and cfg.T_h == 7.0 and cfg.adiabat_mode == "exact"


def test_config_rejects_bad_input():
    with pytest.raises(ConfigError):
        parse_config_text("nonsense_key = 1")
    with pytest.raises(ConfigError):
        parse_config_text("omega_h")
    with pytest.raises(ConfigError):
        parse_config_text("n = many")
    with pytest.raises(ConfigError):
        RunConfig(adiabat_mode="linear")
    with pytest.raises(ConfigError):
        RunConfig(omega_h=0.5, omega_c=1.0)


def test_preset_then_overrides():
    cfg = load_config(None, ["preset=fig4", "gamma_h=0.03", "gamma_c=0.03"])
    assert cfg.omega_h == 0.05 and cfg.T_c == 0.25
    assert cfg.gamma_h == 0.03
    with pytest.raises(ConfigError):
        load_config(None, ["preset=fig42"])


def test_explain_lists_every_key(capsys):
    rc, out, _ = _run(capsys, "analyze", "T_h=4", "--explain")
    assert rc == 0
    keys = [line.split(" = ")[0] for line in out.splitlines()]
    assert keys == list(RunConfig.__dataclass_fields__)
    assert "T_h = 4.0   (default 5.0)" in out


def test_format_is_locale_free():
    assert fmt(0.1) == "0.1"
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(np.float64(2.0)) == "2"
    assert fmt(7) == "7"
    assert fmt("hot") == "hot"


def test_simulate_csv(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    rc, _, _ = _run(capsys, "simulate", "dt=0.05", "-o", str(out))
    assert rc == 0
    raw = out.read_bytes()
    assert b"\r\n" not in raw
    rows = list(csv.reader(raw.decode().splitlines()))
    assert rows[0] == SIMULATE_COLUMNS
    data = rows[1:]
    first = np.array([float(x) for i, x in enumerate(data[0]) if i != 1])
    last = np.array([float(x) for i, x in enumerate(data[-1]) if i != 1])
    # one period: state and entropies return to the start
    np.testing.assert_allclose(first[1:8], last[1:8], rtol=1e-8, atol=1e-10)
    assert {r[1] for r in data} == {"hot", "hc", "cold", "ch"}
    S_vn = np.array([float(r[6]) for r in data])
    S_e = np.array([float(r[7]) for r in data])
    assert np.all(S_e >= S_vn - 1e-9)


def test_simulate_units_omega_c(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    _run(capsys, "simulate", "omega_h=4", "omega_c=2", "T_h=10", "T_c=2", "-o", str(a))
    _run(capsys, "simulate", "omega_h=4", "omega_c=2", "T_h=10", "T_c=2", "units=omega_c", "-o", str(b))
    ra = list(csv.reader(a.read_text().splitlines()))[1]
    rb = list(csv.reader(b.read_text().splitlines()))[1]
    assert float(rb[3]) == pytest.approx(float(ra[3]) / 2)


def test_limit_cycle_json(capsys):
    rc, out, _ = _run(capsys, "limit-cycle")
    assert rc == 0
    rep = json.loads(out)
    assert set(rep["corners"]) == {"A", "B", "C", "D"}
    m = rep["metrics"]
    assert abs(m["W"] + m["Q_h"] + m["Q_c"]) < 1e-10
    assert m["W_f"] >= 0 and m["dS_u"] >= 0
    assert 0 < rep["spectral_radius"] < 1
    assert rep["convergence"]["cycles_from_cold_equilibrium"] <= 60
    assert len(rep["cycle_map"]["matrix"]) == 3


def test_analyze_json(capsys):
    rc, out, _ = _run(capsys, "analyze", "T_h=4", "T_c=1")
    assert rc == 0
    rep = json.loads(out)
    eff = rep["efficiency"]
    assert eff["eta_q"] == pytest.approx(0.5)
    assert eff["eta_s"] == pytest.approx(0.2)
    assert eff["eta_c"] == pytest.approx(0.75)
    assert rep["sudden"]["constructive"] == pytest.approx(rep["sudden"]["printed_half_argument"])
    assert len(rep["P_q"]["tau"]) == len(rep["P_q"]["P"])


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_sweep_deterministic(tmp_path, capsys):
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    args = ["sweep", "preset=fig4", "n=60", "seed=1"]
    assert _run(capsys, *args, "-o", str(a))[0] == 0
    assert _run(capsys, *args, "-o", str(b))[0] == 0
    assert _run(capsys, *args, "workers=2", "-o", str(c))[0] == 0
    assert _sha(a) == _sha(b) == _sha(c)
    rows = list(csv.reader(a.read_text().splitlines()))
    assert rows[0] == SWEEP_COLUMNS
    assert [int(r[0]) for r in rows[1:]] == list(range(60))


def test_sweep_nonfinite_json_is_null(capsys):
    rc, out, _ = _run(capsys, "limit-cycle", "omega_h=8", "gamma_h=0.5", "gamma_c=0.5")
    assert rc == 0
    rep = json.loads(out)
    assert rep["metrics"]["eta"] is None
    assert rep["metrics"]["is_engine"] is False


def test_exit_codes(tmp_path, capsys):
    assert _run(capsys, "analyze", "bogus=1")[0] == 2
    assert _run(capsys, "analyze", "-c", str(tmp_path / "missing.cfg"))[0] == 2
    rc, _, err = _run(capsys, "limit-cycle", "gamma_h=0", "gamma_c=0")
    assert rc == 3 and "solver error" in err


def test_oracle_check(capsys):
    rc, out, _ = _run(capsys, "oracle-check")
    rep = json.loads(out)
    assert rc == 0 and rep["pass"]
    assert all(r["rel_error"] < 1e-5 for r in rep["corners"].values())


def test_oracle_check_failure_exit(capsys):
    rc, out, _ = _run(capsys, "oracle-check", "oracle_rtol=1e-14")
    assert rc == 4
    assert json.loads(out)["pass"] is False
