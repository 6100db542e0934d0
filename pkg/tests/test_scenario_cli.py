import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supercrit.cli import main
from supercrit.runner import EXIT_SOFT, run_scenario
from supercrit.scenario import (
    ScenarioError,
    ScenarioWarning,
    initial_state,
    parse_scenario,
    parse_text,
)

MINIMAL = "[model]\nd = 3\np = 6\n"


def quick(name, extra=""):
    return parse_text(MINIMAL + "[grid]\nN = 128\n[run]\nT = 1\n" + extra, name=name)


def test_minimal_defaults():
    sc = parse_text(MINIMAL)
    assert sc.grid.N == 1024 and sc.grid.R_max == 20 and sc.run.cfl_factor == 0.5
    assert sc.run.record_stride == 4 and sc.run.blowup_threshold == 1e6
    assert sc.data.family == "gaussian" and sc.data.amplitude == 1 and sc.data.width == 1
    assert sc.params.s_c == pytest.approx(7 / 6)


def test_window_warning():
    with pytest.warns(ScenarioWarning, match=r"outside theorem window \(4, inf\)"):
        sc = parse_text("[model]\nd = 3\np = 3\n")
    assert sc.warnings


def test_reach_warning():
    with pytest.warns(ScenarioWarning, match="R_max"):
        parse_text(MINIMAL + "[run]\nT = 30\n")


@pytest.mark.parametrize("text,line", [
    ("[model]\nd = 2\n", 2),
    ("[model]\nd = 3\n\n# c\nbogus = 1\n", 5),
    ("[grid]\nN = many\n", 2),
    ("[nowhere]\n", 1),
    ("d = 3\n", 1),
    ("[model]\nd = 3\nd = 4\n", 3),
    ("[data]\nfamily = square\n", 2),
    ("[run]\nforcing = maybe\n", 2),
    ("[run]\ncfl_factor = 1.5\n", 2),
])
def test_errors_carry_line_numbers(text, line):
    with pytest.raises(ScenarioError) as info:
        parse_text(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_file_name_becomes_run_name(tmp_path):
    path = tmp_path / "alpha.txt"
    path.write_text(MINIMAL)
    assert parse_scenario(path).run.name == "alpha"


names = st.text("abcdefghij_", min_size=1, max_size=8)


@given(d=st.integers(3, 9), p=st.floats(0.5, 12), N=st.integers(16, 4096),
       amp=st.floats(0, 5), T=st.floats(0, 5), stride=st.integers(1, 20), name=names,
       forcing=st.booleans(), eps=st.lists(st.floats(0, 0.5), min_size=1, max_size=4))
@settings(max_examples=60, deadline=None)
def test_round_trip(d, p, N, amp, T, stride, name, forcing, eps):
    text = (f"[model]\nd = {d}\np = {p!r}\nsign = focusing\n[grid]\nR_max = 50\nN = {N}\n"
            f"[data]\namplitude = {amp!r}\n[run]\nname = {name}\nT = {T!r}\n"
            f"record_stride = {stride}\nforcing = {str(forcing).lower()}\n"
            f"eps_ladder = {', '.join(map(repr, eps))}\n")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ScenarioWarning)
        sc = parse_text(text)
        assert parse_text(sc.to_text()) == sc


def test_initial_state_families(grid_small, basis_small):
    sc = parse_text(MINIMAL + "[data]\nfamily = bump\nwidth = 2\n")
    s = initial_state(sc, grid_small, basis_small)
    assert np.all(s.u[grid_small.nodes >= 2] == 0) and s.u[0] > 0.99
    with pytest.warns(ScenarioWarning):  # a mode fills the whole box
        sc = parse_text(MINIMAL + "[data]\nfamily = mode\nmode_index = 3\namplitude = 2\n")
    s = initial_state(sc, grid_small, basis_small)
    assert np.abs(s.u).max() == pytest.approx(2.0)
    sc = parse_text(MINIMAL + "[data]\nnoise = 0.1\n[run]\nseed = 7\n")
    a, b = (initial_state(sc, grid_small, basis_small).u for _ in range(2))
    np.testing.assert_array_equal(a, b)


def test_zero_scenario_writes_zero_csv(tmp_path):
    man = run_scenario(quick("zero", "[data]\namplitude = 0\n"), tmp_path)
    assert man.exit_code == 0
    lines = (tmp_path / "zero" / "series.csv").read_text().splitlines()
    assert lines[0].split(",") == ["t", "E_total", "E_kin", "E_grad", "E_pot", "Hsc_u",
                                   "Hsc1_v", "M", "dMdt", "support_r", "N_proxy", "tail_eta"]
    for row in lines[1:]:
        values = [float(x) for x in row.split(",")]
        assert len(values) == 12 and not any(values[1:])


def test_determinism_and_manifest(tmp_path):
    sc = quick("det", "[data]\nnoise = 0.05\n")
    m1 = run_scenario(sc, tmp_path / "a")
    m2 = run_scenario(sc, tmp_path / "b")
    b1 = (tmp_path / "a" / "det" / "series.csv").read_bytes()
    b2 = (tmp_path / "b" / "det" / "series.csv").read_bytes()
    assert b1 == b2 and m1.csv_sha256 == m2.csv_sha256
    manifest = json.loads((tmp_path / "a" / "det" / "manifest.json").read_text())
    for rel in manifest["files"].values():
        assert (tmp_path / "a" / "det" / rel).exists()
    echo = parse_text(manifest["scenario"])
    assert echo == sc
    report = json.loads((tmp_path / "a" / "det" / "report.json").read_text())
    assert report["protocol"] == "simulate" and report["energy_drift"] < 1e-3


def test_boundary_violation_is_soft_failure(tmp_path):
    with pytest.warns(ScenarioWarning):
        sc = parse_text(MINIMAL + "[grid]\nR_max = 6\nN = 128\n[run]\nname = wall\nT = 5\n")
    man = run_scenario(sc, tmp_path)
    assert man.flags["boundary_touched"] and man.exit_code == EXIT_SOFT


def test_cli_exponents(capsys):
    assert main(["exponents", "--d", "7"]) == 0
    out = capsys.readouterr().out
    assert "p_window" in out and "0.8" in out and "0.9248" in out
    assert main(["exponents", "--d", "3", "--p", "6", "--format", "json"]) == 0
    table = json.loads(capsys.readouterr().out)
    assert table["p_window"] == [4.0, "inf"] and table["s_c"] == pytest.approx(7 / 6)


def test_cli_usage_errors(capsys):
    assert main(["frobnicate"]) == 2
    assert "usage" in capsys.readouterr().err
    assert main([]) == 2


def test_cli_selftest():
    assert main(["selftest"]) == 0


def test_cli_simulate_and_env(tmp_path, monkeypatch, capsys):
    scen = tmp_path / "cli_run.txt"
    scen.write_text(quick("x").to_text().replace("name = x", "name = cli_run"))
    monkeypatch.setenv("SUPERCRIT_OUT", str(tmp_path / "env_out"))
    assert main(["simulate", str(scen)]) == 0
    assert (tmp_path / "env_out" / "cli_run" / "manifest.json").exists()
    assert main(["simulate", str(scen), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "cli_run" / "series.csv").exists()
    assert main(["simulate", str(tmp_path / "missing.txt")]) == 1


def test_cli_protocols_write_reports(tmp_path):
    blow = tmp_path / "blow.txt"
    blow.write_text("[model]\nd = 3\np = 6\nsign = focusing\n[grid]\nN = 128\n"
                    "[data]\namplitude = 10\n[run]\nT = 1\ncfl_factor = 0.05\n")
    assert main(["blowup", str(blow), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "blow" / "report.json").read_text())
    assert rep["protocol"] == "blowup" and all(rep["acceptance"].values())
    assert rep["parameters"]["model"]["sign"] == "focusing"

    stab = tmp_path / "stab.txt"
    stab.write_text(MINIMAL + "[grid]\nN = 256\n[data]\namplitude = 0.1\n[run]\nT = 2\n")
    assert main(["stability", str(stab), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "stab" / "report.json").read_text())
    assert rep["measured"]["slope"] >= 0.8

    scat = tmp_path / "scat.txt"
    scat.write_text(MINIMAL + "[grid]\nR_max = 40\nN = 512\n[data]\namplitude = 0.01\n"
                    "[run]\nT = 16\n")
    assert main(["scatter", str(scat), "--out", str(tmp_path)]) == 0
    csv_rows = (tmp_path / "scat" / "series.csv").read_text().splitlines()
    assert csv_rows[0] == "T,delta,pullback_norm" and len(csv_rows) == 5

    mor = tmp_path / "mor.txt"
    mor.write_text(MINIMAL + "[grid]\nR_max = 40\nN = 512\n[run]\nT = 16\n")
    assert main(["morawetz", str(mor), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "mor" / "report.json").read_text())
    assert rep["measured"]["exponent"] == 1 / 3
