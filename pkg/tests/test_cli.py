from __future__ import annotations

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from qsl.cli import main
from qsl.cli.config import ConfigError, expand_preset, from_dict, parse_config
from qsl.cli.presets import FIGURE_PRESETS, list_presets, preset_document
from qsl.cli.runner import SWEEP_HEADER, run_scenario, sweep


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def column(path, name):
    header, rows = read_csv(path)
    k = header.index(name)
    return np.array([float(r[k]) if r[k] not in ("nan",) else np.nan for r in rows])


# Configuration.

def test_minimal_qubit_config_gets_defaults():
    cfg = parse_config('{"schema_version": 1, "system": "qubit", "omega_mhz": 0, "delta_mhz": 12.5}')
    assert cfg.initial_state.kind == "named" and cfg.initial_state.value == "plus"
    assert (cfg.time.start_ns, cfg.time.stop_ns, cfg.time.step_ns) == (0.0, 250.0, 0.5)
    assert cfg.alpha.count == 25 and cfg.epsilon == 1e-3 and cfg.toggles.bounds
    assert cfg.t_grid().size == 501


def test_default_grids_per_system():
    q = parse_config('{"schema_version": 1, "system": "qutrit", "omega_mhz": -5}')
    assert (q.time.stop_ns, q.time.step_ns) == (10.0, 0.02)
    g = parse_config('{"schema_version": 1, "system": "lattice2d"}')
    assert g.time.stop_ns == 300.0 and g.j2_mhz == 0.597


def _err(text):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    return exc.value


@pytest.mark.parametrize(
    "doc,path",
    [
        ({"system": "qubit", "time": {"start_ns": 0, "stop_ns": 10, "step_ns": -0.5}}, "time.step_ns"),
        ({"system": "qubit", "time": {"start_ns": 0, "stop_ns": 10, "step_ns": 0}}, "time.step_ns"),
        ({"system": "qubit", "time": {"start_ns": 5, "stop_ns": 1, "step_ns": 1}}, "time.stop_ns"),
        ({"system": "qubit", "bogus": 1}, "bogus"),
        ({"system": "pendulum"}, "system"),
        ({"system": "qubit", "L": 6}, "L"),
        ({"system": "chain1d", "initial_state": {"named": "checkerboard_plus"}}, "initial_state.named"),
        ({"system": "chain1d", "L": 4, "w_sites_mhz": [1, 2, 3]}, "w_sites_mhz"),
        ({"system": "qubit", "alpha": {"values": [2, 1]}}, "alpha.values"),
        ({"system": "qubit", "epsilon": 0.5}, "epsilon"),
        ({"system": "lattice2d", "toggles": {"momentum": True}}, "toggles.momentum"),
        ({"system": "qubit", "initial_state": {"fock": "10"}}, "initial_state.fock"),
    ],
)
def test_config_errors_name_the_field(doc, path):
    err = _err(json.dumps({"schema_version": 1, **doc}))
    assert err.path == path


def test_config_rejects_bad_documents():
    assert _err("{not json").path == ""
    assert _err("[1, 2]").path == ""
    assert _err('{"schema_version": 1, "system": "qubit", "omega_mhz": NaN}').path == ""
    assert _err('{"schema_version": 2, "system": "qubit"}').path == "schema_version"
    assert _err('{"preset": "fig9z"}').path == "preset"


def test_round_trip_is_identity():
    for name, _ in list_presets():
        cfg = parse_config(json.dumps(preset_document(name)))
        again = parse_config(cfg.to_json())
        assert again == cfg
        assert json.loads(again.to_json()) == json.loads(cfg.to_json())


def test_complex_amplitudes_round_trip():
    doc = {"schema_version": 1, "system": "qubit", "initial_state": {"amplitudes": [1, [0, 1]]}}
    cfg = parse_config(json.dumps(doc))
    assert cfg.initial_state.value == (1 + 0j, 1j)
    assert parse_config(cfg.to_json()) == cfg


def test_preset_reference_expands():
    cfg = parse_config('{"preset": "fig3e"}')
    assert cfg.system == "chain1d" and cfg.L == 6 and cfg.j1_mhz == -2.0 and cfg.w_mhz == 1.8
    assert cfg.initial_state.value == "cat"
    over = expand_preset({"preset": "fig3e", "w_mhz": 3.0, "time": {"stop_ns": 20}})
    assert over["w_mhz"] == 3.0 and over["time"] == {"start_ns": 0, "stop_ns": 20, "step_ns": 0.5}


def test_preset_table():
    names = [n for n, _ in list_presets()]
    assert len(names) == len(set(names))
    for required in (*FIGURE_PRESETS, "scaling_study", *(f"suppfig_chain_L{L}" for L in (6, 12, 24, 48, 96))):
        assert required in names
    fig2e = from_dict(preset_document("fig2e"))
    assert (fig2e.omega_mhz, fig2e.eta_mhz) == (-5.0, -212.0)
    fig4e = from_dict(preset_document("fig4e"))
    assert (fig4e.w_mhz, fig4e.j2_mhz) == (3.4, 0.597)
    assert from_dict(preset_document("fig4f")).toggles.hamming


# Running scenarios.

def test_fig1e_report(tmp_path):
    rep = run_scenario(parse_config('{"preset": "fig1e"}'), tmp_path)
    assert rep.ok and rep.violations == 0
    assert all(rep.boundary_flags.values())
    assert rep.times_ns["t_U"] == pytest.approx(40.0, abs=1e-9)
    assert rep.t_perp_ns == pytest.approx(40.0, abs=0.01)
    data = json.loads((tmp_path / "fig1e_report.json").read_text())
    assert data["sandwich"]["violations"] == 0 and data["sandwich"]["tol"] == 1e-9
    header, rows = read_csv(tmp_path / "fig1e_overlap.csv")
    assert header[:3] == ["t_ns", "overlap", "theta_rad"] and len(rows) == 501


def test_fig4f_is_confined(tmp_path):
    rep = run_scenario(parse_config('{"preset": "fig4f"}'), tmp_path)
    assert rep.regime == "MLstar" and rep.violations == 0
    header, rows = read_csv(tmp_path / "fig4f_hamming.csv")
    assert header == ["t_ns"] + [f"d{d}" for d in range(9)]
    assert rep.extra["hamming_mean_tail_above_4"] < 0.02


def test_free_fermion_preset_outputs(tmp_path):
    rep = run_scenario(parse_config('{"preset": "suppfig_chain_L12", "time": {"stop_ns": 60}}'), tmp_path)
    assert rep.ok
    assert {"suppfig_chain_L12_overlap.csv", "suppfig_chain_L12_nk0.csv", "suppfig_chain_L12_momentum.csv"} <= set(rep.files)
    nk0 = column(tmp_path / "suppfig_chain_L12_nk0.csv", "n_k0")
    assert nk0[0] == pytest.approx(0.5)


def test_optional_outputs(tmp_path):
    doc = {"preset": "fig3e", "time": {"stop_ns": 20},
           "toggles": {"per_alpha": True, "export_operator": True, "phase_diagram": True},
           "alpha": {"values": [0.5, 2.0]}}
    rep = run_scenario(parse_config(json.dumps(doc)), tmp_path)
    header, _ = read_csv(tmp_path / "fig3e_overlap.csv")
    assert len([h for h in header if h.startswith("Gen")]) == 8
    assert (tmp_path / "fig3e_operator.csv").exists()
    header, rows = read_csv(tmp_path / "fig3e_phase.csv")
    assert header == ["x", "y", "regime"] and rows[0][2] == rep.regime


def test_scaling_study_small(tmp_path):
    doc = {"schema_version": 1, "system": "scaling_study", "chain_sizes": [6, 8], "grid_sizes": [3, 5]}
    rep = run_scenario(parse_config(json.dumps(doc)), tmp_path)
    assert rep.extra["analytic_numeric_mismatch"] == []
    header, rows = read_csv(tmp_path / "scenario_scaling.csv")
    assert header[0] == "geometry" and len(rows) == 4
    assert float(rows[2][5]) == pytest.approx(3.41199, abs=2e-3)
    assert rows[3][4] == "nan"


def test_bit_identical_reruns(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        run_scenario(parse_config('{"preset": "fig3f"}'), out)
    for name in ("fig3f_overlap.csv", "fig3f_report.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


# Sweeps.

def test_qubit_omega_sweep_keeps_spread():
    cfg = parse_config('{"preset": "fig1d"}')
    rows = sweep(cfg, "omega", np.linspace(-5, 5, 11))
    assert len(rows[0]) == len(SWEEP_HEADER)
    de = np.array([r[2] for r in rows])
    assert np.allclose(de, 6.25, atol=1e-12)


def test_chain_w_sweep_goes_from_mt_to_ml():
    cfg = parse_config('{"preset": "fig3d"}')
    labels = [r[7] for r in sweep(cfg, "W", np.linspace(0, 8, 17))]
    assert labels[0] == "MT" and labels[-1] == "ML"
    first_ml = labels.index("ML")
    assert all(lab == "MT" for lab in labels[:first_ml])


def test_lattice_w_sweep_sign_change_near_3_4():
    cfg = parse_config('{"preset": "fig4d"}')
    rows = sweep(cfg, "W", np.arange(0, 7.25, 0.25))
    w = np.array([r[1] for r in rows])
    diff = np.array([r[8] - r[10] for r in rows])  # t_MT - t_MLstar
    k = np.flatnonzero(np.sign(diff[:-1]) != np.sign(diff[1:]))
    assert k.size == 1 and 3.2 <= w[k[0]] <= 3.6


def test_sweep_errors():
    cfg = parse_config('{"preset": "fig1d"}')
    with pytest.raises(ConfigError):
        sweep(cfg, "W", [1.0])
    with pytest.raises(ConfigError):
        sweep(cfg, "J", [1.0])
    with pytest.raises(ConfigError):
        sweep(cfg, "omega", [])


# Command line.

def test_list_presets_command(capsys):
    assert main(["list-presets"]) == 0
    out = capsys.readouterr().out
    assert "fig1e\t" in out and "scaling_study\t" in out


def test_run_command(tmp_path, capsys):
    cfg = tmp_path / "q.json"
    cfg.write_text(json.dumps({"schema_version": 1, "name": "q", "system": "qubit", "omega_mhz": -2.5}))
    assert main(["run", str(cfg), "--out", str(tmp_path / "out")]) == 0
    assert "regime=ML" in capsys.readouterr().out
    assert (tmp_path / "out" / "q_overlap.csv").exists()


def test_run_command_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema_version": 1, "system": "qubit", "time": {"start_ns": 0, "stop_ns": 1, "step_ns": -1}}')
    assert main(["run", str(bad), "--out", str(tmp_path)]) == 1
    assert "time.step_ns" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.json")]) == 2
    assert main(["preset", "nope"]) == 2
    assert main(["sweep", str(bad), "--param", "W", "--values", "1"]) == 2


def test_preset_command(tmp_path):
    assert main(["preset", "fig1f", "fig2d", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "fig1f_report.json").exists() and (tmp_path / "fig2d_report.json").exists()


def test_parallel_batch_matches_serial(tmp_path, monkeypatch):
    monkeypatch.setenv("QSL_WORKERS", "2")
    assert main(["preset", "fig1d", "fig3e", "--out", str(tmp_path / "p")]) == 0
    monkeypatch.setenv("QSL_WORKERS", "1")
    assert main(["preset", "fig1d", "fig3e", "--out", str(tmp_path / "s")]) == 0
    for name in ("fig1d_overlap.csv", "fig3e_overlap.csv"):
        assert (tmp_path / "p" / name).read_bytes() == (tmp_path / "s" / name).read_bytes()
    monkeypatch.setenv("QSL_WORKERS", "many")
    assert main(["preset", "fig1d", "--out", str(tmp_path)]) == 2


def test_sweep_command(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"preset": "fig3d", "outputs": {"dir": "%s"}}' % tmp_path)
    assert main(["sweep", str(cfg), "--param", "W", "--values", "0, 4, 8"]) == 0
    header, rows = read_csv(tmp_path / "fig3d_sweep_W.csv")
    assert header == SWEEP_HEADER and [r[1] for r in rows] == ["0", "4", "8"]
    assert main(["sweep", str(cfg), "--param", "W", "--values", "a b"]) == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "qsl.cli", "list-presets"], capture_output=True, text=True)
    assert res.returncode == 0 and "fig4f" in res.stdout
