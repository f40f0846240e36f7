import csv
import io
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from ptcalogero.cli import COLUMNS, main, parse_args, parse_sweep, run, sweep_configs, UsageError

GOLDEN = Path(__file__).parent / "golden"
REGEN = os.environ.get("PTCALOGERO_REGEN_GOLDEN") == "1"

CASES = {
    "perturb_defaults": ["perturb", "--omega", "1"],
    "simulate_sutherland": ["simulate", "--omega", "1", "--gamma", "0.1", "--g", "-0.5", "--epsilon", "0",
                            "--t-max", "50", "--samples", "201"],
    "exact_a1_b1": ["exact", "--omega", "1", "--gamma", "0.3", "--g", "-0.5", "--a", "1", "--b", "1",
                    "--samples", "201"],
    "stability_gamma0": ["stability", "--omega", "1", "--gamma", "0"],
    "spectrum_gamma0": ["spectrum", "--omega", "1", "--gamma", "0", "--g", "-0.5", "--levels", "3"],
}


def _run(argv):
    out, err = io.StringIO(), io.StringIO()
    cfg, dump = parse_args(argv)
    assert not dump
    code = run(cfg, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


def _assert_csv_close(got, want, rtol=1e-9, atol=1e-12):
    g, w = _rows(got), _rows(want)
    assert g[0] == w[0], "column headers changed"
    assert len(g) == len(w)
    for rg, rw in zip(g[1:], w[1:]):
        for a, b in zip(rg, rw):
            try:
                fa, fb = float(a), float(b)
            except ValueError:
                assert a == b
                continue
            assert abs(fa - fb) <= atol + rtol * abs(fb), (a, b)


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden(name):
    code, out, _ = _run(CASES[name])
    assert code == 0
    path = GOLDEN / f"{name}.csv"
    if REGEN:
        path.write_text(out)
    _assert_csv_close(out, path.read_text())


@pytest.mark.parametrize("mode", sorted(COLUMNS))
def test_headers(mode):
    argv = [mode, "--omega", "1", "--samples", "5", "--format", "csv"]
    code, out, _ = _run(argv)
    assert code == 0
    assert _rows(out)[0] == COLUMNS[mode]


def test_deterministic_output(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        _run(CASES["exact_a1_b1"] + ["--output", str(p)])
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(Path(str(a) + ".meta.json").read_text())["mode"] == "exact"


class TestParsing:
    def test_precedence(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text("# comment\ngamma = 0.2\ng = -0.7  # inline\nt_max = 3\n")
        cfg, _ = parse_args(["simulate", "--omega", "1", "--config", str(cfg_file), "--gamma", "0.05"])
        assert cfg.params.gamma == 0.05
        assert cfg.params.g == -0.7
        assert cfg.t_max == 3.0
        assert cfg.samples == 2000

    def test_dump_round_trip(self, tmp_path, capsys):
        argv = ["exact", "--omega", "1.5", "--gamma", "0.3", "--a", "0.25", "--b", "1.1", "--samples", "7"]
        cfg, _ = parse_args(argv)
        assert main(argv + ["--dump-config"]) == 0
        text = capsys.readouterr().out
        f = tmp_path / "dumped.cfg"
        f.write_text(text)
        again, _ = parse_args(["exact", "--config", str(f)])
        assert again == cfg

    def test_spec_examples(self):
        cfg, _ = parse_args(["simulate", "--omega", "1", "--gamma", "0.1", "--g", "-0.5", "--epsilon", "0",
                             "--t-max", "50"])
        assert cfg.params.is_sutherland and cfg.t_max == 50
        cfg, _ = parse_args(CASES["exact_a1_b1"])
        assert cfg.params.is_calogero and (cfg.a, cfg.b) == (1.0, 1.0)

    @pytest.mark.parametrize(
        "argv",
        [
            ["simulate"],
            ["simulate", "--omega", "1", "--bogus", "3"],
            ["exact", "--omega", "1", "--epsilon", "0"],
            ["stability", "--omega", "1", "--epsilon", "-1"],
            ["simulate", "--omega", "-1"],
            ["simulate", "--omega", "1", "--samples", "1"],
            ["nonsense", "--omega", "1"],
        ],
    )
    def test_usage_errors_exit_2(self, argv):
        with pytest.raises(SystemExit) as exc:
            parse_args(argv)
        assert exc.value.code == 2

    def test_bad_config_file(self, tmp_path):
        f = tmp_path / "bad.cfg"
        f.write_text("colour = blue\n")
        with pytest.raises(SystemExit) as exc:
            parse_args(["simulate", "--omega", "1", "--config", str(f)])
        assert exc.value.code == 2


class TestRun:
    def test_stability_output(self):
        code, out, err = _run(["stability", "--omega", "1", "--gamma", "0", "--format", "json"])
        assert code == 0
        doc = json.loads(out)
        meta, data = doc["metadata"], doc["data"]
        assert meta["discrepancy_flag"] is True
        numeric = [complex(r, i) for m, r, i in zip(data["method"], data["re"], data["im"]) if m == "numeric"]
        assert sorted(z.imag for z in numeric) == pytest.approx([-2, -1, 1, 2], abs=1e-12)
        assert max(abs(z.real) for z in numeric) < 1e-12

    def test_spectrum_ground_state(self):
        code, out, _ = _run(CASES["spectrum_gamma0"])
        rows = _rows(out)
        assert code == 0 and float(rows[1][2]) == pytest.approx(2.41421356, rel=1e-8)

    def test_blowup_is_a_finding(self):
        code, out, err = _run(["simulate", "--omega", "1", "--gamma", "0.8", "--g", "-0.5", "--epsilon", "-1",
                               "--b", "1", "--t-max", "200", "--samples", "50"])
        assert code == 0
        assert json.loads(err)["diagnostics"]["termination"] == "blowup"

    def test_computational_failure_exits_1(self):
        # the closed form needs the unbroken phase
        code, out, err = _run(["exact", "--omega", "1", "--gamma", "0.8"])
        assert code == 1 and out == ""
        assert "DomainError" in err

    def test_simulate_pi_blank_off_calogero(self):
        code, out, _ = _run(["simulate", "--omega", "1", "--samples", "3", "--t-max", "1"])
        assert all(r[-1] == "" for r in _rows(out)[1:])

    def test_wedges_json(self, tmp_path):
        p = tmp_path / "w.json"
        _run(["wedges", "--omega", "1", "--gamma", "0.3", "--z1-0", "1", "--output", str(p)])
        doc = json.loads(p.read_text())
        assert doc["data"]["center_angle"] == pytest.approx([-np.pi / 2])
        assert doc["data"]["opening_angle"] == pytest.approx([np.pi / 2])

    def test_console_script_entry(self):
        proc = subprocess.run(
            [sys.executable, "-m", "ptcalogero.cli", "wedges", "--omega", "1"],
            capture_output=True, text=True, check=False,
        )
        assert proc.returncode == 0
        assert len(json.loads(proc.stdout)["data"]["center_angle"]) == 2


class TestSweep:
    def test_parse(self):
        assert parse_sweep("gamma=0:0.2:3") == ("gamma", [0.0, 0.1, 0.2])
        assert parse_sweep("t-max=1,2") == ("t_max", [1.0, 2.0])
        for bad in ("gamma", "colour=1,2", "gamma=a:b:c"):
            with pytest.raises(UsageError):
                parse_sweep(bad)

    def test_needs_output(self):
        cfg, _ = parse_args(["simulate", "--omega", "1", "--sweep", "gamma=0,0.1"])
        with pytest.raises(UsageError):
            sweep_configs(cfg)

    def test_omega_sweep_keeps_calogero_limit(self, tmp_path):
        cfg, _ = parse_args(["exact", "--omega", "1", "--sweep", "omega=1,2", "--output", str(tmp_path / "e.csv")])
        assert all(c.params.is_calogero for c in sweep_configs(cfg))

    def test_sweep_matches_single_runs(self, tmp_path):
        base = ["simulate", "--omega", "1", "--gamma", "0.1", "--t-max", "2", "--samples", "5"]
        cfg, _ = parse_args(base + ["--sweep", "gamma=0.1,0.2", "--output", str(tmp_path / "s.csv")])
        assert run(cfg) == 0
        for gm in ("0.1", "0.2"):
            swept = (tmp_path / f"s_gamma={gm}.csv").read_bytes().decode()
            _, single, _ = _run(base[:4] + [gm] + base[5:])
            assert swept == single
