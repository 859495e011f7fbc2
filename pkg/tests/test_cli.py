import json
import logging
import math
import subprocess
import sys

import pytest

from phasemask import error_analysis as ea
from phasemask.cli import main
from phasemask.io import read_csv


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_config(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


# -- curves ------------------------------------------------------------------------

def test_curves_csv(capsys):
    code, out, _ = run(capsys, "curves", "--points", "5", "--no-timestamp")
    assert code == 0
    meta, header, rows = read_csv(out)
    assert header == ["T_seconds", "N", "P_B_opt", "P_B_count", "P_E_bar", "P_E_lower", "exponent_bound"]
    assert len(rows) == 5
    assert meta["R"] == 45e6 and meta["C_E"] == 15e6 and meta["tolerance"] == ea.QUAD_TOL
    assert meta["config"]["rates"]["R"] == 45e6
    assert "generated_at" not in meta
    T = float(rows[0][0])
    assert float(rows[0][4]) == ea.eve_error_quadrature(math.exp(45e6 * T), math.sqrt(2 * 15e6 * T))


def test_curves_json(capsys):
    code, out, _ = run(capsys, "curves", "--points", "3", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert len(doc["points"]) == 3
    assert "generated_at" in doc["metadata"]
    for p in doc["points"]:
        assert p["P_E_lower"] <= p["P_E_bar"] <= p["random_guess"] + 1e-12


def test_curves_float_round_trip(capsys, tmp_path):
    out = tmp_path / "c.csv"
    assert main(["curves", "--points", "4", "--out", str(out)]) == 0
    _, _, rows = read_csv(out.read_text())
    curve = ea.error_curve(45e6, 15e6, [float(r[0]) for r in rows])
    for r, p in zip(rows, curve.points):
        assert float(r[2]) == p.P_B_opt and float(r[3]) == p.P_B_count


def test_curves_outside_regime(capsys, tmp_path, caplog):
    cfg = write_config(tmp_path, {"rates": {"R": 1e6, "C_E": 2e6}})
    with caplog.at_level(logging.WARNING):
        code, out, _ = run(capsys, "curves", "--config", cfg, "--points", "2")
    assert code == 0
    _, _, rows = read_csv(out)
    assert all(r[6] == "" for r in rows)
    assert "exponent" in caplog.text


def test_single_duration_from_config(capsys, tmp_path):
    cfg = write_config(tmp_path, {"grid": {"T": 0.36e-6}})
    _, out, _ = run(capsys, "curves", "--config", cfg)
    _, _, rows = read_csv(out)
    assert len(rows) == 1
    assert float(rows[0][3]) == pytest.approx(4.52e-3, rel=5e-3)


# -- config and usage errors --------------------------------------------------------

def test_unknown_config_key(capsys, tmp_path):
    cfg = write_config(tmp_path, {"rates": {"R": 1e6, "bogus": 1}})
    code, _, err = run(capsys, "curves", "--config", cfg)
    assert code == 2
    assert "rates.bogus: unknown key" in err


def test_unreadable_config(capsys, tmp_path):
    code, _, err = run(capsys, "table", "--config", str(tmp_path / "missing.json"))
    assert code == 2 and "cannot read config" in err


def test_invalid_values(capsys, tmp_path):
    cfg = write_config(tmp_path, {"rates": {"D": 0.5}})
    assert run(capsys, "curves", "--config", cfg)[0] == 2
    assert run(capsys, "curves", "--points", "0")[0] == 2
    assert run(capsys, "simulate", "--seed", "-1")[0] == 2


def test_argparse_usage_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2


# -- table ---------------------------------------------------------------------------

def test_table(capsys):
    code, out, _ = run(capsys, "table")
    assert code == 0
    _, header, rows = read_csv(out)
    assert header == ["N", "T_seconds", "T_us"]
    assert [int(r[0]) for r in rows] == ea.DEFAULT_TABLE_N
    assert float(rows[0][2]) == pytest.approx(0.0154, abs=5e-5)


def test_table_doubling_rate_halves_durations(capsys, tmp_path):
    _, base, _ = run(capsys, "table")
    cfg = write_config(tmp_path, {"rates": {"R": 90e6}})
    _, fast, _ = run(capsys, "table", "--config", cfg)
    for a, b in zip(read_csv(base)[2], read_csv(fast)[2]):
        assert float(b[1]) == pytest.approx(float(a[1]) / 2, rel=1e-15)


def test_table_json_two_figures(capsys):
    _, out, _ = run(capsys, "table", "--format", "json")
    rows = json.loads(out)["rows"]
    assert rows[1]["T_us_2sf"] == 0.031


# -- waveform ------------------------------------------------------------------------

def test_waveform_defaults(capsys):
    code, out, _ = run(capsys, "waveform", "--no-timestamp")
    assert code == 0
    meta, header, rows = read_csv(out)
    assert header == ["t", "re", "im", "abs", "enc_re", "enc_im", "enc_abs"]
    assert meta["M"] == 100 and meta["N"] == 97 and meta["Nprime"] == 9700
    assert meta["R_Mebits_per_s_3sf"] == 45.7
    assert meta["envelope_energy_plain"] == pytest.approx(meta["envelope_energy_encrypted"], rel=1e-9)
    assert len(meta["running_key"]["ks"]) == 100


def test_waveform_identity_mask_is_byte_identical(capsys, tmp_path):
    cfg = write_config(tmp_path, {"mask": {"identity": True}})
    _, out, _ = run(capsys, "waveform", "--config", cfg)
    _, _, rows = read_csv(out)
    assert all(r[1:4] == r[4:7] for r in rows)


def test_waveform_mask_changes_envelope(capsys):
    _, out, _ = run(capsys, "waveform")
    _, _, rows = read_csv(out)
    assert any(r[3] != r[6] for r in rows)


def test_waveform_bad_nprime(capsys, tmp_path):
    cfg = write_config(tmp_path, {"mask": {"Nprime": 100}})
    code, _, err = run(capsys, "waveform", "--config", cfg)
    assert code == 2 and "multiple" in err


def test_waveform_json(capsys, tmp_path):
    cfg = write_config(tmp_path, {"grid": {"samples": 64}, "ppm": {"N": 5}})
    code, out, _ = run(capsys, "waveform", "--config", cfg, "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert len(doc["envelope"]["t"]) == 64
    assert doc["plain"]["grid"]["j_c"] == 20_000_000


# -- simulate ------------------------------------------------------------------------

def test_simulate_random_guess(capsys, tmp_path):
    cfg = write_config(tmp_path, {"ppm": {"N": 8}, "sim": {"A": 0.0}})
    code, out, _ = run(capsys, "simulate", "--config", cfg, "--trials", "1000000", "--seed", "3")
    assert code == 0
    rep = json.loads(out)
    assert rep["reference"] == pytest.approx(0.875, abs=1e-9)
    assert abs(rep["z_score"]) <= 4
    for k in ("p_hat", "stderr", "trials", "seed", "metadata"):
        assert k in rep


def test_simulate_single_trial_is_not_an_alarm(capsys, tmp_path):
    cfg = write_config(tmp_path, {"ppm": {"N": 8}, "sim": {"A": 1.0}})
    code, out, _ = run(capsys, "simulate", "--config", cfg, "--trials", "1")
    assert code == 0
    assert json.loads(out)["stderr"] == 0.0


@pytest.mark.parametrize("mode", ["conditional", "photon-count"])
def test_simulate_other_modes(capsys, mode):
    code, out, _ = run(capsys, "simulate", "--mode", mode, "--trials", "20000")
    assert code == 0
    assert json.loads(out)["sim"]["mode"] == mode


def test_simulate_full_pipeline(capsys):
    code, out, _ = run(capsys, "simulate", "--mode", "full-pipeline", "--trials", "20000", "--seed", "5")
    assert code == 0
    rep = json.loads(out)
    assert rep["sim"]["N"] == 11 and rep["sim"]["M"] == 2 * 40 * 11 - 1
    assert rep["agreement"]


def test_simulate_disagreement_exits_one(capsys, tmp_path, monkeypatch):
    from phasemask import cli
    monkeypatch.setattr(cli.ea, "eve_error_quadrature", lambda N, A: 0.5)
    cfg = write_config(tmp_path, {"ppm": {"N": 8}, "sim": {"A": 0.0}})
    code, out, _ = run(capsys, "simulate", "--config", cfg, "--trials", "100000")
    assert code == 1
    assert json.loads(out)["agreement"] is False


def test_simulate_message_out_of_range(capsys, tmp_path):
    cfg = write_config(tmp_path, {"ppm": {"N": 4}, "sim": {"ell": 9}})
    assert run(capsys, "simulate", "--config", cfg)[0] == 2


def test_simulate_byte_identical_across_workers(capsys):
    outs = [run(capsys, "simulate", "--trials", "300000", "--seed", "11", "--workers", w, "--no-timestamp")[1]
            for w in ("1", "4", "4")]
    assert outs[0] == outs[1] == outs[2]


# -- verify --------------------------------------------------------------------------

def test_verify_all_pass(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == 0
    assert "17/17 invariants hold" in out


def test_verify_json(capsys):
    code, out, _ = run(capsys, "verify", "--json")
    doc = json.loads(out)
    assert code == 0 and doc["passed"] and doc["failed"] == []
    assert {c["name"] for c in doc["checks"]} >= {"commuting_square", "bound_ordering", "keystream_vector"}


def test_verify_detects_mutated_constant(capsys, monkeypatch):
    monkeypatch.setattr(ea, "SQRT2PI", 2.5)
    code, out, _ = run(capsys, "verify")
    assert code == 1
    assert "failed:" in out and "eve_closed_forms" in out


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "phasemask.cli", "table", "--no-timestamp"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.splitlines()[1] == "N,T_seconds,T_us"
